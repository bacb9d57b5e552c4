import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ldvortex.errors import InvalidParameters
from ldvortex.params import (Grid1D, LdParameters, PhaseConfig, default_dx,
                             validate, wrap_angle, wrap_to_pi)


def test_validate_desk_is_clean(desk):
    report = validate(desk)
    assert report.valid
    assert not report.degenerate
    assert math.sin(desk.hpl) == pytest.approx(math.sin(1.5), abs=1e-15)


def test_validate_degenerate_field_is_warning():
    # H p L = pi exactly: the first nucleation field.
    p = LdParameters(1, 2.0, 0.5, 1.0, math.pi, 1e-3)
    report = validate(p)
    assert report.valid
    assert report.degenerate
    assert any("degenerate" in w for w in report.warnings)


def test_validate_no_gaps_is_error():
    report = validate(LdParameters(0, 1.0, 0.5, 1.0, 3.0, 1e-3))
    assert not report.valid
    assert any("num_gaps" in e for e in report.errors)


@pytest.mark.parametrize("field, value", [
    ("half_width", -1.0), ("spacing", 0.0), ("spacing", 1.5),
    ("applied_field", 0.0), ("coupling", -1e-3),
])
def test_validate_hard_errors(field, value):
    kwargs = dict(num_gaps=2, half_width=1.0, spacing=0.5, kappa=1.0,
                  applied_field=3.0, coupling=1e-3)
    kwargs[field] = value
    assert not validate(LdParameters(**kwargs)).valid


def test_regime_warnings_are_soft():
    report = validate(LdParameters(2, 0.5, 0.5, 0.8, 3.0, 1e-3))
    assert report.valid
    assert len(report.warnings) >= 2


@given(st.floats(1e-8, 10.0), st.floats(1.0, 50.0), st.floats(0.05, 1.0))
def test_lambda_j_inverts_coupling(r, kappa, p):
    params = LdParameters(1, 1.0, p, kappa, 1.0, r)
    lj = params.lambda_j
    assert 2.0 / (lj**2 * kappa**2 * p**2) == pytest.approx(r, rel=1e-12)


def test_lambda_j_infinite_at_zero_coupling():
    assert LdParameters(1, 1.0, 0.5, 1.0, 1.0, 0.0).lambda_j == math.inf


def test_degeneracy_flag_threshold():
    p = LdParameters(1, 2.0, 0.5, 1.0, math.pi, 0.0)
    assert p.is_degenerate
    assert not LdParameters(1, 2.0, 0.5, 1.0, 3.0, 0.0).is_degenerate


def test_grid_default_rule(desk):
    grid = Grid1D.build(desk)
    assert grid.dx <= default_dx(desk) + 1e-15
    assert grid.M >= 16
    assert grid.nodes[0] == -desk.half_width
    assert grid.nodes[-1] == desk.half_width
    assert np.allclose(np.diff(grid.nodes), grid.dx)
    assert np.allclose(grid.mids, 0.5 * (grid.nodes[:-1] + grid.nodes[1:]))


def test_grid_minimum_intervals():
    params = LdParameters(1, 1.0, 0.5, 1.0, 1.0, 0.0)
    grid = Grid1D.build(params, dx=1.0)  # would give M = 2
    assert grid.M == 16


def test_grid_rejects_bad_dx(desk):
    with pytest.raises(InvalidParameters):
        Grid1D.build(desk, dx=-0.1)


def test_trapezoid_weights_sum_to_length(desk_grid):
    assert np.sum(desk_grid.trapezoid_weights()) == pytest.approx(2.0, rel=1e-14)


@given(st.lists(st.floats(-50.0, 50.0), min_size=1, max_size=6))
def test_phase_config_stores_canonical_representative(deltas):
    cfg = PhaseConfig(np.array(deltas))
    assert np.all(cfg.delta >= 0.0)
    assert np.all(cfg.delta < 2.0 * np.pi)
    for raw, stored in zip(deltas, cfg.delta):
        assert math.cos(raw) == pytest.approx(math.cos(stored), abs=1e-9)
        assert math.sin(raw) == pytest.approx(math.sin(stored), abs=1e-9)


@given(st.floats(-100.0, 100.0))
def test_wrap_to_pi_range(x):
    w = float(wrap_to_pi(x))
    assert -math.pi < w <= math.pi + 1e-12
    assert math.cos(w) == pytest.approx(math.cos(x), abs=1e-9)


def test_phase_config_alphas_accumulate():
    cfg = PhaseConfig(np.array([0.5, 1.0]))
    assert np.allclose(cfg.alphas(), [0.0, 0.5, 1.5])


def test_wrap_angle_half_open():
    assert wrap_angle(2.0 * np.pi) == 0.0
