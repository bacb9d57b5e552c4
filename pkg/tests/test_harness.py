import math

import numpy as np
import pytest

from ldvortex.errors import DegenerateField, NoCompleteCycle
from ldvortex.harness import (census, convergence_study, count_interior_maxima,
                              field_sweep, flux_check)
from ldvortex.minimize import newton_critical
from ldvortex.params import Grid1D, LdParameters
from ldvortex.perturbation import seed_state, vortex_plane_delta


def test_convergence_study_slopes(desk):
    rec = convergence_study(desk, [4e-3, 2e-3, 1e-3], dx=1.0 / 96.0)
    assert abs(rec.fits["energy_slope"] - 1.0) <= 0.3
    assert abs(rec.fits["h_slope"] - 2.0) <= 0.4
    assert abs(rec.fits["jz_slope"] - 2.0) <= 0.4
    assert abs(rec.fits["f_slope"] - 2.0) <= 0.4
    assert rec.fits["phi_slope"] >= 1.5
    assert rec.checks["energy_bound_every_r"]
    assert rec.fits["n_samples"] == 3
    assert all(math.isfinite(v) for v in rec.data["minima"])


def test_convergence_study_validates_inputs(desk):
    with pytest.raises(ValueError):
        convergence_study(desk, [1e-3, 2e-3, 4e-3])
    with pytest.raises(ValueError):
        convergence_study(desk, [4e-3, 2e-3])
    with pytest.raises(ValueError):
        convergence_study(desk, [0.5, 0.25, 0.125])


def test_census_small(desk):
    rec = census(desk, 1e-3, n_random=6, dx=1.0 / 20.0, seed=7)
    assert rec.passed, rec.checks
    assert rec.data["count"] == 4
    assert sorted(rec.data["inertias"]) == [0, 1, 1, 2]
    assert rec.data["min_pairwise_distance"] >= 0.1
    assert rec.data["n_matched"] == 6
    assert rec.data["n_in_shell"] == 6
    assert max(rec.data["newton_iterations"]) <= 10


def test_census_deterministic(desk):
    r1 = census(desk, 1e-3, n_random=2, dx=1.0 / 16.0, seed=5)
    r2 = census(desk, 1e-3, n_random=2, dx=1.0 / 16.0, seed=5)
    assert r1.data["energies"] == r2.data["energies"]
    assert r1.data["match_distances"] == r2.data["match_distances"]


def test_census_degenerate_field_raises():
    params = LdParameters(1, 2.0, 0.5, 1.0, math.pi, 1e-3)
    with pytest.raises(DegenerateField):
        census(params, 1e-3, n_random=0)


def test_field_sweep_detects_first_transition(desk):
    # Narrow window around H_1 = 2*pi on the desk geometry (pL = 1/2).
    H_grid = np.linspace(5.4, 7.0, 17)
    rec = field_sweep(desk, H_grid)
    assert rec.passed, rec.checks
    assert len(rec.data["transitions"]) == 1
    tr = rec.data["transitions"][0]
    assert abs(tr["location"] - 2.0 * math.pi) <= 0.1
    assert tr["maxima_increment"] == 1
    assert tr["jump_rel_err"] <= 0.10


def test_field_sweep_meissner_profile(desk):
    """Below the first nucleation field h peaks at the edges with the
    minimum line at x = 0."""
    H_grid = np.linspace(2.0, 3.0, 11)
    rec = field_sweep(desk, H_grid)
    assert all(c == 0.0 for c in rec.data["configs"])
    assert all(m == 0 for m in rec.data["n_maxima"])
    grid = Grid1D.build(desk.with_field(3.0), rec.parameters["dx"])
    cp = newton_critical(seed_state(desk, grid, 0.0), desk, grid, tol=1e-10)
    from ldvortex.observables import observables
    h = np.mean(observables(cp.state, desk, grid).h, axis=0)
    assert np.argmax(h) in (0, len(h) - 1)
    assert abs(grid.mids[np.argmin(h)]) <= grid.dx


def test_field_sweep_warm_start_consistency(desk):
    """Away from transitions the warm-started minima match seeded solves."""
    H_grid = np.linspace(3.0, 4.0, 11)
    warm = field_sweep(desk, H_grid)
    cold = field_sweep(desk, H_grid, jobs=2)
    e1 = np.array(warm.data["epsilon"])
    e2 = np.array(cold.data["epsilon"])
    assert np.max(np.abs(e1 - e2) / np.abs(e1)) <= 1e-8


def test_field_sweep_rejects_degenerate_grid(desk):
    with pytest.raises(ValueError):
        field_sweep(desk, np.linspace(2.0, 2.0 * math.pi, 12))


def test_count_interior_maxima():
    y = np.array([0.0, 1.0, 0.0, 2.0, 0.0])
    assert count_interior_maxima(y) == 2
    assert count_interior_maxima(np.array([3.0, 1.0, 0.0, 1.0, 5.0])) == 0


def test_flux_quantization_at_high_field():
    params = LdParameters(2, 1.0, 0.5, 1.0, 8.0, 1e-3)
    grid = Grid1D.build(params, 1.0 / 40.0)
    cp = newton_critical(seed_state(params, grid, vortex_plane_delta(params)),
                         params, grid, tol=1e-10)
    cycles = flux_check(cp.state, params, grid)
    assert len(cycles) == params.num_gaps  # one cycle per gap at HpL = 4
    for c in cycles:
        assert c.flux == pytest.approx(2.0 * math.pi, rel=0.02)
        assert abs(c.flux - 2.0 * math.pi) <= 20.0 * params.coupling
    # Gap independence at order r^2.
    by_gap = {c.gap: c.flux for c in cycles}
    assert abs(by_gap[0] - by_gap[1]) <= 50.0 * params.coupling**2


def test_flux_requires_complete_cycle(desk, desk_grid):
    # HpL = 1.5 < pi: only one current node inside the sample.
    cp = newton_critical(seed_state(desk, desk_grid, 0.0), desk, desk_grid,
                         tol=1e-9)
    with pytest.raises(NoCompleteCycle):
        flux_check(cp.state, desk, desk_grid)


def test_census_parallel_matches_serial(desk):
    ser = census(desk, 1e-3, n_random=2, dx=1.0 / 16.0, seed=9, jobs=1)
    par = census(desk, 1e-3, n_random=2, dx=1.0 / 16.0, seed=9, jobs=2)
    assert ser.data["match_distances"] == par.data["match_distances"]
