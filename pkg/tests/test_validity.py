import math

import numpy as np
import pytest

from ldvortex.errors import DomainError
from ldvortex.params import Grid1D, LdParameters
from ldvortex.validity import (c0, discrete_norm_matrix, energy_bound_coefficient,
                               f_dip_threshold, gap_spectrum, k_factor,
                               lambda_lower, lambda_upper, numerical_gap,
                               rstar_lower, trace_inequality_margin,
                               validity_report)


def _pt(N=2, L=1.0, p=0.5, kappa=1.0, H=3.0, r=1e-3):
    return LdParameters(N, L, p, kappa, H, r)


def test_c0_example_and_limit():
    assert c0(_pt(N=2, L=1.0, p=0.5)) == pytest.approx(2.3374, abs=1e-3)
    # L -> 0: the bracket collapses to 1 and C0 -> 2.
    assert c0(_pt(L=1e-6)) == pytest.approx(2.0, rel=1e-6)
    samples = [c0(_pt(L=L)) for L in np.linspace(0.2, 50.0, 24)]
    assert np.all(np.diff(samples) >= -1e-12)


def test_lambda_lower_example_and_trends():
    assert lambda_lower(_pt(kappa=1.0, L=1.0)) == pytest.approx(0.0901, abs=1e-3)
    # Independent of the number of gaps.
    assert lambda_lower(_pt(N=1)) == lambda_lower(_pt(N=7))
    ks = [lambda_lower(_pt(kappa=k)) for k in (1.0, 2.0, 4.0)]
    ls = [lambda_lower(_pt(L=L)) for L in (1.0, 2.0, 4.0)]
    assert ks == sorted(ks, reverse=True)
    assert ls == sorted(ls, reverse=True)
    with pytest.raises(DomainError):
        lambda_lower(_pt(kappa=0.9))


def test_lambda_upper_example_and_limit():
    assert lambda_upper(_pt(kappa=2.0, p=0.5, L=3.0)) == 0.5
    assert lambda_upper(_pt(L=1e4)) < 1e-6
    for L in np.linspace(1.0, 100.0, 10):
        for kappa in np.linspace(1.0, 100.0, 10):
            for p in np.linspace(0.2, 1.0, 5):
                q = _pt(L=L, kappa=kappa, p=p)
                assert lambda_lower(q) <= lambda_upper(q)


def test_k_factor_examples():
    assert k_factor(_pt(H=2.0, p=0.5), 0.0) == 1.0
    assert k_factor(_pt(H=2.0, p=0.5, L=1.0, kappa=1.0), 1.0) == 4.0
    ks = [k_factor(_pt(), r) for r in (0.0, 0.5, 1.0, 2.0)]
    assert ks == sorted(ks)


def test_rstar_root_and_invariants():
    params = _pt()
    rs = rstar_lower(params)
    lam = lambda_lower(params)
    K = k_factor(params, rs)
    assert abs(rs * (1.0 + K * (1.0 + rs * params.kappa**2 * K)) - lam) <= 1e-10 * lam
    assert 0.0 < rs <= lam
    assert rstar_lower(_pt(N=1)) == rstar_lower(_pt(N=9))
    assert rstar_lower(_pt(L=1.0)) > rstar_lower(_pt(L=2.0)) > rstar_lower(_pt(L=4.0))
    assert rstar_lower(_pt(kappa=1.0)) > rstar_lower(_pt(kappa=2.0))
    assert rstar_lower(_pt(H=1.0)) < rstar_lower(_pt(H=3.0)) < rstar_lower(_pt(H=10.0))


def test_f_dip_threshold():
    params = _pt()
    root1 = f_dip_threshold(params, C_u=1.0)
    root2 = f_dip_threshold(params, C_u=2.0)
    assert root2 < root1
    K = k_factor(params, root1)
    assert abs(root1 * (1.0 + root1 * params.kappa**2 * K**2) - 0.5) <= 1e-10
    # Hp large makes K -> 0 and the root approach 1/(2 C_u).
    tiny_k = _pt(H=1e5)
    assert f_dip_threshold(tiny_k, C_u=1.0) == pytest.approx(0.5, rel=1e-4)


def test_numerical_gap_positive_and_trends():
    params = LdParameters(1, 1.0, 0.5, 1.0, 3.0, 0.0)
    gap = numerical_gap(params)
    assert math.isfinite(gap) and gap > 0.0
    assert numerical_gap(LdParameters(1, 2.0, 0.5, 1.0, 3.0, 0.0)) < gap


def test_numerical_gap_stable_under_refinement():
    params = LdParameters(1, 1.0, 0.5, 1.0, 3.0, 0.0)
    g1 = numerical_gap(params, Grid1D.build(params, dx=1.0 / 20.0))
    g2 = numerical_gap(params, Grid1D.build(params, dx=1.0 / 40.0))
    assert abs(g2 - g1) / g1 <= 0.02


def test_gap_spectrum_kernel_dimension(desk):
    params = desk.with_coupling(0.0)
    eigs = gap_spectrum(params, Grid1D.build(params, dx=1.0 / 24.0),
                        count=params.num_gaps + 2)
    assert np.all(np.abs(eigs[:params.num_gaps]) <= 1e-10)
    assert eigs[params.num_gaps] > 1e-3


def test_norm_matrix_is_spd(desk):
    params = desk.with_coupling(0.0)
    grid = Grid1D.build(params, dx=1.0 / 16.0)
    B = discrete_norm_matrix(params, grid)
    assert np.max(np.abs(B - B.T)) == 0.0
    assert np.linalg.eigvalsh(B)[0] > 0.0


def test_trace_inequality_on_random_fields(desk):
    margin = trace_inequality_margin(desk, n_samples=20, seed=3)
    assert margin <= 1.0


def test_validity_report_roundtrip(desk):
    rep = validity_report(desk)
    d = rep.to_dict()
    assert d["c0"] == pytest.approx(2.3374, abs=1e-3)
    assert d["numerical_gap"] is None
    assert rep.lambda_lower <= rep.lambda_upper
    assert d["energy_bound_coeff"] == pytest.approx(
        energy_bound_coefficient(desk), rel=1e-14)
    rep2 = validity_report(desk, grid=Grid1D.build(desk, dx=1.0 / 16.0))
    assert rep2.numerical_gap > 0.0
