"""Closed-form small-coupling expansion of the layered stack.

At r = 0 the planes decouple and the minimizers form an N-torus
parametrized by the phase offsets delta_n.  At small r > 0 the reduced
energy per unit coupling is

    G(0, delta) = 2 N p L - (2 sin(HpL)/H) * sum_n cos(delta_n),

whose 2^N critical points delta_n in {0, pi} seed Newton; the vortex-plane
branch (all delta_n equal, chosen by the sign of sin(HpL)) is the global
minimizer.  This module evaluates the reduced energy, enumerates the
census seeds, builds the order-r correction fields and assembled seed
states, the order-r observable formulas, and the nucleation diagram
(fields H_k = k pi/(pL), ground energy eps(H), magnetization jumps).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np
import scipy.linalg as sla

from .errors import DegenerateField
from .observables import Observables
from .params import (DEGENERACY_TOL, Grid1D, LdParameters, PhaseConfig,
                     as_phase_config, require_valid, wrap_to_pi)
from .state import LayeredState, zero_coupling_minimizer


def _require_nondegenerate(params: LdParameters) -> float:
    s = math.sin(params.hpl)
    if abs(s) < DEGENERACY_TOL:
        raise DegenerateField(
            f"sin(HpL) = {s:.3e} at HpL = {params.hpl:.6g}: reduced problem degenerate")
    return s


def g0(params: LdParameters, delta) -> float:
    """Reduced energy per unit coupling on the degenerate manifold."""
    require_valid(params)
    cfg = as_phase_config(delta, params.num_gaps)
    N, p, L, H = params.num_gaps, params.spacing, params.half_width, params.applied_field
    return 2.0 * N * p * L - (2.0 * math.sin(params.hpl) / H) * float(np.sum(np.cos(cfg.delta)))


def vortex_plane_delta(params: LdParameters) -> float:
    """The offset (0 or pi) minimizing the reduced energy: 0 when
    sin(HpL)/(Hp) > 0, else pi."""
    require_valid(params)
    s = _require_nondegenerate(params)
    return 0.0 if s / (params.applied_field * params.spacing) > 0.0 else math.pi


def leading_min_energy(params: LdParameters) -> float:
    """Leading-order ground energy 2 N p (L - |sin(HpL)|/(Hp)) r."""
    require_valid(params)
    N, p, L, H, r = (params.num_gaps, params.spacing, params.half_width,
                     params.applied_field, params.coupling)
    return 2.0 * N * p * (L - abs(math.sin(params.hpl)) / (H * p)) * r


@dataclass(frozen=True)
class SeedInfo:
    """One entry of the 2^N enumeration."""

    delta: PhaseConfig
    predicted_inertia: int
    g0: float

    def to_dict(self) -> dict:
        return {"delta": self.delta.delta.tolist(),
                "inertia": self.predicted_inertia, "g0": self.g0}


def enumerate_seeds(params: LdParameters) -> list[SeedInfo]:
    """All 2^N phase configurations delta_n in {0, pi}, sorted by reduced
    energy; the predicted inertia counts gaps with (sin(HpL)/H) cos(delta_n) < 0
    (the reduced Hessian is diagonal)."""
    require_valid(params)
    s = _require_nondegenerate(params)
    sH = s / params.applied_field
    out = []
    for bits in product((0.0, math.pi), repeat=params.num_gaps):
        cfg = PhaseConfig(np.array(bits))
        inertia = int(np.sum(sH * np.cos(cfg.delta) < 0.0))
        out.append(SeedInfo(cfg, inertia, g0(params, cfg)))
    out.sort(key=lambda e: (e.g0, tuple(e.delta.delta)))
    return out


# ---------------------------------------------------------------------------
# Order-r correction fields.

def _sine_mean(delta_n: float, params: LdParameters) -> float:
    """Mean over [-L, L] of sin(delta_n + Hpx)."""
    return math.sin(delta_n) * math.sin(params.hpl) / params.hpl


def _sine_primitive(delta_n: float, params: LdParameters, x: np.ndarray) -> np.ndarray:
    """int_{-L}^{x} sin(delta_n + Hp s) ds, exactly."""
    Hp = params.applied_field * params.spacing
    return (np.cos(delta_n - params.hpl) - np.cos(delta_n + Hp * x)) / Hp


@dataclass(frozen=True)
class CorrectionFields:
    """Order-r corrections around a point of the degenerate manifold.

    u1 is the amplitude correction at nodes (one row per plane), sv1 the
    supervelocity correction and b1 the per-gap field correction at
    midpoints.  I and D are the Lagrange mean-value constants of the
    current and field equations.  For every delta, b1 and sv1 vanish at
    the sample edges and u1 is strictly negative.
    """

    u1: np.ndarray = field(repr=False)     # (N+1, M+1)
    sv1: np.ndarray = field(repr=False)    # (N+1, M)
    b1: np.ndarray = field(repr=False)     # (N,   M)
    I: np.ndarray = field(repr=False)      # (N+1,)
    D: np.ndarray = field(repr=False)      # (N,)


def _u1_rhs(delta: np.ndarray, params: LdParameters, x: np.ndarray) -> np.ndarray:
    """Right side of the amplitude correction ODE per plane."""
    N = params.num_gaps
    Hp = params.applied_field * params.spacing
    cos_gap = np.cos(delta[:, None] + Hp * x[None, :])  # (N, M+1)
    rhs = np.empty((N + 1, x.size))
    rhs[0] = 0.5 * (cos_gap[0] - 1.0)
    rhs[N] = 0.5 * (cos_gap[N - 1] - 1.0)
    if N > 1:
        rhs[1:N] = 0.5 * (cos_gap[:-1] + cos_gap[1:] - 2.0)
    return rhs


def _solve_u1(rhs: np.ndarray, params: LdParameters, grid: Grid1D) -> np.ndarray:
    """Tridiagonal solve of -u''/k^2 + 2u = rhs with Neumann ends.

    The stencil is the variational one induced by the discrete energy
    (trapezoid mass, midpoint stiffness), so a seed assembled from this
    u1 is stationary in the amplitude sector to machine precision.
    """
    k2 = params.kappa**2
    dx = grid.dx
    n = grid.M + 1
    lo = np.full(n, -1.0 / (k2 * dx**2))
    di = np.full(n, 2.0 + 2.0 / (k2 * dx**2))
    ab = np.zeros((3, n))
    ab[0, 1:] = lo[1:]
    ab[1] = di
    ab[2, :-1] = lo[:-1]
    # Variational Neumann closure: boundary rows carry half trapezoid
    # weight, so after scaling their off-diagonal doubles.
    ab[0, 1] = -2.0 / (k2 * dx**2)
    ab[2, -2] = -2.0 / (k2 * dx**2)
    return np.stack([sla.solve_banded((1, 1), ab, row) for row in rhs])


def lagrange_means(params: LdParameters, delta) -> tuple[np.ndarray, np.ndarray]:
    """Mean-value constants (I per plane, D per gap) of the first-order
    current and field equations."""
    cfg = as_phase_config(delta, params.num_gaps)
    N = params.num_gaps
    means = np.array([_sine_mean(dn, params) for dn in cfg.delta])
    I = np.empty(N + 1)
    I[0] = -means[0]
    I[N] = means[N - 1]
    if N > 1:
        I[1:N] = means[:-1] - means[1:]
    D = 0.5 * params.spacing * params.kappa**2 * means
    return I, D


def supervelocity_correction(params: LdParameters, delta,
                             x: np.ndarray) -> np.ndarray:
    """Order-r supervelocity correction per plane, by exact quadrature of
    (1/k^2) sv1' = (sine sources - I_n)/2 with sv1(-L) = 0; the mean
    constants make sv1(+L) = 0 as well."""
    cfg = as_phase_config(delta, params.num_gaps)
    N, L = params.num_gaps, params.half_width
    k2 = params.kappa**2
    x = np.asarray(x, dtype=float)
    I, _ = lagrange_means(params, cfg)
    prim = np.stack([_sine_primitive(dn, params, x) for dn in cfg.delta])
    ramp = x + L
    sv1 = np.empty((N + 1, x.size))
    sv1[0] = 0.5 * k2 * (-prim[0] - I[0] * ramp)
    sv1[N] = 0.5 * k2 * (prim[N - 1] - I[N] * ramp)
    if N > 1:
        sv1[1:N] = 0.5 * k2 * (prim[:-1] - prim[1:] - I[1:N, None] * ramp)
    return sv1


def field_correction(params: LdParameters, delta, x: np.ndarray) -> np.ndarray:
    """Order-r field correction per gap, by exact quadrature of
    b1' = (p k^2 / 2)(sin(delta_n + Hpx) - mean) with b1(+-L) = 0."""
    cfg = as_phase_config(delta, params.num_gaps)
    x = np.asarray(x, dtype=float)
    means = np.array([_sine_mean(dn, params) for dn in cfg.delta])
    prim = np.stack([_sine_primitive(dn, params, x) for dn in cfg.delta])
    return 0.5 * params.spacing * params.kappa**2 * (
        prim - means[:, None] * (x + params.half_width))


def first_order_correction(params: LdParameters, grid: Grid1D,
                           delta) -> CorrectionFields:
    """Order-r correction fields for an arbitrary phase configuration.

    u1 is solved numerically (tridiagonal FD, Neumann ends, the stencil
    induced by the discrete energy); sv1 and b1 come from exact quadrature
    of their first-order equations with the mean constants I_n and D_n,
    sampled at midpoints.
    """
    require_valid(params)
    cfg = as_phase_config(delta, params.num_gaps)
    u1 = _solve_u1(_u1_rhs(cfg.delta, params, grid.nodes), params, grid)
    I, D = lagrange_means(params, cfg)
    sv1 = supervelocity_correction(params, cfg, grid.mids)
    b1 = field_correction(params, cfg, grid.mids)
    return CorrectionFields(u1, sv1, b1, I, D)


def interior_amplitude_constants(params: LdParameters, delta_star: float
                                 ) -> tuple[float, float]:
    """Constants (A, B) of the interior-plane closed form
    u1 = -1/2 + A cosh(sqrt(2) kappa x) + B cos(delta + Hpx).

    B = kappa^2/(H^2 p^2 + 2 kappa^2); A follows from u1'(+-L) = 0.
    """
    kappa, Hp, L = params.kappa, params.applied_field * params.spacing, params.half_width
    B = kappa**2 / (Hp**2 + 2.0 * kappa**2)
    A = (kappa * Hp * math.sin(delta_star + params.hpl)
         / (math.sqrt(2.0) * (Hp**2 + 2.0 * kappa**2)
            * math.sinh(math.sqrt(2.0) * kappa * L)))
    return A, B


def interior_u1_closed_form(params: LdParameters, delta_star: float,
                            x: np.ndarray) -> np.ndarray:
    """Closed-form interior amplitude correction at the vortex-plane branch."""
    A, B = interior_amplitude_constants(params, delta_star)
    kappa = params.kappa
    Hp = params.applied_field * params.spacing
    return (-0.5 + A * np.cosh(math.sqrt(2.0) * kappa * np.asarray(x))
            + B * np.cos(delta_star + Hp * np.asarray(x)))


def seed_state(params: LdParameters, grid: Grid1D, delta) -> LayeredState:
    """Assemble the perturbative seed s(delta) + r * w1.

    f = 1 + r u1 and h = H + r b1; the traces a are stacked across the
    gaps anchored at a_0 = -r sv1_0 (so V_0 = r sv1_0 with phi_0 = 0),
    and phi integrates phi_n' = V_n + a_n with per-plane constants chosen
    so the circular mean of Phi_{n,n-1} - Hpx equals delta_n.
    """
    require_valid(params)
    cfg = as_phase_config(delta, params.num_gaps)
    r, p, H = params.coupling, params.spacing, params.applied_field
    N = params.num_gaps
    if r == 0.0:
        return zero_coupling_minimizer(params, grid, cfg)

    cf = first_order_correction(params, grid, cfg)
    f = 1.0 + r * cf.u1

    a = np.empty((N + 1, grid.M))
    a[0] = -r * cf.sv1[0]
    for n in range(1, N + 1):
        a[n] = a[n - 1] + p * (H + r * cf.b1[n - 1])

    phi = np.zeros((N + 1, grid.M + 1))
    for n in range(1, N + 1):
        slope = r * cf.sv1[n] + a[n]
        phi[n, 1:] = np.cumsum(slope) * grid.dx
    # Per-plane constants, bottom-up: after adjusting phi[n], the circular
    # mean of Phi_{n,n-1} - Hpx equals delta_n exactly.
    drift = H * p * grid.nodes
    for n in range(1, N + 1):
        resid = phi[n] - phi[n - 1] - drift
        mean = math.atan2(float(np.mean(np.sin(resid))),
                          float(np.mean(np.cos(resid))))
        phi[n] += float(wrap_to_pi(cfg.delta[n - 1] - mean))
    return LayeredState(f, phi, a)


# ---------------------------------------------------------------------------
# Order-r observables at the vortex-plane branch.

def phase_gap_factors(params: LdParameters) -> np.ndarray:
    """Per-gap scale of the order-r phase correction, from the Stokes
    relation Phi' = (V_n - V_{n-1}) + p h: interior gaps see only the
    field term (factor p); the top and bottom gaps pick up the edge
    supercurrent, factor p + 1/p (p + 2/p when there is a single gap)."""
    N, p = params.num_gaps, params.spacing
    gamma = np.full(N, p)
    if N == 1:
        gamma[0] = p + 2.0 / p
    else:
        gamma[0] = gamma[-1] = p + 1.0 / p
    return gamma


def vortex_plane_observables(params: LdParameters, grid: Grid1D) -> Observables:
    """Closed-form order-r observables of the vortex-plane minimizer.

    j_z = (r k^2 p / 2) sin(delta + Hpx) in every gap (critical Josephson
    current j_c = r k^2 p / 2), h = H + (r k^2 / 2H)(cos(delta+HpL) -
    cos(delta+Hpx)), in-plane current zero except the top/bottom planes,
    and Phi = delta + Hpx plus the Stokes-consistent order-r correction
    with the undetermined per-gap constants set to zero.
    """
    require_valid(params)
    _require_nondegenerate(params)
    delta = vortex_plane_delta(params)
    N, p, H, kappa, r = (params.num_gaps, params.spacing, params.applied_field,
                         params.kappa, params.coupling)
    Hp = H * p
    xm, xn = grid.mids, grid.nodes

    C_mid = np.cos(delta + params.hpl) - np.cos(delta + Hp * xm)
    edge_V = r * kappa**2 / (2.0 * Hp) * C_mid
    V = np.zeros((N + 1, grid.M))
    V[0] = -edge_V
    V[N] = edge_V
    jx = V.copy()

    h = np.broadcast_to(H + r * kappa**2 / (2.0 * H) * C_mid, (N, grid.M)).copy()
    jz = np.broadcast_to(0.5 * r * kappa**2 * p * np.sin(delta + Hp * xm),
                         (N, grid.M)).copy()

    gamma = phase_gap_factors(params)
    core = xn * math.cos(delta + params.hpl) - np.sin(delta + Hp * xn) / Hp
    Phi = (delta + Hp * xn)[None, :] + (r * kappa**2 / (2.0 * H)) * gamma[:, None] * core[None, :]
    return Observables(V, Phi, h, jx, jz)


def critical_josephson_current(params: LdParameters) -> float:
    """j_c = r k^2 p / 2, the amplitude of the Josephson current."""
    return 0.5 * params.coupling * params.kappa**2 * params.spacing


# ---------------------------------------------------------------------------
# Nucleation fields and the magnetization diagram.

def nucleation_fields(params: LdParameters, H_max: float) -> list[float]:
    """Fields H_k = k pi/(pL) <= H_max where a new vortex plane enters."""
    require_valid(params)
    if H_max <= 0.0:
        raise ValueError(f"H_max must be positive, got {H_max}")
    step = math.pi / (params.spacing * params.half_width)
    return [k * step for k in range(1, int(H_max / step + 1e-12) + 1)]


def epsilon_of_field(params: LdParameters, H: float) -> float:
    """Leading-order ground energy at applied field H."""
    return leading_min_energy(params.with_field(H))


def magnetization(params: LdParameters, H: float, side: int = +1) -> float:
    """One-sided derivative of epsilon with respect to H; the two sides
    disagree exactly at the nucleation fields."""
    N, p, L, r = (params.num_gaps, params.spacing, params.half_width,
                  params.coupling)
    hpl = H * p * L
    s = math.sin(hpl)
    if abs(s) < DEGENERACY_TOL:
        sgn = math.copysign(1.0, math.sin(hpl + side * 1e-9))
    else:
        sgn = math.copysign(1.0, s)
    return -2.0 * N * p * r * (sgn * L * math.cos(hpl) / H
                               - abs(s) / (H**2 * p))


@dataclass(frozen=True)
class NucleationDiagram:
    """Sampled ground-energy curve with its first-order transitions."""

    H_k: np.ndarray = field(repr=False)
    delta_M: np.ndarray = field(repr=False)
    H_grid: np.ndarray = field(repr=False)
    epsilon: np.ndarray = field(repr=False)
    M_minus: np.ndarray = field(repr=False)
    M_plus: np.ndarray = field(repr=False)
    is_transition: np.ndarray = field(repr=False)


def epsilon_and_jumps(params: LdParameters, H_grid) -> NucleationDiagram:
    """Evaluate the nucleation diagram on a positive sorted field grid.

    The magnetization jump at H_k has magnitude 4 N p^2 L^2 r / (k pi).
    """
    require_valid(params)
    H_grid = np.asarray(H_grid, dtype=float)
    if H_grid.ndim != 1 or H_grid.size == 0 or np.any(H_grid <= 0.0):
        raise ValueError("H_grid must be a nonempty 1D array of positive fields")
    if np.any(np.diff(H_grid) <= 0.0):
        raise ValueError("H_grid must be strictly increasing")
    N, p, L, r = (params.num_gaps, params.spacing, params.half_width,
                  params.coupling)
    Hk = np.asarray(nucleation_fields(params, float(H_grid[-1])))
    delta_M = 4.0 * N * p**2 * L**2 * r / (np.pi * np.arange(1, Hk.size + 1))
    eps = np.array([epsilon_of_field(params, H) for H in H_grid])
    m_minus = np.array([magnetization(params, H, -1) for H in H_grid])
    m_plus = np.array([magnetization(params, H, +1) for H in H_grid])
    half_step = 0.5 * float(np.min(np.diff(H_grid))) if H_grid.size > 1 else 0.0
    is_tr = np.zeros(H_grid.size, dtype=bool)
    for hk in Hk:
        if H_grid.size > 1:
            j = int(np.argmin(np.abs(H_grid - hk)))
            if abs(H_grid[j] - hk) <= half_step:
                is_tr[j] = True
    return NucleationDiagram(Hk, delta_M, H_grid, eps, m_minus, m_plus, is_tr)
