"""Gauge-invariant observables of a layered state.

All physically measurable quantities are assembled here: the supercurrent
velocity V_n = phi_n' - a_n, the gauge-invariant phase difference
Phi_{n,n-1} = phi_n - phi_{n-1} (A_z = 0 in the layered gauge), the local
field h per gap, the in-plane supercurrent j_x = V f^2 and the Josephson
current j_z = (r kappa^2 p / 2) f_n f_{n-1} sin Phi.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeMismatch
from .params import Grid1D, LdParameters, wrap_to_pi
from .state import LayeredState


@dataclass(frozen=True)
class Observables:
    """Gauge-invariant fields on the staggered grid.

    Attributes:
        V: supercurrent velocity per plane at midpoints, (N+1, M).
        Phi: gauge-invariant phase difference per gap at nodes, (N, M+1).
        h: local magnetic field per gap at midpoints, (N, M).
        jx: in-plane current per plane at midpoints, (N+1, M).
        jz: Josephson current per gap at midpoints, (N, M).
    """

    V: np.ndarray = field(repr=False)
    Phi: np.ndarray = field(repr=False)
    h: np.ndarray = field(repr=False)
    jx: np.ndarray = field(repr=False)
    jz: np.ndarray = field(repr=False)

    @property
    def num_gaps(self) -> int:
        return self.h.shape[0]

    @property
    def num_mids(self) -> int:
        return self.h.shape[1]


def observables(state: LayeredState, params: LdParameters,
                grid: Grid1D) -> Observables:
    """Compute all five observable fields of a state."""
    state.check_grid(params, grid)
    p, kappa, r = params.spacing, params.kappa, params.coupling
    dx = grid.dx

    dphi = np.diff(state.phi, axis=1) / dx
    V = dphi - state.a
    Phi = state.phi[1:] - state.phi[:-1]
    h = (state.a[1:] - state.a[:-1]) / p
    fm = 0.5 * (state.f[:, 1:] + state.f[:, :-1])
    jx = V * fm**2
    Phi_mid = 0.5 * (Phi[:, 1:] + Phi[:, :-1])
    jz = 0.5 * r * kappa**2 * p * fm[1:] * fm[:-1] * np.sin(Phi_mid)
    for arr in (V, Phi, h, jx, jz):
        arr.setflags(write=False)
    return Observables(V, Phi, h, jx, jz)


def distance(obs1: Observables, obs2: Observables) -> float:
    """Sup-norm distance over all five observable fields.

    Phase differences are compared on the circle (differences wrapped to
    (-pi, pi]) so that configurations equal modulo 2*pi in any phi_n are at
    distance zero: those are physically identical.
    """
    pairs = (("V", obs1.V, obs2.V), ("Phi", obs1.Phi, obs2.Phi),
             ("h", obs1.h, obs2.h), ("jx", obs1.jx, obs2.jx),
             ("jz", obs1.jz, obs2.jz))
    worst = 0.0
    for name, x, y in pairs:
        if x.shape != y.shape:
            raise ShapeMismatch(f"observable {name}: shapes {x.shape} vs {y.shape}")
        diff = x - y
        if name == "Phi":
            diff = wrap_to_pi(diff)
        worst = max(worst, float(np.max(np.abs(diff))) if diff.size else 0.0)
    return worst


def delta_estimate(obs: Observables, params: LdParameters,
                   grid: Grid1D) -> np.ndarray:
    """Per-gap circular mean of Phi_{n,n-1}(x) - H p x, in [0, 2*pi).

    At small coupling this recovers the reduced coordinates delta_n of the
    nearest point on the degenerate manifold.
    """
    drift = params.applied_field * params.spacing * grid.nodes[None, :]
    resid = obs.Phi - drift
    mean_sin = np.mean(np.sin(resid), axis=1)
    mean_cos = np.mean(np.cos(resid), axis=1)
    return np.mod(np.arctan2(mean_sin, mean_cos), 2.0 * np.pi)


def mids_to_nodes(arr: np.ndarray) -> np.ndarray:
    """Second-order interpolation of midpoint rows onto nodes.

    Interior nodes average adjacent midpoints; boundary nodes use the
    two-point extrapolation (3*m0 - m1)/2.
    """
    arr = np.atleast_2d(arr)
    out = np.empty((arr.shape[0], arr.shape[1] + 1))
    out[:, 1:-1] = 0.5 * (arr[:, 1:] + arr[:, :-1])
    out[:, 0] = 1.5 * arr[:, 0] - 0.5 * arr[:, 1]
    out[:, -1] = 1.5 * arr[:, -1] - 0.5 * arr[:, -2]
    return out


def lift_field_2d(obs: Observables, params: LdParameters,
                  nz_per_gap: int) -> tuple[np.ndarray, np.ndarray]:
    """Piecewise-constant-in-z extension of the per-gap field h(x).

    Returns (z, hmap) where hmap has N*nz_per_gap rows sampling the field
    from the bottom gap upward; within each gap h is independent of z.
    """
    if nz_per_gap < 1:
        raise ValueError(f"nz_per_gap must be >= 1, got {nz_per_gap}")
    N, p = obs.num_gaps, params.spacing
    rows = np.repeat(obs.h, nz_per_gap, axis=0)
    z = (np.arange(N * nz_per_gap) + 0.5) * (p / nz_per_gap)
    return z, rows
