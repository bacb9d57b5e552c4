"""Minimization and critical-point search over the free DOFs.

The free DOFs of a gauge-fixed state are f on all planes, phi on planes
1..N and a on all planes.  They are packed x-major (all DOFs of one grid
column together) so the Hessian is a symmetric banded matrix with
bandwidth 4N+2: couplings reach at most one grid column and one plane
away.  Newton solves the banded system directly; a curvature-memory
(L-BFGS) descent with Armijo backtracking handles minimization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg as sla

from .errors import (FactorizationFailure, NoConvergence, NonFinite,
                     SingularHessian)
from .energy import energy_arrays, gradient_arrays, hessian_apply_arrays
from .observables import delta_estimate, observables
from .params import Grid1D, LdParameters, require_valid
from .state import LayeredState

ARMIJO_C = 1e-4
BACKTRACK = 0.5
MAX_BACKTRACKS = 40


@lru_cache(maxsize=32)
def _layout_cached(N: int, M: int):
    S = 3 * N + 2
    cols = np.arange(M + 1)
    mids = np.arange(M)
    idx_f = cols[None, :] * S + np.arange(N + 1)[:, None]
    idx_phi = cols[None, :] * S + (N + 1) + np.arange(N)[:, None]
    idx_a = mids[None, :] * S + (2 * N + 1) + np.arange(N + 1)[:, None]
    size = M * S + 2 * N + 1
    for arr in (idx_f, idx_phi, idx_a):
        arr.setflags(write=False)
    return idx_f, idx_phi, idx_a, size, S + N


@dataclass(frozen=True)
class Layout:
    """x-major packing of the free DOFs into a flat vector."""

    N: int
    M: int
    idx_f: np.ndarray = field(repr=False)
    idx_phi: np.ndarray = field(repr=False)
    idx_a: np.ndarray = field(repr=False)
    size: int = 0
    bandwidth: int = 0

    @staticmethod
    def build(N: int, M: int) -> "Layout":
        idx_f, idx_phi, idx_a, size, bw = _layout_cached(N, M)
        return Layout(N, M, idx_f, idx_phi, idx_a, size, bw)

    def pack(self, f: np.ndarray, dphi: np.ndarray, a: np.ndarray) -> np.ndarray:
        x = np.empty(self.size)
        x[self.idx_f] = f
        x[self.idx_phi] = dphi
        x[self.idx_a] = a
        return x

    def unpack(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return x[self.idx_f], x[self.idx_phi], x[self.idx_a]


def _state_to_x(state: LayeredState, layout: Layout) -> np.ndarray:
    return layout.pack(state.f, state.phi[1:], state.a)


def _x_to_state(x: np.ndarray, layout: Layout) -> LayeredState:
    f, dphi, a = layout.unpack(x)
    phi = np.vstack([np.zeros((1, layout.M + 1)), dphi])
    return LayeredState(f, phi, a)


def _flat_functions(params: LdParameters, grid: Grid1D, layout: Layout):
    zrow = np.zeros((1, grid.M + 1))

    def efun(x: np.ndarray) -> float:
        f, dphi, a = layout.unpack(x)
        phi = np.vstack([zrow, dphi])
        b, j, fl = energy_arrays(f, phi, a, params, grid)
        return b + j + fl

    def gfun(x: np.ndarray) -> np.ndarray:
        f, dphi, a = layout.unpack(x)
        phi = np.vstack([zrow, dphi])
        gf, gphi, ga = gradient_arrays(f, phi, a, params, grid)
        return layout.pack(gf, gphi[1:], ga)

    return efun, gfun


@dataclass(frozen=True)
class MinimizeReport:
    """Descent outcome with the full per-iteration trace."""

    state: LayeredState
    iterations: int
    grad_norm: float
    energy: float
    converged: bool
    line_search_failures: int
    energy_trace: np.ndarray = field(repr=False)
    grad_trace: np.ndarray = field(repr=False)
    step_trace: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {"iterations": self.iterations, "grad_norm": self.grad_norm,
                "energy": self.energy, "converged": self.converged,
                "line_search_failures": self.line_search_failures}


def minimize(state0: LayeredState, params: LdParameters, grid: Grid1D,
             tol: float = 1e-8, max_iter: int = 4000,
             memory: int = 12) -> MinimizeReport:
    """Curvature-memory descent (L-BFGS two-loop) with Armijo backtracking.

    Terminates when the sup-norm of the gradient drops to tol or the
    iteration budget runs out.  The energy trace is nonincreasing; a
    stalled line search returns the best state so far with converged=False.
    """
    require_valid(params)
    state0.check_grid(params, grid)
    layout = Layout.build(params.num_gaps, grid.M)
    efun, gfun = _flat_functions(params, grid, layout)

    x = _state_to_x(state0, layout)
    e = efun(x)
    g = gfun(x)
    if not (math.isfinite(e) and np.all(np.isfinite(g))):
        raise NonFinite("non-finite energy or gradient at the start state")

    s_hist: list[np.ndarray] = []
    y_hist: list[np.ndarray] = []
    rho_hist: list[float] = []
    energies = [e]
    gnorms = [float(np.max(np.abs(g)))]
    steps: list[float] = []
    failures = 0
    iterations = 0

    def two_loop(grad: np.ndarray) -> np.ndarray:
        q = grad.copy()
        alphas = []
        for s, y, rho in zip(reversed(s_hist), reversed(y_hist), reversed(rho_hist)):
            alpha = rho * float(s @ q)
            q -= alpha * y
            alphas.append(alpha)
        if y_hist:
            gamma = float(s_hist[-1] @ y_hist[-1]) / float(y_hist[-1] @ y_hist[-1])
            q *= gamma
        for (s, y, rho), alpha in zip(zip(s_hist, y_hist, rho_hist), reversed(alphas)):
            beta = rho * float(y @ q)
            q += (alpha - beta) * s
        return -q

    while gnorms[-1] > tol and iterations < max_iter:
        d = two_loop(g)
        slope = float(g @ d)
        if not (slope < 0.0) or not np.all(np.isfinite(d)):
            s_hist.clear(); y_hist.clear(); rho_hist.clear()
            d = -g
            slope = -float(g @ g)

        t = 1.0
        accepted = False
        for _ in range(MAX_BACKTRACKS):
            x_new = x + t * d
            e_new = efun(x_new)
            if math.isfinite(e_new) and e_new <= e + ARMIJO_C * t * slope:
                accepted = True
                break
            t *= BACKTRACK
        if not accepted and s_hist:
            # Memory may be stale; retry once along steepest descent.
            s_hist.clear(); y_hist.clear(); rho_hist.clear()
            d = -g
            slope = -float(g @ g)
            t = 1.0
            for _ in range(MAX_BACKTRACKS):
                x_new = x + t * d
                e_new = efun(x_new)
                if math.isfinite(e_new) and e_new <= e + ARMIJO_C * t * slope:
                    accepted = True
                    break
                t *= BACKTRACK
        if not accepted:
            failures += 1
            break

        g_new = gfun(x_new)
        if not np.all(np.isfinite(g_new)):
            raise NonFinite("non-finite gradient during descent")
        s = x_new - x
        y = g_new - g
        sy = float(s @ y)
        if sy > 1e-12 * float(np.linalg.norm(s)) * float(np.linalg.norm(y)):
            s_hist.append(s)
            y_hist.append(y)
            rho_hist.append(1.0 / sy)
            if len(s_hist) > memory:
                s_hist.pop(0); y_hist.pop(0); rho_hist.pop(0)
        x, e, g = x_new, e_new, g_new
        iterations += 1
        energies.append(e)
        gnorms.append(float(np.max(np.abs(g))))
        steps.append(t)

    return MinimizeReport(
        state=_x_to_state(x, layout),
        iterations=iterations,
        grad_norm=gnorms[-1],
        energy=e,
        converged=bool(gnorms[-1] <= tol),
        line_search_failures=failures,
        energy_trace=np.asarray(energies),
        grad_trace=np.asarray(gnorms),
        step_trace=np.asarray(steps),
    )


def assemble_banded_hessian(state: LayeredState, params: LdParameters,
                            grid: Grid1D) -> tuple[np.ndarray, int]:
    """Assemble the free-DOF Hessian in LAPACK banded storage
    ab[bw + i - j, j] = H[i, j] using Hessian-vector products on comb
    vectors (one product per color, colors spaced beyond the bandwidth)."""
    layout = Layout.build(params.num_gaps, grid.M)
    n, bw = layout.size, layout.bandwidth
    ab = np.zeros((2 * bw + 1, n))
    ncolors = min(2 * bw + 1, n)
    zrow = np.zeros((1, grid.M + 1))
    f, phi, a = state.f, state.phi, state.a
    for c in range(ncolors):
        v = np.zeros(n)
        js = np.arange(c, n, ncolors)
        v[js] = 1.0
        uf, udphi, ua = layout.unpack(v)
        uphi = np.vstack([zrow, udphi])
        Hf, Hphi, Ha = hessian_apply_arrays(f, phi, a, uf, uphi, ua, params, grid)
        Hv = layout.pack(Hf, Hphi[1:], Ha)
        for d in range(-bw, bw + 1):
            rows = js + d
            ok = (rows >= 0) & (rows < n)
            ab[bw + d, js[ok]] = Hv[rows[ok]]
    return ab, bw


def banded_to_dense(ab: np.ndarray, bw: int) -> np.ndarray:
    """Expand banded storage to a dense symmetric matrix (small systems)."""
    n = ab.shape[1]
    H = np.zeros((n, n))
    for d in range(-bw, bw + 1):
        cols = np.arange(max(0, -d), n - max(0, d))
        H[cols + d, cols] = ab[bw + d, cols]
    return H


def dense_hessian(state: LayeredState, params: LdParameters,
                  grid: Grid1D) -> np.ndarray:
    """Dense free-DOF Hessian (for spectral diagnostics on small grids)."""
    ab, bw = assemble_banded_hessian(state, params, grid)
    return banded_to_dense(ab, bw)


def hessian_eigenvalues(state: LayeredState, params: LdParameters,
                        grid: Grid1D) -> np.ndarray:
    """All eigenvalues of the free-DOF Hessian, ascending (banded solver)."""
    ab, bw = assemble_banded_hessian(state, params, grid)
    n = ab.shape[1]
    lower = ab[bw:, :]
    try:
        return sla.eig_banded(lower, lower=True, eigvals_only=True)
    except sla.LinAlgError as exc:  # pragma: no cover - rare LAPACK failure
        raise FactorizationFailure(str(exc)) from exc


def inertia(state: LayeredState, params: LdParameters, grid: Grid1D,
            k: int | None = None) -> int:
    """Number of negative eigenvalues among the k smallest-magnitude
    eigenvalues of the free-DOF Hessian (k defaults to N+1)."""
    if k is None:
        k = params.num_gaps + 1
    if k < params.num_gaps + 1:
        raise ValueError(f"k must be >= N+1 = {params.num_gaps + 1}, got {k}")
    eigs = hessian_eigenvalues(state, params, grid)
    smallest = eigs[np.argsort(np.abs(eigs))[:k]]
    return int(np.sum(smallest < 0.0))


@dataclass(frozen=True)
class CriticalPoint:
    """Converged Newton output with stability classification."""

    state: LayeredState
    residual: float
    inertia: int
    delta_hat: np.ndarray
    energy: float
    newton_iterations: int
    residual_history: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {"residual": self.residual, "inertia": self.inertia,
                "delta_hat": self.delta_hat.tolist(), "energy": self.energy,
                "newton_iterations": self.newton_iterations,
                "residual_history": self.residual_history.tolist()}


def default_newton_tol(params: LdParameters) -> float:
    """The Hessian has N eigenvalues of size O(r) near critical points, so
    chasing residuals far below 1e-4*r resolves nothing."""
    return max(1e-10, 1e-4 * params.coupling)


def newton_critical(state0: LayeredState, params: LdParameters, grid: Grid1D,
                    tol: float | None = None, max_newton: int = 60,
                    inertia_k: int | None = None) -> CriticalPoint:
    """Full Newton iteration on grad(energy) = 0 with a direct banded solve.

    A merit line search on |grad|^2 guards each step; Levenberg diagonal
    damping takes over when the pure Newton direction stalls.  Requires
    r > 0: at r = 0 the Hessian has an exact N-dimensional kernel.
    """
    require_valid(params)
    state0.check_grid(params, grid)
    if params.coupling == 0.0:
        raise SingularHessian("r = 0: the phase manifold gives an exact kernel")
    if tol is None:
        tol = default_newton_tol(params)

    layout = Layout.build(params.num_gaps, grid.M)
    efun, gfun = _flat_functions(params, grid, layout)
    x = _state_to_x(state0, layout)
    g = gfun(x)
    if not np.all(np.isfinite(g)):
        raise NonFinite("non-finite gradient at the Newton start")
    history = [float(np.max(np.abs(g)))]

    for _ in range(max_newton):
        if history[-1] <= tol:
            break
        ab, bw = assemble_banded_hessian(_x_to_state(x, layout), params, grid)
        mu = 0.0
        scale = float(np.max(np.abs(ab[bw]))) or 1.0
        merit = float(g @ g)
        accepted = False
        for _damp in range(12):
            abd = ab.copy()
            if mu > 0.0:
                abd[bw] += mu
            try:
                d = sla.solve_banded((bw, bw), abd, -g)
            except sla.LinAlgError:
                d = None
            if d is not None and np.all(np.isfinite(d)):
                t = 1.0
                for _ in range(MAX_BACKTRACKS):
                    x_new = x + t * d
                    g_new = gfun(x_new)
                    if (np.all(np.isfinite(g_new))
                            and float(g_new @ g_new) <= (1.0 - 2.0 * ARMIJO_C * t) * merit):
                        accepted = True
                        break
                    t *= BACKTRACK
            if accepted:
                break
            mu = 1e-8 * scale if mu == 0.0 else mu * 100.0
        if not accepted:
            raise NoConvergence(
                f"Newton stalled at residual {history[-1]:.3e} (tol {tol:.1e})")
        x, g = x_new, g_new
        history.append(float(np.max(np.abs(g))))

    if history[-1] > tol:
        raise NoConvergence(
            f"Newton used {max_newton} iterations, residual {history[-1]:.3e} > tol {tol:.1e}")

    state = _x_to_state(x, layout)
    obs = observables(state, params, grid)
    return CriticalPoint(
        state=state,
        residual=history[-1],
        inertia=inertia(state, params, grid, inertia_k),
        delta_hat=delta_estimate(obs, params, grid),
        energy=efun(x),
        newton_iterations=len(history) - 1,
        residual_history=np.asarray(history),
    )
