"""Discrete Gibbs free energy of the layered stack, with exact derivatives.

The functional, per unit length in y and relative to the normal state:

    bulk      p * sum_n  int [ (f_n^2-1)^2/2 + (f_n')^2/k^2 + V_n^2 f_n^2/k^2 ]
    josephson (r p / 2) * sum_gaps int [ f_n^2 + f_{n-1}^2 - 2 f_n f_{n-1} cos Phi ]
    field     (p / k^2) * sum_gaps int ( h - H )^2

discretized with trapezoid rule for nodal integrands and midpoint rule for
derivative terms, which keeps discrete gauge invariance exact and the whole
scheme O(dx^2) consistent.  The midpoint amplitude in V^2 f^2 is the
arithmetic nodal mean squared after averaging, which keeps the Hessian
symmetric and the gradient exactly the derivative of the discrete energy.

f is unconstrained here; at solutions of the discrete system f stays in
(0, 1] and the harness asserts it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NonFinite, ShapeMismatch
from .params import Grid1D, LdParameters
from .state import LayeredState


@dataclass(frozen=True)
class EnergyBreakdown:
    """Bulk, interlayer and magnetic contributions to the free energy."""

    bulk: float
    josephson: float
    field: float

    @property
    def total(self) -> float:
        return self.bulk + self.josephson + self.field

    def to_dict(self) -> dict:
        return {"bulk": self.bulk, "josephson": self.josephson,
                "field": self.field, "total": self.total}


@dataclass(frozen=True)
class Cotangent:
    """Gradient of the energy with respect to every free DOF.

    phi_0 is gauge fixed, so dphi covers planes 1..N only.
    """

    df: np.ndarray = field(repr=False)      # (N+1, M+1)
    dphi: np.ndarray = field(repr=False)    # (N,   M+1)
    da: np.ndarray = field(repr=False)      # (N+1, M)

    def sup_norm(self) -> float:
        return max(float(np.max(np.abs(self.df))),
                   float(np.max(np.abs(self.dphi))),
                   float(np.max(np.abs(self.da))))

    def norm2(self) -> float:
        return math.sqrt(float(np.sum(self.df**2)) + float(np.sum(self.dphi**2))
                         + float(np.sum(self.da**2)))


def _check(state: LayeredState, params: LdParameters, grid: Grid1D) -> None:
    state.check_grid(params, grid)
    if not (np.all(np.isfinite(state.f)) and np.all(np.isfinite(state.phi))
            and np.all(np.isfinite(state.a))):
        raise NonFinite("state contains non-finite entries")


def energy_arrays(f: np.ndarray, phi: np.ndarray, a: np.ndarray,
                  params: LdParameters, grid: Grid1D) -> tuple[float, float, float]:
    """(bulk, josephson, field) for raw arrays; fast path for the solvers."""
    p, kappa, r, H = (params.spacing, params.kappa, params.coupling,
                      params.applied_field)
    dx = grid.dx
    wt = grid.trapezoid_weights()

    df = np.diff(f, axis=1) / dx
    V = np.diff(phi, axis=1) / dx - a
    fm = 0.5 * (f[:, 1:] + f[:, :-1])
    bulk = p * (np.sum(wt * 0.5 * (f**2 - 1.0)**2)
                + dx * np.sum(df**2 + V**2 * fm**2) / kappa**2)

    Phi = phi[1:] - phi[:-1]
    jos = 0.5 * r * p * np.sum(
        wt * (f[1:]**2 + f[:-1]**2 - 2.0 * f[1:] * f[:-1] * np.cos(Phi)))

    h = (a[1:] - a[:-1]) / p
    fld = (p * dx / kappa**2) * np.sum((h - H)**2)
    return bulk, jos, fld


def total_energy(state: LayeredState, params: LdParameters,
                 grid: Grid1D) -> EnergyBreakdown:
    """Evaluate the discrete free energy of a state."""
    _check(state, params, grid)
    bulk, jos, fld = energy_arrays(state.f, state.phi, state.a, params, grid)
    out = EnergyBreakdown(float(bulk), float(jos), float(fld))
    if not math.isfinite(out.total):
        raise NonFinite("energy is not finite")
    return out


def gradient_arrays(f: np.ndarray, phi: np.ndarray, a: np.ndarray,
                    params: LdParameters, grid: Grid1D
                    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact derivative arrays (gf, gphi_full, ga) of the discrete energy.

    gphi_full includes plane 0; callers drop it for the free-DOF gradient.
    """
    p, kappa, r, H = (params.spacing, params.kappa, params.coupling,
                      params.applied_field)
    dx = grid.dx
    wt = grid.trapezoid_weights()

    df = np.diff(f, axis=1) / dx
    V = np.diff(phi, axis=1) / dx - a
    fm = 0.5 * (f[:, 1:] + f[:, :-1])
    Phi = phi[1:] - phi[:-1]
    h = (a[1:] - a[:-1]) / p

    gf = p * wt * 2.0 * (f**2 - 1.0) * f
    mid_f = p * dx * (V**2 * fm) / kappa**2          # d(V^2 fm^2)/df_node
    grad_f = p * dx * (2.0 * df / dx) / kappa**2     # d(df^2)/df via sign below
    gf[:, :-1] += mid_f - grad_f
    gf[:, 1:] += mid_f + grad_f

    cosPhi = np.cos(Phi)
    sinPhi = np.sin(Phi)
    jf = 0.5 * r * p * wt
    gf[1:] += jf * (2.0 * f[1:] - 2.0 * f[:-1] * cosPhi)
    gf[:-1] += jf * (2.0 * f[:-1] - 2.0 * f[1:] * cosPhi)

    gphi = np.zeros_like(phi)
    tphi = (2.0 * p / kappa**2) * V * fm**2
    gphi[:, :-1] -= tphi
    gphi[:, 1:] += tphi
    jphi = jf * 2.0 * f[1:] * f[:-1] * sinPhi
    gphi[1:] += jphi
    gphi[:-1] -= jphi

    ga = -(2.0 * p * dx / kappa**2) * V * fm**2
    gh = (2.0 * dx / kappa**2) * (h - H)
    ga[1:] += gh
    ga[:-1] -= gh
    return gf, gphi, ga


def gradient(state: LayeredState, params: LdParameters,
             grid: Grid1D) -> Cotangent:
    """Exact gradient of total_energy over the free DOFs.

    The a-components encode the discrete jump conditions across the
    planes, including the top/bottom relations with the external-field
    offset (h^(N) = H + p f_N^2 V_N at stationarity).
    """
    _check(state, params, grid)
    gf, gphi, ga = gradient_arrays(state.f, state.phi, state.a, params, grid)
    return Cotangent(gf, gphi[1:], ga)


def hessian_apply_arrays(f, phi, a, uf, uphi, ua, params: LdParameters,
                         grid: Grid1D) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Directional derivative of gradient_arrays along (uf, uphi, ua).

    uphi must include a plane-0 row (zeros when gauge fixed).
    """
    p, kappa, r = params.spacing, params.kappa, params.coupling
    dx = grid.dx
    wt = grid.trapezoid_weights()

    V = np.diff(phi, axis=1) / dx - a
    fm = 0.5 * (f[:, 1:] + f[:, :-1])
    Phi = phi[1:] - phi[:-1]
    cosPhi = np.cos(Phi)
    sinPhi = np.sin(Phi)

    duf = np.diff(uf, axis=1) / dx
    dV = np.diff(uphi, axis=1) / dx - ua
    dfm = 0.5 * (uf[:, 1:] + uf[:, :-1])
    dPhi = uphi[1:] - uphi[:-1]
    dh = (ua[1:] - ua[:-1]) / p

    Hf = p * wt * 2.0 * (3.0 * f**2 - 1.0) * uf
    mid_lin = p * dx * (2.0 * V * dV * fm + V**2 * dfm) / kappa**2
    grad_lin = p * dx * (2.0 * duf / dx) / kappa**2
    Hf[:, :-1] += mid_lin - grad_lin
    Hf[:, 1:] += mid_lin + grad_lin
    jf = 0.5 * r * p * wt
    Hf[1:] += jf * (2.0 * uf[1:] - 2.0 * uf[:-1] * cosPhi
                    + 2.0 * f[:-1] * sinPhi * dPhi)
    Hf[:-1] += jf * (2.0 * uf[:-1] - 2.0 * uf[1:] * cosPhi
                     + 2.0 * f[1:] * sinPhi * dPhi)

    Hphi = np.zeros_like(phi)
    tlin = (2.0 * p / kappa**2) * (dV * fm**2 + 2.0 * V * fm * dfm)
    Hphi[:, :-1] -= tlin
    Hphi[:, 1:] += tlin
    jlin = jf * 2.0 * ((uf[1:] * f[:-1] + f[1:] * uf[:-1]) * sinPhi
                       + f[1:] * f[:-1] * cosPhi * dPhi)
    Hphi[1:] += jlin
    Hphi[:-1] -= jlin

    Ha = -(2.0 * p * dx / kappa**2) * (dV * fm**2 + 2.0 * V * fm * dfm)
    ghl = (2.0 * dx / kappa**2) * dh
    Ha[1:] += ghl
    Ha[:-1] -= ghl
    return Hf, Hphi, Ha


def hessian_apply(state: LayeredState, direction: Cotangent,
                  params: LdParameters, grid: Grid1D) -> Cotangent:
    """Exact Hessian-vector product over the free DOFs; symmetric."""
    _check(state, params, grid)
    if (direction.df.shape != state.f.shape
            or direction.dphi.shape != state.phi[1:].shape
            or direction.da.shape != state.a.shape):
        raise ShapeMismatch("direction shapes do not match the state")
    uphi = np.vstack([np.zeros((1, state.num_nodes)), direction.dphi])
    Hf, Hphi, Ha = hessian_apply_arrays(state.f, state.phi, state.a,
                                        direction.df, uphi, direction.da,
                                        params, grid)
    return Cotangent(Hf, Hphi[1:], Ha)


def el_residual(state: LayeredState, params: LdParameters,
                grid: Grid1D) -> dict[str, float]:
    """Sup-norms of the semi-discrete Euler-Lagrange residuals.

    Families:
      f_ode     amplitude ODE at interior nodes
      field_x   dh/dx = (r k^2 p / 2) f_n f_{n-1} sin Phi at interior nodes
      current   (1/k^2) d(f^2 V)/dx = interlayer source terms at interior nodes
      stokes    Phi' = (V_n - V_{n-1}) + p h, an exact identity of the scheme
      boundary  f'(+-L), j_x(+-L) and h(+-L) - H
    """
    _check(state, params, grid)
    p, kappa, r, H = (params.spacing, params.kappa, params.coupling,
                      params.applied_field)
    dx = grid.dx
    f, phi, a = state.f, state.phi, state.a
    N = state.num_gaps

    V = np.diff(phi, axis=1) / dx - a
    fm = 0.5 * (f[:, 1:] + f[:, :-1])
    Phi = phi[1:] - phi[:-1]
    h = (a[1:] - a[:-1]) / p
    jx = V * fm**2

    # f ODE: -f''/k^2 + (f^2-1) f + V^2 f / k^2 = coupling terms.
    fxx = (f[:, 2:] - 2.0 * f[:, 1:-1] + f[:, :-2]) / dx**2
    Vn = 0.5 * (V[:, 1:] + V[:, :-1])  # V at interior nodes
    lhs = (-fxx / kappa**2 + (f[:, 1:-1]**2 - 1.0) * f[:, 1:-1]
           + Vn**2 * f[:, 1:-1] / kappa**2)
    cosPhi = np.cos(Phi[:, 1:-1])
    rhs = np.zeros_like(lhs)
    rhs[0] = 0.5 * r * (f[1, 1:-1] * cosPhi[0] - f[0, 1:-1])
    rhs[N] = 0.5 * r * (f[N - 1, 1:-1] * cosPhi[N - 1] - f[N, 1:-1])
    if N > 1:
        rhs[1:N] = 0.5 * r * (f[0:N - 1, 1:-1] * cosPhi[:-1]
                              + f[2:N + 1, 1:-1] * cosPhi[1:]
                              - 2.0 * f[1:N, 1:-1])
    res_f = float(np.max(np.abs(lhs - rhs)))

    # Field equation per gap at interior nodes.
    dhdx = np.diff(h, axis=1) / dx
    src = 0.5 * r * kappa**2 * p * f[1:, 1:-1] * f[:-1, 1:-1] * np.sin(Phi[:, 1:-1])
    res_hx = float(np.max(np.abs(dhdx - src)))

    # Current conservation at interior nodes.
    div = np.diff(jx, axis=1) / (dx * kappa**2)
    sin_node = np.sin(Phi[:, 1:-1])
    pair = f[1:, 1:-1] * f[:-1, 1:-1] * sin_node
    cur = np.zeros_like(div)
    cur[0] = -0.5 * r * pair[0]
    cur[N] = 0.5 * r * pair[N - 1]
    if N > 1:
        cur[1:N] = 0.5 * r * (pair[:-1] - pair[1:])
    res_cur = float(np.max(np.abs(div - cur)))

    # Stokes identity at midpoints: exact telescoping of the definitions.
    dPhi = np.diff(Phi, axis=1) / dx
    res_stokes = float(np.max(np.abs(dPhi - (V[1:] - V[:-1]) - p * h)))

    # Boundary conditions, second-order one-sided stencils.
    fp_left = (-3.0 * f[:, 0] + 4.0 * f[:, 1] - f[:, 2]) / (2.0 * dx)
    fp_right = (3.0 * f[:, -1] - 4.0 * f[:, -2] + f[:, -3]) / (2.0 * dx)
    jx_left = 1.5 * jx[:, 0] - 0.5 * jx[:, 1]
    jx_right = 1.5 * jx[:, -1] - 0.5 * jx[:, -2]
    h_left = 1.5 * h[:, 0] - 0.5 * h[:, 1] - H
    h_right = 1.5 * h[:, -1] - 0.5 * h[:, -2] - H
    res_bnd = float(max(np.max(np.abs(fp_left)), np.max(np.abs(fp_right)),
                        np.max(np.abs(jx_left)), np.max(np.abs(jx_right)),
                        np.max(np.abs(h_left)), np.max(np.abs(h_right))))

    return {"f_ode": res_f, "field_x": res_hx, "current": res_cur,
            "stokes": res_stokes, "boundary": res_bnd}


def fd_gradient_check(state: LayeredState, params: LdParameters, grid: Grid1D,
                      eps: float = 1e-6, n_samples: int = 200,
                      seed: int = 0) -> float:
    """Max relative error between the analytic gradient and central finite
    differences over a random sample of free DOFs.

    The difference quotient is evaluated in extended precision so its
    roundoff stays below what a 1e-6 relative comparison needs.  A
    component can still sit arbitrarily close to a zero crossing of the
    gradient, where no difference quotient certifies relative accuracy;
    components whose analytic and FD values both fall below the 1e-6
    energy-scale floor are therefore compared absolutely (they match
    within the floor) rather than through the relative quotient.
    """
    if not (1e-9 <= eps <= 1e-3):
        raise ValueError(f"eps must lie in [1e-9, 1e-3], got {eps}")
    _check(state, params, grid)
    from .minimize import Layout  # local import to avoid a cycle

    layout = Layout.build(params.num_gaps, grid.M)
    x0 = layout.pack(state.f, state.phi[1:], state.a).astype(np.longdouble)
    g = gradient(state, params, grid)
    ga = layout.pack(g.df, g.dphi, g.da)
    zrow = np.zeros((1, grid.M + 1), dtype=np.longdouble)

    def energy_of(x: np.ndarray) -> np.longdouble:
        f, dphi, a = layout.unpack(x)
        phi = np.vstack([zrow, dphi])
        b, j, fl = energy_arrays(f, phi, a, params, grid)
        return b + j + fl

    e0 = float(energy_of(x0))
    floor = 1e-6 * max(1.0, abs(e0))

    rng = np.random.default_rng(seed)
    n = x0.size
    idx = rng.permutation(n)[:min(n_samples, n)] if n > n_samples else np.arange(n)
    worst = 0.0
    for j in idx:
        xp = x0.copy()
        xp[j] += eps
        xm = x0.copy()
        xm[j] -= eps
        fd = float((energy_of(xp) - energy_of(xm)) / (2.0 * eps))
        if abs(ga[j]) < floor and abs(fd) < floor:
            continue
        worst = max(worst, abs(ga[j] - fd) / (abs(ga[j]) + 1e-12))
    return worst
