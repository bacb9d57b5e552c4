"""Model parameters, 1D grids and reduced phase coordinates.

Units follow the standard non-dimensionalization of the Lawrence-Doniach
free energy: lengths in units of the in-plane penetration depth, magnetic
fields in units of H_c/kappa, and the interlayer (Josephson) coupling r
related to the Josephson penetration depth by r = 2 / (lambda_J^2 kappa^2 p^2).

The stack has N+1 superconducting planes z_n = n*p, n = 0..N, of width 2L
in x, so there are N insulating gaps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameters

#: |sin(H p L)| below this marks the applied field as degenerate.
DEGENERACY_TOL = 1e-9

#: Hard floor on the number of grid intervals.
MIN_INTERVALS = 16


@dataclass(frozen=True)
class LdParameters:
    """Constants of the layered-superconductor model.

    Attributes:
        num_gaps: N, number of insulating gaps (N+1 superconducting planes).
        half_width: L, half sample width in units of the penetration depth.
        spacing: p, interplane spacing, 0 < p <= 1.
        kappa: Ginzburg-Landau parameter, kappa >= 1 in the validity regime.
        applied_field: H, external field in units of H_c/kappa.
        coupling: r, dimensionless Josephson coupling (the small parameter).
    """

    num_gaps: int
    half_width: float
    spacing: float
    kappa: float
    applied_field: float
    coupling: float

    # Short aliases matching the usual symbols.
    @property
    def N(self) -> int:
        return self.num_gaps

    @property
    def L(self) -> float:
        return self.half_width

    @property
    def p(self) -> float:
        return self.spacing

    @property
    def H(self) -> float:
        return self.applied_field

    @property
    def r(self) -> float:
        return self.coupling

    @property
    def hpl(self) -> float:
        """The phase H*p*L that controls degeneracy and vortex nucleation."""
        return self.applied_field * self.spacing * self.half_width

    @property
    def lambda_j(self) -> float:
        """Josephson penetration depth, from r = 2/(lambda_J^2 kappa^2 p^2)."""
        if self.coupling <= 0.0:
            return math.inf
        return math.sqrt(2.0 / (self.coupling * self.kappa**2 * self.spacing**2))

    @property
    def is_degenerate(self) -> bool:
        """True when sin(H p L) vanishes to within DEGENERACY_TOL."""
        return abs(math.sin(self.hpl)) < DEGENERACY_TOL

    def with_coupling(self, r: float) -> "LdParameters":
        return LdParameters(self.num_gaps, self.half_width, self.spacing,
                            self.kappa, self.applied_field, r)

    def with_field(self, H: float) -> "LdParameters":
        return LdParameters(self.num_gaps, self.half_width, self.spacing,
                            self.kappa, H, self.coupling)


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of validate(): hard errors and soft warnings, never raised."""

    errors: tuple[str, ...]
    warnings: tuple[str, ...]
    degenerate: bool

    @property
    def valid(self) -> bool:
        return not self.errors


def validate(params: LdParameters) -> ValidationReport:
    """Check the model invariants.

    Non-positive dimensions are hard errors; the regime assumptions
    kappa >= 1 and L >= 1 and a degenerate applied field sin(HpL) = 0
    are warnings (degenerate fields only become hard errors in the
    critical-point census).
    """
    errors: list[str] = []
    warnings: list[str] = []

    if params.num_gaps < 1:
        errors.append(f"num_gaps must be >= 1 (at least one gap), got {params.num_gaps}")
    if not (params.half_width > 0.0 and math.isfinite(params.half_width)):
        errors.append(f"half_width must be positive and finite, got {params.half_width}")
    if not (0.0 < params.spacing <= 1.0):
        errors.append(f"spacing must lie in (0, 1], got {params.spacing}")
    if not (params.kappa > 0.0 and math.isfinite(params.kappa)):
        errors.append(f"kappa must be positive and finite, got {params.kappa}")
    if not (params.applied_field > 0.0 and math.isfinite(params.applied_field)):
        errors.append(f"applied_field must be positive and finite, got {params.applied_field}")
    if params.coupling < 0.0 or not math.isfinite(params.coupling):
        errors.append(f"coupling must be >= 0 and finite, got {params.coupling}")

    if not errors:
        if params.kappa < 1.0:
            warnings.append(f"kappa = {params.kappa} < 1 is outside the validity regime")
        if params.half_width < 1.0:
            warnings.append(f"half_width = {params.half_width} < 1 is outside the validity regime")
        degenerate = params.is_degenerate
        if degenerate:
            warnings.append(
                f"applied field is degenerate: sin(HpL) = {math.sin(params.hpl):.3e} at HpL = {params.hpl:.6g}"
            )
    else:
        degenerate = False

    return ValidationReport(tuple(errors), tuple(warnings), degenerate)


def require_valid(params: LdParameters) -> None:
    """Raise InvalidParameters if validate() reports any hard error."""
    report = validate(params)
    if not report.valid:
        raise InvalidParameters("; ".join(report.errors))


def default_dx(params: LdParameters) -> float:
    """Default spacing resolving both the coherence length and field winding:
    dx = min(1/kappa, 1/(H p)) / 10."""
    return min(1.0 / params.kappa, 1.0 / (params.applied_field * params.spacing)) / 10.0


@dataclass(frozen=True)
class Grid1D:
    """Uniform staggered grid on [-L, L].

    Amplitudes and phases live at the M+1 nodes, tangential gauge-field
    traces at the M midpoints.
    """

    num_intervals: int
    dx: float
    nodes: np.ndarray = field(repr=False)
    mids: np.ndarray = field(repr=False)

    @property
    def M(self) -> int:
        return self.num_intervals

    @property
    def half_width(self) -> float:
        return -float(self.nodes[0])

    @staticmethod
    def build(params: LdParameters, dx: float | None = None) -> "Grid1D":
        """Build the grid for params; dx overrides the default rule but the
        interval count is floored at MIN_INTERVALS."""
        require_valid(params)
        target = default_dx(params) if dx is None else float(dx)
        if not (target > 0.0 and math.isfinite(target)):
            raise InvalidParameters(f"dx must be positive and finite, got {target}")
        M = max(int(math.ceil(2.0 * params.half_width / target - 1e-12)), MIN_INTERVALS)
        actual = 2.0 * params.half_width / M
        nodes = np.linspace(-params.half_width, params.half_width, M + 1)
        mids = 0.5 * (nodes[:-1] + nodes[1:])
        nodes.setflags(write=False)
        mids.setflags(write=False)
        return Grid1D(M, actual, nodes, mids)

    def trapezoid_weights(self) -> np.ndarray:
        """Trapezoid quadrature weights over the nodes."""
        w = np.full(self.num_intervals + 1, self.dx)
        w[0] = w[-1] = 0.5 * self.dx
        return w


def wrap_angle(delta: np.ndarray | float) -> np.ndarray | float:
    """Reduce an angle to the canonical representative in [0, 2*pi).

    np.mod can round a tiny negative input up to exactly 2*pi; that seam
    value is folded back to 0 to keep the interval half open.
    """
    out = np.mod(delta, 2.0 * np.pi)
    return np.where(out >= 2.0 * np.pi, 0.0, out)


def wrap_to_pi(delta: np.ndarray | float) -> np.ndarray | float:
    """Reduce an angle difference to (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(delta), 2.0 * np.pi)


@dataclass(frozen=True)
class PhaseConfig:
    """Reduced coordinates (delta_1, ..., delta_N) of the degenerate manifold.

    delta_n is the constant part of the gauge-invariant phase difference
    across gap n; stored representative lies in [0, 2*pi).
    """

    delta: np.ndarray

    def __post_init__(self):
        arr = wrap_angle(np.asarray(self.delta, dtype=float).reshape(-1)).copy()
        arr.setflags(write=False)
        object.__setattr__(self, "delta", arr)

    @property
    def num_gaps(self) -> int:
        return self.delta.shape[0]

    @staticmethod
    def constant(value: float, num_gaps: int) -> "PhaseConfig":
        return PhaseConfig(np.full(num_gaps, float(value)))

    def alphas(self) -> np.ndarray:
        """Per-plane phase offsets alpha_n = sum_{m<=n} delta_m, alpha_0 = 0."""
        return np.concatenate([[0.0], np.cumsum(self.delta)])


def as_phase_config(delta, num_gaps: int) -> PhaseConfig:
    """Coerce a PhaseConfig, scalar, array, or None (all zeros) to PhaseConfig."""
    if delta is None:
        return PhaseConfig(np.zeros(num_gaps))
    if isinstance(delta, PhaseConfig):
        if delta.num_gaps != num_gaps:
            raise InvalidParameters(
                f"PhaseConfig has {delta.num_gaps} gaps, expected {num_gaps}")
        return delta
    arr = np.asarray(delta, dtype=float)
    if arr.ndim == 0:
        return PhaseConfig.constant(float(arr), num_gaps)
    if arr.shape != (num_gaps,):
        raise InvalidParameters(f"delta has shape {arr.shape}, expected ({num_gaps},)")
    return PhaseConfig(arr)
