"""Approximate full conformal prediction without per-candidate refits.

One base fit anchored at a fixed output z replaces the refit at every
candidate y. Three approximation levels with matching score-error
envelopes tau are provided:

  uniform_stability   tau from the loss's uniform Lipschitz constant,
                      constant in y
  local_stability     tau from a y-local derivative difference, pointwise
                      tighter than the uniform envelope
  influence_function  first-order predictor correction along the weight
                      path from the z anchor to the y anchor, with a
                      second-order tau envelope

Upper and lower p-value curves built from the envelopes sandwich the
exact full conformal region; the grid measure of their difference is the
thickness gap diagnostic, with closed-form theoretical bounds alongside.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conformal import PredictionRegion, PValueCurve, YGrid
from .kernels import DEFAULT_CUTOFF, GramMatrix, KernelSpec, pseudo_inverse_apply
from .losses import LossSpec, SmoothnessConstants, loss_d, smoothness_constants
from .solver import (Predictor, WeightedProblem, anchor_z_weights,
                     augmented_problem, fit, hessian)

APPROX_KINDS = ("uniform_stability", "local_stability", "influence_function")
_LEVEL = {"uniform_stability": 0, "local_stability": 1, "influence_function": 2}

# grid chunk size for curve evaluation; bounds peak memory at roughly
# chunk * (n+1) floats per temporary
DEFAULT_CHUNK = 16384


@dataclass(frozen=True)
class ApproxMethod:
    """Approximation level plus the fixed anchor output z."""

    kind: str
    z_anchor: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in APPROX_KINDS:
            raise ValueError(f"unknown approximation kind {self.kind!r}")
        if not np.isfinite(self.z_anchor):
            raise ValueError("z_anchor must be finite")

    @property
    def level(self) -> int:
        return _LEVEL[self.kind]


@dataclass(frozen=True)
class TauProfile:
    """Score-error envelopes tau_i(y) in factored form.

    Every envelope here separates as tau_i(y) = scale[i] * radial[y]:
    scale carries the kernel diagonal geometry, radial the y-dependent
    stability radius. rho1, rho1_tilde, and rho2 cache the per-grid-point
    stability quantities when the level uses them.
    """

    scale: np.ndarray
    radial: np.ndarray
    rho1: np.ndarray | None = None
    rho1_tilde: np.ndarray | None = None
    rho2: np.ndarray | None = None

    def __post_init__(self) -> None:
        scale = np.asarray(self.scale, dtype=float)
        radial = np.atleast_1d(np.asarray(self.radial, dtype=float))
        if not (np.isfinite(scale).all() and np.isfinite(radial).all()):
            raise ValueError("tau factors must be finite")
        if (scale < 0).any() or (radial < 0).any():
            raise ValueError("tau factors must be nonnegative")
        object.__setattr__(self, "scale", scale)
        object.__setattr__(self, "radial", radial)

    def tau_matrix(self) -> np.ndarray:
        """Dense (grid points, n+1) envelope matrix."""
        return self.radial[:, None] * self.scale[None, :]

    @property
    def test_tau(self) -> np.ndarray:
        """Envelope on the test score, per grid point."""
        return self.radial * self.scale[-1]

    def sup_tau(self) -> float:
        """Supremum over indices and the grid."""
        return float(self.scale.max() * self.radial.max())


def _kernel_scale(gram: GramMatrix) -> np.ndarray:
    """sqrt(K_ii) * sqrt(K_qq) for every index i."""
    return np.sqrt(gram.diagonal) * np.sqrt(gram.diagonal[-1])


def tau0(gram: GramMatrix, constants: SmoothnessConstants, lam: float) -> np.ndarray:
    """Uniform-stability envelope, constant in y."""
    return _kernel_scale(gram) * (constants.gamma_score * constants.rho
                                  / (lam * gram.n))


def rho1(y, z: float, base: Predictor, loss: LossSpec):
    """Local stability radius: half the derivative gap between the two
    anchor outputs at the base fit's query prediction. Never exceeds rho."""
    m_q = base.query_prediction()
    val = 0.5 * np.abs(loss_d(loss, 1, y, m_q) - loss_d(loss, 1, z, m_q))
    return val


def tau1(gram: GramMatrix, constants: SmoothnessConstants, lam: float, rho1_val):
    """Local-stability envelope; rho1_val may be a scalar or a grid array.

    Returns shape (n+1,) for a scalar radius and (grid, n+1) otherwise.
    """
    radial = np.asarray(rho1_val, dtype=float) * (constants.gamma_score / (lam * gram.n))
    scale = _kernel_scale(gram)
    if radial.ndim == 0:
        return scale * float(radial)
    return radial[:, None] * scale[None, :]


def influence_direction(base: Predictor, cutoff: float = DEFAULT_CUTOFF) -> np.ndarray:
    """Pseudo-inverse of the base-fit risk Hessian applied to the query
    kernel column. Computed once per base fit; every influence quantity
    is a scalar multiple of this vector."""
    H = hessian(base.problem, base.coeffs)
    return pseudo_inverse_apply(H, base.problem.gram.query_column, cutoff)


def influence_vector(z_prime: float, base: Predictor,
                     direction: np.ndarray | None = None) -> np.ndarray:
    """Coefficients of the influence function at the perturbation output
    z_prime: -(1/(n+1)) * d2loss(z_prime, query prediction) * direction."""
    if direction is None:
        direction = influence_direction(base)
    m_q = base.query_prediction()
    d1 = loss_d(base.problem.loss, 1, float(z_prime), m_q)
    return (-d1 / base.problem.gram.n) * direction


def if_predictor(y: float, z: float, base: Predictor,
                 direction: np.ndarray | None = None) -> np.ndarray:
    """First-order coefficient update replacing the exact refit at y.

    Equals base coefficients minus the influence at z plus the influence
    at y; only the scalar derivative factor depends on y.
    """
    if direction is None:
        direction = influence_direction(base)
    m_q = base.query_prediction()
    loss = base.problem.loss
    c = loss_d(loss, 1, float(z), m_q) - loss_d(loss, 1, float(y), m_q)
    return base.coeffs + (c / base.problem.gram.n) * direction


def rho_tilde1(gram: GramMatrix, constants: SmoothnessConstants, lam: float, rho1_val):
    """Inflated local radius feeding the second-order bound."""
    kqq = gram.diagonal[-1]
    return (1.0 + kqq * constants.beta2 / (lam * gram.n)) * np.asarray(rho1_val, dtype=float)


def rho2(gram: GramMatrix, constants: SmoothnessConstants, lam: float, rho1_val):
    """Second-order stability radius controlling the influence-function
    predictor error."""
    kqq = gram.diagonal[-1]
    rt = rho_tilde1(gram, constants, lam, rho1_val)
    curvature = float(np.mean(gram.diagonal ** 1.5))
    return (0.5 * constants.xi * np.sqrt(kqq) * curvature * rt ** 2
            + 2.0 * lam * kqq * constants.beta2 * rt)


def _radial2(gram: GramMatrix, constants: SmoothnessConstants, lam: float, rho1_val):
    """min(gamma*rho2/(lam^3 (n+1)^2), 2*gamma*rho1/(lam (n+1)))."""
    np1 = gram.n
    g = constants.gamma_score
    r1 = np.asarray(rho1_val, dtype=float)
    r2 = rho2(gram, constants, lam, r1)
    return np.minimum(g * r2 / (lam ** 3 * np1 ** 2), 2.0 * g * r1 / (lam * np1))


def tau2(gram: GramMatrix, constants: SmoothnessConstants, lam: float, rho1_val):
    """Influence-function envelope; shapes as in tau1."""
    radial = _radial2(gram, constants, lam, rho1_val)
    scale = _kernel_scale(gram)
    if radial.ndim == 0:
        return scale * float(radial)
    return radial[:, None] * scale[None, :]


def if_error_bound(gram: GramMatrix, constants: SmoothnessConstants, lam: float, rho1_val):
    """RKHS-norm bound on exact refit minus influence-function predictor:
    sqrt(K_qq) * min(rho2/(lam^3 (n+1)^2), 2*rho1/(lam (n+1)))."""
    np1 = gram.n
    r1 = np.asarray(rho1_val, dtype=float)
    r2 = rho2(gram, constants, lam, r1)
    return np.sqrt(gram.diagonal[-1]) * np.minimum(
        r2 / (lam ** 3 * np1 ** 2), 2.0 * r1 / (lam * np1))


def sandwich_pvalues(data_scores, test_scores, data_taus, test_taus):
    """Upper and lower approximate p-values from scores and envelopes.

    The upper count treats every comparison in the direction favorable
    to inclusion (data score + tau against test score - tau); the lower
    count the opposite. Inputs broadcast; test_scores fixes the output
    length, and the data axis is the last one.
    """
    test_scores = np.atleast_1d(np.asarray(test_scores, dtype=float))
    data_scores = np.asarray(data_scores, dtype=float)
    data_taus = np.asarray(data_taus, dtype=float)
    test_taus = np.asarray(test_taus, dtype=float)
    n = data_scores.shape[-1]
    up_thresh = (test_scores - test_taus)[:, None]
    lo_thresh = (test_scores + test_taus)[:, None]
    upper_counts = (data_scores + data_taus >= up_thresh).sum(axis=-1)
    lower_counts = (data_scores - data_taus >= lo_thresh).sum(axis=-1)
    upper = (1.0 + upper_counts) / (n + 1.0)
    lower = (1.0 + lower_counts) / (n + 1.0)
    return upper, lower


@dataclass(frozen=True)
class ApproxCurveResult:
    """Sandwich p-value curves plus the envelopes and base fit behind them."""

    curve: PValueCurve
    taus: TauProfile
    base: Predictor


def base_fit(X, Y, x_query, z: float, lam: float, loss: LossSpec,
             kernel: KernelSpec) -> Predictor:
    """Single fit on the data plus the query input anchored at output z."""
    Y = np.asarray(Y, dtype=float)
    problem = augmented_problem(X, Y, x_query, (z, z), anchor_z_weights(Y.size),
                                lam, loss, kernel)
    return fit(problem)


def approx_pvalue_curves(X, Y, x_query, grid: YGrid, method: ApproxMethod,
                         lam: float, loss: LossSpec, kernel: KernelSpec,
                         base: Predictor | None = None,
                         chunk: int = DEFAULT_CHUNK) -> ApproxCurveResult:
    """Upper and lower approximate p-value curves over the grid.

    Levels 0 and 1 score every grid candidate with the base fit's
    predictions; level 2 applies the influence-function coefficient
    update per candidate. The grid is processed in chunks so very fine
    grids stay within memory.
    """
    Y = np.asarray(Y, dtype=float)
    n = Y.size
    z = method.z_anchor
    if base is None:
        base = base_fit(X, Y, x_query, z, lam, loss, kernel)
    gram = base.problem.gram
    constants = smoothness_constants(loss)
    preds = base.predictions()
    m_q = float(preds[n])
    data_scores = np.abs(Y - preds[:n])
    ys = grid.values
    np1 = gram.n
    g = constants.gamma_score
    scale = _kernel_scale(gram)

    level = method.level
    rho1_arr = rt_arr = r2_arr = None
    if level == 0:
        radial = np.full(grid.m, g * constants.rho / (lam * np1))
    else:
        rho1_arr = rho1(ys, z, base, loss)
        if level == 1:
            radial = g * rho1_arr / (lam * np1)
        else:
            rt_arr = rho_tilde1(gram, constants, lam, rho1_arr)
            r2_arr = rho2(gram, constants, lam, rho1_arr)
            radial = np.minimum(g * r2_arr / (lam ** 3 * np1 ** 2),
                                2.0 * g * rho1_arr / (lam * np1))
    profile = TauProfile(scale=scale, radial=radial, rho1=rho1_arr,
                         rho1_tilde=rt_arr, rho2=r2_arr)

    if level == 2:
        direction = influence_direction(base)
        k_dir = gram.entries @ direction
        d1_z = loss_d(loss, 1, float(z), m_q)
        coeff_shift = (d1_z - loss_d(loss, 1, ys, m_q)) / np1

    upper = np.empty(grid.m)
    lower = np.empty(grid.m)
    for start in range(0, grid.m, chunk):
        sl = slice(start, min(start + chunk, grid.m))
        rad = radial[sl]
        taus = rad[:, None] * scale[None, :n]
        test_taus = rad * scale[-1]
        if level < 2:
            scores = data_scores[None, :]
            test_scores = np.abs(ys[sl] - m_q)
        else:
            shifted = preds[None, :] + coeff_shift[sl, None] * k_dir[None, :]
            scores = np.abs(Y[None, :] - shifted[:, :n])
            test_scores = np.abs(ys[sl] - shifted[:, n])
        upper[sl], lower[sl] = sandwich_pvalues(scores, test_scores, taus, test_taus)
    curve = PValueCurve(grid=grid, upper=upper, lower=lower)
    return ApproxCurveResult(curve=curve, taus=profile, base=base)


def thickness_gap(upper: PredictionRegion, lower: PredictionRegion) -> float:
    """Grid measure of cells in the upper region but not the lower one.

    Bounds the Lebesgue distance between either sandwich region and the
    exact full conformal region.
    """
    if upper.grid != lower.grid:
        raise ValueError("thickness gap needs both regions on the same grid")
    return upper.grid.step * int(np.sum(upper.mask & ~lower.mask))


@dataclass(frozen=True)
class ThicknessBound:
    """Theoretical thickness bound; refined reports which branch of the
    influence-function bound applied (None for the other levels)."""

    value: float
    refined: bool | None = None
    beta: float | None = None


def thickness_bound(method: ApproxMethod, gram: GramMatrix,
                    constants: SmoothnessConstants, lam: float,
                    sup_tau: float | None = None) -> ThicknessBound:
    """Closed-form bound on the thickness gap.

    Levels 0 and 1 share the uniform-stability bound
    8 * gamma * rho * max_diag / (lam * (n+1)). Level 2 needs the grid
    supremum of its envelope: when beta = beta1 * max_diag / (lam (n+1))
    is below one, the refined bound 12/(1-beta) * sup_tau applies;
    otherwise the crude branch 8 * (sup_tau + rho-term) is returned and
    flagged via refined=False.
    """
    np1 = gram.n
    kmax = gram.diag_max
    uniform = 8.0 * constants.gamma_score * constants.rho * kmax / (lam * np1)
    if method.level < 2:
        return ThicknessBound(value=uniform)
    if sup_tau is None:
        raise ValueError("the influence-function bound needs the grid supremum of tau")
    beta = constants.beta1 * kmax / (lam * np1)
    if beta < 1.0:
        return ThicknessBound(value=12.0 / (1.0 - beta) * sup_tau,
                              refined=True, beta=beta)
    crude = 8.0 * (sup_tau + constants.gamma_score * constants.rho * kmax / (lam * np1))
    return ThicknessBound(value=crude, refined=False, beta=beta)
