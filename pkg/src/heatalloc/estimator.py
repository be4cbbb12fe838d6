"""Regularized least-squares calibration of radiator thermal parameters.

The season's device readings form a linear system: each integration
period contributes one row of normalized temperature integrals (hours)
and one total-energy measurement (kWh). The per-radiator parameters are
recovered by Tikhonov regularization anchored on a prior vector, with
the regularization weight picked at the corner of the L-curve.

Unit convention inside the solver: matrix entries in hours, energies in
kWh, so parameters come out in kW and are converted to W at the
boundary. The regularization weight is therefore dimensionful in these
implementation units.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array

from .domain import Dataset
from .thermal import column_entry, extract_method_series

DEFAULT_LAMBDA_GRID = np.logspace(-6.0, 2.0, 20)

W_PER_KW = 1000.0


class DegenerateLCurveError(RuntimeError):
    """The system is not ill-posed enough to need regularization."""


class SingularSystemError(np.linalg.LinAlgError):
    """Unregularized normal equations are numerically singular."""


@dataclass(frozen=True)
class SamplingMatrix:
    """The assembled (A, Q) pair: M periods x K radiators."""

    A: np.ndarray           # M x K, hours
    Q: np.ndarray           # M, kWh
    radiator_ids: tuple
    period_indices: tuple

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        Q = np.asarray(self.Q, dtype=float)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "Q", Q)
        if A.ndim != 2:
            raise ValueError("A must be 2-dimensional")
        m, k = A.shape
        if Q.shape != (m,):
            raise ValueError("Q length must match the row count of A")
        if len(self.radiator_ids) != k:
            raise ValueError("radiator labeling must match columns of A")
        if len(self.period_indices) != m:
            raise ValueError("period labeling must match rows of A")
        if np.any(A < 0):
            raise ValueError("matrix entries must be >= 0")
        if np.any(Q < 0):
            raise ValueError("total energies must be >= 0")

    @property
    def n_periods(self) -> int:
        return self.A.shape[0]

    @property
    def n_radiators(self) -> int:
        return self.A.shape[1]


@dataclass(frozen=True)
class EstimationResult:
    """Parameter estimates with covariance and solve diagnostics."""

    theta_hat: np.ndarray        # W
    covariance: np.ndarray       # K x K, (A^T A + lam I)^-1 in solver units
    lam: float
    residual_norm: float         # kWh
    prior_deviation_norm: float  # W
    n_samplings: int
    radiator_ids: tuple = ()
    negative_components: tuple = ()  # diagnostic: indices with theta_hat < 0

    def u_parameter_rel(self) -> np.ndarray:
        """Relative parameter uncertainty per radiator:
        sqrt(C_jj) / (sqrt(M) * theta_hat_j), in consistent solver units."""
        theta_kw = np.asarray(self.theta_hat) / W_PER_KW
        diag = np.sqrt(np.diag(self.covariance))
        return diag / (np.sqrt(max(self.n_samplings, 1)) * np.abs(theta_kw))

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "radiator_ids": list(self.radiator_ids),
            "theta_hat_w": [float(x) for x in self.theta_hat],
            "covariance_diag": [float(x) for x in np.diag(self.covariance)],
            "lambda": float(self.lam),
            "residual_norm_kwh": float(self.residual_norm),
            "prior_deviation_norm_w": float(self.prior_deviation_norm),
            "n_samplings": int(self.n_samplings),
            "negative_components": list(self.negative_components),
        }


@dataclass(frozen=True)
class LCurvePoint:
    lam: float
    residual_norm: float         # kWh
    prior_deviation_norm: float  # W
    curvature: float = float("nan")


def assemble(dataset: Dataset, method: str) -> SamplingMatrix:
    """Build the calibration system from a validated dataset."""
    radiator_ids = tuple(r.id for r in dataset.radiators)
    extracted = {rid: extract_method_series(dataset, method, rid)
                 for rid in radiator_ids}
    rows = []
    for period in dataset.periods:
        rows.append([column_entry(method, extracted[rid], period)
                     for rid in radiator_ids])
    return SamplingMatrix(
        A=np.array(rows, dtype=float).reshape(len(dataset.periods),
                                              len(radiator_ids)),
        Q=np.array(dataset.total_energy_per_period, dtype=float),
        radiator_ids=radiator_ids,
        period_indices=tuple(p.index for p in dataset.periods),
    )


def solve_rls(sm: SamplingMatrix, theta0_w, lam: float) -> EstimationResult:
    """Closed-form Tikhonov solve of the calibration system.

    theta_hat = (A^T A + lam I)^-1 (A^T Q + lam theta0), with theta0 and
    the returned estimate in W. Solved through a Cholesky factorization
    of the regularized normal equations; the covariance comes from the
    same factorization.
    """
    if lam < 0:
        raise ValueError("regularization weight must be >= 0")
    theta0_kw = np.asarray(theta0_w, dtype=float) / W_PER_KW
    A, Q = sm.A, sm.Q
    k = sm.n_radiators
    if theta0_kw.shape != (k,):
        raise ValueError(f"prior must have length {k}")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(Q))
            and np.all(np.isfinite(theta0_kw)) and np.isfinite(lam)):
        raise ValueError("non-finite inputs")

    lhs = A.T @ A + lam * np.eye(k)
    rhs = A.T @ Q + lam * theta0_kw
    if lam == 0.0:
        cond = np.linalg.cond(lhs)
        if not np.isfinite(cond) or cond > 1e12:
            raise SingularSystemError(
                "A^T A is numerically singular at lambda = 0")
    try:
        factor = cho_factor(lhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(str(exc)) from exc
    theta_kw = cho_solve(factor, rhs)
    covariance = cho_solve(factor, np.eye(k))
    covariance = 0.5 * (covariance + covariance.T)

    residual = float(np.linalg.norm(Q - A @ theta_kw))
    prior_dev = float(np.linalg.norm(theta_kw - theta0_kw)) * W_PER_KW
    theta_w = theta_kw * W_PER_KW
    negatives = tuple(int(i) for i in np.flatnonzero(theta_w < 0))
    return EstimationResult(
        theta_hat=theta_w,
        covariance=covariance,
        lam=float(lam),
        residual_norm=residual,
        prior_deviation_norm=prior_dev,
        n_samplings=sm.n_periods,
        radiator_ids=sm.radiator_ids,
        negative_components=negatives,
    )


def _lcurve_curvature(lams, residuals, prior_devs) -> np.ndarray:
    """Discrete curvature of (log residual, log prior deviation) traced
    against log lambda, by three-point finite differences."""
    t = np.log(lams)
    x = np.log(residuals)
    y = np.log(prior_devs)
    dx = np.gradient(x, t)
    dy = np.gradient(y, t)
    ddx = np.gradient(dx, t)
    ddy = np.gradient(dy, t)
    denom = (dx * dx + dy * dy) ** 1.5
    with np.errstate(divide="ignore", invalid="ignore"):
        kappa = (dx * ddy - dy * ddx) / denom
    return np.where(np.isfinite(kappa), kappa, -np.inf)


def lcurve_select(sm: SamplingMatrix, theta0_w, lambda_grid=None):
    """Pick the regularization weight at the L-curve corner.

    Returns ``(lambda_star, points)``. The grid must be positive
    ascending with at least 5 points spanning at least 4 decades. Raises
    DegenerateLCurveError when the unregularized fit is already exact:
    such a system has no corner and needs no regularization.
    """
    grid = np.asarray(DEFAULT_LAMBDA_GRID if lambda_grid is None
                      else lambda_grid, dtype=float)
    if grid.size < 5:
        raise ValueError("lambda grid needs at least 5 points")
    if np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("lambda grid must be positive and ascending")
    if grid[-1] / grid[0] < 1e4:
        raise ValueError("lambda grid must span at least 4 decades")

    q_norm = float(np.linalg.norm(sm.Q))
    theta_ls, ls_res, *_ = np.linalg.lstsq(sm.A, sm.Q, rcond=None)
    ls_residual = float(np.linalg.norm(sm.Q - sm.A @ theta_ls))
    if ls_residual <= 1e-9 * max(q_norm, 1e-300):
        raise DegenerateLCurveError(
            "least-squares fit is already exact: the problem is not "
            "ill-posed enough to need regularization")

    results = [solve_rls(sm, theta0_w, lam) for lam in grid]
    residuals = np.array([r.residual_norm for r in results])
    prior_devs = np.array([r.prior_deviation_norm for r in results])
    if np.ptp(residuals) <= 1e-12 * max(residuals.max(), 1e-300):
        raise DegenerateLCurveError(
            "residual norm is flat across the grid: the problem is not "
            "ill-posed enough to need regularization")
    if np.any(residuals <= 0) or np.any(prior_devs <= 0):
        raise DegenerateLCurveError(
            "L-curve has a vanishing norm; regularization is not needed")

    curvature = _lcurve_curvature(grid, residuals, prior_devs)
    interior = curvature.copy()
    interior[0] = interior[-1] = -np.inf  # one-sided stencils, unreliable
    best = int(len(grid) - 1 - np.argmax(interior[::-1]))  # ties -> larger lam
    points = [LCurvePoint(lam=float(l), residual_norm=float(r),
                          prior_deviation_norm=float(p), curvature=float(c))
              for l, r, p, c in zip(grid, residuals, prior_devs, curvature)]
    return float(grid[best]), points


def recalibrate(previous: EstimationResult, new_data: SamplingMatrix,
                lam: float) -> EstimationResult:
    """Re-run the solve on fresh data using the previous estimate as prior."""
    if len(previous.theta_hat) != new_data.n_radiators:
        raise ValueError("previous estimate dimension does not match new data")
    return solve_rls(new_data, previous.theta_hat, lam)


class RlsCalibrator(BaseEstimator):
    """Scikit-learn style front end for the Tikhonov calibration solve.

    Parameters
    ----------
    alpha : float or "auto"
        Regularization weight; "auto" selects it by the L-curve corner.
    theta0 : array-like of shape (n_radiators,) or None
        Prior parameter vector in W; zeros when None.
    lambda_grid : array-like or None
        Grid used when ``alpha="auto"``.
    """

    def __init__(self, alpha=1.0, theta0=None, lambda_grid=None):
        self.alpha = alpha
        self.theta0 = theta0
        self.lambda_grid = lambda_grid

    def fit(self, X, y):
        X = check_array(X, dtype=float)
        y = check_array(y, dtype=float, ensure_2d=False)
        sm = SamplingMatrix(A=X, Q=y,
                            radiator_ids=tuple(range(X.shape[1])),
                            period_indices=tuple(range(X.shape[0])))
        theta0 = (np.zeros(X.shape[1]) if self.theta0 is None
                  else np.asarray(self.theta0, dtype=float))
        if self.alpha == "auto":
            alpha, points = lcurve_select(sm, theta0, self.lambda_grid)
            self.lcurve_points_ = points
        else:
            alpha = float(self.alpha)
        result = solve_rls(sm, theta0, alpha)
        self.alpha_ = alpha
        self.result_ = result
        self.theta_ = result.theta_hat
        self.covariance_ = result.covariance
        return self

    def predict(self, X):
        X = check_array(X, dtype=float)
        return X @ (self.theta_ / W_PER_KW)
