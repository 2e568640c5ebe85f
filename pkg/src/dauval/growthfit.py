"""Logistic growth fitting and bootstrap upper-confidence carrying capacities.

The closed form of dU/dt = r*U*(1 - U/K) with U(0) = u0 is

    U(t) = K * u0 * exp(r*t) / (K - u0 + u0 * exp(r*t))

fitted here by damped Gauss-Newton least squares (scipy's Levenberg-
Marquardt) in log-parameter space, from a deterministic initialization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfidenceFailureError, FitFailureError

MAX_ITER = 500
REL_TOL = 1e-10
MIN_RESAMPLES = 200
MAX_BOOT_FAILURE_FRACTION = 0.20


@dataclass(frozen=True)
class LogisticParams:
    """Converged logistic parameters plus the achieved residual sum of squares."""

    K: float
    r: float
    u0: float
    rss: float

    def __post_init__(self):
        if not (self.K > 0 and self.r > 0 and 0 < self.u0 < self.K):
            raise FitFailureError(
                f"invalid logistic parameters K={self.K}, r={self.r}, u0={self.u0}",
                best_params=(self.K, self.r, self.u0),
            )
        if self.rss < 0:
            raise FitFailureError("negative rss")


def logistic_value(params: LogisticParams, t):
    """Evaluate the logistic closed form at t days since the series origin."""
    return _logistic(params.K, params.r, params.u0, np.asarray(t, dtype=float))


def _logistic(K, r, u0, t):
    # K / (1 + B*exp(-r*t)) is overflow-safe for large r*t, unlike the
    # exp(+r*t) form.
    with np.errstate(over="ignore"):
        return K / (1.0 + ((K - u0) / u0) * np.exp(-r * t))


def _residual_and_jac(theta, t, y):
    """Residuals model - y and the Jacobian in (logK, logr, logu0)."""
    with np.errstate(over="ignore", invalid="ignore"):
        K, r, u0 = np.exp(theta)
        e = np.exp(-r * t)
        d = (K - u0) * e + u0  # D * exp(-r*t), always positive and finite
        u = K * u0 / d
        du_dK = u0 * (d - K * e) / d**2
        du_dr = K * u0 * t * (K - u0) * e / d**2
        du_du0 = K**2 * e / d**2
    jac = np.column_stack([K * du_dK, r * du_dr, u0 * du_du0])
    return u - y, np.nan_to_num(jac)


def _check_points(points):
    pts = sorted((float(t), float(y)) for t, y in points)
    if len(pts) < 4:
        raise ValueError(f"need >= 4 points, got {len(pts)}")
    t = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    if np.any(y <= 0):
        raise ValueError("all y values must be positive")
    if len(np.unique(t)) < 3:
        raise ValueError("need >= 3 distinct t values")
    return t, y


def _initial_guess(t, y):
    """Deterministic start: K slightly above the data, r from a logit slope."""
    K0 = 1.05 * float(y.max())
    u00 = float(y[0])
    z = np.log(y / (K0 - y))
    slope = np.polyfit(t, z, 1)[0]
    r0 = float(slope) if np.isfinite(slope) and slope > 0 else 1e-4
    u00 = min(u00, 0.999 * K0)
    return np.log([K0, r0, u00])


def _levmar(fun, theta0):
    """Damped Gauss-Newton descent with a Levenberg-Marquardt trust factor.

    Stops when the relative rss drop falls below REL_TOL or the gradient
    vanishes; returns (theta, rss, converged, iterations).
    """
    theta = np.asarray(theta0, dtype=float)
    f, jac = fun(theta)
    cost = float(f @ f)
    lam = 1e-3
    for it in range(1, MAX_ITER + 1):
        grad = jac.T @ f
        hess = jac.T @ jac
        damp = np.diag(np.maximum(np.diag(hess), 1e-12))
        accepted = False
        for _ in range(50):
            try:
                step = np.linalg.solve(hess + lam * damp, grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            cand = theta - step
            f_c, jac_c = fun(cand)
            cost_c = float(f_c @ f_c)
            if np.isfinite(cost_c) and cost_c <= cost:
                rel_drop = (cost - cost_c) / max(cost, 1e-300)
                theta, f, jac, cost = cand, f_c, jac_c, cost_c
                lam = max(lam * 0.3, 1e-12)
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            # No damping gives an improvement: at a (local) minimum iff the
            # gradient has effectively vanished.
            converged = bool(np.max(np.abs(grad)) < 1e-8 * (1.0 + cost))
            return theta, cost, converged, it
        if rel_drop < REL_TOL:
            return theta, cost, True, it
    return theta, cost, False, MAX_ITER


def fit_logistic(points, x0=None) -> LogisticParams:
    """Least-squares logistic fit; deterministic for a fixed input.

    ``x0`` optionally warm-starts the iteration from known parameters
    (K, r, u0), used by the bootstrap to speed up refits.
    """
    t, y = _check_points(points)
    theta0 = np.log(x0) if x0 is not None else _initial_guess(t, y)
    theta, rss, converged, iters = _levmar(
        lambda th: _residual_and_jac(th, t, y), theta0
    )
    with np.errstate(over="ignore"):
        K, r, u0 = np.exp(theta)
    if not converged or not np.all(np.isfinite([K, r, u0])):
        raise FitFailureError(
            f"logistic fit did not converge within {iters} iterations",
            best_params=(K, r, u0),
            diagnostics={"rss": rss, "iterations": iters},
        )
    return LogisticParams(K=float(K), r=float(r), u0=float(u0), rss=rss)


def fit_logistic_fixed_k(points, K_fixed: float) -> LogisticParams:
    """Logistic fit over (r, u0) only, with the carrying capacity pinned."""
    t, y = _check_points(points)
    if K_fixed <= float(y.max()):
        raise ValueError(f"K_fixed={K_fixed} must exceed max(y)={y.max()}")
    logK = np.log(K_fixed)

    def fun(th):
        resid, jac = _residual_and_jac(np.concatenate([[logK], th]), t, y)
        return resid, jac[:, 1:]

    theta, rss, converged, iters = _levmar(fun, _initial_guess(t, y)[1:])
    with np.errstate(over="ignore"):
        r, u0 = np.exp(theta)
    if not converged or not np.all(np.isfinite([r, u0])):
        raise FitFailureError(
            f"fixed-K logistic fit did not converge within {iters} iterations",
            best_params=(K_fixed, r, u0),
            diagnostics={"rss": rss, "iterations": iters},
        )
    return LogisticParams(K=float(K_fixed), r=float(r), u0=float(u0), rss=rss)


def bootstrap_k_samples(points, fit: LogisticParams, n_resamples: int, seed):
    """Carrying capacities from residual-bootstrap refits.

    Residuals of the converged fit are resampled with replacement, added
    back onto the fitted curve and the model refitted. Each resample draws
    from its own seeded substream so results are schedule-independent.
    """
    if n_resamples < MIN_RESAMPLES:
        raise ValueError(f"n_resamples must be >= {MIN_RESAMPLES}")
    t, y = _check_points(points)
    fitted = logistic_value(fit, t)
    resid = y - fitted
    children = np.random.SeedSequence(seed).spawn(n_resamples)
    ks = []
    failures = 0
    warm = (fit.K, fit.r, fit.u0)
    for child in children:
        rng = np.random.default_rng(child)
        y_boot = fitted + rng.choice(resid, size=len(resid), replace=True)
        if np.any(y_boot <= 0):
            failures += 1
            continue
        try:
            ks.append(fit_logistic(list(zip(t, y_boot)), x0=warm).K)
        except FitFailureError:
            failures += 1
    if failures > MAX_BOOT_FAILURE_FRACTION * n_resamples:
        raise ConfidenceFailureError(
            f"{failures}/{n_resamples} bootstrap refits failed"
        )
    return np.array(ks)


def k_upper_confidence(points, fit: LogisticParams, level: float,
                       n_resamples: int = 1000, seed=0) -> float:
    """One-sided upper bootstrap quantile of the carrying capacity."""
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    ks = bootstrap_k_samples(points, fit, n_resamples, seed)
    return float(np.quantile(ks, level))
