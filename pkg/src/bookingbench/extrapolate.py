"""Per-pattern completion of partial booking curves by univariate forecasts.

Each pattern is extrapolated from its own prefix only, never from the rest of
the collection, so an outlying prefix stays outlying after completion.  SES
smooths the per-interval increments and extends them as a constant; ARIMA and
IGARCH act on the d-differenced cumulative series.  Completed booking curves
are clamped to stay non-decreasing and within [last observed value, capacity].

The ARIMA order search picks d in {0, 1, 2} by minimal sample variance of the
differenced series (smaller d wins ties), then grid-searches p, q in {0..3}
by corrected AIC under conditional-sum-of-squares estimation.  Non-stationary
or non-invertible fits are inadmissible; if nothing admissible remains the
pattern falls back to SES with alpha = 0.5 and says so in its model summary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares, minimize
from scipy.signal import lfilter

SES_DEFAULT_ALPHA = 0.5
ARIMA_MAX_ORDER = 3
ROOT_MARGIN = 1.001


@dataclass
class CompletedPattern:
    """A prefix plus its model-based suffix, both on the cumulative scale."""

    observed: np.ndarray
    suffix: np.ndarray
    method: str
    model: dict

    @property
    def values(self) -> np.ndarray:
        return np.concatenate([self.observed, self.suffix])


def _clamp_suffix(suffix: np.ndarray, last: float, capacity) -> np.ndarray:
    out = np.maximum.accumulate(np.maximum(suffix, last))
    if capacity is not None:
        out = np.minimum(out, capacity)
    return out


def _finish(prefix, raw_suffix, method, model, clamp, capacity) -> CompletedPattern:
    prefix = np.asarray(prefix, dtype=float)
    suffix = np.asarray(raw_suffix, dtype=float)
    if clamp and len(suffix):
        suffix = _clamp_suffix(suffix, prefix[-1], capacity)
    return CompletedPattern(observed=prefix, suffix=suffix, method=method, model=model)


# --- simple exponential smoothing -------------------------------------------

def ses_extrapolate(
    prefix,
    horizon: int,
    alpha: float = SES_DEFAULT_ALPHA,
    clamp: bool = True,
    capacity=None,
) -> CompletedPattern:
    """Constant-increment forecast from the SES level of the increments.

    The level starts at the first increment and updates as
    level <- alpha * increment + (1 - alpha) * level.
    """
    prefix = np.asarray(prefix, dtype=float)
    tau = len(prefix)
    if tau < 2:
        raise ValueError("need at least 2 observed intervals")
    if not 0.0 < alpha <= 1.0:
        raise ValueError("smoothing constant must lie in (0, 1]")
    increments = np.diff(prefix, prepend=0.0)
    level = increments[0]
    for z in increments[1:]:
        level = alpha * z + (1.0 - alpha) * level
    steps = np.arange(1, horizon - tau + 1)
    raw = prefix[-1] + level * steps
    return _finish(prefix, raw, "ses", {"alpha": alpha, "level": float(level)}, clamp, capacity)


# --- ARIMA -------------------------------------------------------------------

def select_diff_order(series, max_d: int = 2) -> int:
    """Smallest d in {0..max_d} whose d-differenced series has minimal sample
    variance (ties go to the smaller d)."""
    x = np.asarray(series, dtype=float)
    best_d, best_var = 0, np.inf
    for d in range(max_d + 1):
        if len(x) < 3:
            break
        v = float(np.var(x, ddof=1))
        if v < best_var - 1e-12:
            best_d, best_var = d, v
        x = np.diff(x)
    return best_d


def _css_residuals(x: np.ndarray, mean: float, phi: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Conditional-sum-of-squares residuals of a centered ARMA recursion with
    the moving-average terms entering negatively (x - m = AR - theta * eps).

    Residuals are conditioned to zero before index p.  The AR part is a plain
    lagged combination; the MA feedback eps_t = w_t + sum theta_j eps_{t-j}
    is a linear recurrence evaluated by lfilter.
    """
    p, q = len(phi), len(theta)
    z = x - mean
    n = len(z)
    w = z[p:].copy()
    for i in range(p):
        w -= phi[i] * z[p - 1 - i : n - 1 - i]
    if q == 0:
        return w
    return lfilter([1.0], np.concatenate([[1.0], -np.asarray(theta)]), w)


def _poly_roots_outside(coefs: np.ndarray, sign: float) -> bool:
    """True when 1 + sign * c_1 z + ... + sign * c_k z^k has all roots with
    modulus above ROOT_MARGIN."""
    if len(coefs) == 0:
        return True
    poly = np.concatenate([[1.0], sign * coefs])
    roots = np.roots(poly[::-1])
    return bool(np.all(np.abs(roots) > ROOT_MARGIN)) if len(roots) else True


@dataclass
class ArmaFit:
    p: int
    q: int
    mean: float
    phi: np.ndarray
    theta: np.ndarray
    sse: float
    n_resid: int
    aicc: float
    admissible: bool


def _hannan_rissanen_start(x: np.ndarray, p: int, q: int) -> np.ndarray:
    """Long-AR residual regression for starting values."""
    mean = float(x.mean())
    z = x - mean
    n = len(z)
    start = np.zeros(1 + p + q)
    start[0] = mean
    if p == 0 and q == 0:
        return start
    order = min(max(p + q, 2), n // 2)
    eps = z.copy()
    if order >= 1 and n > order + 1:
        rows = np.stack([z[order - 1 - i : n - 1 - i] for i in range(order)], axis=1)
        coef, *_ = np.linalg.lstsq(rows, z[order:], rcond=None)
        eps = np.zeros(n)
        eps[order:] = z[order:] - rows @ coef
    k = max(p, q)
    if n > k + 1:
        cols = [z[k - 1 - i : n - 1 - i] for i in range(p)]
        cols += [-eps[k - 1 - j : n - 1 - j] for j in range(q)]
        design = np.stack(cols, axis=1) if cols else np.empty((n - k, 0))
        coef, *_ = np.linalg.lstsq(design, z[k:], rcond=None)
        start[1 : 1 + p] = np.clip(coef[:p], -0.95, 0.95)
        start[1 + p :] = np.clip(coef[p:], -0.95, 0.95)
    return start


def fit_arma(series, p: int, q: int) -> ArmaFit:
    """CSS fit of an ARMA(p, q) with mean; pure AR uses the closed-form
    least-squares solution."""
    x = np.asarray(series, dtype=float)
    n = len(x)
    n_resid = n - p
    k = p + q + 2  # mean, ARMA coefficients, innovation variance
    if n_resid <= k + 1:
        raise ValueError("series too short for this order")

    if q == 0 and p == 0:
        mean = float(x.mean())
        resid = x - mean
        sse = float(resid @ resid)
        params = (mean, np.empty(0), np.empty(0))
    elif q == 0:
        rows = np.stack([x[p - 1 - i : n - 1 - i] for i in range(p)], axis=1)
        design = np.column_stack([np.ones(n - p), rows])
        coef, *_ = np.linalg.lstsq(design, x[p:], rcond=None)
        phi = coef[1:]
        phi_sum = float(phi.sum())
        mean = float(coef[0] / (1.0 - phi_sum)) if abs(1.0 - phi_sum) > 1e-8 else float(x.mean())
        resid = x[p:] - design @ coef
        sse = float(resid @ resid)
        params = (mean, phi, np.empty(0))
    else:
        start = _hannan_rissanen_start(x, p, q)

        def resid_fn(theta_vec):
            return _css_residuals(x, theta_vec[0], theta_vec[1 : 1 + p], theta_vec[1 + p :])

        sol = least_squares(
            resid_fn, start, method="lm", max_nfev=120, ftol=1e-7, xtol=1e-7, gtol=1e-7
        )
        resid = sol.fun
        sse = float(resid @ resid)
        params = (float(sol.x[0]), sol.x[1 : 1 + p].copy(), sol.x[1 + p :].copy())

    mean, phi, theta = params
    sigma2 = max(sse / n_resid, 1e-12)
    aicc = n_resid * math.log(sigma2) + 2 * k
    if n_resid - k - 1 > 0:
        aicc += 2 * k * (k + 1) / (n_resid - k - 1)
    else:
        aicc = math.inf
    admissible = _poly_roots_outside(phi, -1.0) and _poly_roots_outside(theta, -1.0)
    return ArmaFit(
        p=p, q=q, mean=mean, phi=np.asarray(phi), theta=np.asarray(theta),
        sse=sse, n_resid=n_resid, aicc=aicc, admissible=admissible,
    )


def _arma_forecast(fit: ArmaFit, x: np.ndarray, steps: int) -> np.ndarray:
    """Iterated multi-step forecast with future innovations at zero."""
    p, q = fit.p, fit.q
    z = list(x - fit.mean)
    eps_full = np.zeros(len(x))
    if p or q:
        eps_full[p:] = _css_residuals(x, fit.mean, fit.phi, fit.theta)
    eps = list(eps_full)
    out = []
    for _ in range(steps):
        ar = sum(fit.phi[i] * z[-1 - i] for i in range(p))
        ma = sum(-fit.theta[j] * eps[-1 - j] for j in range(q))
        nxt = ar + ma
        z.append(nxt)
        eps.append(0.0)
        out.append(nxt + fit.mean)
    return np.asarray(out)


def _undifference(forecast: np.ndarray, tail: list[np.ndarray]) -> np.ndarray:
    """Integrate a forecast of the d-differenced series back to levels.
    ``tail`` holds the last value of each intermediate differencing level,
    from levels (d=0) down to the (d-1)-differenced series."""
    out = forecast
    for last in reversed(tail):
        out = last + np.cumsum(out)
    return out


def _difference_stack(x: np.ndarray, d: int):
    tail = []
    cur = x
    for _ in range(d):
        tail.append(cur[-1])
        cur = np.diff(cur)
    return cur, tail


def arima_extrapolate(
    prefix,
    horizon: int,
    max_order: int = ARIMA_MAX_ORDER,
    clamp: bool = True,
    capacity=None,
) -> CompletedPattern:
    """AICc-selected ARIMA completion of a partial series."""
    prefix = np.asarray(prefix, dtype=float)
    tau = len(prefix)
    if tau < 5:
        raise ValueError("need at least 5 observed intervals")
    steps = horizon - tau
    d = select_diff_order(prefix)
    x, tail = _difference_stack(prefix, d)

    best: ArmaFit | None = None
    for p in range(max_order + 1):
        for q in range(max_order + 1):
            try:
                fit = fit_arma(x, p, q)
            except (ValueError, np.linalg.LinAlgError):
                continue
            if not fit.admissible:
                continue
            if best is None or fit.aicc < best.aicc:
                best = fit
    if best is None:
        fallback = ses_extrapolate(prefix, horizon, alpha=0.5, clamp=clamp, capacity=capacity)
        fallback.method = "arima"
        fallback.model = {"fallback": "ses", "alpha": 0.5}
        return fallback

    raw = _undifference(_arma_forecast(best, x, steps), tail)
    model = {
        "order": (best.p, d, best.q),
        "mean": best.mean,
        "phi": best.phi.tolist(),
        "theta": best.theta.tolist(),
        "aicc": best.aicc,
    }
    return _finish(prefix, raw, "arima", model, clamp, capacity)


# --- IGARCH ------------------------------------------------------------------

@dataclass
class IgarchFit:
    mean: float
    omega: float
    alpha: float
    nll: float

    @property
    def beta(self) -> float:
        return 1.0 - self.alpha


def fit_igarch(series) -> IgarchFit:
    """Gaussian quasi-likelihood fit of an integrated GARCH(1, 1) where the
    ARCH and GARCH loadings sum to one."""
    x = np.asarray(series, dtype=float)
    n = len(x)
    if n < 10:
        raise ValueError("need at least 10 observations")
    base_var = float(np.var(x, ddof=0))
    if base_var <= 1e-12:
        raise ValueError("degenerate variance; IGARCH undefined")

    def nll(theta):
        m, log_w, a = theta
        w = math.exp(log_w)
        e = x - m
        s2 = base_var
        total = 0.0
        for t in range(n):
            if t > 0:
                s2 = w + a * e[t - 1] ** 2 + (1.0 - a) * s2
            s2 = max(s2, 1e-12)
            total += math.log(s2) + e[t] ** 2 / s2
        return 0.5 * total

    start = np.array([float(x.mean()), math.log(base_var * 0.1), 0.2])
    sol = minimize(
        nll,
        start,
        method="L-BFGS-B",
        bounds=[(None, None), (math.log(1e-10), math.log(base_var * 10 + 1e-9)), (1e-4, 0.9999)],
    )
    if not sol.success and not math.isfinite(sol.fun):
        raise ValueError("IGARCH optimiser failed to converge")
    m, log_w, a = sol.x
    return IgarchFit(mean=float(m), omega=float(math.exp(log_w)), alpha=float(a), nll=float(sol.fun))


def igarch_extrapolate(
    prefix,
    horizon: int,
    clamp: bool = True,
    capacity=None,
) -> CompletedPattern:
    """IGARCH(1, d, 1) completion; the mean forecast is the fitted constant,
    reconstructed through the differencing."""
    prefix = np.asarray(prefix, dtype=float)
    tau = len(prefix)
    if tau < 10:
        raise ValueError("need at least 10 observed intervals")
    steps = horizon - tau
    d = select_diff_order(prefix)
    x, tail = _difference_stack(prefix, d)
    try:
        fit = fit_igarch(x)
    except (ValueError, np.linalg.LinAlgError):
        fallback = ses_extrapolate(prefix, horizon, alpha=0.5, clamp=clamp, capacity=capacity)
        fallback.method = "igarch"
        fallback.model = {"fallback": "ses", "alpha": 0.5}
        return fallback
    raw = _undifference(np.full(steps, fit.mean), tail)
    model = {"order": (1, d, 1), "mean": fit.mean, "omega": fit.omega, "arch": fit.alpha}
    return _finish(prefix, raw, "igarch", model, clamp, capacity)


EXTRAPOLATORS = {
    "ses": ses_extrapolate,
    "arima": arima_extrapolate,
    "igarch": igarch_extrapolate,
}


def complete_collection(prefix_matrix, horizon: int, method: str, capacity=None):
    """Extrapolate every pattern of an N x tau matrix independently.

    Returns the N x horizon completed matrix plus each pattern's model
    summary.  With tau == horizon the input is returned unchanged.
    """
    if method not in EXTRAPOLATORS:
        raise ValueError(f"unknown extrapolation {method!r}; valid: {', '.join(EXTRAPOLATORS)}")
    X = np.asarray(prefix_matrix, dtype=float)
    n, tau = X.shape
    if tau > horizon:
        raise ValueError("prefix longer than the horizon")
    if tau == horizon:
        return X.copy(), [{} for _ in range(n)]
    fn = EXTRAPOLATORS[method]
    completed = np.empty((n, horizon))
    models = []
    for i in range(n):
        cp = fn(X[i], horizon, capacity=capacity)
        completed[i] = cp.values
        models.append(cp.model)
    return completed, models
