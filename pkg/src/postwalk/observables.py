"""Scalar diagnostics and relaxation-time analysis.

Coherence and distinguishability measures for density matrices, plus the
stretched-exponential (KWW) machinery used to turn trace-distance decay
curves into a characteristic relaxation time tau = Gamma(1/beta) / (beta k),
and the two trend fits tau(eta) ~ A/(1-eta)^B + C and tau(p) ~ C e^(-D p) + E.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

GAMMA_DOMAIN = (0.05, 170.0)

# samples at or below this are dropped before log-domain fitting
FIT_FLOOR = 1e-12
MIN_KWW_SAMPLES = 8
MIN_TREND_SAMPLES = 4
RSS_RTOL = 1e-12
MAX_FIT_ITER = 10_000


def l1_coherence(rho: np.ndarray) -> float:
    """Sum of moduli of all off-diagonal density-matrix entries."""
    mags = np.abs(rho)
    return float(mags.sum() - np.trace(mags))


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Half the trace norm of a - b; distinguishability in [0, 1] for states.

    The difference is sign-canonicalized before the eigendecomposition so the
    result is bitwise symmetric in its arguments.
    """
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    d = a - b
    nonzero = np.flatnonzero(d.ravel())
    if nonzero.size == 0:
        return 0.0
    lead = d.ravel()[nonzero[0]]
    if (lead.real if lead.real != 0.0 else lead.imag) < 0.0:
        d = -d
    eigs = np.linalg.eigvalsh(d)
    return 0.5 * float(np.abs(eigs).sum())


def gamma_function(x: float) -> float:
    """Euler Gamma(x) for x in [0.05, 170]."""
    lo, hi = GAMMA_DOMAIN
    if not lo <= x <= hi:
        raise ValueError(f"gamma_function argument {x} outside [{lo}, {hi}]")
    return math.gamma(x)


def kww_relaxation_time(k: float, beta: float) -> float:
    """Mean of the stretched exponential: integral of exp(-(k t)^beta) over t >= 0."""
    return gamma_function(1.0 / beta) / (beta * k)


@dataclass(frozen=True)
class KwwFit:
    """Fitted stretched exponential d0 * exp(-(k t)^beta) and derived tau."""

    d0: float
    k: float
    beta: float
    tau: float
    rss: float
    r2: float
    reliable: bool

    def evaluate(self, times: np.ndarray) -> np.ndarray:
        return self.d0 * np.exp(-((self.k * np.asarray(times)) ** self.beta))

    def to_dict(self) -> dict:
        return {"d0": self.d0, "k": self.k, "beta": self.beta,
                "tau": self.tau, "rss": self.rss, "r2": self.r2}


@dataclass(frozen=True)
class TrendFit:
    """Three-parameter trend fit with its residual diagnostics."""

    params: tuple[float, float, float]
    rss: float
    r2: float

    def to_dict(self) -> dict:
        a, b, c = self.params
        return {"params": [a, b, c], "rss": self.rss, "r2": self.r2}


def _r2(values: np.ndarray, rss: float) -> float:
    tss = float(np.sum((values - values.mean()) ** 2))
    if tss == 0.0:
        return 1.0 if rss < 1e-30 else 0.0
    return 1.0 - rss / tss


def _simplex_minimize(rss_fn, x0: np.ndarray) -> np.ndarray:
    """Nelder-Mead descent restarted until the RSS stops improving.

    A restart reinflates the simplex around the previous optimum, which in
    practice drives the parameters to optimizer precision on smooth problems.
    """
    x = np.asarray(x0, dtype=float)
    best = rss_fn(x)
    for _ in range(6):
        res = minimize(rss_fn, x, method="Nelder-Mead",
                       options={"xatol": 1e-13, "fatol": 1e-15 * (1.0 + best),
                                "maxiter": MAX_FIT_ITER, "maxfev": MAX_FIT_ITER})
        x_new, f_new = res.x, res.fun
        if f_new > best:
            break
        improved = best - f_new > RSS_RTOL * max(best, 1e-300)
        x, best = x_new, f_new
        if not improved:
            break
    return x


def fit_stretched_exponential(times, values) -> KwwFit:
    """Least-squares KWW fit of a positive decay curve.

    The initial guess comes from the double-log linearization
    ln(-ln(v / d0)) = beta ln k + beta ln t, refined by simplex descent on the
    residual sum of squares. Samples at or below 1e-12 are dropped first.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.shape != v.shape:
        raise ValueError("times and values must have equal length")
    keep = v > FIT_FLOOR
    t, v = t[keep], v[keep]
    if t.size < MIN_KWW_SAMPLES:
        raise ValueError(f"need at least {MIN_KWW_SAMPLES} usable samples, got {t.size}")

    d0_guess = float(v.max())
    # double-log linearization needs 0 < v < d0 and t > 0
    mask = (t > 0) & (v < d0_guess * (1 - 1e-9))
    if mask.sum() >= 2:
        y = np.log(-np.log(v[mask] / d0_guess))
        x = np.log(t[mask])
        beta0, intercept = np.polyfit(x, y, 1)
        beta0 = min(max(beta0, 1e-2), 2.0)
        k0 = math.exp(intercept / beta0)
    else:
        beta0, k0 = 1.0, 1.0 / max(t.mean(), 1e-12)

    def rss_fn(u):
        d0, k, beta = np.exp(u)
        if beta > 2.0:
            return 1e100 * beta
        model = d0 * np.exp(-((k * t) ** beta))
        return float(np.sum((model - v) ** 2))

    u0 = np.log([d0_guess, k0, beta0])
    u = _simplex_minimize(rss_fn, u0)
    d0, k, beta = (float(z) for z in np.exp(u))
    rss = rss_fn(u)
    r2 = _r2(v, rss)
    return KwwFit(d0=d0, k=k, beta=beta, tau=kww_relaxation_time(k, beta),
                  rss=rss, r2=r2, reliable=r2 >= 0.5)


def _validated_trend_input(xs, ys, name: str) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"{name} and taus must have equal length")
    if x.size < MIN_TREND_SAMPLES:
        raise ValueError(f"need at least {MIN_TREND_SAMPLES} points, got {x.size}")
    return x, y


def _offset_guess(y: np.ndarray) -> float:
    spread = y.max() - y.min()
    return float(y.min() - 0.05 * spread - 1e-9)


def fit_tau_vs_eta(etas, taus) -> TrendFit:
    """Fit tau(eta) ~ A / (1 - eta)^B + C by least squares."""
    eta, tau = _validated_trend_input(etas, taus, "etas")
    if np.any(eta >= 1.0):
        raise ValueError("eta = 1 has no finite relaxation time; all etas must be < 1")

    c0 = _offset_guess(tau)
    # ln(tau - C) = ln A - B ln(1 - eta)
    slope, intercept = np.polyfit(np.log(1.0 - eta), np.log(tau - c0), 1)
    x0 = np.array([math.exp(intercept), -slope, c0])

    def rss_fn(params):
        a, b, c = params
        model = a / (1.0 - eta) ** b + c
        return float(np.sum((model - tau) ** 2))

    best = _simplex_minimize(rss_fn, x0)
    rss = rss_fn(best)
    return TrendFit(params=tuple(float(z) for z in best), rss=rss, r2=_r2(tau, rss))


def fit_tau_vs_p(ps, taus) -> TrendFit:
    """Fit tau(p) ~ C exp(-D p) + E by least squares."""
    p, tau = _validated_trend_input(ps, taus, "ps")
    if np.any(p <= 0.0):
        raise ValueError("all decoherence strengths must be > 0")

    e0 = _offset_guess(tau)
    # ln(tau - E) = ln C - D p
    slope, intercept = np.polyfit(p, np.log(tau - e0), 1)
    x0 = np.array([math.exp(intercept), -slope, e0])

    def rss_fn(params):
        c, d, e = params
        model = c * np.exp(-d * p) + e
        return float(np.sum((model - tau) ** 2))

    best = _simplex_minimize(rss_fn, x0)
    rss = rss_fn(best)
    return TrendFit(params=tuple(float(z) for z in best), rss=rss, r2=_r2(tau, rss))
