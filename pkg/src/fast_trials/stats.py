"""Statistical kernel: distribution functions, two-sample t-tests, logistic
regression, and nested-model likelihood-ratio tests.

Distribution tails are computed from scratch via the regularized incomplete
gamma (series + continued fraction) and the regularized incomplete beta
(Lentz continued fraction), so the kernel has no runtime dependency on a
stats library. Everything here is a pure function of its inputs; random
draws go through an explicit ``numpy.random.Generator`` owned by the caller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "Tail",
    "TestResult",
    "LogisticFit",
    "InputError",
    "FittingError",
    "normal_cdf",
    "t_sf",
    "chi_square_sf",
    "welch_t_test",
    "fit_logistic",
    "fit_logistic_counts",
    "lr_test",
    "rng_standard_normal",
    "rng_bernoulli",
]

_EPS = 1e-14
_FPMIN = 1e-300
_MAX_CF_ITER = 500
_MAX_SERIES_ITER = 1000

IRLS_TOL = 1e-10
IRLS_MAX_ITER = 50
_DIVERGE_BOUND = 30.0  # |coef| beyond this is numerically certain separation


class InputError(ValueError):
    """Raised when an argument violates an operation's preconditions."""


class FittingError(RuntimeError):
    """Raised when model fits are inconsistent (e.g. a 'full' model with a
    lower log-likelihood than its nested reduction)."""


class Tail(str, Enum):
    TWO_SIDED = "two_sided"
    UPPER = "upper"
    LOWER = "lower"


@dataclass(frozen=True)
class TestResult:
    """Outcome of a single hypothesis test."""

    statistic: float
    df: float
    p_value: float
    tail: Tail
    degenerate: bool = False  # both samples had zero variance


@dataclass
class LogisticFit:
    """Maximum-likelihood fit of a binary-outcome logistic model."""

    coefficients: np.ndarray
    log_likelihood: float
    converged: bool
    n_iterations: int
    covariance: np.ndarray
    diverged: bool = False  # coefficient escaped toward +-inf (separation)


# ---------------------------------------------------------------------------
# regularized incomplete gamma / beta
# ---------------------------------------------------------------------------

def _gamma_p_series(a: float, x: float) -> float:
    """Lower regularized incomplete gamma P(a, x) by series, for x < a + 1."""
    ap = a
    term = 1.0 / a
    total = term
    for _ in range(_MAX_SERIES_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            return total * math.exp(-x + a * math.log(x) - math.lgamma(a))
    raise FittingError(f"incomplete gamma series did not converge (a={a}, x={x})")


def _gamma_q_cf(a: float, x: float) -> float:
    """Upper regularized incomplete gamma Q(a, x) by continued fraction,
    for x >= a + 1 (modified Lentz)."""
    b = x + 1.0 - a
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_CF_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h * math.exp(-x + a * math.log(x) - math.lgamma(a))
    raise FittingError(f"incomplete gamma CF did not converge (a={a}, x={x})")


def _gamma_q(a: float, x: float) -> float:
    """Upper regularized incomplete gamma Q(a, x) = 1 - P(a, x)."""
    if x < 0.0 or a <= 0.0:
        raise InputError(f"invalid incomplete gamma arguments a={a}, x={x}")
    if x == 0.0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_p_series(a, x)
    return _gamma_q_cf(a, x)


def _beta_cf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_CF_ITER):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise FittingError(f"incomplete beta CF did not converge (a={a}, b={b}, x={x})")


def _beta_inc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if a <= 0.0 or b <= 0.0:
        raise InputError(f"invalid incomplete beta shape a={a}, b={b}")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    # The CF converges fast on the side of the mean; mirror otherwise.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


# ---------------------------------------------------------------------------
# distribution functions
# ---------------------------------------------------------------------------

def normal_cdf(z: float) -> float:
    """Standard normal CDF."""
    z = float(z)
    if not math.isfinite(z):
        raise InputError(f"normal_cdf requires a finite argument, got {z}")
    if z == 0.0:
        return 0.5
    half_tail = 0.5 * _gamma_q(0.5, 0.5 * z * z)
    return 1.0 - half_tail if z > 0.0 else half_tail


def t_sf(x: float, df: float) -> float:
    """Upper-tail survival function of Student's t with ``df`` degrees of
    freedom (non-integer df allowed)."""
    x = float(x)
    df = float(df)
    if not df > 0.0:
        raise InputError(f"t_sf requires df > 0, got {df}")
    if not math.isfinite(x):
        if math.isnan(x):
            raise InputError("t_sf requires a finite statistic")
        return 0.0 if x > 0 else 1.0
    if x == 0.0:
        return 0.5
    tail = 0.5 * _beta_inc(0.5 * df, 0.5, df / (df + x * x))
    return tail if x > 0.0 else 1.0 - tail


def chi_square_sf(x: float, df: int) -> float:
    """Upper-tail survival function of the chi-square distribution."""
    x = float(x)
    if x < 0.0:
        raise InputError(f"chi_square_sf requires x >= 0, got {x}")
    if not (isinstance(df, (int, np.integer)) and df >= 1):
        raise InputError(f"chi_square_sf requires a positive integer df, got {df!r}")
    if not math.isfinite(x):
        return 0.0
    return _gamma_q(0.5 * df, 0.5 * x)


# ---------------------------------------------------------------------------
# two-sample t-test (unequal variances)
# ---------------------------------------------------------------------------

def welch_t_test(sample_a, sample_b, tail: Tail = Tail.TWO_SIDED) -> TestResult:
    """Two-sample t-test without the equal-variance assumption.

    ``tail=UPPER`` tests the alternative mean(a) > mean(b), ``LOWER`` the
    reverse. If both samples have zero variance the result is degenerate:
    p = 1.0 for equal means (no evidence either way), p = 0.0 otherwise,
    flagged so simulation loops can proceed without aborting.
    """
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    tail = Tail(tail)
    if a.size < 2 or b.size < 2:
        raise InputError(
            f"welch_t_test needs >= 2 observations per sample, got {a.size} and {b.size}"
        )
    n_a, n_b = a.size, b.size
    mean_a, mean_b = float(a.mean()), float(b.mean())
    var_a = float(a.var(ddof=1))
    var_b = float(b.var(ddof=1))
    if var_a == 0.0 and var_b == 0.0:
        diff = mean_a - mean_b
        df = float(n_a + n_b - 2)
        if diff == 0.0:
            return TestResult(0.0, df, 1.0, tail, degenerate=True)
        stat = math.inf if diff > 0 else -math.inf
        if tail is Tail.TWO_SIDED:
            p = 0.0
        elif tail is Tail.UPPER:
            p = 0.0 if diff > 0 else 1.0
        else:
            p = 0.0 if diff < 0 else 1.0
        return TestResult(stat, df, p, tail, degenerate=True)

    se2_a = var_a / n_a
    se2_b = var_b / n_b
    se2 = se2_a + se2_b
    stat = (mean_a - mean_b) / math.sqrt(se2)
    df = se2 * se2 / (se2_a * se2_a / (n_a - 1) + se2_b * se2_b / (n_b - 1))
    if tail is Tail.TWO_SIDED:
        p = min(1.0, 2.0 * t_sf(abs(stat), df))
    elif tail is Tail.UPPER:
        p = t_sf(stat, df)
    else:
        p = t_sf(-stat, df)
    return TestResult(stat, df, p, tail)


# ---------------------------------------------------------------------------
# logistic regression by iteratively reweighted least squares
# ---------------------------------------------------------------------------

def _bernoulli_loglik(eta: np.ndarray, events: np.ndarray, trials: np.ndarray) -> float:
    # sum_i [y_i*eta_i - log(1 + exp(eta_i))], grouped; softplus kept stable.
    softplus = np.where(eta > 0, eta + np.log1p(np.exp(-np.abs(eta))), np.log1p(np.exp(eta)))
    return float(np.sum(events * eta - trials * softplus))


def fit_logistic_counts(design_rows: np.ndarray, events: np.ndarray, trials: np.ndarray) -> LogisticFit:
    """IRLS logistic fit on grouped data (one design row per covariate
    pattern, with event/trial counts).

    Log-likelihood and information match the equivalent subject-level
    Bernoulli model exactly, so likelihood-ratio statistics can mix grouped
    and ungrouped fits.
    """
    x = np.asarray(design_rows, dtype=float)
    events = np.asarray(events, dtype=float)
    trials = np.asarray(trials, dtype=float)
    if x.ndim != 2:
        raise InputError("design must be a 2-d matrix")
    n_rows, k = x.shape
    if events.shape != (n_rows,) or trials.shape != (n_rows,):
        raise InputError("events/trials must align with design rows")
    if np.any(events < 0) or np.any(events > trials):
        raise InputError("event counts must lie in [0, trials] per row")
    n_subjects = float(trials.sum())
    if n_subjects < k:
        raise InputError(f"need at least k={k} subjects, got {n_subjects:g}")
    if not np.all(x[:, 0] == 1.0):
        raise InputError("design must carry an all-ones intercept in column 0")
    if np.linalg.matrix_rank(x) < k:
        raise InputError("design columns are collinear")

    beta = np.zeros(k)
    converged = False
    diverged = False
    n_iter = 0
    for n_iter in range(1, IRLS_MAX_ITER + 1):
        eta = x @ beta
        mu = 1.0 / (1.0 + np.exp(-eta))
        w = trials * mu * (1.0 - mu)
        grad = x.T @ (events - trials * mu)
        hess = (x * w[:, None]).T @ x
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            diverged = True
            break
        beta = beta + step
        if np.max(np.abs(beta)) > _DIVERGE_BOUND:
            diverged = True
            break
        if np.max(np.abs(step)) < IRLS_TOL:
            converged = True
            break

    eta = x @ beta
    loglik = _bernoulli_loglik(eta, events, trials)
    mu = 1.0 / (1.0 + np.exp(-eta))
    w = trials * mu * (1.0 - mu)
    hess = (x * w[:, None]).T @ x
    try:
        cov = np.linalg.inv(hess)
    except np.linalg.LinAlgError:
        cov = np.full((k, k), np.nan)
    return LogisticFit(
        coefficients=beta,
        log_likelihood=loglik,
        converged=converged and not diverged,
        n_iterations=n_iter,
        covariance=cov,
        diverged=diverged,
    )


def fit_logistic(design, outcome) -> LogisticFit:
    """IRLS logistic fit of a binary outcome on an indicator design matrix
    (n x k, first column all ones)."""
    x = np.asarray(design, dtype=float)
    y = np.asarray(outcome, dtype=float)
    if x.ndim != 2:
        raise InputError("design must be a 2-d matrix")
    if y.shape != (x.shape[0],):
        raise InputError("outcome length must match design rows")
    if not np.all((y == 0.0) | (y == 1.0)):
        raise InputError("outcome must be binary 0/1")
    # Collapse identical covariate patterns; indicator designs have only a
    # handful, which makes repeated fits in a simulation loop cheap.
    rows, inverse = np.unique(x, axis=0, return_inverse=True)
    trials = np.bincount(inverse, minlength=rows.shape[0]).astype(float)
    events = np.bincount(inverse, weights=y, minlength=rows.shape[0])
    return fit_logistic_counts(rows, events, trials)


def lr_test(full: LogisticFit, reduced: LogisticFit, df_diff: int) -> TestResult:
    """Likelihood-ratio chi-square test of a reduced model nested in a full
    model, ``df_diff`` = difference in parameter count."""
    if not (isinstance(df_diff, (int, np.integer)) and df_diff >= 1):
        raise InputError(f"df_diff must be a positive integer, got {df_diff!r}")
    stat = 2.0 * (full.log_likelihood - reduced.log_likelihood)
    if stat < -1e-6:
        raise FittingError(
            "full-model log-likelihood below reduced model "
            f"({full.log_likelihood} < {reduced.log_likelihood}); fit failed"
        )
    stat = max(stat, 0.0)
    return TestResult(stat, float(df_diff), chi_square_sf(stat, int(df_diff)), Tail.UPPER)


# ---------------------------------------------------------------------------
# random draws (explicit stream)
# ---------------------------------------------------------------------------

def rng_standard_normal(stream: np.random.Generator) -> float:
    """One standard-normal draw, advancing the caller's stream."""
    return float(stream.standard_normal())


def rng_bernoulli(stream: np.random.Generator, p: float) -> int:
    """One Bernoulli(p) draw; p=0 and p=1 are forced outcomes."""
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise InputError(f"bernoulli probability must lie in [0, 1], got {p}")
    return int(stream.random() < p)
