"""Renyi-DP accountant for class-mixed Gaussian releases.

Each synthetic sample is the average of ``l`` clipped records plus Gaussian
noise on features (sigma_x) and one-hot labels (sigma_y). One release is
(alpha, slope*alpha)-RDP with

    slope = (2 c^2 / sigma_x^2 + 1 / sigma_y^2) / l^2.

Random selection of the ``l`` records out of ``n`` amplifies this. For
integer alpha >= 2 the amplified per-release bound is

    eps'(alpha) = log(1 + p^2 C(alpha,2) min{4(e^{eps(2)}-1), 2 e^{eps(2)}}
                      + 4 G(alpha)) / (alpha - 1),

with subsampling ratio p, eps(i) = slope*i, moment sums

    B(j) = sum_{i=0}^{j} (-1)^i C(j,i) e^{(i-1) eps(i)},

and the higher-order tail

    G(alpha) = sum_{j=3}^{alpha} p^j C(alpha,j)
               sqrt(|B(2 floor(j/2))| * |B(ceil(j/2))|).

B(j) is provably negative for odd j >= 3 (it equals E[(1-X)^j] for a
Gaussian likelihood ratio X), so the tail uses magnitudes; without them the
square root is undefined for j in {5, 9, 13, ...}. Even-order sums are
nonnegative; a computed negative there is a precision defect and is either
clamped (if tiny relative to the largest term) or reported as a failure.

T releases compose additively in RDP and convert to (eps, delta)-DP at the
best integer order:

    eps = min_{alpha in {3..alpha_max}} T * eps'(alpha) + log(1/delta)/(alpha-1).

Numerical strategy: everything downstream of B works in log space on
nonnegative terms and is safe in float64. The alternating B sums are
evaluated in float64 log space first; orders whose cancellation leaves too
few significant bits fall back to MPFR (gmpy2) at adaptively chosen
precision, verified against the largest-term magnitude and escalated until
trustworthy. Epsilons are natural-log units throughout.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional, Sequence

import gmpy2
import numpy as np
from scipy.special import logsumexp

from .errors import CalibrationError, ConfigurationError, PrecisionFailureError

_LOG2 = math.log(2.0)
_LOG4 = math.log(4.0)
_LN_CLAMP_TOL = math.log(1e-9)  # negative even-order sums below this (relative
# to the largest term) are roundoff and clamp to zero

# Float64 moment sums are accepted only while enough significant bits remain
# after cancellation and summation growth; below that the MPFR path runs.
MIN_SIGNIFICANT_BITS = 28
_FLOAT_TERM_BITS = 43  # per-term accuracy of exp(log-comb + slope*i*(i-1))
_MPFR_START_BITS = 512
_MPFR_MAX_BITS = 1 << 17
_MPFR_GUARD_BITS = 48

P_MODE_GLOBAL = "global"
P_MODE_PER_CLASS = "per-class"


@dataclass(frozen=True)
class AccountingParams:
    """Inputs that determine the privacy of one synthesis run.

    ``p_mode`` selects the subsampling ratio: ``global`` reads the selection
    as l-out-of-n (p = l/n); ``per-class`` is the conservative variant using
    the smallest class (p = l/min_class_count, which must be provided).
    """

    l: int
    c: float
    sigma_x: float
    sigma_y: float
    n: int
    t: int
    delta: float = 1e-5
    alpha_max: int = 256
    p_mode: str = P_MODE_GLOBAL
    min_class_count: Optional[int] = None

    def __post_init__(self):
        if self.l < 1:
            raise ConfigurationError(f"order of mixture must be >= 1, got {self.l}")
        if self.c <= 0:
            raise ConfigurationError(f"clipping bound must be positive, got {self.c}")
        if self.sigma_x < 0 or self.sigma_y < 0:
            raise ConfigurationError("noise standard deviations must be nonnegative")
        if self.n < 1 or self.t < 1:
            raise ConfigurationError("n and t must be positive integers")
        if not 0 < self.delta < 1:
            raise ConfigurationError(f"delta must lie in (0, 1), got {self.delta}")
        if self.alpha_max < 3:
            raise ConfigurationError(f"alpha_max must be >= 3, got {self.alpha_max}")
        if self.p_mode not in (P_MODE_GLOBAL, P_MODE_PER_CLASS):
            raise ConfigurationError(f"unknown p_mode {self.p_mode!r}")
        if self.p_mode == P_MODE_PER_CLASS:
            if self.min_class_count is None or self.min_class_count < 1:
                raise ConfigurationError(
                    "p_mode 'per-class' requires a positive min_class_count"
                )
        if not 0 < self.p <= 1:
            raise ConfigurationError(
                f"subsampling ratio p={self.p:.6g} must lie in (0, 1]; "
                "the order of mixture cannot exceed the sampled population"
            )

    @property
    def p(self) -> float:
        pool = self.min_class_count if self.p_mode == P_MODE_PER_CLASS else self.n
        return self.l / pool

    @property
    def rdp_slope(self) -> float:
        """Per-order RDP slope of one release; +inf when either sigma is 0."""
        if self.sigma_x == 0 or self.sigma_y == 0:
            return math.inf
        return (2 * self.c**2 / self.sigma_x**2 + 1 / self.sigma_y**2) / self.l**2

    @property
    def non_private(self) -> bool:
        return not math.isfinite(self.rdp_slope)


@dataclass(frozen=True)
class RdpCurve:
    """Per-release RDP epsilons eps'(alpha) over the searched integer orders."""

    orders: tuple
    epsilons: tuple

    def epsilon_at(self, alpha: int) -> float:
        return self.epsilons[self.orders.index(alpha)]

    def items(self):
        return zip(self.orders, self.epsilons)


@dataclass(frozen=True)
class PrivacyReport:
    """Final (epsilon, delta) guarantee plus everything needed to recompute it."""

    epsilon: float
    delta: float
    alpha_star: Optional[int]
    per_release_rdp: RdpCurve
    params: AccountingParams
    baseline_epsilon: Optional[float] = None
    precision_note: str = ""
    boundary_minimum: bool = False
    non_private: bool = False

    def to_dict(self) -> dict:
        """JSON-safe dict; a non-private (infinite) epsilon serializes as null."""
        finite = math.isfinite(self.epsilon)
        return {
            "epsilon": self.epsilon if finite else None,
            "non_private": self.non_private,
            "delta": self.delta,
            "alpha_star": self.alpha_star,
            "boundary_minimum": self.boundary_minimum,
            "precision_note": self.precision_note,
            "rdp_orders": list(self.per_release_rdp.orders),
            "rdp_epsilons": [
                e if math.isfinite(e) else None for e in self.per_release_rdp.epsilons
            ],
            "baseline_epsilon": (
                self.baseline_epsilon
                if self.baseline_epsilon is not None and math.isfinite(self.baseline_epsilon)
                else None
            ),
            "params": {
                "l": self.params.l,
                "c": self.params.c,
                "sigma_x": self.params.sigma_x,
                "sigma_y": self.params.sigma_y,
                "n": self.params.n,
                "t": self.params.t,
                "delta": self.params.delta,
                "alpha_max": self.params.alpha_max,
                "p_mode": self.params.p_mode,
                "min_class_count": self.params.min_class_count,
                "p": self.params.p,
            },
        }


@dataclass(frozen=True)
class CalibrationResult:
    sigma_x: float
    sigma_y: float
    report: PrivacyReport
    bracket_hit: bool = False


@dataclass(frozen=True)
class SweepCell:
    l: int
    sigma_x: float
    sigma_y: float
    alpha_star: Optional[int]
    epsilon: Optional[float]
    status: str


@lru_cache(maxsize=8)
def _log_comb_table(nmax: int) -> np.ndarray:
    """log C(n, k) for 0 <= k <= n <= nmax, from exact integer binomials."""
    table = np.full((nmax + 1, nmax + 1), -np.inf)
    for n in range(nmax + 1):
        c = 1
        for k in range(n + 1):
            table[n, k] = math.log(c) if c > 1 else 0.0
            c = c * (n - k) // (k + 1)
    return table


def _log_expm1(x: float) -> float:
    """log(e^x - 1) for x >= 0, stable across the whole range."""
    if x <= 0:
        return -math.inf
    if math.isinf(x):
        return math.inf
    if x > 36:
        return x + math.log1p(-math.exp(-x))
    return math.log(math.expm1(x))


class _MomentTable:
    """Signed log-magnitudes of the moment sums B(0..jmax) at a fixed slope.

    ``log_mag[j]`` is log|B(j)| (-inf for an exact zero) and ``sign[j]`` is
    in {-1, 0, +1}. Construction runs the float64 pass for every order and
    an MPFR pass for the orders float64 cannot resolve.
    """

    def __init__(self, slope: float, jmax: int, min_sig_bits: int = MIN_SIGNIFICANT_BITS):
        if not math.isfinite(slope) or slope < 0:
            raise ConfigurationError("moment sums need a finite nonnegative RDP slope")
        self.slope = slope
        self.jmax = jmax
        self.log_mag = np.full(jmax + 1, -np.inf)
        self.sign = np.zeros(jmax + 1, dtype=np.int8)
        self.log_maxterm = np.zeros(jmax + 1)
        self.fallback_orders: list = []
        self.max_bits_used = 0
        self._min_sig_bits = min_sig_bits
        self._build()

    def _build(self):
        logc = _log_comb_table(max(self.jmax, 8))
        i = np.arange(self.jmax + 1)
        growth = self.slope * i * (i - 1.0)
        signs = np.where(i % 2 == 0, 1.0, -1.0)

        self.log_mag[0], self.sign[0] = 0.0, 1
        if self.jmax >= 1:
            self.log_mag[1], self.sign[1] = -math.inf, 0  # 1 - 1, exactly zero
        pending = []
        for j in range(2, self.jmax + 1):
            ll = logc[j, : j + 1] + growth[: j + 1]
            self.log_maxterm[j] = ll.max()
            mag, sgn = logsumexp(ll, b=signs[: j + 1], return_sign=True)
            lost_bits = (
                math.inf if not math.isfinite(mag) else (self.log_maxterm[j] - mag) / _LOG2
            )
            if sgn != 0 and lost_bits + math.log2(j + 1) <= _FLOAT_TERM_BITS - self._min_sig_bits:
                self.log_mag[j], self.sign[j] = mag, int(sgn)
            else:
                pending.append(j)
        if pending:
            self.fallback_orders = pending
            self._build_mpfr(pending)
        self._check_signs()

    def _estimate_bits(self, j: int) -> int:
        # Cancellation estimate: central binomial over the small-slope
        # magnitude (2A)^{j/2} (j-1)!!; headroom on top. The verification
        # loop escalates if this underestimates.
        logc = _log_comb_table(max(self.jmax, 8))
        bits = logc[j, j // 2] / _LOG2
        if 0 < self.slope < 0.5:
            bits += (j / 2) * abs(math.log2(2 * self.slope))
        return int(bits) + 128

    def _build_mpfr(self, pending: Sequence[int]):
        bits = max(_MPFR_START_BITS, max(self._estimate_bits(j) for j in pending))
        remaining = list(pending)
        for _ in range(8):
            if not remaining:
                return
            if bits > _MPFR_MAX_BITS:
                break
            self.max_bits_used = max(self.max_bits_used, bits)
            unresolved = []
            with gmpy2.context(precision=bits):
                slope_m = gmpy2.mpfr(self.slope)
                f = [gmpy2.exp(slope_m * k * (k - 1)) for k in range(max(remaining) + 1)]
                for j in remaining:
                    total = gmpy2.mpfr(0)
                    comb = 1
                    for k in range(j + 1):
                        term = comb * f[k]
                        total = total - term if k % 2 else total + term
                        comb = comb * (j - k) // (k + 1)
                    if total == 0:
                        # Exact cancellation at this precision: the true value
                        # is below every representable contribution and its
                        # tail term is negligible downstream.
                        self.log_mag[j], self.sign[j] = -math.inf, 0
                        continue
                    log2_total = float(gmpy2.log2(abs(total)))
                    deficit = (self.log_maxterm[j] / _LOG2 - (bits - _MPFR_GUARD_BITS)) - log2_total
                    if deficit > 0:
                        unresolved.append((j, deficit))
                        continue
                    self.log_mag[j] = float(gmpy2.log(abs(total)))
                    self.sign[j] = 1 if total > 0 else -1
            if not unresolved:
                return
            remaining = [j for j, _ in unresolved]
            bits = int(bits + max(d for _, d in unresolved) + 128)
        raise PrecisionFailureError(
            f"moment sums at orders {remaining} unresolved at "
            f"{_MPFR_MAX_BITS} bits (slope={self.slope:.6g})"
        )

    def _check_signs(self):
        # Even-order sums are nonnegative; tolerate tiny negatives as roundoff.
        for j in range(2, self.jmax + 1, 2):
            if self.sign[j] < 0:
                if self.log_mag[j] <= self.log_maxterm[j] + _LN_CLAMP_TOL:
                    self.log_mag[j], self.sign[j] = -math.inf, 0
                else:
                    raise PrecisionFailureError(
                        f"even moment sum B({j}) computed negative "
                        f"(log magnitude {self.log_mag[j]:.6g}) beyond roundoff tolerance"
                    )

    def describe(self) -> str:
        if not self.fallback_orders:
            return "float64 log-space for all moment sums"
        return (
            f"float64 log-space; MPFR fallback for {len(self.fallback_orders)} "
            f"moment orders (max {self.max_bits_used} bits)"
        )


def base_rdp_epsilon(alpha: int, params: AccountingParams) -> float:
    """Per-release RDP of the unamplified mechanism at integer order alpha.

    Returns slope * alpha; 0 at alpha = 0 by convention, and +inf (the
    non-private sentinel) when either sigma is zero and alpha > 0.
    """
    if alpha < 0:
        raise ConfigurationError(f"alpha must be >= 0, got {alpha}")
    if alpha == 0:
        return 0.0
    return params.rdp_slope * alpha


def moment_term_B(j: int, params: AccountingParams) -> float:
    """Magnitude of the j-th alternating moment sum B(j).

    Odd orders >= 3 are genuinely negative; their magnitude is what the
    amplification tail consumes. May overflow to +inf for large slopes.
    """
    if j < 0:
        raise ConfigurationError(f"moment order must be >= 0, got {j}")
    if params.non_private:
        raise ConfigurationError("moment sums are undefined for zero noise")
    table = _MomentTable(params.rdp_slope, j)
    try:
        return math.exp(table.log_mag[j])
    except OverflowError:
        return math.inf


def _log_tail(alpha: int, log_p: float, table: _MomentTable, logc: np.ndarray) -> float:
    """log G(alpha); -inf when the tail is empty or exactly zero."""
    if alpha < 3:
        return -math.inf
    js = np.arange(3, alpha + 1)
    half_log = 0.5 * (table.log_mag[2 * (js // 2)] + table.log_mag[(js + 1) // 2])
    terms = js * log_p + logc[alpha, js] + half_log
    terms = terms[np.isfinite(terms)]
    if terms.size == 0:
        return -math.inf
    return float(logsumexp(terms))


def higher_order_G(alpha: int, params: AccountingParams) -> float:
    """Higher-order amplification tail G(alpha); 0 for alpha < 3."""
    if alpha < 3:
        return 0.0
    if params.non_private:
        raise ConfigurationError("the amplification tail is undefined for zero noise")
    table = _MomentTable(params.rdp_slope, alpha)
    logc = _log_comb_table(max(alpha, 8))
    try:
        return math.exp(_log_tail(alpha, math.log(params.p), table, logc))
    except OverflowError:
        return math.inf


def _log_pair_coefficient(slope: float) -> float:
    """log of min{4(e^{eps(2)} - 1), 2 e^{eps(2)}} with eps(2) = 2*slope."""
    eps2 = 2 * slope
    return min(_LOG4 + _log_expm1(eps2), _LOG2 + eps2)


def _per_release_eps(alpha: int, log_p: float, slope: float, table, logc) -> float:
    second = 2 * log_p + logc[alpha, 2] + _log_pair_coefficient(slope)
    tail = _log_tail(alpha, log_p, table, logc)
    log_arg = float(logsumexp([0.0, second, _LOG4 + tail]))
    return log_arg / (alpha - 1)


def subsampled_rdp_epsilon(alpha: int, params: AccountingParams) -> float:
    """Amplified per-release RDP eps'(alpha) for integer alpha >= 2."""
    if alpha < 2:
        raise ConfigurationError(f"alpha must be >= 2, got {alpha}")
    if params.non_private:
        return math.inf
    slope = params.rdp_slope
    table = _MomentTable(slope, alpha)
    logc = _log_comb_table(max(alpha, 8))
    return _per_release_eps(alpha, math.log(params.p), slope, table, logc)


def _chain(slope: float, params: AccountingParams):
    """Curve, minimized epsilon and bookkeeping for a given base slope."""
    alpha_max = params.alpha_max
    log_delta_inv = -math.log(params.delta)
    if not math.isfinite(slope):
        curve = RdpCurve(orders=(), epsilons=())
        return math.inf, None, curve, "non-private (zero noise)", False
    table = _MomentTable(slope, alpha_max)
    logc = _log_comb_table(max(alpha_max, 8))
    log_p = math.log(params.p)
    orders = tuple(range(2, alpha_max + 1))
    eps_primes = tuple(
        _per_release_eps(a, log_p, slope, table, logc) for a in orders
    )
    best = math.inf
    best_alpha = None
    for a, e in zip(orders, eps_primes):
        if a < 3:
            continue
        total = params.t * e + log_delta_inv / (a - 1)
        if total < best:
            best, best_alpha = total, a
    curve = RdpCurve(orders=orders, epsilons=eps_primes)
    return best, best_alpha, curve, table.describe(), best_alpha == alpha_max


def compose_and_convert(
    params: AccountingParams, baseline_dims: Optional[tuple] = None
) -> PrivacyReport:
    """Compose T releases in RDP and convert to (eps, delta), minimized over
    integer orders 3..alpha_max.

    Warns (and flags the report) when the minimum sits on the alpha_max
    boundary, meaning a larger search range could improve the bound. When
    ``baseline_dims=(d_x, d_y)`` is given, the dimension-dependent baseline
    epsilon for identical inputs is included for comparison.
    """
    eps, alpha_star, curve, note, boundary = _chain(params.rdp_slope, params)
    if boundary:
        warnings.warn(
            f"privacy minimum at the alpha_max boundary ({params.alpha_max}); "
            "raise alpha_max for a potentially tighter epsilon",
            stacklevel=2,
        )
    baseline_eps = None
    if baseline_dims is not None and math.isfinite(eps):
        d_x, d_y = baseline_dims
        baseline_eps = baseline_lee_epsilon(params, d_x, d_y).epsilon
    return PrivacyReport(
        epsilon=eps,
        delta=params.delta,
        alpha_star=alpha_star,
        per_release_rdp=curve,
        params=params,
        baseline_epsilon=baseline_eps,
        precision_note=note,
        boundary_minimum=boundary,
        non_private=not math.isfinite(eps),
    )


def _baseline_slope(params: AccountingParams, d_x: int, d_y: int) -> float:
    if params.sigma_x == 0 or params.sigma_y == 0:
        return math.inf
    return (d_x / params.sigma_x**2 + d_y / params.sigma_y**2) / (2 * params.l**2)


def baseline_lee_epsilon(params: AccountingParams, d_x: int, d_y: int) -> PrivacyReport:
    """Accountant with the dimension-dependent base RDP substituted.

    Base slope alpha/(2 l^2) (d_x/sigma_x^2 + d_y/sigma_y^2); identical
    amplification, composition and conversion pipeline. Used only to
    quantify how much the dimension-free analysis tightens the bound.
    """
    if d_x < 1 or d_y < 1:
        raise ConfigurationError("baseline dimensions must be >= 1")
    eps, alpha_star, curve, note, boundary = _chain(_baseline_slope(params, d_x, d_y), params)
    return PrivacyReport(
        epsilon=eps,
        delta=params.delta,
        alpha_star=alpha_star,
        per_release_rdp=curve,
        params=params,
        precision_note=f"dimension-dependent baseline (d_x={d_x}, d_y={d_y}); " + note,
        boundary_minimum=boundary,
        non_private=not math.isfinite(eps),
    )


CALIBRATION_BRACKET = (1e-4, 1e4)
CALIBRATION_MAX_ITER = 200


def calibrate_noise(
    target_epsilon: float,
    delta: float,
    l: int,
    c: float,
    n: int,
    t: int,
    ratio: float = 1.0,
    alpha_max: int = 256,
    p_mode: str = P_MODE_GLOBAL,
    min_class_count: Optional[int] = None,
) -> CalibrationResult:
    """Find the smallest sigma_x (sigma_y = ratio * sigma_x) with epsilon <=
    target, by bisection on the monotone map sigma_x -> epsilon.

    Terminates when |epsilon - target| <= max(1e-4, 1e-3 * target) or a
    bracket endpoint already satisfies the target (flagged ``bracket_hit``).
    Raises CalibrationError, reporting the epsilon achieved at both bracket
    ends, when the target is unreachable.
    """
    if target_epsilon <= 0:
        raise ConfigurationError(f"target epsilon must be positive, got {target_epsilon}")
    if ratio <= 0:
        raise ConfigurationError(f"sigma ratio must be positive, got {ratio}")

    def report_at(sx: float) -> PrivacyReport:
        return compose_and_convert(
            AccountingParams(
                l=l, c=c, sigma_x=sx, sigma_y=ratio * sx, n=n, t=t,
                delta=delta, alpha_max=alpha_max,
                p_mode=p_mode, min_class_count=min_class_count,
            )
        )

    lo, hi = CALIBRATION_BRACKET
    tol = max(1e-4, 1e-3 * target_epsilon)
    rep_lo, rep_hi = report_at(lo), report_at(hi)
    if rep_lo.epsilon <= target_epsilon:
        # Even the least-noise end of the bracket meets the target.
        return CalibrationResult(lo, ratio * lo, rep_lo, bracket_hit=True)
    if rep_hi.epsilon > target_epsilon:
        raise CalibrationError(
            f"target epsilon {target_epsilon:.6g} unreachable in sigma bracket "
            f"[{lo:g}, {hi:g}]: achieved {rep_lo.epsilon:.6g} at sigma={lo:g} "
            f"and {rep_hi.epsilon:.6g} at sigma={hi:g}"
        )
    sigma_best, rep_best = hi, rep_hi
    for _ in range(CALIBRATION_MAX_ITER):
        if abs(rep_best.epsilon - target_epsilon) <= tol:
            return CalibrationResult(sigma_best, ratio * sigma_best, rep_best)
        mid = math.sqrt(lo * sigma_best)  # geometric: the bracket spans decades
        rep_mid = report_at(mid)
        if rep_mid.epsilon <= target_epsilon:
            sigma_best, rep_best = mid, rep_mid
        else:
            lo = mid
    raise CalibrationError(
        f"bisection did not reach tolerance {tol:.3g} after "
        f"{CALIBRATION_MAX_ITER} iterations (achieved {rep_best.epsilon:.6g})"
    )


def sweep(
    sigmas: Iterable[float],
    ls: Iterable[int],
    *,
    c: float,
    n: int,
    t: int,
    delta: float = 1e-5,
    ratio: float = 1.0,
    alpha_max: int = 256,
    p_mode: str = P_MODE_GLOBAL,
    min_class_count: Optional[int] = None,
) -> list:
    """Evaluate epsilon over the (l, sigma) grid; sigma_y = ratio * sigma.

    Per-cell precision failures are recorded in the row status rather than
    aborting the grid.
    """
    sigmas = list(sigmas)
    ls = list(ls)
    if not sigmas or not ls:
        raise ConfigurationError("sweep grid must be nonempty")
    rows = []
    for l in ls:
        for sigma in sigmas:
            sx, sy = sigma, ratio * sigma
            try:
                report = compose_and_convert(
                    AccountingParams(
                        l=l, c=c, sigma_x=sx, sigma_y=sy, n=n, t=t,
                        delta=delta, alpha_max=alpha_max,
                        p_mode=p_mode, min_class_count=min_class_count,
                    )
                )
                rows.append(
                    SweepCell(l, sx, sy, report.alpha_star, report.epsilon, "ok")
                )
            except PrecisionFailureError as exc:
                rows.append(SweepCell(l, sx, sy, None, None, f"precision-failure: {exc}"))
    return rows
