"""Kilbas-Saigo and Mittag-Leffler relaxation kernels.

The Kilbas-Saigo function with triple (a, m, l) is the power series

    E_{a,m,l}(z) = sum_n c_n z^n,
    c_n = prod_{k<n} Gamma(1 + a(km + l)) / Gamma(1 + a(km + l + 1)).

For the stretched operator with parameters (alpha, gamma) the relevant triple
is a = alpha, m = 1 + gamma/alpha, l = gamma/alpha, and the relaxation kernel
is t -> E_{a,m,l}(-theta t^(alpha + gamma)).

On the negative real axis the series alternates and cancels badly: at x = 70
the largest term is ~1e71 while the sum is ~1e-3.  Evaluation is therefore
done in binary fixed point on Python integers, with the number of fractional
bits chosen per argument from a float estimate of the largest term.
"""

from __future__ import annotations

import math
import threading
import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np
from mpmath import mp
from scipy.special import gammaln

from .errors import ParameterError, PrecisionLoss

__all__ = [
    "KSParams",
    "Exponential",
    "MittagLeffler",
    "KilbasSaigo",
    "KernelKind",
    "KSCoefficients",
    "ks_coefficients",
    "ks_coefficients_simplified",
    "ks_eval",
    "ks_eval_many",
    "ml_eval",
    "kernel_eval",
    "kernel_values",
    "ks_moments",
    "admissible_x_max",
    "PRECISION_CEILING_DIGITS",
    "GUARD_DIGITS",
]

PRECISION_CEILING_DIGITS = 512
GUARD_DIGITS = 20

_LN2 = math.log(2.0)
_LOG10_2 = math.log10(2.0)
_GUARD_BITS = math.ceil(GUARD_DIGITS / _LOG10_2)
# absolute accuracy target of the fixed-point sum, in bits below 1
_TARGET_BITS = 53 + _GUARD_BITS
_RAW_TOLERANCE = 1e-9


@dataclass(frozen=True)
class KSParams:
    """Stretched-operator parameters (alpha, gamma) and the induced KS triple."""

    alpha: float
    gamma: float = 0.0

    def __post_init__(self):
        a, g = float(self.alpha), float(self.gamma)
        if not (0.0 < a <= 1.0):
            raise ParameterError(f"alpha must lie in (0, 1], got {a}")
        if not g >= 0.0:
            raise ParameterError(f"gamma must be >= 0, got {g}")
        if a + g > 1.0 + 1e-12:
            raise ParameterError(f"alpha + gamma must be <= 1, got {a + g}")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "gamma", g)

    @property
    def a(self) -> float:
        return self.alpha

    @property
    def m(self) -> float:
        return 1.0 + self.gamma / self.alpha

    @property
    def l(self) -> float:  # noqa: E743
        return self.gamma / self.alpha

    @property
    def beta(self) -> float:
        """Stretched exponent alpha + gamma."""
        return self.alpha + self.gamma

    @property
    def is_classical(self) -> bool:
        return self.alpha == 1.0 and self.gamma == 0.0


@dataclass(frozen=True)
class Exponential:
    pass


@dataclass(frozen=True)
class MittagLeffler:
    beta: float

    def __post_init__(self):
        b = float(self.beta)
        if not (0.0 < b <= 1.0):
            raise ParameterError(f"Mittag-Leffler order must lie in (0, 1], got {b}")
        object.__setattr__(self, "beta", b)


@dataclass(frozen=True)
class KilbasSaigo:
    params: KSParams


KernelKind = Union[Exponential, MittagLeffler, KilbasSaigo]


# ---------------------------------------------------------------------------
# coefficients in double precision (log domain)


@dataclass(frozen=True)
class KSCoefficients:
    """c_0..c_N with their logarithms.

    ``log_domain`` is set when some c_n under- or overflows a double; ``values``
    then holds 0 or inf at those positions and ``log_values`` is authoritative.
    """

    log_values: np.ndarray
    values: np.ndarray
    log_domain: bool


def _pack(log_c: np.ndarray) -> KSCoefficients:
    with np.errstate(over="ignore", under="ignore"):
        values = np.exp(log_c)
    tiny = np.finfo(float).tiny
    log_domain = bool(np.any((values < tiny) | ~np.isfinite(values)))
    return KSCoefficients(log_values=log_c, values=values, log_domain=log_domain)


def ks_coefficients(params: KSParams, n_terms: int) -> KSCoefficients:
    """Coefficients from the (a, m, l) product, summed as log-gamma differences."""
    if n_terms < 0:
        raise ParameterError("n_terms must be >= 0")
    a, m, l = params.a, params.m, params.l
    k = np.arange(n_terms, dtype=float)
    steps = gammaln(1.0 + a * (k * m + l)) - gammaln(1.0 + a * (k * m + l + 1.0))
    log_c = np.concatenate(([0.0], np.cumsum(steps)))
    return _pack(log_c)


def ks_coefficients_simplified(params: KSParams, n_terms: int) -> KSCoefficients:
    """Same coefficients written in (alpha, gamma):
    c_n = prod_{k<n} Gamma(1 + k beta + gamma) / Gamma(1 + (k+1) beta)."""
    if n_terms < 0:
        raise ParameterError("n_terms must be >= 0")
    b, g = params.beta, params.gamma
    k = np.arange(n_terms, dtype=float)
    steps = gammaln(1.0 + k * b + g) - gammaln(1.0 + (k + 1.0) * b)
    log_c = np.concatenate(([0.0], np.cumsum(steps)))
    return _pack(log_c)


def ks_moments(params: KSParams, k_max: int) -> np.ndarray:
    """m_k = k! c_k for k = 0..k_max: the moments of the time-change multiplier."""
    if k_max < 1:
        raise ParameterError("k_max must be >= 1")
    coeffs = ks_coefficients(params, k_max)
    k = np.arange(k_max + 1, dtype=float)
    return np.exp(gammaln(k + 1.0) + coeffs.log_values)


# ---------------------------------------------------------------------------
# multiprecision series engine


class _SeriesEngine:
    """Alternating series sum_n c_n (-x)^n in fixed point.

    Subclasses supply the float log-ratios log(c_{n+1}/c_n) (for planning) and
    the same ratios to arbitrary precision (for summation).
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._log_c = np.zeros(1)
        self._ratios: list[int] = []
        self._ratio_prec = 0

    # -- to override
    def _float_log_ratios(self, k: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _mp_ratio(self, k: int):
        raise NotImplementedError

    # -- planning
    def _log_coeffs(self, n: int) -> np.ndarray:
        with self._lock:
            have = len(self._log_c)
            if have <= n:
                new = max(n + 1, 2 * have)
                k = np.arange(have - 1, new - 1, dtype=float)
                steps = self._float_log_ratios(k)
                self._log_c = np.concatenate(
                    (self._log_c, self._log_c[-1] + np.cumsum(steps))
                )
            return self._log_c

    def plan(self, x: float, max_bits: float = math.inf):
        """(peak log-term in nats, number of terms, fractional bits).

        Planning stops early once the bits needed exceed ``max_bits``; the
        returned bit count is then a lower bound.
        """
        if x == 0.0:
            return 0.0, 1, _TARGET_BITS + 8
        lx = math.log(x)
        n = 64
        while True:
            log_c = self._log_coeffs(n)[: n + 1]
            lt = log_c + np.arange(n + 1) * lx
            peak = int(np.argmax(lt))
            low_bits = lt[peak] / _LN2 + _TARGET_BITS
            if low_bits > max_bits:
                return float(lt[peak]), n + 1, math.ceil(low_bits)
            floor = -(_TARGET_BITS + 8) * _LN2
            past = np.nonzero(lt[peak:] < floor)[0]
            if past.size:
                n_terms = peak + int(past[0]) + 1
                break
            n *= 2
        peak_log = max(float(lt[peak]), 0.0)
        bits = math.ceil(peak_log / _LN2) + _TARGET_BITS + 2 * n_terms.bit_length() + 8
        return peak_log, n_terms, bits

    def required_digits(self, x: float, ceiling_digits: float = math.inf) -> int:
        return math.ceil(self.plan(x, ceiling_digits / _LOG10_2 + 1)[2] * _LOG10_2)

    # -- high-precision ratios
    def _fixed_ratios(self, n: int, prec: int) -> list[int]:
        with self._lock:
            if prec > self._ratio_prec:
                self._ratio_prec = 256 * math.ceil(prec / 256)
                self._ratios = []
            if len(self._ratios) < n:
                scale_bits = self._ratio_prec
                with mp.workprec(scale_bits + 32):
                    scale = mp.mpf(2) ** scale_bits
                    start = len(self._ratios)
                    for k in range(start, max(n, 2 * start)):
                        self._ratios.append(int(mp.floor(self._mp_ratio(k) * scale)))
            shift = self._ratio_prec - prec
            return [r >> shift for r in self._ratios[:n]]

    def evaluate(self, x: float, ceiling_digits: int = PRECISION_CEILING_DIGITS) -> float:
        x = float(x)
        if not x >= 0.0 or not math.isfinite(x):
            raise ParameterError(f"argument must be finite and >= 0, got {x}")
        if x == 0.0:
            return 1.0
        peak_log, n_terms, prec = self.plan(x, ceiling_digits / _LOG10_2 + 1)
        digits = math.ceil(prec * _LOG10_2)
        if digits > ceiling_digits:
            x_max = self.x_max(ceiling_digits)
            raise PrecisionLoss(
                f"E(-x) at x={x:g} needs {digits} significant digits, over the "
                f"ceiling of {ceiling_digits}; admissible range is 0 <= x <= {x_max:.6g}",
                x=x,
                x_max=x_max,
                digits=digits,
            )
        ratios = self._fixed_ratios(n_terms, prec)
        mant, den = x.as_integer_ratio()
        e = den.bit_length() - 1
        one = 1 << prec
        stop = 1 << max(prec - _TARGET_BITS - 8, 0)
        peak_idx = None
        term = one
        total = one
        prev = one
        for k in range(n_terms - 1):
            term = ((term * mant) >> e) * ratios[k] >> prec
            if k & 1:
                total += term
            else:
                total -= term
            if peak_idx is None and term < prev:
                peak_idx = k
            if peak_idx is not None and term < stop:
                break
            prev = term
        raw = total / one
        if raw < -_RAW_TOLERANCE or raw > 1.0 + _RAW_TOLERANCE:
            warnings.warn(
                f"kernel sum {raw!r} at x={x:g} left [0, 1] by more than {_RAW_TOLERANCE}",
                RuntimeWarning,
                stacklevel=3,
            )
        return min(max(raw, 0.0), 1.0)

    def x_max(self, ceiling_digits: int = PRECISION_CEILING_DIGITS) -> float:
        lo, hi = 0.0, 1.0
        while self.required_digits(hi, ceiling_digits) <= ceiling_digits:
            lo, hi = hi, 2.0 * hi
            if hi > 1e12:
                return math.inf
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if self.required_digits(mid, ceiling_digits) <= ceiling_digits:
                lo = mid
            else:
                hi = mid
        return lo


class _KSEngine(_SeriesEngine):
    def __init__(self, a: float, m: float, l: float):
        super().__init__()
        self.a, self.m, self.l = a, m, l

    def _float_log_ratios(self, k):
        a, m, l = self.a, self.m, self.l
        return gammaln(1.0 + a * (k * m + l)) - gammaln(1.0 + a * (k * m + l + 1.0))

    def _mp_ratio(self, k):
        a, m, l = mp.mpf(self.a), mp.mpf(self.m), mp.mpf(self.l)
        u = a * (k * m + l)
        return mp.exp(mp.loggamma(1 + u) - mp.loggamma(1 + u + a))


class _MLEngine(_SeriesEngine):
    """c_n = 1/Gamma(1 + n beta), each coefficient from its own reciprocal gamma."""

    def __init__(self, beta: float):
        super().__init__()
        self.beta = beta

    def _float_log_ratios(self, k):
        b = self.beta
        return gammaln(1.0 + k * b) - gammaln(1.0 + (k + 1.0) * b)

    def _mp_ratio(self, k):
        b = mp.mpf(self.beta)
        return mp.rgamma(1 + (k + 1) * b) / mp.rgamma(1 + k * b)


_engines: dict = {}
_engines_lock = threading.Lock()


def _engine(key, factory):
    with _engines_lock:
        eng = _engines.get(key)
        if eng is None:
            eng = _engines[key] = factory()
        return eng


def _ks_engine(params: KSParams) -> _KSEngine:
    return _engine(("ks", params.a, params.m, params.l),
                   lambda: _KSEngine(params.a, params.m, params.l))


def _ml_engine(beta: float) -> _MLEngine:
    return _engine(("ml", float(beta)), lambda: _MLEngine(float(beta)))


def ks_eval(params: KSParams, x: float, ceiling_digits: int = PRECISION_CEILING_DIGITS) -> float:
    """E_{a,m,l}(-x) for x >= 0, clamped to [0, 1]."""
    return _ks_engine(params).evaluate(x, ceiling_digits)


def ks_eval_many(params: KSParams, xs, ceiling_digits: int = PRECISION_CEILING_DIGITS) -> np.ndarray:
    eng = _ks_engine(params)
    xs = np.asarray(xs, dtype=float)
    out = np.array([eng.evaluate(float(x), ceiling_digits) for x in xs.ravel()])
    return out.reshape(xs.shape)


def ml_eval(beta: float, x: float, ceiling_digits: int = PRECISION_CEILING_DIGITS) -> float:
    """E_beta(-x) for x >= 0."""
    MittagLeffler(beta)  # validates
    return _ml_engine(beta).evaluate(x, ceiling_digits)


def admissible_x_max(kind: KernelKind, ceiling_digits: int = PRECISION_CEILING_DIGITS) -> float:
    """Largest series argument evaluable under the precision ceiling."""
    if isinstance(kind, Exponential):
        return math.inf
    if isinstance(kind, MittagLeffler):
        return _ml_engine(kind.beta).x_max(ceiling_digits)
    return _ks_engine(kind.params).x_max(ceiling_digits)


def kernel_exponent(kind: KernelKind) -> float:
    if isinstance(kind, Exponential):
        return 1.0
    if isinstance(kind, MittagLeffler):
        return kind.beta
    return kind.params.beta


def kernel_eval(kind: KernelKind, theta: float, t: float) -> float:
    """Relaxation kernel value at rate theta >= 0 and time t >= 0.

    Exponential: exp(-theta t); MittagLeffler(b): E_b(-theta t^b);
    KilbasSaigo(p): E_{a,m,l}(-theta t^(alpha+gamma)).
    """
    theta, t = float(theta), float(t)
    if theta < 0 or t < 0:
        raise ParameterError("theta and t must be >= 0")
    if isinstance(kind, Exponential):
        return math.exp(-theta * t)
    if isinstance(kind, MittagLeffler):
        return ml_eval(kind.beta, theta * t ** kind.beta)
    if isinstance(kind, KilbasSaigo):
        return ks_eval(kind.params, theta * t ** kind.params.beta)
    raise ParameterError(f"unknown kernel kind {kind!r}")


def kernel_values(kind: KernelKind, thetas, t: float) -> np.ndarray:
    """Kernel at one time for a vector of rates; used by the spectral solver."""
    thetas = np.asarray(thetas, dtype=float)
    if isinstance(kind, Exponential):
        return np.exp(-thetas * t)
    beta = kernel_exponent(kind)
    xs = thetas * float(t) ** beta
    if isinstance(kind, MittagLeffler):
        eng = _ml_engine(kind.beta)
    else:
        eng = _ks_engine(kind.params)
    out = np.empty_like(xs)
    for i, x in enumerate(xs):
        try:
            out[i] = eng.evaluate(float(x))
        except PrecisionLoss as exc:
            raise PrecisionLoss(
                f"{exc} (theta={thetas[i]:g}, t={t:g})", x=exc.x, x_max=exc.x_max, digits=exc.digits
            ) from None
    return out
