"""Law of the time-change multiplier Z with E[exp(-xZ)] = E_{a,m,l}(-x).

With beta = alpha + gamma the moments are E[Z^n] = n! c_n.  Writing log c_n
as a sum of log-gamma differences and expanding Binet's integral shows that
-log Z is infinitely divisible, with Levy density

    sum_{i>=0} (exp(-(1 + i/beta) v) - exp(-((1 + gamma + i)/beta) v)) / (v (1 - e^-v)),

which is a sum of -log Beta(1 + i/beta, (1 - alpha)/beta) Levy densities.  Hence

    Z = lim_M C_M prod_{i<M} B_i,   B_i ~ Beta(1 + i/beta, (1 - alpha)/beta),
    C_M = Gamma(1 + gamma + M) / (beta Gamma(beta + M)),

and the finite-M product reproduces n! c_n up to O(n^2/M).  The same
factorization gives E[Z^s] for complex s, from which the density of log Z is
obtained by Fourier inversion and tabulated as a CDF.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, loggamma, polygamma

from .errors import ParameterError
from .specfun import KSParams, ks_moments

__all__ = [
    "beta_factors",
    "beta_product_moments",
    "lognormal_tail_sigma",
    "log_mellin",
    "ZTable",
    "cdf_table",
]


def beta_factors(ks: KSParams, M: int):
    """(first shape parameters a_i, common second shape b, log C_M)."""
    if ks.alpha >= 1.0:
        raise ParameterError("alpha = 1 gives the degenerate multiplier Z = 1")
    b = (1.0 - ks.alpha) / ks.beta
    a = 1.0 + np.arange(M) / ks.beta
    log_c = gammaln(1.0 + ks.gamma + M) - math.log(ks.beta) - gammaln(ks.beta + M)
    return a, b, float(log_c)


def beta_product_moments(ks: KSParams, M: int, k_max: int) -> np.ndarray:
    """Exact E[(C_M prod_{i<M} B_i)^k] for k = 0..k_max."""
    a, b, log_c = beta_factors(ks, M)
    k = np.arange(k_max + 1, dtype=float)[:, None]
    logs = k[:, 0] * log_c + np.sum(gammaln(a + k) - gammaln(a) - gammaln(a + b + k) + gammaln(a + b), axis=1)
    return np.exp(logs)


def lognormal_tail_sigma(ks: KSParams, M: int) -> float:
    """sigma of the mean-one lognormal factor standing in for prod_{i>=M} B_i.

    Chosen so that the completed product has the exact second moment.
    """
    exact = ks_moments(ks, 2)[2]
    trunc = beta_product_moments(ks, M, 2)[2]
    return math.sqrt(max(math.log(exact / trunc), 0.0))


def _tail_cumulants(ks: KSParams, M: int, span: int = 200_000):
    """sum_{i>=M} [psi^(j-1)(a_i) - psi^(j-1)(a_i + b)] for j = 2, 3, 4."""
    b = (1.0 - ks.alpha) / ks.beta
    i = np.arange(M, M + span, dtype=float)
    a = 1.0 + i / ks.beta
    out = []
    for j in (2, 3, 4):
        f = polygamma(j - 1, a) - polygamma(j - 1, a + b)
        # terms decay like i^-j beyond the window
        out.append(float(f.sum() + f[-1] * (M + span) / (j - 1)))
    return out


@lru_cache(maxsize=32)
def _mellin_setup(alpha: float, gamma: float, M: int):
    ks = KSParams(alpha, gamma)
    a, b, log_c = beta_factors(ks, M)
    t2, t3, t4 = _tail_cumulants(ks, M)
    head1 = float(np.sum(gammaln(a + 1) - gammaln(a) - gammaln(a + b + 1) + gammaln(a + b)))
    log_m1 = math.log(ks_moments(ks, 1)[1])
    shift = log_m1 - log_c - head1 - t2 / 2 - t3 / 6 - t4 / 24
    return a, b, log_c + shift, (t2, t3, t4)


def log_mellin(ks: KSParams, s, M: int = 1000) -> np.ndarray:
    """log E[Z^s] for complex s with Re s > -1.

    M beta factors are summed exactly; the rest enter through their first four
    cumulants, with the drift fixed so that E[Z] = c_1 exactly.
    """
    a, b, drift, (t2, t3, t4) = _mellin_setup(ks.alpha, ks.gamma, M)
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    out = np.empty(s.shape, dtype=complex)
    for lo in range(0, s.size, 256):
        sc = s[lo : lo + 256, None]
        head = np.sum(loggamma(a + sc) - gammaln(a) - loggamma(a + b + sc) + gammaln(a + b), axis=1)
        sc = sc[:, 0]
        out[lo : lo + 256] = drift * sc + head + t2 * sc**2 / 2 + t3 * sc**3 / 6 + t4 * sc**4 / 24
    return out


@dataclass(frozen=True)
class ZTable:
    """CDF of Z on a log-spaced grid, with an algebraic lower tail.

    Below ``z[0]`` the CDF is ``cdf[0] * (z / z[0]) ** tail_exponent``.
    """

    z: np.ndarray
    cdf: np.ndarray
    tail_exponent: float

    def quantile(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        y = np.interp(u, self.cdf, np.log(self.z))
        out = np.exp(y)
        low = u < self.cdf[0]
        if np.any(low):
            out = np.where(low, self.z[0] * (np.maximum(u, 1e-300) / self.cdf[0]) ** (1.0 / self.tail_exponent), out)
        return out

    def expectation(self, g) -> float:
        """E[g(Z)] by Riemann-Stieltjes sum over the table (lower tail ignored)."""
        zm = 0.5 * (self.z[1:] + self.z[:-1])
        return float(np.sum(g(zm) * np.diff(self.cdf)))


def _upper_bound(ks: KSParams, eps: float = 1e-18) -> float:
    """z with P(Z > z) <= eps, from min_k E[Z^k] / z^k."""
    m = ks_moments(ks, 80)
    k = np.arange(1, 81)
    # smallest z with min_k m_k z^-k <= eps
    return float(np.min(np.exp((np.log(m[1:]) - math.log(eps)) / k)))


@lru_cache(maxsize=16)
def _cdf_table(alpha: float, gamma: float, n_grid: int, M: int) -> ZTable:
    ks = KSParams(alpha, gamma)
    y_lo, y_hi = -40.0, math.log(_upper_bound(ks))
    span = y_hi - y_lo
    period = 2.0 * span
    dw = 2.0 * math.pi / period
    # extend the frequency grid until |phi| is negligible
    ws, phis = [], []
    w0 = 0.0
    while True:
        w = w0 + dw * np.arange(512)
        phi = np.exp(log_mellin(ks, 1j * w, M))
        ws.append(w)
        phis.append(phi)
        if np.all(np.abs(phi[-64:]) < 1e-17) or w[-1] > 4000:
            break
        w0 = w[-1] + dw
    w = np.concatenate(ws)
    phi = np.concatenate(phis)
    keep = np.nonzero(np.abs(phi) >= 1e-18)[0]
    w, phi = w[: keep[-1] + 1], phi[: keep[-1] + 1]
    wt = np.full(w.size, dw)
    wt[0] = 0.5 * dw
    y = np.linspace(y_lo, y_hi, n_grid)
    # density of log Z: (1/pi) int_0^inf Re(phi(w) exp(-i w y)) dw
    dens = (np.cos(np.outer(y, w)) @ (wt * phi.real) + np.sin(np.outer(y, w)) @ (wt * phi.imag)) / math.pi
    dens = np.clip(dens, 0.0, None)
    cdf = np.concatenate(([0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(y))))
    cdf /= cdf[-1]
    # replace the noise-dominated far-left CDF by a power law fitted on [1e-7, 1e-5]
    fit = (cdf >= 1e-7) & (cdf <= 1e-5)
    start = int(np.argmax(cdf >= 1e-7))
    if fit.sum() >= 3:
        p = float(np.polyfit(y[fit], np.log(cdf[fit]), 1)[0])
    else:
        p = 1.0
    z = np.exp(y[start:])
    cdf = np.maximum.accumulate(cdf[start:])
    return ZTable(z=z, cdf=cdf, tail_exponent=p)


def cdf_table(ks: KSParams, n_grid: int = 4096, M: int = 1000) -> ZTable:
    if ks.alpha >= 1.0:
        raise ParameterError("alpha = 1 gives the degenerate multiplier Z = 1; no table needed")
    return _cdf_table(ks.alpha, ks.gamma, n_grid, M)
