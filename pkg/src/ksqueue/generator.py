"""Truncated M/M/1 birth-death generator, its spectrum, and classical references."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal
from scipy.stats import poisson

from .errors import NumericError, ParameterError, StabilityError

__all__ = [
    "QueueParams",
    "TruncatedGenerator",
    "SpectralDecomposition",
    "StationaryResult",
    "TransientTable",
    "build_generator",
    "spectral_decompose",
    "stationary_dist",
    "classical_transient_oracle",
    "TABLE1_QUEUE",
]


@dataclass(frozen=True)
class QueueParams:
    lam: float
    mu: float

    def __post_init__(self):
        lam, mu = float(self.lam), float(self.mu)
        if not (lam >= 0 and mu > 0 and math.isfinite(lam) and math.isfinite(mu)):
            raise ParameterError(f"need lambda >= 0 and mu > 0, got {lam}, {mu}")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "mu", mu)

    @property
    def rho(self) -> float:
        return self.lam / self.mu

    @property
    def kappa(self) -> float:
        return self.mu - self.lam

    @property
    def stable(self) -> bool:
        return self.rho < 1.0

    @property
    def spectral_radius_bound(self) -> float:
        """lambda + mu + 2 sqrt(lambda mu): bound on |eigenvalue| of any truncation."""
        return self.lam + self.mu + 2.0 * math.sqrt(self.lam * self.mu)


TABLE1_QUEUE = QueueParams(0.8, 1.0)


@dataclass(frozen=True)
class TruncatedGenerator:
    """Birth-death chain on {0..n_max}.

    ``sup[n]`` is the birth rate n -> n+1 (lambda), ``sub[n]`` the death rate
    n+1 -> n (mu), ``diag[n]`` minus the total outflow of n.  The forward
    equations read dp/dt = Q p with Q = ``forward_matrix()``, whose columns
    sum to zero unless ``literal_boundary`` is set.
    """

    n_max: int
    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray
    literal_boundary: bool = False

    def forward_matrix(self) -> np.ndarray:
        q = np.diag(self.diag)
        q += np.diag(self.sup, -1)  # p_n gains lambda p_{n-1}
        q += np.diag(self.sub, 1)  # p_n gains mu p_{n+1}
        return q

    def column_sums(self) -> np.ndarray:
        return self.forward_matrix().sum(axis=0)

    def banded(self) -> np.ndarray:
        """Q in scipy.linalg.solve_banded (1, 1) layout."""
        ab = np.zeros((3, self.n_max + 1))
        ab[0, 1:] = self.sub
        ab[1] = self.diag
        ab[2, :-1] = self.sup
        return ab


def build_generator(params: QueueParams, n_max: int, literal_boundary: bool = False) -> TruncatedGenerator:
    """Conservative truncation: state 0 has no death, state n_max no birth.

    With ``literal_boundary`` state 0 keeps the -(lambda+mu) diagonal of the
    unreflected forward equation, so probability leaks at rate mu p_0.
    """
    if n_max < 1:
        raise ParameterError("n_max must be >= 1")
    lam, mu = params.lam, params.mu
    diag = np.full(n_max + 1, -(lam + mu))
    diag[0] = -(lam + mu) if literal_boundary else -lam
    diag[-1] = -mu
    return TruncatedGenerator(
        n_max=n_max,
        sub=np.full(n_max, mu),
        diag=diag,
        sup=np.full(n_max, lam),
        literal_boundary=literal_boundary,
    )


@dataclass(frozen=True)
class SpectralDecomposition:
    """eigenvalues[j] <= 0, sorted descending; p_n(t) = sum_j weights[j, n] k(-eig_j, t)."""

    eigenvalues: np.ndarray
    init_weights: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)

    @property
    def rates(self) -> np.ndarray:
        """-eigenvalues clipped at 0: the arguments fed to relaxation kernels."""
        return np.clip(-self.eigenvalues, 0.0, None)

    def reconstruct(self, kernel_vals: np.ndarray) -> np.ndarray:
        """p(t) given the kernel evaluated at every rate (same order)."""
        return kernel_vals @ self.init_weights


def spectral_decompose(gen: TruncatedGenerator, params: QueueParams) -> SpectralDecomposition:
    """Eigen-expansion of the forward operator started from state 0.

    Q = D S D^-1 with D = diag(rho^(n/2)) and S symmetric tridiagonal with
    off-diagonal sqrt(lambda mu).
    """
    if params.lam == 0:
        raise ParameterError("spectral route needs lambda > 0")
    off = np.full(gen.n_max, math.sqrt(params.lam * params.mu))
    try:
        w, u = eigh_tridiagonal(gen.diag, off)
    except LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericError(
            f"tridiagonal eigensolver failed for n_max={gen.n_max}, diag range "
            f"[{gen.diag.min()}, {gen.diag.max()}], off-diagonal {off[0]}"
        ) from exc
    order = np.argsort(w)[::-1]
    w, u = w[order], u[:, order]
    scale = np.sqrt(params.rho) ** np.arange(gen.n_max + 1)
    weights = (u * u[0, :]).T * scale
    return SpectralDecomposition(eigenvalues=w, init_weights=weights, eigenvectors=u)


@dataclass(frozen=True)
class StationaryResult:
    probs: np.ndarray
    tail_mass: float
    untruncated: np.ndarray


def stationary_dist(params: QueueParams, n_max: int) -> StationaryResult:
    """Geometric law (1-rho) rho^n restricted to {0..n_max} and renormalized."""
    rho = params.rho
    if rho >= 1:
        raise StabilityError(f"no stationary law for rho = {rho} >= 1")
    raw = (1.0 - rho) * rho ** np.arange(n_max + 1)
    tail = rho ** (n_max + 1)
    return StationaryResult(probs=raw / raw.sum(), tail_mass=tail, untruncated=raw)


@dataclass
class TransientTable:
    """p_n(t_i) stored as probs[i, n]."""

    times: np.ndarray
    probs: np.ndarray
    route: str
    n_max: int = 0
    column_sums: np.ndarray | None = None
    min_raw: float = 0.0

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.probs = np.asarray(self.probs, dtype=float)
        self.n_max = self.probs.shape[1] - 1
        if self.column_sums is None:
            self.column_sums = self.probs.sum(axis=1)

    def truncated(self, n_max: int) -> "TransientTable":
        return TransientTable(self.times, self.probs[:, : n_max + 1], self.route,
                              column_sums=self.column_sums, min_raw=self.min_raw)


def _check_times(times) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or np.any(times < 0) or np.any(np.diff(times) < 0):
        raise ParameterError("times must be a nonnegative nondecreasing sequence")
    return times


def classical_transient_oracle(params: QueueParams, n_max: int, times, tol: float = 1e-13) -> TransientTable:
    """Uniformization: p(t) = sum_k Pois(k; q t) P^k e_0 with P = I + Q/q."""
    times = _check_times(times)
    gen = build_generator(params, n_max)
    q = params.lam + params.mu
    qt_max = q * float(times.max(initial=0.0))
    k_max = int(poisson.isf(tol, qt_max)) + 10 if qt_max > 0 else 1
    P = np.eye(n_max + 1) + gen.forward_matrix() / q
    vecs = np.empty((k_max + 1, n_max + 1))
    v = np.zeros(n_max + 1)
    v[0] = 1.0
    for k in range(k_max + 1):
        vecs[k] = v
        v = P @ v
    k = np.arange(k_max + 1)
    weights = poisson.pmf(k[None, :], q * times[:, None])
    probs = weights @ vecs
    return TransientTable(times, probs, "ClassicalOracle")
