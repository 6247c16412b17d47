"""Numerical inverse Laplace transforms for vector-valued transforms.

``F`` maps a complex (or real, for Stehfest) Laplace variable to a numpy array.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

__all__ = ["talbot", "stehfest", "stehfest_weights", "talbot_nodes"]


def talbot_nodes(t: float, n_nodes: int = 20):
    """Fixed-Talbot contour (Abate-Valko): nodes s_k and complex weights.

    f(t) ~= Re(sum_k weight_k F(s_k)); the k = 0 node is real.  In double
    precision roundoff grows with the node count; about 20 nodes is the sweet
    spot (errors near 1e-13 on smooth transforms, 1e-9 at 48).
    """
    r = 2.0 * n_nodes / (5.0 * t)
    theta = np.arange(1, n_nodes) * math.pi / n_nodes
    cot = 1.0 / np.tan(theta)
    s = np.concatenate(([r + 0j], r * theta * (cot + 1j)))
    sigma = theta + (theta * cot - 1.0) * cot
    w = np.concatenate(([0.5 * math.exp(r * t) + 0j], np.exp(t * s[1:]) * (1.0 + 1j * sigma)))
    return s, w * (r / n_nodes)


def talbot(F, t: float, n_nodes: int = 20) -> np.ndarray:
    s, w = talbot_nodes(t, n_nodes)
    acc = None
    for sk, wk in zip(s, w):
        term = (wk * F(sk)).real
        acc = term if acc is None else acc + term
    return acc


@lru_cache(maxsize=None)
def stehfest_weights(n: int = 12) -> tuple:
    if n % 2:
        raise ValueError("Stehfest order must be even")
    h = n // 2
    out = []
    for k in range(1, n + 1):
        v = 0.0
        for j in range((k + 1) // 2, min(k, h) + 1):
            v += (
                j**h * math.factorial(2 * j)
                / (math.factorial(h - j) * math.factorial(j) * math.factorial(j - 1)
                   * math.factorial(k - j) * math.factorial(2 * j - k))
            )
        out.append((-1) ** (k + h) * v)
    return tuple(out)


def stehfest(F, t: float, n: int = 12) -> np.ndarray:
    """Gaver-Stehfest inversion; F is only called at real s > 0."""
    ln2t = math.log(2.0) / t
    acc = None
    for k, v in enumerate(stehfest_weights(n), start=1):
        term = v * np.real(F(k * ln2t))
        acc = term if acc is None else acc + term
    return acc * ln2t
