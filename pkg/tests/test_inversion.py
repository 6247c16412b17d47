import math

import numpy as np
import pytest

from ksqueue.inversion import stehfest, stehfest_weights, talbot, talbot_nodes


@pytest.mark.parametrize("t", [0.1, 1.0, 5.0, 20.0])
def test_talbot_exponential(t):
    assert talbot(lambda s: 1.0 / (s + 1.0), t) == pytest.approx(math.exp(-t), abs=1e-12)


@pytest.mark.parametrize("t", [0.5, 2.0, 10.0])
def test_talbot_vector_valued(t):
    F = lambda s: np.array([1.0 / s, 1.0 / s**2, 1.0 / (s + 2.0)])  # noqa: E731
    np.testing.assert_allclose(talbot(F, t), [1.0, t, math.exp(-2.0 * t)], atol=1e-10)


def test_talbot_nodes_shape():
    s, w = talbot_nodes(1.0, 32)
    assert s.shape == w.shape == (32,)
    assert s[0].imag == 0


def test_stehfest_weights_sum_to_zero():
    # F(s) = 1/s gives f = 1: sum_k V_k / k = 1/ln 2 * ln 2
    v = np.array(stehfest_weights(12))
    assert abs(v.sum()) < 1e-6
    assert np.sum(v / np.arange(1, 13)) == pytest.approx(1.0 / math.log(2.0) * math.log(2.0), rel=1e-8)


def test_stehfest_exponential():
    # twelve Gaver-Stehfest terms resolve an exponential to about 1e-5
    assert stehfest(lambda s: 1.0 / (s + 1.0), 1.0) == pytest.approx(math.exp(-1.0), abs=3e-5)


def test_talbot_roundoff_grows_with_nodes():
    f = lambda s: 1.0 / (s + 1.0)  # noqa: E731
    err20 = abs(talbot(f, 1.0, 20) - math.exp(-1.0))
    err64 = abs(talbot(f, 1.0, 64) - math.exp(-1.0))
    assert err20 < 1e-12 < err64


def test_stehfest_odd_order_rejected():
    with pytest.raises(ValueError):
        stehfest_weights(11)
