import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from acqregret import InvalidKernelError, Kernel, KernelFamily, kernel_eval, kernel_grad_x1
from helpers import central_diff, rel_err

FAMILIES = ["se", "matern52", "matern32"]


def test_se_zero_distance():
    assert kernel_eval(Kernel("se", 1.0, [1.0, 1.0]), [0.3, 0.2], [0.3, 0.2]) == 1.0


def test_se_unit_offset():
    k = Kernel("se", 1.0, [1.0, 1.0])
    assert kernel_eval(k, [1.0, 0.0], [0.0, 0.0]) == pytest.approx(math.exp(-0.5), abs=1e-12)
    g = kernel_grad_x1(k, [1.0, 0.0], [0.0, 0.0])
    np.testing.assert_allclose(g, [-math.exp(-0.5), 0.0], atol=1e-12)


def test_matern52_diagonal_is_signal_variance():
    assert kernel_eval(Kernel("matern52", 2.0, [0.7]), [0.1], [0.1]) == pytest.approx(4.0)


def test_matern52_unit_distance_matches_mpmath():
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 40
    r5 = mpmath.sqrt(5)
    oracle = float((1 + r5 + mpmath.mpf(5) / 3) * mpmath.exp(-r5))
    got = kernel_eval(Kernel("matern52", 1.0, [1.0]), [1.0], [0.0])
    assert got == pytest.approx(oracle, abs=1e-14)
    assert got == pytest.approx(0.523994, abs=1e-6)


@pytest.mark.parametrize("family", FAMILIES)
def test_gradient_zero_at_coincident_points(family):
    k = Kernel(family, 1.3, [0.4, 0.9])
    g = kernel_grad_x1(k, [0.2, 0.5], [0.2, 0.5])
    assert np.all(np.isfinite(g))
    np.testing.assert_array_equal(g, 0.0)


@pytest.mark.parametrize("family", FAMILIES)
def test_gradient_matches_finite_differences(family):
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(100):
        d = int(rng.integers(1, 7))
        k = Kernel(family, float(np.exp(rng.uniform(-1, 1))), np.exp(rng.uniform(-1.5, 0.5, d)))
        x1, x2 = rng.random(d), rng.random(d)
        fd = central_diff(lambda z: kernel_eval(k, z, x2), x1)
        worst = max(worst, rel_err(kernel_grad_x1(k, x1, x2), fd))
    assert worst < 1e-6


@pytest.mark.parametrize("bad", [(0.0, [1.0]), (-1.0, [1.0]), (1.0, [0.0]), (1.0, [1.0, -2.0]),
                                 (float("nan"), [1.0]), (1.0, [float("inf")])])
def test_invalid_hyperparameters_rejected(bad):
    with pytest.raises(InvalidKernelError):
        Kernel("se", *bad)


def test_unknown_family_rejected():
    with pytest.raises(InvalidKernelError):
        Kernel("rbf-ish", 1.0, [1.0])


def test_family_aliases():
    assert KernelFamily.parse("SE") is KernelFamily.parse("se")


_vec = st.lists(st.floats(-3, 3), min_size=3, max_size=3)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(FAMILIES), _vec, _vec, _vec)
def test_symmetry_and_translation(family, a, b, c):
    k = Kernel(family, 1.7, [0.5, 1.0, 2.0])
    a, b, c = map(np.array, (a, b, c))
    v = kernel_eval(k, a, b)
    assert v == pytest.approx(kernel_eval(k, b, a), rel=1e-12, abs=1e-300)
    assert v == pytest.approx(kernel_eval(k, a + c, b + c), rel=1e-9, abs=1e-12)
    assert 0.0 <= v <= k.variance + 1e-12
    assert kernel_eval(k, a, a) == pytest.approx(k.variance)


@pytest.mark.parametrize("family", FAMILIES)
def test_lengthscale_derivative_matches_finite_differences(family):
    rng = np.random.default_rng(5)
    X = rng.random((5, 3))
    ls = np.array([0.3, 0.6, 1.1])
    dK = Kernel(family, 1.2, ls).grad_log_lengthscales(X)
    for j in range(3):
        h = 1e-6
        up, dn = ls.copy(), ls.copy()
        up[j] *= math.exp(h)
        dn[j] *= math.exp(-h)
        fd = (Kernel(family, 1.2, up)(X, X) - Kernel(family, 1.2, dn)(X, X)) / (2 * h)
        np.testing.assert_allclose(dK[j], fd, atol=1e-7)
