import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mmdvar.errors import BandwidthUndefinedError, InputError, UnsortedInputError, UnsupportedFamilyError
from mmdvar.kernels import (
    KernelFamily,
    KernelSpec,
    Sample,
    as_sample,
    kernel_eval,
    kernel_matrix,
    median_heuristic,
    power_bandwidth,
)

finite = st.floats(-1e3, 1e3, allow_nan=False)
sigmas = st.floats(1e-2, 1e2)


def brute_median(points, metric):
    z = np.asarray(points, float)
    d = sorted(metric(z[i], z[j]) for i in range(len(z)) for j in range(i + 1, len(z)))
    k = len(d)
    return 0.5 * (d[(k - 1) // 2] + d[k // 2])


def test_kernel_eval_examples():
    lap = KernelSpec.laplacian(1.0)
    assert kernel_eval(lap, 0.0, 0.0) == 1.0
    assert kernel_eval(lap, 0.0, 1.0) == pytest.approx(0.3678794412, abs=1e-10)
    assert kernel_eval(KernelSpec.gaussian(1.0), 0.0, 1.0) == pytest.approx(0.6065306597, abs=1e-10)


def test_multivariate_distances():
    x, y = [0.0, 0.0], [1.0, 2.0]
    assert kernel_eval(KernelSpec.laplacian(2.0), x, y) == pytest.approx(math.exp(-3 / 2))
    assert kernel_eval(KernelSpec.gaussian(2.0), x, y) == pytest.approx(math.exp(-5 / 8))


def test_kernel_eval_errors():
    lap = KernelSpec.laplacian(1.0)
    with pytest.raises(InputError):
        kernel_eval(lap, [0.0, 1.0], [0.0])
    with pytest.raises(InputError):
        kernel_eval(lap, math.nan, 0.0)
    with pytest.raises(InputError):
        kernel_eval(lap, 0.0, math.inf)


@pytest.mark.parametrize("sigma", [0.0, -1.0, math.nan, math.inf])
def test_spec_rejects_bad_bandwidth(sigma):
    with pytest.raises(InputError):
        KernelSpec.laplacian(sigma)


def test_spec_family_is_closed():
    assert {f.value for f in KernelFamily} == {"laplacian", "gaussian"}
    with pytest.raises(ValueError):
        KernelSpec("cauchy", 1.0)


@given(finite, finite, sigmas, st.sampled_from(list(KernelFamily)))
def test_symmetric_and_bounded(x, y, sigma, family):
    spec = KernelSpec(family, sigma)
    k = kernel_eval(spec, x, y)
    assert k == kernel_eval(spec, y, x)
    assert 0.0 <= k <= 1.0
    if x == y:
        assert k == 1.0


@given(finite, finite, st.floats(0.1, 10), st.integers(1, 5))
def test_power_identity(x, y, sigma, p):
    spec = KernelSpec.laplacian(sigma)
    assert abs(kernel_eval(power_bandwidth(spec, p), x, y) - kernel_eval(spec, x, y) ** p) <= 1e-14


def test_power_bandwidth_examples():
    assert power_bandwidth(KernelSpec.laplacian(1.0), 2).sigma == 0.5
    assert power_bandwidth(KernelSpec.laplacian(3.0), 1).sigma == 3.0
    half = power_bandwidth(KernelSpec.laplacian(1.0), 2)
    assert kernel_eval(half, 0.0, 1.0) == pytest.approx(math.exp(-2.0), rel=1e-15)
    with pytest.raises(UnsupportedFamilyError):
        power_bandwidth(KernelSpec.gaussian(1.0), 2)
    with pytest.raises(InputError):
        power_bandwidth(KernelSpec.laplacian(1.0), 0)


def test_kernel_matrix_matches_pointwise(rng):
    a, b = rng.normal(size=(5, 3)), rng.normal(size=(4, 3))
    for spec in (KernelSpec.laplacian(0.7), KernelSpec.gaussian(1.3)):
        k = kernel_matrix(spec, a, b)
        want = [[kernel_eval(spec, ai, bj) for bj in b] for ai in a]
        np.testing.assert_allclose(k, want, rtol=1e-14)


def test_sample_validation():
    s = Sample([3.0, 1.0, 2.0])
    assert (s.n, s.d) == (3, 1)
    assert not s.data.flags.writeable
    assert list(s.sorted_copy().values) == [1.0, 2.0, 3.0]
    with pytest.raises(UnsortedInputError):
        Sample([3.0, 1.0], sorted=True)
    with pytest.raises(InputError):
        Sample(np.zeros((2, 2)), sorted=True)
    with pytest.raises(InputError):
        Sample([])
    with pytest.raises(InputError):
        Sample([1.0, math.nan])
    with pytest.raises(InputError):
        Sample(np.zeros((2, 2, 2)))
    assert as_sample(s) is s


def test_median_examples():
    assert median_heuristic([0.0], [2.0]) == 2.0
    assert median_heuristic([0.0, 1.0], [2.0]) == 1.0
    with pytest.raises(BandwidthUndefinedError):
        median_heuristic([0.0, 0.0], [0.0])
    with pytest.raises(InputError):
        median_heuristic([0.0], np.zeros((1, 2)))


def test_median_zero_falls_back_to_smallest_gap():
    # five copies of 0 and one 0.5: most pairs are at distance 0
    assert median_heuristic([0.0] * 5, [0.5]) == 0.5
    assert median_heuristic(np.zeros((4, 2)), [[0.3, 0.4]]) == pytest.approx(0.5)


@given(st.lists(st.integers(-50, 50).map(float), min_size=1, max_size=25),
       st.lists(st.integers(-50, 50).map(float), min_size=1, max_size=25))
def test_median_matches_brute_force_with_ties(x, y):
    pooled = x + y
    if len(set(pooled)) < 2:
        return
    want = brute_median(pooled, lambda a, b: abs(a - b))
    if want == 0:
        want = min(abs(a - b) for a in pooled for b in pooled if a != b)
    assert median_heuristic(x, y) == want


def test_median_multivariate_metric(rng):
    x, y = rng.normal(size=(7, 3)), rng.normal(size=(6, 3))
    pooled = np.vstack([x, y])
    l1 = brute_median(pooled, lambda a, b: np.abs(a - b).sum())
    l2 = brute_median(pooled, lambda a, b: np.sqrt(((a - b) ** 2).sum()))
    assert median_heuristic(x, y, KernelFamily.LAPLACIAN) == pytest.approx(l1, rel=1e-14)
    assert median_heuristic(x, y, KernelFamily.GAUSSIAN) == pytest.approx(l2, rel=1e-14)


@given(st.lists(st.floats(-100, 100), min_size=2, max_size=30), st.floats(-1e3, 1e3), st.randoms())
def test_median_permutation_and_translation_invariant(vals, shift, rnd):
    vals = np.round(np.asarray(vals), 3)
    if np.ptp(vals) == 0:
        return
    x, y = vals[: len(vals) // 2], vals[len(vals) // 2:]
    base = median_heuristic(x, y)
    perm = list(vals)
    rnd.shuffle(perm)
    assert median_heuristic(perm[:1], perm[1:]) == base
    assert median_heuristic(x + shift, y + shift) == pytest.approx(base, rel=1e-9, abs=1e-9)


def test_median_large_univariate_matches_partition(rng):
    z = rng.laplace(size=3000)
    x, y = z[:1300], z[1300:]
    d = np.abs(z[:, None] - z[None, :])[np.triu_indices(z.size, 1)]
    k = d.size
    part = np.partition(d, [(k - 1) // 2, k // 2])
    assert median_heuristic(x, y) == 0.5 * (part[(k - 1) // 2] + part[k // 2])
