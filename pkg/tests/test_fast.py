import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mmdvar import oracle
from mmdvar.errors import InsufficientSampleError, UnsortedInputError, UnsupportedFamilyError
from mmdvar.exact import EstimationPath, mmd2_unbiased, variance_full
from mmdvar.fast import (
    cross_prefix_suffix,
    dump_accumulators,
    fast_kernel_sums,
    mmd2_fast,
    prefix_suffix,
    trissl,
    variance_fast,
)
from mmdvar.harness import ScenarioConfig, generate_scenario
from mmdvar.kernels import KernelSpec, Sample

from conftest import laplace_mixture

E = math.e
FIELDS = ("mmd2", "var_t1", "var_t2", "var_total")

sorted_lists = st.lists(st.integers(-30, 30).map(lambda v: v / 4), min_size=1, max_size=25).map(sorted)
sigmas = st.sampled_from([0.1, 1.0, 10.0])


def assert_reports_match(a, b, rel=1e-9):
    for f in FIELDS:
        assert getattr(a, f) == pytest.approx(getattr(b, f), rel=rel, abs=1e-300), f


def test_trissl_examples():
    assert trissl([0.0, 1.0, 2.0], 1.0) == pytest.approx(2 / E + E**-2, rel=1e-15)
    assert trissl([0.0, 1.0, 2.0], 1.0) == pytest.approx(0.8710941, abs=1e-7)
    assert trissl([4.2], 0.5) == 0.0
    assert trissl([1.5] * 7, 2.0) == 21.0


def test_unsorted_input_rejected_by_recursions():
    for fn in (trissl, prefix_suffix):
        with pytest.raises(UnsortedInputError):
            fn([1.0, 0.0], 1.0)
    with pytest.raises(UnsortedInputError):
        cross_prefix_suffix([0.0, 1.0], [2.0, 1.0], 1.0)


def test_prefix_suffix_examples():
    acc = prefix_suffix([0.0, 1.0, 2.0], 1.0)
    np.testing.assert_allclose(acc.row_sums, [1 / E + E**-2, 2 / E, 1 / E + E**-2], rtol=1e-15)
    np.testing.assert_allclose(acc.row_sums, [0.5032147, 0.7357589, 0.5032147], atol=1e-7)
    assert acc.r[0] == 0 and acc.l[-1] == 0
    single = prefix_suffix([3.0], 2.0)
    assert list(single.r) == [0.0] and list(single.l) == [0.0]


@given(sorted_lists, sigmas)
def test_row_sum_identity(s, sigma):
    acc = prefix_suffix(s, sigma)
    assert np.all(acc.r >= 0) and np.all(acc.l >= 0)
    assert oracle.rel_err(acc.row_sums, oracle.row_sums(KernelSpec.laplacian(sigma), s)) <= 1e-12


def test_row_sum_random_16(rng):
    s = np.sort(rng.laplace(size=16))
    got = prefix_suffix(s, 0.7).row_sums
    np.testing.assert_allclose(got, oracle.row_sums(KernelSpec.laplacian(0.7), s), rtol=1e-12)


def test_cross_hand_trace():
    acc = cross_prefix_suffix([0.0, 2.0], [1.0], 1.0)
    np.testing.assert_allclose(acc.xy_row_sums, [1 / E, 1 / E], rtol=1e-15)
    assert acc.a_xy[0] == 0.0 and acc.z_xy[0] == pytest.approx(1 / E)
    assert acc.a_xy[1] == pytest.approx(1 / E) and acc.z_xy[1] == 0.0
    assert list(acc.labels) == ["X", "Y", "X"]
    np.testing.assert_array_equal(acc.deltas, [0.0, 1.0, 1.0])
    np.testing.assert_allclose(acc.yx_row_sums, [2 / E], rtol=1e-15)


def test_cross_merged_boundary_starts_with_y():
    # a Y point first in the merged order must still reach the X rows
    acc = cross_prefix_suffix([1.0], [0.0], 1.0)
    assert acc.xy_row_sums[0] == pytest.approx(1 / E, rel=1e-15)
    acc = cross_prefix_suffix([0.0], [1.0], 1.0)
    assert acc.yx_row_sums[0] == pytest.approx(1 / E, rel=1e-15)


def test_cross_wide_bandwidth_limit():
    acc = cross_prefix_suffix([0.0, 1.0, 2.0], [10.0, 11.0, 12.0, 13.0], 1e12)
    np.testing.assert_allclose(acc.xy_row_sums, 4.0, atol=1e-6)
    np.testing.assert_allclose(acc.yx_row_sums, 3.0, atol=1e-6)


@given(sorted_lists, sorted_lists, sigmas)
def test_cross_identity(x, y, sigma):
    acc = cross_prefix_suffix(x, y, sigma)
    rows, cols = oracle.cross_row_sums(KernelSpec.laplacian(sigma), x, y)
    assert oracle.rel_err(acc.xy_row_sums, rows) <= 1e-12
    assert oracle.rel_err(acc.yx_row_sums, cols) <= 1e-12
    for arr in (acc.a_xy, acc.z_xy, acc.a_yx, acc.z_yx, acc.deltas):
        assert np.all(arr >= 0)


def test_cross_random_32(rng):
    x, y = np.sort(rng.laplace(size=32)), np.sort(rng.laplace(0.5, size=32))
    acc = cross_prefix_suffix(x, y, 1.3)
    rows, cols = oracle.cross_row_sums(KernelSpec.laplacian(1.3), x, y)
    np.testing.assert_allclose(acc.xy_row_sums, rows, rtol=1e-12)
    np.testing.assert_allclose(acc.yx_row_sums, cols, rtol=1e-12)


def test_underflow_forgets_distant_points():
    # exp(-800) underflows to 0: each cluster only sees itself
    x = np.array([0.0, 0.5, 800.0, 800.5])
    acc = prefix_suffix(x, 1.0)
    np.testing.assert_allclose(acc.row_sums, [math.exp(-0.5)] * 4, rtol=1e-15)
    assert trissl(x, 1.0) == pytest.approx(2 * math.exp(-0.5), rel=1e-15)
    c = cross_prefix_suffix([0.0, 1600.0], [800.0], 1.0)
    assert list(c.xy_row_sums) == [0.0, 0.0]
    assert list(c.yx_row_sums) == [0.0]


@given(sorted_lists, sorted_lists, sigmas)
def test_set_decomposition(x, y, sigma):
    t4 = trissl(sorted(x + y), sigma)
    cross = math.fsum(map(math.fsum, oracle.kernel_table(KernelSpec.laplacian(sigma), x, y)))
    got = t4 - trissl(x, sigma) - trissl(y, sigma)
    assert got == pytest.approx(cross, rel=1e-12, abs=1e-12 * max(t4, 1e-300))


@given(sorted_lists, sorted_lists, sigmas)
def test_squared_kernel_pass(x, y, sigma):
    sums = fast_kernel_sums(np.array(x), np.array(y), sigma)
    ref = oracle.functionals(KernelSpec.laplacian(sigma), x, y)
    for name in ("xx_frob_sq", "yy_frob_sq", "xy_frob_sq"):
        assert oracle.rel_err(getattr(sums, name), ref[name]) <= 1e-12
    half = prefix_suffix(x, sigma / 2)
    assert oracle.rel_err(np.sum(half.r + half.l), ref["xx_frob_sq"]) <= 1e-12


@pytest.mark.parametrize("method", ["rowsum", "triangular"])
def test_mmd2_fast_hand_example(method):
    want = mmd2_unbiased([0.0, 1.0], [2.0, 3.0], KernelSpec.laplacian(1.0))
    assert mmd2_fast([0.0, 1.0], [2.0, 3.0], 1.0, method=method) == pytest.approx(want, rel=1e-14)
    assert want == pytest.approx(0.3915903, abs=1e-7)


def test_mmd2_fast_identical_samples():
    x = [0.0, 1.0]
    assert mmd2_fast(x, x, 1.0) == pytest.approx(math.exp(-1) - 1, rel=1e-14)
    with pytest.raises(ValueError):
        mmd2_fast(x, x, 1.0, method="bogus")
    with pytest.raises(InsufficientSampleError):
        mmd2_fast([0.0], x, 1.0)


def test_gaussian_rejected():
    with pytest.raises(UnsupportedFamilyError):
        variance_fast([0.0, 1, 2, 3], [0.0, 1, 2, 3], KernelSpec.gaussian(1.0))


def test_ten_twelve_matches_matrix():
    spec = KernelSpec.laplacian(1.0)
    x, y = generate_scenario(ScenarioConfig(n=10, ratio=1.2, delta=1.0, kernel=spec, seed=4))
    fast = variance_fast(x, y, spec)
    full = variance_full(x, y, spec)
    assert fast.path is EstimationPath.FAST_LAPLACE
    assert_reports_match(fast, full, rel=1e-12)
    assert mmd2_fast(x, y, spec, method="triangular") == pytest.approx(full.mmd2, rel=1e-12)


@given(st.integers(4, 40), st.integers(4, 40), sigmas, st.booleans(), st.integers(0, 2**32 - 1))
def test_paths_agree(n, m, sigma, ties, seed):
    rng = np.random.default_rng(seed)
    x, y = laplace_mixture(rng, n, ties), laplace_mixture(rng, m, ties)
    assert_reports_match(variance_fast(x, y, sigma), variance_full(x, y, KernelSpec.laplacian(sigma)))


def test_heavy_ties_and_shared_values():
    x = [0.0, 0.0, 1.0, 1.0, 1.0, 2.0]
    y = [1.0, 1.0, 2.0, 2.0, 0.0]
    fast = variance_fast(x, y, 0.8)
    full = variance_full(x, y, KernelSpec.laplacian(0.8))
    assert_reports_match(fast, full, rel=1e-12)
    flat = variance_fast([3.0] * 5, [3.0] * 4, 1.0)
    assert all(math.isfinite(getattr(flat, f)) for f in FIELDS)
    assert flat.mmd2 == pytest.approx(0.0, abs=1e-15)


def test_unsorted_sorted_transparently(rng):
    x, y = laplace_mixture(rng, 30, True), laplace_mixture(rng, 25, True)
    a = variance_fast(x, y, 1.0)
    b = variance_fast(Sample(np.sort(x), sorted=True), Sample(np.sort(y), sorted=True), 1.0)
    for f in FIELDS:
        assert getattr(a, f) == getattr(b, f)


def test_dump_format():
    acc = cross_prefix_suffix([0.0, 1.0], [1.0, 3.0], 1.0)
    buf = io.StringIO()
    dump_accumulators(acc, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "index value label delta"
    rows = [ln.split() for ln in lines[1:]]
    assert [r[0] for r in rows] == ["1", "2", "3", "4"]
    # X precedes Y on the tie at 1.0
    assert [r[2] for r in rows] == ["X", "X", "Y", "Y"]
    assert [float(r[3]) for r in rows] == [0.0, 1.0, 0.0, 2.0]
    assert float(rows[1][1]) == pytest.approx(1 + math.exp(-2))
    buf2 = io.StringIO()
    dump_accumulators(acc, buf2)
    assert buf2.getvalue() == buf.getvalue()
    single = io.StringIO()
    dump_accumulators(prefix_suffix([0.0, 1.0], 1.0), single)
    assert single.getvalue().splitlines()[1:] == [f"1 {math.exp(-1)!r} X 0.0", f"2 {math.exp(-1)!r} X 1.0"]
