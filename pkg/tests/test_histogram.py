import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kdescope.errors import InvalidArgument, OutOfRange
from kdescope.histogram import HistogramSpec, bin_counts, build_histogram, default_spec, sturges
from kdescope.sample import Sample

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def test_sturges_examples():
    assert sturges(8) == 4
    assert sturges(1) == 1
    assert sturges(100) == 8
    with pytest.raises(InvalidArgument):
        sturges(0)


def test_build_histogram_examples():
    h = build_histogram([0.5], HistogramSpec(0.0, 1.0, 1))
    np.testing.assert_array_equal(h.heights, [1.0])
    h = build_histogram([0.1, 0.2, 1.5, 1.6], HistogramSpec(0.0, 1.0, 2))
    np.testing.assert_array_equal(h.heights, [0.5, 0.5])
    np.testing.assert_array_equal(h.counts, [2, 2])


def test_origin_shift_by_one_bin_relabels():
    data = [0.3, 0.4, 1.2, 2.7, 2.8, 2.9]
    a = build_histogram(data, HistogramSpec(0.0, 1.0, 3))
    b = build_histogram(data, HistogramSpec(-1.0, 1.0, 4))
    np.testing.assert_array_equal(a.heights, b.heights[1:])
    assert b.heights[0] == 0


def test_bin_edge_sensitivity():
    # same data and width, origins half a bin apart, different shapes
    data = [0.9, 1.1, 1.9, 2.1]
    a = build_histogram(data, HistogramSpec(0.0, 1.0, 3)).heights
    b = build_histogram(data, HistogramSpec(0.5, 1.0, 2)).heights
    assert sorted(a[a > 0]) != sorted(b[b > 0])


def test_right_edge_belongs_to_last_bin():
    h = build_histogram([0.0, 1.0, 2.0], HistogramSpec(0.0, 1.0, 2))
    np.testing.assert_array_equal(h.counts, [1, 2])


def test_out_of_range_lists_values():
    with pytest.raises(OutOfRange) as exc:
        bin_counts([0.5, 3.5, -1.0], HistogramSpec(0.0, 1.0, 2))
    assert sorted(exc.value.values) == [-1.0, 3.5]


def test_default_spec():
    data = np.arange(8.0)
    spec = default_spec(data)
    assert spec.origin == 0.0 and spec.bin_count == 4
    assert spec.right >= 7.0
    assert build_histogram(data).counts.sum() == 8
    # a constant sample still gets a valid unit-mass histogram
    h = build_histogram([2.0, 2.0, 2.0])
    assert h.total_mass() == pytest.approx(1.0)


def test_callable_histogram():
    h = build_histogram([0.1, 0.2, 1.5, 1.6], HistogramSpec(0.0, 1.0, 2))
    np.testing.assert_array_equal(h([0.5, 1.5, -1.0, 5.0]), [0.5, 0.5, 0.0, 0.0])


def test_invalid_specs():
    with pytest.raises(InvalidArgument):
        HistogramSpec(0.0, 0.0, 3)
    with pytest.raises(InvalidArgument):
        HistogramSpec(0.0, 1.0, 0)


def test_sample_validation():
    s = Sample.from_values([3, 1, 2])
    np.testing.assert_array_equal(s.values, [1, 2, 3])
    assert not s.values.flags.writeable
    with pytest.raises(InvalidArgument):
        Sample.from_values([])
    with pytest.raises(InvalidArgument):
        Sample.from_values([1.0, np.nan])


@settings(max_examples=80, deadline=None)
@given(st.lists(finite, min_size=1, max_size=60), st.integers(1, 20))
def test_total_mass_is_one(data, k):
    h = build_histogram(data, default_spec(data, k))
    assert h.counts.sum() == len(data)
    assert h.total_mass() == pytest.approx(1.0, rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.lists(finite, min_size=2, max_size=40), st.randoms(use_true_random=False))
def test_permutation_invariance(data, rnd):
    shuffled = list(data)
    rnd.shuffle(shuffled)
    spec = default_spec(data)
    np.testing.assert_array_equal(build_histogram(data, spec).heights, build_histogram(shuffled, spec).heights)
