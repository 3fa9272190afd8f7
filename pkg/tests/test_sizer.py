import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from kdescope import sizer as sz
from kdescope.bandwidth import rule_of_thumb
from kdescope.errors import InvalidArgument
from kdescope.estimators import kde_at
from kdescope.sizer import PixelClass, ScaleSpaceGrid

INC, DEC, IND, GRAY = (PixelClass.INCREASING, PixelClass.DECREASING, PixelClass.INDETERMINATE,
                       PixelClass.INSUFFICIENT_DATA)


def mixture(seed, n=1000):
    rng = np.random.default_rng(seed)
    pick = rng.random(n) < 0.5
    return np.where(pick, rng.normal(0, 1, n), rng.normal(8, math.sqrt(2), n))


def test_derivative_estimate_examples():
    assert sz.derivative_estimate([-1.0, 1.0], 0.7, 0.0, 1) == pytest.approx(0.0, abs=1e-16)
    assert sz.derivative_estimate([0.0], 1.0, 1.0, 1) == pytest.approx(-norm.pdf(1.0), abs=1e-15)


def test_derivative_estimate_finite_differences():
    x = np.random.default_rng(1).normal(size=40)
    rng = np.random.default_rng(2)
    for _ in range(20):
        pt, h = rng.uniform(-2, 2), rng.uniform(0.2, 1.5)
        eps = 1e-4
        fd1 = (kde_at(x, "gaussian", h, pt + eps) - kde_at(x, "gaussian", h, pt - eps)) / (2 * eps)
        assert sz.derivative_estimate(x, h, pt, 1) == pytest.approx(fd1, abs=1e-5)
        fd2 = (sz.derivative_estimate(x, h, pt + eps, 1) - sz.derivative_estimate(x, h, pt - eps, 1)) / (2 * eps)
        assert sz.derivative_estimate(x, h, pt, 2) == pytest.approx(fd2, abs=1e-5)


def test_derivative_se():
    assert sz.derivative_se([1.0] * 6, 0.5, 0.3) == pytest.approx(0.0, abs=1e-15)
    x = np.random.default_rng(3).normal(size=4000)
    assert sz.derivative_se(x, 0.4, np.linspace(-3, 3, 11)).min() >= 0
    # log-log slope of se against nested subsample size
    ns = np.array([250, 500, 1000, 2000, 4000])
    se = [np.mean(sz.derivative_se(x[:n], 0.4, np.array([-1.0, -0.5, 0.5, 1.0]))) for n in ns]
    slope = np.polyfit(np.log(ns), np.log(se), 1)[0]
    assert slope == pytest.approx(-0.5, abs=0.15)


def test_effective_sample_size():
    assert sz.effective_sample_size([2.0], 0.3, 2.0) == pytest.approx(1.0)
    x = np.random.default_rng(4).normal(size=30)
    assert sz.effective_sample_size(x, 1e8, 0.0) == pytest.approx(30.0)
    assert sz.effective_sample_size(x, 0.5, 100.0) == pytest.approx(0.0, abs=1e-12)


def test_classify_examples():
    assert sz._classify(0.0, 1.0, 10.0, 2.0) == IND
    assert sz._classify(0.3, 0.0, 10.0, 2.0) == INC
    assert sz._classify(-0.3, 0.0, 10.0, 2.0) == DEC
    assert sz._classify(5.0, 0.1, 2.0, 2.0) == GRAY
    # ten identical data: se is exactly zero and the slope left of the bump is positive
    assert sz.classify_pixel([0.0] * 10, 1.0, -0.5, 1, 0.05, 2.0) == INC
    assert sz.classify_pixel([0.0, 0.0], 1.0, -0.5, 1, 0.05, 2.0) == GRAY


def test_critical_value_bonferroni():
    x_grid = np.linspace(0, 10, 101)
    ess = np.full(101, 50.0)
    # spacing 2 over [0, 10] gives points 0, 2, ..., 10
    assert sz.critical_value(x_grid, ess, 2.0, 0.05) == pytest.approx(norm.ppf(1 - 0.05 / 12))
    assert sz.critical_value(x_grid, np.zeros(101), 2.0, 0.05) == pytest.approx(norm.ppf(0.975))
    assert sz.critical_value(x_grid, ess, 100.0, 0.05) == pytest.approx(norm.ppf(0.975))


def test_sparse_data_map_is_mostly_gray():
    data = [0.0, 10.0, 20.0, 30.0, 40.0]
    grid = ScaleSpaceGrid(np.linspace(-5, 45, 101), np.geomspace(0.05, 0.5, 5))
    smap = sz.sizer_map(data, grid)
    assert np.mean(smap.pixels == GRAY) > 0.9


def test_normal_slopes_at_rule_of_thumb_scale():
    hits = 0
    for r in range(20):
        x = np.random.default_rng([5, r]).normal(size=1000)
        h = rule_of_thumb(x).h
        grid = ScaleSpaceGrid(np.linspace(-3.5, 3.5, 141), np.array([h]))
        smap = sz.sizer_map(x, grid)
        row = smap.pixels[0]
        hits += row[np.argmin(np.abs(grid.x_grid + 2))] == INC and row[np.argmin(np.abs(grid.x_grid - 2))] == DEC
    assert hits >= 18


def test_mixture_two_modes_at_mid_scale():
    for seed in range(3):
        smap = sz.sizer_map(mixture(seed))
        mid = smap.shape[0] // 2
        assert sz.mode_transitions(smap.row(mid)) == 2
        assert sz.mode_transitions(smap.row(smap.shape[0] - 1)) <= 1


def test_sign_change_examples():
    x_grid = np.linspace(-5, 25, 3001)
    assert sz.sign_change_count([0.3], 0.5, x_grid) == 1
    assert sz.sign_change_count([0.0, 20.0], 1.0, x_grid) == 3


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(3, 40))
def test_sign_changes_non_increasing_in_h(seed, n):
    x = np.random.default_rng(seed).normal(size=n) * 2
    grid = np.linspace(x.min() - 3, x.max() + 3, 3001)
    counts = [sz.sign_change_count(x, h, grid) for h in np.geomspace(0.2, 3.0, 10)]
    assert all(b <= a for a, b in zip(counts, counts[1:]))


def test_reflection_swaps_classes():
    x = mixture(7, 300)
    grid = ScaleSpaceGrid(np.linspace(-4, 12, 81), np.geomspace(0.2, 4, 6))
    a = sz.sizer_map(x, grid).pixels
    mirrored = ScaleSpaceGrid(-grid.x_grid[::-1], grid.h_grid)
    b = sz.sizer_map(-x, mirrored).pixels[:, ::-1]
    swap = np.array([DEC, INC, IND, GRAY], dtype=np.uint8)
    np.testing.assert_array_equal(swap[a], b)


def test_larger_alpha_never_loses_significance():
    x = mixture(8, 400)
    grid = sz.default_scale_grid(x, 61, 9)
    strict = sz.sizer_map(x, grid, alpha=0.01).pixels
    loose = sz.sizer_map(x, grid, alpha=0.2).pixels
    sig = (strict == INC) | (strict == DEC)
    np.testing.assert_array_equal(loose[sig], strict[sig])


def test_map_deterministic_and_thread_independent():
    x = mixture(9, 500)
    a = sz.sizer_map(x)
    b = sz.sizer_map(x, workers=4)
    assert a.shape == (21, 101)
    np.testing.assert_array_equal(a.pixels, b.pixels)
    np.testing.assert_array_equal(a.critical_values, b.critical_values)


def test_mode_transitions():
    assert sz.mode_transitions([INC, IND, DEC, GRAY, INC, DEC, DEC]) == 2
    assert sz.mode_transitions([DEC, INC]) == 0


def test_ppm_and_csv(tmp_path):
    x = mixture(10, 200)
    grid = ScaleSpaceGrid(np.linspace(-3, 11, 7), np.array([0.5, 1.0, 2.0]))
    smap = sz.sizer_map(x, grid)
    path = tmp_path / "m.ppm"
    sz.write_ppm(smap, path)
    raw = path.read_bytes()
    header = b"P6\n7 3\n255\n"
    assert raw.startswith(header)
    img = np.frombuffer(raw[len(header):], dtype=np.uint8).reshape(3, 7, 3)
    palette = {c: c.color for c in PixelClass}
    for i in range(3):
        for j in range(7):
            # top image row is the largest bandwidth
            assert tuple(img[i, j]) == palette[PixelClass(int(smap.pixels[2 - i, j]))]
    assert {c.color for c in PixelClass} == {(0, 0, 255), (255, 0, 0), (160, 32, 240), (128, 128, 128)}
    buf = io.StringIO()
    sz.write_csv(smap, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "x,h,class" and len(lines) == 22
    assert lines[1].split(",")[2] in {c.label for c in PixelClass}


def test_grid_validation():
    with pytest.raises(InvalidArgument):
        ScaleSpaceGrid([0.0, 1.0], [0.5, -1.0])
    with pytest.raises(InvalidArgument):
        ScaleSpaceGrid([1.0, 0.0], [0.5])
    with pytest.raises(InvalidArgument):
        sz.sizer_map([0.0, 1.0, 2.0], alpha=1.5)
