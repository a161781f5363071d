import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from imred.energy import Region, band_region, concentration_ratio, eci, eci_stability_gap
from imred.errors import InvalidConfig, RegionOutOfBounds, ZeroEnergySignal
from imred.transform import (
    GridSpec,
    StftSpec,
    estimate_frame_bounds,
    project,
    total_transform_energy,
)


@pytest.fixture(params=["stft", "wavelet"])
def grid(request, small_stft_grid, small_wavelet_grid):
    return small_stft_grid if request.param == "stft" else small_wavelet_grid


def rect_strategy(m, b):
    @st.composite
    def rect(draw):
        s0 = draw(st.integers(0, m - 1))
        s1 = draw(st.integers(s0, m - 1))
        t0 = draw(st.integers(0, b - 1))
        t1 = draw(st.integers(t0, b - 1))
        return (s0, s1, t0, t1)
    return rect()


def test_empty_and_full_regions(grid, rng):
    fld = project(rng.standard_normal(grid.n_samples), grid)
    assert eci(fld, Region(())).value == 0.0
    assert concentration_ratio(fld, Region(())) == 0.0
    full = eci(fld, Region.full(grid.shape)).value
    assert full == pytest.approx(total_transform_energy(fld), rel=1e-12)


def test_disjoint_additivity(grid, rng):
    fld = project(rng.standard_normal(grid.n_samples), grid)
    m, b = grid.shape
    r1 = Region(((0, m // 2, 0, b - 1),))
    r2 = Region(((m // 2 + 1, m - 1, 0, b // 3),))
    both = eci(fld, r1.union(r2)).value
    assert both == pytest.approx(eci(fld, r1).value + eci(fld, r2).value, rel=1e-12)


def test_overlap_counted_once(grid, rng):
    fld = project(rng.standard_normal(grid.n_samples), grid)
    r = Region(((0, 2, 0, 4),))
    assert eci(fld, r.union(r)).value == eci(fld, r).value


def test_out_of_bounds(grid, rng):
    fld = project(rng.standard_normal(grid.n_samples), grid)
    m, b = grid.shape
    with pytest.raises(RegionOutOfBounds):
        eci(fld, Region(((0, m, 0, 0),)))
    with pytest.raises(RegionOutOfBounds):
        Region(((3, 2, 0, 0),))


def test_ratio_scale_invariance(grid, rng):
    x = rng.standard_normal(grid.n_samples)
    r = Region(((1, 3, 2, 9),))
    a = concentration_ratio(project(x, grid), r)
    b = concentration_ratio(project(37.5 * x, grid), r)
    assert b == pytest.approx(a, rel=1e-10)
    with pytest.raises(ZeroEnergySignal):
        concentration_ratio(project(np.zeros(grid.n_samples), grid), r)


def test_ratio_full_plane_stft(rng):
    g = GridSpec.stft(StftSpec("hann", 256, 64), 4096)
    fld = project(rng.standard_normal(4096), g)
    assert concentration_ratio(fld, Region.full(g.shape)) == pytest.approx(1.0, abs=1e-9)


@given(data=st.data())
def test_monotone_nonnegative_bounded(small_wavelet_grid, data):
    g = small_wavelet_grid
    m, b = g.shape
    seed = data.draw(st.integers(0, 2**32 - 1))
    x = np.random.default_rng(seed).standard_normal(g.n_samples)
    fld = project(x, g)
    inner = data.draw(rect_strategy(m, b))
    s0, s1, t0, t1 = inner
    outer = (max(s0 - 1, 0), s1, t0, min(t1 + 2, b - 1))
    e_in = eci(fld, Region((inner,))).value
    e_out = eci(fld, Region((outer,))).value
    assert 0.0 <= e_in <= e_out
    _, hi = bounds_for(g)
    assert e_out <= hi * float(x @ x) * (1 + 1e-6)


_BOUNDS = {}


def bounds_for(g):
    if g not in _BOUNDS:
        _BOUNDS[g] = estimate_frame_bounds(g, probe_count=4, seed=0)
    return _BOUNDS[g]


def test_stability_gap_identical(grid, rng):
    x = rng.standard_normal(grid.n_samples)
    lhs, rhs = eci_stability_gap(x, x, grid, Region(((0, 2, 0, 5),)), upper_bound=1.0)
    assert lhs == 0.0 and rhs == 0.0


def test_stability_gap_first_order(small_stft_grid, rng):
    g = small_stft_grid
    x = rng.standard_normal(g.n_samples)
    e = rng.standard_normal(g.n_samples)
    r = Region(((3, 9, 4, 20),))
    g1, _ = eci_stability_gap(x, x + 1e-3 * e, g, r, upper_bound=1.0)
    g2, _ = eci_stability_gap(x, x + 0.5e-3 * e, g, r, upper_bound=1.0)
    assert g1 / g2 == pytest.approx(2.0, rel=0.01)


def test_stability_gap_random_pairs(grid, rng):
    _, hi = bounds_for(grid)
    m, b = grid.shape
    for _ in range(100):
        x, y = rng.standard_normal((2, grid.n_samples))
        y = x + rng.uniform(0, 2) * y
        s0 = int(rng.integers(0, m))
        t0 = int(rng.integers(0, b))
        r = Region(((s0, int(rng.integers(s0, m)), t0, int(rng.integers(t0, b))),))
        lhs, rhs = eci_stability_gap(x, y, grid, r, upper_bound=hi)
        assert lhs <= rhs


@given(st.lists(st.tuples(st.integers(0, 9), st.integers(0, 9), st.integers(0, 19),
                          st.integers(0, 19)), max_size=5))
def test_region_text_round_trip(raw):
    rects = tuple((min(a, b), max(a, b), min(c, d), max(c, d)) for a, b, c, d in raw)
    r = Region(rects)
    text = r.to_text((10, 20))
    back = Region.from_text(text, (10, 20))
    assert back == r
    assert back.to_text((10, 20)) == text
    assert Region.from_inline(r.to_inline()) == r


def test_region_text_rejects_other_grid():
    text = Region(((0, 1, 0, 1),)).to_text((4, 4))
    with pytest.raises(RegionOutOfBounds):
        Region.from_text(text, (5, 4))
    with pytest.raises(InvalidConfig):
        Region.from_text("rect 0 1 0 1\n")


def test_band_region_picks_rows(small_stft_grid):
    r = band_region(small_stft_grid, 1000.0, 100.0, 200.0)
    freqs = small_stft_grid.row_frequencies(1000.0)
    s0, s1, t0, t1 = r.rectangles[0]
    assert freqs[s0] >= 100.0 and freqs[s1] <= 200.0
    assert (t0, t1) == (0, small_stft_grid.shape[1] - 1)
