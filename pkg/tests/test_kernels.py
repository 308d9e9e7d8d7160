import numpy as np
import pytest
from scipy import ndimage

from doorscape import _kernels_py, kernels
from conftest import BACKENDS, brute_force_edt

EIGHT = np.ones((3, 3), dtype=int)


def random_occupancy(rng, max_side=40):
    h, w = rng.integers(1, max_side, size=2)
    occ = rng.random((h, w)) < rng.choice([0.005, 0.05, 0.3, 0.95])
    if not occ.any():
        occ[rng.integers(h), rng.integers(w)] = True
    return occ


@pytest.mark.parametrize("name", BACKENDS)
def test_edt_matches_brute_force(name):
    impl = kernels.get_backend(name)
    rng = np.random.default_rng(7)
    for _ in range(150):
        occ = random_occupancy(rng)
        for got, want in zip(impl.edt(occ), brute_force_edt(occ)):
            np.testing.assert_array_equal(got, want)


def test_edt_tie_break_prefers_smaller_row_then_column():
    occ = np.zeros((5, 5), dtype=bool)
    occ[0, 2] = occ[4, 2] = occ[2, 0] = occ[2, 4] = True
    for name in BACKENDS:
        d2, wr, wc = kernels.get_backend(name).edt(occ)
        assert d2[2, 2] == 4
        assert (wr[2, 2], wc[2, 2]) == (0, 2)


def test_backends_agree_on_ridge_and_raster():
    if len(BACKENDS) < 2:
        pytest.skip("compiled backend not built")
    py, c = kernels.get_backend("python"), kernels.get_backend("cython")
    rng = np.random.default_rng(3)
    for _ in range(40):
        occ = random_occupancy(rng, 60)
        d2, wr, wc = py.edt(occ)
        free = ~occ
        np.testing.assert_array_equal(py.ridge_mask(free, d2, wr, wc, 4),
                                      c.ridge_mask(free, d2, wr, wc, 4))
        segs = rng.uniform(-2, 30, size=(20, 4))
        np.testing.assert_array_equal(py.rasterize(segs, (25, 25)), c.rasterize(segs, (25, 25)))
        blob = ndimage.binary_dilation(rng.random((30, 30)) < 0.05, iterations=2)
        np.testing.assert_array_equal(py.thin(blob), c.thin(blob))


def _euler_and_components(mask):
    fg = ndimage.label(mask, structure=EIGHT)[1]
    bg = ndimage.label(np.pad(~mask, 1, constant_values=True))[1]  # 4-connected background
    return fg, bg


@pytest.mark.parametrize("name", BACKENDS)
def test_thinning_preserves_topology_and_is_thin(name):
    impl = kernels.get_backend(name)
    rng = np.random.default_rng(11)
    for _ in range(30):
        blob = ndimage.binary_dilation(rng.random((40, 40)) < 0.03, iterations=rng.integers(1, 4))
        skel = impl.thin(blob)
        assert not (skel & ~blob).any()
        assert _euler_and_components(skel) == _euler_and_components(blob)
        # no removable cell is left behind
        padded = np.pad(skel, 1)
        for r, c in np.argwhere(skel):
            code = 0
            for i, (dr, dc) in enumerate(_kernels_py.RING):
                if padded[r + 1 + dr, c + 1 + dc]:
                    code |= 1 << i
            assert not _kernels_py.REMOVABLE_LUT[code]


def test_thinning_keeps_line_end_points():
    line = np.zeros((5, 12), dtype=bool)
    line[1:3, 1:11] = True  # two cells thick
    skel = kernels.thin(line)
    assert skel.sum() == 10
    cols = np.nonzero(skel.any(axis=0))[0]
    assert cols.min() == 1 and cols.max() == 10


def test_removable_lut_spot_checks():
    lut = _kernels_py.REMOVABLE_LUT
    assert lut[0] == 0  # isolated
    assert lut[1 << 3] == 0  # end point (single neighbour)
    assert lut[(1 << 3) | (1 << 7)] == 0  # middle of a horizontal line
    assert lut[(1 << 3) | (1 << 4) | (1 << 5)] == 1  # corner of a blob
    assert lut[0b10101010] == 0  # interior of a plus: not a border cell
