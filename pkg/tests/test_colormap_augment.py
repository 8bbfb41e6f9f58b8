"""Colormap construction and distance-indexed recoloring."""

import numpy as np
import pytest

from textfx.data import Colormap, augment_style, glyph_image_from_mask


def box_glyph(size: int = 16):
    mask = np.zeros((size, size), dtype=bool)
    mask[4:-4, 4:-4] = True
    return glyph_image_from_mask(mask)


def cmap(*points) -> Colormap:
    return Colormap(points=tuple(points))


def test_colormap_interpolates_between_stops():
    m = cmap((0.0, (0, 0, 0)), (0.5, (1, 0, 0)), (1.0, (1, 1, 1)))
    out = m(np.array([0.0, 0.25, 0.5, 1.0]))
    assert out.shape == (4, 3)
    np.testing.assert_allclose(out[0], [0.0, 0.0, 0.0])
    np.testing.assert_allclose(out[1], [0.5, 0.0, 0.0])
    np.testing.assert_allclose(out[2], [1.0, 0.0, 0.0])
    np.testing.assert_allclose(out[3], [1.0, 1.0, 1.0])


def test_colormap_clamps_outside_range():
    m = cmap((0.0, (0.2, 0.2, 0.2)), (1.0, (0.8, 0.8, 0.8)))
    out = m(np.array([-1.0, 2.0]))
    np.testing.assert_allclose(out[0], [0.2, 0.2, 0.2], atol=1e-7)
    np.testing.assert_allclose(out[1], [0.8, 0.8, 0.8], atol=1e-7)


def test_colormap_shape_follows_input():
    m = cmap((0.0, (0, 0, 0)), (1.0, (1, 1, 1)))
    assert m(np.zeros((4, 5))).shape == (4, 5, 3)


@pytest.mark.parametrize(
    "points",
    [
        ((0.1, (0, 0, 0)), (1.0, (1, 1, 1))),  # first stop not 0
        ((0.0, (0, 0, 0)), (0.9, (1, 1, 1))),  # last stop not 1
        ((0.0, (0, 0, 0)), (0.5, (0, 0, 0)), (0.5, (0, 0, 0)), (1.0, (1, 1, 1))),
        ((0.0, (0, 0, 0)),),  # single stop
        ((0.0, (0, 0, 2.0)), (1.0, (1, 1, 1))),  # colour out of range
        ((0.0, (0, 0)), (1.0, (1, 1, 1))),  # not an RGB triple
    ],
)
def test_colormap_validation(points):
    with pytest.raises(ValueError):
        Colormap(points=tuple(points))


def test_random_colormap_is_valid_and_deterministic():
    a = Colormap.random(np.random.default_rng(7), interior_points=3)
    b = Colormap.random(np.random.default_rng(7), interior_points=3)
    assert a.points == b.points
    xs = [p[0] for p in a.points]
    assert xs[0] == 0.0 and xs[-1] == 1.0
    assert all(p < q for p, q in zip(xs, xs[1:]))


def test_random_colormap_respects_interior_cap():
    for seed in range(10):
        m = Colormap.random(np.random.default_rng(seed), interior_points=2, max_interior=0.12)
        interior = [p[0] for p in m.points][1:-1]
        assert all(0.0 < x <= 0.12 for x in interior)


def test_augment_uses_fg_map_inside_and_bg_map_outside():
    glyph = box_glyph()
    red = cmap((0.0, (1, 0, 0)), (1.0, (1, 0, 0)))
    blue = cmap((0.0, (0, 0, 1)), (1.0, (0, 0, 1)))
    styled = augment_style(glyph, red, blue, style_id="s", glyph_id="g")
    fg = glyph.channels[0] >= 0.5
    assert styled.pixels.shape == glyph.channels.shape
    np.testing.assert_allclose(styled.pixels[0][fg], 1.0)
    np.testing.assert_allclose(styled.pixels[2][fg], 0.0)
    np.testing.assert_allclose(styled.pixels[2][~fg], 1.0)
    np.testing.assert_allclose(styled.pixels[0][~fg], 0.0)


def test_augment_indexes_colormaps_by_distance():
    glyph = box_glyph()
    ramp = cmap((0.0, (0, 0, 0)), (1.0, (1, 1, 1)))
    styled = augment_style(glyph, ramp, ramp, style_id="s", glyph_id="g")
    fg = glyph.channels[0] >= 0.5
    expected = np.where(fg, glyph.channels[1], glyph.channels[2])
    np.testing.assert_allclose(styled.pixels[0], expected, atol=1e-6)
