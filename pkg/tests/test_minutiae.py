import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from minudesc.errors import EmptyForegroundError, InvalidParameterError
from minudesc.imaging import GrayImage
from minudesc.minutiae import (
    BIFURCATION, TERMINATION, ExtractParams, Minutia, _distance_to_boundary, binarize_thin,
    crossing_number, crossing_numbers, extract_minutiae, orientation_field, pixel_orientation,
    segment,
)
from minudesc.synth import Jitter, SynthParams, generate_finger, nearest_truth, whorl_pattern

RING = [(-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1)]


def stripes(size=128, period=8, vertical=False):
    rows = np.arange(size)
    line = np.where((rows // (period // 2)) % 2 == 0, 40, 220).astype(np.uint8)
    img = np.repeat(line[:, None], size, axis=1)
    return img.T.copy() if vertical else img


def angle_err(a, b, period=math.pi):
    d = (np.asarray(a) - np.asarray(b)) % period
    return np.minimum(d, period - d)


def match_counts(found, truth, dist=8.0, ang=math.pi / 6):
    used, tp = set(), 0
    for m in found:
        k = nearest_truth(m, truth, dist, ang)
        if k is not None and k not in used:
            used.add(k)
            tp += 1
    return tp


class TestMinutia:
    def test_theta_wraps(self):
        assert Minutia(1, 2, -math.pi / 2).theta == pytest.approx(1.5 * math.pi)
        assert 0 <= Minutia(1, 2, 7 * math.pi).theta < 2 * math.pi

    def test_kind_checked(self):
        with pytest.raises(InvalidParameterError):
            Minutia(0, 0, 0, "island")


class TestOrientation:
    def test_horizontal_stripes(self):
        f = orientation_field(stripes())
        assert f.mask.any()
        assert angle_err(f.angle[f.mask], 0.0).max() <= 0.05

    def test_vertical_stripes(self):
        f = orientation_field(stripes(vertical=True))
        assert angle_err(f.angle[f.mask], math.pi / 2).max() <= 0.05

    def test_whorl(self):
        img, flow = whorl_pattern(256, 9.0)
        f = orientation_field(img, 16)
        centers = flow[8::16, 8::16][: f.angle.shape[0], : f.angle.shape[1]]
        assert angle_err(f.angle, centers)[f.mask].mean() <= 0.1

    def test_blank_blocks_are_background(self):
        f = orientation_field(np.full((64, 64), 200, np.uint8))
        assert not f.mask.any()

    def test_block_too_large(self):
        with pytest.raises(InvalidParameterError):
            orientation_field(np.zeros((64, 64)), block=40)


class TestBinarizeThin:
    def test_blank(self):
        assert not binarize_thin(np.full((64, 64), 255.0)).any()

    def test_straight_bar(self):
        img = np.full((64, 96), 230.0)
        img[30:35, 10:86] = 30.0
        skel = binarize_thin(img)
        from scipy import ndimage

        rows, cols = np.nonzero(skel)
        assert ndimage.label(skel, structure=np.ones((3, 3)))[1] == 1
        assert np.abs(rows - 32).max() <= 1
        assert len(cols) == len(np.unique(cols))  # one pixel per column
        assert abs((cols.max() - cols.min() + 1) - 76) <= 7.6

    def test_thin_on_synthetic_ridges(self):
        img, _ = generate_finger(SynthParams(seed=3, impressions=1))[0]
        o, coh = pixel_orientation(img.pixels)
        skel = binarize_thin(img.pixels, segment(img.pixels, coh), orient=o)
        assert skel.sum() > 1000
        blocks = skel[:-1, :-1] & skel[1:, :-1] & skel[:-1, 1:] & skel[1:, 1:]
        assert not blocks.any()

    def test_empty_foreground(self):
        mask = np.zeros((64, 64), bool)
        mask[:3, :3] = True
        with pytest.raises(EmptyForegroundError):
            binarize_thin(np.zeros((64, 64)), mask)


class TestCrossingNumber:
    def patch(self, on):
        p = np.zeros((3, 3), bool)
        p[1, 1] = True
        for k in on:
            dr, dc = RING[k]
            p[1 + dr, 1 + dc] = True
        return p

    def test_single_neighbour(self):
        assert crossing_number(self.patch([3])) == 1

    def test_three_separate_neighbours(self):
        assert crossing_number(self.patch([0, 3, 5])) == 3

    def test_exhaustive(self):
        for bits in itertools.product([0, 1], repeat=8):
            p = self.patch([k for k in range(8) if bits[k]])
            transitions = sum(bits[k] != bits[(k + 1) % 8] for k in range(8))
            assert crossing_number(p) == transitions // 2

    def test_vectorised_agrees(self, rng):
        skel = rng.random((20, 20)) < 0.4
        cn = crossing_numbers(skel)
        pad = np.pad(skel, 1)
        for r in range(20):
            for c in range(20):
                want = crossing_number(pad[r:r + 3, c:c + 3]) if skel[r, c] else 0
                assert cn[r, c] == want


class TestExtract:
    def test_blank(self):
        assert extract_minutiae(GrayImage(np.full((128, 128), 255, np.uint8))) == []

    def test_too_small(self):
        with pytest.raises(InvalidParameterError):
            extract_minutiae(np.zeros((40, 80)))

    @pytest.mark.parametrize("seed", range(4))
    def test_single_termination(self, seed):
        p = SynthParams(seed=seed, n_minutiae=1, impressions=1, jitter=Jitter.none(),
                        bifurcation_fraction=0.0)
        img, gt = generate_finger(p)[0]
        truth = gt.minutiae[0]
        assert truth.kind == TERMINATION
        found = extract_minutiae(img)
        assert len(found) == 1 and found[0].kind == TERMINATION
        m = found[0]
        assert math.hypot(m.x - truth.x, m.y - truth.y) <= 6
        assert angle_err(m.theta, truth.theta, 2 * math.pi) <= math.pi / 8

    def test_single_bifurcation_direction(self):
        p = SynthParams(seed=5, n_minutiae=1, impressions=1, jitter=Jitter.none(),
                        bifurcation_fraction=1.0)
        img, gt = generate_finger(p)[0]
        (m,) = extract_minutiae(img)
        assert m.kind == BIFURCATION
        assert angle_err(m.theta, gt.minutiae[0].theta, 2 * math.pi) <= math.pi / 8

    @pytest.mark.parametrize("seed", range(10))
    def test_twelve_planted(self, seed):
        img, gt = generate_finger(SynthParams(seed=seed, n_minutiae=12, impressions=1,
                                              jitter=Jitter.none()))[0]
        found = extract_minutiae(img)
        tp = match_counts(found, gt.minutiae)
        assert tp / len(found) >= 0.8 and tp / 12 >= 0.8

    def test_recall_at_default_settings(self):
        tp = total = found_n = 0
        for seed in range(6):
            for img, gt in generate_finger(SynthParams(seed=seed, impressions=2)):
                found = extract_minutiae(img)
                truth = gt.visible(20)
                tp += match_counts(found, truth)
                total += len(truth)
                found_n += len(found)
        assert tp / total >= 0.8

    @pytest.mark.parametrize("seed", [0, 1])
    def test_spacing_and_border(self, seed):
        img, _ = generate_finger(SynthParams(seed=seed, impressions=1))[0]
        params = ExtractParams()
        found = extract_minutiae(img, params)
        xy = np.array([(m.x, m.y) for m in found])
        d = np.hypot(*(xy[:, None] - xy[None]).transpose(2, 0, 1))
        np.fill_diagonal(d, np.inf)
        assert d.min() >= params.merge_distance
        _, coh = pixel_orientation(img.pixels, params.tensor_sigma)
        dist = _distance_to_boundary(segment(img.pixels, coh, params))
        for m in found:
            assert dist[int(round(m.y)), int(round(m.x))] >= params.border

    def test_all_inside_image(self):
        img, _ = generate_finger(SynthParams(seed=4, impressions=1))[0]
        for m in extract_minutiae(img):
            assert 0 <= m.x < img.width and 0 <= m.y < img.height
            assert 0 <= m.theta < 2 * math.pi

    def test_translation(self):
        big, _ = generate_finger(SynthParams(seed=2, impressions=1, width=300, height=320,
                                             jitter=Jitter.none()))[0]
        dx, dy = 7, 4
        a = extract_minutiae(GrayImage(big.pixels[:300, :280]))
        b = extract_minutiae(GrayImage(big.pixels[dy:300 + dy, dx:280 + dx]))
        interior = [m for m in a if 40 <= m.x < 240 and 40 <= m.y < 260]
        assert len(interior) >= 5
        for m in interior:
            near = [n for n in b if math.hypot(n.x + dx - m.x, n.y + dy - m.y) <= 1.0]
            assert near and near[0].kind == m.kind


@given(st.lists(st.booleans(), min_size=8, max_size=8))
def test_crossing_number_range(bits):
    p = np.zeros((3, 3), bool)
    p[1, 1] = True
    for k, b in enumerate(bits):
        p[1 + RING[k][0], 1 + RING[k][1]] = b
    assert 0 <= crossing_number(p) <= 4
