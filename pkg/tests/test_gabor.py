import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from minudesc.errors import InvalidParameterError
from minudesc.gabor import (
    JET_SIZE, N_FREQ, N_ORIENT, N_POINTS, STEER_STEP, build_bank, normalize_jets, raw_jet,
    raw_jets, response, sampling_points, steering,
)
from minudesc.imaging import enhance
from minudesc.minutiae import Minutia
from minudesc.synth import SynthParams, generate_finger

from oracles import gabor_kernel_literal, gabor_response

BANK = build_bank()


def rot90_about_center(raster):
    """Rotate a square raster so that direction t becomes t + pi/2 (y down)."""
    return np.rot90(raster, k=-1)


def jet_grid(jet):
    return np.asarray(jet).reshape(N_POINTS, N_FREQ, N_ORIENT)


class TestBank:
    def test_wavenumbers_and_orientations(self):
        for nu in range(5):
            assert BANK.wavenumber(nu) == BANK.kmax / 2 ** (nu / 2)
        assert BANK.wavenumber(2) == math.pi / 4
        for mu in range(8):
            assert BANK.orientation(mu) == math.pi * mu / 8

    def test_truncation_radius(self):
        assert BANK.radii == tuple(math.ceil(3 * BANK.sigma / BANK.wavenumber(nu)) for nu in range(5))

    @pytest.mark.parametrize("fine", [0, 3, 7])
    def test_dc_free(self, fine):
        bank = BANK.substep(fine)
        for nu in range(5):
            for mu in range(8):
                assert abs(bank.kernel(mu, nu).sum()) <= 1e-6

    def test_close_to_literal_formula(self):
        for nu in range(5):
            for mu in range(8):
                lit = gabor_kernel_literal(BANK.sigma, BANK.wavenumber(nu), math.pi * mu / 8, BANK.radii[nu])
                k = BANK.kernel(mu, nu)
                assert np.abs(lit - k).max() <= 1e-3 * np.abs(k).max()

    def test_mu0_reflection(self):
        for nu in range(5):
            k = BANK.kernel(0, nu)
            np.testing.assert_allclose(k, k[::-1, :], atol=1e-15)

    def test_immutable(self):
        with pytest.raises(ValueError):
            BANK.kernel(0, 0)[0, 0] = 1

    @pytest.mark.parametrize("sigma,kmax", [(0, 1), (-1, 1), (2, 0), (2, 3.5)])
    def test_invalid(self, sigma, kmax):
        with pytest.raises(InvalidParameterError):
            build_bank(sigma, kmax)


class TestSamplingPoints:
    def test_axis_aligned(self):
        f = sampling_points(Minutia(100, 100, 0.0), 18)
        assert tuple(f.points[0]) == (100, 100)
        np.testing.assert_allclose(f.points[1], (118, 100), atol=1e-12)

    def test_quarter_turn_points_down(self):
        f = sampling_points(Minutia(100, 100, math.pi / 2), 18)
        np.testing.assert_allclose(f.points[1], (100, 118), atol=1e-12)

    def test_diagonal(self):
        f = sampling_points(Minutia(0, 0, math.pi / 4), 18)
        np.testing.assert_allclose(f.points[1], (18 / math.sqrt(2),) * 2, atol=1e-12)

    @given(st.floats(0, 2 * math.pi, exclude_max=True), st.floats(1, 40))
    def test_circle(self, theta, radius):
        f = sampling_points(Minutia(50, 60, theta), radius)
        d = f.points[1:] - f.points[0]
        np.testing.assert_allclose(np.hypot(d[:, 0], d[:, 1]), radius, rtol=1e-12)
        ang = np.arctan2(d[:, 1], d[:, 0])
        want = theta + np.arange(8) * math.pi / 4
        assert np.all(np.abs((ang - want + math.pi) % (2 * math.pi) - math.pi) < 1e-9)


class TestResponse:
    def test_zero_raster(self):
        z = np.zeros((64, 64))
        assert all(response(z, (32, 32), BANK, mu, nu) == 0 for mu in range(8) for nu in range(5))

    def test_constant_raster(self):
        c = np.full((160, 160), 128.0)
        for nu in range(5):
            for mu in range(8):
                l1 = np.abs(BANK.kernel(mu, nu)).sum()
                assert response(c, (80, 80), BANK, mu, nu) <= 1e-3 * 128 * l1

    def test_matches_direct_sum(self, rng):
        raster = rng.uniform(0, 255, (64, 64))
        for nu in range(5):
            for mu in range(8):
                want = gabor_response(raster, (32, 32), BANK.kernel(mu, nu))
                assert response(raster, (32, 32), BANK, mu, nu) == pytest.approx(want, rel=1e-9)

    def test_subpixel_point_is_rounded(self, rng):
        raster = rng.uniform(0, 255, (64, 64))
        assert response(raster, (20.3, 40.6), BANK, 2, 1) == response(raster, (20, 41), BANK, 2, 1)

    def test_zero_padding_at_border(self, rng):
        raster = rng.uniform(0, 255, (40, 48))
        want = gabor_response(raster, (3, 5), BANK.kernel(5, 4))
        assert response(raster, (3, 5), BANK, 5, 4) == pytest.approx(want, rel=1e-9)


class TestRawJet:
    def test_zero_raster(self):
        jet = raw_jet(np.zeros((128, 128)), Minutia(64, 64, 1.0), BANK)
        assert jet.shape == (JET_SIZE,) and not jet.any()

    def test_order_point_freq_orient(self, rng):
        raster = rng.uniform(-50, 50, (160, 160))
        m = Minutia(80, 80, 0.0)
        jet = jet_grid(raw_jet(raster, m, BANK, steer=False))
        pts = sampling_points(m).points
        for j in (0, 3, 8):
            for nu in (0, 4):
                for mu in (1, 6):
                    assert jet[j, nu, mu] == pytest.approx(response(raster, pts[j], BANK, mu, nu), rel=1e-12)

    def test_translation_exact(self, rng):
        big = rng.uniform(0, 255, (260, 260))
        dx, dy = 13, 7
        m = Minutia(100.4, 110.7, 2.1)
        a = raw_jet(big[:200, :200], m, BANK)
        b = raw_jet(big[dy:200 + dy, dx:200 + dx], Minutia(m.x - dx, m.y - dy, m.theta), BANK)
        assert np.array_equal(a, b)

    @pytest.mark.parametrize("theta", [0.0, 0.3, 1.9, 4.0])
    def test_quarter_turn_absolute_frame(self, rng, theta):
        n = 201
        raster = rng.uniform(-100, 100, (n, n))
        c = (n - 1) / 2
        a = jet_grid(raw_jet(raster, Minutia(c, c, theta), BANK, steer=False))
        b = jet_grid(raw_jet(rot90_about_center(raster), Minutia(c, c, theta + math.pi / 2), BANK, steer=False))
        # points rotate with theta; wavelet orientation mu becomes mu - 4 (mod 8)
        permuted = np.roll(a, 4, axis=2)
        np.testing.assert_allclose(b, permuted, rtol=0.02)

    @pytest.mark.parametrize("theta", [0.0, 0.3, 1.9, 4.0])
    def test_quarter_turn_steered(self, rng, theta):
        n = 201
        raster = rng.uniform(-100, 100, (n, n))
        c = (n - 1) / 2
        a = raw_jet(raster, Minutia(c, c, theta), BANK)
        b = raw_jet(rot90_about_center(raster), Minutia(c, c, theta + math.pi / 2), BANK)
        np.testing.assert_allclose(b, a, rtol=0.02)

    def test_quarter_turn_on_fingerprint(self):
        img, gt = generate_finger(SynthParams(seed=8, impressions=1))[0]
        raster = enhance(img)[:255, :255] - 128
        c = 127.0
        for theta in (0.2, 2.5):
            a = jet_grid(raw_jet(raster, Minutia(c, c, theta), BANK, steer=False))
            b = jet_grid(raw_jet(rot90_about_center(raster), Minutia(c, c, theta + math.pi / 2), BANK, steer=False))
            np.testing.assert_allclose(b, np.roll(a, 4, axis=2), rtol=0.02)

    def test_steered_equals_offset_bank(self, rng):
        raster = rng.uniform(-100, 100, (160, 160))
        for q in (0, 5, 11, 40, 77, 127):
            theta = q * STEER_STEP
            m = Minutia(80, 80, theta)
            want = raw_jet(raster, m, build_bank(offset=theta), steer=False)
            np.testing.assert_allclose(raw_jet(raster, m, BANK), want, rtol=1e-9, atol=1e-9)

    def test_steering_split(self):
        assert steering(0.0) == (0, 0)
        assert steering(11 * STEER_STEP) == (3, 1)
        assert steering(math.pi + 11 * STEER_STEP) == (3, 1)

    def test_batch_matches_single(self, rng):
        raster = rng.uniform(0, 255, (150, 150))
        ms = [Minutia(*rng.uniform(10, 140, 2), rng.uniform(0, 6.28)) for _ in range(7)]
        batch = raw_jets(raster, ms, BANK)
        for m, row in zip(ms, batch):
            np.testing.assert_array_equal(row, raw_jet(raster, m, BANK))
        assert raw_jets(raster, [], BANK).shape == (0, JET_SIZE)

    @given(st.floats(0.01, 100), st.floats(0, 2 * math.pi, exclude_max=True))
    def test_intensity_scaling(self, s, theta):
        raster = np.random.default_rng(7).uniform(-100, 100, (120, 120))
        m = Minutia(60, 60, theta)
        a = raw_jet(raster, m, BANK)
        b = raw_jet(s * raster, m, BANK)
        np.testing.assert_allclose(b, s * a, rtol=1e-9)
        assert np.abs(normalize_jets(a) - normalize_jets(b)).max() <= 1e-9

    @given(st.floats(-20, 140), st.floats(-20, 140), st.floats(0, 2 * math.pi, exclude_max=True))
    def test_non_negative_length(self, x, y, theta):
        raster = np.random.default_rng(3).uniform(-1, 1, (120, 120))
        jet = raw_jet(raster, Minutia(x, y, theta), BANK)
        assert jet.shape == (360,) and np.all(jet >= 0)


def test_normalize_zero_jet():
    out = normalize_jets(np.zeros((2, 360)))
    assert not out.any()
