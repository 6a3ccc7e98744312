"""Gabor-jet features sampled around a minutia.

A bank of 40 complex Gabor wavelets (5 frequencies x 8 orientations) is
correlated with the enhanced raster at 9 points: the minutia itself and 8
points on a circle oriented by the minutia direction. The 360 response
magnitudes form the raw jet that the subspace module projects.

By default the 8 wavelet orientations are measured from the minutia
direction, like the sampling points, so a jet describes the neighbourhood in
the minutia's own frame. The direction is quantized to pi/64 and served from
a small cache of sub-step banks. ``steer=False`` keeps the orientations fixed
in the image frame.

Coordinates are ``(x, y)`` = (column, row) with y growing downward, and an
angle ``t`` means the direction ``(cos t, sin t)`` in those coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError

N_FREQ = 5
N_ORIENT = 8
N_POINTS = 9
JET_SIZE = N_POINTS * N_FREQ * N_ORIENT
DEFAULT_SIGMA = 2.0 * math.pi
DEFAULT_KMAX = math.pi / 2.0
DEFAULT_RADIUS = 18.0


@dataclass(frozen=True)
class GaborBank:
    """Immutable Gabor wavelet bank.

    ``kernels[nu]`` is a complex array of shape ``(8, 2r+1, 2r+1)`` holding
    the eight orientations of frequency ``nu``; entry ``[mu, r + y, r + x]``
    is the wavelet value at offset ``z = (x, y)``.
    """

    sigma: float
    kmax: float
    kernels: tuple = field(repr=False)
    offset: float = 0.0
    _steered: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def radii(self) -> tuple:
        return tuple(k.shape[-1] // 2 for k in self.kernels)

    @property
    def max_radius(self) -> int:
        return max(self.radii)

    def wavenumber(self, nu: int) -> float:
        return self.kmax / 2.0 ** (nu / 2.0)

    @staticmethod
    def orientation(mu: int) -> float:
        return math.pi * mu / N_ORIENT

    def kernel(self, mu: int, nu: int) -> np.ndarray:
        return self.kernels[nu][mu]

    def substep(self, fine: int) -> "GaborBank":
        """Bank with every orientation advanced by ``fine * pi/64`` (0 <= fine < 8)."""
        if fine == 0:
            return self
        if fine not in self._steered:
            self._steered[fine] = build_bank(self.sigma, self.kmax, fine * STEER_STEP)
        return self._steered[fine]


STEER_STEP = math.pi / 64


def build_bank(sigma: float = DEFAULT_SIGMA, kmax: float = DEFAULT_KMAX,
               offset: float = 0.0) -> GaborBank:
    """Sample g_{mu,nu}(z) on integer offsets, truncated at ceil(3 sigma / k_nu).

    Orientation ``mu`` points along ``pi * mu / 8 + offset``.

    The DC-compensation constant exp(-sigma^2/2) is the continuum value. On a
    truncated discrete grid it leaves a residual mean of ~1e-3, so it is
    replaced by the discrete ratio sum(env * e^{ikz}) / sum(env), which makes
    each kernel sum to zero to rounding error. The two constants differ by
    less than 1e-3 of the envelope peak.
    """
    if not sigma > 0:
        raise InvalidParameterError(f"gabor sigma must be positive, got {sigma}")
    if not 0 < kmax <= math.pi:
        raise InvalidParameterError(f"gabor kmax must lie in (0, pi], got {kmax}")
    kernels = []
    for nu in range(N_FREQ):
        k = kmax / 2.0 ** (nu / 2.0)
        r = int(math.ceil(3.0 * sigma / k))
        y, x = np.mgrid[-r:r + 1, -r:r + 1].astype(np.float64)
        env = (k * k / sigma**2) * np.exp(-(k * k) * (x * x + y * y) / (2.0 * sigma**2))
        stack = np.empty((N_ORIENT, 2 * r + 1, 2 * r + 1), dtype=np.complex128)
        for mu in range(N_ORIENT):
            phi = math.pi * mu / N_ORIENT + offset
            wave = np.exp(1j * (k * math.cos(phi) * x + k * math.sin(phi) * y))
            dc = (env * wave).sum() / env.sum()
            stack[mu] = env * (wave - dc)
        stack.flags.writeable = False
        kernels.append(stack)
    return GaborBank(float(sigma), float(kmax), tuple(kernels), float(offset))


@dataclass(frozen=True)
class SamplingFrame:
    points: np.ndarray  # (9, 2) array of (x, y); row 0 is the minutia
    radius: float


def sampling_points(m, radius: float = DEFAULT_RADIUS) -> SamplingFrame:
    """Minutia position plus 8 points at ``theta + j*pi/4`` on a circle of ``radius``."""
    ang = m.theta + np.arange(8) * (math.pi / 4.0)
    pts = np.empty((N_POINTS, 2))
    pts[0] = (m.x, m.y)
    pts[1:, 0] = m.x + radius * np.cos(ang)
    pts[1:, 1] = m.y + radius * np.sin(ang)
    return SamplingFrame(pts, float(radius))


def _patches(raster: np.ndarray, pts: np.ndarray, r: int) -> np.ndarray:
    """Windows of side 2r+1 centred on the rounded points, zero outside the raster."""
    n = 2 * r + 1
    h, w = raster.shape
    cx = np.rint(pts[:, 0]).astype(np.int64)
    cy = np.rint(pts[:, 1]).astype(np.int64)
    out = np.zeros((len(pts), n, n))
    for i in range(len(pts)):
        x0, y0 = cx[i] - r, cy[i] - r
        xa, xb = max(x0, 0), min(x0 + n, w)
        ya, yb = max(y0, 0), min(y0 + n, h)
        if xa < xb and ya < yb:
            out[i, ya - y0:yb - y0, xa - x0:xb - x0] = raster[ya:yb, xa:xb]
    return out


def _responses(raster: np.ndarray, pts: np.ndarray, bank: GaborBank) -> np.ndarray:
    """|coefficients| of shape (len(pts), 5, 8) at rounded points."""
    raster = np.asarray(raster, dtype=np.float64)
    out = np.empty((len(pts), N_FREQ, N_ORIENT))
    for nu, stack in enumerate(bank.kernels):
        r = stack.shape[-1] // 2
        patches = _patches(raster, pts, r)
        coef = patches.reshape(len(pts), -1) @ stack.reshape(N_ORIENT, -1).T
        out[:, nu, :] = np.abs(coef)
    return out


def response(raster, p, bank: GaborBank, mu: int, nu: int) -> float:
    """Magnitude of sum_z kernel(z) * raster(round(p) + z), zero outside the raster."""
    pts = np.asarray([p], dtype=np.float64)
    raster = np.asarray(raster, dtype=np.float64)
    stack = bank.kernels[nu]
    r = stack.shape[-1] // 2
    patch = _patches(raster, pts, r)[0]
    return float(abs(np.sum(patch * stack[mu])))


def raw_jet(raster, m, bank: GaborBank, radius: float = DEFAULT_RADIUS, steer: bool = True) -> np.ndarray:
    """360-vector ordered (point, nu, mu)."""
    return raw_jets(raster, [m], bank, radius, steer)[0]


def steering(theta: float):
    """Split a direction into (sub-step bank index, whole-orientation roll)."""
    # magnitudes repeat with period pi in the wavelet orientation
    s = int(round(theta / STEER_STEP)) % 64
    return s % 8, s // 8


def raw_jets(raster, minutiae, bank: GaborBank, radius: float = DEFAULT_RADIUS,
             steer: bool = True) -> np.ndarray:
    """Jets for many minutiae over one raster, shape ``(len(minutiae), 360)``."""
    n = len(minutiae)
    if n == 0:
        return np.zeros((0, JET_SIZE))
    raster = np.asarray(raster, dtype=np.float64)
    out = np.empty((n, N_POINTS, N_FREQ, N_ORIENT))
    groups = {}
    for i, m in enumerate(minutiae):
        fine, roll = steering(m.theta) if steer else (0, 0)
        groups.setdefault(fine, []).append((i, roll))
    for fine, members in sorted(groups.items()):
        idx = [i for i, _ in members]
        pts = np.concatenate([sampling_points(minutiae[i], radius).points for i in idx])
        resp = _responses(raster, pts, bank.substep(fine)).reshape(len(idx), N_POINTS, N_FREQ, N_ORIENT)
        for k, (i, roll) in enumerate(members):
            # relative orientation mu is absolute index mu + roll
            out[i] = np.roll(resp[k], -roll, axis=-1)
    return out.reshape(n, JET_SIZE)


def normalize_jets(jets) -> np.ndarray:
    """Scale each jet to unit L2 norm (all-zero jets are left at zero)."""
    jets = np.atleast_2d(np.asarray(jets, dtype=np.float64))
    norms = np.linalg.norm(jets, axis=1, keepdims=True)
    return np.divide(jets, norms, out=np.zeros_like(jets), where=norms > 0)
