"""Minutia extraction: orientation field, binarization, thinning, crossing number.

The pipeline follows the classical skeleton approach:

1. gradient structure tensor -> ridge orientation and coherence
2. foreground segmentation from coherence and local contrast
3. DOG enhancement, then orientation-tuned even Gabor filtering and a sign
   threshold to binarize
4. thinning (scikit-image ``skeletonize``, Zhang's two-subiteration
   algorithm, followed by a pass that breaks any remaining 2x2 ridge blocks)
5. crossing-number scan: CN = 1 is a termination, CN = 3 a bifurcation
6. spurious filtering: border strip, short spurs, close pairs, low coherence

Directions: a termination points from the ridge ending into the ridge body;
a bifurcation points from the fork into the valley between its two branches,
i.e. opposite the stem. Both are measured in image coordinates (x right,
y down).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage, signal
from skimage.morphology import remove_small_holes, remove_small_objects, skeletonize

from .errors import EmptyForegroundError, InvalidParameterError
from .imaging import EnhanceParams, as_raster, enhance

TERMINATION = "termination"
BIFURCATION = "bifurcation"
KINDS = (TERMINATION, BIFURCATION)
TWO_PI = 2.0 * math.pi

# 8-neighbours in cyclic order starting east, as (drow, dcol)
_RING = ((0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1))


@dataclass(frozen=True)
class Minutia:
    x: float
    y: float
    theta: float
    kind: str = TERMINATION

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParameterError(f"unknown minutia kind {self.kind!r}")
        object.__setattr__(self, "theta", float(self.theta) % TWO_PI)


@dataclass(frozen=True)
class ExtractParams:
    block: int = 16
    coherence_threshold: float = 0.3
    border: int = 12
    merge_distance: float = 8.0
    spur_length: int = 10
    trace_length: int = 10
    tensor_sigma: float = 5.0
    contrast_threshold: float = 8.0


@dataclass(frozen=True)
class OrientationField:
    """Block-wise ridge orientation; ``angle`` in [0, pi), one value per block."""

    angle: np.ndarray
    coherence: np.ndarray
    mask: np.ndarray
    block: int


def _gradients(x: np.ndarray):
    gx = ndimage.sobel(x, axis=1, mode="nearest")
    gy = ndimage.sobel(x, axis=0, mode="nearest")
    return gx, gy


def _tensor_angle(gxx, gyy, gxy):
    # dominant gradient direction rotated by 90 deg = ridge flow
    angle = (0.5 * np.arctan2(2.0 * gxy, gxx - gyy) + 0.5 * math.pi) % math.pi
    energy = gxx + gyy
    coh = np.sqrt((gxx - gyy) ** 2 + 4.0 * gxy**2)
    coh = np.divide(coh, energy, out=np.zeros_like(coh), where=energy > 1e-12)
    return angle, coh, energy


def orientation_field(img, block: int = 16, coherence_threshold: float = 0.3,
                      energy_threshold: float = 1e-3) -> OrientationField:
    """Per-block orientation from summed gradient covariance.

    Blocks whose mean gradient energy is below ``energy_threshold`` or whose
    coherence is below ``coherence_threshold`` are marked background.
    """
    x = as_raster(img)
    h, w = x.shape
    if block < 2 or h // block < 2 or w // block < 2:
        raise InvalidParameterError(f"block {block} leaves fewer than 2 blocks per side")
    gx, gy = _gradients(x)
    nby, nbx = h // block, w // block
    crop = (slice(0, nby * block), slice(0, nbx * block))

    def blocksum(a):
        return a[crop].reshape(nby, block, nbx, block).sum(axis=(1, 3))

    gxx, gyy, gxy = blocksum(gx * gx), blocksum(gy * gy), blocksum(gx * gy)
    angle, coh, energy = _tensor_angle(gxx, gyy, gxy)
    mask = (energy / block**2 >= energy_threshold) & (coh >= coherence_threshold)
    return OrientationField(angle, coh, mask, block)


def pixel_orientation(img, sigma: float = 5.0):
    """Smoothed per-pixel ridge orientation in [0, pi) and coherence in [0, 1]."""
    x = ndimage.gaussian_filter(as_raster(img), 1.0)
    gx, gy = _gradients(x)
    gxx = ndimage.gaussian_filter(gx * gx, sigma)
    gyy = ndimage.gaussian_filter(gy * gy, sigma)
    gxy = ndimage.gaussian_filter(gx * gy, sigma)
    angle, coh, _ = _tensor_angle(gxx, gyy, gxy)
    return angle, coh


def segment(img, coherence=None, params: ExtractParams | None = None) -> np.ndarray:
    """Foreground mask: coherent, contrasted texture, cleaned up morphologically."""
    params = params or ExtractParams()
    x = as_raster(img)
    if coherence is None:
        _, coherence = pixel_orientation(x, params.tensor_sigma)
    m = ndimage.uniform_filter(x, 15, mode="reflect")
    sd = np.sqrt(np.maximum(ndimage.uniform_filter(x * x, 15, mode="reflect") - m * m, 0.0))
    sd = ndimage.gaussian_filter(sd, 4.0)
    mask = (coherence >= params.coherence_threshold) & (sd >= params.contrast_threshold)
    if not mask.any():
        return mask
    mask = ndimage.binary_opening(mask, iterations=4)
    mask = ndimage.binary_closing(mask, iterations=4)
    mask = ndimage.binary_fill_holes(mask)
    lab, n = ndimage.label(mask)
    if n > 1:
        sizes = ndimage.sum(mask, lab, index=np.arange(1, n + 1))
        mask = lab == (1 + int(np.argmax(sizes)))
    return mask


def ridge_period(img, mask=None) -> float:
    """Dominant ridge period (pixels) from the 2-D amplitude spectrum."""
    x = as_raster(img)
    x = x - (x[mask].mean() if mask is not None and mask.any() else x.mean())
    if mask is not None:
        x = x * mask
    spec = np.abs(np.fft.fft2(x))
    fy = np.fft.fftfreq(x.shape[0])[:, None]
    fx = np.fft.fftfreq(x.shape[1])[None, :]
    f = np.hypot(fx, fy)
    band = (f > 1 / 20) & (f < 1 / 4)
    if not band.any() or spec[band].max() <= 0:
        return 9.0
    radial = np.bincount(np.rint(f[band] * 400).astype(int), weights=spec[band])
    peak = int(np.argmax(radial)) / 400.0
    return float(np.clip(1.0 / peak, 5.0, 15.0))


def _contextual_filter(x: np.ndarray, orient: np.ndarray, period: float, n_angles: int = 16):
    sig = 0.45 * period
    r = int(math.ceil(3 * sig))
    yy, xx = np.mgrid[-r:r + 1, -r:r + 1].astype(np.float64)
    bins = np.rint(orient / math.pi * n_angles).astype(int) % n_angles
    out = np.zeros_like(x)
    for b in range(n_angles):
        sel = bins == b
        if not sel.any():
            continue
        t = math.pi * b / n_angles
        # u runs across the ridges (normal to flow direction t)
        u = -xx * math.sin(t) + yy * math.cos(t)
        k = np.exp(-(xx**2 + yy**2) / (2 * sig**2)) * np.cos(TWO_PI * u / period)
        k -= k.mean()
        out[sel] = signal.fftconvolve(x, k[::-1, ::-1], mode="same")[sel]
    return out


def _break_blocks(skel: np.ndarray) -> np.ndarray:
    """Delete one pixel of every fully set 2x2 block, keeping 8-connectivity."""
    skel = skel.copy()
    while True:
        blk = skel[:-1, :-1] & skel[1:, :-1] & skel[:-1, 1:] & skel[1:, 1:]
        rows, cols = np.nonzero(blk)
        if len(rows) == 0:
            return skel
        for r, c in zip(rows, cols):
            if not (skel[r, c] and skel[r + 1, c] and skel[r, c + 1] and skel[r + 1, c + 1]):
                continue
            for rr, cc in ((r, c), (r, c + 1), (r + 1, c), (r + 1, c + 1)):
                if _removable(skel, rr, cc):
                    skel[rr, cc] = False
                    break
            else:
                skel[r, c] = False


def _removable(skel, r, c) -> bool:
    h, w = skel.shape
    win = np.zeros((3, 3), dtype=bool)
    r0, r1, c0, c1 = max(r - 1, 0), min(r + 2, h), max(c - 1, 0), min(c + 2, w)
    win[r0 - r + 1:r1 - r + 1, c0 - c + 1:c1 - c + 1] = skel[r0:r1, c0:c1]
    win[1, 1] = False
    _, n = ndimage.label(win, structure=np.ones((3, 3)))
    return n == 1 and win.sum() >= 2


def binarize_thin(img, mask=None, orient=None, period: float | None = None) -> np.ndarray:
    """Binarize ridges (dark) and thin them to a one-pixel-wide skeleton.

    With ``orient`` (per-pixel flow angle) the raster is first smoothed by an
    even Gabor filter tuned to the local orientation and ``period``; ridges
    are where the response is negative. Without it, ridges are pixels below
    their 15x15 local mean.
    """
    x = as_raster(img)
    if mask is None:
        mask = np.ones(x.shape, dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != x.shape:
        raise InvalidParameterError("mask shape differs from image shape")
    if mask.mean() < 0.01:
        raise EmptyForegroundError("foreground covers less than 1% of the image")
    if orient is not None:
        if period is None:
            period = ridge_period(x, mask)
        resp = _contextual_filter(x - x[mask].mean(), orient, period)
        ridges = resp < 0
    else:
        local = ndimage.uniform_filter(x, 15, mode="reflect")
        ridges = x < local - 1e-9
    ridges &= mask
    ridges = remove_small_objects(ridges, 20)
    ridges = remove_small_holes(ridges, 12)
    skel = skeletonize(ridges)
    return _break_blocks(skel)


def crossing_number(p) -> int:
    """Half the number of 0/1 transitions around the 8-ring of a 3x3 patch."""
    p = np.asarray(p, dtype=bool)
    ring = [int(p[1 + dr, 1 + dc]) for dr, dc in _RING]
    return sum(abs(ring[i] - ring[(i + 1) % 8]) for i in range(8)) // 2


def crossing_numbers(skel: np.ndarray) -> np.ndarray:
    """Crossing number of every skeleton pixel (0 off the skeleton)."""
    s = np.pad(np.asarray(skel, dtype=np.int8), 1)
    h, w = skel.shape
    ring = [s[1 + dr:1 + dr + h, 1 + dc:1 + dc + w] for dr, dc in _RING]
    total = sum(np.abs(ring[i] - ring[(i + 1) % 8]) for i in range(8))
    return np.where(skel, total // 2, 0)


def _neighbours(skel, r, c):
    h, w = skel.shape
    for dr, dc in _RING:
        rr, cc = r + dr, c + dc
        if 0 <= rr < h and 0 <= cc < w and skel[rr, cc]:
            yield rr, cc


def _branch_starts(skel, r, c):
    """One start pixel per run of set pixels in the 8-ring (prefers 4-neighbours)."""
    h, w = skel.shape
    ring = []
    for dr, dc in _RING:
        rr, cc = r + dr, c + dc
        ring.append(0 <= rr < h and 0 <= cc < w and bool(skel[rr, cc]))
    if all(ring):
        return []
    start = ring.index(False)
    runs, cur = [], []
    for k in range(1, 9):
        i = (start + k) % 8
        if ring[i]:
            cur.append(i)
        elif cur:
            runs.append(cur)
            cur = []
    if cur:
        runs.append(cur)
    starts = []
    for run in runs:
        pick = next((i for i in run if i % 2 == 0), run[0])
        dr, dc = _RING[pick]
        starts.append((r + dr, c + dc))
    return starts


def _trace(skel, cn, origin, first, length, blocked=()):
    """Walk along the skeleton from ``origin`` through ``first``.

    Returns the visited path (excluding origin) and whether it stopped on
    another minutia pixel (CN not equal to 2).
    """
    path = [first]
    seen = {origin, first, *blocked}
    cur = first
    while len(path) < length:
        if cn[cur] != 2:
            return path, True
        nxt = [p for p in _neighbours(skel, *cur) if p not in seen]
        if not nxt:
            return path, False
        # 4-neighbours first keeps the walk on the ridge centre line
        nxt.sort(key=lambda p: abs(p[0] - cur[0]) + abs(p[1] - cur[1]))
        cur = nxt[0]
        seen.update(nxt)
        path.append(cur)
    return path, cn[cur] != 2


def _snap(angle: float, flow: float) -> float:
    """Pick flow or flow + pi, whichever is closer to ``angle``."""
    a = flow % math.pi
    d = (angle - a + math.pi) % TWO_PI - math.pi
    return a if abs(d) <= math.pi / 2 else a + math.pi


def _distance_to_boundary(mask: np.ndarray) -> np.ndarray:
    return ndimage.distance_transform_edt(np.pad(mask, 1))[1:-1, 1:-1]


def extract_minutiae(img, params: ExtractParams | None = None,
                     enhance_params: EnhanceParams | None = None) -> list:
    """Detect terminations and bifurcations. Featureless images give an empty list."""
    params = params or ExtractParams()
    x = as_raster(img)
    if x.shape[0] < 64 or x.shape[1] < 64:
        raise InvalidParameterError("minutia extraction needs an image of at least 64x64")
    orient, coh = pixel_orientation(x, params.tensor_sigma)
    mask = segment(x, coh, params)
    if mask.mean() < 0.01:
        return []
    enhanced = enhance(img, enhance_params)
    try:
        skel = binarize_thin(enhanced, mask, orient=orient)
    except EmptyForegroundError:
        return []
    return _minutiae_from_skeleton(skel, orient, coh, mask, params)


def _minutiae_from_skeleton(skel, orient, coh, mask, params: ExtractParams) -> list:
    cn = crossing_numbers(skel)
    dist = _distance_to_boundary(mask)
    cands = []  # (r, c, kind, theta, spur_partner)
    for r, c in zip(*np.nonzero((cn == 1) | (cn == 3))):
        kind = TERMINATION if cn[r, c] == 1 else BIFURCATION
        branches = []
        partner = None
        ring = list(_neighbours(skel, r, c))
        for first in _branch_starts(skel, r, c):
            path, hit = _trace(skel, cn, (r, c), first, params.trace_length, ring)
            branches.append(path)
            if kind == TERMINATION and hit and len(path) < params.spur_length:
                partner = path[-1]
        if kind == TERMINATION and len(branches) != 1:
            continue
        if kind == BIFURCATION and len(branches) != 3:
            continue
        vecs = []
        for path in branches:
            pr, pc = path[-1]
            vecs.append(math.atan2(pr - r, pc - c))
        if kind == TERMINATION:
            theta = _snap(vecs[0], orient[r, c])
        else:
            # the fork opens toward the side of the flow line holding two branches
            flow = orient[r, c] % math.pi
            ahead = sum(math.cos(v - flow) > 0 for v in vecs)
            theta = flow if ahead >= 2 else flow + math.pi
        cands.append((r, c, kind, theta, partner))

    drop = set()
    index = {(r, c): i for i, (r, c, *_rest) in enumerate(cands)}
    for i, (r, c, kind, theta, partner) in enumerate(cands):
        if dist[r, c] < params.border or coh[r, c] < params.coherence_threshold:
            drop.add(i)
        if partner is not None:
            drop.add(i)
            # the fork the spur hangs off is spurious too
            for dr in (-1, 0, 1):
                for dc in (-1, 0, 1):
                    j = index.get((partner[0] + dr, partner[1] + dc))
                    if j is not None and cands[j][2] == BIFURCATION:
                        drop.add(j)
    pts = np.array([(c, r) for r, c, *_ in cands], dtype=np.float64).reshape(-1, 2)
    if len(pts) > 1:
        d = np.hypot(pts[:, None, 0] - pts[None, :, 0], pts[:, None, 1] - pts[None, :, 1])
        np.fill_diagonal(d, np.inf)
        close = np.nonzero(d < params.merge_distance)
        drop.update(int(i) for i in close[0])
    out = []
    for i, (r, c, kind, theta, _) in enumerate(cands):
        if i not in drop:
            out.append(Minutia(float(c), float(r), theta, kind))
    return out
