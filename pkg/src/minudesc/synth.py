"""Seeded synthetic fingerprints with ground-truth minutiae.

Ridges are rendered as ``cos(phase)`` where the phase is a smooth carrier
(distance to a far-away centre, giving gently curved arch-like ridges, plus
a low-frequency harmonic warp) and one spiral term ``s * arg(z - z_i)`` per
planted minutia. A spiral phase singularity adds one ridge line on one side
of ``z_i``; whether it reads as a ridge ending or a fork depends on the
carrier phase at ``z_i``, so each singularity is nudged along the carrier
gradient (by at most half a ridge period) until the phase there selects the
requested type.

Impressions re-render the same finger under a seeded rigid motion with mild
shear, partial cropping by the fixed sensor window, contrast scaling,
low-contrast blotches and additive noise. Rendering evaluates the phase
analytically at back-projected pixel positions, so ground truth is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidParameterError, PlacementError
from .imaging import GrayImage
from .minutiae import BIFURCATION, TERMINATION, Minutia

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Jitter:
    """Per-impression acquisition variation."""

    translation: float = 24.0
    rotation: float = 0.35
    noise_std: float = 16.0
    contrast: tuple = (0.5, 1.0)
    shear: float = 0.04
    blotches: int = 2
    creases: int = 2  # pale strokes that cut ridges

    def __post_init__(self):
        lo, hi = self.contrast
        if not 0 < lo <= hi:
            raise InvalidParameterError("contrast range must satisfy 0 < low <= high")
        if min(self.translation, self.rotation, self.noise_std, self.shear) < 0:
            raise InvalidParameterError("jitter magnitudes must be non-negative")
        if self.blotches < 0 or self.creases < 0:
            raise InvalidParameterError("blotch and crease counts must be non-negative")

    @classmethod
    def none(cls) -> "Jitter":
        return cls(0.0, 0.0, 0.0, (1.0, 1.0), 0.0, 0, 0)

    @classmethod
    def degraded(cls) -> "Jitter":
        """Low-quality captures with small overlap; error rates of a few percent."""
        return cls(64.0, 0.5, 48.0, (0.35, 1.0), 0.04, 3, 5)


@dataclass(frozen=True)
class SynthParams:
    seed: int = 0
    width: int = 256
    height: int = 288
    ridge_period: float = 9.0
    n_minutiae: int = 20
    impressions: int = 5
    jitter: Jitter = field(default_factory=Jitter)
    bifurcation_fraction: float = 0.5

    def __post_init__(self):
        if self.ridge_period < 4:
            raise InvalidParameterError("ridge_period must be at least 4 px")
        if self.n_minutiae < 0:
            raise InvalidParameterError("n_minutiae must be non-negative")
        if self.impressions < 1:
            raise InvalidParameterError("impressions must be at least 1")
        if self.width < 64 or self.height < 64:
            raise InvalidParameterError("synthetic images must be at least 64x64")


@dataclass(frozen=True)
class Motion:
    """Impression transform ``q = center + matrix @ (p - center) + shift``."""

    matrix: np.ndarray
    shift: np.ndarray
    center: np.ndarray

    def apply_points(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
        return self.center + (pts - self.center) @ self.matrix.T + self.shift

    def inverse_points(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
        inv = np.linalg.inv(self.matrix)
        return self.center + (pts - self.center - self.shift) @ inv.T

    def apply(self, m: Minutia) -> Minutia:
        q = self.apply_points([(m.x, m.y)])[0]
        d = self.matrix @ np.array([math.cos(m.theta), math.sin(m.theta)])
        return Minutia(float(q[0]), float(q[1]), math.atan2(d[1], d[0]), m.kind)


@dataclass(frozen=True)
class GroundTruth:
    base: tuple  # minutiae in finger coordinates
    motion: Motion
    minutiae: tuple  # base minutiae mapped into this impression
    width: int
    height: int

    def visible(self, margin: float = 0.0) -> list:
        """Minutiae whose position lies inside the image, ``margin`` px from the edge."""
        return [m for m in self.minutiae
                if margin <= m.x < self.width - margin and margin <= m.y < self.height - margin]


@dataclass(frozen=True)
class Finger:
    """Analytic ridge pattern of one synthetic finger."""

    center: np.ndarray  # carrier centre of curvature
    period: float
    warp: tuple  # (amplitude, wx, wy, phase) terms
    offset: float
    ellipse: tuple  # (cx, cy, ax, ay)
    spirals: tuple  # (x, y, sign)

    def carrier(self, x, y):
        k = TWO_PI / self.period
        ph = k * np.hypot(x - self.center[0], y - self.center[1]) + self.offset
        for a, wx, wy, p in self.warp:
            ph = ph + a * np.sin(wx * x + wy * y + p)
        return ph

    def carrier_gradient(self, x, y):
        k = TWO_PI / self.period
        dx, dy = x - self.center[0], y - self.center[1]
        r = math.hypot(dx, dy)
        gx, gy = k * dx / r, k * dy / r
        for a, wx, wy, p in self.warp:
            c = a * math.cos(wx * x + wy * y + p)
            gx += c * wx
            gy += c * wy
        return gx, gy

    def phase(self, x, y, skip=None):
        ph = self.carrier(x, y)
        for i, (sx, sy, s) in enumerate(self.spirals):
            if i != skip:
                ph = ph + s * np.arctan2(y - sy, x - sx)
        return ph

    def flow(self, x, y) -> np.ndarray:
        """Analytic ridge orientation in [0, pi) of the carrier."""
        k = TWO_PI / self.period
        dx, dy = x - self.center[0], y - self.center[1]
        r = np.hypot(dx, dy)
        gx, gy = k * dx / r, k * dy / r
        for a, wx, wy, p in self.warp:
            c = a * np.cos(wx * x + wy * y + p)
            gx = gx + c * wx
            gy = gy + c * wy
        return (np.arctan2(gy, gx) + math.pi / 2) % math.pi

    def inside(self, x, y) -> np.ndarray:
        cx, cy, ax, ay = self.ellipse
        return ((x - cx) / ax) ** 2 + ((y - cy) / ay) ** 2


def _more_lines_direction(gx: float, gy: float, sign: int) -> float:
    # spiral +1 adds a line on the side opposite rot90(gradient)
    return math.atan2(-gx, gy) if sign > 0 else math.atan2(gx, -gy)


def _random_finger(rng: np.random.Generator, p: SynthParams) -> Finger:
    w, h = p.width, p.height
    mid = np.array([w / 2.0, h / 2.0])
    dist = rng.uniform(1.1, 2.5) * max(w, h)
    ang = rng.uniform(0, TWO_PI)
    center = mid + dist * np.array([math.cos(ang), math.sin(ang)])
    k = TWO_PI / p.ridge_period
    warp = []
    for _ in range(2):
        wl = rng.uniform(160.0, 320.0)
        wa = rng.uniform(0, TWO_PI)
        om = TWO_PI / wl
        # keep local frequency within ~15% of nominal
        amp = 0.07 * k / om
        warp.append((amp, om * math.cos(wa), om * math.sin(wa), rng.uniform(0, TWO_PI)))
    ellipse = (mid[0], mid[1], 0.52 * w, 0.55 * h)
    return Finger(center, p.ridge_period, tuple(warp), float(rng.uniform(0, TWO_PI)), ellipse, ())


def _place(rng, finger: Finger, p: SynthParams) -> list:
    spacing = 3.0 * p.ridge_period
    margin = 24.0
    pts = []
    attempts = 0
    while len(pts) < p.n_minutiae and attempts < 20000:
        attempts += 1
        x = rng.uniform(margin, p.width - margin)
        y = rng.uniform(margin, p.height - margin)
        if finger.inside(x, y) > 0.8**2:
            continue
        # nudging may move a point by period/2, keep slack for it
        if all(math.hypot(x - a, y - b) >= spacing + 0.5 * p.ridge_period for a, b in pts):
            pts.append((x, y))
    if len(pts) < p.n_minutiae:
        raise PlacementError(
            f"placed only {len(pts)} of {p.n_minutiae} minutiae with spacing {spacing:.1f}",
            achieved=len(pts),
        )
    return pts


def _plant(rng, finger: Finger, p: SynthParams):
    """Place spirals and tune them to the requested minutia types."""
    for _ in range(20):
        planted = _plant_once(rng, finger, p)
        pts = np.array([(m.x, m.y) for m in planted[1]]).reshape(-1, 2)
        d = np.hypot(pts[:, None, 0] - pts[None, :, 0], pts[:, None, 1] - pts[None, :, 1])
        np.fill_diagonal(d, np.inf)
        if len(pts) < 2 or d.min() >= 3.0 * p.ridge_period:
            return planted
    raise PlacementError("nudged minutiae keep violating the spacing", achieved=0)


def _plant_once(rng, finger: Finger, p: SynthParams):
    pts = _place(rng, finger, p)
    signs = [int(s) for s in rng.choice([-1, 1], size=len(pts))]
    kinds = [BIFURCATION if u < p.bifurcation_fraction else TERMINATION
             for u in rng.uniform(size=len(pts))]
    spirals = [(x, y, s) for (x, y), s in zip(pts, signs)]
    for _ in range(4):
        for i, (x, y, s) in enumerate(spirals):
            f = replace(finger, spirals=tuple(spirals))
            gx, gy = f.carrier_gradient(x, y)
            theta = _more_lines_direction(gx, gy, s)
            cur = float(f.phase(x, y, skip=i)) + s * theta
            # ridge (cos < 0) along theta means a termination
            target = math.pi if kinds[i] == TERMINATION else 0.0
            delta = (target - cur + math.pi) % TWO_PI - math.pi
            g = math.hypot(gx, gy)
            spirals[i] = (x + delta * gx / g**2, y + delta * gy / g**2, s)
    finger = replace(finger, spirals=tuple(spirals))
    truth = []
    for (x, y, s), kind in zip(spirals, kinds):
        gx, gy = finger.carrier_gradient(x, y)
        truth.append(Minutia(x, y, _more_lines_direction(gx, gy, s), kind))
    return finger, truth


def _motion(rng, p: SynthParams) -> Motion:
    j = p.jitter
    a = rng.uniform(-j.rotation, j.rotation) if j.rotation > 0 else 0.0
    sh = rng.uniform(-j.shear, j.shear, size=2) if j.shear > 0 else np.zeros(2)
    rot = np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])
    mat = rot @ np.array([[1.0 + sh[0], sh[1]], [sh[1], 1.0 - sh[0]]])
    shift = rng.uniform(-j.translation, j.translation, size=2) if j.translation > 0 else np.zeros(2)
    center = np.array([p.width / 2.0, p.height / 2.0])
    return Motion(mat, shift, center)


def _render(finger: Finger, motion: Motion, p: SynthParams, rng) -> np.ndarray:
    j = p.jitter
    yy, xx = np.mgrid[0:p.height, 0:p.width].astype(np.float64)
    q = np.stack([xx.ravel(), yy.ravel()], axis=1)
    base = motion.inverse_points(q)
    bx = base[:, 0].reshape(xx.shape)
    by = base[:, 1].reshape(xx.shape)
    ph = finger.phase(bx, by)
    rr = finger.inside(bx, by)
    # soft edge over the outer ~8% of the ellipse
    weight = np.clip((1.0 - rr) / 0.15, 0.0, 1.0)
    lo, hi = j.contrast
    amp = 100.0 * (rng.uniform(lo, hi) if hi > lo else lo)
    local = np.ones_like(xx)
    for _ in range(j.blotches):
        cx, cy = rng.uniform(0, p.width), rng.uniform(0, p.height)
        rad = rng.uniform(15.0, 35.0)
        local *= 1.0 - 0.75 * np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * rad**2))
    img = 230.0 + weight * (128.0 + amp * local * np.cos(ph) - 230.0)
    for _ in range(j.creases):
        cx, cy = rng.uniform(0, p.width), rng.uniform(0, p.height)
        ang = rng.uniform(0, math.pi)
        half = rng.uniform(30.0, 80.0)
        width = rng.uniform(1.5, 3.0)
        u = (xx - cx) * math.cos(ang) + (yy - cy) * math.sin(ang)
        v = -(xx - cx) * math.sin(ang) + (yy - cy) * math.cos(ang)
        d = np.hypot(np.maximum(np.abs(u) - half, 0.0), v)
        img = img + (230.0 - img) * np.exp(-(d / width) ** 2)
    if j.noise_std > 0:
        img = img + rng.normal(0.0, j.noise_std, size=img.shape)
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def generate_finger(params: SynthParams) -> list:
    """Render ``params.impressions`` impressions of one finger.

    Returns a list of ``(GrayImage, GroundTruth)`` pairs; identical params
    give bitwise-identical output.
    """
    rng = np.random.default_rng(params.seed)
    finger = _random_finger(rng, params)
    finger, base = _plant(rng, finger, params)
    out = []
    for _ in range(params.impressions):
        motion = _motion(rng, params)
        img = _render(finger, motion, params, rng)
        moved = tuple(motion.apply(m) for m in base)
        gt = GroundTruth(tuple(base), motion, moved, params.width, params.height)
        out.append((GrayImage(img), gt))
    return out


def finger_seed(seed: int, index: int) -> int:
    """Independent per-finger seed derived from (database seed, finger index)."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(index,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def generate_database(seed: int, fingers: int, params: SynthParams | None = None) -> list:
    """``[(finger_id, [(GrayImage, GroundTruth), ...]), ...]`` for ``fingers`` fingers."""
    params = params or SynthParams()
    db = []
    for f in range(fingers):
        db.append((f + 1, generate_finger(replace(params, seed=finger_seed(seed, f)))))
    return db


def whorl_pattern(size: int = 256, period: float = 9.0, center=None):
    """Concentric ridges around ``center``; returns (uint8 image, flow angle map)."""
    if center is None:
        center = (size / 2.0, size / 2.0)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    dx, dy = xx - center[0], yy - center[1]
    img = np.clip(np.rint(128.0 + 100.0 * np.cos(TWO_PI * np.hypot(dx, dy) / period)), 0, 255)
    flow = (np.arctan2(dy, dx) + math.pi / 2) % math.pi
    return img.astype(np.uint8), flow


def build_training_set(fingers: int, params: SynthParams | None = None, seed: int = 0,
                       pipeline=None, match_distance: float = 8.0,
                       match_angle: float = math.pi / 6):
    """Labeled raw jets from synthetic fingers.

    Each impression runs the full extraction + jet pipeline; an extracted
    minutia is labeled with the planted minutia it lies within
    ``match_distance`` px and ``match_angle`` rad of (nearest wins). One class
    per planted minutia; classes with fewer than 2 jets are dropped.
    """
    params = params or SynthParams()
    db = generate_database(seed, fingers, params)
    return label_jets(((fid, img, gt.minutiae) for fid, imps in db for img, gt in imps),
                      pipeline, match_distance, match_angle)


def label_jets(samples, pipeline=None, match_distance: float = 8.0,
               match_angle: float = math.pi / 6):
    """Labeled raw jets from ``(finger_id, image, true_minutiae)`` samples.

    The class of a jet is (finger, index of the matched true minutia).
    """
    from .pipeline import Pipeline
    from .subspace import LabeledJetSet

    pipeline = pipeline or Pipeline()
    classes = {}
    jets, labels = [], []
    for fid, img, truth in samples:
        minutiae, raw = pipeline.minutiae_and_jets(img)
        for m, jet in zip(minutiae, raw):
            k = nearest_truth(m, truth, match_distance, match_angle)
            if k is not None:
                jets.append(jet)
                labels.append(classes.setdefault((fid, k), len(classes)))
    return LabeledJetSet.from_samples(jets, labels, min_per_class=2)


def nearest_truth(m: Minutia, truth, max_dist: float, max_angle: float):
    """Index of the closest ground-truth minutia within tolerance, else None."""
    best, best_d = None, max_dist
    for k, t in enumerate(truth):
        d = math.hypot(m.x - t.x, m.y - t.y)
        da = abs((m.theta - t.theta + math.pi) % TWO_PI - math.pi)
        if d <= best_d and da <= max_angle:
            best, best_d = k, d
    return best
