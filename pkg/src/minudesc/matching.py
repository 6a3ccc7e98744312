"""Descriptor-driven two-stage minutia matching.

Stage one aligns the test template onto the enrollment template through a
set of reference minutia pairs (chosen by descriptor similarity), pairs
minutiae greedily under position/angle tolerances and a descriptor
similarity gate, and keeps the alignment with the largest ``sim1``. Stage
two scores the geometric consistency of the kept pairs (``sim2``). The
final score is ``sim1 * sim2``.

The alignment is rigid (rotation + translation from the reference pair)
with fixed tolerances, a simplification of elastic string matching.
"""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import EmptyTemplateError, InvalidParameterError
from .minutiae import Minutia

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Template:
    """Minutiae of one impression with one descriptor row per minutia."""

    minutiae: tuple
    descriptors: np.ndarray
    width: int = 0
    height: int = 0
    dpi: int = 500

    def __post_init__(self):
        mins = tuple(self.minutiae)
        desc = np.asarray(self.descriptors, dtype=np.float64)
        if desc.size == 0:
            desc = desc.reshape(len(mins), desc.shape[-1] if desc.ndim == 2 else 0)
        if desc.ndim != 2 or desc.shape[0] != len(mins):
            raise InvalidParameterError(
                f"need one descriptor row per minutia, got {desc.shape} for {len(mins)} minutiae"
            )
        object.__setattr__(self, "minutiae", mins)
        object.__setattr__(self, "descriptors", desc)
        xy = np.array([(m.x, m.y) for m in mins], dtype=np.float64).reshape(-1, 2)
        th = np.array([m.theta for m in mins], dtype=np.float64)
        object.__setattr__(self, "_xy", xy)
        object.__setattr__(self, "_theta", th)

    def __len__(self):
        return len(self.minutiae)

    @property
    def xy(self) -> np.ndarray:
        return self._xy

    @property
    def theta(self) -> np.ndarray:
        return self._theta

    @classmethod
    def empty(cls, dim: int = 25, **kw) -> "Template":
        return cls((), np.zeros((0, dim)), **kw)

    def moved(self, angle: float, shift=(0.0, 0.0), center=(0.0, 0.0)) -> "Template":
        """Copy with every minutia rotated by ``angle`` about ``center`` then shifted."""
        c, s = math.cos(angle), math.sin(angle)
        out = []
        for m in self.minutiae:
            dx, dy = m.x - center[0], m.y - center[1]
            out.append(Minutia(center[0] + c * dx - s * dy + shift[0],
                               center[1] + s * dx + c * dy + shift[1],
                               m.theta + angle, m.kind))
        return Template(tuple(out), self.descriptors.copy(), self.width, self.height, self.dpi)


@dataclass(frozen=True)
class MatchParams:
    alpha: float = 100.0
    beta: float = 1.0
    pro: float = 3.0
    simd_threshold: float = 0.5
    pos_tol: float = 12.0
    ang_tol: float = math.pi / 6
    sim1_variant: str = "descriptor"  # or "count"
    gating: bool = True

    def __post_init__(self):
        if not (self.alpha > self.beta > 0):
            raise InvalidParameterError(f"need alpha > beta > 0, got {self.alpha}, {self.beta}")
        if not (0 < self.pro <= 100):
            raise InvalidParameterError(f"pro must lie in (0, 100], got {self.pro}")
        if self.sim1_variant not in ("descriptor", "count"):
            raise InvalidParameterError(f"unknown sim1 variant {self.sim1_variant!r}")
        if self.pos_tol <= 0 or self.ang_tol <= 0:
            raise InvalidParameterError("tolerances must be positive")

    @property
    def uses_descriptors(self) -> bool:
        return self.gating or self.sim1_variant == "descriptor"

    @property
    def simd_max(self) -> float:
        return math.log(self.alpha / self.beta)


def _derive(base, **kw) -> MatchParams:
    return replace(base, **kw) if base is not None else MatchParams(**kw)


def system1(base: MatchParams | None = None) -> MatchParams:
    """Baseline: count-based sim1, no descriptor gating, all reference pairs."""
    return _derive(base, sim1_variant="count", gating=False, pro=100.0)


def system2(base: MatchParams | None = None) -> MatchParams:
    """Descriptor sim1 + descriptor gating, all reference pairs."""
    return _derive(base, sim1_variant="descriptor", gating=True, pro=100.0)


def system3(pro: float = 3.0, base: MatchParams | None = None) -> MatchParams:
    """System 2 restricted to the top ``pro`` percent of reference pairs."""
    return _derive(base, sim1_variant="descriptor", gating=True, pro=pro)


@dataclass(frozen=True)
class MatchResult:
    sim1: float
    sim2: float
    sim: float
    pairs: tuple = ()  # (enroll index, test index, simd)
    ref_pair: tuple | None = None
    n_references: int = field(default=0, compare=False)


def descriptor_similarity(v1, v2, alpha: float = 100.0, beta: float = 1.0) -> float:
    """``max(0, log(alpha / (beta + |v1 - v2|)))``."""
    ed = float(np.linalg.norm(np.asarray(v1, dtype=np.float64) - np.asarray(v2, dtype=np.float64)))
    return max(0.0, math.log(alpha / (beta + ed)))


def similarity_matrix(t1: Template, t2: Template, alpha: float = 100.0, beta: float = 1.0) -> np.ndarray:
    """SimD for all (enroll, test) pairs, shape (N1, N2)."""
    d1, d2 = t1.descriptors, t2.descriptors
    if d1.shape[1] != d2.shape[1]:
        raise InvalidParameterError(f"descriptor lengths differ: {d1.shape[1]} vs {d2.shape[1]}")
    diff = d1[:, None, :] - d2[None, :, :]
    ed = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    return np.maximum(0.0, np.log(alpha / (beta + ed)))


def reference_count(n1: int, n2: int, pro: float) -> int:
    # pro is read as the decimal it prints as, so 0.29 does not floor to 0.28999...
    return max(1, math.floor(n1 * n2 * Fraction(repr(float(pro))) / 100))


def select_reference_pairs(t1: Template, t2: Template, params: MatchParams = MatchParams(),
                           simd: np.ndarray | None = None) -> list:
    """Top ``max(1, floor(N1*N2*pro/100))`` pairs by SimD, ties by (i, j)."""
    n1, n2 = len(t1), len(t2)
    if n1 == 0 or n2 == 0:
        raise EmptyTemplateError("reference pairs need two non-empty templates")
    if simd is None:
        simd = similarity_matrix(t1, t2, params.alpha, params.beta)
    k = reference_count(n1, n2, params.pro)
    # stable sort on -simd over row-major order gives the (i, j) tie-break
    order = np.argsort(-simd.ravel(), kind="stable")[:k]
    return [(int(i), int(j)) for i, j in zip(*np.unravel_index(order, simd.shape))]


def _angle_diff(a, b):
    return np.abs((a - b + math.pi) % TWO_PI - math.pi)


def _geometry(t1: Template, t2: Template, ri, rj, cs, sn, rot, params: MatchParams, simd):
    """Candidate masks and distances, shape (R, N1, N2), for a batch of references."""
    d = t2.xy[None, :, :] - t2.xy[rj][:, None, :]
    mx = cs[:, None] * d[..., 0] - sn[:, None] * d[..., 1] + t1.xy[ri, 0][:, None]
    my = sn[:, None] * d[..., 0] + cs[:, None] * d[..., 1] + t1.xy[ri, 1][:, None]
    dist = np.hypot(t1.xy[None, :, 0, None] - mx[:, None, :], t1.xy[None, :, 1, None] - my[:, None, :])
    ang = _angle_diff(t1.theta[None, :, None], t2.theta[None, None, :] + rot[:, None, None])
    ok = (dist <= params.pos_tol) & (ang <= params.ang_tol)
    if params.gating:
        ok &= (simd >= params.simd_threshold)[None]
    return ok, dist


def _rotations(t1: Template, t2: Template, refs):
    ri = np.array([r[0] for r in refs], dtype=np.int64)
    rj = np.array([r[1] for r in refs], dtype=np.int64)
    rot = t1.theta[ri] - t2.theta[rj]
    return ri, rj, np.cos(rot), np.sin(rot), rot


def _candidates(t1: Template, t2: Template, ref, params: MatchParams, simd):
    ri, rj, cs, sn, rot = _rotations(t1, t2, [ref])
    ok, dist = _geometry(t1, t2, ri, rj, cs, sn, rot, params, simd)
    return ok[0], dist[0]


def _greedy(ok, dist, simd, params: MatchParams):
    rows, cols = np.nonzero(ok)
    if len(rows) == 0:
        return []
    if params.uses_descriptors:
        key = np.lexsort((cols, rows, -simd[rows, cols]))
    else:
        key = np.lexsort((cols, rows, dist[rows, cols]))
    rows, cols = rows[key], cols[key]
    if len(np.unique(rows)) == len(rows) and len(np.unique(cols)) == len(cols):
        return [(int(a), int(b), float(simd[a, b])) for a, b in zip(rows, cols)]
    used_r, used_c, out = set(), set(), []
    for a, b in zip(rows.tolist(), cols.tolist()):
        if a in used_r or b in used_c:
            continue
        used_r.add(a)
        used_c.add(b)
        out.append((a, b, float(simd[a, b])))
    return out


def align_and_pair(t1: Template, t2: Template, ref, params: MatchParams = MatchParams(),
                   simd: np.ndarray | None = None) -> list:
    """Pairs ``(i, j, simd)`` after aligning test minutia ``ref[1]`` onto enroll ``ref[0]``.

    Candidates must fall within ``pos_tol`` and ``ang_tol`` after the rigid
    transform and, when gating is on, reach ``simd_threshold``. Assignment is
    greedy one-to-one by descending SimD (by ascending distance when the
    configuration ignores descriptors), ties broken by indices.
    """
    if simd is None:
        simd = _simd_or_zeros(t1, t2, params)
    ok, dist = _candidates(t1, t2, ref, params, simd)
    return _greedy(ok, dist, simd, params)


def sim1(pairs, n1: int, n2: int, variant: str = "descriptor") -> float:
    if not pairs:
        return 0.0
    denom = max(n1, n2)
    if variant == "count":
        return 100.0 * len(pairs) / denom
    if variant == "descriptor":
        return 100.0 * sum(p[2] for p in pairs) / denom
    raise InvalidParameterError(f"unknown sim1 variant {variant!r}")


def sim2_consistency(pairs, t1: Template, t2: Template, dist_abs: float = 5.0,
                     dist_rel: float = 0.10, ang_tol: float = math.pi / 9) -> float:
    """Fraction of pair-of-pairs whose relative geometry agrees in both templates.

    For correspondences a, b the inter-minutia distances must agree within
    ``max(dist_abs, dist_rel * max(d1, d2))`` and the relative minutia
    direction ``theta_a - theta_b`` within ``ang_tol``. Fewer than 2 pairs
    give 1.
    """
    if len(pairs) < 2:
        return 1.0
    ia = np.array([p[0] for p in pairs])
    ib = np.array([p[1] for p in pairs])
    p1, p2 = t1.xy[ia], t2.xy[ib]
    d1 = np.hypot(p1[:, None, 0] - p1[None, :, 0], p1[:, None, 1] - p1[None, :, 1])
    d2 = np.hypot(p2[:, None, 0] - p2[None, :, 0], p2[:, None, 1] - p2[None, :, 1])
    th1, th2 = t1.theta[ia], t2.theta[ib]
    rel = _angle_diff(th1[:, None] - th1[None, :], th2[:, None] - th2[None, :])
    good = (np.abs(d1 - d2) <= np.maximum(dist_abs, dist_rel * np.maximum(d1, d2))) & (rel <= ang_tol)
    iu = np.triu_indices(len(pairs), k=1)
    return float(good[iu].mean())


def _simd_or_zeros(t1, t2, params):
    if params.uses_descriptors:
        return similarity_matrix(t1, t2, params.alpha, params.beta)
    return np.zeros((len(t1), len(t2)))


def match(t1: Template, t2: Template, params: MatchParams = MatchParams()) -> MatchResult:
    """Best-alignment score ``sim = sim1 * sim2`` over the selected reference pairs.

    Reference pairs are tried best-bound-first; a pair is skipped when an
    upper bound on its sim1 cannot beat the current best. The result is the
    same as trying every pair in list order and keeping the first maximum.
    """
    n1, n2 = len(t1), len(t2)
    if n1 == 0 or n2 == 0:
        return MatchResult(0.0, 0.0, 0.0)
    simd = _simd_or_zeros(t1, t2, params)
    if params.uses_descriptors:
        refs = select_reference_pairs(t1, t2, params, simd)
    else:
        k = reference_count(n1, n2, params.pro)
        refs = [(i, j) for i in range(n1) for j in range(n2)][:k]

    weight = np.ones_like(simd) if params.sim1_variant == "count" else simd
    geo = _rotations(t1, t2, refs)
    bound = np.empty(len(refs))
    for k in range(0, len(refs), _CHUNK):
        sl = slice(k, k + _CHUNK)
        ok, _ = _geometry(t1, t2, *(g[sl] for g in geo), params, simd)
        w = np.where(ok, weight[None], 0.0)
        # a one-to-one assignment cannot beat the row-maxima or column-maxima sums
        bound[sl] = np.minimum(w.max(axis=2).sum(axis=1), w.max(axis=1).sum(axis=1))
    bound = 100.0 * bound / max(n1, n2) * (1 + 1e-9) + 1e-12

    best_s, best_idx, best_pairs = -1.0, -1, []
    for r in np.lexsort((np.arange(len(refs)), -bound)):
        if bound[r] < best_s:
            break
        sl = slice(r, r + 1)
        ok, dist = _geometry(t1, t2, *(g[sl] for g in geo), params, simd)
        pairs = _greedy(ok[0], dist[0], simd, params)
        s = sim1(pairs, n1, n2, params.sim1_variant)
        if s > best_s or (s == best_s and r < best_idx):
            best_s, best_idx, best_pairs = s, int(r), pairs
    s2 = sim2_consistency(best_pairs, t1, t2)
    return MatchResult(best_s, s2, best_s * s2, tuple(best_pairs), refs[best_idx], len(refs))


_CHUNK = 128
