"""Verification protocol and error rates.

Scores are similarities: a comparison is accepted when its score is at
least the threshold. For a threshold ``t``

    FAR(t) = fraction of impostor scores >= t
    FRR(t) = fraction of genuine scores  <  t

and every metric is evaluated on the thresholds given by the distinct
observed scores, with no interpolation. Everything here depends on the
scores only through their order, so any strictly increasing transform of
all scores leaves the metrics unchanged.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .errors import EmptyScoresError, InsufficientDataError, InvalidParameterError
from .matching import MatchParams, match, system1, system2, system3

FAR_TARGET = 1e-4
PRO_SWEEP = (1, 2, 3, 4, 5)


@dataclass(frozen=True)
class ScoreSet:
    genuine: np.ndarray
    impostor: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.genuine, dtype=np.float64).ravel()
        i = np.asarray(self.impostor, dtype=np.float64).ravel()
        if not (np.all(np.isfinite(g)) and np.all(np.isfinite(i))):
            raise InvalidParameterError("scores must be finite")
        object.__setattr__(self, "genuine", g)
        object.__setattr__(self, "impostor", i)

    def require(self) -> None:
        if self.genuine.size == 0 or self.impostor.size == 0:
            raise EmptyScoresError(
                f"need genuine and impostor scores, got {self.genuine.size} and {self.impostor.size}"
            )


class OperatingPoint(NamedTuple):
    frr: float
    far: float
    threshold: float
    resolution_limited: bool  # too few impostors to observe the target FAR


def fvc_protocol(db, score_fn) -> ScoreSet:
    """Genuine: all unordered impression pairs per finger. Impostor: first impressions across fingers.

    ``db`` is a sequence of ``(finger_id, impressions)``; ``score_fn(a, b)``
    compares two impressions (or templates). Pairs are scored in a fixed
    order: fingers as given, then ``(a, b)`` with ``a < b``.
    """
    db = list(db)
    if len(db) < 2:
        raise InsufficientDataError(f"need at least 2 fingers, got {len(db)}")
    for fid, imps in db:
        if len(imps) < 2:
            raise InsufficientDataError(f"finger {fid} has {len(imps)} impression(s); need at least 2")
    genuine = [score_fn(imps[a], imps[b])
               for _, imps in db
               for a in range(len(imps)) for b in range(a + 1, len(imps))]
    impostor = [score_fn(db[f][1][0], db[g][1][0])
                for f in range(len(db)) for g in range(f + 1, len(db))]
    return ScoreSet(np.array(genuine), np.array(impostor))


def _counts(s: ScoreSet, thresholds: np.ndarray):
    """Impostors accepted and genuines rejected at each threshold (integers)."""
    g = np.sort(s.genuine)
    i = np.sort(s.impostor)
    fa = i.size - np.searchsorted(i, thresholds, side="left")
    fr = np.searchsorted(g, thresholds, side="left")
    return fa.astype(np.int64), fr.astype(np.int64)


def _rates(s: ScoreSet, thresholds: np.ndarray):
    fa, fr = _counts(s, thresholds)
    return fa / s.impostor.size, fr / s.genuine.size


def eer(s: ScoreSet) -> float:
    """Mean of FAR and FRR where they are closest.

    Among thresholds tied on ``|FAR - FRR|`` the smallest mean wins, which
    makes the value symmetric under swapping roles and negating scores.
    Comparisons use exact integer arithmetic.
    """
    s.require()
    t = np.unique(np.concatenate([s.genuine, s.impostor]))
    fa, fr = _counts(s, t)
    ng, ni = s.genuine.size, s.impostor.size
    # FAR - FRR and FAR + FRR scaled by ng * ni
    gap = np.abs(fa * ng - fr * ni)
    total = fa * ng + fr * ni
    best = int(total[gap == gap.min()].min())
    return best / (2 * ng * ni)


def operating_point(s: ScoreSet, far_target: float = FAR_TARGET) -> OperatingPoint:
    """FRR at the smallest threshold whose FAR is at most ``far_target``."""
    if not 0 < far_target < 1:
        raise InvalidParameterError(f"far_target must lie in (0, 1), got {far_target}")
    s.require()
    if s.impostor.size < 1.0 / far_target:
        # FAR steps are coarser than the target: accept nothing an impostor reached
        t = float(np.nextafter(s.impostor.max(), np.inf))
        far, frr = _rates(s, np.array([t]))
        return OperatingPoint(float(frr[0]), float(far[0]), t, True)
    scores = np.concatenate([s.genuine, s.impostor])
    t = np.append(np.unique(scores), np.nextafter(scores.max(), np.inf))
    fa, fr = _counts(s, t)
    # most impostor accepts allowed; far_target is read as the decimal it prints as
    limit = math.floor(Fraction(repr(float(far_target))) * s.impostor.size)
    k = int(np.argmax(fa <= limit))  # fa is non-increasing in t
    return OperatingPoint(int(fr[k]) / s.genuine.size, int(fa[k]) / s.impostor.size, float(t[k]), False)


def frr_at_far(s: ScoreSet, far_target: float = FAR_TARGET) -> float:
    return operating_point(s, far_target).frr


def det_points(s: ScoreSet) -> np.ndarray:
    """(FAR, FRR) rows for increasing thresholds, ending with accept-nothing."""
    s.require()
    scores = np.concatenate([s.genuine, s.impostor])
    t = np.append(np.unique(scores), np.nextafter(scores.max(), np.inf))
    far, frr = _rates(s, t)
    return np.column_stack([far, frr])


# --- experiments --------------------------------------------------------------

@dataclass
class SystemResult:
    name: str
    params: MatchParams
    scores: ScoreSet
    eer: float
    op: OperatingPoint
    seconds: float = 0.0  # wall time spent matching; not written to files


@dataclass
class Report:
    fingers: int
    impressions: int
    far_target: float
    systems: list = field(default_factory=list)
    sweep: list = field(default_factory=list)

    @property
    def primary(self) -> SystemResult:
        return self.systems[-1]

    def text(self) -> str:
        lines = [
            "minudesc verification report",
            f"fingers {self.fingers}  impressions {self.impressions}  "
            f"genuine {self.primary.scores.genuine.size}  impostor {self.primary.scores.impostor.size}",
            "",
            f"{'system':<10} {'EER':>9} {'FRR@FAR=' + _pct(self.far_target, 2):>16}",
        ]
        for r in self.systems:
            lines.append(_row(r.name, r))
        lines += ["", "reference pair sweep (system3)", f"{'pro':<10} {'EER':>9} {'FRR@FAR':>16}"]
        for r in self.sweep:
            lines.append(_row(f"{r.params.pro:g}%", r))
        if any(r.op.resolution_limited for r in self.systems + self.sweep):
            n = self.primary.scores.impostor.size
            lines += ["", f"* resolution-limited: {n} impostor scores cannot resolve FAR={_pct(self.far_target, 2)};",
                      "  FRR is taken just above the highest impostor score."]
        return "\n".join(lines) + "\n"

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.txt").write_text(self.text())
        p = self.primary
        rows = ([f"G\t{v!r}" for v in p.scores.genuine.tolist()]
                + [f"I\t{v!r}" for v in p.scores.impostor.tolist()])
        (out / "scores.tsv").write_text("\n".join(rows) + "\n")
        for r in self.systems:
            name = "det.tsv" if r is p else f"det_{r.name}.tsv"
            det = det_points(r.scores)
            (out / name).write_text("".join(f"{a!r}\t{b!r}\n" for a, b in det.tolist()))


def _pct(x: float, digits: int = 4) -> str:
    return f"{100.0 * x:.{digits}f}%"


def _row(label: str, r: SystemResult) -> str:
    mark = "*" if r.op.resolution_limited else ""
    return f"{label:<10} {_pct(r.eer):>9} {_pct(r.op.frr) + mark:>16}"


def evaluate_system(name: str, templates, params: MatchParams, far_target: float = FAR_TARGET) -> SystemResult:
    t0 = time.perf_counter()
    scores = fvc_protocol(templates, lambda a, b: match(a, b, params).sim)
    dt = time.perf_counter() - t0
    return SystemResult(name, params, scores, eer(scores), operating_point(scores, far_target), dt)


def run_experiment(db, pipeline=None, base: MatchParams | None = None,
                   pro_values: Sequence[float] = PRO_SWEEP, far_target: float = FAR_TARGET,
                   out_dir=None) -> Report:
    """Score systems 1-3 and a pro sweep under the FVC protocol.

    ``db`` holds ``(finger_id, impressions)``; impressions are images when a
    ``pipeline`` (with a trained transform) is given, else templates. ``base``
    supplies alpha, beta, tolerances and the system-3 ``pro``.
    """
    base = base or MatchParams()
    db = list(db)
    if pipeline is not None:
        db = [(fid, [pipeline.template(img) for img in imps]) for fid, imps in db]
    report = Report(len(db), max((len(imps) for _, imps in db), default=0), far_target)
    for name, params in (("system1", system1(base)), ("system2", system2(base)),
                         ("system3", system3(base.pro, base))):
        report.systems.append(evaluate_system(name, db, params, far_target))
    for pro in pro_values:
        report.sweep.append(evaluate_system(f"pro{pro:g}", db, system3(pro, base), far_target))
    if out_dir is not None:
        report.write(out_dir)
    return report
