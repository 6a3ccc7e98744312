"""Template and transform files.

Templates are line-oriented text so they can be diffed by eye::

    MINUDESC-TEMPLATE 1
    size 256 288 500
    minutiae 2 25
    m 101.5 40.0 1.5707963267948966 termination 0.12 -3.4 ...
    m ...
    end

Floats are written with ``repr`` (shortest string that round-trips), so a
load after a save is bit-exact. Each ``m`` line holds x, y, theta, kind and
the descriptor.

Synthetic ground truth sits next to each image as ``<finger>_<impression>.gt.json``
holding the image size, the impression motion
``q = center + matrix @ (p - center) + shift`` and the true minutiae both in
finger coordinates (``base``) and in the image (``minutiae``).

Transforms are binary, little-endian: magic ``MDSC``, u16 version, u16 dims
(input, pca, out), the mean (input f64), then the matrix row-major
(input x out f64).
"""

from __future__ import annotations

import json
import re
import struct
from pathlib import Path

import numpy as np

from .errors import InsufficientDataError, MalformedFileError, VersionMismatchError
from .imaging import read_image, write_pgm
from .matching import Template
from .minutiae import KINDS, Minutia
from .subspace import SubspaceTransform
from .synth import GroundTruth, Motion

TEMPLATE_MAGIC = "MINUDESC-TEMPLATE"
TEMPLATE_VERSION = 1
TRANSFORM_MAGIC = b"MDSC"
TRANSFORM_VERSION = 1
_HEADER = struct.Struct("<4sHHHH")


def format_template(t: Template) -> str:
    dim = t.descriptors.shape[1]
    lines = [f"{TEMPLATE_MAGIC} {TEMPLATE_VERSION}",
             f"size {t.width} {t.height} {t.dpi!r}",
             f"minutiae {len(t.minutiae)} {dim}"]
    for m, d in zip(t.minutiae, t.descriptors.tolist()):
        fields = [repr(float(m.x)), repr(float(m.y)), repr(m.theta), m.kind] + [repr(v) for v in d]
        lines.append("m " + " ".join(fields))
    lines.append("end")
    return "\n".join(lines) + "\n"


def _fail(path, msg):
    raise MalformedFileError(f"{path}: {msg}")


def parse_template(text: str, path="<template>") -> Template:
    lines = text.splitlines()
    if not lines or not lines[0].startswith(TEMPLATE_MAGIC):
        _fail(path, "not a minudesc template")
    head = lines[0].split()
    if len(head) != 2 or not head[1].isdigit():
        _fail(path, "bad template header")
    if int(head[1]) != TEMPLATE_VERSION:
        raise VersionMismatchError(f"{path}: template version {head[1]}, expected {TEMPLATE_VERSION}")
    try:
        tag, w, h, dpi = lines[1].split()
        tag2, n, dim = lines[2].split()
        if (tag, tag2) != ("size", "minutiae"):
            raise ValueError
        w, h, n, dim = int(w), int(h), int(n), int(dim)
        dpi = float(dpi) if "." in dpi or "e" in dpi else int(dpi)
    except (ValueError, IndexError):
        _fail(path, "bad template header")
    if len(lines) != n + 4 or lines[-1] != "end":
        _fail(path, f"expected {n} minutia lines and an end marker")
    minutiae, desc = [], np.empty((n, dim))
    for k, line in enumerate(lines[3:3 + n]):
        parts = line.split()
        if len(parts) != 5 + dim or parts[0] != "m" or parts[4] not in KINDS:
            _fail(path, f"bad minutia record on line {k + 4}")
        try:
            x, y, theta = (float(v) for v in parts[1:4])
            desc[k] = [float(v) for v in parts[5:]]
        except ValueError:
            _fail(path, f"bad number on line {k + 4}")
        minutiae.append(Minutia(x, y, theta, parts[4]))
    return Template(tuple(minutiae), desc, w, h, dpi)


def save_template(path, t: Template) -> None:
    Path(path).write_text(format_template(t))


def load_template(path) -> Template:
    try:
        text = Path(path).read_text()
    except UnicodeDecodeError:
        _fail(path, "not a text file")
    return parse_template(text, path)


def transform_bytes(t: SubspaceTransform) -> bytes:
    n_in, n_pca, n_out = t.dims
    head = _HEADER.pack(TRANSFORM_MAGIC, TRANSFORM_VERSION, n_in, n_pca, n_out)
    return (head + np.ascontiguousarray(t.mean, dtype="<f8").tobytes()
            + np.ascontiguousarray(t.matrix, dtype="<f8").tobytes())


def parse_transform(data: bytes, path="<transform>") -> SubspaceTransform:
    if len(data) < _HEADER.size:
        _fail(path, "truncated transform header")
    magic, version, n_in, n_pca, n_out = _HEADER.unpack_from(data)
    if magic != TRANSFORM_MAGIC:
        _fail(path, f"bad magic {magic!r}")
    if version != TRANSFORM_VERSION:
        raise VersionMismatchError(f"{path}: transform version {version}, expected {TRANSFORM_VERSION}")
    if not (0 < n_out <= n_pca <= n_in):
        _fail(path, f"inconsistent dims {n_in}/{n_pca}/{n_out}")
    expected = _HEADER.size + 8 * (n_in + n_in * n_out)
    if len(data) != expected:
        _fail(path, f"payload is {len(data)} bytes, dims imply {expected}")
    vals = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).astype(np.float64)
    mean = vals[:n_in].copy()
    matrix = vals[n_in:].reshape(n_in, n_out).copy()
    return SubspaceTransform(mean, matrix, n_pca)


def save_transform(path, t: SubspaceTransform) -> None:
    Path(path).write_bytes(transform_bytes(t))


def load_transform(path) -> SubspaceTransform:
    return parse_transform(Path(path).read_bytes(), path)


# --- synthetic databases -------------------------------------------------------

GT_VERSION = 1
_DB_NAME = re.compile(r"^([A-Za-z0-9]+)_(\d+)\.(png|pgm)$", re.IGNORECASE)


def _minutia_dict(m: Minutia) -> dict:
    return {"x": float(m.x), "y": float(m.y), "theta": m.theta, "kind": m.kind}


def ground_truth_json(gt: GroundTruth, finger, impression: int) -> str:
    doc = {
        "version": GT_VERSION,
        "finger": finger,
        "impression": impression,
        "width": gt.width,
        "height": gt.height,
        "motion": {"matrix": gt.motion.matrix.tolist(), "shift": gt.motion.shift.tolist(),
                   "center": gt.motion.center.tolist()},
        "base": [_minutia_dict(m) for m in gt.base],
        "minutiae": [_minutia_dict(m) for m in gt.minutiae],
    }
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def load_ground_truth(path) -> GroundTruth:
    try:
        doc = json.loads(Path(path).read_text())
        if doc["version"] != GT_VERSION:
            raise VersionMismatchError(f"{path}: ground truth version {doc['version']}, expected {GT_VERSION}")
        mot = doc["motion"]
        motion = Motion(np.array(mot["matrix"], dtype=np.float64), np.array(mot["shift"], dtype=np.float64),
                        np.array(mot["center"], dtype=np.float64))

        def mins(key):
            return tuple(Minutia(float(d["x"]), float(d["y"]), float(d["theta"]), d["kind"]) for d in doc[key])

        return GroundTruth(mins("base"), motion, mins("minutiae"), int(doc["width"]), int(doc["height"]))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, VersionMismatchError):
            raise
        raise MalformedFileError(f"{path}: bad ground truth file ({exc})") from None


def write_database(out_dir, db) -> list:
    """Write ``[(finger_id, [(GrayImage, GroundTruth), ...])]``; returns the image paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for fid, imps in db:
        for k, (img, gt) in enumerate(imps, 1):
            stem = out / f"{fid}_{k}"
            write_pgm(stem.with_suffix(".pgm"), img)
            stem.with_suffix(".gt.json").write_text(ground_truth_json(gt, fid, k))
            paths.append(stem.with_suffix(".pgm"))
    return paths


def _finger_key(fid: str):
    return (0, int(fid), fid) if fid.isdigit() else (1, 0, fid)


def scan_database(db_dir) -> list:
    """``[(finger_id, [image paths by impression])]`` from ``<finger>_<impression>.png|pgm`` names."""
    root = Path(db_dir)
    if not root.is_dir():
        raise InsufficientDataError(f"{root}: not a directory")
    fingers = {}
    for p in root.iterdir():
        m = _DB_NAME.match(p.name)
        if m:
            fingers.setdefault(m.group(1), []).append((int(m.group(2)), p))
    return [(fid, [p for _, p in sorted(fingers[fid])]) for fid in sorted(fingers, key=_finger_key)]


def read_database(db_dir, dpi: int = 500, ground_truth: bool = False) -> list:
    """Load images (and ``.gt.json`` files when asked) for every finger in ``db_dir``."""
    db = []
    for fid, paths in scan_database(db_dir):
        imps = []
        for p in paths:
            img = read_image(p, dpi=dpi)
            if ground_truth:
                gt_path = p.with_suffix(".gt.json")
                if not gt_path.is_file():
                    raise InsufficientDataError(f"{gt_path}: missing ground truth")
                imps.append((img, load_ground_truth(gt_path)))
            else:
                imps.append(img)
        db.append((fid, imps))
    return db
