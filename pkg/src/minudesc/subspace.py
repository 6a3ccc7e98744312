"""PCA + LDA subspace for raw Gabor jets.

Training reduces the jets with PCA (360 -> 30) and then finds the Fisher
discriminant directions in the PCA space (30 -> 25). The two maps are
multiplied into one 360 x 25 matrix; a descriptor is
``matrix.T @ (jet - mean)``.

Eigenvectors are sign-canonicalized (largest-magnitude entry positive) so
training is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import (
    DegenerateScatterError,
    DimensionMismatchError,
    InsufficientSamplesError,
    TooFewClassesError,
    TooFewSamplesPerClassError,
)

JET_DIM = 360
PCA_DIM = 30
LDA_DIM = 25
SW_RIDGE = 1e-4


def _canonical_signs(vecs: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


@dataclass(frozen=True)
class LabeledJetSet:
    jets: np.ndarray  # (n, 360)
    labels: np.ndarray  # (n,) integer class ids

    @classmethod
    def from_samples(cls, jets, labels, min_per_class: int = 1) -> "LabeledJetSet":
        """Build a set, dropping classes with fewer than ``min_per_class`` jets."""
        jets = np.asarray(jets, dtype=np.float64).reshape(-1, JET_DIM)
        labels = np.asarray(labels, dtype=np.int64)
        if len(labels):
            ids, counts = np.unique(labels, return_counts=True)
            keep = np.isin(labels, ids[counts >= min_per_class])
            jets, labels = jets[keep], labels[keep]
        return cls(jets, labels)

    @property
    def n_classes(self) -> int:
        return len(np.unique(self.labels))


@dataclass(frozen=True)
class SubspaceTransform:
    mean: np.ndarray  # (input_dim,)
    matrix: np.ndarray  # (input_dim, out_dim)
    pca_dim: int = PCA_DIM

    @property
    def dims(self) -> tuple:
        return (self.matrix.shape[0], self.pca_dim, self.matrix.shape[1])

    @property
    def out_dim(self) -> int:
        return self.matrix.shape[1]


def fit_pca(jets, out_dim: int = PCA_DIM):
    """Return ``(mean, basis, eigenvalues)``.

    ``basis`` has orthonormal columns spanning the top-variance directions;
    eigenvalues are sorted descending and clipped at zero.
    """
    x = np.asarray(jets, dtype=np.float64)
    n, d = x.shape
    if out_dim > d:
        raise DimensionMismatchError(f"out_dim {out_dim} exceeds input dimension {d}")
    if n <= out_dim:
        raise InsufficientSamplesError(f"PCA to {out_dim} dims needs more than {out_dim} samples, got {n}")
    mean = x.mean(axis=0)
    xc = x - mean
    cov = xc.T @ xc / (n - 1)
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(vals)[::-1][:out_dim]
    basis = _canonical_signs(vecs[:, order])
    return mean, basis, np.maximum(vals[order], 0.0)


def scatter_matrices(x, labels):
    """Between-class and within-class scatter, both divided by ``n - classes``.

    With this scaling ``S_w`` is the pooled within-class covariance, so
    ``S_w``-orthonormal discriminant directions give descriptors whose
    within-class spread is about one unit per dimension.
    """
    x = np.asarray(x, dtype=np.float64)
    labels = np.asarray(labels)
    mu = x.mean(axis=0)
    d = x.shape[1]
    sb = np.zeros((d, d))
    sw = np.zeros((d, d))
    for c in np.unique(labels):
        xc = x[labels == c]
        mc = xc.mean(axis=0)
        diff = (mc - mu)[:, None]
        sb += len(xc) * (diff @ diff.T)
        dc = xc - mc
        sw += dc.T @ dc
    dof = max(len(x) - len(np.unique(labels)), 1)
    return sb / dof, sw / dof


def fit_lda(projected, labels, out_dim: int = LDA_DIM, ridge: float = SW_RIDGE):
    """Fisher discriminant directions, shape ``(dim, out_dim)``.

    Solves ``S_b v = lambda S_w' v`` with ``S_w' = S_w + ridge * trace(S_w)/dim * I``
    and keeps the ``out_dim`` largest eigenvalues. Columns are
    ``S_w'``-orthonormal.
    """
    x = np.asarray(projected, dtype=np.float64)
    labels = np.asarray(labels)
    classes, counts = np.unique(labels, return_counts=True)
    if len(classes) and counts.min() < 2:
        raise TooFewSamplesPerClassError("every class needs at least 2 samples")
    if out_dim > len(classes) - 1:
        raise TooFewClassesError(
            f"LDA to {out_dim} dims needs at least {out_dim + 1} classes, got {len(classes)}"
        )
    if out_dim > x.shape[1]:
        raise DimensionMismatchError(f"out_dim {out_dim} exceeds input dimension {x.shape[1]}")
    sb, sw = scatter_matrices(x, labels)
    tr = np.trace(sw)
    if tr <= 0 or not np.isfinite(tr):
        raise DegenerateScatterError("within-class scatter is zero; samples are degenerate")
    sw_reg = sw + ridge * tr / x.shape[1] * np.eye(x.shape[1])
    vals, vecs = linalg.eigh(sb, sw_reg)
    order = np.argsort(vals)[::-1][:out_dim]
    return _canonical_signs(vecs[:, order])


def compose(pca, lda) -> SubspaceTransform:
    """Combine ``(mean, basis)`` from PCA with an LDA matrix."""
    mean, basis = pca[0], pca[1]
    basis = np.asarray(basis, dtype=np.float64)
    lda = np.asarray(lda, dtype=np.float64)
    if basis.ndim != 2 or lda.ndim != 2 or basis.shape[1] != lda.shape[0]:
        raise DimensionMismatchError(
            f"cannot compose PCA basis {basis.shape} with LDA matrix {lda.shape}"
        )
    if np.shape(mean) != (basis.shape[0],):
        raise DimensionMismatchError("PCA mean length differs from basis rows")
    return SubspaceTransform(np.asarray(mean, dtype=np.float64).copy(), basis @ lda, basis.shape[1])


def project(jet, t: SubspaceTransform) -> np.ndarray:
    """Descriptor(s) ``matrix.T @ (jet - mean)``; accepts one jet or a stack."""
    jet = np.asarray(jet, dtype=np.float64)
    if jet.shape[-1] != t.matrix.shape[0]:
        raise DimensionMismatchError(f"jet length {jet.shape[-1]} != {t.matrix.shape[0]}")
    return (jet - t.mean) @ t.matrix


def train(data: LabeledJetSet, pca_dim: int = PCA_DIM, lda_dim: int = LDA_DIM) -> SubspaceTransform:
    if data.n_classes < lda_dim + 1:
        raise TooFewClassesError(
            f"training needs at least {lda_dim + 1} classes, got {data.n_classes}"
        )
    pca = fit_pca(data.jets, pca_dim)
    reduced = (data.jets - pca[0]) @ pca[1]
    lda = fit_lda(reduced, data.labels, lda_dim)
    return compose(pca, lda)


def fisher_ratio(w, x, labels) -> float:
    """trace(W' S_b W) / trace(W' S_w W)."""
    sb, sw = scatter_matrices(x, labels)
    return float(np.trace(w.T @ sb @ w) / np.trace(w.T @ sw @ w))
