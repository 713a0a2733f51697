"""Dense symmetric linear algebra: eigendecomposition, pseudoinverse, Loewner order.

Every routine symmetrizes its input as ``(S + S.T) / 2`` before decomposing,
so asymmetry accumulated while assembling blocks never reaches ``eigh``.
Rank decisions are relative to the largest eigenvalue magnitude.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidInput

SYMMETRY_TOL = 1e-12


def as_sym(S) -> np.ndarray:
    """Validate a square finite matrix and return its symmetric part (float64)."""
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] < 1:
        raise InvalidInput(f"expected a non-empty square matrix, got shape {S.shape}")
    if not np.all(np.isfinite(S)):
        raise InvalidInput("matrix has non-finite entries")
    return 0.5 * (S + S.T)


@dataclass(frozen=True)
class EigenDecomp:
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # columns, orthonormal

    def reconstruct(self) -> np.ndarray:
        Q = self.eigenvectors
        return (Q * self.eigenvalues) @ Q.T


def sym_eig(S) -> EigenDecomp:
    """Spectral decomposition of a symmetric matrix, eigenvalues sorted descending."""
    S = as_sym(S)
    w, Q = np.linalg.eigh(S)
    order = np.argsort(w)[::-1]
    return EigenDecomp(w[order], Q[:, order])


def default_rank_tol(dim: int) -> float:
    return dim * 1e-12


def _cutoff(w: np.ndarray, rank_tol: Optional[float]) -> float:
    if rank_tol is None:
        rank_tol = default_rank_tol(len(w))
    if rank_tol <= 0:
        raise InvalidInput("rank_tol must be positive")
    return rank_tol * float(np.max(np.abs(w), initial=0.0))


def range_basis(S, rank_tol: Optional[float] = None) -> np.ndarray:
    """Orthonormal basis (columns) of range(S)."""
    ed = sym_eig(S)
    keep = np.abs(ed.eigenvalues) > _cutoff(ed.eigenvalues, rank_tol)
    return ed.eigenvectors[:, keep]


def kernel_basis(S, rank_tol: Optional[float] = None) -> np.ndarray:
    """Orthonormal basis (columns) of ker(S) = range(S)^perp."""
    ed = sym_eig(S)
    keep = np.abs(ed.eigenvalues) <= _cutoff(ed.eigenvalues, rank_tol)
    return ed.eigenvectors[:, keep]


def rank(S, rank_tol: Optional[float] = None) -> int:
    return range_basis(S, rank_tol).shape[1]


def range_projector(S, rank_tol: Optional[float] = None) -> np.ndarray:
    U = range_basis(S, rank_tol)
    return U @ U.T


def pinv(S, rank_tol: Optional[float] = None) -> np.ndarray:
    """Moore-Penrose pseudoinverse of a symmetric matrix.

    Eigenvalues with ``|lambda| <= rank_tol * max|lambda|`` are treated as
    exactly zero; ``rank_tol`` defaults to ``dim * 1e-12``.
    """
    ed = sym_eig(S)
    w, Q = ed.eigenvalues, ed.eigenvectors
    keep = np.abs(w) > _cutoff(w, rank_tol)
    inv_w = np.zeros_like(w)
    inv_w[keep] = 1.0 / w[keep]
    out = (Q * inv_w) @ Q.T
    return 0.5 * (out + out.T)


class Relation(str, enum.Enum):
    STRICTLY_LESS = "StrictlyLess"
    LESS_OR_EQUAL = "LessOrEqual"
    INCOMPARABLE = "Incomparable"
    EQUAL = "Equal"


@dataclass(frozen=True)
class LoewnerVerdict:
    """Where A sits relative to B in the Loewner order.

    ``INCOMPARABLE`` means "A ⪯ B fails"; the witness then satisfies
    ``w @ (B - A) @ w < 0``. For ``STRICTLY_LESS`` the witness is the
    direction of least separation.
    """

    relation: Relation
    min_eig_of_difference: float
    max_eig_of_difference: float
    tol: float
    witness_direction: Optional[np.ndarray] = None


def default_strict_tol(D: np.ndarray) -> float:
    return 1e-10 * (1.0 + float(np.linalg.norm(D, "fro")))


def loewner_compare(A, B, strict_tol: Optional[float] = None) -> LoewnerVerdict:
    A = as_sym(A)
    B = as_sym(B)
    if A.shape != B.shape:
        raise InvalidInput(f"dimension mismatch: {A.shape} vs {B.shape}")
    D = B - A
    tol = default_strict_tol(D) if strict_tol is None else float(strict_tol)
    ed = sym_eig(D)
    lo, hi = float(ed.eigenvalues[-1]), float(ed.eigenvalues[0])
    lowest = ed.eigenvectors[:, -1].copy()
    if max(abs(lo), abs(hi)) <= tol:
        return LoewnerVerdict(Relation.EQUAL, lo, hi, tol)
    if lo > tol:
        return LoewnerVerdict(Relation.STRICTLY_LESS, lo, hi, tol, lowest)
    if lo >= -tol:
        return LoewnerVerdict(Relation.LESS_OR_EQUAL, lo, hi, tol)
    return LoewnerVerdict(Relation.INCOMPARABLE, lo, hi, tol, lowest)


def range_contains(S, v, tol: float = 1e-9, rank_tol: Optional[float] = None) -> bool:
    """True iff ``||(I - P) v|| <= tol * ||v||`` with P the projector onto range(S)."""
    v = np.asarray(v, dtype=np.float64).ravel()
    nv = float(np.linalg.norm(v))
    if nv == 0.0 or not np.isfinite(nv):
        raise InvalidInput("range_contains needs a nonzero finite vector")
    S = as_sym(S)
    if S.shape[0] != v.size:
        raise InvalidInput(f"vector length {v.size} does not match matrix dim {S.shape[0]}")
    U = range_basis(S, rank_tol)
    residual = v - U @ (U.T @ v)
    return bool(np.linalg.norm(residual) <= tol * nv)


def is_psd(S, tol: Optional[float] = None) -> bool:
    S = as_sym(S)
    w = np.linalg.eigvalsh(S)
    if tol is None:
        tol = 1e-10 * (1.0 + float(np.max(np.abs(w))))
    return bool(w[0] >= -tol)


def random_spd(rng: np.random.Generator, dim: int, rank: Optional[int] = None,
               floor: float = 0.1) -> np.ndarray:
    """Random symmetric PSD matrix of given rank with nonzero eigenvalues >= floor."""
    rank = dim if rank is None else rank
    Q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    w = np.zeros(dim)
    w[:rank] = floor + rng.exponential(1.0, size=rank)
    M = (Q * w) @ Q.T
    return 0.5 * (M + M.T)
