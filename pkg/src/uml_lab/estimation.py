"""Least-squares estimators, block Fisher information and Monte-Carlo covariance.

Fisher blocks are assembled per design slot, weighted by how many samples
used that slot. Two conventions coexist: the unscaled sums ``sum A^T A`` used
in the variance-reduction statements, and the noise-scaled form (``1/sigma^2``)
that matches the Gaussian likelihood and the empirical covariance.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import linalg
from .dgp import LatentPartition, LinearDgpSpec, ModalityDataset, X_STREAM, Y_STREAM, draw_observations, stream
from .errors import InvalidInput


class Mode(str, enum.Enum):
    X_ONLY = "XOnly"
    Y_ONLY = "YOnly"
    JOINT = "Joint"

    @property
    def uses_x(self) -> bool:
        return self is not Mode.Y_ONLY

    @property
    def uses_y(self) -> bool:
        return self is not Mode.X_ONLY


def _mode(mode) -> Mode:
    try:
        return Mode(mode)
    except ValueError as exc:
        raise InvalidInput(f"unknown mode {mode!r}") from exc


@dataclass(frozen=True)
class FisherBlocks:
    full: np.ndarray
    partition: LatentPartition
    noise_scaled: bool
    mode: Mode

    @property
    def cc(self) -> np.ndarray:
        p = self.partition
        return self.full[p.c, p.c]

    @property
    def xx(self) -> np.ndarray:
        p = self.partition
        return self.full[p.x, p.x]

    @property
    def yy(self) -> np.ndarray:
        p = self.partition
        return self.full[p.y, p.y]

    @property
    def cx(self) -> np.ndarray:
        p = self.partition
        return self.full[p.c, p.x]

    @property
    def cy(self) -> np.ndarray:
        p = self.partition
        return self.full[p.c, p.y]

    def __add__(self, other: "FisherBlocks") -> "FisherBlocks":
        if self.noise_scaled != other.noise_scaled or self.partition != other.partition:
            raise InvalidInput("cannot add Fisher blocks with different conventions")
        return FisherBlocks(self.full + other.full, self.partition, self.noise_scaled, Mode.JOINT)

    def to_dict(self) -> dict:
        return {"mode": self.mode.value, "noise_scaled": self.noise_scaled, "full": self.full.tolist()}


def _modality_fisher(spec: LinearDgpSpec, modality: str, counts: np.ndarray, noise_scaled: bool) -> np.ndarray:
    d = spec.partition.d
    out = np.zeros((d, d))
    for k, c in enumerate(counts):
        if c:
            R = spec.full_row(modality, k)
            out += c * (R.T @ R)
    if noise_scaled:
        s = spec.sigma(modality)
        if s <= 0:
            raise InvalidInput("noise-scaled information needs a positive noise level")
        out /= s * s
    return out


def fisher_from_counts(spec: LinearDgpSpec, counts_x, counts_y, noise_scaled: bool = False) -> FisherBlocks:
    """Information for explicit per-slot sample counts (empty counts skip a modality)."""
    counts_x = np.asarray(counts_x, dtype=np.int64)
    counts_y = np.asarray(counts_y, dtype=np.int64)
    has_x, has_y = counts_x.sum() > 0, counts_y.sum() > 0
    if not (has_x or has_y):
        raise InvalidInput("no samples in either modality")
    mode = Mode.JOINT if has_x and has_y else (Mode.X_ONLY if has_x else Mode.Y_ONLY)
    full = np.zeros((spec.partition.d,) * 2)
    if has_x:
        full = full + _modality_fisher(spec, "X", counts_x, noise_scaled)
    if has_y:
        full = full + _modality_fisher(spec, "Y", counts_y, noise_scaled)
    return FisherBlocks(full, spec.partition, noise_scaled, mode)


def fisher_info(spec: LinearDgpSpec, mode, n_x: int, n_y: int, noise_scaled: bool = False) -> FisherBlocks:
    """Block information of ``n_x`` X-samples and/or ``n_y`` Y-samples.

    Joint information is computed as the X part plus the Y part, so it equals
    ``fisher_info(XOnly) + fisher_info(YOnly)`` entrywise.
    """
    mode = _mode(mode)
    if n_x < 0 or n_y < 0:
        raise InvalidInput("sample counts must be non-negative")
    if mode.uses_x and n_x == 0:
        raise InvalidInput(f"{mode.value} needs at least one X sample")
    if mode.uses_y and n_y == 0:
        raise InvalidInput(f"{mode.value} needs at least one Y sample")
    d = spec.partition.d
    fx = _modality_fisher(spec, "X", spec.slot_counts("X", n_x), noise_scaled) if mode.uses_x else None
    fy = _modality_fisher(spec, "Y", spec.slot_counts("Y", n_y), noise_scaled) if mode.uses_y else None
    if mode is Mode.JOINT:
        full = fx + fy
    else:
        full = fx if fx is not None else fy
    assert full.shape == (d, d)
    return FisherBlocks(full, spec.partition, noise_scaled, mode)


def schur_profile(fisher: FisherBlocks) -> np.ndarray:
    """Information left on theta_c after profiling out the modality-specific blocks."""
    p = fisher.partition
    F = fisher.full
    nuis = np.r_[np.arange(p.d_c, p.d)]
    if nuis.size == 0:
        return F[p.c, p.c].copy()
    cn = F[p.c][:, nuis]
    nn = F[np.ix_(nuis, nuis)]
    S = F[p.c, p.c] - cn @ linalg.pinv(nn) @ cn.T
    return 0.5 * (S + S.T)


def crlb_common(fisher: FisherBlocks, profile: bool = False) -> np.ndarray:
    """Covariance bound on theta_c: ``pinv(I_cc)`` or ``pinv`` of the Schur complement.

    Directions outside the range of the information come back as zeros;
    use :func:`directional_variance` for the identifiability flag.
    """
    info = schur_profile(fisher) if profile else fisher.cc
    return linalg.pinv(info)


def common_information(fisher: FisherBlocks, profile: bool = False) -> np.ndarray:
    return schur_profile(fisher) if profile else fisher.cc.copy()


@dataclass(frozen=True)
class DirectionalVariance:
    value: float  # math.inf when not identifiable
    identifiable: bool


def directional_variance(fisher: FisherBlocks, v, profile: bool = False, tol: float = 1e-9) -> DirectionalVariance:
    """``v^T pinv(I) v`` on theta_c, or infinite when ``v`` leaves range(I)."""
    info = common_information(fisher, profile)
    v = np.asarray(v, dtype=np.float64)
    if not linalg.range_contains(info, v, tol=tol):
        return DirectionalVariance(math.inf, False)
    return DirectionalVariance(float(v @ linalg.pinv(info) @ v), True)


@dataclass(frozen=True)
class EstimatorResult:
    mode: Mode
    theta_hat: np.ndarray  # NaN on unidentified components
    cov_cc: np.ndarray
    identifiable_mask: np.ndarray
    fisher: FisherBlocks

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "theta_hat": [None if math.isnan(t) else float(t) for t in self.theta_hat],
            "cov_cc": self.cov_cc.tolist(),
            "identifiable_mask": [bool(b) for b in self.identifiable_mask],
            "fisher": self.fisher.to_dict(),
        }


def _weights(spec: LinearDgpSpec) -> tuple:
    # inverse-variance weighting is the Gaussian MLE; with a noiseless modality fall back to plain LS
    if spec.sigma_x > 0 and spec.sigma_y > 0:
        return 1.0 / spec.sigma_x ** 2, 1.0 / spec.sigma_y ** 2
    return 1.0, 1.0


class _NormalEquations:
    """Weighted normal equations for fixed per-slot counts."""

    def __init__(self, spec: LinearDgpSpec, counts_x, counts_y):
        self.spec = spec
        self.counts_x = np.asarray(counts_x, dtype=np.int64)
        self.counts_y = np.asarray(counts_y, dtype=np.int64)
        self.wx, self.wy = _weights(spec)
        d = spec.partition.d
        info = np.zeros((d, d))
        for modality, counts, w in (("X", self.counts_x, self.wx), ("Y", self.counts_y, self.wy)):
            for k, c in enumerate(counts):
                if c:
                    R = spec.full_row(modality, k)
                    info += (w * c) * (R.T @ R)
        self.info = 0.5 * (info + info.T)
        self.info_pinv = linalg.pinv(self.info)
        P = linalg.range_projector(self.info)
        self.identifiable = np.array([1.0 - P[k, k] <= 1e-12 for k in range(d)])  # ||(I-P)e_k||^2 = 1 - P_kk

    def rhs(self, modality: str, obs: np.ndarray) -> np.ndarray:
        """Sum of ``w * R_slot^T obs_i`` over samples; obs is (..., N, rows)."""
        spec = self.spec
        d = spec.partition.d
        n = obs.shape[-2]
        out = np.zeros(obs.shape[:-2] + (d,))
        if n == 0:
            return out
        slots = spec.designs(modality)
        w = self.wx if modality == "X" else self.wy
        for k in range(len(slots)):
            s = obs[..., k::len(slots), :].sum(axis=-2)
            out += w * (s @ spec.full_row(modality, k))
        return out

    def solve(self, b: np.ndarray) -> np.ndarray:
        return b @ self.info_pinv  # info_pinv is symmetric


def _counts_from(dataset: Optional[ModalityDataset], spec: LinearDgpSpec, modality: str) -> np.ndarray:
    k = len(spec.designs(modality))
    if dataset is None or len(dataset) == 0:
        return np.zeros(k, dtype=np.int64)
    rows = spec.m if modality == "X" else spec.n
    if dataset.modality != modality:
        raise InvalidInput(f"expected a {modality} dataset, got {dataset.modality}")
    if dataset.observations.ndim != 2 or dataset.observations.shape[1] != rows:
        raise InvalidInput(f"{modality} observations must have {rows} columns")
    idx = np.asarray(dataset.design_index)
    if np.any(idx != np.arange(len(dataset)) % k):
        raise InvalidInput("observations must follow the round-robin slot order")
    return np.bincount(idx, minlength=k)


def lsq_estimate(spec: LinearDgpSpec, mode, x: Optional[ModalityDataset] = None,
                 y: Optional[ModalityDataset] = None) -> EstimatorResult:
    """Least-squares estimate of theta from the datasets the mode allows.

    XOnly refuses a Y dataset (and YOnly an X dataset), so a unimodal
    estimate cannot read the other modality by accident.
    """
    mode = _mode(mode)
    if mode is Mode.X_ONLY and y is not None:
        raise InvalidInput("XOnly estimation does not accept a Y dataset")
    if mode is Mode.Y_ONLY and x is not None:
        raise InvalidInput("YOnly estimation does not accept an X dataset")
    if mode.uses_x and (x is None or len(x) == 0):
        raise InvalidInput(f"{mode.value} needs a non-empty X dataset")
    if mode.uses_y and (y is None or len(y) == 0):
        raise InvalidInput(f"{mode.value} needs a non-empty Y dataset")
    cx = _counts_from(x if mode.uses_x else None, spec, "X")
    cy = _counts_from(y if mode.uses_y else None, spec, "Y")
    ne = _NormalEquations(spec, cx, cy)
    b = np.zeros(spec.partition.d)
    if mode.uses_x:
        b += ne.rhs("X", x.observations)
    if mode.uses_y:
        b += ne.rhs("Y", y.observations)
    theta = ne.solve(b)
    theta[~ne.identifiable] = np.nan
    scaled = spec.sigma_x > 0 and spec.sigma_y > 0
    fisher = fisher_from_counts(spec, cx, cy, noise_scaled=scaled)
    return EstimatorResult(mode, theta, crlb_common(fisher, profile=True), ne.identifiable, fisher)


@dataclass(frozen=True)
class MonteCarloResult:
    cov: np.ndarray
    mean: np.ndarray
    trials: int


MC_CHUNK = 512


def monte_carlo_cov(spec: LinearDgpSpec, mode, n_x: int, n_y: int, trials: int, seed: int) -> MonteCarloResult:
    """Sample covariance and mean of the theta_c estimate over independent trials.

    Trials are processed in fixed chunks of ``MC_CHUNK``; chunk ``k`` draws
    from its own sub-stream, so the result does not depend on scheduling.
    """
    mode = _mode(mode)
    if trials < 2:
        raise InvalidInput("need at least two trials")
    nx = n_x if mode.uses_x else 0
    ny = n_y if mode.uses_y else 0
    if (mode.uses_x and nx == 0) or (mode.uses_y and ny == 0):
        raise InvalidInput(f"{mode.value} needs samples in every modality it uses")
    ne = _NormalEquations(spec, spec.slot_counts("X", nx), spec.slot_counts("Y", ny))
    c = spec.partition.c
    if not np.all(ne.identifiable[c]):
        raise InvalidInput("theta_c is not identifiable in this mode; covariance is unbounded")
    dc = spec.partition.d_c
    shift = None
    s1 = np.zeros(dc)
    s2 = np.zeros((dc, dc))
    done = 0
    chunk_id = 0
    while done < trials:
        b_size = min(MC_CHUNK, trials - done)
        b = np.zeros((b_size, spec.partition.d))
        if nx:
            b += ne.rhs("X", draw_observations(spec, "X", nx, stream(seed, 100 + chunk_id, X_STREAM), batch=b_size))
        if ny:
            b += ne.rhs("Y", draw_observations(spec, "Y", ny, stream(seed, 100 + chunk_id, Y_STREAM), batch=b_size))
        est = ne.solve(b)[:, c]
        if shift is None:
            shift = est[0].copy()
        D = est - shift  # shifted accumulation: identical estimates give exactly zero covariance
        s1 += D.sum(axis=0)
        s2 += D.T @ D
        done += b_size
        chunk_id += 1
    m = s1 / trials
    cov = (s2 - trials * np.outer(m, m)) / (trials - 1)
    cov = 0.5 * (cov + cov.T)
    return MonteCarloResult(cov, shift + m, trials)
