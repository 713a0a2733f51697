"""Linear multimodal data-generating process.

Two modalities observe a latent ``theta = [theta_c, theta_x, theta_y]``::

    X_i = A_c,i theta_c + A_x,i theta_x + eps_x,   eps_x ~ N(0, sigma_x^2 I_m)
    Y_j = B_c,j theta_c + B_y,j theta_y + eps_y,   eps_y ~ N(0, sigma_y^2 I_n)

Design slots are reused round-robin when more samples than slots are drawn.
X and Y noise come from separate PCG64 sub-streams of the same seed, so
the two datasets carry no pairing.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidInput


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``(seed, key...)``; identical inputs give identical draws."""
    if seed < 0:
        raise InvalidInput("seeds must be non-negative integers")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))))


# sub-stream keys under a dataset seed
X_STREAM, Y_STREAM, THETA_STREAM, DESIGN_STREAM = 0, 1, 2, 3


@dataclass(frozen=True)
class LatentPartition:
    d_c: int
    d_x: int
    d_y: int

    def __post_init__(self):
        if min(self.d_c, self.d_x, self.d_y) < 0:
            raise InvalidInput("latent dims must be non-negative")
        if self.d < 1:
            raise InvalidInput("latent dimension must be positive")

    @property
    def d(self) -> int:
        return self.d_c + self.d_x + self.d_y

    @property
    def c(self) -> slice:
        return slice(0, self.d_c)

    @property
    def x(self) -> slice:
        return slice(self.d_c, self.d_c + self.d_x)

    @property
    def y(self) -> slice:
        return slice(self.d_c + self.d_x, self.d)


def _mat(a, rows: Optional[int] = None, cols: Optional[int] = None, name: str = "block") -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        if a.size == 0 and rows is not None and cols is not None:
            a = a.reshape(rows, cols)
        else:
            raise InvalidInput(f"{name} must be a 2-d matrix")
    if rows is not None and a.shape[0] != rows:
        raise InvalidInput(f"{name} has {a.shape[0]} rows, expected {rows}")
    if cols is not None and a.shape[1] != cols:
        raise InvalidInput(f"{name} has {a.shape[1]} columns, expected {cols}")
    if not np.all(np.isfinite(a)):
        raise InvalidInput(f"{name} has non-finite entries")
    return a


@dataclass
class LinearDgpSpec:
    partition: LatentPartition
    theta_true: np.ndarray
    x_designs: list  # [(A_c, A_x)]
    y_designs: list  # [(B_c, B_y)]
    sigma_x: float
    sigma_y: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        p = self.partition
        self.theta_true = np.asarray(self.theta_true, dtype=np.float64).ravel()
        if self.theta_true.size != p.d:
            raise InvalidInput(f"theta_true has length {self.theta_true.size}, expected {p.d}")
        if not (self.sigma_x >= 0 and self.sigma_y >= 0):
            raise InvalidInput("noise standard deviations must be non-negative")
        if not self.x_designs and not self.y_designs:
            raise InvalidInput("at least one modality needs design slots")
        self.x_designs = self._check_slots(self.x_designs, p.d_c, p.d_x, "X")
        self.y_designs = self._check_slots(self.y_designs, p.d_c, p.d_y, "Y")

    @staticmethod
    def _check_slots(slots, d_c, d_s, tag):
        out = []
        rows = None
        for k, (C, S) in enumerate(slots):
            C = np.asarray(C, dtype=np.float64)
            r = C.shape[0] if C.ndim == 2 else np.asarray(S).shape[0]
            rows = r if rows is None else rows
            if r != rows:
                raise InvalidInput(f"{tag} slot {k} has {r} rows, other slots have {rows}")
            out.append((_mat(C, rows, d_c, f"{tag}[{k}] shared block"),
                        _mat(S, rows, d_s, f"{tag}[{k}] specific block")))
        return out

    @property
    def m(self) -> int:
        return self.x_designs[0][0].shape[0] if self.x_designs else 0

    @property
    def n(self) -> int:
        return self.y_designs[0][0].shape[0] if self.y_designs else 0

    def designs(self, modality: str) -> list:
        return self.x_designs if modality == "X" else self.y_designs

    def sigma(self, modality: str) -> float:
        return self.sigma_x if modality == "X" else self.sigma_y

    def full_row(self, modality: str, slot: int) -> np.ndarray:
        """Design slot embedded in the full (c, x, y) column ordering."""
        p = self.partition
        C, S = self.designs(modality)[slot]
        out = np.zeros((C.shape[0], p.d))
        out[:, p.c] = C
        out[:, p.x if modality == "X" else p.y] = S
        return out

    def slot_means(self, modality: str, theta: Optional[np.ndarray] = None) -> np.ndarray:
        """Noise-free observation for each slot, shape (n_slots, rows)."""
        theta = self.theta_true if theta is None else theta
        slots = self.designs(modality)
        if not slots:
            return np.zeros((0, 0))
        return np.stack([self.full_row(modality, k) @ theta for k in range(len(slots))])

    def slot_counts(self, modality: str, n_samples: int) -> np.ndarray:
        k = len(self.designs(modality))
        if n_samples and not k:
            raise InvalidInput(f"spec has no {modality} design slots but {n_samples} samples were requested")
        if not k:
            return np.zeros(0, dtype=np.int64)
        idx = np.arange(n_samples) % k
        return np.bincount(idx, minlength=k)

    def to_dict(self) -> dict:
        p = self.partition
        return {
            "partition": {"d_c": p.d_c, "d_x": p.d_x, "d_y": p.d_y},
            "theta_true": self.theta_true.tolist(),
            "x_designs": [{"A_c": C.tolist(), "A_x": S.tolist()} for C, S in self.x_designs],
            "y_designs": [{"B_c": C.tolist(), "B_y": S.tolist()} for C, S in self.y_designs],
            "sigma_x": float(self.sigma_x),
            "sigma_y": float(self.sigma_y),
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "LinearDgpSpec":
        try:
            part = LatentPartition(**doc["partition"])
            xs = [(np.asarray(s["A_c"], float).reshape(len(s["A_c"]), part.d_c),
                   np.asarray(s["A_x"], float).reshape(len(s["A_x"]), part.d_x)) for s in doc.get("x_designs", [])]
            ys = [(np.asarray(s["B_c"], float).reshape(len(s["B_c"]), part.d_c),
                   np.asarray(s["B_y"], float).reshape(len(s["B_y"]), part.d_y)) for s in doc.get("y_designs", [])]
            return cls(part, np.asarray(doc["theta_true"], float), xs, ys,
                       float(doc["sigma_x"]), float(doc["sigma_y"]), dict(doc.get("meta", {})))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InvalidInput):
                raise
            raise InvalidInput(f"malformed spec document: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "LinearDgpSpec":
        return cls.from_dict(json.loads(text))

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class ModalityDataset:
    modality: str
    observations: np.ndarray  # (N, rows)
    design_index: np.ndarray  # (N,) slot of each observation

    def __len__(self):
        return self.observations.shape[0]


def draw_observations(spec: LinearDgpSpec, modality: str, n_samples: int,
                      rng: np.random.Generator, batch: Optional[int] = None) -> np.ndarray:
    """Noisy observations, shape (n_samples, rows) or (batch, n_samples, rows).

    Noise is drawn in one call, so the first k rows do not depend on n_samples.
    """
    spec.slot_counts(modality, n_samples)  # raises when the modality has no slots
    if n_samples == 0:
        rows = spec.m if modality == "X" else spec.n
        shape = (0, rows) if batch is None else (batch, 0, rows)
        return np.zeros(shape)
    means = spec.slot_means(modality)
    idx = np.arange(n_samples) % len(spec.designs(modality))
    mu = means[idx]
    shape = mu.shape if batch is None else (batch,) + mu.shape
    return mu + spec.sigma(modality) * rng.standard_normal(shape)


def sample_datasets(spec: LinearDgpSpec, n_x: int, n_y: int, seed: int):
    """Draw unpaired X and Y datasets; deterministic in ``seed``."""
    if n_x < 0 or n_y < 0:
        raise InvalidInput("sample counts must be non-negative")
    out = []
    for modality, n, key in (("X", n_x, X_STREAM), ("Y", n_y, Y_STREAM)):
        obs = draw_observations(spec, modality, n, stream(seed, key))
        k = max(len(spec.designs(modality)), 1)
        out.append(ModalityDataset(modality, obs, np.arange(n) % k))
    return out[0], out[1]


def _orthonormal_range(M: np.ndarray) -> np.ndarray:
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    if s.size == 0:
        return U
    keep = s > s[0] * max(M.shape) * 1e-12
    return U[:, keep]


def _random_block_pair(rng, rows, d_c, d_s, c_rank):
    """Shared block of rank ``c_rank`` plus a specific block orthogonal to it."""
    if c_rank >= d_c:
        C = rng.standard_normal((rows, d_c))
    else:
        C = rng.standard_normal((rows, c_rank)) @ rng.standard_normal((c_rank, d_c))
    S = rng.standard_normal((rows, d_s))
    if d_s and d_c:
        Q = _orthonormal_range(C)
        for _ in range(2):  # second pass removes round-off left by the first
            S = S - Q @ (Q.T @ S)
    return C, S


def make_orthogonal_spec(partition: LatentPartition, m: int, n: int, n_slots_x: int, n_slots_y: int,
                         sigmas=(1.0, 1.0), seed: int = 0,
                         c_rank_x: Optional[int] = None, c_rank_y: Optional[int] = None) -> LinearDgpSpec:
    """Random designs with ``A_c^T A_x = 0`` and ``B_c^T B_y = 0`` in every slot.

    ``c_rank_x`` / ``c_rank_y`` lower the rank of the shared blocks; by
    default they have full column rank.
    """
    p = partition
    if m < p.d_c + p.d_x or n < p.d_c + p.d_y:
        raise InvalidInput(f"need m >= d_c + d_x ({p.d_c + p.d_x}) and n >= d_c + d_y ({p.d_c + p.d_y})")
    if n_slots_x < 0 or n_slots_y < 0 or n_slots_x + n_slots_y == 0:
        raise InvalidInput("need at least one design slot")
    rx = p.d_c if c_rank_x is None else c_rank_x
    ry = p.d_c if c_rank_y is None else c_rank_y
    if not (0 <= rx <= p.d_c and 0 <= ry <= p.d_c):
        raise InvalidInput("shared-block ranks must lie in [0, d_c]")
    rng = stream(seed, DESIGN_STREAM)
    xs = [_random_block_pair(rng, m, p.d_c, p.d_x, rx) for _ in range(n_slots_x)]
    ys = [_random_block_pair(rng, n, p.d_c, p.d_y, ry) for _ in range(n_slots_y)]
    theta = stream(seed, THETA_STREAM).standard_normal(p.d)
    return LinearDgpSpec(p, theta, xs, ys, float(sigmas[0]), float(sigmas[1]),
                         meta={"generator": "orthogonal", "seed": seed, "c_rank_x": rx, "c_rank_y": ry})


def make_attenuated_gaussian_spec(seed: int, d_c: int = 10, d_x: int = 5, d_y: int = 5, obs_dim: int = 50,
                                  noise_var: float = 0.09, full_strength_fraction: float = 0.1,
                                  attenuation: float = 0.05, projection_std: Optional[float] = None):
    """Train/validation spec pair for the attenuated two-modality Gaussian experiment.

    X keeps the first ``ceil(full_strength_fraction * d_c)`` shared columns at
    full strength and scales the rest by ``attenuation``; Y sees every shared
    column. The validation spec reuses the projections without attenuation.
    Projection entries are i.i.d. normal with standard deviation
    ``projection_std`` (default ``1 / sqrt(d)``).
    """
    p = LatentPartition(d_c, d_x, d_y)
    rng = stream(seed, DESIGN_STREAM)
    scale = 1.0 / math.sqrt(p.d) if projection_std is None else float(projection_std)
    A_c = rng.standard_normal((obs_dim, d_c)) * scale
    A_x = rng.standard_normal((obs_dim, d_x)) * scale
    B_c = rng.standard_normal((obs_dim, d_c)) * scale
    B_y = rng.standard_normal((obs_dim, d_y)) * scale
    n_full = math.ceil(full_strength_fraction * d_c - 1e-12)
    factors = np.full(d_c, attenuation)
    factors[:n_full] = 1.0
    theta = stream(seed, THETA_STREAM).standard_normal(p.d)
    sigma = math.sqrt(noise_var)
    meta = {"generator": "attenuated_gaussian", "seed": seed, "projection_std": scale,
            "full_strength_columns": n_full, "attenuation": attenuation}
    train = LinearDgpSpec(p, theta, [(A_c * factors, A_x)], [(B_c, B_y)], sigma, sigma,
                          meta={**meta, "split": "train", "x_column_factors": factors.tolist()})
    val = LinearDgpSpec(p, theta, [(A_c.copy(), A_x.copy())], [(B_c.copy(), B_y.copy())], sigma, sigma,
                        meta={**meta, "split": "validation", "x_column_factors": [1.0] * d_c})
    return train, val


def sample_latent_observations(spec: LinearDgpSpec, modality: str, n_samples: int,
                               rng: np.random.Generator) -> np.ndarray:
    """Observations with a fresh standard-normal latent per sample (autoencoder data).

    Slot ``i % n_slots`` is used for sample ``i``. Returns (n_samples, rows).
    """
    slots = spec.designs(modality)
    if not slots:
        raise InvalidInput(f"spec has no {modality} design slots")
    rows = slots[0][0].shape[0]
    theta = rng.standard_normal((n_samples, spec.partition.d))
    noise = rng.standard_normal((n_samples, rows)) * spec.sigma(modality)
    out = np.empty((n_samples, rows))
    for k in range(len(slots)):
        sel = slice(k, None, len(slots))
        out[sel] = theta[sel] @ spec.full_row(modality, k).T
    return out + noise
