"""Post-hoc metrics on trained heads and embeddings.

Covers functional margins, silhouette and Davies-Bouldin cluster quality,
prototype alignment, 2-D decision-boundary projections, cross-modal neuron
correlations, and the exchange-rate plane fit over (primary shots, auxiliary
shots, accuracy) grids.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .errors import DegenerateGeometry, DegenerateHead, InvalidInput, RankDeficientFit

DB_SENTINEL = 1e9


@dataclass
class ClassifierHead:
    """Linear head: logits = W x + b with ``W`` of shape (classes, dim)."""

    W: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.W = np.atleast_2d(np.asarray(self.W, dtype=np.float64))
        self.b = np.asarray(self.b, dtype=np.float64).reshape(-1)
        if self.W.shape[0] < 2:
            raise InvalidInput("a classifier head needs at least 2 classes")
        if self.b.shape != (self.W.shape[0],):
            raise InvalidInput("need one bias per class")
        if not (np.all(np.isfinite(self.W)) and np.all(np.isfinite(self.b))):
            raise InvalidInput("head parameters must be finite")

    @classmethod
    def from_dense(cls, net) -> "ClassifierHead":
        """Take the last layer of a :class:`~uml_lab.neural.DenseNet` (stored as (in, out))."""
        layer = net.layers[-1]
        return cls(layer.W.T.copy(), layer.b.copy())

    @property
    def n_classes(self) -> int:
        return self.W.shape[0]

    def logits(self, x) -> np.ndarray:
        return np.asarray(x, dtype=np.float64) @ self.W.T + self.b


# --- margins ------------------------------------------------------------------

def functional_margin(head: ClassifierHead, x, y: int, bias: str = "auto") -> float:
    """Signed gap between class ``y`` and its strongest competitor, over ``||w_y - w_j*||``.

    The competitor ``j*`` is the arg-max logit among ``j != y`` (biases
    included). ``bias`` controls the numerator: ``"none"`` uses
    ``(w_y - w_j*)^T x`` only, ``"numerator"`` adds ``b_y - b_j*``, and
    ``"auto"`` picks ``"none"`` for a zero-bias head and ``"numerator"``
    otherwise. The denominator never includes biases.
    """
    if bias not in ("auto", "none", "numerator"):
        raise InvalidInput("bias must be 'auto', 'none' or 'numerator'")
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape != (head.W.shape[1],):
        raise InvalidInput("embedding dimension does not match the head")
    if not 0 <= y < head.n_classes:
        raise InvalidInput(f"class {y} outside [0, {head.n_classes})")
    logits = head.logits(x)
    others = np.delete(np.arange(head.n_classes), y)
    j = int(others[np.argmax(logits[others])])
    diff = head.W[y] - head.W[j]
    norm = float(np.linalg.norm(diff))
    if norm == 0.0:
        raise DegenerateHead(f"weight rows {y} and {j} coincide")
    use_bias = bias == "numerator" or (bias == "auto" and np.any(head.b != 0))
    gap = float(diff @ x) + (float(head.b[y] - head.b[j]) if use_bias else 0.0)
    return gap / norm


def functional_margins(head: ClassifierHead, X, labels, bias: str = "auto") -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    labels = np.asarray(labels)
    return np.array([functional_margin(head, x, int(y), bias) for x, y in zip(X, labels)])


# --- cluster quality -------------------------------------------------------------

def _clusters(embeddings, labels):
    E = np.atleast_2d(np.asarray(embeddings, dtype=np.float64))
    labels = np.asarray(labels)
    if labels.shape != (E.shape[0],):
        raise InvalidInput("need one label per embedding row")
    classes = np.unique(labels)
    if classes.size < 2:
        raise InvalidInput("cluster metrics need at least 2 classes")
    return E, labels, classes


def silhouette_samples(embeddings, labels) -> np.ndarray:
    """Per-sample Euclidean silhouette; members of singleton clusters score 0."""
    E, labels, classes = _clusters(embeddings, labels)
    sq = np.sum(E * E, axis=1)
    D = np.sqrt(np.maximum(sq[:, None] + sq[None, :] - 2.0 * E @ E.T, 0.0))
    np.fill_diagonal(D, 0.0)
    masks = [labels == c for c in classes]
    out = np.zeros(E.shape[0])
    for i in range(E.shape[0]):
        own = labels[i]
        n_own = 0
        b = math.inf
        a = 0.0
        for c, m in zip(classes, masks):
            if c == own:
                n_own = int(m.sum())
                if n_own > 1:
                    a = D[i, m].sum() / (n_own - 1)
            else:
                b = min(b, float(D[i, m].mean()))
        if n_own <= 1:
            continue
        denom = max(a, b)
        out[i] = 0.0 if denom == 0.0 else (b - a) / denom
    return out


def silhouette(embeddings, labels) -> float:
    """Mean silhouette score in [-1, 1]."""
    return float(silhouette_samples(embeddings, labels).mean())


@dataclass
class DaviesBouldin:
    value: float
    degenerate: bool


def davies_bouldin(embeddings, labels) -> DaviesBouldin:
    """Davies-Bouldin index; coincident centroids give the sentinel value with ``degenerate`` set."""
    E, labels, classes = _clusters(embeddings, labels)
    cents = np.stack([E[labels == c].mean(axis=0) for c in classes])
    scatter = np.array([np.linalg.norm(E[labels == c] - cents[k], axis=1).mean() for k, c in enumerate(classes)])
    sep = np.linalg.norm(cents[:, None, :] - cents[None, :, :], axis=2)
    k = len(classes)
    off = ~np.eye(k, dtype=bool)
    if np.any(sep[off] == 0.0):
        return DaviesBouldin(DB_SENTINEL, True)
    ratio = np.where(off, (scatter[:, None] + scatter[None, :]) / np.where(off, sep, 1.0), -np.inf)
    return DaviesBouldin(float(ratio.max(axis=1).mean()), False)


# --- prototypes and boundaries ----------------------------------------------------

@dataclass
class PrototypeAlignment:
    matrix: np.ndarray
    dominance: float


def prototype_alignment(head_weights, class_mean_aux) -> PrototypeAlignment:
    """Inner products ``<w_k, mean_aux_l>`` and the share of rows whose diagonal is the row max.

    ``head_weights`` is a :class:`ClassifierHead` or a raw (classes, dim)
    matrix; the raw form allows the one-class case.
    """
    W = head_weights.W if isinstance(head_weights, ClassifierHead) else np.atleast_2d(
        np.asarray(head_weights, dtype=np.float64))
    M = np.atleast_2d(np.asarray(class_mean_aux, dtype=np.float64))
    if W.shape != M.shape:
        raise InvalidInput("need one auxiliary mean per head row, in the same dimension")
    G = W @ M.T
    diag = np.diag(G)
    dominance = float(np.mean(diag >= G.max(axis=1)))
    return PrototypeAlignment(G, dominance)


@dataclass
class BoundaryProjection:
    coords: np.ndarray
    axis1: np.ndarray
    axis2: np.ndarray


def boundary_projection(head: ClassifierHead, embeddings, labels, pair) -> BoundaryProjection:
    """2-D view spanned by the weight difference of ``pair`` and the orthogonalized class-mean gap."""
    y1, y2 = (int(v) for v in pair)
    E = np.atleast_2d(np.asarray(embeddings, dtype=np.float64))
    labels = np.asarray(labels)
    if labels.shape != (E.shape[0],):
        raise InvalidInput("need one label per embedding row")
    if y1 == y2 or not (0 <= y1 < head.n_classes and 0 <= y2 < head.n_classes):
        raise InvalidInput("pair must name two distinct classes of the head")
    m1, m2 = labels == y1, labels == y2
    if not (m1.any() and m2.any()):
        raise InvalidInput("both classes of the pair need embeddings")
    a1 = head.W[y1] - head.W[y2]
    n1 = np.linalg.norm(a1)
    if n1 == 0.0:
        raise DegenerateHead(f"weight rows {y1} and {y2} coincide")
    a1 = a1 / n1
    gap = E[m1].mean(axis=0) - E[m2].mean(axis=0)
    a2 = gap - (gap @ a1) * a1
    a2 = a2 - (a2 @ a1) * a1
    n2 = np.linalg.norm(a2)
    if n2 < 1e-10:
        raise DegenerateGeometry("class-mean gap is parallel to the weight difference")
    a2 = a2 / n2
    return BoundaryProjection(E @ np.stack([a1, a2], axis=1), a1, a2)


# --- multimodal neurons -------------------------------------------------------------

@dataclass
class NeuronCorrelation:
    neuron: int
    r: float
    r_by_label: dict
    counts: dict
    undefined: bool = False
    undefined_labels: list = field(default_factory=list)


def _pearson(a: np.ndarray, b: np.ndarray):
    """Pearson r, or ``(0.0, True)`` when either side has no variance or fewer than 2 samples."""
    if a.size < 2:
        return 0.0, True
    da = a - a.mean()
    db = b - b.mean()
    sa = float(np.sqrt(da @ da))
    sb = float(np.sqrt(db @ db))
    scale_a = 1e-12 * max(1.0, float(np.abs(a).max())) * math.sqrt(a.size)
    scale_b = 1e-12 * max(1.0, float(np.abs(b).max())) * math.sqrt(b.size)
    if sa <= scale_a or sb <= scale_b:
        return 0.0, True
    return float(np.clip((da @ db) / (sa * sb), -1.0, 1.0)), False


def neuron_correlations(acts_v, acts_t, labels) -> list:
    """Per-neuron Pearson correlation between two modalities' activations, overall and per label.

    Rows of the two matrices are index-matched evaluation pairs supplied by
    the caller. Undefined correlations are stored as 0 and flagged.
    """
    V = np.atleast_2d(np.asarray(acts_v, dtype=np.float64))
    T = np.atleast_2d(np.asarray(acts_t, dtype=np.float64))
    labels = np.asarray(labels)
    if V.shape != T.shape:
        raise InvalidInput("activation matrices must share (samples, neurons) shape")
    if labels.shape != (V.shape[0],):
        raise InvalidInput("need one label per sample")
    classes = np.unique(labels)
    masks = {c.item(): labels == c for c in classes}
    out = []
    for j in range(V.shape[1]):
        r, bad = _pearson(V[:, j], T[:, j])
        per, counts, bad_labels = {}, {}, []
        for c, m in masks.items():
            rc, bc = _pearson(V[m, j], T[m, j])
            per[c], counts[c] = rc, int(m.sum())
            if bc:
                bad_labels.append(c)
        out.append(NeuronCorrelation(j, r, per, counts, bad, bad_labels))
    return out


# --- exchange-rate plane -------------------------------------------------------------

def shot_transform(n):
    """Shot-count axis used by the plane fit: log2(1 + n)."""
    return np.log2(1.0 + np.asarray(n, dtype=np.float64))


@dataclass
class MrsFit:
    alpha_img: float
    alpha_txt: float
    intercept: float
    residual_rms: float
    texts_per_image: float
    images_per_text: float
    words_per_image: Optional[float]
    significance_floor: float
    flags: list
    shot_transform: str = "log2(1+n)"
    n_points: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("texts_per_image", "images_per_text", "words_per_image"):
            if isinstance(d[k], float) and not math.isfinite(d[k]):
                d[k] = None
        return d


def mrs_plane_fit(points, mean_words_per_text: Optional[float] = None, floor: float = 1e-10) -> MrsFit:
    """Least-squares plane ``acc = a_img g(n_img) + a_txt g(n_txt) + c`` and the implied exchange rates.

    A coefficient counts as zero when its magnitude is at most
    ``floor + 3 * standard error``; a zero ``a_txt`` makes texts-per-image
    unbounded, a zero ``a_img`` leaves both rates undefined. Both cases are
    flagged and reported as infinity / NaN.
    """
    P = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if P.ndim != 2 or P.shape[1] != 3:
        raise InvalidInput("points must be rows of (n_img_shots, n_txt_shots, accuracy)")
    if np.any(P[:, :2] < 0) or not np.all(np.isfinite(P)):
        raise InvalidInput("shot counts must be non-negative and all values finite")
    if P.shape[0] < 3:
        raise RankDeficientFit("need at least 3 points")
    X = np.column_stack([shot_transform(P[:, 0]), shot_transform(P[:, 1]), np.ones(P.shape[0])])
    if np.linalg.matrix_rank(X) < 3:
        raise RankDeficientFit("shot design is collinear; vary both shot axes")
    coef, *_ = np.linalg.lstsq(X, P[:, 2], rcond=None)
    resid = P[:, 2] - X @ coef
    rms = float(np.sqrt(np.mean(resid ** 2)))
    dof = P.shape[0] - 3
    if dof > 0:
        s2 = float(resid @ resid) / dof
        se = np.sqrt(s2 * np.diag(np.linalg.inv(X.T @ X)))
    else:
        se = np.zeros(3)
    a_img, a_txt, c = (float(v) for v in coef)
    flags = []
    img_ok = abs(a_img) > floor + 3 * se[0]
    txt_ok = abs(a_txt) > floor + 3 * se[1]
    if not img_ok:
        flags.append("alpha_img_below_floor")
        tpi, ipt = math.nan, math.nan
    elif not txt_ok:
        flags.append("texts_per_image_unbounded")
        tpi, ipt = math.inf, 0.0
    else:
        tpi, ipt = a_img / a_txt, a_txt / a_img
    wpi = None
    if mean_words_per_text is not None:
        if mean_words_per_text <= 0:
            raise InvalidInput("mean words per text must be positive")
        wpi = tpi * mean_words_per_text
    return MrsFit(a_img, a_txt, c, rms, tpi, ipt, wpi, float(floor), flags, n_points=int(P.shape[0]))
