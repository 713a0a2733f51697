"""Shared-weight training across unpaired modalities.

Each modality has its own adapter (``f_X``, ``f_Y``); all of them feed one
shared trunk ``h``. Heads are either per-modality decoders (self-supervised
and autoencoder runs) or one classifier shared by every modality.

Every run draws from separate sub-streams of its seed: parameter init per
group, X batch order, auxiliary batch order, and the auxiliary schedule.
Dropping the auxiliary modality therefore leaves the X-side trajectory
untouched.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .dgp import make_attenuated_gaussian_spec, sample_latent_observations, stream
from .errors import InvalidInput
from .neural import AdamState, DenseNet, adam_step, backward, cross_entropy_loss, forward, mse_loss

HEAD_INITS = ("Zero", "Random", "ClassMeanAuxiliary")

# sub-stream keys under a training seed
_INIT, _X_ORDER, _Y_ORDER, _SCHEDULE = 20, 30, 31, 32


@dataclass
class SharedNetSpec:
    """Adapters per modality, one shared trunk, and either decoders or a shared classifier.

    ``window > 1`` turns the trunk into a causal window over sequences: at
    position t it sees the adapter outputs of positions t-window+1..t
    (zero-padded at the start), flattened.
    """

    adapters: dict
    trunk: DenseNet
    decoders: dict = field(default_factory=dict)
    classifier: Optional[DenseNet] = None
    window: int = 1

    def __post_init__(self):
        if (self.classifier is None) == (not self.decoders):
            raise InvalidInput("give either per-modality decoders or one shared classifier")
        for name, a in self.adapters.items():
            if a.out_dim * self.window != self.trunk.in_dim:
                raise InvalidInput(f"adapter {name} output does not match trunk input")
        heads = [self.classifier] if self.classifier is not None else list(self.decoders.values())
        for h in heads:
            if h.in_dim != self.trunk.out_dim:
                raise InvalidInput("head input does not match trunk output")
        if self.decoders and set(self.decoders) != set(self.adapters):
            raise InvalidInput("every modality needs exactly one decoder")

    @property
    def embedding_dim(self) -> int:
        return self.trunk.out_dim

    def head(self, modality: str) -> DenseNet:
        return self.classifier if self.classifier is not None else self.decoders[modality]

    def head_group(self, modality: str) -> str:
        return "classifier" if self.classifier is not None else f"decoder_{modality}"

    def groups(self) -> dict:
        g = {f"adapter_{k}": v for k, v in self.adapters.items()}
        g["trunk"] = self.trunk
        if self.classifier is not None:
            g["classifier"] = self.classifier
        else:
            g.update({f"decoder_{k}": v for k, v in self.decoders.items()})
        return g

    def copy(self) -> "SharedNetSpec":
        return SharedNetSpec({k: v.copy() for k, v in self.adapters.items()}, self.trunk.copy(),
                             {k: v.copy() for k, v in self.decoders.items()},
                             None if self.classifier is None else self.classifier.copy(), self.window)

    # -- forward / backward -------------------------------------------------

    def _windows(self, z):
        n, t, hdim = z.shape
        w = self.window
        zp = np.concatenate([np.zeros((n, w - 1, hdim)), z], axis=1)
        idx = np.arange(t)[:, None] + np.arange(w)[None, :]
        return zp[:, idx, :].reshape(n * t, w * hdim)

    def _unwindow(self, g, n, t, hdim):
        w = self.window
        g = g.reshape(n, t, w, hdim)
        gp = np.zeros((n, t + w - 1, hdim))
        for j in range(w):
            gp[:, j:j + t] += g[:, :, j]
        return gp[:, w - 1:]

    def forward(self, modality: str, x):
        """Head output and the caches needed by :meth:`backward`."""
        x = np.asarray(x, dtype=np.float64)
        adapter = self.adapters[modality]
        if self.window > 1 or x.ndim == 3:
            if x.ndim != 3:
                raise InvalidInput("windowed trunks take (batch, time, features) inputs")
            n, t, _ = x.shape
            z, ca = forward(adapter, x.reshape(n * t, -1))
            z = z.reshape(n, t, -1)
            trunk_in = self._windows(z) if self.window > 1 else z.reshape(n * t, -1)
            r, ct = forward(self.trunk, trunk_in)
            out, ch = forward(self.head(modality), r)
            return out.reshape(n, t, -1), (ca, ct, ch, (n, t, z.shape[-1]), r)
        z, ca = forward(adapter, x)
        r, ct = forward(self.trunk, z)
        out, ch = forward(self.head(modality), r)
        return out, (ca, ct, ch, None, r)

    def backward(self, modality: str, caches, grad_out) -> dict:
        ca, ct, ch, seq, _ = caches
        if seq is not None:
            grad_out = grad_out.reshape(seq[0] * seq[1], -1)
        g_head, g = backward(self.head(modality), ch, grad_out)
        g_trunk, g = backward(self.trunk, ct, g)
        if seq is not None:
            n, t, hdim = seq
            g = self._unwindow(g, n, t, hdim) if self.window > 1 else g.reshape(n, t, hdim)
            g = g.reshape(n * t, hdim)
        g_adapter, _ = backward(self.adapters[modality], ca, g)
        return {f"adapter_{modality}": g_adapter, "trunk": g_trunk, self.head_group(modality): g_head}

    def representation(self, modality: str, x) -> np.ndarray:
        """Trunk output; for sequences, averaged over positions."""
        _, caches = self.forward(modality, x)
        r = caches[4]
        if caches[3] is not None:
            n, t, _ = caches[3]
            return r.reshape(n, t, -1).mean(axis=1)
        return r

    def digest(self) -> str:
        h = hashlib.sha256()
        for name, net in sorted(self.groups().items()):
            h.update(name.encode())
            for p in net.params():
                h.update(np.ascontiguousarray(p).tobytes())
        return h.hexdigest()[:16]


@dataclass
class TrainConfig:
    lam: float = 1.0
    batch_ratio: float = 1.0
    epochs: int = 200
    batch_size: int = 128
    seed: int = 0
    curriculum_step: int = 0
    head_init: str = "Random"
    lr: float = 1e-3
    freeze_adapter_y: bool = False
    train_adapter_x: bool = True

    def __post_init__(self):
        if self.lam < 0:
            raise InvalidInput("lambda must be non-negative")
        if self.batch_ratio <= 0:
            raise InvalidInput("batch ratio must be positive")
        if self.epochs < 0 or self.batch_size < 1:
            raise InvalidInput("epochs must be >= 0 and batch size >= 1")
        if not 0 <= self.curriculum_step <= self.epochs:
            raise InvalidInput("curriculum_step must lie in [0, epochs]")
        if self.head_init not in HEAD_INITS:
            raise InvalidInput(f"head_init must be one of {HEAD_INITS}")


@dataclass
class TrainReport:
    epoch_losses: dict  # modality -> per-epoch mean loss
    metrics: dict
    config: dict
    parameter_digest: str
    schedule: list = field(default_factory=list)  # auxiliary batches taken after each primary batch

    def to_dict(self) -> dict:
        return asdict(self)


def _frozen_groups(cfg: TrainConfig) -> set:
    out = set()
    if cfg.freeze_adapter_y:
        out.add("adapter_Y")
    if not cfg.train_adapter_x:
        out.add("adapter_X")
    return out


class _Optimizers:
    def __init__(self, model: SharedNetSpec, lr: float, frozen: set):
        self.model = model
        self.frozen = frozen
        self.states = {k: AdamState.for_params(v.params(), lr=lr) for k, v in model.groups().items()}

    def step(self, grads: dict):
        groups = self.model.groups()
        for name in sorted(grads):
            if name in self.frozen:
                continue
            adam_step(groups[name].params(), grads[name], self.states[name])


def _accumulate(total: dict, grads: dict, scale: float = 1.0):
    for k, gl in grads.items():
        if k in total:
            for a, b in zip(total[k], gl):
                a += scale * b
        else:
            total[k] = [scale * g for g in gl]


class _Cycler:
    """Endless shuffled mini-batches over ``n`` items."""

    def __init__(self, n: int, batch: int, rng: np.random.Generator):
        self.n, self.batch, self.rng = n, batch, rng
        self.order = rng.permutation(n)
        self.pos = 0

    def next(self) -> np.ndarray:
        if self.pos >= self.n:
            self.order = self.rng.permutation(self.n)
            self.pos = 0
        idx = self.order[self.pos:self.pos + self.batch]
        self.pos += self.batch
        return idx


def _aux_count(cfg: TrainConfig, rng: np.random.Generator) -> int:
    whole = math.floor(cfg.batch_ratio)
    frac = cfg.batch_ratio - whole
    return whole + int(frac > 0 and rng.random() < frac)


def _train_loop(model: SharedNetSpec, cfg: TrainConfig, primary, auxiliary, loss_fn, frozen: set):
    """Alternate one primary batch with its auxiliary batches; one update per primary batch.

    ``primary``/``auxiliary`` are ``(modality, inputs, targets)``; ``auxiliary``
    may be None. With ``lam == 0`` auxiliary batches are skipped entirely.
    """
    opt = _Optimizers(model, cfg.lr, frozen)
    mod_p, xp, tp = primary
    use_aux = auxiliary is not None and cfg.lam > 0
    rng_x = stream(cfg.seed, _X_ORDER)
    rng_s = stream(cfg.seed, _SCHEDULE)
    cyc = _Cycler(len(auxiliary[1]), cfg.batch_size, stream(cfg.seed, _Y_ORDER)) if use_aux else None
    losses = {mod_p: []}
    if use_aux:
        losses[auxiliary[0]] = []
    schedule = []
    n = len(xp)
    for epoch in range(cfg.epochs):
        perm = rng_x.permutation(n)
        sums = {k: [0.0, 0] for k in losses}
        for start in range(0, n, cfg.batch_size):
            idx = perm[start:start + cfg.batch_size]
            out, caches = model.forward(mod_p, xp[idx])
            lp, g = loss_fn(out, tp[idx])
            grads = {}
            _accumulate(grads, model.backward(mod_p, caches, g))
            sums[mod_p][0] += lp
            sums[mod_p][1] += 1
            k = _aux_count(cfg, rng_s) if use_aux and epoch >= cfg.curriculum_step else 0
            if use_aux:
                schedule.append(k)
            for _ in range(k):
                mod_a, xa, ta = auxiliary
                jdx = cyc.next()
                out, caches = model.forward(mod_a, xa[jdx])
                la, g = loss_fn(out, ta[jdx])
                _accumulate(grads, model.backward(mod_a, caches, g), cfg.lam)
                sums[mod_a][0] += la
                sums[mod_a][1] += 1
            opt.step(grads)
        for k, (s, c) in sums.items():
            losses[k].append(s / c if c else float("nan"))
    return losses, schedule


# --- supervised -------------------------------------------------------------

def build_classifier_net(dim_x: int, dim_y: Optional[int], hidden: int, n_classes: int, seed: int,
                         trunk_layers: int = 1, trunk_activation: str = "identity") -> SharedNetSpec:
    """Linear adapters into ``hidden``, a shared trunk, and one shared linear classifier.

    Each parameter group draws its init from its own sub-stream, so building
    with or without the Y adapter leaves the rest identical.
    """
    adapters = {"X": DenseNet.init([dim_x, hidden], ["identity"], stream(seed, _INIT, 0))}
    if dim_y is not None:
        adapters["Y"] = DenseNet.init([dim_y, hidden], ["identity"], stream(seed, _INIT, 1))
    trunk = DenseNet.init([hidden] * (trunk_layers + 1), [trunk_activation] * trunk_layers,
                          stream(seed, _INIT, 2))
    clf = DenseNet.init([hidden, n_classes], ["identity"], stream(seed, _INIT, 3))
    return SharedNetSpec(adapters, trunk, classifier=clf)


def init_head_from_class_means(aux_embeddings, labels, n_classes: Optional[int] = None):
    """Classifier weights whose row k is the mean auxiliary embedding of class k; zero bias.

    Returns ``(W, b)`` with ``W`` of shape (classes, dim).
    """
    E = np.asarray(aux_embeddings, dtype=np.float64)
    labels = np.asarray(labels)
    if E.ndim != 2 or labels.shape != (E.shape[0],):
        raise InvalidInput("need an (n, dim) embedding matrix and one label per row")
    k = int(labels.max()) + 1 if n_classes is None else n_classes
    W = np.zeros((k, E.shape[1]))
    for c in range(k):
        rows = E[labels == c]
        if rows.shape[0] == 0:
            raise InvalidInput(f"class {c} has no auxiliary samples")
        W[c] = rows.mean(axis=0)
    return W, np.zeros(k)


def _labels(a, name):
    a = np.asarray(a)
    if a.ndim != 1 or not np.issubdtype(a.dtype, np.integer):
        raise InvalidInput(f"{name} must be a 1-d integer label vector")
    return a


def train_supervised(model: SharedNetSpec, data_x, data_y, cfg: TrainConfig, test_x=None,
                     n_classes: Optional[int] = None) -> TrainReport:
    """Alternating-modality training of a shared classifier (the unimodal run when ``data_y`` is None).

    ``data_x``/``data_y``/``test_x`` are ``(embeddings, labels)`` pairs. No
    pairing between X and Y rows is assumed or used. ``model`` is trained in place.
    """
    if model.classifier is None:
        raise InvalidInput("supervised training needs a shared classifier")
    xs, ys = np.asarray(data_x[0], float), _labels(data_x[1], "X labels")
    k = model.classifier.out_dim if n_classes is None else n_classes
    if ys.max() >= k:
        raise InvalidInput("X labels exceed the classifier's class count")
    aux = None
    if data_y is not None:
        xa, ya = np.asarray(data_y[0], float), _labels(data_y[1], "Y labels")
        if set(np.unique(ya)) != set(np.unique(ys)) or ya.max() >= k:
            raise InvalidInput("X and Y label spaces differ")
        if "Y" not in model.adapters:
            raise InvalidInput("model has no Y adapter")
        aux = ("Y", xa, ya)
    if cfg.head_init == "Zero":
        for p in model.classifier.params():
            p[...] = 0.0
    elif cfg.head_init == "ClassMeanAuxiliary":
        if aux is None:
            raise InvalidInput("ClassMeanAuxiliary head init needs auxiliary data")
        W, b = init_head_from_class_means(model.representation("Y", aux[1]), aux[2], k)
        layer = model.classifier.layers[-1]
        if len(model.classifier.layers) != 1:
            raise InvalidInput("class-mean init needs a single-layer classifier")
        layer.W[...] = W.T
        layer.b[...] = b
    losses, schedule = _train_loop(model, cfg, ("X", xs, ys), aux, cross_entropy_loss, _frozen_groups(cfg))
    metrics = {"train_accuracy_x": accuracy(model, "X", xs, ys)}
    if test_x is not None:
        metrics["test_accuracy_x"] = accuracy(model, "X", np.asarray(test_x[0], float), np.asarray(test_x[1]))
    return TrainReport(losses, metrics, asdict(cfg), model.digest(), schedule)


def accuracy(model: SharedNetSpec, modality: str, x, labels) -> float:
    out, _ = model.forward(modality, x)
    return float(np.mean(out.argmax(axis=1) == np.asarray(labels)))


AUX_KINDS = ("related", "shuffled", "permuted")

# Network width and optimizer settings validated on the default classification task.
SUPERVISED_HIDDEN = 8
SUPERVISED_TRAIN = dict(epochs=800, batch_size=8, lr=0.01)


@dataclass
class ClassificationTask:
    train_x: tuple
    train_y: tuple
    test_x: tuple
    n_classes: int
    meta: dict


def make_classification_task(seed: int, n_classes: int = 20, latent_dim: int = 4, dim_x: int = 4,
                             dim_y: int = 4, shots_x: int = 2, n_y_per_class: int = 20,
                             n_test_per_class: int = 1000, class_sep: float = 2.0, within_std: float = 1.0,
                             noise_x: float = 0.3, noise_y: float = 0.3, aux: str = "related") -> ClassificationTask:
    """Few-shot X / abundant Y classification over shared latent class means.

    A sample of class k has latent ``class_sep * mu_k + within_std * s`` with
    ``s ~ N(0, I)``; X and Y observe it through their own random linear maps
    plus isotropic noise. ``aux="shuffled"`` permutes the Y labels across
    samples, leaving auxiliary features unrelated to their labels.
    """
    if aux not in AUX_KINDS:
        raise InvalidInput(f"aux must be one of {AUX_KINDS}")
    rng = stream(seed, 60)
    mu = rng.standard_normal((n_classes, latent_dim))
    Px = rng.standard_normal((latent_dim, dim_x)) / math.sqrt(latent_dim)
    Py = rng.standard_normal((latent_dim, dim_y)) / math.sqrt(latent_dim)

    def draw(P, noise, per_class, r):
        labels = np.repeat(np.arange(n_classes), per_class)
        z = class_sep * mu[labels] + within_std * r.standard_normal((labels.size, latent_dim))
        return z @ P + noise * r.standard_normal((labels.size, P.shape[1])), labels

    train_x = draw(Px, noise_x, shots_x, stream(seed, 61))
    test_x = draw(Px, noise_x, n_test_per_class, stream(seed, 62))
    ey, ly = draw(Py, noise_y, n_y_per_class, stream(seed, 63))
    if aux == "shuffled":
        ly = stream(seed, 64).permutation(ly)
    elif aux == "permuted":
        ly = stream(seed, 64).permutation(n_classes)[ly]
    meta = dict(seed=seed, n_classes=n_classes, latent_dim=latent_dim, dim_x=dim_x, dim_y=dim_y,
                shots_x=shots_x, n_y_per_class=n_y_per_class, class_sep=class_sep, within_std=within_std,
                noise_x=noise_x, noise_y=noise_y, aux=aux)
    return ClassificationTask(train_x, (ey, ly), test_x, n_classes, meta)


# --- self-supervised ---------------------------------------------------------

# Width and optimizer settings validated on the default sequence task.
SSL_HIDDEN = 8
SSL_TRAIN = dict(epochs=300, batch_size=8, lr=0.01)

def build_ssl_net(dims: dict, hidden: int, window: int, seed: int) -> SharedNetSpec:
    """Per-modality linear adapters and decoders around a causal-window ReLU trunk."""
    adapters, decoders = {}, {}
    for i, (mod, d) in enumerate(sorted(dims.items())):
        adapters[mod] = DenseNet.init([d, hidden], ["identity"], stream(seed, _INIT, 10 + i))
        decoders[mod] = DenseNet.init([hidden, d], ["identity"], stream(seed, _INIT, 20 + i))
    trunk = DenseNet.init([window * hidden, hidden, hidden], ["relu", "identity"], stream(seed, _INIT, 2))
    return SharedNetSpec(adapters, trunk, decoders=decoders, window=window)


def next_step_mse(pred, seq):
    """MSE between predictions at positions :-1 and inputs at 1:, gradient padded to pred's shape."""
    loss, g = mse_loss(pred[:, :-1], seq[:, 1:])
    grad = np.zeros_like(pred)
    grad[:, :-1] = g
    return loss, grad


def train_ssl_shared_trunk(model: SharedNetSpec, sequences_x, sequences_y, cfg: TrainConfig) -> TrainReport:
    """Next-embedding prediction through the shared trunk (unimodal when ``sequences_y`` is None)."""
    sx = np.asarray(sequences_x, dtype=np.float64)
    if sx.ndim != 3 or sx.shape[1] < 2:
        raise InvalidInput("sequences must be (n, length >= 2, dim)")
    aux = None
    if sequences_y is not None:
        sy = np.asarray(sequences_y, dtype=np.float64)
        if sy.ndim != 3 or sy.shape[1] < 2:
            raise InvalidInput("sequences must be (n, length >= 2, dim)")
        aux = ("Y", sy, sy)
    losses, schedule = _train_loop(model, cfg, ("X", sx, sx), aux, next_step_mse, _frozen_groups(cfg))
    pred, _ = model.forward("X", sx)
    metrics = {"final_next_step_mse_x": next_step_mse(pred, sx)[0]}
    return TrainReport(losses, metrics, asdict(cfg), model.digest(), schedule)


def make_sequence_task(seed: int, n_classes: int = 8, latent_dim: int = 4, dim_x: int = 32, dim_y: int = 32,
                       length: int = 8, n_x: int = 32, n_y: int = 400, n_test: int = 400,
                       noise: float = 1.0, rotation: float = 0.4, class_sep: float = 1.0,
                       within_std: float = 0.5):
    """Sequences driven by a shared latent linear dynamical system.

    Each sequence starts at a class-dependent latent point and evolves by a
    fixed rotation-contraction; X and Y see the latent through their own
    random maps. Returns dict with train/test X (sequences, labels) and Y.
    """
    rng = stream(seed, 70)
    A = np.linalg.qr(rng.standard_normal((latent_dim, latent_dim)))[0]
    A = 0.95 * (np.cos(rotation) * np.eye(latent_dim) + np.sin(rotation) * (A - A.T) / 2)
    mu = class_sep * rng.standard_normal((n_classes, latent_dim))
    Px = rng.standard_normal((latent_dim, dim_x)) / math.sqrt(latent_dim)
    Py = rng.standard_normal((latent_dim, dim_y)) / math.sqrt(latent_dim)

    def draw(P, n, r):
        labels = np.arange(n) % n_classes
        z = mu[labels] + within_std * r.standard_normal((n, latent_dim))
        out = np.empty((n, length, P.shape[1]))
        for t in range(length):
            out[:, t] = z @ P + noise * r.standard_normal((n, P.shape[1]))
            z = z @ A.T + 0.1 * r.standard_normal((n, latent_dim))
        return out, labels

    return {"train_x": draw(Px, n_x, stream(seed, 71)), "test_x": draw(Px, n_test, stream(seed, 72)),
            "train_y": draw(Py, n_y, stream(seed, 73)), "n_classes": n_classes}


def linear_probe_accuracy(train_repr, train_labels, test_repr, test_labels) -> float:
    """Accuracy of a multinomial logistic-regression probe on frozen representations."""
    from sklearn.linear_model import LogisticRegression
    from sklearn.preprocessing import StandardScaler

    sc = StandardScaler().fit(train_repr)
    clf = LogisticRegression(max_iter=2000).fit(sc.transform(train_repr), train_labels)
    return float(clf.score(sc.transform(test_repr), test_labels))


# --- attenuated Gaussian autoencoder ------------------------------------------

@dataclass
class AutoencoderConfig:
    epochs: int = 200
    batch_size: int = 128
    lr: float = 1e-3
    n_total: int = 10_000
    n_val: int = 2_000
    common_dim: int = 128
    latent_dim: int = 10
    hidden_dim: int = 128
    decoder_relu: bool = False
    projection_std: Optional[float] = None


def build_autoencoder(obs_dim: int, cfg: AutoencoderConfig, seed: int, modalities=("X", "Y")) -> SharedNetSpec:
    """Linear adapters into the common space, shared encoder/decoder, linear heads back out."""
    c, h, z = cfg.common_dim, cfg.hidden_dim, cfg.latent_dim
    adapters, decoders = {}, {}
    for i, mod in enumerate(("X", "Y")):
        a = DenseNet.init([obs_dim, c], ["identity"], stream(seed, _INIT, 30 + i))
        d = DenseNet.init([c, obs_dim], ["identity"], stream(seed, _INIT, 40 + i))
        if mod in modalities:
            adapters[mod], decoders[mod] = a, d
    dec = "relu" if cfg.decoder_relu else "identity"
    trunk = DenseNet.init([c, h, z, h, c], ["relu", "identity", dec, "identity"], stream(seed, _INIT, 2))
    return SharedNetSpec(adapters, trunk, decoders=decoders)


@dataclass
class AutoencoderComparison:
    unimodal: TrainReport
    joint: TrainReport

    @property
    def improvement(self) -> float:
        return self.unimodal.metrics["val_mse_x"] - self.joint.metrics["val_mse_x"]


def _reconstruction_mse(model, modality, data) -> float:
    out, _ = model.forward(modality, data)
    return mse_loss(out, data)[0]


def train_shared_autoencoder(cfg: AutoencoderConfig, seed: int) -> AutoencoderComparison:
    """Unimodal (N X-samples) versus joint (N/2 X + N/2 unpaired Y) autoencoders.

    Training data come from the attenuated spec with a fresh Gaussian latent
    per sample; validation MSE on X uses the unattenuated projections.
    """
    train_spec, val_spec = make_attenuated_gaussian_spec(seed, projection_std=cfg.projection_std)
    half = cfg.n_total // 2
    x_full = sample_latent_observations(train_spec, "X", cfg.n_total, stream(seed, 40))
    y_half = sample_latent_observations(train_spec, "Y", cfg.n_total - half, stream(seed, 41))
    x_val = sample_latent_observations(val_spec, "X", cfg.n_val, stream(seed, 42))
    obs = train_spec.m
    reports = {}
    for arm, x_train, y_train in (("unimodal", x_full, None), ("joint", x_full[:half], y_half)):
        tcfg = TrainConfig(lam=1.0, batch_ratio=1.0, epochs=cfg.epochs, batch_size=cfg.batch_size,
                           seed=seed, lr=cfg.lr)
        model = build_autoencoder(obs, cfg, seed)
        aux = None if y_train is None else ("Y", y_train, y_train)
        losses, schedule = _train_loop(model, tcfg, ("X", x_train, x_train), aux, mse_loss, set())
        metrics = {"val_mse_x": _reconstruction_mse(model, "X", x_val),
                   "train_mse_x": _reconstruction_mse(model, "X", x_train),
                   "n_x": int(len(x_train)), "n_y": 0 if y_train is None else int(len(y_train))}
        conf = {**asdict(cfg), "seed": seed, "arm": arm, "optimizer": "adam(0.9, 0.999, 1e-8)",
                "spec_meta": train_spec.meta}
        reports[arm] = TrainReport(losses, metrics, conf, model.digest(), schedule)
    return AutoencoderComparison(reports["unimodal"], reports["joint"])
