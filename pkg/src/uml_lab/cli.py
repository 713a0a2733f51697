"""Command-line entry point: ``uml-lab <subcommand> [options]``.

Every run validates its full configuration before touching the output
directory, computes everything in memory, then writes ``report.json`` plus
subcommand CSVs. ``uml-lab --replay <report.json>`` re-runs the echoed
configuration and checks the metrics payload for bitwise equality.

Exit codes: 0 success, 1 invalid input/config, 2 internal error,
3 theorem-verification failures.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .errors import InvalidInput, UmlLabError

log = logging.getLogger("uml_lab")

EXIT_OK, EXIT_INVALID, EXIT_INTERNAL, EXIT_THEOREM = 0, 1, 2, 3
SCHEMA_VERSION = 1


# --- config schemas -------------------------------------------------------------
# key -> (type check, default). ``None`` defaults mean "optional, unset".

def _int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _num(v):
    return (isinstance(v, (int, float)) and not isinstance(v, bool)) and math.isfinite(v)


def _bool(v):
    return isinstance(v, bool)


def _str(v):
    return isinstance(v, str)


def _opt(check):
    return lambda v: v is None or check(v)


def _num_list(v):
    return isinstance(v, list) and all(_num(x) for x in v)


def _str_list(v):
    return isinstance(v, list) and all(_str(x) for x in v)


SCHEMAS = {
    "verify-theorems": {
        "configs": (_int, 500), "orthogonal": (_bool, True), "statements": (_opt(_str_list), None),
    },
    "budget-sweep": {
        "total_budget": (_int, 200), "grid": (_num_list, [i / 10 for i in range(11)]),
        "generator": (_str, "attenuated_gaussian"), "spec_file": (_opt(_str), None),
        "d_c": (_int, 3), "d_x": (_int, 2), "d_y": (_int, 2), "m": (_int, 8), "n": (_int, 8),
        "sigma_x": (_num, 1.0), "sigma_y": (_num, 1.0), "mc_trials": (_int, 0),
    },
    "monte-carlo": {
        "n_specs": (_int, 10), "trials": (_int, 20000), "sigma": (_num, 0.3), "n_x": (_int, 12),
        "n_y": (_int, 12), "d_c": (_int, 3), "d_x": (_int, 2), "d_y": (_int, 2), "m": (_int, 6),
        "n": (_int, 6), "mode": (_str, "Joint"), "tolerance": (_num, 0.05),
    },
    "gaussian-exp": {
        "seeds": (_int, 5), "epochs": (_int, 200), "batch_size": (_int, 128), "lr": (_num, 1e-3),
        "n_total": (_int, 10000), "n_val": (_int, 2000), "decoder_relu": (_bool, False),
        "projection_std": (_opt(_num), None),
    },
    "train-sup": {
        "seeds": (_int, 1), "n_classes": (_int, 20), "latent_dim": (_int, 4), "dim_x": (_int, 4),
        "dim_y": (_int, 4), "shots_x": (_int, 2), "n_y_per_class": (_int, 20),
        "n_test_per_class": (_int, 1000), "class_sep": (_num, 2.0), "within_std": (_num, 1.0),
        "noise_x": (_num, 0.3), "noise_y": (_num, 0.3), "aux": (_str, "related"),
        "x_train_file": (_opt(_str), None), "y_train_file": (_opt(_str), None), "x_test_file": (_opt(_str), None),
        "hidden": (_int, 8), "trunk_layers": (_int, 1), "trunk_activation": (_str, "identity"),
        "lam": (_num, 1.0), "batch_ratio": (_num, 1.0), "epochs": (_int, 800), "batch_size": (_int, 8),
        "curriculum_step": (_int, 0), "head_init": (_str, "Random"), "lr": (_num, 0.01),
        "freeze_adapter_y": (_bool, False), "baseline": (_bool, True),
    },
    "train-ssl": {
        "seeds": (_int, 1), "n_classes": (_int, 8), "latent_dim": (_int, 4), "dim_x": (_int, 32),
        "dim_y": (_int, 32), "length": (_int, 8), "n_x": (_int, 32), "n_y": (_int, 400),
        "n_test": (_int, 400), "noise": (_num, 1.0), "class_sep": (_num, 1.0), "window": (_int, 4),
        "hidden": (_int, 8), "lam": (_num, 1.0), "batch_ratio": (_num, 1.0), "epochs": (_int, 300),
        "batch_size": (_int, 8), "lr": (_num, 0.01), "baseline": (_bool, True),
    },
    "analyze": {
        "embeddings": (_str, None), "head": (_str, None), "aux_embeddings": (_opt(_str), None),
        "pair": (_opt(lambda v: isinstance(v, list) and len(v) == 2 and all(_int(x) for x in v)), None),
        "acts_v": (_opt(_str), None), "acts_t": (_opt(_str), None), "margin_bias": (_str, "auto"),
    },
    "mrs-fit": {
        "points": (_str, None), "mean_words_per_text": (_opt(_num), None),
    },
}
REQUIRED = {"analyze": ("embeddings", "head"), "mrs-fit": ("points",)}
SEEDED = {"gaussian-exp", "train-sup", "train-ssl"}


def build_config(subcommand: str, file_cfg: dict, overrides: dict) -> dict:
    """Merge defaults, config file, and overrides; unknown keys and bad types raise InvalidInput."""
    schema = SCHEMAS[subcommand]
    merged = {k: v[1] for k, v in schema.items()}
    for source, values in (("config file", file_cfg), ("override", overrides)):
        for k, v in values.items():
            if k == "schema_version":
                if v != SCHEMA_VERSION:
                    raise InvalidInput(f"{source}: schema_version {v!r} unsupported (expected {SCHEMA_VERSION})")
                continue
            if k not in schema:
                raise InvalidInput(f"{source}: unknown key {k!r} for {subcommand}; allowed: {', '.join(schema)}")
            merged[k] = v
    for k, (check, _) in schema.items():
        v = merged[k]
        if v is None and k in REQUIRED.get(subcommand, ()):
            raise InvalidInput(f"{subcommand} requires config key {k!r}")
        if v is not None and not check(v):
            raise InvalidInput(f"config key {k!r} has invalid value {v!r}")
    return merged


def _read_config(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise InvalidInput(f"cannot read config {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"config {path} is not valid JSON: {exc.msg} at line {exc.lineno}") from exc
    if not isinstance(doc, dict):
        raise InvalidInput(f"config {path} must hold a JSON object")
    return doc


def _parse_set(items) -> dict:
    out = {}
    for item in items or []:
        key, sep, raw = item.partition("=")
        if not sep:
            raise InvalidInput(f"--set expects KEY=VALUE, got {item!r}")
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


# --- helpers ----------------------------------------------------------------------

def _finite(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _finite(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(["" if v is None else (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for v in r])
    return buf.getvalue()


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _need_file(path, what):
    p = Path(path)
    if not p.is_file():
        raise InvalidInput(f"{what} file {path} does not exist")
    return p


def _map(fn, items, workers: int):
    """Order-preserving map, fanned out over processes when ``workers > 1``."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


class Outcome:
    """Result of one subcommand: metrics, text files to write, and the exit code."""

    def __init__(self, metrics, files=None, exit_code=EXIT_OK, inputs=None, seeds=None, binary=None):
        self.metrics = metrics
        self.files = files or {}
        self.binary = binary or {}
        self.exit_code = exit_code
        self.inputs = inputs or {}
        self.seeds = seeds or []


# --- subcommands ------------------------------------------------------------------------

def _theorem_job(args):
    from .theorems import run_statement
    statement, n, seed, orthogonal = args
    return run_statement(statement, n, seed, orthogonal).to_dict()


def cmd_verify_theorems(cfg, seed, workers) -> Outcome:
    from .theorems import STATEMENTS
    names = cfg["statements"] or list(STATEMENTS)
    unknown = [s for s in names if s not in STATEMENTS]
    if unknown:
        raise InvalidInput(f"unknown statements {unknown}; known: {', '.join(STATEMENTS)}")
    if cfg["configs"] < 1:
        raise InvalidInput("configs must be >= 1")
    reports = _map(_theorem_job, [(s, cfg["configs"], seed, cfg["orthogonal"]) for s in names], workers)
    # the case-2 strictness condition is only certified on orthogonal designs; elsewhere it is reported
    advisory = set() if cfg["orthogonal"] else {"thm2_case2"}
    n_fail = sum(len(r["failures"]) for r in reports if r["theorem_id"] not in advisory)
    short = [r["theorem_id"] for r in reports if r["n_configs_tested"] < cfg["configs"]]
    rows = [(r["theorem_id"], r["n_configs_tested"], r["n_passed"], r["n_precondition_unmet"], len(r["failures"]))
            for r in reports]
    files = {"theorems.csv": _csv_text(["statement", "tested", "passed", "precondition_unmet", "failures"], rows)}
    metrics = {"statements": reports, "total_failures": n_fail, "under_sampled": short,
               "report_only": sorted(advisory)}
    code = EXIT_THEOREM if n_fail or short else EXIT_OK
    return Outcome(metrics, files, code, seeds=[seed])


def _sweep_spec(cfg, seed):
    from .dgp import LatentPartition, LinearDgpSpec, make_attenuated_gaussian_spec, make_orthogonal_spec
    if cfg["spec_file"]:
        p = _need_file(cfg["spec_file"], "spec")
        try:
            return LinearDgpSpec.from_json(p.read_text()), {cfg["spec_file"]: file_digest(p)}
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInput(f"spec file {p} is malformed: {exc}") from exc
    if cfg["generator"] == "attenuated_gaussian":
        return make_attenuated_gaussian_spec(seed)[0], {}
    if cfg["generator"] == "orthogonal":
        part = LatentPartition(cfg["d_c"], cfg["d_x"], cfg["d_y"])
        return make_orthogonal_spec(part, cfg["m"], cfg["n"], 1, 1, (cfg["sigma_x"], cfg["sigma_y"]), seed), {}
    raise InvalidInput("generator must be 'attenuated_gaussian' or 'orthogonal'")


def cmd_budget_sweep(cfg, seed, workers) -> Outcome:
    from .theorems import budget_sweep
    spec, inputs = _sweep_spec(cfg, seed)
    curve = budget_sweep(spec, cfg["total_budget"], cfg["grid"], seed=seed, trials=cfg["mc_trials"])
    rows = [(r["fraction"], r["n_x"], r["n_y"], r["crlb_trace"] if math.isfinite(r["crlb_trace"]) else "inf",
             r["mc_trace"], r["flag"]) for r in curve.rows()]
    files = {"budget_sweep.csv": _csv_text(["fraction_y", "n_x", "n_y", "crlb_trace", "mc_trace", "flag"], rows)}
    try:
        best = curve.argmin_fraction()
    except InvalidInput:
        best = None
    metrics = {"rows": curve.rows(), "argmin_fraction": best, "spec_digest": spec.digest()}
    return Outcome(metrics, files, inputs=inputs, seeds=[seed])


def _mc_job(args):
    from .dgp import LatentPartition, make_orthogonal_spec
    from .estimation import crlb_common, fisher_info, monte_carlo_cov
    cfg, spec_seed = args
    part = LatentPartition(cfg["d_c"], cfg["d_x"], cfg["d_y"])
    spec = make_orthogonal_spec(part, cfg["m"], cfg["n"], 2, 2, (cfg["sigma"], cfg["sigma"]), spec_seed)
    nx = cfg["n_x"] if cfg["mode"] != "YOnly" else 0
    ny = cfg["n_y"] if cfg["mode"] != "XOnly" else 0
    crlb = crlb_common(fisher_info(spec, cfg["mode"], nx, ny, noise_scaled=True), profile=True)
    mc = monte_carlo_cov(spec, cfg["mode"], nx, ny, cfg["trials"], spec_seed)
    err = float(np.linalg.norm(mc.cov - crlb) / np.linalg.norm(crlb))
    return {"spec_seed": spec_seed, "spec_digest": spec.digest(), "crlb_trace": float(np.trace(crlb)),
            "mc_trace": float(np.trace(mc.cov)), "rel_frobenius_error": err}


def cmd_monte_carlo(cfg, seed, workers) -> Outcome:
    if cfg["mode"] not in ("XOnly", "YOnly", "Joint"):
        raise InvalidInput("mode must be XOnly, YOnly or Joint")
    if cfg["trials"] < 2 or cfg["n_specs"] < 1 or cfg["sigma"] <= 0:
        raise InvalidInput("need trials >= 2, n_specs >= 1 and sigma > 0")
    rows = _map(_mc_job, [(cfg, seed * 1000 + k) for k in range(cfg["n_specs"])], workers)
    worst = max(r["rel_frobenius_error"] for r in rows)
    files = {"monte_carlo.csv": _csv_text(["spec_seed", "crlb_trace", "mc_trace", "rel_frobenius_error"],
                                          [(r["spec_seed"], r["crlb_trace"], r["mc_trace"],
                                            r["rel_frobenius_error"]) for r in rows])}
    metrics = {"specs": rows, "max_rel_frobenius_error": worst, "within_tolerance": worst <= cfg["tolerance"]}
    return Outcome(metrics, files, seeds=[seed])


def _gaussian_job(args):
    from .train import AutoencoderConfig, train_shared_autoencoder
    cfg, s = args
    ac = AutoencoderConfig(epochs=cfg["epochs"], batch_size=cfg["batch_size"], lr=cfg["lr"], n_total=cfg["n_total"],
                           n_val=cfg["n_val"], decoder_relu=cfg["decoder_relu"], projection_std=cfg["projection_std"])
    res = train_shared_autoencoder(ac, s)
    return {"seed": s, "unimodal_val_mse_x": res.unimodal.metrics["val_mse_x"],
            "joint_val_mse_x": res.joint.metrics["val_mse_x"],
            "unimodal_digest": res.unimodal.parameter_digest, "joint_digest": res.joint.parameter_digest,
            "unimodal_losses": res.unimodal.epoch_losses, "joint_losses": res.joint.epoch_losses}


def cmd_gaussian_exp(cfg, seed, workers) -> Outcome:
    if cfg["seeds"] < 1 or cfg["epochs"] < 1 or cfg["n_total"] < 4:
        raise InvalidInput("need seeds >= 1, epochs >= 1, n_total >= 4")
    seeds = [seed + k for k in range(cfg["seeds"])]
    runs = _map(_gaussian_job, [(cfg, s) for s in seeds], workers)
    pairs = [(r["seed"], r["unimodal_val_mse_x"], r["joint_val_mse_x"]) for r in runs]
    files = {"gaussian_exp.csv": _csv_text(["seed", "unimodal_val_mse_x", "joint_val_mse_x"], pairs)}
    uni = float(np.mean([p[1] for p in pairs]))
    joint = float(np.mean([p[2] for p in pairs]))
    metrics = {"runs": runs, "mean_unimodal_val_mse_x": uni, "mean_joint_val_mse_x": joint,
               "joint_wins": int(sum(p[2] < p[1] for p in pairs)), "optimizer": "adam(lr, 0.9, 0.999, 1e-8)"}
    return Outcome(metrics, files, seeds=seeds)


def _sup_data(cfg, s):
    from .embeddings import read_embeddings
    from .train import make_classification_task
    paths = [cfg["x_train_file"], cfg["y_train_file"], cfg["x_test_file"]]
    if any(paths):
        if not all(paths):
            raise InvalidInput("embedding input needs x_train_file, y_train_file and x_test_file together")
        loaded = []
        for p in paths:
            E, lab = read_embeddings(_need_file(p, "embedding"))
            if lab is None:
                raise InvalidInput(f"{p} carries no labels")
            loaded.append((E, lab))
        k = int(max(l.max() for _, l in loaded)) + 1
        return loaded[0], loaded[1], loaded[2], k
    task = make_classification_task(s, n_classes=cfg["n_classes"], latent_dim=cfg["latent_dim"], dim_x=cfg["dim_x"],
                                    dim_y=cfg["dim_y"], shots_x=cfg["shots_x"], n_y_per_class=cfg["n_y_per_class"],
                                    n_test_per_class=cfg["n_test_per_class"], class_sep=cfg["class_sep"],
                                    within_std=cfg["within_std"], noise_x=cfg["noise_x"], noise_y=cfg["noise_y"],
                                    aux=cfg["aux"])
    return task.train_x, task.train_y, task.test_x, task.n_classes


def _sup_train_cfg(cfg, s, lam=None):
    from .train import TrainConfig
    return TrainConfig(lam=cfg["lam"] if lam is None else lam, batch_ratio=cfg["batch_ratio"], epochs=cfg["epochs"],
                       batch_size=cfg["batch_size"], seed=s, curriculum_step=cfg["curriculum_step"],
                       head_init=cfg["head_init"], lr=cfg["lr"], freeze_adapter_y=cfg["freeze_adapter_y"])


def _sup_job(args):
    from .embeddings import format_embeddings
    from .train import build_classifier_net, train_supervised
    cfg, s = args
    tx, ty, te, k = _sup_data(cfg, s)
    model = build_classifier_net(tx[0].shape[1], ty[0].shape[1], cfg["hidden"], k, s, cfg["trunk_layers"],
                                 cfg["trunk_activation"])
    joint = train_supervised(model, tx, ty, _sup_train_cfg(cfg, s), te, n_classes=k)
    out = {"seed": s, "joint_test_accuracy": joint.metrics["test_accuracy_x"], "joint_digest": joint.parameter_digest,
           "joint_losses": joint.epoch_losses}
    if cfg["baseline"]:
        base_cfg = _sup_train_cfg(cfg, s)
        if base_cfg.head_init == "ClassMeanAuxiliary":
            base_cfg.head_init = "Random"
        base = build_classifier_net(tx[0].shape[1], None, cfg["hidden"], k, s, cfg["trunk_layers"],
                                    cfg["trunk_activation"])
        uni = train_supervised(base, tx, None, base_cfg, te, n_classes=k)
        out.update(unimodal_test_accuracy=uni.metrics["test_accuracy_x"], unimodal_digest=uni.parameter_digest)
    # artifacts for `analyze`: trunk embeddings of the X test set and the shared head
    out["_emb"] = format_embeddings(model.representation("X", te[0]), te[1])
    out["_head"] = model.classifier
    return out


def cmd_train_sup(cfg, seed, workers) -> Outcome:
    from .train import AUX_KINDS
    if cfg["aux"] not in AUX_KINDS:
        raise InvalidInput(f"aux must be one of {AUX_KINDS}")
    if cfg["trunk_activation"] not in ("identity", "relu"):
        raise InvalidInput("trunk_activation must be 'identity' or 'relu'")
    _sup_train_cfg(cfg, seed)  # validates the training fields up front
    if cfg["seeds"] < 1:
        raise InvalidInput("seeds must be >= 1")
    inputs = {p: file_digest(_need_file(p, "embedding"))
              for p in (cfg["x_train_file"], cfg["y_train_file"], cfg["x_test_file"]) if p}
    seeds = [seed + k for k in range(cfg["seeds"])]
    runs = _map(_sup_job, [(cfg, s) for s in seeds], workers)
    files, binary = {}, {}
    for r in runs:
        files[f"test_embeddings_seed{r['seed']}.txt"] = r.pop("_emb")
        binary[f"head_seed{r['seed']}.umlw"] = r.pop("_head")
    header = ["seed", "joint_test_accuracy"] + (["unimodal_test_accuracy"] if cfg["baseline"] else [])
    files["train_sup.csv"] = _csv_text(header, [[r[h] for h in header] for r in runs])
    metrics = {"runs": runs, "mean_joint_test_accuracy": float(np.mean([r["joint_test_accuracy"] for r in runs]))}
    if cfg["baseline"]:
        metrics["mean_unimodal_test_accuracy"] = float(np.mean([r["unimodal_test_accuracy"] for r in runs]))
    return Outcome(metrics, files, inputs=inputs, seeds=seeds, binary=binary)


def _ssl_job(args):
    from .train import TrainConfig, build_ssl_net, linear_probe_accuracy, make_sequence_task, train_ssl_shared_trunk
    cfg, s = args
    task = make_sequence_task(s, n_classes=cfg["n_classes"], latent_dim=cfg["latent_dim"], dim_x=cfg["dim_x"],
                              dim_y=cfg["dim_y"], length=cfg["length"], n_x=cfg["n_x"], n_y=cfg["n_y"],
                              n_test=cfg["n_test"], noise=cfg["noise"], class_sep=cfg["class_sep"])
    tc = TrainConfig(lam=cfg["lam"], batch_ratio=cfg["batch_ratio"], epochs=cfg["epochs"],
                     batch_size=cfg["batch_size"], seed=s, lr=cfg["lr"])
    out = {"seed": s}
    arms = [("joint", task["train_y"][0])] + ([("unimodal", None)] if cfg["baseline"] else [])
    for arm, ys in arms:
        dims = {"X": cfg["dim_x"]} if ys is None else {"X": cfg["dim_x"], "Y": cfg["dim_y"]}
        model = build_ssl_net(dims, cfg["hidden"], cfg["window"], s)
        rep = train_ssl_shared_trunk(model, task["train_x"][0], ys, tc)
        acc = linear_probe_accuracy(model.representation("X", task["train_x"][0]), task["train_x"][1],
                                    model.representation("X", task["test_x"][0]), task["test_x"][1])
        out[f"{arm}_probe_accuracy"] = acc
        out[f"{arm}_digest"] = rep.parameter_digest
    return out


def cmd_train_ssl(cfg, seed, workers) -> Outcome:
    if cfg["seeds"] < 1 or cfg["length"] < 2 or cfg["window"] < 1:
        raise InvalidInput("need seeds >= 1, length >= 2, window >= 1")
    seeds = [seed + k for k in range(cfg["seeds"])]
    runs = _map(_ssl_job, [(cfg, s) for s in seeds], workers)
    header = ["seed", "joint_probe_accuracy"] + (["unimodal_probe_accuracy"] if cfg["baseline"] else [])
    files = {"train_ssl.csv": _csv_text(header, [[r[h] for h in header] for r in runs])}
    metrics = {"runs": runs}
    for arm in ("joint", "unimodal"):
        if f"{arm}_probe_accuracy" in runs[0]:
            metrics[f"mean_{arm}_probe_accuracy"] = float(np.mean([r[f"{arm}_probe_accuracy"] for r in runs]))
    return Outcome(metrics, files, seeds=seeds)


def cmd_analyze(cfg, seed, workers) -> Outcome:
    from .analysis import (ClassifierHead, boundary_projection, davies_bouldin, functional_margins,
                           neuron_correlations, prototype_alignment, silhouette)
    from .embeddings import read_embeddings
    from .neural import load_umlw
    inputs = {}

    def load(key):
        p = _need_file(cfg[key], key)
        inputs[cfg[key]] = file_digest(p)
        return p

    E, labels = read_embeddings(load("embeddings"))
    if labels is None:
        raise InvalidInput("analyze needs labeled embeddings")
    head = ClassifierHead.from_dense(load_umlw(load("head")))
    if head.W.shape[1] != E.shape[1]:
        raise InvalidInput("head input dimension does not match the embeddings")
    files, metrics = {}, {}
    margins = functional_margins(head, E, labels, cfg["margin_bias"])
    files["margins.csv"] = _csv_text(["row", "label", "margin"], [(i, int(l), m) for i, (l, m) in
                                                                 enumerate(zip(labels, margins))])
    db = davies_bouldin(E, labels)
    sil = silhouette(E, labels)
    files["cluster.csv"] = _csv_text(["metric", "value", "degenerate"],
                                     [("silhouette", sil, 0), ("davies_bouldin", db.value, int(db.degenerate))])
    metrics.update(mean_margin=float(margins.mean()), silhouette=sil, davies_bouldin=db.value,
                   davies_bouldin_degenerate=db.degenerate, margin_bias=cfg["margin_bias"])
    if cfg["aux_embeddings"]:
        A, al = read_embeddings(load("aux_embeddings"))
        if al is None:
            raise InvalidInput("aux embeddings need labels to form class means")
        if A.shape[1] != E.shape[1]:
            raise InvalidInput("aux embeddings must share the embedding dimension")
        means = np.stack([A[al == k].mean(axis=0) if np.any(al == k) else np.full(A.shape[1], np.nan)
                          for k in range(head.n_classes)])
        if np.isnan(means).any():
            raise InvalidInput("every head class needs at least one aux embedding")
        pa = prototype_alignment(head, means)
        files["prototypes.csv"] = _csv_text(["head_class", "aux_class", "inner_product"],
                                            [(k, l, pa.matrix[k, l]) for k in range(head.n_classes)
                                             for l in range(head.n_classes)])
        metrics["prototype_dominance"] = pa.dominance
    if cfg["pair"]:
        bp = boundary_projection(head, E, labels, cfg["pair"])
        files["boundary.csv"] = _csv_text(["row", "label", "axis1", "axis2"],
                                          [(i, int(l), c[0], c[1]) for i, (l, c) in enumerate(zip(labels, bp.coords))])
    if cfg["acts_v"] or cfg["acts_t"]:
        if not (cfg["acts_v"] and cfg["acts_t"]):
            raise InvalidInput("neuron correlations need both acts_v and acts_t")
        V, vl = read_embeddings(load("acts_v"))
        T, _ = read_embeddings(load("acts_t"))
        if vl is None:
            raise InvalidInput("acts_v must carry labels")
        corr = neuron_correlations(V, T, vl)
        rows = []
        for c in corr:
            rows.append((c.neuron, "all", c.r, int(c.undefined), V.shape[0]))
            for lab, r in c.r_by_label.items():
                rows.append((c.neuron, lab, r, int(lab in c.undefined_labels), c.counts[lab]))
        files["neurons.csv"] = _csv_text(["neuron", "label", "r", "undefined", "count"], rows)
        metrics["neuron_r"] = [c.r for c in corr]
        metrics["pairing_convention"] = "row-index matched"
    return Outcome(metrics, files, inputs=inputs, seeds=[seed])


def cmd_mrs_fit(cfg, seed, workers) -> Outcome:
    from .analysis import mrs_plane_fit
    p = _need_file(cfg["points"], "points")
    rows = []
    with open(p, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        want = ["img_shots", "txt_shots", "accuracy"]
        if header is None or [h.strip() for h in header] != want:
            raise InvalidInput(f"{p}: header must be {','.join(want)}")
        for i, r in enumerate(reader, start=2):
            if not r:
                continue
            try:
                rows.append([float(v) for v in r])
            except ValueError as exc:
                raise InvalidInput(f"{p}: line {i}: {exc}") from exc
            if len(rows[-1]) != 3:
                raise InvalidInput(f"{p}: line {i} needs 3 fields")
    fit = mrs_plane_fit(np.array(rows).reshape(-1, 3), cfg["mean_words_per_text"])
    files = {"mrs_fit.json": json.dumps(_finite(fit.to_dict()), indent=2) + "\n"}
    return Outcome(fit.to_dict(), files, inputs={cfg["points"]: file_digest(p)}, seeds=[seed])


COMMANDS = {
    "verify-theorems": cmd_verify_theorems, "budget-sweep": cmd_budget_sweep, "monte-carlo": cmd_monte_carlo,
    "gaussian-exp": cmd_gaussian_exp, "train-sup": cmd_train_sup, "train-ssl": cmd_train_ssl,
    "analyze": cmd_analyze, "mrs-fit": cmd_mrs_fit,
}


# --- orchestration --------------------------------------------------------------------------

def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def execute(subcommand: str, cfg: dict, seed: int, workers: int, outdir) -> tuple[int, dict]:
    """Run one validated configuration and write its outputs; returns ``(exit_code, report)``."""
    started = _now()
    outcome = COMMANDS[subcommand](cfg, seed, workers)
    report = {
        "subcommand": subcommand, "schema_version": SCHEMA_VERSION, "config": cfg, "seed": seed,
        "seeds": outcome.seeds, "workers": workers, "version": __version__, "started_at": started,
        "finished_at": _now(), "metrics": _finite(outcome.metrics), "input_digests": outcome.inputs,
        "exit_code": outcome.exit_code,
    }
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in outcome.files.items():
        with open(out / name, "w", newline="\n") as fh:
            fh.write(text)
    if outcome.binary:
        from .neural import save_umlw
        for name, net in outcome.binary.items():
            save_umlw(net, out / name)
    with open(out / "report.json", "w", newline="\n") as fh:
        fh.write(json.dumps(report, indent=2, allow_nan=False) + "\n")
    return outcome.exit_code, report


def canonical_metrics(report: dict) -> str:
    return json.dumps(report["metrics"], sort_keys=True, allow_nan=False)


def replay(report_path, outdir, workers: int) -> int:
    try:
        old = json.loads(Path(report_path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInput(f"cannot read report {report_path}: {exc}") from exc
    if not isinstance(old, dict) or old.get("subcommand") not in COMMANDS:
        raise InvalidInput(f"{report_path} is not a uml-lab report")
    cfg = build_config(old["subcommand"], old.get("config", {}), {})
    for path, digest in old.get("input_digests", {}).items():
        if not Path(path).is_file() or file_digest(path) != digest:
            raise InvalidInput(f"input {path} changed since the original run")
    code, new = execute(old["subcommand"], cfg, int(old["seed"]), workers, outdir)
    if canonical_metrics(new) != canonical_metrics(old):
        log.error("replay metrics differ from %s", report_path)
        print(f"replay mismatch: metrics differ from {report_path}", file=sys.stderr)
        return EXIT_INTERNAL
    print(f"replay ok: metrics identical to {report_path}")
    return code


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="base seed (multi-seed runs use seed, seed+1, ...)")
    common.add_argument("--outdir", default=None, help="output directory (default: ./uml-lab-out/<subcommand>)")
    common.add_argument("--config", default=None, help="JSON config file; unknown keys are errors")
    common.add_argument("--workers", type=int, default=1, help="processes for multi-seed / multi-statement runs")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key (JSON value)")
    p = argparse.ArgumentParser(prog="uml-lab", description="Unpaired multimodal learning laboratory.")
    p.add_argument("--version", action="version", version=f"uml-lab {__version__}")
    p.add_argument("--replay", default=None, metavar="REPORT", help="re-run a report.json and compare metrics")
    p.add_argument("--outdir", dest="top_outdir", default=None)
    p.add_argument("--workers", dest="top_workers", type=int, default=None)
    sub = p.add_subparsers(dest="command")
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "verify-theorems":
            sp.add_argument("--configs", type=int, default=None, help="configurations per statement")
        if name in SEEDED:
            sp.add_argument("--seeds", type=int, default=None, help="number of seeds")
    return p


def main(argv=None) -> int:
    level = os.environ.get("UML_LAB_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        if args.replay:
            workers = args.top_workers or 1
            outdir = args.top_outdir or str(Path(args.replay).parent / "replay")
            return replay(args.replay, outdir, workers)
        if not args.command:
            parser.print_usage(sys.stderr)
            print("uml-lab: error: a subcommand or --replay is required", file=sys.stderr)
            return EXIT_INVALID
        if args.workers < 1:
            raise InvalidInput("--workers must be >= 1")
        file_cfg = _read_config(args.config) if args.config else {}
        overrides = _parse_set(args.set)
        if getattr(args, "configs", None) is not None:
            overrides["configs"] = args.configs
        if getattr(args, "seeds", None) is not None:
            overrides["seeds"] = args.seeds
        cfg = build_config(args.command, file_cfg, overrides)
        outdir = args.outdir or str(Path("uml-lab-out") / args.command)
        code, report = execute(args.command, cfg, args.seed, args.workers, outdir)
        print(f"{args.command}: exit {code}; report at {Path(outdir) / 'report.json'}")
        return code
    except UmlLabError as exc:
        print(f"uml-lab: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - last-resort guard maps to the internal-error exit code
        log.debug("internal error", exc_info=True)
        print(f"uml-lab: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
