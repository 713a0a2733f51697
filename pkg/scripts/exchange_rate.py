"""Accuracy over a grid of X shots and auxiliary samples per class, then the exchange-rate plane fit.

The grid is written as a points CSV that ``uml-lab mrs-fit`` also accepts.

    python scripts/exchange_rate.py --out runs/exchange
"""
import argparse
from pathlib import Path

import numpy as np

from uml_lab.analysis import mrs_plane_fit
from uml_lab.train import (SUPERVISED_HIDDEN, SUPERVISED_TRAIN, TrainConfig, build_classifier_net,
                           make_classification_task, train_supervised)


def accuracy(seed, shots_x, n_y):
    task = make_classification_task(seed, shots_x=shots_x, n_y_per_class=max(n_y, 1))
    with_y = n_y > 0
    model = build_classifier_net(task.train_x[0].shape[1], task.train_y[0].shape[1] if with_y else None,
                                 SUPERVISED_HIDDEN, task.n_classes, seed)
    cfg = TrainConfig(seed=seed, **SUPERVISED_TRAIN)
    return train_supervised(model, task.train_x, task.train_y if with_y else None, cfg,
                            task.test_x).metrics["test_accuracy_x"]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--shots", type=int, nargs="+", default=[1, 2, 4, 8])
    ap.add_argument("--aux", type=int, nargs="+", default=[0, 2, 8, 32])
    ap.add_argument("--seeds", type=int, default=2)
    ap.add_argument("--out", type=Path, default=Path("runs/exchange"))
    a = ap.parse_args()
    points = []
    for n_x in a.shots:
        for n_y in a.aux:
            acc = float(np.mean([accuracy(s, n_x, n_y) for s in range(a.seeds)]))
            points.append((n_x, n_y, acc))
            print(f"shots {n_x:3d}  aux/class {n_y:3d}  accuracy {100 * acc:.2f}%")
    a.out.mkdir(parents=True, exist_ok=True)
    lines = ["img_shots,txt_shots,accuracy"] + [f"{i},{t},{acc!r}" for i, t, acc in points]
    (a.out / "points.csv").write_text("\n".join(lines) + "\n")
    fit = mrs_plane_fit(points)
    print(f"alpha_x {fit.alpha_img:.4f}  alpha_aux {fit.alpha_txt:.4f}  "
          f"aux samples per X sample {fit.texts_per_image:.2f}  flags {fit.flags}")


if __name__ == "__main__":
    main()
