"""Next-step prediction through a shared trunk, evaluated by a linear probe on X.

    python scripts/ssl_toy.py --seeds 5
"""
import argparse

import numpy as np

from uml_lab.train import (SSL_HIDDEN, SSL_TRAIN, TrainConfig, build_ssl_net, linear_probe_accuracy,
                           make_sequence_task, train_ssl_shared_trunk)


def probe(seed, window, joint):
    task = make_sequence_task(seed)
    (sx, lx), (tx, ltx), (sy, _) = task["train_x"], task["test_x"], task["train_y"]
    dims = {"X": sx.shape[2], "Y": sy.shape[2]} if joint else {"X": sx.shape[2]}
    model = build_ssl_net(dims, SSL_HIDDEN, window, seed)
    train_ssl_shared_trunk(model, sx, sy if joint else None, TrainConfig(seed=seed, **SSL_TRAIN))
    return linear_probe_accuracy(model.representation("X", sx), lx, model.representation("X", tx), ltx)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--window", type=int, default=4)
    a = ap.parse_args()
    uni = [probe(s, a.window, False) for s in range(a.seeds)]
    joint = [probe(s, a.window, True) for s in range(a.seeds)]
    for s, (u, j) in enumerate(zip(uni, joint)):
        print(f"seed {s}: unimodal {100 * u:.2f}%  joint {100 * j:.2f}%")
    print(f"mean: unimodal {100 * np.mean(uni):.2f}%  joint {100 * np.mean(joint):.2f}%  "
          f"wins {sum(j > u for u, j in zip(uni, joint))}/{a.seeds}")


if __name__ == "__main__":
    main()
