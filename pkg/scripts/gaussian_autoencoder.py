"""Shared autoencoder on the attenuated Gaussian data, linear and ReLU decoders side by side.

Slow at full size (about 45 s per seed and decoder); use --epochs to shorten.

    python scripts/gaussian_autoencoder.py --seeds 5
"""
import argparse

import numpy as np

from uml_lab.train import AutoencoderConfig, train_shared_autoencoder


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--epochs", type=int, default=AutoencoderConfig.epochs)
    a = ap.parse_args()
    for relu in (False, True):
        cfg = AutoencoderConfig(epochs=a.epochs, decoder_relu=relu)
        res = [train_shared_autoencoder(cfg, s) for s in range(a.seeds)]
        uni = [r.unimodal.metrics["val_mse_x"] for r in res]
        joint = [r.joint.metrics["val_mse_x"] for r in res]
        wins = sum(r.improvement > 0 for r in res)
        print(f"decoder {'relu' if relu else 'linear':6s}  unimodal {np.mean(uni):.4f}  joint {np.mean(joint):.4f}  "
              f"joint better in {wins}/{a.seeds}")


if __name__ == "__main__":
    main()
