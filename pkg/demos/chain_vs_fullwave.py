"""Coupled-mode chain against the full-wave ring simulation.

Runs both on the same config and prints the overall averaged polarization
side by side, for the default eta and for a user-supplied one.

    python3 demos/chain_vs_fullwave.py [--eta 0.0005]
"""

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from holoquench.config import derive_eta, load_config, resolve
from holoquench.pipeline import analyze_series, simulate_and_analyze
from holoquench.tightbinding import chain_evolve


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--config", default=str(Path(__file__).resolve().parents[1]
                                           / "configs" / "desk_phi_pi.json"))
    p.add_argument("--eta", type=float, action="append", default=[],
                   help="extra chain eta to compare (repeatable)")
    args = p.parse_args()
    cfg = resolve(load_config(args.config))
    if abs(math.cos(cfg.modulator("BA").phase - cfg.modulator("BC").phase)) < 0.5:
        sys.exit("chain comparison needs phi = 0 or pi")
    _, fw = simulate_and_analyze(cfg)
    print(f"{'eta':>10}  rms(avg sy)  rms(avg sz)")
    for eta in [derive_eta(cfg), *args.eta]:
        ch = analyze_series(chain_evolve(cfg, eta=eta).series)
        ry = float(np.sqrt(np.mean((fw.avg_y - ch.avg_y) ** 2)))
        rz = float(np.sqrt(np.mean((fw.avg_z - ch.avg_z) ** 2)))
        print(f"{eta:10.3g}  {ry:11.3f}  {rz:11.3f}")


if __name__ == "__main__":
    main()
