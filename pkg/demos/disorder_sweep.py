"""Robustness of C0 against modulator and source disorder.

Sweeps the disorder strength over a few seeds on the smoke config and prints
C0 for every realization.

    python3 demos/disorder_sweep.py [--config configs/smoke_phi_pi.json]
"""

import argparse
from dataclasses import replace
from pathlib import Path

from holoquench.config import DisorderSettings, load_config, resolve
from holoquench.disorder import DisorderSpec
from holoquench.pipeline import simulate_and_analyze


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--config", default=str(Path(__file__).resolve().parents[1]
                                           / "configs" / "smoke_phi_pi.json"))
    p.add_argument("--seeds", type=int, default=3)
    args = p.parse_args()
    base = resolve(load_config(args.config))
    for kind, deltas in (("modulator", (0.1, 0.5)), ("source", (0.05, 0.10))):
        for delta in deltas:
            c0s = []
            for seed in range(args.seeds):
                spec = DisorderSpec(kind, delta)
                dis = DisorderSettings(modulator=spec) if kind == "modulator" else DisorderSettings(source=spec)
                _, an = simulate_and_analyze(replace(base, seed=seed, disorder=dis))
                c0s.append(an.result.c0)
            print(f"{kind:<9} delta={delta:<5} c0 per seed: {c0s}")


if __name__ == "__main__":
    main()
