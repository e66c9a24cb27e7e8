"""Momentum-space quench oracle.

Compares the numerically time-averaged spin with the closed form h(h.S0)/|h|^2
and reports the winding number next to C0 over a few eta/kappa ratios.

    python3 demos/kspace_oracle.py
"""

import math

import numpy as np

from holoquench.errors import GaplessSpectrum
from holoquench.tightbinding import bloch_vector, kspace_quench_scan
from holoquench.topology import winding_number


def main():
    kappa = 1.0
    print("ratio  winding  c0  max|avg-closed|")
    for ratio in (0.2, 0.5, 1.0, 2.0, 4.0):
        eta = ratio * kappa
        scan = kspace_quench_scan(kappa, eta, math.pi, n_k=256, horizon=500 / min(kappa, eta))
        h = bloch_vector(np.linspace(-np.pi, np.pi, 256, endpoint=False), kappa, eta, math.pi)
        w = winding_number((h.hy, h.hz))
        err = float(np.abs(scan.average - scan.closed).max())
        print(f"{ratio:5.1f}  {w:7d}  {scan.result.c0:2d}  {err:.2e}")
    h = bloch_vector(np.linspace(-np.pi, np.pi, 256, endpoint=False), kappa, 0.2, 0.0)
    try:
        winding_number((h.hy, h.hz))
    except GaplessSpectrum as e:
        print(f"phi=0: {e.code}")
    print("phi=0 classification:", kspace_quench_scan(kappa, 0.2, 0.0, n_k=256, horizon=2500).result.classification)


if __name__ == "__main__":
    main()
