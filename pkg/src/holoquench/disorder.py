"""Seeded perturbations of modulator strengths and of the input source.

Both kinds draw from independent child streams of the run seed, so a
(seed, delta) pair always reproduces the same realization.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

_STREAM = {"modulator": 1, "source": 2}


@dataclass(frozen=True)
class DisorderSpec:
    """Disorder of one kind.

    Parameters
    ----------
    kind : {"modulator", "source"}
    delta : float
        Disorder intensity, ``0 <= delta <= 1``.
    cadence : int
        Roundtrips per modulator draw (ignored for the source kind).
    seed : int or None
        Stream seed. ``None`` falls back to the run seed.
    """

    kind: str
    delta: float = 0.0
    cadence: int = 1
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in _STREAM:
            raise ValueError(f"unknown disorder kind {self.kind!r}")
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError("delta must lie in [0, 1]")
        if self.cadence < 1:
            raise ValueError("cadence must be >= 1")

    @property
    def active(self) -> bool:
        return self.delta > 0.0


def _rng(spec: DisorderSpec, run_seed: int) -> np.random.Generator:
    seed = run_seed if spec.seed is None else spec.seed
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(_STREAM[spec.kind],)))


def modulator_factors(spec: DisorderSpec, n_roundtrips: int, run_seed: int = 0) -> np.ndarray:
    """Per-roundtrip multipliers ``f = 1 + delta * r`` for the quench window.

    Roundtrip ``T`` uses draw ``T // cadence``; ``r`` is uniform on [-0.5, 0.5].
    """
    if spec.kind != "modulator":
        raise ValueError("modulator_factors needs a modulator spec")
    n_draws = -(-n_roundtrips // spec.cadence)
    if spec.delta == 0.0:
        return np.ones(n_roundtrips)
    r = _rng(spec, run_seed).uniform(-0.5, 0.5, size=n_draws)
    f = 1.0 + spec.delta * r
    return np.repeat(f, spec.cadence)[:n_roundtrips]


def modulator_disorder(t, spec: DisorderSpec, run_seed: int = 0, roundtrip_time: float = 1.0):
    """Strength multiplier ``f(t)`` applied jointly to kappa and kappa'.

    Times before the quench (``t < 0``) return 1 since the modulators are off.
    """
    t = np.asarray(t, dtype=float)
    T = np.floor(t / roundtrip_time).astype(int)
    n = int(T.max()) + 1 if T.size and T.max() >= 0 else 1
    f = modulator_factors(spec, n, run_seed)
    out = np.where(T >= 0, f[np.clip(T, 0, n - 1)], 1.0)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class SourceRealization:
    """Fixed draws of the disordered source.

    ``center_scale`` multiplies the clean pulse on mode 0; ``sidebands``
    holds the constant amplitude injected on each listed mode.
    """

    center_scale: float
    modes: np.ndarray
    sidebands: np.ndarray


def source_realization(spec: DisorderSpec, modes, run_seed: int = 0) -> SourceRealization:
    if spec.kind != "source":
        raise ValueError("source_realization needs a source spec")
    modes = np.asarray(modes, dtype=int)
    side = modes[modes != 0]
    if spec.delta == 0.0:
        return SourceRealization(1.0, side, np.zeros(side.size, complex))
    rng = _rng(spec, run_seed)
    r0 = rng.uniform(-0.5, 0.5)
    amp = rng.uniform(-0.5, 0.5, size=side.size)
    phase = rng.uniform(-0.5, 0.5, size=side.size)
    sidebands = spec.delta * amp * np.exp(2j * np.pi * phase)
    return SourceRealization(1.0 - spec.delta * r0, side, sidebands)


def source_disorder(t, spec: DisorderSpec, source, modes, run_seed: int = 0) -> np.ndarray:
    """Per-mode input amplitudes of the disordered source at time(s) ``t``.

    Returns an array of shape ``t.shape + (len(modes),)``. Mode 0 carries the
    clean pulse scaled by ``1 - delta*R``; every other mode carries the fixed
    sideband ``delta*R' exp(2 pi i R'')`` while the pulse window is open.
    """
    from .ringsim import source_amplitude

    modes = np.asarray(modes, dtype=int)
    t = np.asarray(t, dtype=float)
    real = source_realization(spec, modes, run_seed)
    out = np.zeros(t.shape + (modes.size,), dtype=complex)
    window = (t >= -source.duration) & (t < 0)
    center = np.flatnonzero(modes == 0)
    out[..., center[0]] = real.center_scale * source_amplitude(t, source)
    side_idx = np.flatnonzero(modes != 0)
    out[..., side_idx] = np.where(window[..., None], real.sidebands, 0.0)
    return out


def dump_realization(path, factors=None, source: SourceRealization | None = None) -> list[Path]:
    """Write the realization for replay: CSV of ``f`` per roundtrip, JSON sideband table."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    written = []
    if factors is not None:
        p = path / "modulator_disorder.csv"
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["roundtrip", "f"])
            for k, f in enumerate(factors):
                w.writerow([k, format(float(f), ".17g")])
        written.append(p)
    if source is not None:
        p = path / "source_disorder.json"
        table = {
            "center_scale": float(source.center_scale),
            "sidebands": [
                {"m": int(m), "re": float(a.real), "im": float(a.imag)}
                for m, a in zip(source.modes, source.sidebands)
            ],
        }
        p.write_text(json.dumps(table, indent=1) + "\n")
        written.append(p)
    return written
