"""Spin textures from the reconstructed A and C fields, and their two-time averages."""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptyRecord, MisalignedSamples, NormalizationUndefined
from .ringsim import SignalRecord, field_sum, fmt17

INTENSITY_FLOOR = 1e-6


def reconstruct_fields(record: SignalRecord):
    """Total output fields ``psi_A(t) = sum_m E_m^A e^{-i w_Am t}`` and likewise for C."""
    if record.t.size == 0:
        raise EmptyRecord("record has no samples")
    if record.e_a is None:
        return record.psi_a, record.psi_c
    return (field_sum(record.e_a, record.omega_a, record.t),
            field_sum(record.e_c, record.omega_c, record.t))


@dataclass(frozen=True)
class SpinTimeSeries:
    """Raw and intensity-normalized ``<sigma_z>``, ``<sigma_y>`` per sample.

    Normalized values are NaN where the intensity is below the floor.
    """

    t: np.ndarray
    sz: np.ndarray
    sy: np.ndarray
    intensity: np.ndarray
    sz_norm: np.ndarray
    sy_norm: np.ndarray
    samples_per_roundtrip: int = 160
    roundtrip_time: float = 1.0


def spin_textures(psi_a, psi_c, t, *, samples_per_roundtrip: int = 160,
                  roundtrip_time: float = 1.0, floor: float = INTENSITY_FLOOR) -> SpinTimeSeries:
    """``sz = |psi_A|^2 - |psi_C|^2`` and ``sy = -i psi_A* psi_C e^{iWt/4} + c.c.``.

    The ``e^{iWt/4}`` factor removes the quarter-FSR carrier offset between
    the A and C ladders. Normalized variants divide by ``I = |psi_A|^2 + |psi_C|^2``
    where ``I > floor * max(I)``.
    """
    psi_a = np.asarray(psi_a, dtype=complex)
    psi_c = np.asarray(psi_c, dtype=complex)
    t = np.asarray(t, dtype=float)
    W = 2 * np.pi / roundtrip_time
    ia = np.abs(psi_a) ** 2
    ic = np.abs(psi_c) ** 2
    sz = ia - ic
    cross = np.conj(psi_a) * psi_c * np.exp(1j * W * t / 4)
    sy = 2.0 * cross.imag
    intensity = ia + ic
    eps = floor * intensity.max() if intensity.size else 0.0
    ok = intensity > eps
    if not ok.all():
        warnings.warn(f"{int((~ok).sum())} samples below the intensity floor; "
                      "normalized values masked", NormalizationUndefined, stacklevel=2)
    with np.errstate(invalid="ignore", divide="ignore"):
        szn = np.where(ok, sz / np.where(ok, intensity, 1.0), np.nan)
        syn = np.where(ok, sy / np.where(ok, intensity, 1.0), np.nan)
    return SpinTimeSeries(t, sz, sy, intensity, szn, syn, samples_per_roundtrip, roundtrip_time)


def series_from_record(record: SignalRecord, **kw) -> SpinTimeSeries:
    pa, pc = reconstruct_fields(record)
    return spin_textures(pa, pc, record.t, samples_per_roundtrip=record.samples_per_roundtrip,
                         roundtrip_time=record.roundtrip_time, **kw)


@dataclass(frozen=True)
class TwoTimeGrid:
    """Values on the ``(T, tau)`` grid, rows over roundtrips ``T``.

    ``values`` maps a component name (``sz``, ``sy``, ``sz_norm``, ``sy_norm``,
    ``intensity``) to an array of shape ``(n_T, N_s)``.
    """

    T: np.ndarray
    tau: np.ndarray
    values: dict

    def __getitem__(self, key) -> np.ndarray:
        return self.values[key]

    @property
    def overall(self) -> dict:
        """Last row of every component (meaningful after :func:`running_average`)."""
        return {k: v[-1] for k, v in self.values.items()}


def two_time_reshape(series: SpinTimeSeries, tol: float = 1e-12) -> TwoTimeGrid:
    """Relabel ``t = T T_R + tau`` with integer ``T >= 0``; no data is altered."""
    ns = series.samples_per_roundtrip
    T_R = series.roundtrip_time
    t = series.t
    if t.size == 0:
        raise EmptyRecord("series has no samples")
    j = np.rint(t / T_R * ns)
    if np.abs(t - j * T_R / ns).max() > tol * T_R:
        raise MisalignedSamples("sample times are off the T_R/N_s grid")
    j = j.astype(np.int64)
    if j[0] != 0 or np.any(np.diff(j) != 1) or t.size % ns:
        raise MisalignedSamples("need contiguous samples covering whole roundtrips from t=0",
                                n_samples=int(t.size), samples_per_roundtrip=ns)
    n_T = t.size // ns
    comps = {
        "sz": series.sz, "sy": series.sy, "sz_norm": series.sz_norm,
        "sy_norm": series.sy_norm, "intensity": series.intensity,
    }
    values = {k: np.asarray(v).reshape(n_T, ns) for k, v in comps.items()}
    return TwoTimeGrid(np.arange(n_T), np.arange(ns) / ns * T_R, values)


def time_to_grid(t, samples_per_roundtrip: int = 160, roundtrip_time: float = 1.0):
    """``(T, tau)`` for a time or array of times."""
    t = np.asarray(t, dtype=float)
    T = np.floor(t / roundtrip_time + 1e-12).astype(int)
    return T, t - T * roundtrip_time


def running_average(grid: TwoTimeGrid) -> TwoTimeGrid:
    """``avg(T, tau) = (1/(T+1)) sum_{T'<=T} value(T', tau)``, NaNs skipped."""
    out = {}
    for k, v in grid.values.items():
        good = np.isfinite(v)
        s = np.cumsum(np.where(good, v, 0.0), axis=0)
        n = np.cumsum(good, axis=0)
        with np.errstate(invalid="ignore", divide="ignore"):
            out[k] = np.where(n > 0, s / np.maximum(n, 1), np.nan)
    return TwoTimeGrid(grid.T, grid.tau, out)


def overall_average(grid: TwoTimeGrid, normalized: bool = True):
    """``(avg sz(tau), avg sy(tau))`` over the whole quench window."""
    zk, yk = ("sz_norm", "sy_norm") if normalized else ("sz", "sy")
    return np.nanmean(grid[zk], axis=0), np.nanmean(grid[yk], axis=0)


# --------------------------------------------------------------------------
# export

def export_series_csv(series: SpinTimeSeries, path, psi_a=None, psi_c=None) -> Path:
    """Per-sample CSV; ``|psi_A|`` and ``|psi_C|`` columns are added when given."""
    path = Path(path)
    names = ["t", "sz", "sy", "intensity", "sz_norm", "sy_norm"]
    cols = [series.t, series.sz, series.sy, series.intensity, series.sz_norm, series.sy_norm]
    if psi_a is not None:
        names += ["abs_psi_a", "abs_psi_c"]
        cols += [np.abs(psi_a), np.abs(psi_c)]
    with open(path, "w") as fh:
        fh.write(",".join(names) + "\n")
        np.savetxt(fh, np.column_stack(cols), fmt="%.17g", delimiter=",")
    return path


def export_grid_csv(grid: TwoTimeGrid, key: str, path, label: str = "tau",
                    row_label: str = "T") -> Path:
    """Row-major over ``T``, one column per ``tau`` (or ``k``) value."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([row_label] + [f"{label}={fmt17(x)}" for x in grid.tau])
        for T, row in zip(grid.T, grid[key]):
            w.writerow([fmt17(T)] + [fmt17(x) for x in row])
    return path


def export_profile_csv(path, x, columns: dict, label: str = "tau") -> Path:
    """Columns over a single axis (``tau`` or ``k``)."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([label] + list(columns))
        for i, xi in enumerate(x):
            w.writerow([fmt17(xi)] + [fmt17(columns[c][i]) for c in columns])
    return path


def export_grid_json(grid: TwoTimeGrid, path, keys=("sz_norm", "sy_norm")) -> Path:
    path = Path(path)
    doc = {"T": grid.T.tolist(), "tau": grid.tau.tolist(),
           "values": {k: np.where(np.isfinite(grid[k]), grid[k], None).tolist() for k in keys}}
    path.write_text(json.dumps(doc))
    return path
