"""Band inversion points, the dynamical spin texture ``g`` and the invariants.

All functions work on a periodic grid ``x`` (intra-roundtrip time ``tau``
or lattice momentum ``k``) with period ``period``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (DegenerateDerivative, GaplessSpectrum, NoBandInversion, TopologyError,
                     UnexpectedBisCount, Undersampled)

BIS_THRESHOLD = 0.6
RESIDUAL_LIMIT = 0.2
GZ_LIMIT = 0.1
DEGENERATE_RATIO = 1e-3


@dataclass(frozen=True)
class BisSet:
    """Detected inversion points.

    ``x`` holds the refined locations, ``index`` the nearest grid indices and
    ``residuals`` the averaged-polarization norm there.
    """

    x: np.ndarray
    index: np.ndarray
    residuals: np.ndarray
    threshold: float

    @property
    def count(self) -> int:
        return self.x.size

    @property
    def indeterminate(self) -> bool:
        return self.count != 2


def detect_bis(x, avg_z, avg_y, *, period: float, threshold: float = BIS_THRESHOLD,
               relative: bool = True) -> BisSet:
    """Local minima of ``|(avg sz, avg sy)|`` below the threshold.

    With ``relative=True`` the threshold is a fraction of the largest norm on
    the grid, which keeps detection independent of the finite averaging
    horizon. Each candidate is refined to the sign change of ``avg sy`` in
    its two neighboring intervals (linear interpolation), or to the vertex of
    a parabola through the three norms when ``avg sy`` does not change sign.

    Raises
    ------
    NoBandInversion
        If no candidate passes the threshold.
    """
    x = np.asarray(x, dtype=float)
    z = np.asarray(avg_z, dtype=float)
    y = np.asarray(avg_y, dtype=float)
    n = np.hypot(z, y)
    n = np.where(np.isfinite(n), n, np.inf)
    N = n.size
    h = period / N
    finite = n[np.isfinite(n)]
    if finite.size == 0:
        raise NoBandInversion("averaged polarization undefined everywhere")
    limit = threshold * finite.max() if relative else threshold
    left = np.roll(n, 1)
    right = np.roll(n, -1)
    cand = np.flatnonzero((n < left) & (n <= right) & (n < limit))
    if cand.size == 0:
        raise NoBandInversion("no vanishing averaged polarization", limit=float(limit))
    locs = []
    for i in cand:
        ym, y0, yp = y[i - 1], y[i], y[(i + 1) % N]
        if y0 == 0.0:
            off = 0.0
        elif np.sign(ym) != np.sign(y0):
            off = -1.0 + ym / (ym - y0)
        elif np.sign(yp) != np.sign(y0):
            off = y0 / (y0 - yp)
        else:
            nm, n0, np_ = n[i - 1], n[i], n[(i + 1) % N]
            den = nm - 2 * n0 + np_
            off = 0.5 * (nm - np_) / den if den > 0 else 0.0
            off = float(np.clip(off, -0.5, 0.5))
        locs.append(np.remainder(x[0] + (i + off) * h - x[0], period) + x[0])
    locs = np.array(locs)
    order = np.argsort(locs)
    return BisSet(locs[order], cand[order], n[cand][order], float(limit))


@dataclass(frozen=True)
class DynamicalField:
    """``g(x)`` normalized so that ``max |g| = 1``.

    ``region`` is +1 outside the pair of inversion points, -1 in between and
    0 at the inversion points themselves. ``g_bis`` is ``[[gz1, gy1], [gz2, gy2]]``.
    """

    x: np.ndarray
    gz: np.ndarray
    gy: np.ndarray
    norm: float
    region: np.ndarray
    bis: BisSet
    g_bis: np.ndarray
    derivative: str
    degenerate: tuple = ()


def _regions(N: int, i1: int, i2: int) -> np.ndarray:
    idx = np.arange(N)
    s = np.where((idx > i1) & (idx < i2), -1, 1)
    s[[i1, i2]] = 0
    return s


def dynamical_spin_texture(x, avg_z, avg_y, bis: BisSet, *, period: float,
                           derivative: str = "central", strict: bool = True) -> DynamicalField:
    """Dynamical texture built from the overall averages.

    At the two inversion points ``g`` is the derivative of the averaged
    polarization taken in the direction pointing from the region between
    them to the region outside; elsewhere ``g = s * avg`` with ``s = -1``
    between and ``+1`` outside. ``derivative`` selects a centered difference
    over the two neighboring cells (``"central"``) or a single outward step
    (``"one-sided"``). The whole field is divided by its largest norm.

    Raises
    ------
    UnexpectedBisCount
        Unless exactly two inversion points are given.
    DegenerateDerivative
        If ``strict`` and a derivative is shorter than ``1e-3`` of the
        normalization; the computed field is attached as ``err.field``.
    """
    if bis.count != 2:
        raise UnexpectedBisCount(f"need two inversion points, got {bis.count}",
                                 locations=bis.x.tolist())
    z = np.asarray(avg_z, dtype=float)
    y = np.asarray(avg_y, dtype=float)
    N = z.size
    h = period / N
    i1, i2 = (int(i) for i in bis.index)
    region = _regions(N, i1, i2)
    vec = np.stack([region * z, region * y], axis=1).astype(float)
    for i, outward in ((i1, -1), (i2, +1)):
        if derivative == "central":
            d = (np.array([z[(i + 1) % N], y[(i + 1) % N]])
                 - np.array([z[i - 1], y[i - 1]])) / (2 * h)
            d = outward * d
        elif derivative == "one-sided":
            j = (i + outward) % N
            d = (np.array([z[j], y[j]]) - np.array([z[i], y[i]])) / h
        else:
            raise ValueError(f"unknown derivative scheme {derivative!r}")
        vec[i] = d
    norms = np.hypot(vec[:, 0], vec[:, 1])
    norm = float(np.nanmax(norms))
    if not norm > 0:
        raise DegenerateDerivative("averaged polarization vanishes identically")
    g = vec / norm
    degenerate = tuple(int(i) for i in (i1, i2) if norms[i] < DEGENERATE_RATIO * norm)
    fld = DynamicalField(np.asarray(x, float), g[:, 0], g[:, 1], norm, region, bis,
                         g[[i1, i2]], derivative, degenerate)
    if strict and degenerate:
        err = DegenerateDerivative("finite difference at an inversion point is degenerate",
                                   indices=list(degenerate))
        err.field = fld
        raise err
    return fld


@dataclass(frozen=True)
class TopologyResult:
    bis: BisSet | None
    field: DynamicalField | None
    c0: int | None
    classification: str
    residual: float | None
    gz_ok: bool | None
    notes: tuple = ()

    def to_dict(self) -> dict:
        g = []
        if self.field is not None:
            g = [{"tau": float(a), "gy": float(b), "gz": float(c)}
                 for a, b, c in zip(self.field.x, self.field.gy, self.field.gz)]
        return {
            "tau_bis": [] if self.bis is None else [float(v) for v in self.bis.x],
            "g": g,
            "c0": self.c0,
            "classification": self.classification,
            "residuals": {
                "rounding": self.residual,
                "bis": [] if self.bis is None else [float(v) for v in self.bis.residuals],
                "g_bis": None if self.field is None else self.field.g_bis.tolist(),
                "gz_ok": self.gz_ok,
            },
            "notes": list(self.notes),
        }


def zeroth_chern_number(field: DynamicalField, notes=()) -> TopologyResult:
    """``C0 = round((gy(x2) - gy(x1)) / 2)`` with rounding residual and a ``gz`` check."""
    gy1, gy2 = field.g_bis[0, 1], field.g_bis[1, 1]
    raw = (gy2 - gy1) / 2.0
    c0 = int(np.rint(raw))
    residual = float(abs(raw - c0))
    gz_ok = bool(np.all(np.abs(field.g_bis[:, 0]) < GZ_LIMIT))
    notes = list(notes)
    if field.degenerate:
        notes.append("DegenerateDerivative: no signed crossing at an inversion point")
    if residual >= RESIDUAL_LIMIT:
        cls = "indeterminate"
        notes.append(f"rounding residual {residual:.3f} >= {RESIDUAL_LIMIT}")
    elif not gz_ok:
        cls = "indeterminate"
        notes.append("gz at an inversion point exceeds the tolerance")
    else:
        cls = "nontrivial" if abs(c0) == 1 else "trivial" if c0 == 0 else "indeterminate"
    return TopologyResult(field.bis, field, c0, cls, residual, gz_ok, tuple(notes))


def analyze(x, avg_z, avg_y, *, period: float, threshold: float = BIS_THRESHOLD,
            derivative: str = "central") -> TopologyResult:
    """Detection, texture and invariant with the error cases folded into the result.

    ``NoBandInversion`` is reported as trivial (``C0 = 0``), a count other
    than two as indeterminate, and degenerate derivatives enter the invariant
    as computed.
    """
    try:
        bis = detect_bis(x, avg_z, avg_y, period=period, threshold=threshold)
    except NoBandInversion as err:
        return TopologyResult(None, None, 0, "trivial", 0.0, None, (f"NoBandInversion: {err.message}",))
    if bis.indeterminate:
        return TopologyResult(bis, None, None, "indeterminate", None, None,
                              (f"UnexpectedBisCount: {bis.count}",))
    field_ = dynamical_spin_texture(x, avg_z, avg_y, bis, period=period,
                                    derivative=derivative, strict=False)
    return zeroth_chern_number(field_)


def save_result(result: TopologyResult, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(result.to_dict(), indent=1) + "\n")
    return path


def winding_number(h, n_k: int = 256, *, d: float = 1.0) -> int:
    """Winding of ``angle(h_z + i h_y)`` over ``k`` in ``[-pi/d, pi/d)``.

    ``h`` is a callable returning ``(h_y, h_z)`` for an array of momenta, or
    a pair of pre-sampled arrays.

    Raises
    ------
    GaplessSpectrum
        If ``|h| < 1e-12`` at some sample.
    Undersampled
        If ``n_k < 64`` or an angular step exceeds ``pi/2``.
    """
    if callable(h):
        if n_k < 64:
            raise Undersampled("need at least 64 momenta", n_k=n_k)
        k = -np.pi / d + 2 * np.pi / d * np.arange(n_k) / n_k
        hy, hz = h(k)
    else:
        hy, hz = (np.asarray(a, float) for a in h)
        if hy.size < 64:
            raise Undersampled("need at least 64 momenta", n_k=int(hy.size))
    hy = np.broadcast_to(np.asarray(hy, float), np.shape(hz))
    hz = np.asarray(hz, float)
    if np.min(np.hypot(hy, hz)) < 1e-12:
        raise GaplessSpectrum("h(k) vanishes on the Brillouin zone")
    ang = np.angle(hz + 1j * hy)
    step = np.diff(np.r_[ang, ang[0]])
    step = (step + np.pi) % (2 * np.pi) - np.pi
    if np.max(np.abs(step)) > np.pi / 2:
        raise Undersampled("angular step exceeds pi/2", max_step=float(np.max(np.abs(step))))
    return int(np.rint(step.sum() / (2 * np.pi)))


__all__ = [
    "BisSet", "DynamicalField", "TopologyResult", "TopologyError", "analyze", "detect_bis",
    "dynamical_spin_texture", "save_result", "winding_number", "zeroth_chern_number",
]
