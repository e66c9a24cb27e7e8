"""Full-wave propagation of modal envelopes around rings A, B and C.

The public operations come in two flavors. The small functions
(``advance_propagation``, ``apply_ring_modulator`` ...) are plain numpy
and act on a :class:`FieldState` in physical cell order; they document the
update rules and serve as the reference. :func:`run_quench` drives the
compiled kernel in ``_kernel`` through the load and quench windows.
"""

from __future__ import annotations

import struct
import time as _time
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.special import jv

from . import _kernel
from .config import ValidatedConfig, drive_phase, validate
from .disorder import modulator_factors, source_realization
from .errors import EdgeLeakage, NonFiniteField, RecordFormatError


# --------------------------------------------------------------------------
# grid layout

@dataclass(frozen=True)
class RingLattice:
    """Grid sizes, element cells and roundtrip factors of one configuration."""

    modes: np.ndarray
    cells_a: int
    cells_b: int
    cells_c: int
    cells: np.ndarray
    wrap_a: np.ndarray
    wrap_b: np.ndarray
    wrap_c: np.ndarray
    omega_a: np.ndarray
    omega_c: np.ndarray
    omega_b: np.ndarray
    dt: float
    steps_per_rt: int
    stride: int

    @property
    def n_modes(self) -> int:
        return self.modes.size


def build_lattice(vc: ValidatedConfig) -> RingLattice:
    cfg = vc.config
    N = cfg.time.cells_per_length
    L = cfg.units.base_length
    T_R = vc.roundtrip_time
    W = vc.fsr
    m = np.arange(cfg.m_min, cfg.m_max + 1)
    ra, rb, rc = cfg.ring("A"), cfg.ring("B"), cfg.ring("C")
    omega_a = ra.ladder_offset + m * ra.ladder_spacing
    omega_c = rc.ladder_offset + m * rc.ladder_spacing
    omega_b = (m[:, None] * W + np.arange(4)[None, :] * W / 4).ravel()

    def wrap(omega, ring):
        phase = omega * ring.circumference_multiple * T_R + ring.theta
        # evaluate the integer-cycle part exactly so resonant carriers stay at 1
        return np.exp(1j * np.remainder(phase, 2 * np.pi))

    cell = lambda x: int(round(x * N / L))
    c = {cp.name: cp for cp in cfg.couplers}
    cells = np.array([
        cell(cfg.modulator("A").position), cell(cfg.modulator("C").position),
        cell(cfg.modulator("BA").position), cell(cfg.modulator("BC").position),
        cell(c["AB"].positions[0]), cell(c["AB"].positions[1]),
        cell(c["CB"].positions[0]), cell(c["CB"].positions[1]),
        cell(c["A_in"].positions[0]), cell(c["A_out"].positions[0]),
        cell(c["C_in"].positions[0]), cell(c["C_out"].positions[0]),
    ], dtype=np.int64)
    return RingLattice(
        modes=m,
        cells_a=N * ra.circumference_multiple,
        cells_b=N * rb.circumference_multiple,
        cells_c=N * rc.circumference_multiple,
        cells=cells,
        wrap_a=wrap(omega_a, ra),
        wrap_b=wrap(omega_b, rb),
        wrap_c=wrap(omega_c, rc),
        omega_a=omega_a,
        omega_c=omega_c,
        omega_b=omega_b,
        dt=T_R / N,
        steps_per_rt=N,
        stride=N // cfg.time.samples_per_roundtrip,
    )


# --------------------------------------------------------------------------
# reference operations (numpy)

@dataclass
class FieldState:
    """Envelope amplitudes in physical cell order.

    ``a`` and ``c`` have shape ``(cells, modes)``; ``b`` has shape
    ``(4 * cells, 4 * modes)`` over ring B's quarter-FSR ladder, of which
    entries ``4 i`` are the BA components and ``4 i + 1`` the BC components.
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    step: int = 0
    t: float = 0.0

    @classmethod
    def empty(cls, lattice: RingLattice, t0: float = 0.0) -> "FieldState":
        M = lattice.n_modes
        return cls(np.zeros((lattice.cells_a, M), complex),
                   np.zeros((lattice.cells_b, 4 * M), complex),
                   np.zeros((lattice.cells_c, M), complex), 0, t0)

    @property
    def ba(self) -> np.ndarray:
        return self.b[:, 0::4]

    @property
    def bc(self) -> np.ndarray:
        return self.b[:, 1::4]

    def norm2(self) -> float:
        return float(sum(np.vdot(x, x).real for x in (self.a, self.b, self.c)))


def advance_propagation(state: FieldState, lattice: RingLattice) -> FieldState:
    """Shift every ladder by one cell; content wrapping into cell 0 takes the roundtrip factor."""
    a = np.roll(state.a, 1, axis=0)
    b = np.roll(state.b, 1, axis=0)
    c = np.roll(state.c, 1, axis=0)
    a[0] *= lattice.wrap_a
    b[0] *= lattice.wrap_b
    c[0] *= lattice.wrap_c
    return FieldState(a, b, c, state.step + 1, state.t + lattice.dt)


def sideband_coefficients(strength: float, phase: float, order: int):
    """``(cplus, cminus)`` with ``cplus[j] = J_j e^{ij phase}`` and ``cminus[j] = J_{-j} e^{-ij phase}``."""
    j = np.arange(order + 1)
    J = jv(j, strength)
    cplus = J * np.exp(1j * j * phase)
    cminus = (-1.0) ** j * J * np.exp(-1j * j * phase)
    return cplus.astype(complex), cminus.astype(complex)


def exact_order(strength: float, cutoff: float = 1e-16) -> int:
    """Largest Bessel order with ``|J_j(strength)| >= cutoff`` (at least 1)."""
    if strength == 0:
        return 1
    j = 1
    while abs(jv(j + 1, strength)) >= cutoff and j < 64:
        j += 1
    return j


def _modulate(row, step, cplus, cminus):
    row = np.asarray(row, dtype=complex)
    out = cplus[0] * row
    n = row.size
    for j in range(1, len(cplus)):
        d = j * step
        if d >= n:
            break
        out[d:] += cplus[j] * row[:-d]
        out[:-d] += cminus[j] * row[d:]
    return out


def apply_ring_modulator(ladder, strength: float, phase: float, order: int = 1) -> np.ndarray:
    """Phase-modulator sideband rule on an A- or C-ladder.

    With ``order=1``: ``E_m <- J0 E_m + J1 E_{m-1} e^{i phase} - J1 E_{m+1} e^{-i phase}``,
    dropping neighbors outside the ladder. ``phase`` is the sideband phase
    (see :func:`sideband_phase`).
    """
    cplus, cminus = sideband_coefficients(strength, phase, order)
    return _modulate(ladder, 1, cplus, cminus)


def apply_auxiliary_modulators(row_ba, row_bc, strength_ba: float, phase_ba: float,
                               strength_bc: float, phase_bc: float,
                               model: str = "exact", cutoff: float = 1e-16):
    """Ring-B modulators on the quarter-FSR ladder of the cells they occupy.

    ``row_ba`` is the ring-B ladder at PM BA (drive 5 Omega/4, five quarter
    steps) and ``row_bc`` at PM BC (3 Omega/4, three quarter steps). In
    ``"printed"`` mode only the one-way resonant terms act:
    ``BA_m <- J0 BA_m - J1 BC_{m+1} e^{-i phase_ba}`` and
    ``BC_m <- J0 BC_m - J1 BA_{m+1} e^{-i phase_bc}``.
    """
    out = []
    for row, kp, ph, step, fam in ((row_ba, strength_ba, phase_ba, 5, 0),
                                   (row_bc, strength_bc, phase_bc, 3, 1)):
        row = np.asarray(row, dtype=complex)
        if model == "printed":
            cplus, cminus = sideband_coefficients(kp, ph, 1)
            new = row.copy()
            idx = np.arange(fam, row.size, 4)
            nb = np.zeros(idx.size, complex)
            ok = idx + step < row.size
            nb[ok] = row[idx[ok] + step]
            new[idx] = cplus[0] * row[idx] + cminus[1] * nb
            out.append(new)
        else:
            cplus, cminus = sideband_coefficients(kp, ph, exact_order(kp, cutoff))
            out.append(_modulate(row, step, cplus, cminus))
    return tuple(out)


def apply_evanescent_coupler(a, b, gamma: float):
    """``(a', b') = (t a - i g b, -i g a + t b)`` with ``t = sqrt(1 - g^2)``."""
    t = np.sqrt(1.0 - gamma * gamma)
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    return t * a - 1j * gamma * b, -1j * gamma * a + t * b


def apply_waveguide_io(ring_cell, gamma_p: float, guide_in=None):
    """Ring-waveguide contact: returns ``(ring_cell', guide_out)``.

    Uses the same unitary as the ring-ring coupler with the waveguide sample
    as second port; ``guide_in`` defaults to zero.
    """
    guide_in = np.zeros_like(np.asarray(ring_cell, dtype=complex)) if guide_in is None else guide_in
    return apply_evanescent_coupler(ring_cell, guide_in, gamma_p)


def source_amplitude(t, spec) -> np.ndarray | float:
    """Clean source pulse ``s [tanh(0.05 (t + T_S - T_O/2)) + tanh(0.05 (-T_O/2 - t))]``.

    Zero outside the load window ``[-T_S, 0)``.
    """
    t = np.asarray(t, dtype=float)
    val = spec.amplitude * (np.tanh(0.05 * (t + spec.duration - spec.ramp / 2))
                            + np.tanh(0.05 * (-spec.ramp / 2 - t)))
    out = np.where((t >= -spec.duration) & (t < 0), val, 0.0)
    return out if out.ndim else float(out)


def sideband_phase(drive: float, waveform: str = "cos") -> float:
    """Phase of the first upper sideband for a drive ``cos(W t + drive)``.

    Jacobi-Anger gives ``exp(i k cos x) = sum_n i^n J_n(k) e^{inx}``, so the
    ``n = 1`` term sits at ``drive + pi/2``; a sine drive has no offset.
    """
    return drive + (np.pi / 2 if waveform == "cos" else 0.0)


# --------------------------------------------------------------------------
# records

@dataclass(frozen=True)
class SignalRecord:
    """Output-guide frequency components sampled over ``[0, T_m)``.

    ``e_a``/``e_c`` have shape ``(samples, modes)`` and may be ``None`` for
    long runs where only the reconstructed fields ``psi_a``/``psi_c`` are
    kept.
    """

    t: np.ndarray
    modes: np.ndarray
    omega_a: np.ndarray
    omega_c: np.ndarray
    e_a: np.ndarray | None
    e_c: np.ndarray | None
    psi_a: np.ndarray
    psi_c: np.ndarray
    samples_per_roundtrip: int
    roundtrip_time: float
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def n_samples(self) -> int:
        return self.t.size


def sample_times(n: int, samples_per_roundtrip: int, roundtrip_time: float = 1.0) -> np.ndarray:
    return np.arange(n) / samples_per_roundtrip * roundtrip_time


def field_sum(E: np.ndarray, omega: np.ndarray, t: np.ndarray) -> np.ndarray:
    """``sum_m E_m(t) exp(-i omega_m t)`` row by row."""
    return (E * np.exp(-1j * (t[:, None] * omega[None, :]))).sum(axis=1)


# --------------------------------------------------------------------------
# driver

class _Coefs:
    """Per-roundtrip modulator coefficient tables for one quench."""

    def __init__(self, vc: ValidatedConfig, factors: np.ndarray):
        cfg = vc.config
        wf = cfg.numerics.waveform
        self.printed = cfg.numerics.b_modulator_model == "printed"
        tabs = {}
        for name in ("A", "C", "BA", "BC"):
            spec = cfg.modulator(name)
            ph = sideband_phase(drive_phase(cfg, name), wf)
            if name in ("A", "C"):
                K = cfg.numerics.ac_sideband_order
            elif self.printed:
                K = 1
            else:
                K = exact_order(spec.strength * float(factors.max(initial=1.0)),
                                cfg.numerics.bessel_cutoff)
            j = np.arange(K + 1)
            J = jv(j[None, :], spec.strength * factors[:, None])
            cp = J * np.exp(1j * j * ph)
            cm = (-1.0) ** j * J * np.exp(-1j * j * ph)
            tabs[name] = (np.ascontiguousarray(cp, complex), np.ascontiguousarray(cm, complex))
        self.tabs = tabs

    def block(self, q0: int, q1: int):
        out = []
        for name in ("A", "C", "BA", "BC"):
            cp, cm = self.tabs[name]
            out += [cp[q0:q1], cm[q0:q1]]
        return out


def _empty_coefs(n_rt: int):
    z = np.zeros((max(n_rt, 1), 2), complex)
    return [z] * 8


class BinaryRecordWriter:
    """Streaming writer for the compact binary record format.

    Layout (little-endian): ``magic`` (8 bytes ``b"HQSIGREC"``), ``version``
    u32, ``samples_per_roundtrip`` u32, ``m_min`` i32, ``n_modes`` u32,
    ``n_samples`` u64, ``roundtrip_time`` f64, ``t0`` f64; then one block per
    sample of ``n_modes`` complex128 A components followed by ``n_modes``
    complex128 C components. Sample times are ``t0 + j T_R / N_s``.
    """

    MAGIC = b"HQSIGREC"
    VERSION = 1
    HEADER = struct.Struct("<8sIIiIQdd")

    def __init__(self, path, samples_per_roundtrip, m_min, n_modes, n_samples, roundtrip_time=1.0):
        self.path = Path(path)
        self.n_modes = n_modes
        self.fh = open(self.path, "wb")
        self.fh.write(self.HEADER.pack(self.MAGIC, self.VERSION, samples_per_roundtrip,
                                       m_min, n_modes, n_samples, roundtrip_time, 0.0))

    def write(self, e_a: np.ndarray, e_c: np.ndarray):
        block = np.concatenate([e_a, e_c], axis=1).astype("<c16")
        self.fh.write(block.tobytes())

    def close(self):
        self.fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_binary_record(path) -> SignalRecord:
    data = Path(path).read_bytes()
    H = BinaryRecordWriter.HEADER
    if len(data) < H.size:
        raise RecordFormatError("file too short for header", path=str(path))
    magic, version, ns, m_min, M, n, T_R, t0 = H.unpack_from(data)
    if magic != BinaryRecordWriter.MAGIC or version != BinaryRecordWriter.VERSION:
        raise RecordFormatError("bad magic or version", path=str(path))
    body = np.frombuffer(data, dtype="<c16", offset=H.size)
    if body.size != n * 2 * M:
        raise RecordFormatError("payload size does not match header", path=str(path))
    body = body.reshape(n, 2, M).astype(complex)
    modes = np.arange(m_min, m_min + M)
    W = 2 * np.pi / T_R
    omega_a = modes * W
    omega_c = modes * W + W / 4
    t = t0 + sample_times(n, ns, T_R)
    e_a, e_c = body[:, 0].copy(), body[:, 1].copy()
    return SignalRecord(t, modes, omega_a, omega_c, e_a, e_c,
                        field_sum(e_a, omega_a, t), field_sum(e_c, omega_c, t), ns, T_R)


def fmt17(x: float) -> str:
    return format(float(x), ".17g")


def export_record_csv(record: SignalRecord, path) -> Path:
    """CSV with columns ``t, m, re_a, im_a, re_c, im_c`` at 17 significant digits."""
    if record.e_a is None:
        raise RecordFormatError("record keeps no per-mode components; use the binary sink")
    path = Path(path)
    n, M = record.e_a.shape
    cols = np.empty((n * M, 6))
    cols[:, 0] = np.repeat(record.t, M)
    cols[:, 1] = np.tile(record.modes, n)
    cols[:, 2] = record.e_a.real.ravel()
    cols[:, 3] = record.e_a.imag.ravel()
    cols[:, 4] = record.e_c.real.ravel()
    cols[:, 5] = record.e_c.imag.ravel()
    with open(path, "w") as fh:
        fh.write("t,m,re_a,im_a,re_c,im_c\n")
        np.savetxt(fh, cols, fmt=["%.17g", "%d", "%.17g", "%.17g", "%.17g", "%.17g"],
                   delimiter=",")
    return path


def read_record_csv(path, samples_per_roundtrip: int = 160, roundtrip_time: float = 1.0) -> SignalRecord:
    arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    modes = np.unique(arr[:, 1].astype(int))
    M = modes.size
    n = arr.shape[0] // M
    t = arr[::M, 0]
    e_a = (arr[:, 2] + 1j * arr[:, 3]).reshape(n, M)
    e_c = (arr[:, 4] + 1j * arr[:, 5]).reshape(n, M)
    W = 2 * np.pi / roundtrip_time
    oa, oc = modes * W, modes * W + W / 4
    return SignalRecord(t, modes, oa, oc, e_a, e_c, field_sum(e_a, oa, t), field_sum(e_c, oc, t),
                        samples_per_roundtrip, roundtrip_time)


def export_fields_csv(record: SignalRecord, path) -> Path:
    """Reconstructed output fields: columns ``t, re_psi_a, im_psi_a, re_psi_c, im_psi_c``."""
    path = Path(path)
    cols = np.column_stack([record.t, record.psi_a.real, record.psi_a.imag,
                            record.psi_c.real, record.psi_c.imag])
    with open(path, "w") as fh:
        fh.write("t,re_psi_a,im_psi_a,re_psi_c,im_psi_c\n")
        np.savetxt(fh, cols, fmt="%.17g", delimiter=",")
    return path


def read_fields_csv(path, samples_per_roundtrip: int = 160, roundtrip_time: float = 1.0) -> SignalRecord:
    arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if arr.shape[1] != 5:
        raise RecordFormatError("field CSV needs five columns", path=str(path))
    empty = np.zeros(0)
    return SignalRecord(arr[:, 0], empty.astype(int), empty, empty, None, None,
                        arr[:, 1] + 1j * arr[:, 2], arr[:, 3] + 1j * arr[:, 4],
                        samples_per_roundtrip, roundtrip_time)


def _source_block(vc, lattice, steps: np.ndarray, real) -> np.ndarray:
    """Per-step, per-mode C input amplitudes for global steps ``steps``."""
    cfg = vc.config
    t = (steps - vc.load_steps) * lattice.dt
    out = np.zeros((steps.size, lattice.n_modes), complex)
    centre = int(np.flatnonzero(lattice.modes == cfg.source.mode)[0])
    out[:, centre] = real.center_scale * source_amplitude(t, cfg.source)
    if real.sidebands.size:
        window = (t >= -cfg.source.duration) & (t < 0)
        idx = np.searchsorted(lattice.modes, real.modes)
        out[np.ix_(window, idx)] = real.sidebands[None, :]
    return out


def run_quench(config, *, keep_modes: bool | None = None, sink=None,
               memory_budget: float = 1.0e9, closed_quench: bool = False) -> SignalRecord:
    """Load ring C with the source pulse, switch the modulators on at ``t = 0``, record.

    Parameters
    ----------
    config : SystemConfig or ValidatedConfig
    keep_modes : bool, optional
        Keep per-mode output components in memory. By default they are kept
        when they fit into ``memory_budget`` bytes.
    sink : BinaryRecordWriter, optional
        Receives every recorded block as it is produced.
    closed_quench : bool
        Detach all four waveguides once the modulators switch on, so the
        quench evolves a closed system (the record is then all zeros and
        ``diagnostics["quench_norms"]`` carries the conservation check).

    Warns
    -----
    EdgeLeakage
        If the boundary modes ever carry more than ``numerics.edge_fraction``
        of the output power.
    """
    vc = config if isinstance(config, ValidatedConfig) else validate(config)
    cfg = vc.config
    lat = build_lattice(vc)
    M = lat.n_modes
    n_rt = vc.quench_roundtrips
    ns = cfg.time.samples_per_roundtrip
    n_samples = n_rt * ns
    if keep_modes is None:
        keep_modes = n_samples * M * 32 <= memory_budget

    factors = modulator_factors(cfg.disorder.modulator, n_rt, cfg.seed)
    real = source_realization(cfg.disorder.source, lat.modes, cfg.seed)
    coefs = _Coefs(vc, factors)

    A = np.zeros((lat.cells_a, M), complex)
    C = np.zeros((lat.cells_c, M), complex)
    B = np.zeros((lat.cells_b, 4 * M), complex)
    gp = np.array([cfg.coupler(n).strength for n in ("A_in", "A_out", "C_in", "C_out")])
    g_ab, g_cb = cfg.coupler("AB").strength, cfg.coupler("CB").strength
    fixed = (lat.wrap_a, lat.wrap_c, lat.wrap_b, lat.cells, g_ab, g_cb, gp)
    chunk = cfg.numerics.chunk_roundtrips
    spr = lat.steps_per_rt
    no_out = np.zeros((0, M), complex)
    t_start = _time.perf_counter()

    # load window: modulators off, source on
    st = 0
    load_norms = []
    done = 0
    while done < vc.load_steps:
        n = min(chunk * spr, vc.load_steps - done)
        src = _source_block(vc, lat, np.arange(done, done + n), real)
        norms = np.zeros(n // spr)
        st = _kernel.advance(A, C, B, st, n, *fixed[:3], fixed[3], g_ab, g_cb, gp,
                             False, spr, *_empty_coefs(1), False,
                             True, src, False, lat.stride, no_out, no_out, norms)
        load_norms.append(norms)
        done += n

    # quench window: modulators on, source off, record
    gp_q = np.zeros(4) if closed_quench else gp
    psi_a, psi_c, keep_a, keep_c, qnorms = [], [], [], [], []
    edge_max = 0.0
    edge_cols = np.r_[0:min(2, M), max(M - 2, 0):M]
    q = 0
    while q < n_rt:
        nq = min(chunk, n_rt - q)
        n = nq * spr
        out_a = np.zeros((nq * ns, M), complex)
        out_c = np.zeros((nq * ns, M), complex)
        norms = np.zeros(nq)
        st = _kernel.advance(A, C, B, st, n, *fixed[:3], fixed[3], g_ab, g_cb, gp_q,
                             True, spr, *coefs.block(q, q + nq), coefs.printed,
                             False, np.zeros((0, M), complex), True, lat.stride,
                             out_a, out_c, norms)
        if not (np.isfinite(norms).all() and np.isfinite(out_a).all() and np.isfinite(out_c).all()):
            raise NonFiniteField("field overflow or NaN during quench", roundtrip=q)
        t = sample_times(nq * ns, ns, vc.roundtrip_time) + q * vc.roundtrip_time
        psi_a.append(field_sum(out_a, lat.omega_a, t))
        psi_c.append(field_sum(out_c, lat.omega_c, t))
        p = np.abs(out_a) ** 2 + np.abs(out_c) ** 2
        tot = p.sum(axis=1)
        live = tot > 0
        if live.any():
            edge_max = max(edge_max, float((p[live][:, np.unique(edge_cols)].sum(axis=1) / tot[live]).max()))
        if sink is not None:
            sink.write(out_a, out_c)
        if keep_modes:
            keep_a.append(out_a)
            keep_c.append(out_c)
        qnorms.append(norms)
        q += nq

    if edge_max > cfg.numerics.edge_fraction:
        warnings.warn(f"boundary modes carry {edge_max:.3g} of the output power", EdgeLeakage,
                      stacklevel=2)
    diag = {
        "runtime_s": _time.perf_counter() - t_start,
        "steps": int(st),
        "load_norms": np.concatenate(load_norms) if load_norms else np.zeros(0),
        "quench_norms": np.concatenate(qnorms) if qnorms else np.zeros(0),
        "max_edge_fraction": edge_max,
        "modulator_factors": factors,
        "source_realization": real,
    }
    return SignalRecord(
        t=sample_times(n_samples, ns, vc.roundtrip_time),
        modes=lat.modes,
        omega_a=lat.omega_a,
        omega_c=lat.omega_c,
        e_a=np.concatenate(keep_a) if keep_modes else None,
        e_c=np.concatenate(keep_c) if keep_modes else None,
        psi_a=np.concatenate(psi_a),
        psi_c=np.concatenate(psi_c),
        samples_per_roundtrip=ns,
        roundtrip_time=vc.roundtrip_time,
        diagnostics=diag,
    )


def reference_run(config, n_load_steps: int | None = None, n_roundtrips: int | None = None):
    """Pure-numpy stepping of the same protocol, for cross-checking the kernel.

    Slow; intended for a handful of roundtrips on small ladders. Returns
    ``(e_a, e_c, state)`` with outputs sampled over the quench window.
    """
    vc = config if isinstance(config, ValidatedConfig) else validate(config)
    cfg = vc.config
    lat = build_lattice(vc)
    n_load = vc.load_steps if n_load_steps is None else n_load_steps
    n_rt = vc.quench_roundtrips if n_roundtrips is None else n_roundtrips
    factors = modulator_factors(cfg.disorder.modulator, n_rt, cfg.seed)
    real = source_realization(cfg.disorder.source, lat.modes, cfg.seed)
    offset = vc.load_steps - n_load
    src = _source_block(vc, lat, np.arange(offset, vc.load_steps), real)
    wf = cfg.numerics.waveform
    model = cfg.numerics.b_modulator_model
    ph = {n: sideband_phase(drive_phase(cfg, n), wf) for n in ("A", "C", "BA", "BC")}
    k = {n: cfg.modulator(n).strength for n in ("A", "C", "BA", "BC")}
    g = {c.name: c.strength for c in cfg.couplers}
    cl = lat.cells
    s = FieldState.empty(lat)
    out_a, out_c = [], []
    total = n_load + n_rt * lat.steps_per_rt
    for step in range(total):
        s = advance_propagation(s, lat)
        a, b, c = s.a, s.b, s.c
        a[cl[4]], b[cl[5], 0::4] = apply_evanescent_coupler(a[cl[4]], b[cl[5], 0::4], g["AB"])
        c[cl[6]], b[cl[7], 1::4] = apply_evanescent_coupler(c[cl[6]], b[cl[7], 1::4], g["CB"])
        quench = step >= n_load
        if quench:
            q = (step - n_load) // lat.steps_per_rt
            f = factors[q]
            order = cfg.numerics.ac_sideband_order
            a[cl[0]] = apply_ring_modulator(a[cl[0]], k["A"] * f, ph["A"], order)
            c[cl[1]] = apply_ring_modulator(c[cl[1]], k["C"] * f, ph["C"], order)
            b[cl[2]], b[cl[3]] = apply_auxiliary_modulators(
                b[cl[2]], b[cl[3]], k["BA"] * f, ph["BA"], k["BC"] * f, ph["BC"], model,
                cfg.numerics.bessel_cutoff)
        a[cl[8]], _ = apply_waveguide_io(a[cl[8]], g["A_in"])
        inp = None if quench else src[step]
        c[cl[10]], _ = apply_waveguide_io(c[cl[10]], g["C_in"], inp)
        a[cl[9]], oa = apply_waveguide_io(a[cl[9]], g["A_out"])
        c[cl[11]], oc = apply_waveguide_io(c[cl[11]], g["C_out"])
        if quench and (step - n_load) % lat.stride == 0:
            out_a.append(oa)
            out_c.append(oc)
    return np.array(out_a).reshape(-1, lat.n_modes), np.array(out_c).reshape(-1, lat.n_modes), s


def with_time(config, *, modulation_roundtrips=None, load_duration=None):
    """Convenience: replace the time windows (and the matching source duration)."""
    t = config.time
    src = config.source
    if modulation_roundtrips is not None:
        t = replace(t, modulation_duration=float(modulation_roundtrips))
    if load_duration is not None:
        t = replace(t, load_duration=float(load_duration))
        src = replace(src, duration=float(load_duration), ramp=min(src.ramp, 0.2 * load_duration))
    return replace(config, time=t, source=src)
