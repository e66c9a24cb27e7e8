"""Rotating-wave lattice model: Bloch form, exact spin precession, finite chain.

The spin equation of motion is ``dS/dt = 2 h x S`` for ``H = h0 + h . sigma``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import ValidatedConfig, derive_eta
from .errors import NonFiniteField, UnsupportedPhase
from .spin import SpinTimeSeries, spin_textures
from .topology import (BisSet, TopologyResult, analyze, detect_bis, dynamical_spin_texture,
                       zeroth_chern_number)
from .errors import NoBandInversion

S_DOWN = np.array([0.0, 0.0, -1.0])


def _check_phi(phi: float) -> float:
    if abs(math.remainder(phi, 2 * math.pi)) < 1e-9:
        return 0.0
    if abs(math.remainder(phi - math.pi, 2 * math.pi)) < 1e-9:
        return math.pi
    raise UnsupportedPhase(f"phi={phi!r} is not 0 or pi", phi=phi)


@dataclass(frozen=True)
class BlochHamiltonian:
    k: np.ndarray
    d: float
    hx: np.ndarray
    hy: np.ndarray
    hz: np.ndarray
    h0: np.ndarray
    kappa: float
    eta: float
    phi: float

    @property
    def h(self) -> np.ndarray:
        """Stacked ``(..., 3)`` vector ``(hx, hy, hz)``."""
        return np.stack(np.broadcast_arrays(self.hx, self.hy, self.hz), axis=-1)


def bloch_vector(k, kappa: float, eta: float, phi: float, d: float = 1.0) -> BlochHamiltonian:
    """``phi = pi``: ``h = (0, -2 eta sin kd, -2 kappa cos kd)``; ``phi = 0``: ``h = (2 eta cos kd, 0, 0)``, ``h0 = 2 kappa cos kd``."""
    phi = _check_phi(phi)
    k = np.asarray(k, dtype=float)
    c, s = np.cos(k * d), np.sin(k * d)
    zero = np.zeros_like(k)
    if phi == math.pi:
        return BlochHamiltonian(k, d, zero, -2 * eta * s, -2 * kappa * c, zero, kappa, eta, phi)
    return BlochHamiltonian(k, d, 2 * eta * c, zero, zero.copy(), 2 * kappa * c, kappa, eta, phi)


def _hvec(h) -> np.ndarray:
    return h.h if isinstance(h, BlochHamiltonian) else np.asarray(h, dtype=float)


def evolve_spin(h, S0, t) -> np.ndarray:
    """Rotate ``S0`` about ``h/|h|`` by ``2|h|t`` (Rodrigues); ``h = 0`` leaves ``S0`` fixed.

    Broadcasts over leading axes of ``h`` and over ``t``: the result has shape
    ``broadcast(h[..., 0], t) + (3,)``.
    """
    hv = _hvec(h)
    S0 = np.asarray(S0, dtype=float)
    t = np.asarray(t, dtype=float)
    mag = np.linalg.norm(hv, axis=-1)
    safe = np.where(mag > 0, mag, 1.0)
    n = hv / safe[..., None]
    theta = 2.0 * mag * t
    n, theta = np.broadcast_arrays(n, theta[..., None])
    theta = theta[..., 0]
    S0 = np.broadcast_to(S0, n.shape)
    c, s = np.cos(theta)[..., None], np.sin(theta)[..., None]
    ndot = np.sum(n * S0, axis=-1, keepdims=True)
    out = S0 * c + np.cross(n, S0) * s + n * ndot * (1 - c)
    return np.where(np.broadcast_to(mag[..., None] > 0, out.shape), out, S0)


def closed_form_average(h, S0=S_DOWN) -> np.ndarray:
    """Infinite-horizon average ``h_hat (h_hat . S0)``; ``S0`` where ``h = 0``."""
    hv = _hvec(h)
    S0 = np.asarray(S0, dtype=float)
    mag = np.linalg.norm(hv, axis=-1, keepdims=True)
    n = hv / np.where(mag > 0, mag, 1.0)
    avg = n * np.sum(n * S0, axis=-1, keepdims=True)
    return np.where(mag > 0, avg, np.broadcast_to(S0, avg.shape))


def time_averaged_spin(h, S0=S_DOWN, horizon: float = 1.0, *, max_phase_step: float = 0.2,
                       min_samples: int = 4096, chunk: int = 2048):
    """Running mean of ``evolve_spin`` over ``[0, horizon)`` and its closed-form limit.

    Uses ``n`` uniform samples with the fastest precession advancing by at
    most ``max_phase_step`` radians per sample. Returns ``(numeric, closed)``.
    """
    hv = _hvec(h)
    wmax = 2.0 * float(np.max(np.linalg.norm(hv, axis=-1), initial=0.0))
    n = max(min_samples, int(math.ceil(wmax * horizon / max_phase_step)))
    dt = horizon / n
    acc = np.zeros(np.shape(hv))
    for j0 in range(0, n, chunk):
        t = dt * np.arange(j0, min(n, j0 + chunk))
        S = evolve_spin(hv[..., None, :], S0, t)
        acc += S.sum(axis=-2)
    return acc / n, closed_form_average(hv, S0)


@dataclass(frozen=True)
class KspaceScan:
    """Averages over a uniform Brillouin-zone grid and the derived invariants."""

    k: np.ndarray
    t_snap: np.ndarray
    running: np.ndarray
    average: np.ndarray
    closed: np.ndarray
    result: TopologyResult
    hamiltonian: BlochHamiltonian


def kspace_grid(n_k: int = 256, d: float = 1.0) -> np.ndarray:
    return -np.pi / d + 2 * np.pi / d * np.arange(n_k) / n_k


def kspace_quench_scan(kappa: float, eta: float, phi: float, n_k: int = 256,
                       horizon: float | None = None, *, d: float = 1.0, S0=S_DOWN,
                       n_snap: int = 200, derivative: str = "central",
                       max_phase_step: float = 0.2) -> KspaceScan:
    """Quench every momentum from ``S0``, average, and run the topology pipeline on ``k``.

    ``horizon`` defaults to ``1e4 / kappa``. If detection does not return
    exactly two inversion points (the gapless ``phi = 0`` band gives a
    continuum of vanishing averages), the texture is evaluated at the
    gap-closing momenta ``kd = +-pi/2`` and the substitution is noted.
    """
    if n_k < 64:
        raise ValueError("n_k must be >= 64")
    horizon = 1e4 / kappa if horizon is None else horizon
    k = kspace_grid(n_k, d)
    H = bloch_vector(k, kappa, eta, phi, d)
    hv = H.h
    wmax = 2.0 * float(np.max(np.linalg.norm(hv, axis=-1), initial=0.0))
    n = max(4096, int(math.ceil(wmax * horizon / max_phase_step)))
    n_snap = max(1, min(n_snap, n))
    n = -(-n // n_snap) * n_snap
    dt = horizon / n
    per = n // n_snap
    acc = np.zeros((n_k, 3))
    running = np.zeros((n_snap, n_k, 3))
    for s in range(n_snap):
        for j0 in range(s * per, (s + 1) * per, 2048):
            t = dt * np.arange(j0, min((s + 1) * per, j0 + 2048))
            acc += evolve_spin(hv[:, None, :], S0, t).sum(axis=1)
        running[s] = acc / ((s + 1) * per)
    avg = running[-1]
    closed = closed_form_average(hv, S0)
    period = 2 * np.pi / d
    try:
        bis = detect_bis(k, avg[:, 2], avg[:, 1], period=period)
    except NoBandInversion:
        bis = None
    if bis is not None and bis.count == 2:
        res = analyze(k, avg[:, 2], avg[:, 1], period=period, derivative=derivative)
    else:
        found = 0 if bis is None else bis.count
        idx = np.array([np.argmin(np.abs(k + np.pi / (2 * d))), np.argmin(np.abs(k - np.pi / (2 * d)))])
        nrm = np.hypot(avg[idx, 2], avg[idx, 1])
        forced = BisSet(k[idx], idx, nrm, float("nan"))
        fld = dynamical_spin_texture(k, avg[:, 2], avg[:, 1], forced, period=period,
                                     derivative=derivative, strict=False)
        res = zeroth_chern_number(fld, notes=(f"detected {found} candidates; texture evaluated "
                                              "at the gap-closing momenta",))
    t_snap = dt * per * np.arange(1, n_snap + 1)
    return KspaceScan(k, t_snap, running, avg, closed, res, H)


# --------------------------------------------------------------------------
# finite chain

def chain_hamiltonian(n_sites: int, kappa: float, eta: float, phi: float) -> np.ndarray:
    """Single-excitation matrix over ``[a_0..a_{M-1}, c_0..c_{M-1}]`` with open ends."""
    phi = _check_phi(phi)
    M = n_sites
    e = np.exp(1j * phi).real
    H = np.zeros((2 * M, 2 * M), dtype=complex)
    i = np.arange(M - 1)
    H[i, i + 1] = H[i + 1, i] = e * kappa
    H[M + i, M + i + 1] = H[M + i + 1, M + i] = kappa
    # eta (a_m^+ c_{m+1} + h.c.) + e^{i phi} eta (c_m^+ a_{m+1} + h.c.)
    H[i, M + i + 1] = H[M + i + 1, i] = eta
    H[M + i, i + 1] = H[i + 1, M + i] = e * eta
    return H


@dataclass(frozen=True)
class ChainRun:
    series: SpinTimeSeries
    psi_a: np.ndarray
    psi_c: np.ndarray
    norm_drift: float


def chain_evolve(config, duration: float | None = None, *, eta: float | None = None,
                 kappa: float | None = None, samples_per_roundtrip: int | None = None,
                 chunk: int = 16000) -> ChainRun:
    """Evolve ``c_0 = 1`` under the chain Hamiltonian by eigendecomposition.

    The site-summed fields ``psi_A(t) = sum_m a_m(t) e^{-i w_Am t}`` (and C)
    are formed on the same sample grid as the full-wave record so both
    pipelines share the spin-texture code. ``eta`` defaults to ``kappa' gamma^2``.
    """
    cfg = config.config if isinstance(config, ValidatedConfig) else config
    kappa = cfg.modulator("A").strength if kappa is None else kappa
    eta = derive_eta(cfg) if eta is None else eta
    duration = cfg.time.modulation_duration if duration is None else duration
    ns = cfg.time.samples_per_roundtrip if samples_per_roundtrip is None else samples_per_roundtrip
    T_R = cfg.units.base_time
    W = 2 * np.pi / T_R
    modes = np.arange(cfg.m_min, cfg.m_max + 1)
    M = modes.size
    H = chain_hamiltonian(M, kappa, eta, cfg.phi)
    E, V = np.linalg.eigh(H)
    psi0 = np.zeros(2 * M, complex)
    psi0[M + int(np.flatnonzero(modes == cfg.source.mode)[0])] = 1.0
    coef = V.conj().T @ psi0
    n = int(round(duration * ns / T_R))
    t_all = np.arange(n) / ns * T_R
    pa = np.empty(n, complex)
    pc = np.empty(n, complex)
    VA, VC = V[:M], V[M:]
    for j0 in range(0, n, chunk):
        t = t_all[j0:j0 + chunk]
        amp = coef[None, :] * np.exp(-1j * np.outer(t, E))
        ca = np.exp(-1j * np.outer(t, modes * W))
        cc = np.exp(-1j * np.outer(t, modes * W + W / 4))
        pa[j0:j0 + chunk] = ((ca @ VA) * amp).sum(axis=1)
        pc[j0:j0 + chunk] = ((cc @ VC) * amp).sum(axis=1)
    final = V @ (coef * np.exp(-1j * E * duration))
    drift = abs(np.vdot(final, final).real - 1.0)
    if not np.isfinite(drift) or not (np.isfinite(pa).all() and np.isfinite(pc).all()):
        raise NonFiniteField("chain evolution produced non-finite amplitudes")
    series = spin_textures(pa, pc, t_all, samples_per_roundtrip=ns, roundtrip_time=T_R)
    return ChainRun(series, pa, pc, drift)
