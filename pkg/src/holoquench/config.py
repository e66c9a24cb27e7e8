"""Units, physical system description, derived quantities and validation.

Units are dimensionless: the circumference of ring A is the unit of
length and ``c / n_g = 1``, so the roundtrip time ``T_R`` is 1 and the
free spectral range is ``Omega = 2 pi``.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .disorder import DisorderSpec
from .errors import ConfigError, OverrideError

TWO_PI = 2.0 * math.pi
_ANGLE_TOL = 1e-9


@dataclass(frozen=True)
class SimUnits:
    """Base length ``L`` and the derived roundtrip time and FSR."""

    base_length: float = 1.0
    group_index: float = 1.0
    light_speed: float = 1.0

    @property
    def base_time(self) -> float:
        return self.group_index * self.base_length / self.light_speed

    @property
    def fsr(self) -> float:
        return TWO_PI / self.base_time


@dataclass(frozen=True)
class RingSpec:
    """A ring with its static roundtrip phase and resonance ladder.

    ``ladder_offset`` and ``ladder_spacing`` are angular frequencies; the
    ladder is ``offset + m * spacing``.
    """

    id: str
    circumference_multiple: int
    theta: float
    ladder_offset: float
    ladder_spacing: float


@dataclass(frozen=True)
class ModulatorSpec:
    """Point-like phase modulator.

    ``phase`` is the drive phase of ``kappa cos(Omega_0 t + phase)``; ``None``
    means it follows the global switch ``SystemConfig.phi``.
    """

    name: str
    host: str
    position: float
    strength: float
    frequency: float
    phase: float | None = None


@dataclass(frozen=True)
class CouplerSpec:
    """Evanescent contact between a ring and a ring or a waveguide.

    Waveguide endpoints are written ``"<ring>.in"`` or ``"<ring>.out"``.
    """

    name: str
    endpoints: tuple[str, str]
    strength: float
    positions: tuple[float, float]

    @property
    def waveguide(self) -> str | None:
        e = self.endpoints[1]
        return e.split(".", 1)[1] if "." in e else None


@dataclass(frozen=True)
class SourceSpec:
    """Tanh-ramped pulse injected on one mode of one ring's input guide."""

    ring: str = "C"
    mode: int = 0
    amplitude: float = 1.0
    duration: float = 1000.0
    ramp: float = 200.0


@dataclass(frozen=True)
class TimeSequence:
    """Load window ``[-load_duration, 0)`` then quench window ``[0, modulation_duration)``."""

    load_duration: float = 1000.0
    modulation_duration: float = 15000.0
    samples_per_roundtrip: int = 160
    cells_per_length: int = 160


@dataclass(frozen=True)
class DisorderSettings:
    modulator: DisorderSpec = field(default_factory=lambda: DisorderSpec("modulator"))
    source: DisorderSpec = field(default_factory=lambda: DisorderSpec("source"))


@dataclass(frozen=True)
class Numerics:
    """Numerical model choices.

    Parameters
    ----------
    b_modulator_model : {"exact", "printed"}
        ``"exact"`` applies the full Bessel sideband series of the ring-B
        modulators on ring B's quarter-FSR ladder; ``"printed"`` applies the
        single one-way resonant term per modulator.
    ac_sideband_order : int
        Bessel orders kept by the modulators of rings A and C (1 is the
        first-order rule).
    bessel_cutoff : float
        Orders ``j`` with ``|J_j| < bessel_cutoff`` are dropped in exact mode.
    waveform : {"cos", "sin"}
        Drive waveform; ``"cos"`` puts the first sideband at phase
        ``phase + pi/2``, ``"sin"`` at ``phase``.
    edge_fraction : float
        EdgeLeakage threshold on boundary-mode output fraction.
    chunk_roundtrips : int
        Roundtrips stepped per compiled-kernel call.
    """

    b_modulator_model: str = "exact"
    ac_sideband_order: int = 1
    bessel_cutoff: float = 1e-16
    waveform: str = "cos"
    edge_fraction: float = 0.01
    chunk_roundtrips: int = 50


@dataclass(frozen=True)
class SystemConfig:
    units: SimUnits
    rings: tuple[RingSpec, ...]
    modulators: tuple[ModulatorSpec, ...]
    couplers: tuple[CouplerSpec, ...]
    source: SourceSpec
    time: TimeSequence
    phi: float = math.pi
    m_min: int = -40
    m_max: int = 40
    seed: int = 0
    disorder: DisorderSettings = field(default_factory=DisorderSettings)
    numerics: Numerics = field(default_factory=Numerics)

    def ring(self, rid: str) -> RingSpec:
        return next(r for r in self.rings if r.id == rid)

    def modulator(self, name: str) -> ModulatorSpec:
        return next(m for m in self.modulators if m.name == name)

    def coupler(self, name: str) -> CouplerSpec:
        return next(c for c in self.couplers if c.name == name)

    @property
    def modes(self) -> range:
        return range(self.m_min, self.m_max + 1)


# --------------------------------------------------------------------------
# defaults

def phase_assignment(phi: float) -> dict[str, float]:
    """Drive phases for the global switch: ``phi_A = phi_BC = phi``, ``phi_C = phi_BA = 0``."""
    return {"A": float(phi), "C": 0.0, "BA": 0.0, "BC": float(phi)}


def default_rings(units: SimUnits = SimUnits()) -> tuple[RingSpec, ...]:
    W = units.fsr
    return (
        RingSpec("A", 1, 0.0, 0.0, W),
        RingSpec("B", 4, math.pi, W / 8, W / 4),
        RingSpec("C", 1, 1.5 * math.pi, W / 4, W),
    )


def default_config(
    phi: float = math.pi,
    *,
    kappa: float = 0.0025,
    kappa_prime: float = 0.2,
    gamma: float = 0.1,
    gamma_prime: float = 0.003,
    n_modes: int = 81,
    modulation_roundtrips: int = 15000,
    load_duration: float = 1000.0,
    ramp: float = 200.0,
    seed: int = 0,
) -> SystemConfig:
    """Configuration with the published rates and a symmetric mode range."""
    units = SimUnits()
    W = units.fsr
    half = n_modes // 2
    mods = (
        ModulatorSpec("A", "A", 0.0, kappa, W),
        ModulatorSpec("C", "C", 0.0, kappa, W),
        ModulatorSpec("BA", "B", 2.5, kappa_prime, 1.25 * W),
        ModulatorSpec("BC", "B", 3.5, kappa_prime, 0.75 * W),
    )
    cps = (
        CouplerSpec("AB", ("A", "B"), gamma, (0.5, 0.0)),
        CouplerSpec("CB", ("C", "B"), gamma, (0.5, 2.0)),
        CouplerSpec("A_in", ("A", "A.in"), gamma_prime, (0.25, 0.0)),
        CouplerSpec("A_out", ("A", "A.out"), gamma_prime, (0.75, 0.0)),
        CouplerSpec("C_in", ("C", "C.in"), gamma_prime, (0.25, 0.0)),
        CouplerSpec("C_out", ("C", "C.out"), gamma_prime, (0.75, 0.0)),
    )
    return SystemConfig(
        units=units,
        rings=default_rings(units),
        modulators=mods,
        couplers=cps,
        source=SourceSpec(duration=load_duration, ramp=ramp),
        time=TimeSequence(load_duration=load_duration,
                          modulation_duration=float(modulation_roundtrips)),
        phi=float(phi),
        m_min=-half,
        m_max=n_modes - 1 - half,
        seed=seed,
    )


def with_rates(config: SystemConfig, *, kappa=None, kappa_prime=None,
               gamma=None, gamma_prime=None) -> SystemConfig:
    """Return ``config`` with modulator and coupler strengths replaced."""
    mods = []
    for m in config.modulators:
        new = kappa if m.name in ("A", "C") else kappa_prime
        mods.append(m if new is None else replace(m, strength=float(new)))
    cps = []
    for c in config.couplers:
        new = gamma_prime if c.waveguide else gamma
        cps.append(c if new is None else replace(c, strength=float(new)))
    return replace(config, modulators=tuple(mods), couplers=tuple(cps))


# --------------------------------------------------------------------------
# validation

@dataclass(frozen=True)
class ValidatedConfig:
    """A checked configuration plus derived quantities."""

    config: SystemConfig
    roundtrip_time: float
    fsr: float
    eta: float
    n_modes: int
    load_steps: int
    quench_roundtrips: int
    phases: dict

    def __getattr__(self, name):
        if name.startswith("__") or name == "config":
            raise AttributeError(name)
        return getattr(self.config, name)


_MOD_LAYOUT = {"A": ("A", 1.0), "C": ("C", 1.0), "BA": ("B", 1.25), "BC": ("B", 0.75)}
_RING_LAYOUT = {"A": 1, "B": 4, "C": 1}


def _wrap_angle(x: float) -> float:
    return math.remainder(x, TWO_PI)


def _is_multiple(x: float, unit: float, tol: float = 1e-9) -> bool:
    q = x / unit
    return abs(q - round(q)) < tol


def validate(config: SystemConfig) -> ValidatedConfig:
    """Check every invariant; raise ``ConfigError`` listing all violations."""
    issues: list[tuple[str, str, str]] = []
    add = lambda code, path, msg: issues.append((code, path, msg))
    u = config.units

    if not u.base_length > 0:
        add("NonPositiveLength", "units.base_length", "must be > 0")
    if not (u.group_index > 0 and u.light_speed > 0):
        add("NonPositiveUnit", "units", "group_index and light_speed must be > 0")
    T_R = u.base_time if u.base_length > 0 else 1.0
    W = TWO_PI / T_R

    ids = [r.id for r in config.rings]
    if sorted(ids) != ["A", "B", "C"]:
        add("RingSet", "rings", f"need exactly rings A, B, C, got {ids}")
    for i, r in enumerate(config.rings):
        p = f"rings[{r.id}]"
        if r.id in _RING_LAYOUT and r.circumference_multiple != _RING_LAYOUT[r.id]:
            add("RingCircumference", p + ".circumference_multiple",
                f"must be {_RING_LAYOUT[r.id]}")
        if not 0.0 <= r.theta < TWO_PI:
            add("PhaseRange", p + ".theta", "must lie in [0, 2pi)")
        Tr = r.circumference_multiple * T_R
        if abs(_wrap_angle(r.ladder_offset * Tr + r.theta)) > 1e-9 or not _is_multiple(
                r.ladder_spacing * Tr, TWO_PI):
            add("NotResonant", p, "stated ladder is not an eigen-ladder under theta")

    names = [m.name for m in config.modulators]
    if sorted(names) != ["A", "BA", "BC", "C"]:
        add("ModulatorSet", "modulators", f"need modulators A, C, BA, BC, got {names}")
    assigned = phase_assignment(config.phi)
    if abs(_wrap_angle(config.phi)) > _ANGLE_TOL and abs(_wrap_angle(config.phi - math.pi)) > _ANGLE_TOL:
        add("UnsupportedPhase", "phi", "global phase must be 0 or pi")
    circ = {r.id: r.circumference_multiple * u.base_length for r in config.rings}
    N = config.time.cells_per_length
    for m in config.modulators:
        p = f"modulators[{m.name}]"
        if m.strength < 0 or not math.isfinite(m.strength):
            add("NegativeStrength", p + ".strength", "must be finite and >= 0")
        if m.name in _MOD_LAYOUT:
            host, ratio = _MOD_LAYOUT[m.name]
            if m.host != host:
                add("ModulatorHost", p + ".host", f"must be {host}")
            if abs(m.frequency - ratio * W) > 1e-9 * W:
                add("ModulatorFrequency", p + ".frequency", f"must be {ratio} * Omega")
            if m.phase is not None and abs(_wrap_angle(m.phase - assigned[m.name])) > _ANGLE_TOL:
                add("PhaseAssignment", p + ".phase",
                    f"must equal {assigned[m.name]:.6g} for phi={config.phi:.6g}")
        _check_position(add, p + ".position", m.position, circ.get(m.host), N, u.base_length)

    cnames = {c.name for c in config.couplers}
    for need in ("AB", "CB", "A_in", "A_out", "C_in", "C_out"):
        if need not in cnames:
            add("CouplerSet", "couplers", f"missing coupler {need}")
    for c in config.couplers:
        p = f"couplers[{c.name}]"
        if not 0.0 <= c.strength < 1.0:
            add("CouplingOutOfRange", p + ".strength", "must satisfy 0 <= strength < 1")
        _check_position(add, p + ".positions[0]", c.positions[0], circ.get(c.endpoints[0]), N,
                        u.base_length)
        if c.waveguide is None:
            _check_position(add, p + ".positions[1]", c.positions[1], circ.get(c.endpoints[1]),
                            N, u.base_length)
    _check_coincident(add, config, N, u.base_length)

    s = config.source
    if s.ring != "C":
        add("SourceRing", "source.ring", "source is injected into ring C")
    if not s.amplitude > 0:
        add("SourceAmplitude", "source.amplitude", "must be > 0")
    if not s.duration > s.ramp > 0:
        add("SourceTiming", "source", "need duration > ramp > 0")
    if not config.m_min <= s.mode <= config.m_max:
        add("SourceMode", "source.mode", "outside the mode range")

    t = config.time
    if t.samples_per_roundtrip < 2:
        add("TooFewSamples", "time.samples_per_roundtrip", "must be >= 2")
    elif t.cells_per_length % t.samples_per_roundtrip:
        add("GridMismatch", "time.samples_per_roundtrip",
            "must evenly divide cells_per_length")
    if not t.modulation_duration > 0 or not _is_multiple(t.modulation_duration, T_R):
        add("QuenchDuration", "time.modulation_duration",
            "must be a positive integer multiple of T_R")
    if t.load_duration < 0 or not _is_multiple(t.load_duration, T_R / t.cells_per_length):
        add("LoadDuration", "time.load_duration", "must be a non-negative multiple of the step")
    if s.duration > t.load_duration + 1e-12:
        add("SourceTiming", "source.duration", "pulse longer than the load window")

    if config.m_max <= config.m_min:
        add("DegenerateModeRange", "m_max", "need m_min < m_max")
    elif not config.m_min < 0 < config.m_max:
        add("ModeRange", "m_min", "need m_min < 0 < m_max")

    n = config.numerics
    if n.b_modulator_model not in ("exact", "printed"):
        add("Numerics", "numerics.b_modulator_model", "must be 'exact' or 'printed'")
    if n.ac_sideband_order < 1:
        add("Numerics", "numerics.ac_sideband_order", "must be >= 1")
    if n.waveform not in ("cos", "sin"):
        add("Numerics", "numerics.waveform", "must be 'cos' or 'sin'")
    if n.chunk_roundtrips < 1:
        add("Numerics", "numerics.chunk_roundtrips", "must be >= 1")

    if issues:
        raise ConfigError(issues)

    steps_per_length = t.cells_per_length / T_R
    return ValidatedConfig(
        config=config,
        roundtrip_time=T_R,
        fsr=W,
        eta=derive_eta(config),
        n_modes=config.m_max - config.m_min + 1,
        load_steps=int(round(t.load_duration * steps_per_length)),
        quench_roundtrips=int(round(t.modulation_duration / T_R)),
        phases=phase_assignment(config.phi),
    )


def _check_position(add, path, x, circumference, N, L):
    if circumference is None:
        add("UnknownRing", path, "endpoint ring not defined")
        return
    if not 0.0 <= x < circumference:
        add("PositionRange", path, f"must lie in [0, {circumference:g})")
    elif abs(x * N / L - round(x * N / L)) > 1e-9:
        add("OffGrid", path, "position does not fall on a grid cell")


def _check_coincident(add, config, N, L):
    seen = {}
    cells = []
    for m in config.modulators:
        cells.append((m.host, m.position, f"modulators[{m.name}]"))
    for c in config.couplers:
        cells.append((c.endpoints[0], c.positions[0], f"couplers[{c.name}]"))
        if c.waveguide is None:
            cells.append((c.endpoints[1], c.positions[1], f"couplers[{c.name}]"))
    for ring, x, path in cells:
        key = (ring, int(round(x * N / L)))
        if key in seen and not (path.startswith("modulators") and seen[key].startswith("modulators")):
            add("CoincidentElements", path, f"shares a cell with {seen[key]}")
        seen.setdefault(key, path)


def derive_eta(config) -> float:
    """Effective A-C coupling ``eta = kappa' * gamma**2`` of the weak-coupling limit.

    With unequal ring-B modulators or couplers the geometric means are used,
    which reduces to ``kappa' gamma^2`` in the symmetric design.
    """
    cfg = config.config if isinstance(config, ValidatedConfig) else config
    kp = math.sqrt(cfg.modulator("BA").strength * cfg.modulator("BC").strength)
    return kp * cfg.coupler("AB").strength * cfg.coupler("CB").strength


def drive_phase(config: SystemConfig, name: str) -> float:
    m = config.modulator(name)
    return phase_assignment(config.phi)[name] if m.phase is None else m.phase


def resolve(config: SystemConfig) -> SystemConfig:
    """Fill derived fields (modulator phases) so the echo is self-contained."""
    mods = tuple(replace(m, phase=drive_phase(config, m.name)) for m in config.modulators)
    return replace(config, modulators=mods)


# --------------------------------------------------------------------------
# JSON

def to_dict(config: SystemConfig) -> dict:
    """Plain JSON-shaped dict (tuples become lists)."""
    return _listify(asdict(config))


def _listify(v):
    if isinstance(v, dict):
        return {k: _listify(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_listify(x) for x in v]
    return v


def _build(cls, data):
    if data is None:
        return None
    kw = {}
    for f in fields(cls):
        if f.name not in data:
            continue
        v = data[f.name]
        kw[f.name] = _coerce(cls, f.name, v)
    return cls(**kw)


_NESTED = {
    (SystemConfig, "units"): SimUnits,
    (SystemConfig, "source"): SourceSpec,
    (SystemConfig, "time"): TimeSequence,
    (SystemConfig, "disorder"): DisorderSettings,
    (SystemConfig, "numerics"): Numerics,
}
_LISTS = {
    (SystemConfig, "rings"): RingSpec,
    (SystemConfig, "modulators"): ModulatorSpec,
    (SystemConfig, "couplers"): CouplerSpec,
}


def _coerce(cls, name, v):
    if (cls, name) in _NESTED:
        return _build(_NESTED[(cls, name)], v)
    if (cls, name) in _LISTS:
        return tuple(_build(_LISTS[(cls, name)], item) for item in v)
    if cls is DisorderSettings:
        return DisorderSpec(**v)
    if name in ("endpoints", "positions"):
        return tuple(v)
    if name in ("phi", "theta", "phase") and isinstance(v, str):
        return parse_angle(v)
    return v


def parse_angle(text) -> float:
    """Parse ``"pi"``, ``"-pi/2"``, ``"3pi/2"`` or a plain number."""
    if not isinstance(text, str):
        return float(text)
    s = text.strip().lower().replace(" ", "")
    if "pi" not in s:
        return float(s)
    num, _, den = s.partition("/")
    coef = num.replace("*", "").replace("pi", "")
    c = 1.0 if coef in ("", "+") else -1.0 if coef == "-" else float(coef)
    return c * math.pi / (float(den) if den else 1.0)


def from_dict(data: dict, base: SystemConfig | None = None) -> SystemConfig:
    """Build a config from a (possibly partial) dict merged over ``base``."""
    merged = merge_dicts(to_dict(base or default_config()), data)
    try:
        return _build(SystemConfig, merged)
    except (TypeError, ValueError) as err:
        raise ConfigError([("InvalidField", "config", str(err))]) from None


def merge_dicts(base: dict, update: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in update.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge_dicts(out[k], v)
        elif isinstance(v, list) and isinstance(out.get(k), list) and v and isinstance(v[0], dict):
            out[k] = _merge_named(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _key(item):
    return item.get("name", item.get("id"))


def _merge_named(base: list, update: list) -> list:
    index = {_key(b): i for i, b in enumerate(base)}
    out = copy.deepcopy(base)
    for item in update:
        k = _key(item)
        if k in index:
            out[index[k]] = merge_dicts(out[index[k]], item)
        else:
            out.append(copy.deepcopy(item))
    return out


def load_config(path) -> SystemConfig:
    data = json.loads(Path(path).read_text())
    return from_dict(data)


def dump_config(config: SystemConfig, path=None) -> str:
    text = json.dumps(to_dict(config), indent=2, sort_keys=True) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    try:
        return parse_angle(text)
    except ValueError:
        return text


def apply_overrides(data: dict, overrides) -> dict:
    """Apply ``key.path=value`` overrides to a config dict.

    List entries are addressed by their ``name``/``id`` (``couplers.AB.strength``)
    or by integer index.
    """
    out = copy.deepcopy(data)
    for item in overrides or ():
        if "=" not in item:
            raise OverrideError(f"override {item!r} is not key=value", override=item)
        key, _, raw = item.partition("=")
        parts = key.strip().split(".")
        node = out
        for i, part in enumerate(parts):
            last = i == len(parts) - 1
            if isinstance(node, list):
                idx = _list_index(node, part, item)
                if last:
                    node[idx] = _parse_value(raw)
                else:
                    node = node[idx]
            elif isinstance(node, dict):
                if part not in node:
                    raise OverrideError(f"unknown config field {key!r}", override=item)
                if last:
                    node[part] = _parse_value(raw)
                else:
                    node = node[part]
            else:
                raise OverrideError(f"cannot descend into {key!r}", override=item)
    return out


def _list_index(node, part, item):
    for i, v in enumerate(node):
        if isinstance(v, dict) and _key(v) == part:
            return i
    if part.lstrip("-").isdigit():
        return int(part)
    raise OverrideError(f"no list entry named {part!r}", override=item)
