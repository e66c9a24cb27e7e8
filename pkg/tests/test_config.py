import json
import math
from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from holoquench.config import (apply_overrides, derive_eta, dump_config, from_dict,
                               load_config, default_config, parse_angle, phase_assignment,
                               resolve, to_dict, validate, with_rates)
from holoquench.errors import ConfigError, OverrideError


def codes(cfg):
    with pytest.raises(ConfigError) as ei:
        validate(cfg)
    return ei.value.codes


def test_defaults_validate():
    vc = validate(default_config())
    assert vc.n_modes == 81
    assert vc.quench_roundtrips == 15000
    assert vc.roundtrip_time == 1.0
    assert vc.fsr == pytest.approx(2 * math.pi)


def test_coupling_out_of_range():
    assert "CouplingOutOfRange" in codes(with_rates(default_config(), gamma=1.5))


def test_degenerate_mode_range():
    assert "DegenerateModeRange" in codes(replace(default_config(), m_min=0, m_max=0))


def test_unsupported_phase():
    assert "UnsupportedPhase" in codes(replace(default_config(), phi=math.pi / 3))


def test_explicit_phase_must_match_assignment():
    cfg = default_config(math.pi)
    mods = tuple(replace(m, phase=0.0) if m.name == "A" else m for m in cfg.modulators)
    assert "PhaseAssignment" in codes(replace(cfg, modulators=mods))


def test_off_grid_and_coincident_positions():
    cfg = default_config()
    mods = tuple(replace(m, position=2.5 + 1e-3) if m.name == "BA" else m for m in cfg.modulators)
    assert "OffGrid" in codes(replace(cfg, modulators=mods))
    cps = tuple(replace(c, positions=(0.25, 0.0)) if c.name == "A_out" else c for c in cfg.couplers)
    assert "CoincidentElements" in codes(replace(cfg, couplers=cps))


def test_not_resonant_ring_phase():
    cfg = default_config()
    rings = tuple(replace(r, theta=0.0) if r.id == "C" else r for r in cfg.rings)
    assert "NotResonant" in codes(replace(cfg, rings=rings))


def test_all_issues_reported_together():
    cfg = replace(with_rates(default_config(), gamma=1.5), m_min=0, m_max=0)
    assert {"CouplingOutOfRange", "DegenerateModeRange"} <= set(codes(cfg))


@pytest.mark.parametrize("kp,g,eta", [(0.2, 0.1, 0.002), (0.2, 0.0, 0.0), (0.2, 0.05, 5e-4)])
def test_derive_eta_examples(kp, g, eta):
    assert derive_eta(with_rates(default_config(), kappa_prime=kp, gamma=g)) == pytest.approx(eta)


# gamma^2 underflows below ~1e-154, so sample away from subnormals
@given(kp=st.floats(1e-3, 1.0), g1=st.floats(1e-6, 0.98), g2=st.floats(1e-6, 0.98))
def test_eta_strictly_increases_with_gamma(kp, g1, g2):
    if g1 == g2:
        return
    lo, hi = sorted((g1, g2))
    e_lo = derive_eta(with_rates(default_config(), kappa_prime=kp, gamma=lo))
    e_hi = derive_eta(with_rates(default_config(), kappa_prime=kp, gamma=hi))
    assert e_hi > e_lo


@given(L=st.floats(0.1, 10.0), n=st.floats(1.0, 4.0))
@settings(max_examples=50)
def test_fsr_times_roundtrip_is_two_pi(L, n):
    cfg = default_config()
    units = replace(cfg.units, base_length=L, group_index=n)
    assert units.fsr * units.base_time == pytest.approx(2 * math.pi, rel=1e-15, abs=0)


def test_phase_dichotomy():
    assert phase_assignment(math.pi) == {"A": math.pi, "C": 0.0, "BA": 0.0, "BC": math.pi}
    assert set(phase_assignment(0.0).values()) == {0.0}


def test_resolved_config_round_trips_through_json(tmp_path):
    cfg = resolve(default_config(0.0, n_modes=21, seed=5))
    p = tmp_path / "c.json"
    dump_config(cfg, p)
    assert load_config(p) == cfg
    assert json.loads(p.read_text())["seed"] == 5


def test_partial_dict_merges_over_defaults():
    cfg = from_dict({"phi": "0", "couplers": [{"name": "AB", "strength": 0.05}]})
    assert cfg.phi == 0.0
    assert cfg.coupler("AB").strength == 0.05
    assert cfg.coupler("CB").strength == 0.1


def test_overrides_address_named_list_entries():
    data = apply_overrides(to_dict(default_config()),
                           ["couplers.AB.strength=0.2", "disorder.modulator.delta=0.5", "phi=pi"])
    cfg = from_dict(data)
    assert cfg.coupler("AB").strength == 0.2
    assert cfg.disorder.modulator.delta == 0.5
    assert cfg.phi == pytest.approx(math.pi)


@pytest.mark.parametrize("bad", ["nokey", "missing.field=1", "couplers.XY.strength=1"])
def test_bad_overrides(bad):
    with pytest.raises(OverrideError):
        apply_overrides(to_dict(default_config()), [bad])


def test_invalid_field_value_is_a_config_error():
    with pytest.raises(ConfigError):
        from_dict({"disorder": {"modulator": {"kind": "modulator", "delta": 2.0}}})


@pytest.mark.parametrize("text,val", [("pi", math.pi), ("-pi/2", -math.pi / 2),
                                      ("3pi/2", 1.5 * math.pi), ("0.5", 0.5)])
def test_parse_angle(text, val):
    assert parse_angle(text) == pytest.approx(val)
