import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from holoquench.errors import (DegenerateDerivative, GaplessSpectrum, NoBandInversion,
                               UnexpectedBisCount, Undersampled)
from holoquench.tightbinding import bloch_vector, closed_form_average
from holoquench.topology import (BisSet, analyze, detect_bis, dynamical_spin_texture,
                                 winding_number, zeroth_chern_number)

N = 160
TAU = np.arange(N) / N


def oracle_profile(phi, eta_ratio=0.2, n=N):
    """Closed-form averages on a tau grid, with k d = 2 pi tau - pi."""
    k = 2 * np.pi * np.arange(n) / n - np.pi
    avg = closed_form_average(bloch_vector(k, 1.0, eta_ratio, phi))
    return k, avg[:, 2], avg[:, 1]


def test_detect_bis_on_oracle_profile():
    k, z, y = oracle_profile(math.pi)
    bis = detect_bis(k, z, y, period=2 * np.pi)
    assert bis.count == 2
    assert np.allclose(bis.x, [-np.pi / 2, np.pi / 2], atol=2 * np.pi / N)


def test_constant_average_has_no_inversion():
    with pytest.raises(NoBandInversion):
        detect_bis(TAU, np.full(N, -0.8), np.zeros(N), period=1.0)
    res = analyze(TAU, np.full(N, -0.8), np.zeros(N), period=1.0)
    assert res.classification == "trivial" and res.c0 == 0


def test_refinement_uses_sign_change():
    z = -np.cos(2 * np.pi * TAU) ** 2
    y = np.sin(2 * np.pi * (TAU - 0.2537)) * 0.1
    bis = detect_bis(TAU, z + 0 * y, np.where(np.abs(TAU - 0.25) < 0.1, y, 0.1), period=1.0)
    assert abs(bis.x[0] - 0.2537) < 1e-3


def test_nontrivial_texture_and_c0():
    k, z, y = oracle_profile(math.pi)
    res = analyze(k, z, y, period=2 * np.pi)
    assert res.classification == "nontrivial" and res.c0 == 1
    g = res.field.g_bis
    assert np.all(np.abs(g[:, 0]) < 0.1)
    assert g[0, 1] == pytest.approx(-1, abs=0.05) and g[1, 1] == pytest.approx(1, abs=0.05)
    assert np.nanmax(np.hypot(res.field.gz, res.field.gy)) == pytest.approx(1.0, abs=1e-15)


def test_mirror_symmetric_input_gives_opposite_gy():
    z = -np.cos(2 * np.pi * TAU) ** 2
    y = np.sin(4 * np.pi * TAU) * 0.5
    mirror = (-np.arange(N)) % N
    y = (y - y[mirror]) / 2                     # exactly odd under tau -> 1 - tau
    z = (z + z[mirror]) / 2
    bis = BisSet(np.array([0.25, 0.75]), np.array([40, 120]), np.zeros(2), 0.0)
    f = dynamical_spin_texture(TAU, z, y, bis, period=1.0)
    assert f.g_bis[0, 1] == -f.g_bis[1, 1]


def test_one_sided_derivative_option():
    k, z, y = oracle_profile(math.pi)
    res = analyze(k, z, y, period=2 * np.pi, derivative="one-sided")
    assert res.c0 == 1


def test_texture_needs_two_points():
    bis = BisSet(np.array([0.25]), np.array([40]), np.zeros(1), 0.0)
    with pytest.raises(UnexpectedBisCount):
        dynamical_spin_texture(TAU, np.zeros(N), np.zeros(N), bis, period=1.0)


def test_degenerate_derivative_reported():
    z = -np.abs(np.cos(2 * np.pi * TAU))
    z[[39, 40, 41, 119, 120, 121]] = 0.0
    bis = BisSet(np.array([0.25, 0.75]), np.array([40, 120]), np.zeros(2), 0.0)
    with pytest.raises(DegenerateDerivative) as ei:
        dynamical_spin_texture(TAU, z, np.zeros(N), bis, period=1.0)
    res = zeroth_chern_number(ei.value.field)
    assert any("DegenerateDerivative" in n for n in res.notes)


def _field(gy1, gy2, gz=(0.0, 0.0)):
    k, z, y = oracle_profile(math.pi)
    f = analyze(k, z, y, period=2 * np.pi).field
    from dataclasses import replace
    return replace(f, g_bis=np.array([[gz[0], gy1], [gz[1], gy2]]))


@pytest.mark.parametrize("gy1,gy2,c0,cls", [(-1, 1, 1, "nontrivial"), (0.4, 0.4, 0, "trivial"),
                                            (1, -1, -1, "nontrivial"),
                                            (-0.1, 0.1, 0, "trivial")])
def test_c0_examples(gy1, gy2, c0, cls):
    r = zeroth_chern_number(_field(gy1, gy2))
    assert r.c0 == c0 and r.classification == cls


def test_large_residual_or_gz_is_indeterminate():
    assert zeroth_chern_number(_field(-0.5, 0.5)).classification == "indeterminate"
    assert zeroth_chern_number(_field(-1, 1, gz=(0.3, 0.0))).classification == "indeterminate"


def test_result_json_shape():
    k, z, y = oracle_profile(math.pi)
    d = analyze(k, z, y, period=2 * np.pi).to_dict()
    assert set(d) >= {"tau_bis", "g", "c0", "classification", "residuals"}
    assert set(d["g"][0]) == {"tau", "gy", "gz"}


def test_winding_examples():
    f = lambda k: (-2 * 0.002 * np.sin(k), -2 * 0.0025 * np.cos(k))
    assert winding_number(f) == 1
    assert winding_number((np.zeros(128), np.full(128, -0.005))) == 0
    with pytest.raises(GaplessSpectrum):
        h = bloch_vector(np.linspace(-np.pi, np.pi, 256, endpoint=False), 1.0, 0.2, 0.0)
        winding_number((h.hy, h.hz))
    with pytest.raises(Undersampled):
        winding_number(f, n_k=16)


@given(kappa=st.floats(0.01, 10), eta=st.floats(0.01, 10))
@settings(max_examples=50)
def test_winding_is_one_for_any_positive_rates(kappa, eta):
    h = lambda k: (-2 * eta * np.sin(k), -2 * kappa * np.cos(k))
    assert winding_number(h, 512) == 1
