import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from holoquench.errors import EmptyRecord, MisalignedSamples, NormalizationUndefined
from holoquench.ringsim import SignalRecord, sample_times
from holoquench.spin import (TwoTimeGrid, export_grid_csv, overall_average, reconstruct_fields,
                             running_average, spin_textures, time_to_grid, two_time_reshape)

W = 2 * math.pi
finite = st.floats(-1e3, 1e3, allow_nan=False)


def record(e_a, e_c, modes, t):
    return SignalRecord(t, modes, modes * W, modes * W + W / 4, e_a, e_c,
                        np.zeros(t.size, complex), np.zeros(t.size, complex), 160, 1.0)


def test_single_c_component_field():
    t = sample_times(320, 160)
    modes = np.array([-1, 0, 1])
    ec = np.zeros((t.size, 3), complex)
    ec[:, 1] = 1.0
    pa, pc = reconstruct_fields(record(np.zeros_like(ec), ec, modes, t))
    assert np.allclose(pc, np.exp(-1j * W / 4 * t))
    assert np.allclose(np.abs(pc), 1.0) and np.all(pa == 0)


def test_two_equal_a_components_interfere():
    t = sample_times(480, 160)
    modes = np.array([0, 1])
    ea = np.ones((t.size, 2), complex)
    pa, _ = reconstruct_fields(record(ea, np.zeros_like(ea), modes, t))
    assert np.allclose(np.abs(pa) ** 2, 2 + 2 * np.cos(W * t))


def test_empty_record():
    t = np.zeros(0)
    e = np.zeros((0, 1), complex)
    with pytest.raises(EmptyRecord):
        reconstruct_fields(record(e, e, np.array([0]), t))


def test_spin_texture_examples():
    s = spin_textures(np.array([1.0]), np.array([0.0]), np.array([0.0]))
    assert (s.sz[0], s.sy[0]) == (1.0, 0.0)
    z = 0.7 - 0.2j
    s = spin_textures(np.array([0.0]), np.array([z]), np.array([0.0]))
    assert s.sz[0] == pytest.approx(-abs(z) ** 2) and s.sz_norm[0] == -1.0
    s = spin_textures(np.array([1.0]), np.array([1.0]), np.array([1.0]))   # W t / 4 = pi/2
    assert s.sy[0] == pytest.approx(2.0)


@pytest.mark.filterwarnings("ignore::holoquench.errors.NormalizationUndefined")
@given(pa=arrays(complex, 16, elements=st.complex_numbers(max_magnitude=1e3)),
       pc=arrays(complex, 16, elements=st.complex_numbers(max_magnitude=1e3)))
def test_cauchy_schwarz(pa, pc):
    s = spin_textures(pa, pc, np.arange(16) / 160)
    assert np.all(s.sz ** 2 + s.sy ** 2 <= s.intensity ** 2 * (1 + 1e-12) + 1e-300)


def test_normalization_floor_masks():
    with pytest.warns(NormalizationUndefined):
        s = spin_textures(np.array([1.0, 0.0]), np.array([0.0, 0.0]), np.array([0.0, 0.1]))
    assert np.isnan(s.sz_norm[1]) and s.sz_norm[0] == 1.0


def _series(values, ns=4):
    t = np.arange(values.size) / ns
    s = spin_textures(np.ones(values.size), np.zeros(values.size), t, samples_per_roundtrip=ns)
    # overwrite with the test pattern
    from dataclasses import replace
    return replace(s, sz=values, sz_norm=values)


@given(n_rt=st.integers(1, 20), ns=st.sampled_from([2, 4, 8, 160]))
@settings(max_examples=30)
def test_reshape_is_lossless(n_rt, ns):
    v = np.random.default_rng(n_rt).normal(size=n_rt * ns)
    g = two_time_reshape(_series(v, ns))
    assert np.array_equal(g["sz"].ravel(), v)
    assert g.T.tolist() == list(range(n_rt))


def test_time_to_grid_examples():
    assert time_to_grid(0.0) == (0, 0.0)
    T, tau = time_to_grid(3.25)
    assert T == 3 and tau == pytest.approx(0.25)
    g = two_time_reshape(_series(np.zeros(15000 * 4)))
    assert g.T[0] == 0 and g.T[-1] == 14999


def test_reshape_rejects_partial_roundtrip_and_offsets():
    with pytest.raises(MisalignedSamples):
        two_time_reshape(_series(np.zeros(10)))
    s = _series(np.zeros(8))
    from dataclasses import replace
    with pytest.raises(MisalignedSamples):
        two_time_reshape(replace(s, t=s.t + 0.01))


def test_running_average_examples():
    v = np.full((6, 3), 2.5)
    g = running_average(TwoTimeGrid(np.arange(6), np.arange(3) / 3, {"x": v}))
    assert np.allclose(g["x"], 2.5)
    alt = np.array([(-1.0) ** T for T in range(7)])[:, None]
    g = running_average(TwoTimeGrid(np.arange(7), np.zeros(1), {"x": alt}))
    for T in range(7):
        assert g["x"][T, 0] == pytest.approx(0.0 if T % 2 else 1 / (T + 1))


def test_running_average_of_precession_decays():
    eta = 0.002
    T = np.arange(20000)
    v = -np.cos(4 * eta * T)[:, None]
    g = running_average(TwoTimeGrid(T, np.zeros(1), {"x": v}))["x"][:, 0]
    assert abs(g[-1]) < 1.0 / (4 * eta * T[-1]) * 2
    assert abs(g[-1]) < abs(g[len(g) // 10])


@given(arrays(float, (12, 3), elements=finite))
def test_running_average_bounded(v):
    g = running_average(TwoTimeGrid(np.arange(12), np.arange(3), {"x": v}))["x"]
    for T in range(12):
        lo, hi = v[: T + 1].min(axis=0), v[: T + 1].max(axis=0)
        assert np.all(g[T] >= lo - 1e-9 * (1 + np.abs(lo))) and np.all(g[T] <= hi + 1e-9 * (1 + np.abs(hi)))


def test_overall_average_skips_masked():
    sz = np.array([[1.0, np.nan], [3.0, 2.0]])
    g = TwoTimeGrid(np.arange(2), np.arange(2), {"sz_norm": sz, "sy_norm": sz})
    z, _ = overall_average(g)
    assert np.allclose(z, [2.0, 2.0])


def test_grid_csv_is_bit_exact(tmp_path):
    v = np.array([[0.1, 1 / 3], [np.pi, -2e-300]])
    p = export_grid_csv(TwoTimeGrid(np.arange(2), np.array([0.0, 0.5]), {"x": v}), "x", tmp_path / "g.csv")
    rows = p.read_text().splitlines()
    assert rows[0] == "T,tau=0,tau=0.5"
    back = np.array([[float(x) for x in r.split(",")[1:]] for r in rows[1:]])
    assert np.array_equal(back, v)
