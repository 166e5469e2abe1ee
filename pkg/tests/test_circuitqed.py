import math
import warnings

import pytest
from hypothesis import given, settings, strategies as st
from scipy import constants

from jcsqueeze.circuitqed import (
    ELEMENTARY_CHARGE, HBAR, PLANCK, CircuitParams, StrongCouplingWarning, coupling_rate,
    derive_energies, design_for, map_to_system,
)
from jcsqueeze.errors import InvalidArgument, RegimeError

OMEGA10 = 2 * math.pi * 1.09e9


def test_constants_match_codata():
    assert ELEMENTARY_CHARGE == constants.e
    assert PLANCK == constants.h
    assert abs(HBAR / constants.hbar - 1) < 1e-11


def test_symmetric_design_ratio():
    cp = design_for(OMEGA10)
    assert cp.C_c / cp.C_r == pytest.approx(1e-2, rel=1e-12)
    m = map_to_system(cp, T2=10e-6)
    assert m.omega / m.g == pytest.approx(200.0, rel=1e-12)
    assert m.omega0 == pytest.approx(OMEGA10, rel=1e-12)
    assert m.g / (2 * math.pi) == pytest.approx(5.45e6, rel=1e-12)
    assert m.t_protocol == pytest.approx(10 / m.g, rel=1e-12)
    assert m.feasible and m.t_protocol < 0.05 * 10e-6


def test_energy_regression():
    # frozen: E_Cr / h for C_r = 100 fF
    cp = design_for(OMEGA10)
    assert derive_energies(cp).in_ghz()["E_Cr"] == pytest.approx(0.19370229324659125, rel=1e-12)
    cp2 = CircuitParams(50e-15, 50e-15, 1e-15, 100e-15, 100e-9, 100e-9)
    assert derive_energies(cp2).in_ghz()["E_L"] == pytest.approx(1.6346151280797265, rel=1e-12)


def test_plasma_frequency_identity():
    cp = CircuitParams(40e-15, 60e-15, 1e-15, 80e-15, 150e-9, 120e-9)
    m = map_to_system(cp)
    assert m.omega0 == pytest.approx(1 / math.sqrt(cp.L_J * (cp.C_J + cp.C_g)), rel=1e-12)
    assert m.omega == pytest.approx(1 / math.sqrt(cp.L_r * cp.C_r), rel=1e-12)
    assert m.system.omega_over_g == pytest.approx(m.omega / m.g, rel=1e-12)


@given(st.floats(0.2, 5.0))
@settings(max_examples=50)
def test_scaling_invariance(lam):
    cp = CircuitParams(40e-15, 60e-15, 1e-15, 80e-15, 150e-9, 120e-9)
    a, b = map_to_system(cp), map_to_system(cp.scaled(lam))
    assert abs(b.omega / b.g - a.omega / a.g) / (a.omega / a.g) < 1e-12
    assert abs(b.omega0 / b.g - a.omega0 / a.g) / (a.omega0 / a.g) < 1e-12
    assert abs(b.g * lam - a.g) / a.g < 1e-12


@given(st.floats(0.1e-15, 2e-15), st.floats(0.1e-15, 2e-15))
@settings(max_examples=50)
def test_coupling_monotone_and_linear_in_cc(c1, c2):
    base = dict(C_J=40e-15, C_g=60e-15, C_r=80e-15, L_J=150e-9, L_r=120e-9)
    g1 = coupling_rate(CircuitParams(C_c=c1, **base))
    g2 = coupling_rate(CircuitParams(C_c=c2, **base))
    assert (g1 < g2) == (c1 < c2) or c1 == c2
    assert abs(g1 / c1 - g2 / c2) / (g1 / c1) < 1e-12


def test_infeasible_when_coherence_short():
    assert map_to_system(design_for(OMEGA10), T1=1e-7).feasible is False
    assert map_to_system(design_for(OMEGA10)).feasible is None


def test_strong_coupling_warns():
    cp = design_for(OMEGA10, g_ratio=0.01, C_g_fraction=0.5)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        map_to_system(cp)
    # g/omega grows as (L_r/L_J)^(1/4) with the capacitance ratios at their limits
    strong = CircuitParams(C_J=0.1e-15, C_g=1e-15, C_c=0.05e-15, C_r=1e-15, L_J=1e-8, L_r=1e-4)
    with pytest.warns(StrongCouplingWarning):
        m = map_to_system(strong)
    assert m.strong_coupling


@pytest.mark.parametrize("kw", [dict(C_c=10e-15), dict(C_g=1e-15), dict(L_J=-1.0), dict(C_r=0.0)])
def test_regime_errors(kw):
    base = dict(C_J=50e-15, C_g=50e-15, C_c=1e-15, C_r=100e-15, L_J=200e-9, L_r=200e-9)
    base.update(kw)
    with pytest.raises(RegimeError):
        derive_energies(CircuitParams(**base))


def test_from_dict_requires_fields(tmp_path):
    with pytest.raises(InvalidArgument):
        CircuitParams.from_dict({"C_J": 1e-15})
    p = tmp_path / "c.json"
    p.write_text('{"C_J": 5e-14, "C_g": 5e-14, "C_c": 1e-15, "C_r": 1e-13, "L_J": 2e-7, "L_r": 2e-7}')
    assert CircuitParams.load(p).C_c == 1e-15


def test_report_fields():
    r = map_to_system(design_for(OMEGA10), T2=10e-6).report()
    assert r["omega/g"] == pytest.approx(200.0)
    assert r["C_c/C_r"] == pytest.approx(0.01)
    assert r["feasible"] is True
