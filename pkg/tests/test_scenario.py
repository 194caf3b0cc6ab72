from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from photongun.errors import ScenarioError
from photongun.scenario import KEYS, Scenario, load, parse, serialize

ROOT = Path(__file__).resolve().parents[1]


def test_parse_basic_and_units():
    sc = parse("""
        # comment line
        name = demo   # trailing comment
        seed = 0x10
        excitation.rep_rate_kHz = 20
        analysis.bin_width_ms = 2
        background.mode = alpha
        background.alpha_cps_per_pJ = 5.5
        sweep.grid = 1, 2.5, 10
    """)
    assert sc.name == "demo" and sc.seed == 16
    assert sc.f_rep == 20e3 and sc.bin_width == 2e-3
    assert sc.tau_max == pytest.approx(20.5 / 20e3)
    assert sc.sweep_grid == (1.0, 2.5, 10.0)
    cfg = sc.sim_config()
    assert cfg.excitation.f_rep == 20e3 and cfg.background_rate == pytest.approx(5.5 * 200)
    assert cfg.excitation.tau_p == pytest.approx(13e-12)


def test_explicit_tau_values():
    sc = parse("emitter.tau_r_ns = 4\nanalysis.tau_max_us = 50\n")
    assert sc.sim_config().emitter.tau_r == pytest.approx(4e-9)
    assert sc.tau_max == pytest.approx(50e-6)


@pytest.mark.parametrize("text,fragment", [
    ("excitation.duration_s = 0", "line 1, key 'excitation.duration_s': must be positive"),
    ("name = x\nchain.detector_qe = 1.2", "line 2, key 'chain.detector_qe'"),
    ("bogus.key = 1", "line 1, key 'bogus.key': unknown key"),
    ("seed = 1\nseed = 2", "line 2, key 'seed': duplicate of line 1"),
    ("seed = abc", "line 1, key 'seed': bad value"),
    ("just text", "line 1: expected"),
    ("excitation.pulse_energy_pJ = nan", "finite"),
    ("sweep.grid = ", "key 'sweep.grid'"),
    ("background.mode = pulsed", "expected one of"),
    ("excitation.rep_rate_kHz = 0.001\nexcitation.duration_s = 0.5", "at least one pulse"),
    ("analysis.split_ratio = 1", "key 'analysis.split_ratio'"),
])
def test_validation_diagnostics(text, fragment):
    with pytest.raises(ScenarioError, match=fragment.replace("(", r"\(")):
        parse(text)


def test_roundtrip_defaults():
    sc = Scenario()
    assert parse(serialize(sc)) == sc
    assert set(line.split(" = ")[0] for line in serialize(sc).splitlines()
               if " = " in line) == set(KEYS)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**63), E=st.floats(0, 1e4), rho=st.none() | st.floats(0, 1),
       bw=st.floats(1e-3, 1e3), grid=st.lists(st.floats(0, 1), min_size=1, max_size=5),
       name=st.text(st.characters(whitelist_categories=("L", "N")), min_size=1, max_size=12))
def test_roundtrip_property(seed, E, rho, bw, grid, name):
    sc = Scenario(name=name, seed=seed, pulse_energy_pJ=E, rho_override=rho, bin_width_ms=bw,
                  sweep_grid=tuple(grid))
    assert parse(serialize(sc)) == sc


def test_config_hash():
    a = Scenario()
    assert a.config_hash() == Scenario().config_hash()
    assert a.config_hash() != a.with_values(seed=1).config_hash()
    assert len(a.config_hash()) == 64


@pytest.mark.parametrize("name", ["operating_point", "energy_sweep", "lossless_detection"])
def test_shipped_scenarios_load(name):
    sc = load(ROOT / "scenarios" / f"{name}.scenario")
    assert sc.name == name
    sc.sim_config()


def test_operating_point_scenario_values():
    sc = load(ROOT / "scenarios" / "operating_point.scenario")
    cfg = sc.sim_config()
    assert cfg.chain.total_zeta() == pytest.approx(0.684)
    assert cfg.rho == 0.99 and cfg.background_rate == 1100.0
    assert cfg.excitation.n_pulses == 150000
