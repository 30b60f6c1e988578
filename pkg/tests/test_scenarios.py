import numpy as np
import pytest
import yaml
from hypothesis import given, settings, strategies as st

from seird_ap.cli import config_dir, load_config
from seird_ap.grid import SpatialGrid
from seird_ap.model import r0
from seird_ap.scenarios import (CONSTANT_BETA_LABELS, CONSTANT_BETAS, EPS_SWEEP, SCENARIOS,
                                Scenario, constant_beta_suite, get_scenario,
                                initial_condition_i, initial_condition_ii, reference_params,
                                stepwise_beta)


def test_reference_params_values():
    p = reference_params()
    assert p.gamma == 0.125
    assert p.mu == 1.0 / 83.0
    assert p.diffusivities == (0.05, 0.025, 0.001, 0.0)
    assert p.sigmas(1.0)[0] == pytest.approx(6.6667, abs=1e-4)
    assert reference_params(diffusion=False).diffusivities == (0.0, 0.0, 0.0, 0.0)


def test_initial_condition_i_values():
    grid = SpatialGrid(2.0, 200)
    ic = initial_condition_i(grid)
    j0, jh = grid.index_of(0.0), grid.index_of(0.5)
    assert ic.I[j0] == 0.04
    assert ic.S[jh] == pytest.approx(0.9195618934198397, rel=1e-12)
    assert ic.S[jh] == pytest.approx(0.91936, rel=3e-4)
    assert not ic.E.any() and not ic.R.any() and not ic.D.any()


def test_initial_condition_ii_values():
    grid = SpatialGrid(2.0, 200)
    ic = initial_condition_ii(grid)
    j0 = grid.index_of(0.0)
    assert ic.S[j0] == 0.96
    assert ic.S[j0] + ic.I[j0] == 1.0
    for x in (-1.4, 1.4):
        assert ic.S[grid.index_of(x)] == pytest.approx(4.358393257198546e-05, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 10.0), st.integers(2, 400))
def test_initial_conditions_nonnegative(L, n):
    grid = SpatialGrid(L, n)
    for ic in (initial_condition_i(grid), initial_condition_ii(grid)):
        assert ic.fields().min() >= 0.0


def test_stepwise_schedules():
    one, two = stepwise_beta(1), stepwise_beta(2)
    assert one(25.0) == 1.4995 and one(24.999) == 0.075
    assert two(50.0) == 1.4995 and two(99.0) == 0.05
    assert two.breakpoints == (0.0, 100.0 / 3.0, 200.0 / 3.0)
    with pytest.raises(ValueError):
        stepwise_beta(3)


def test_constant_suite():
    suite = constant_beta_suite()
    assert len(suite) == 6
    assert suite[0].values == (0.03,)
    assert [r.values[0] for r in suite] == list(CONSTANT_BETAS)
    assert suite[2].values[0] == 1.12
    assert [r.labels[0] for r in suite] == [f"R0={x:g}" for x in CONSTANT_BETA_LABELS]


def test_suite_labels_are_metadata_only():
    p = reference_params()
    computed = [r0(p, b) for b in CONSTANT_BETAS]
    assert computed[2] > 5.0  # the published label says 0.8


def test_eps_sweep_values():
    assert EPS_SWEEP == pytest.approx((2.0, 0.2, 0.02, 2e-3, 2e-4, 2e-6), rel=1e-15)


@pytest.mark.parametrize("name", sorted(SCENARIOS))
def test_registry_round_trip(name):
    sc = get_scenario(name)
    again = Scenario.from_dict(yaml.safe_load(yaml.safe_dump(sc.to_dict())))
    assert again == sc
    assert again.params.sigmas(1.0) == sc.params.sigmas(1.0)
    np.testing.assert_array_equal(again.initial_state().fields(), sc.initial_state().fields())


@pytest.mark.parametrize("name", sorted(SCENARIOS))
def test_shipped_config_matches_registry(name):
    config = load_config(config_dir() / f"{name}.yaml")
    assert config.scenario == get_scenario(name)
    assert config.t_final == get_scenario(name).t_final


def test_every_shipped_config_is_registered():
    shipped = {p.stem for p in config_dir().glob("*.yaml")}
    assert shipped == set(SCENARIOS)


def test_unknown_scenario():
    with pytest.raises(KeyError, match="ic-iii"):
        get_scenario("ic-iii")


def test_from_dict_rejects_unknown_key():
    data = get_scenario("ic-i").to_dict()
    data["betaa"] = 1
    with pytest.raises(KeyError, match="betaa"):
        Scenario.from_dict(data)


def test_scenario_validation():
    sc = get_scenario("ic-i")
    with pytest.raises(ValueError):
        sc.with_changes(dt=0.0)
    with pytest.raises(ValueError):
        sc.with_changes(initial_condition="iii")
    with pytest.raises(ValueError):
        sc.with_changes(bc="dirichlet")


def test_uniform_scenario_state():
    sc = get_scenario("homogeneous")
    f = sc.initial_state().fields()
    np.testing.assert_array_equal(f, np.array(sc.uniform_values)[:, None] * np.ones(201))
