import math
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hetuplink.scenario import (
    ScenarioError,
    default_scenario,
    dumps_config,
    loads_config,
    mean_cluster_size,
    parse_quantity,
    three_tier_scenario,
    validate,
)


def _raw(**overrides):
    raw = {
        "network": {
            "ue_tx_power": "23 dBm",
            "noise_power": "-84 dBm",
            "ue_density": 5e-4,
            "typical_ue_tier": 1,
        },
        "channel": {
            "alpha_los": 2.0,
            "alpha_nlos": 4.0,
            "kappa_los": 1.0,
            "kappa_nlos": 1.0,
            "blockage_epsilon": math.sqrt(2) / 200,
        },
        "antenna": {
            "main_lobe_bs": "10 dB",
            "side_lobe_bs": "-10 dB",
            "main_lobe_ue": "10 dB",
            "side_lobe_ue": "-10 dB",
            "beamwidth_bs": math.pi / 6,
            "beamwidth_ue": math.pi / 6,
        },
        "tiers": [
            {"density": 1e-4, "tx_power": "30 dBm", "bias": 1.0,
             "hosts_clusters": True, "cluster_sigma": 25.0},
            {"density": 1e-5, "tx_power": "46 dBm", "bias": 1.0},
        ],
    }
    for path, value in overrides.items():
        section, _, key = path.partition(".")
        if section == "tier0":
            raw["tiers"][0][key] = value
        elif section == "tier1":
            raw["tiers"][1][key] = value
        else:
            raw[section][key] = value
    return raw


def test_dbm_conversion():
    assert parse_quantity("46 dBm", "power") == pytest.approx(10 ** 1.6, rel=1e-12)
    assert parse_quantity("46 dBm", "power") == pytest.approx(39.8107, rel=1e-5)
    assert parse_quantity("10 dB", "gain") == pytest.approx(10.0)
    assert parse_quantity(0.5, "plain") == 0.5


def test_zero_bias_rejected_with_field_path():
    with pytest.raises(ScenarioError) as err:
        validate(_raw(**{"tier0.bias": 0.0}))
    paths = [p for p, _ in err.value.violations]
    messages = [m for _, m in err.value.violations]
    assert any("bias" in p for p in paths)
    assert any("bias must be positive" in m for m in messages)


def test_reference_values_accepted():
    scenario = default_scenario()
    # noise floor: -174 dBm/Hz + 10*log10(100 MHz) + 10 dB = -84 dBm
    assert scenario.noise_power == pytest.approx(10 ** (-11.4), rel=1e-12)
    assert scenario.noise_power == pytest.approx(3.981e-12, rel=1e-3)
    assert scenario.tier(2).tx_power == pytest.approx(10 ** 1.6, rel=1e-12)
    assert scenario.antenna.main_lobe_bs == pytest.approx(10.0)
    assert scenario.antenna.beamwidth_bs == pytest.approx(math.pi / 6)
    assert scenario.tier(1).density == 1e-4
    assert scenario.tier(2).density == 1e-5
    assert scenario.antenna.boresight_gain == pytest.approx(100.0)


@pytest.mark.parametrize(
    "ue_density,density,expected",
    [(5e-4, 1e-4, 5.0), (1e-4, 1e-4, 1.0), (2e-4, 5e-5, 4.0)],
)
def test_mean_cluster_size(ue_density, density, expected):
    raw = _raw(**{"network.ue_density": ue_density, "tier0.density": density})
    scenario = validate(raw)
    assert mean_cluster_size(scenario, 1) == pytest.approx(expected)


def test_mean_cluster_size_requires_cluster_tier():
    with pytest.raises(ValueError):
        mean_cluster_size(default_scenario(), 2)


def test_validate_idempotent():
    scenario = validate(_raw())
    assert validate(scenario) == scenario
    assert validate(validate(scenario)) == validate(scenario)


def test_config_round_trip_bit_exact():
    scenario = default_scenario()
    text = dumps_config(scenario)
    again = validate(loads_config(text))
    assert again == scenario
    # and a second round trip is itself stable
    assert dumps_config(again) == text


def test_unknown_keys_rejected():
    with pytest.raises(ScenarioError) as err:
        validate(_raw(**{"network.mystery_knob": 3}))
    assert any("mystery_knob" in p for p, _ in err.value.violations)

    with pytest.raises(ScenarioError):
        loads_config("[network]\nue_tx_power = 1\n\n[extra]\nfoo = 1\n")


def test_all_violations_collected():
    raw = _raw(**{"tier0.density": -1, "network.ue_tx_power": -2})
    with pytest.raises(ScenarioError) as err:
        validate(raw)
    assert len(err.value.violations) >= 2


def test_typical_tier_must_host_clusters():
    with pytest.raises(ScenarioError) as err:
        validate(_raw(**{"network.typical_ue_tier": 2}))
    assert any("typical_ue_tier" in p for p, _ in err.value.violations)


def test_cluster_sigma_required_iff_hosting():
    with pytest.raises(ScenarioError):
        validate(_raw(**{"tier0.cluster_sigma": None}))
    with pytest.raises(ScenarioError):
        validate(_raw(**{"tier1.cluster_sigma": 30.0}))


def test_non_integer_nakagami_rejected():
    with pytest.raises(ScenarioError):
        validate(_raw(**{"channel.nakagami_los": 2.5}))


def test_tau_range():
    with pytest.raises(ScenarioError):
        validate(_raw(**{"network.power_control_tau": 1.5}))


def test_center_role_defaults_to_typical_tier():
    scenario = default_scenario()
    assert scenario.center_power == scenario.tier(1).tx_power
    assert scenario.center_bias == scenario.tier(1).bias
    custom = validate(replace(scenario, cluster_center_bias=2.0))
    assert custom.center_bias == 2.0


def test_three_tier_scenario_valid():
    scenario = three_tier_scenario()
    assert scenario.num_tiers == 3
    assert scenario.cluster_tiers == (1, 2)


@settings(max_examples=25, deadline=None)
@given(
    sigma=st.floats(1.0, 300.0),
    bias=st.floats(0.01, 100.0),
    eps=st.floats(0.0, 0.1),
)
def test_validate_accepts_legal_parameters(sigma, bias, eps):
    raw = _raw(**{
        "tier0.cluster_sigma": sigma,
        "tier1.bias": bias,
        "channel.blockage_epsilon": eps,
    })
    scenario = validate(raw)
    assert validate(scenario) == scenario
