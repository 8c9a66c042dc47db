"""Network scenario definition, validation, and configuration I/O.

Everything downstream (distance laws, association, coverage, Monte Carlo)
consumes a validated, immutable NetworkScenario.  All internal computation
is in linear units (W, m); dB/dBm values are accepted only at this boundary
and converted exactly once.
"""

from __future__ import annotations

import configparser
import enum
import io
import math
from dataclasses import dataclass, replace
from typing import Mapping, Optional, Sequence, Union

Number = Union[int, float]


class LinkState(enum.Enum):
    """LOS/NLOS tag attached to every path-loss evaluation."""

    LOS = "los"
    NLOS = "nlos"

    @property
    def other(self) -> "LinkState":
        return LinkState.NLOS if self is LinkState.LOS else LinkState.LOS


class ScenarioError(ValueError):
    """Raised when a raw scenario violates one or more invariants.

    ``violations`` lists (field path, message) pairs; nothing is accepted
    partially.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(f"{path}: {msg}" for path, msg in self.violations)
        super().__init__(f"invalid scenario: {lines}")


def db_to_linear(x: float) -> float:
    return 10.0 ** (x / 10.0)


def dbm_to_watt(x: float) -> float:
    return 10.0 ** ((x - 30.0) / 10.0)


def parse_quantity(value, kind: str) -> float:
    """Parse a config value into linear units.

    Plain numbers are taken as already linear (W for powers, dimensionless
    for gains/biases).  Strings may carry a unit suffix: ``"46 dBm"`` becomes
    10^((46-30)/10) W, ``"10 dB"`` becomes 10^(10/10).  ``kind`` is 'power'
    (dBm allowed), 'gain' (dB allowed) or 'plain' (no unit suffix allowed).
    """
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if not isinstance(value, str):
        raise ValueError(f"cannot parse {value!r} as a number")
    text = value.strip()
    lowered = text.lower()
    if lowered.endswith("dbm"):
        if kind != "power":
            raise ValueError(f"dBm unit not allowed here: {value!r}")
        return dbm_to_watt(float(text[:-3]))
    if lowered.endswith("db"):
        if kind not in ("gain", "power"):
            raise ValueError(f"dB unit not allowed here: {value!r}")
        return db_to_linear(float(text[:-2]))
    if lowered.endswith("w") and not lowered[-2:-1].isdigit() and kind == "power":
        return float(text[:-1])
    return float(text)


@dataclass(frozen=True)
class TierParams:
    """One BS tier: density (1/m^2), transmit power (W), association bias,
    and, for tiers that UEs cluster around, the Gaussian scatter spread (m)."""

    density: float
    tx_power: float
    bias: float
    hosts_clusters: bool = False
    cluster_sigma: Optional[float] = None


@dataclass(frozen=True)
class ChannelParams:
    """Path-loss and blockage parameters shared by all tiers.

    Path loss is kappa_s * r^alpha_s for link state s; LOS probability decays
    as exp(-blockage_epsilon * r).  Nakagami shapes are positive integers
    (1 = Rayleigh) and apply to the serving link only.
    """

    alpha_los: float
    alpha_nlos: float
    kappa_los: float
    kappa_nlos: float
    blockage_epsilon: float
    nakagami_los: int = 1
    nakagami_nlos: int = 1

    def alpha(self, state: LinkState) -> float:
        return self.alpha_los if state is LinkState.LOS else self.alpha_nlos

    def kappa(self, state: LinkState) -> float:
        return self.kappa_los if state is LinkState.LOS else self.kappa_nlos

    def nakagami(self, state: LinkState) -> int:
        return self.nakagami_los if state is LinkState.LOS else self.nakagami_nlos


@dataclass(frozen=True)
class AntennaParams:
    """Sectored antenna model: main/side lobe linear gains and main-lobe
    beamwidths (rad) for BS and UE arrays."""

    main_lobe_bs: float
    side_lobe_bs: float
    main_lobe_ue: float
    side_lobe_ue: float
    beamwidth_bs: float
    beamwidth_ue: float

    @property
    def boresight_gain(self) -> float:
        """Gain of a beam-aligned serving link (both main lobes)."""
        return self.main_lobe_bs * self.main_lobe_ue


@dataclass(frozen=True)
class NetworkScenario:
    """Full parameter set of the K-tier network.

    ``tiers`` is ordered; tier indices used throughout the package are
    1-based, with index 0 reserved for the typical UE's own cluster-center
    BS (a derived role, never a configured tier).  ``cluster_center_power``
    and ``cluster_center_bias`` default to the typical tier's values.
    """

    tiers: tuple
    ue_tx_power: float
    noise_power: float
    channel: ChannelParams
    antenna: AntennaParams
    ue_density: float
    typical_ue_tier: int
    power_control_tau: float = 0.0
    bandwidth: float = 100e6
    cluster_center_power: Optional[float] = None
    cluster_center_bias: Optional[float] = None

    @property
    def num_tiers(self) -> int:
        return len(self.tiers)

    def tier(self, j: int) -> TierParams:
        """Tier by 1-based index."""
        if not 1 <= j <= len(self.tiers):
            raise IndexError(f"tier index {j} out of range 1..{len(self.tiers)}")
        return self.tiers[j - 1]

    @property
    def cluster_tiers(self) -> tuple:
        """1-based indices of tiers that UEs cluster around."""
        return tuple(j for j in range(1, len(self.tiers) + 1) if self.tiers[j - 1].hosts_clusters)

    @property
    def typical_sigma(self) -> float:
        return self.tier(self.typical_ue_tier).cluster_sigma

    @property
    def center_power(self) -> float:
        if self.cluster_center_power is not None:
            return self.cluster_center_power
        return self.tier(self.typical_ue_tier).tx_power

    @property
    def center_bias(self) -> float:
        if self.cluster_center_bias is not None:
            return self.cluster_center_bias
        return self.tier(self.typical_ue_tier).bias

    def power_bias(self, j: int) -> float:
        """P_j * B_j for a candidate tier, with j=0 the cluster center."""
        if j == 0:
            return self.center_power * self.center_bias
        t = self.tier(j)
        return t.tx_power * t.bias

    def with_typical_tier(self, k: int) -> "NetworkScenario":
        """Same network viewed from a typical UE of cluster tier ``k``."""
        return replace(self, typical_ue_tier=k)


def mean_cluster_size(scenario: NetworkScenario, tier: int) -> float:
    """Average number of UEs per cluster of ``tier``: ue_density / tier density."""
    t = scenario.tier(tier)
    if not t.hosts_clusters:
        raise ValueError(f"tier {tier} does not host UE clusters")
    return scenario.ue_density / t.density


# ---------------------------------------------------------------------------
# Validation

_NETWORK_KEYS = {
    "ue_tx_power": "power",
    "noise_power": "power",
    "ue_density": "plain",
    "typical_ue_tier": "plain",
    "power_control_tau": "plain",
    "bandwidth": "plain",
    "cluster_center_power": "power",
    "cluster_center_bias": "gain",
}
_CHANNEL_KEYS = {
    "alpha_los": "plain",
    "alpha_nlos": "plain",
    "kappa_los": "gain",
    "kappa_nlos": "gain",
    "blockage_epsilon": "plain",
    "nakagami_los": "plain",
    "nakagami_nlos": "plain",
}
_ANTENNA_KEYS = {
    "main_lobe_bs": "gain",
    "side_lobe_bs": "gain",
    "main_lobe_ue": "gain",
    "side_lobe_ue": "gain",
    "beamwidth_bs": "plain",
    "beamwidth_ue": "plain",
}
_TIER_KEYS = {
    "density": "plain",
    "tx_power": "power",
    "bias": "gain",
    "hosts_clusters": "bool",
    "cluster_sigma": "plain",
}


def _parse_bool(value):
    if isinstance(value, bool):
        return value
    if isinstance(value, str):
        lowered = value.strip().lower()
        if lowered in ("true", "yes", "1", "on"):
            return True
        if lowered in ("false", "no", "0", "off"):
            return False
    raise ValueError(f"cannot parse {value!r} as a boolean")


def _convert_section(raw: Mapping, schema: Mapping, path: str, errors: list) -> dict:
    out = {}
    for key in raw:
        if key not in schema:
            errors.append((f"{path}.{key}", "unknown key"))
    for key, kind in schema.items():
        if key not in raw:
            continue
        try:
            if kind == "bool":
                out[key] = _parse_bool(raw[key])
            else:
                out[key] = parse_quantity(raw[key], kind)
        except ValueError as exc:
            errors.append((f"{path}.{key}", str(exc)))
    return out


def validate(raw) -> NetworkScenario:
    """Normalize and check a raw scenario.

    ``raw`` is either an already-built NetworkScenario (re-checked, returned
    as-is when valid: validation is idempotent) or a nested mapping with
    sections ``network``, ``channel``, ``antenna`` and a ``tiers`` list, as
    produced by :func:`load_config`.  Every invariant violation is collected
    and reported with its field path; nothing is accepted partially.
    """
    if isinstance(raw, NetworkScenario):
        scenario = raw
    else:
        scenario = _build_from_mapping(raw)
    errors = []
    _check_scenario(scenario, errors)
    if errors:
        raise ScenarioError(errors)
    return scenario


def _build_from_mapping(raw: Mapping) -> NetworkScenario:
    errors = []
    known_sections = {"network", "channel", "antenna", "tiers"}
    for key in raw:
        if key not in known_sections:
            errors.append((key, "unknown section"))

    net = _convert_section(raw.get("network", {}), _NETWORK_KEYS, "network", errors)
    chan = _convert_section(raw.get("channel", {}), _CHANNEL_KEYS, "channel", errors)
    ant = _convert_section(raw.get("antenna", {}), _ANTENNA_KEYS, "antenna", errors)

    tiers_raw = raw.get("tiers", [])
    tiers = []
    for idx, tier_raw in enumerate(tiers_raw):
        t = _convert_section(tier_raw, _TIER_KEYS, f"tiers[{idx}]", errors)
        tiers.append(t)

    for name, section, schema in (
        ("network", net, ("ue_tx_power", "noise_power", "ue_density", "typical_ue_tier")),
        ("channel", chan, tuple(k for k in _CHANNEL_KEYS if not k.startswith("nakagami"))),
        ("antenna", ant, tuple(_ANTENNA_KEYS)),
    ):
        for key in schema:
            if key not in section:
                errors.append((f"{name}.{key}", "missing required key"))
    for idx, t in enumerate(tiers):
        for key in ("density", "tx_power", "bias"):
            if key not in t:
                errors.append((f"tiers[{idx}].{key}", "missing required key"))
    if not tiers:
        errors.append(("tiers", "at least one tier required"))
    if errors:
        raise ScenarioError(errors)

    for key in ("nakagami_los", "nakagami_nlos"):
        value = chan.get(key, 1)
        if value != int(value):
            raise ScenarioError([(f"channel.{key}", "Nakagami shape must be an integer")])
        chan[key] = int(value)

    tier_objs = tuple(
        TierParams(
            density=t["density"],
            tx_power=t["tx_power"],
            bias=t["bias"],
            hosts_clusters=t.get("hosts_clusters", False),
            cluster_sigma=t.get("cluster_sigma"),
        )
        for t in tiers
    )
    return NetworkScenario(
        tiers=tier_objs,
        ue_tx_power=net["ue_tx_power"],
        noise_power=net["noise_power"],
        channel=ChannelParams(**chan),
        antenna=AntennaParams(**ant),
        ue_density=net["ue_density"],
        typical_ue_tier=int(net["typical_ue_tier"]),
        power_control_tau=net.get("power_control_tau", 0.0),
        bandwidth=net.get("bandwidth", 100e6),
        cluster_center_power=net.get("cluster_center_power"),
        cluster_center_bias=net.get("cluster_center_bias"),
    )


def _check_scenario(sc: NetworkScenario, errors: list) -> None:
    def positive(path, value):
        if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
            errors.append((path, "must be positive"))
            return False
        return True

    for idx, t in enumerate(sc.tiers):
        positive(f"tiers[{idx}].density", t.density)
        positive(f"tiers[{idx}].tx_power", t.tx_power)
        if not (t.bias > 0):
            errors.append((f"tiers[{idx}].bias", "bias must be positive"))
        if t.hosts_clusters:
            if t.cluster_sigma is None or not (t.cluster_sigma > 0):
                errors.append((f"tiers[{idx}].cluster_sigma", "must be positive when hosts_clusters"))
        elif t.cluster_sigma is not None:
            errors.append((f"tiers[{idx}].cluster_sigma", "only allowed when hosts_clusters"))

    ch = sc.channel
    if not (ch.alpha_los > 0):
        errors.append(("channel.alpha_los", "must be positive"))
    if not (ch.alpha_nlos >= ch.alpha_los):
        errors.append(("channel.alpha_nlos", "must be >= alpha_los"))
    positive("channel.kappa_los", ch.kappa_los)
    positive("channel.kappa_nlos", ch.kappa_nlos)
    if not (ch.blockage_epsilon >= 0):
        errors.append(("channel.blockage_epsilon", "must be >= 0"))
    for name, value in (("nakagami_los", ch.nakagami_los), ("nakagami_nlos", ch.nakagami_nlos)):
        if not (isinstance(value, int) and value >= 1):
            errors.append((f"channel.{name}", "must be an integer >= 1"))

    ant = sc.antenna
    for side in ("bs", "ue"):
        main = getattr(ant, f"main_lobe_{side}")
        lobe = getattr(ant, f"side_lobe_{side}")
        width = getattr(ant, f"beamwidth_{side}")
        if not (lobe > 0):
            errors.append((f"antenna.side_lobe_{side}", "must be positive"))
        elif not (main >= lobe):
            errors.append((f"antenna.main_lobe_{side}", "must be >= side lobe"))
        if not (0 < width <= 2 * math.pi):
            errors.append((f"antenna.beamwidth_{side}", "must be in (0, 2*pi]"))

    positive("network.ue_tx_power", sc.ue_tx_power)
    positive("network.noise_power", sc.noise_power)
    positive("network.ue_density", sc.ue_density)
    positive("network.bandwidth", sc.bandwidth)
    if not (0.0 <= sc.power_control_tau <= 1.0):
        errors.append(("network.power_control_tau", "must be in [0, 1]"))
    if sc.cluster_center_power is not None:
        positive("network.cluster_center_power", sc.cluster_center_power)
    if sc.cluster_center_bias is not None:
        positive("network.cluster_center_bias", sc.cluster_center_bias)

    cluster_tiers = [j for j in range(1, len(sc.tiers) + 1) if sc.tiers[j - 1].hosts_clusters]
    if not cluster_tiers:
        errors.append(("tiers", "at least one tier must host clusters"))
    elif sc.typical_ue_tier not in cluster_tiers:
        errors.append(("network.typical_ue_tier", "must refer to a cluster-hosting tier"))


# ---------------------------------------------------------------------------
# Built-in scenarios

#: Free-space 1 m path-loss intercept at the 28 GHz carrier.
CARRIER_FREQUENCY = 28e9
SPEED_OF_LIGHT = 299792458.0
DEFAULT_INTERCEPT = (4.0 * math.pi * CARRIER_FREQUENCY / SPEED_OF_LIGHT) ** 2


def default_scenario(sigma: float = 25.0) -> NetworkScenario:
    """Two-tier reference network: dense low-power small cells hosting the UE
    clusters plus sparse high-power macros; mmWave blockage and sectored
    beams.  Every CLI command runs against this when no config is given."""
    return validate(
        {
            "network": {
                "ue_tx_power": "23 dBm",
                "noise_power": "-84 dBm",
                "ue_density": 5e-4,
                "typical_ue_tier": 1,
                "power_control_tau": 0.0,
                "bandwidth": 100e6,
            },
            "channel": {
                "alpha_los": 2.0,
                "alpha_nlos": 4.0,
                "kappa_los": DEFAULT_INTERCEPT,
                "kappa_nlos": DEFAULT_INTERCEPT,
                "blockage_epsilon": math.sqrt(2.0) / 200.0,
                "nakagami_los": 1,
                "nakagami_nlos": 1,
            },
            "antenna": {
                "main_lobe_bs": "10 dB",
                "side_lobe_bs": "-10 dB",
                "main_lobe_ue": "10 dB",
                "side_lobe_ue": "-10 dB",
                "beamwidth_bs": math.pi / 6.0,
                "beamwidth_ue": math.pi / 6.0,
            },
            "tiers": [
                {
                    "density": 1e-4,
                    "tx_power": "30 dBm",
                    "bias": 1.0,
                    "hosts_clusters": True,
                    "cluster_sigma": sigma,
                },
                {
                    "density": 1e-5,
                    "tx_power": "46 dBm",
                    "bias": 1.0,
                },
            ],
        }
    )


def three_tier_scenario(sigma: float = 25.0) -> NetworkScenario:
    """Default network plus a second, sparser small-cell tier that also hosts
    clusters; the macro tier becomes tier 3."""
    base = default_scenario(sigma)
    extra = TierParams(density=1e-5, tx_power=1.0, bias=1.0, hosts_clusters=True, cluster_sigma=sigma)
    return validate(replace(base, tiers=(base.tiers[0], extra, base.tiers[1])))


# ---------------------------------------------------------------------------
# Config file I/O (INI-style; sections [network], [channel], [antenna],
# [tier.1] .. [tier.K]; unknown sections or keys are errors)


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def loads_config(text: str) -> dict:
    """Parse config text into the raw nested mapping accepted by validate()."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    parser.read_string(text)

    raw = {"network": {}, "channel": {}, "antenna": {}, "tiers": []}
    tier_sections = {}
    for section in parser.sections():
        if section in ("network", "channel", "antenna"):
            raw[section] = dict(parser.items(section))
        elif section.startswith("tier."):
            try:
                idx = int(section.split(".", 1)[1])
            except ValueError:
                raise ScenarioError([(section, "tier sections must be named tier.<index>")])
            tier_sections[idx] = dict(parser.items(section))
        else:
            raise ScenarioError([(section, "unknown section")])
    if tier_sections:
        expected = list(range(1, len(tier_sections) + 1))
        if sorted(tier_sections) != expected:
            raise ScenarioError([("tiers", f"tier sections must be numbered 1..{len(tier_sections)}")])
        raw["tiers"] = [tier_sections[i] for i in expected]
    return raw


def load_config(path) -> dict:
    with open(path, "r", encoding="utf-8") as handle:
        return loads_config(handle.read())


def dumps_config(scenario: NetworkScenario) -> str:
    """Serialize a validated scenario; floats use repr so a round-trip through
    loads_config/validate reproduces every numeric field bit-exactly."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str

    network = {
        "ue_tx_power": scenario.ue_tx_power,
        "noise_power": scenario.noise_power,
        "ue_density": scenario.ue_density,
        "typical_ue_tier": scenario.typical_ue_tier,
        "power_control_tau": scenario.power_control_tau,
        "bandwidth": scenario.bandwidth,
    }
    if scenario.cluster_center_power is not None:
        network["cluster_center_power"] = scenario.cluster_center_power
    if scenario.cluster_center_bias is not None:
        network["cluster_center_bias"] = scenario.cluster_center_bias
    parser["network"] = {k: _format_value(v) for k, v in network.items()}
    parser["channel"] = {
        k: _format_value(getattr(scenario.channel, k)) for k in _CHANNEL_KEYS
    }
    parser["antenna"] = {
        k: _format_value(getattr(scenario.antenna, k)) for k in _ANTENNA_KEYS
    }
    for j, tier in enumerate(scenario.tiers, start=1):
        section = {
            "density": _format_value(tier.density),
            "tx_power": _format_value(tier.tx_power),
            "bias": _format_value(tier.bias),
            "hosts_clusters": _format_value(tier.hosts_clusters),
        }
        if tier.cluster_sigma is not None:
            section["cluster_sigma"] = _format_value(tier.cluster_sigma)
        parser[f"tier.{j}"] = section

    buffer = io.StringIO()
    parser.write(buffer)
    return buffer.getvalue()


def dump_config(scenario: NetworkScenario, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(dumps_config(scenario))
