"""Command-line front end.

Subcommands evaluate association probabilities (``ap``), coverage (``cp``),
spectral efficiency (``rate``), Monte Carlo estimates (``mc``), parameter
sweeps including the canned figure presets (``sweep``), and the built-in
cross-validation checks (``selftest``).  Output is CSV (RFC-4180 style,
'.' decimal, no locale): comment lines echoing the normalized configuration
and overrides, then a header row, then one row per evaluation point.

Exit codes: 0 success, 2 configuration error, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence

from . import montecarlo
from .association import AssociationError, association_probabilities
from .coverage import (
    CoverageQuery,
    closed_form_two_tier,
    network_coverage,
    spectral_efficiency,
)
from .numerics import NonConvergenceError
from .scenario import (
    LinkState,
    NetworkScenario,
    ScenarioError,
    db_to_linear,
    default_scenario,
    load_config,
    three_tier_scenario,
    validate,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICS = 3


# ---------------------------------------------------------------------------
# Scenario parameter paths (shared by --set and sweep --param)

_NETWORK_FIELDS = {
    "ue_tx_power": "power",
    "noise_power": "power",
    "ue_density": "plain",
    "power_control_tau": "plain",
    "bandwidth": "plain",
    "cluster_center_power": "power",
    "cluster_center_bias": "gain",
}


def set_parameter(scenario: NetworkScenario, path: str, value) -> NetworkScenario:
    """Apply one override like ``tiers[0].cluster_sigma=25`` (0-based tier
    list index), ``channel.blockage_epsilon=0.01`` or ``ue_tx_power=23 dBm``."""
    from .scenario import parse_quantity, _CHANNEL_KEYS, _ANTENNA_KEYS, _TIER_KEYS

    if path.startswith("tiers["):
        idx_end = path.index("]")
        idx = int(path[6:idx_end])
        field = path[idx_end + 2:]
        if not 0 <= idx < len(scenario.tiers):
            raise ScenarioError([(path, "tier index out of range")])
        if field == "hosts_clusters":
            parsed = str(value).strip().lower() in ("true", "1", "yes", "on")
        elif field in _TIER_KEYS:
            parsed = parse_quantity(value, _TIER_KEYS[field])
        else:
            raise ScenarioError([(path, "unknown tier field")])
        tiers = list(scenario.tiers)
        tiers[idx] = replace(tiers[idx], **{field: parsed})
        return validate(replace(scenario, tiers=tuple(tiers)))
    section, _, field = path.partition(".")
    if section == "channel" and field in _CHANNEL_KEYS:
        parsed = parse_quantity(value, _CHANNEL_KEYS[field])
        if field.startswith("nakagami"):
            parsed = int(parsed)
        return validate(replace(scenario, channel=replace(scenario.channel, **{field: parsed})))
    if section == "antenna" and field in _ANTENNA_KEYS:
        parsed = parse_quantity(value, _ANTENNA_KEYS[field])
        return validate(replace(scenario, antenna=replace(scenario.antenna, **{field: parsed})))
    if path == "typical_ue_tier":
        return validate(replace(scenario, typical_ue_tier=int(value)))
    if path in _NETWORK_FIELDS:
        parsed = parse_quantity(value, _NETWORK_FIELDS[path])
        return validate(replace(scenario, **{path: parsed}))
    raise ScenarioError([(path, "unknown parameter path")])


def apply_sweep_value(scenario, param, value):
    """Sweep axes: any --set path, plus the derived axes ``threshold_db``
    (returned separately), ``bias_ratio_db`` (tier1/tier2 bias) and
    ``power_ratio_db`` (tier1/tier2 power)."""
    if param == "threshold_db":
        return scenario, float(value)
    if param == "bias_ratio_db":
        scenario = set_parameter(scenario, "tiers[0].bias", db_to_linear(float(value)))
        scenario = set_parameter(scenario, "tiers[1].bias", 1.0)
        return scenario, None
    if param == "power_ratio_db":
        p2 = scenario.tiers[1].tx_power
        scenario = set_parameter(scenario, "tiers[0].tx_power", p2 * db_to_linear(float(value)))
        return scenario, None
    return set_parameter(scenario, param, value), None


# ---------------------------------------------------------------------------
# Column registry

def _event_label(j: int, s: LinkState) -> str:
    return f"A1{j}_{'los' if s is LinkState.LOS else 'nlos'}"


def column_registry(num_tiers: int) -> List[str]:
    cols = []
    for j in range(0, num_tiers + 1):
        cols.append(f"A1{j}")
        for s in (LinkState.LOS, LinkState.NLOS):
            cols.append(_event_label(j, s))
    cols.append("A_sum")
    for j in range(0, num_tiers + 1):
        cols.extend([f"PC1{j}", f"PCc1{j}"])
    cols.extend(["PC", "R", "RATE"])
    return cols


def _association_columns(events) -> Dict[str, float]:
    out = {}
    total = 0.0
    per_tier: Dict[int, float] = {}
    for e in events:
        out[_event_label(e.serving, e.state)] = e.probability
        per_tier[e.serving] = per_tier.get(e.serving, 0.0) + e.probability
        total += e.probability
    for j, v in per_tier.items():
        out[f"A1{j}"] = v
    out["A_sum"] = total
    return out


def _coverage_columns(result) -> Dict[str, float]:
    out = {}
    for (j, s), v in result.per_event.items():
        out[f"PCc1{j}_{'los' if s is LinkState.LOS else 'nlos'}"] = v
    for j, v in result.per_tier.items():
        a = sum(result.association.get((j, s), 0.0) for s in (LinkState.LOS, LinkState.NLOS))
        out[f"PC1{j}"] = v
        if a > 0:
            out[f"PCc1{j}"] = v / a
    out["PC"] = result.total
    return out


# ---------------------------------------------------------------------------
# Sweep presets reproducing the reference figure axes

@dataclass(frozen=True)
class SweepSpec:
    """One canned sweep: parameter path, values, output columns, method,
    and optional labeled configuration variants evaluated side by side."""

    param: str
    values: tuple
    columns: tuple
    method: str = "analytic"
    threshold_db: float = 10.0
    variants: Optional[Dict[str, Dict[str, str]]] = None
    base: str = "default"
    description: str = ""


def emit_figure_recipes() -> Dict[str, SweepSpec]:
    """Stable, documented sweep presets mirroring the reference experiments."""
    return {
        "fig3": SweepSpec(
            param="tiers[0].cluster_sigma",
            values=(10, 20, 25, 30, 40, 50, 60),
            columns=("A10", "A11", "A12", "PC10", "PC11", "PC12", "PC"),
            description="association and coverage vs cluster spread at T=10 dB",
        ),
        "fig4": SweepSpec(
            param="tiers[0].cluster_sigma",
            values=(10, 20, 25, 30, 40, 50, 60),
            columns=("A10", "A11", "A12", "A13", "PC"),
            base="three-tier",
            description="three-tier variant of the cluster-spread sweep",
        ),
        "fig5": SweepSpec(
            param="threshold_db",
            values=(-10, -5, 0, 5, 10, 15, 20, 25, 30),
            columns=("PC",),
            variants={
                "sigma25_sinr": {"tiers[0].cluster_sigma": "25", "mode": "sinr"},
                "sigma25_snr": {"tiers[0].cluster_sigma": "25", "mode": "noise-limited"},
                "sigma500_sinr": {"tiers[0].cluster_sigma": "500", "mode": "sinr"},
                "sigma500_snr": {"tiers[0].cluster_sigma": "500", "mode": "noise-limited"},
            },
            description="coverage vs threshold, clustered (25 m) vs near-PPP (500 m), with/without interference",
        ),
        "fig6": SweepSpec(
            param="threshold_db",
            values=(-10, -5, 0, 5, 10, 15, 20, 25, 30),
            columns=("PC",),
            variants={
                "no_pc_sinr": {"power_control_tau": "0.0", "mode": "sinr"},
                "no_pc_snr": {"power_control_tau": "0.0", "mode": "noise-limited"},
                "pc_sinr": {"power_control_tau": "0.5", "mode": "sinr"},
                "pc_snr": {"power_control_tau": "0.5", "mode": "noise-limited"},
            },
            description="coverage vs threshold with and without fractional power control",
        ),
        "fig7": SweepSpec(
            param="threshold_db",
            values=(-10, -5, 0, 5, 10, 15, 20, 25, 30),
            columns=("PC",),
            variants={
                "rayleigh": {"fading": "rayleigh"},
                "nakagami_3_2": {
                    "fading": "nakagami",
                    "channel.nakagami_los": "3",
                    "channel.nakagami_nlos": "2",
                },
            },
            description="coverage vs threshold for Rayleigh vs Nakagami(3,2) serving links",
        ),
        "fig8": SweepSpec(
            param="bias_ratio_db",
            values=(0, 5, 10, 15),
            columns=("A10", "A11", "A12"),
            description="association vs small-cell/macro bias ratio",
        ),
        "fig9": SweepSpec(
            param="bias_ratio_db",
            values=(0, 5, 10, 15),
            columns=("PCc10", "PCc11", "PCc12", "PC10", "PC11", "PC12", "PC"),
            description="conditional and per-tier coverage vs bias ratio at T=10 dB",
        ),
        "fig10": SweepSpec(
            param="tiers[0].density",
            values=(1e-6, 1e-5, 1e-4, 1e-3),
            columns=("A10", "A11", "A12"),
            description="association vs small-cell density",
        ),
        "fig11": SweepSpec(
            param="tiers[0].density",
            values=(1e-6, 1e-5, 1e-4, 1e-3),
            columns=("PC10", "PC11", "PC12", "PC"),
            description="coverage vs small-cell density at T=10 dB",
        ),
    }


# ---------------------------------------------------------------------------
# Output helpers

def _format(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


class _Writer:
    def __init__(self, out_path: Optional[str]):
        self.handle = open(out_path, "w", encoding="utf-8", newline="") if out_path else sys.stdout
        self._owns = out_path is not None
        self.writer = csv.writer(self.handle, lineterminator="\n")

    def comment(self, text: str):
        self.handle.write(f"# {text}\n")

    def row(self, cells: Sequence):
        self.writer.writerow([_format(c) for c in cells])

    def close(self):
        if self._owns:
            self.handle.close()


def _echo_config(writer: _Writer, scenario: NetworkScenario, overrides, args):
    writer.comment(
        "scenario: "
        + " ".join(
            f"tier{j}(density={t.density!r},power={t.tx_power!r},bias={t.bias!r}"
            + (f",sigma={t.cluster_sigma!r})" if t.hosts_clusters else ")")
            for j, t in enumerate(scenario.tiers, start=1)
        )
    )
    ch = scenario.channel
    writer.comment(
        f"channel: alpha=({ch.alpha_los!r},{ch.alpha_nlos!r}) kappa=({ch.kappa_los!r},{ch.kappa_nlos!r}) "
        f"eps={ch.blockage_epsilon!r} nakagami=({ch.nakagami_los},{ch.nakagami_nlos})"
    )
    writer.comment(
        f"network: ue_tx_power={scenario.ue_tx_power!r} noise={scenario.noise_power!r} "
        f"ue_density={scenario.ue_density!r} tau={scenario.power_control_tau!r} "
        f"bandwidth={scenario.bandwidth!r} typical_tier={scenario.typical_ue_tier}"
    )
    if overrides:
        writer.comment("overrides: " + " ".join(overrides))
    if getattr(args, "seed", None) is not None:
        writer.comment(f"seed: {args.seed}")


def _load_scenario(args) -> NetworkScenario:
    if getattr(args, "config", None):
        scenario = validate(load_config(args.config))
    else:
        scenario = default_scenario()
    for item in getattr(args, "set", None) or []:
        key, _, value = item.partition("=")
        if not value:
            raise ScenarioError([(item, "expected key=value")])
        scenario = set_parameter(scenario, key.strip(), value.strip())
    return scenario


def _query_from_args(args, threshold_db=None, mode=None, fading=None, tau=None):
    t_db = threshold_db if threshold_db is not None else args.threshold_db
    return CoverageQuery(
        threshold=db_to_linear(t_db),
        mode=mode or getattr(args, "mode", "sinr"),
        fading=fading or getattr(args, "fading", "rayleigh"),
        power_control_tau=tau,
    )


# ---------------------------------------------------------------------------
# Subcommands

def _cmd_ap(args) -> int:
    scenario = _load_scenario(args)
    writer = _Writer(args.out)
    _echo_config(writer, scenario, args.set, args)
    cols = ["method"] + [c for c in column_registry(scenario.num_tiers) if c.startswith("A")]
    writer.row(cols)
    if args.method in ("analytic", "both"):
        values = _association_columns(association_probabilities(scenario))
        writer.row(["analytic"] + [values.get(c, "") for c in cols[1:]])
    if args.method in ("mc", "both"):
        est = montecarlo.estimate_association(scenario, args.trials, args.seed,
                                              workers=args.workers)
        values, total = {}, 0.0
        for (j, s), out in est.items():
            values[_event_label(j, s)] = out.estimate
            values[f"A1{j}"] = values.get(f"A1{j}", 0.0) + out.estimate
            total += out.estimate
        values["A_sum"] = total
        writer.row(["mc"] + [values.get(c, "") for c in cols[1:]])
    writer.close()
    return EXIT_OK


def _cmd_cp(args) -> int:
    scenario = _load_scenario(args)
    query = _query_from_args(args, tau=args.tau)
    writer = _Writer(args.out)
    _echo_config(writer, scenario, args.set, args)
    writer.comment(f"query: threshold_db={args.threshold_db!r} mode={query.mode} fading={query.fading}")
    cols = ["method"] + [
        c for c in column_registry(scenario.num_tiers) if c.startswith("PC") or c == "PC"
    ]
    writer.row(cols)
    if args.method in ("analytic", "both"):
        result = network_coverage(scenario, query)
        values = _coverage_columns(result)
        writer.row(["analytic"] + [values.get(c, "") for c in cols[1:]])
    if args.method in ("mc", "both"):
        result = montecarlo.estimate_coverage(scenario, query, args.trials, args.seed,
                                              workers=args.workers)
        values = _coverage_columns(result)
        writer.row(["mc"] + [values.get(c, "") for c in cols[1:]])
    writer.close()
    return EXIT_OK


def _cmd_rate(args) -> int:
    scenario = _load_scenario(args)
    query = _query_from_args(args, threshold_db=0.0, tau=args.tau)
    writer = _Writer(args.out)
    _echo_config(writer, scenario, args.set, args)
    writer.row(["method", "R", "RATE"])
    if args.method in ("analytic", "both"):
        result = spectral_efficiency(scenario, query)
        writer.row(["analytic", result.total, result.rate])
    if args.method in ("mc", "both"):
        est, rate = montecarlo.estimate_rate(scenario, args.trials, args.seed,
                                             workers=args.workers)
        writer.row(["mc", est.estimate, rate])
    writer.close()
    return EXIT_OK


def _cmd_mc(args) -> int:
    scenario = _load_scenario(args)
    query = _query_from_args(args)
    writer = _Writer(args.out)
    _echo_config(writer, scenario, args.set, args)
    writer.comment(f"trials: {args.trials}")
    samples = montecarlo.simulate_samples(
        scenario, args.trials, args.seed, workers=args.workers,
        fading=query.fading,
    )
    total, per_event = montecarlo.coverage_from_samples(
        samples, query.threshold, scenario.num_tiers, "sinr"
    )
    est, rate = montecarlo.estimate_rate(scenario, args.trials, args.seed, samples=samples)
    cols = ["quantity", "estimate", "standard_error", "trials"]
    writer.row(cols)
    writer.row(["PC", total.estimate, total.standard_error, total.trials])
    for (j, s), out in sorted(per_event.items(), key=lambda kv: (kv[0][0], kv[0][1].value)):
        label = f"PCc1{j}_{'los' if s is LinkState.LOS else 'nlos'}"
        writer.row([label, out.estimate, out.standard_error, out.trials])
    writer.row(["R", est.estimate, est.standard_error, est.trials])
    writer.row(["RATE", rate, "", args.trials])
    writer.close()
    return EXIT_OK


def _sweep_point(scenario, query, columns, method, args):
    values: Dict[str, float] = {}
    need_assoc = any(c.startswith("A") for c in columns)
    need_cov = any(c.startswith("PC") for c in columns)
    need_rate = any(c in ("R", "RATE") for c in columns)
    if method == "analytic":
        events = association_probabilities(scenario) if (need_assoc or need_cov) else None
        if need_assoc:
            values.update(_association_columns(events))
        if need_cov:
            values.update(_coverage_columns(network_coverage(scenario, query, events=events)))
        if need_rate:
            result = spectral_efficiency(scenario, query, events=events)
            values["R"] = result.total
            values["RATE"] = result.rate
    else:
        if need_assoc:
            est = montecarlo.estimate_association(scenario, args.trials, args.seed,
                                                  workers=args.workers)
            for (j, s), out in est.items():
                values[_event_label(j, s)] = out.estimate
                values[f"A1{j}"] = values.get(f"A1{j}", 0.0) + out.estimate
        if need_cov:
            result = montecarlo.estimate_coverage(scenario, query, args.trials, args.seed,
                                                  workers=args.workers)
            values.update(_coverage_columns(result))
        if need_rate:
            est, rate = montecarlo.estimate_rate(scenario, args.trials, args.seed,
                                                 workers=args.workers)
            values["R"] = est.estimate
            values["RATE"] = rate
    return values


def _cmd_sweep(args) -> int:
    presets = emit_figure_recipes()
    if args.list_presets:
        writer = _Writer(args.out)
        writer.row(["preset", "param", "values", "columns", "description"])
        for name, spec in presets.items():
            writer.row([name, spec.param, ";".join(map(str, spec.values)),
                        ";".join(spec.columns), spec.description])
        writer.close()
        return EXIT_OK

    if args.preset:
        spec = presets.get(args.preset)
        if spec is None:
            raise ScenarioError([("preset", f"unknown preset {args.preset!r}; see --list-presets")])
        base = three_tier_scenario() if spec.base == "three-tier" else default_scenario()
        scenario = base
        for item in args.set or []:
            key, _, value = item.partition("=")
            scenario = set_parameter(scenario, key.strip(), value.strip())
        param, raw_values, columns = spec.param, spec.values, list(spec.columns)
        variants = spec.variants or {"": {}}
        threshold_db = spec.threshold_db
        method = args.method if args.method != "both" else "analytic"
    else:
        if not args.param or not args.values or not args.columns:
            raise ScenarioError([("sweep", "--param, --values and --columns are required without --preset")])
        scenario = _load_scenario(args)
        param = args.param
        raw_values = [float(v) for v in args.values.split(",")]
        columns = args.columns.split(",")
        variants = {"": {}}
        threshold_db = args.threshold_db
        method = args.method
        registry = set(column_registry(scenario.num_tiers)) | {"R", "RATE"}
        unknown = [c for c in columns if c not in registry]
        if unknown:
            raise ScenarioError([("columns", f"unknown columns {unknown}; registry: {sorted(registry)}")])

    writer = _Writer(args.out)
    _echo_config(writer, scenario, args.set, args)
    writer.comment(f"sweep: param={param} method={method}")
    header = [param]
    for label in variants:
        for c in columns:
            header.append(f"{label}:{c}" if label else c)
    writer.row(header)
    for value in raw_values:
        row = [value]
        for label, overrides in variants.items():
            point_sc = scenario
            mode = getattr(args, "mode", "sinr")
            fading = "rayleigh"
            for key, override in overrides.items():
                if key == "mode":
                    mode = override
                elif key == "fading":
                    fading = override
                else:
                    point_sc = set_parameter(point_sc, key, override)
            point_sc, t_db = apply_sweep_value(point_sc, param, value)
            q = CoverageQuery(
                threshold=db_to_linear(t_db if t_db is not None else threshold_db),
                mode=mode,
                fading=fading,
            )
            values = _sweep_point(point_sc, q, columns, method, args)
            row.extend(values.get(c, "") for c in columns)
        writer.row(row)
    writer.close()
    return EXIT_OK


def _cmd_selftest(args) -> int:
    """Remark-style closed-form equivalence plus MC-vs-analytic association."""
    failures = 0

    scenario = default_scenario()
    reduced = validate(replace(
        scenario,
        channel=replace(scenario.channel, blockage_epsilon=0.0, alpha_nlos=2.0,
                        kappa_los=1.0, kappa_nlos=1.0),
        noise_power=2e-3,
    ))
    threshold = db_to_linear(10.0)
    closed = closed_form_two_tier(reduced, threshold)
    events = {e.key: e for e in association_probabilities(reduced)}
    from .coverage import conditional_coverage, _LaplaceProvider
    query = CoverageQuery(threshold=threshold, mode="noise-limited")
    provider = _LaplaceProvider(reduced, query)
    pairs = [
        ("A10", closed.a10, events[(0, LinkState.LOS)].probability),
        ("A11", closed.a11, events[(1, LinkState.LOS)].probability),
        ("A12", closed.a12, events[(2, LinkState.LOS)].probability),
        ("P10", closed.p10, conditional_coverage(reduced, events[(0, LinkState.LOS)], query, provider)),
        ("P11", closed.p11, conditional_coverage(reduced, events[(1, LinkState.LOS)], query, provider)),
        ("P12", closed.p12, conditional_coverage(reduced, events[(2, LinkState.LOS)], query, provider)),
    ]
    for name, want, got in pairs:
        ok = abs(got / want - 1.0) <= 1e-6
        failures += not ok
        print(f"closed-form {name}: {'PASS' if ok else 'FAIL'} "
              f"(closed {want:.8f}, pipeline {got:.8f})")

    est = montecarlo.estimate_association(scenario, args.trials, args.seed,
                                          workers=args.workers)
    for event in association_probabilities(scenario):
        mc_out = est[event.key]
        se = max(math.sqrt(event.probability * (1 - event.probability) / args.trials), 1e-12)
        ok = abs(mc_out.estimate - event.probability) <= 3.0 * se
        failures += not ok
        print(f"association {event.serving}/{event.state.value}: {'PASS' if ok else 'FAIL'} "
              f"(analytic {event.probability:.5f}, mc {mc_out.estimate:.5f}, 3se {3*se:.5f})")

    print(f"selftest: {'PASS' if failures == 0 else f'FAIL ({failures})'}")
    return EXIT_OK if failures == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hetuplink",
        description="Uplink association, coverage and rate engine for clustered mmWave networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, mc_defaults=True):
        p.add_argument("--config", help="scenario config file (INI; see README)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a scenario parameter (repeatable, applied left-to-right)")
        p.add_argument("--out", help="write CSV here instead of stdout")
        p.add_argument("--method", choices=["analytic", "mc", "both"], default="analytic")
        if mc_defaults:
            p.add_argument("--trials", type=int, default=20000)
            p.add_argument("--seed", type=int, default=1)
            p.add_argument("--workers", type=int, default=None,
                           help=f"worker processes (default ${montecarlo.WORKERS_ENV} or 1)")

    p_ap = sub.add_parser("ap", help="association probabilities")
    common(p_ap)
    p_ap.set_defaults(func=_cmd_ap)

    p_cp = sub.add_parser("cp", help="coverage probability")
    common(p_cp)
    p_cp.add_argument("--threshold-db", type=float, default=10.0)
    p_cp.add_argument("--mode", choices=["sinr", "noise-limited", "interference-limited",
                                         "cluster-center"], default="sinr")
    p_cp.add_argument("--fading", choices=["rayleigh", "nakagami"], default="rayleigh")
    p_cp.add_argument("--tau", type=float, default=None,
                      help="override the scenario's power-control factor")
    p_cp.set_defaults(func=_cmd_cp)

    p_rate = sub.add_parser("rate", help="average ergodic spectral efficiency")
    common(p_rate)
    p_rate.add_argument("--mode", choices=["sinr", "noise-limited", "interference-limited"],
                        default="sinr")
    p_rate.add_argument("--tau", type=float, default=None)
    p_rate.set_defaults(func=_cmd_rate)

    p_mc = sub.add_parser("mc", help="Monte Carlo estimates (coverage + rate)")
    common(p_mc)
    p_mc.add_argument("--threshold-db", type=float, default=10.0)
    p_mc.add_argument("--fading", choices=["rayleigh", "nakagami"], default="rayleigh")
    p_mc.set_defaults(func=_cmd_mc)

    p_sweep = sub.add_parser("sweep", help="parameter sweeps and figure presets")
    common(p_sweep)
    p_sweep.add_argument("--param", help="parameter path or derived axis")
    p_sweep.add_argument("--values", help="comma-separated sweep values")
    p_sweep.add_argument("--columns", help="comma-separated output columns")
    p_sweep.add_argument("--threshold-db", type=float, default=10.0)
    p_sweep.add_argument("--mode", choices=["sinr", "noise-limited", "interference-limited"],
                         default="sinr")
    p_sweep.add_argument("--preset", help="canned sweep name (fig3..fig11)")
    p_sweep.add_argument("--list-presets", action="store_true")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_self = sub.add_parser("selftest", help="closed-form and MC cross-validation checks")
    common(p_self)
    p_self.set_defaults(func=_cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, FileNotFoundError, AssociationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICS


if __name__ == "__main__":
    sys.exit(main())
