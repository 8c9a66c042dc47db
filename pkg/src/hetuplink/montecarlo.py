"""Ground-truth network-drop simulator.

One trial drops the full stochastic model: PPP base stations per tier in a
square guard region centered on the typical UE's cluster parent, the typical
UE Gaussian-displaced from the parent, independent LOS coins per UE-BS link
(frozen within a drop), exact biased-received-power association including
the parent as the tier-0 candidate, and the uplink interference field with
one active Gaussian-displaced UE per cluster-hosting BS outside the serving
cell, plus the serving BS's own cluster member when the UE is served by a
non-parent small cell.

Signal and interference are recorded separately per trial, so SINR, SNR and
signal-to-interference ratios all derive from a single run.

Determinism contract: every trial draws from its own counter-based stream
keyed by (seed, trial index), and per-trial results are reduced in trial
order, so outputs are identical for any worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from .channel import gain_distribution
from .scenario import LinkState, NetworkScenario

__all__ = [
    "EstimatorOutput",
    "DropRealization",
    "SimulationSamples",
    "region_half_width",
    "sample_drop",
    "estimate_association",
    "simulate_samples",
    "coverage_from_samples",
    "estimate_coverage",
    "estimate_rate",
    "dump_drops",
    "event_index",
    "EVENT_STATES",
]

EVENT_STATES = (LinkState.LOS, LinkState.NLOS)

WORKERS_ENV = "HETUPLINK_WORKERS"


def event_index(j: int, state: LinkState) -> int:
    return 2 * j + (0 if state is LinkState.LOS else 1)


def event_key(index: int) -> Tuple[int, LinkState]:
    return index // 2, EVENT_STATES[index % 2]


@dataclass(frozen=True)
class EstimatorOutput:
    estimate: float
    standard_error: float
    trials: int
    seed: int
    low_confidence: bool = False


@dataclass
class DropRealization:
    """One sampled network drop; distances are from the typical UE."""

    ue_position: np.ndarray
    parent_distance: float
    parent_state: LinkState
    bs_positions: Dict[int, np.ndarray]
    bs_distances: Dict[int, np.ndarray]
    bs_los: Dict[int, np.ndarray]
    serving_tier: int
    serving_state: LinkState
    serving_distance: float
    serving_position: np.ndarray
    signal: Optional[float] = None
    interference: Optional[float] = None
    sinr: Optional[float] = None
    interferer_distances: Optional[np.ndarray] = None
    interferer_gains: Optional[np.ndarray] = None
    interferer_fading: Optional[np.ndarray] = None
    interferer_los: Optional[np.ndarray] = None


@dataclass
class SimulationSamples:
    """Compact per-trial record of a simulation run.

    ``nearest[(j, state)]`` holds the per-trial distance to the nearest
    tier-j BS observed in that state (nan when the drop has none); together
    with ``parent_distance``/``parent_los`` these back the distribution
    goodness-of-fit tests.
    """

    event: np.ndarray             # event_index per trial
    serving_distance: np.ndarray
    signal: np.ndarray
    interference: np.ndarray
    noise: float
    trials: int
    seed: int
    parent_distance: Optional[np.ndarray] = None
    parent_los: Optional[np.ndarray] = None
    nearest: Optional[Dict] = None

    def sinr(self) -> np.ndarray:
        return self.signal / (self.noise + self.interference)

    def snr(self) -> np.ndarray:
        return self.signal / self.noise

    def sir(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return self.signal / self.interference

    def ratio(self, mode: str) -> np.ndarray:
        if mode in ("sinr", "cluster-center"):
            return self.sinr()
        if mode in ("snr", "noise-limited"):
            return self.snr()
        if mode in ("sir", "interference-limited"):
            return self.sir()
        raise ValueError(f"unknown mode {mode!r}")


def region_half_width(scenario: NetworkScenario) -> float:
    """Guard-band sizing rule: 5x the largest relevant length scale."""
    lam_min = min(t.density for t in scenario.tiers)
    sigma_max = max(t.cluster_sigma for t in scenario.tiers if t.hosts_clusters)
    scales = [1.0 / math.sqrt(math.pi * lam_min), 3.0 * sigma_max]
    eps = scenario.channel.blockage_epsilon
    if eps > 0:
        scales.append(3.0 / eps)
    return 5.0 * max(scales)


class _SimContext:
    """Scenario constants unpacked into plain arrays for the trial loop."""

    def __init__(self, scenario: NetworkScenario):
        ch = scenario.channel
        self.scenario = scenario
        self.eps = ch.blockage_epsilon
        self.alpha = {LinkState.LOS: ch.alpha_los, LinkState.NLOS: ch.alpha_nlos}
        self.kappa = {LinkState.LOS: ch.kappa_los, LinkState.NLOS: ch.kappa_nlos}
        self.alpha_arr = np.array([ch.alpha_los, ch.alpha_nlos])
        self.kappa_arr = np.array([ch.kappa_los, ch.kappa_nlos])
        self.nakagami = {LinkState.LOS: ch.nakagami_los, LinkState.NLOS: ch.nakagami_nlos}
        self.num_tiers = scenario.num_tiers
        self.densities = [t.density for t in scenario.tiers]
        self.pb = [t.tx_power * t.bias for t in scenario.tiers]
        self.center_pb = scenario.center_power * scenario.center_bias
        self.center_pb_by_tier = {
            k: (scenario.cluster_center_power if scenario.cluster_center_power is not None
                else scenario.tier(k).tx_power)
            * (scenario.cluster_center_bias if scenario.cluster_center_bias is not None
               else scenario.tier(k).bias)
            for k in scenario.cluster_tiers
        }
        self.sigma = {k: scenario.tier(k).cluster_sigma for k in scenario.cluster_tiers}
        self.cluster_tiers = scenario.cluster_tiers
        self.typical_tier = scenario.typical_ue_tier
        self.sigma_typical = scenario.typical_sigma
        self.g0 = scenario.antenna.boresight_gain
        atoms = gain_distribution(scenario.antenna)
        self.gain_values = np.array([a.gain for a in atoms])
        self.gain_probs = np.array([a.probability for a in atoms])
        self.pu = scenario.ue_tx_power
        self.noise = scenario.noise_power
        self.tau = scenario.power_control_tau


def _pathloss_vec(ctx, dist, los_mask):
    state_idx = np.where(los_mask, 0, 1)
    return ctx.kappa_arr[state_idx] * dist ** ctx.alpha_arr[state_idx]


def _fpc_tx_power(ctx, fpc, pts, parent_cols, center_pbs, excluded, all_bs, all_pb, rng):
    """Transmit power of each interfering UE under fractional power control.

    Every UE associates by biased received power over all BSs in the drop;
    the column of its own cluster parent uses the tier-0 role power, and an
    excluded parent column (the serving BS, whose cluster member interferes
    only when served elsewhere) is removed from its candidate set.  The
    serving-link path loss (or distance) is then inverted by tau.
    """
    # The candidate matrix is the hot path (interferers x all BSs); single
    # precision is ample for ranking biased powers.
    pts32 = pts.astype(np.float32)
    bs32 = all_bs.astype(np.float32)
    diff = pts32[:, None, :] - bs32[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=2))
    np.clip(dist, 1e-6, None, out=dist)
    los = rng.random(dist.shape, dtype=np.float32) < np.exp(-np.float32(ctx.eps) * dist)
    state_idx = np.where(los, 0, 1)
    pl = ctx.kappa_arr.astype(np.float32)[state_idx] * dist ** ctx.alpha_arr.astype(np.float32)[state_idx]
    power = all_pb.astype(np.float32)[None, :] / pl
    rows = np.arange(len(pts))
    own = power[rows, parent_cols] * (center_pbs / all_pb[parent_cols]).astype(np.float32)
    power[rows, parent_cols] = np.where(excluded, -np.inf, own)
    best = np.argmax(power, axis=1)
    t = dist[rows, best].astype(np.float64)
    t_los = los[rows, best]
    if fpc == "distance":
        return ctx.pu * t ** (ctx.tau * ctx.alpha[LinkState.LOS])
    serving_pl = _pathloss_vec(ctx, t, t_los)
    return ctx.pu * serving_pl ** ctx.tau


def sample_drop(
    scenario: NetworkScenario,
    half_width: float,
    rng,
    *,
    sinr: bool = True,
    fading: str = "rayleigh",
    fpc: Optional[str] = "pathloss",
    ue_distribution: str = "clustered",
    force_cluster_center: bool = False,
    _ctx: Optional[_SimContext] = None,
) -> DropRealization:
    """Sample one network drop and (optionally) the uplink signal/interference.

    ``fpc`` selects the fractional-power-control branch ("pathloss" or
    "distance") applied when the scenario's tau is positive.
    ``ue_distribution`` = "uniform" is the PPP baseline: the typical UE sits
    at the origin with no tier-0 candidate and the interferers of each
    cluster tier form an independent uniform PPP of the same density.
    """
    ctx = _ctx or _SimContext(scenario)
    required = region_half_width(scenario)
    if half_width < required:
        raise ValueError(
            f"region half-width {half_width:.0f} m below guard requirement {required:.0f} m"
        )
    area = (2.0 * half_width) ** 2
    clustered = ue_distribution == "clustered"
    if not clustered and force_cluster_center:
        raise ValueError("cluster-center association needs clustered UEs")

    ue = rng.normal(0.0, ctx.sigma_typical, 2) if clustered else np.zeros(2)

    positions, distances, los = {}, {}, {}
    for j in range(1, ctx.num_tiers + 1):
        n = rng.poisson(ctx.densities[j - 1] * area)
        pos = rng.uniform(-half_width, half_width, (n, 2))
        d = np.sqrt(((pos - ue) ** 2).sum(axis=1))
        np.clip(d, 1e-6, None, out=d)
        positions[j] = pos
        distances[j] = d
        los[j] = rng.random(n) < np.exp(-ctx.eps * d)

    parent_distance = float(max(np.sqrt((ue * ue).sum()), 1e-6))
    parent_los = bool(rng.random() < math.exp(-ctx.eps * parent_distance))
    parent_state = LinkState.LOS if parent_los else LinkState.NLOS

    # Association: exact argmax of biased received power; ties (probability
    # zero) resolve toward the lower tier, then LOS, via strict comparison
    # in fixed candidate order.
    serving_tier, serving_idx, serving_state, serving_distance = -1, -1, None, math.inf
    best_power = -math.inf
    if clustered:
        pl = ctx.kappa[parent_state] * parent_distance ** ctx.alpha[parent_state]
        best_power = ctx.center_pb / pl
        serving_tier, serving_state, serving_distance = 0, parent_state, parent_distance
    for j in range(1, ctx.num_tiers + 1):
        if len(distances[j]) == 0:
            continue
        power = ctx.pb[j - 1] / _pathloss_vec(ctx, distances[j], los[j])
        i = int(np.argmax(power))
        if power[i] > best_power:
            best_power = power[i]
            serving_tier, serving_idx = j, i
            serving_state = LinkState.LOS if los[j][i] else LinkState.NLOS
            serving_distance = float(distances[j][i])
    if force_cluster_center and clustered:
        serving_tier, serving_idx = 0, -1
        serving_state, serving_distance = parent_state, parent_distance
    if serving_state is None:
        raise RuntimeError("empty drop: no association candidate")

    serving_position = (
        np.zeros(2) if serving_tier == 0 else positions[serving_tier][serving_idx]
    )

    drop = DropRealization(
        ue_position=ue,
        parent_distance=parent_distance,
        parent_state=parent_state,
        bs_positions=positions,
        bs_distances=distances,
        bs_los=los,
        serving_tier=serving_tier,
        serving_state=serving_state,
        serving_distance=serving_distance,
        serving_position=serving_position,
    )
    if not sinr:
        return drop

    use_fpc = ctx.tau > 0.0 and fpc is not None
    serving_pl = ctx.kappa[serving_state] * serving_distance ** ctx.alpha[serving_state]
    if use_fpc:
        if fpc == "distance":
            ue_power = ctx.pu * serving_distance ** (ctx.tau * ctx.alpha[LinkState.LOS])
        else:
            ue_power = ctx.pu * serving_pl ** ctx.tau
    else:
        ue_power = ctx.pu
    shape = ctx.nakagami[serving_state] if fading == "nakagami" else 1
    h0 = rng.exponential(1.0) if shape == 1 else rng.gamma(shape, 1.0 / shape)
    signal = ue_power * ctx.g0 * h0 / serving_pl

    # Interferer field.  Flat BS table (all tiers + the parent point) backs
    # the per-interferer association needed for power control; parent_cols
    # maps each interferer to its own cluster parent in that table.
    int_pts, int_parent_col, int_center_pb, int_excluded = [], [], [], []
    tier_offset = {}
    offset = 0
    for j in range(1, ctx.num_tiers + 1):
        tier_offset[j] = offset
        offset += len(positions[j])
    parent_col = offset  # the parent BS appended as an extra table row

    if clustered:
        for k in ctx.cluster_tiers:
            pos = positions[k]
            cols = tier_offset[k] + np.arange(len(pos))
            if serving_tier == k:
                pos = np.delete(pos, serving_idx, axis=0)
                cols = np.delete(cols, serving_idx)
            if len(pos):
                int_pts.append(pos + rng.normal(0.0, ctx.sigma[k], pos.shape))
                int_parent_col.append(cols)
                int_center_pb.append(np.full(len(pos), ctx.center_pb_by_tier[k]))
                int_excluded.append(np.zeros(len(pos), dtype=bool))
        if serving_tier != 0:
            # Parent's active member (the typical UE's own cluster).
            int_pts.append(rng.normal(0.0, ctx.sigma_typical, (1, 2)))
            int_parent_col.append(np.array([parent_col]))
            int_center_pb.append(np.array([ctx.center_pb]))
            int_excluded.append(np.array([False]))
            if serving_tier in ctx.cluster_tiers:
                # Serving BS's own cluster member, served elsewhere by
                # construction: its parent is struck from its candidates.
                member = serving_position + rng.normal(0.0, ctx.sigma[serving_tier], 2)
                int_pts.append(member[None, :])
                int_parent_col.append(
                    np.array([tier_offset[serving_tier] + serving_idx])
                )
                int_center_pb.append(np.array([ctx.center_pb_by_tier[serving_tier]]))
                int_excluded.append(np.array([True]))
    else:
        for k in ctx.cluster_tiers:
            n = rng.poisson(ctx.densities[k - 1] * area)
            pts = rng.uniform(-half_width, half_width, (n, 2))
            int_pts.append(pts)
            int_parent_col.append(np.full(n, -1))
            int_center_pb.append(np.full(n, np.nan))
            int_excluded.append(np.zeros(n, dtype=bool))

    interference = 0.0
    if int_pts:
        pts = np.concatenate(int_pts, axis=0)
        d = np.sqrt(((pts - serving_position) ** 2).sum(axis=1))
        np.clip(d, 1e-6, None, out=d)
        lmask = rng.random(len(d)) < np.exp(-ctx.eps * d)
        gains = rng.choice(ctx.gain_values, size=len(d), p=ctx.gain_probs)
        h = rng.exponential(1.0, len(d))
        if use_fpc and clustered:
            all_bs = np.concatenate(
                [positions[j] for j in range(1, ctx.num_tiers + 1)]
                + [np.zeros((1, 2))],
                axis=0,
            )
            all_pb = np.concatenate(
                [np.full(len(positions[j]), ctx.pb[j - 1])
                 for j in range(1, ctx.num_tiers + 1)]
                + [np.array([ctx.pb[ctx.typical_tier - 1]])]
            )
            powers = _fpc_tx_power(
                ctx, fpc, pts,
                np.concatenate(int_parent_col),
                np.concatenate(int_center_pb),
                np.concatenate(int_excluded),
                all_bs, all_pb, rng,
            )
        else:
            powers = np.full(len(d), ctx.pu)
        interference = float(np.sum(powers * gains * h / _pathloss_vec(ctx, d, lmask)))
        drop.interferer_distances = d
        drop.interferer_gains = gains
        drop.interferer_fading = h
        drop.interferer_los = lmask

    drop.signal = float(signal)
    drop.interference = interference
    drop.sinr = float(signal / (ctx.noise + interference))
    return drop


def _resolve_workers(workers) -> int:
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    return max(1, int(workers))


def _run_block(args):
    (scenario, half_width, seed, start, stop, sinr, fading, fpc,
     ue_distribution, force_center) = args
    ctx = _SimContext(scenario)
    n = stop - start
    events = np.empty(n, dtype=np.int16)
    dists = np.empty(n, dtype=np.float64)
    signals = np.full(n, np.nan)
    interf = np.full(n, np.nan)
    parent_d = np.full(n, np.nan)
    parent_los = np.zeros(n, dtype=bool)
    nearest = np.full((n, scenario.num_tiers, 2), np.nan)
    for i, trial in enumerate(range(start, stop)):
        rng = np.random.Generator(np.random.Philox(key=[seed, trial]))
        drop = sample_drop(
            scenario, half_width, rng, sinr=sinr, fading=fading, fpc=fpc,
            ue_distribution=ue_distribution, force_cluster_center=force_center,
            _ctx=ctx,
        )
        events[i] = event_index(drop.serving_tier, drop.serving_state)
        dists[i] = drop.serving_distance
        parent_d[i] = drop.parent_distance
        parent_los[i] = drop.parent_state is LinkState.LOS
        for j in range(1, scenario.num_tiers + 1):
            los_mask = drop.bs_los[j]
            d = drop.bs_distances[j]
            if los_mask.any():
                nearest[i, j - 1, 0] = d[los_mask].min()
            if (~los_mask).any():
                nearest[i, j - 1, 1] = d[~los_mask].min()
        if sinr:
            signals[i] = drop.signal
            interf[i] = drop.interference
    return events, dists, signals, interf, parent_d, parent_los, nearest


def simulate_samples(
    scenario: NetworkScenario,
    trials: int,
    seed: int,
    *,
    half_width=None,
    workers=None,
    sinr: bool = True,
    fading: str = "rayleigh",
    fpc: Optional[str] = "pathloss",
    ue_distribution: str = "clustered",
    force_cluster_center: bool = False,
) -> SimulationSamples:
    """Run ``trials`` independent drops; returns per-trial samples in trial
    order (identical for any worker count)."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    hw = half_width if half_width is not None else region_half_width(scenario)
    nworkers = _resolve_workers(workers)
    per = trials if nworkers == 1 else max(1, math.ceil(trials / (4 * nworkers)))
    blocks = []
    start = 0
    while start < trials:
        stop = min(start + per, trials)
        blocks.append((scenario, hw, seed, start, stop, sinr, fading, fpc,
                       ue_distribution, force_center := force_cluster_center))
        start = stop
    if nworkers == 1 or len(blocks) == 1:
        results = [_run_block(b) for b in blocks]
    else:
        with ProcessPoolExecutor(max_workers=nworkers) as pool:
            results = list(pool.map(_run_block, blocks))
    nearest_all = np.concatenate([r[6] for r in results])
    nearest = {
        (j, s): nearest_all[:, j - 1, si]
        for j in range(1, scenario.num_tiers + 1)
        for si, s in enumerate(EVENT_STATES)
    }
    return SimulationSamples(
        event=np.concatenate([r[0] for r in results]),
        serving_distance=np.concatenate([r[1] for r in results]),
        signal=np.concatenate([r[2] for r in results]),
        interference=np.concatenate([r[3] for r in results]),
        noise=scenario.noise_power,
        trials=trials,
        seed=seed,
        parent_distance=np.concatenate([r[4] for r in results]),
        parent_los=np.concatenate([r[5] for r in results]),
        nearest=nearest,
    )


def estimate_association(
    scenario: NetworkScenario,
    trials: int,
    seed: int,
    *,
    half_width=None,
    workers=None,
    return_samples: bool = False,
):
    """Empirical frequency of each association event S_(j,s)."""
    samples = simulate_samples(
        scenario, trials, seed, half_width=half_width, workers=workers, sinr=False
    )
    out = {}
    counts = np.bincount(samples.event, minlength=2 * (scenario.num_tiers + 1))
    for j in range(0, scenario.num_tiers + 1):
        for s in EVENT_STATES:
            p = counts[event_index(j, s)] / trials
            se = math.sqrt(p * (1.0 - p) / trials)
            out[(j, s)] = EstimatorOutput(p, se, trials, seed)
    if return_samples:
        return out, samples
    return out


def coverage_from_samples(samples: SimulationSamples, threshold: float,
                          num_tiers: int, mode: str = "sinr"):
    """Empirical coverage at a linear threshold, total and per event.

    Conditioning events with fewer than 50 hits are flagged low-confidence.
    """
    covered = samples.ratio(mode) > threshold
    n = len(covered)
    total = covered.mean()
    total_out = EstimatorOutput(
        float(total), math.sqrt(total * (1.0 - total) / n), samples.trials, samples.seed
    )
    per_event = {}
    for j in range(0, num_tiers + 1):
        for s in EVENT_STATES:
            mask = samples.event == event_index(j, s)
            hits = int(mask.sum())
            if hits == 0:
                continue
            p = covered[mask].mean()
            per_event[(j, s)] = EstimatorOutput(
                float(p), math.sqrt(p * (1.0 - p) / hits), hits, samples.seed,
                low_confidence=hits < 50,
            )
    return total_out, per_event


def estimate_coverage(
    scenario: NetworkScenario,
    query,
    trials: int,
    seed: int,
    *,
    half_width=None,
    workers=None,
):
    """Empirical CoverageResult for a coverage query (see hetuplink.coverage)."""
    from .coverage import CoverageResult  # local import to avoid a cycle

    if query.power_control_tau is not None:
        from dataclasses import replace

        scenario = replace(scenario, power_control_tau=query.power_control_tau)
    mode = query.mode
    samples = simulate_samples(
        scenario, trials, seed, half_width=half_width, workers=workers,
        fading=query.fading, fpc=query.fpc_branch,
        force_cluster_center=(mode == "cluster-center"),
    )
    total, per_event = coverage_from_samples(
        samples, query.threshold, scenario.num_tiers, mode=mode
    )
    counts = np.bincount(samples.event, minlength=2 * (scenario.num_tiers + 1))
    association = {}
    conditional = {}
    errors = {}
    for key, est in per_event.items():
        j, s = key
        association[key] = counts[event_index(j, s)] / trials
        conditional[key] = est.estimate
        errors[key] = est.standard_error
    per_tier = {}
    for j in range(0, scenario.num_tiers + 1):
        per_tier[j] = sum(
            association.get((j, s), 0.0) * conditional.get((j, s), 0.0)
            for s in EVENT_STATES
        )
    return CoverageResult(
        total=total.estimate,
        per_event=conditional,
        per_tier=per_tier,
        association=association,
        method="mc",
        standard_error=total.standard_error,
        event_standard_error=errors,
        trials=trials,
        seed=seed,
    )


def estimate_rate(
    scenario: NetworkScenario,
    trials: int,
    seed: int,
    *,
    half_width=None,
    workers=None,
    samples: Optional[SimulationSamples] = None,
) -> Tuple[EstimatorOutput, float]:
    """Mean spectral efficiency log2(1 + SINR) and the W-scaled rate (bit/s)."""
    if samples is None:
        samples = simulate_samples(
            scenario, trials, seed, half_width=half_width, workers=workers
        )
    values = np.log2(1.0 + samples.sinr())
    mean = float(np.mean(values))
    se = float(np.std(values, ddof=1) / math.sqrt(len(values)))
    out = EstimatorOutput(mean, se, samples.trials, samples.seed)
    return out, mean * scenario.bandwidth


def dump_drops(scenario, trials, seed, path, *, half_width=None):
    """Write one text record per drop (event, serving distance, signal,
    interference, SINR) for debugging and distribution tests."""
    samples = simulate_samples(scenario, trials, seed, half_width=half_width)
    sinr = samples.sinr()
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("# trial event serving_tier state serving_distance signal interference sinr\n")
        for i in range(samples.trials):
            j, s = event_key(int(samples.event[i]))
            handle.write(
                f"{i} {samples.event[i]} {j} {s.value} "
                f"{samples.serving_distance[i]!r} {samples.signal[i]!r} "
                f"{samples.interference[i]!r} {sinr[i]!r}\n"
            )
