"""SINR coverage probability and average ergodic spectral efficiency.

Conditioned on association event (j, s) with serving distance x, the uplink
SINR at the reference BS exceeds the threshold T_j iff the serving-link
fading exceeds mu * (noise + interference), with

    mu = T_j * (kappa_s x^alpha_s)^(1 - tau) / (P_u * G0)

(tau = 0 without power control).  For unit-mean Rayleigh fading the
conditional coverage is the expectation over the serving-distance law of

    exp(-mu sigma_n^2) * L_member(mu) * prod_k L_tier_k(mu),

evaluated as one adaptive quadrature over x that walks the association
integrand and the interference transforms together.  Integer-shape Nakagami
fading on the serving link replaces the exponential tail with the standard
alternating binomial bound: sum_{n=1..N} (-1)^(n+1) C(N,n) at the n-scaled
argument n * eta * mu, eta = N (N!)^(-1/N) (the printed unscaled variant is
available for comparison; it collapses identically onto the Rayleigh case).

Average ergodic spectral efficiency integrates coverage over thresholds,
R = (1/ln 2) int_0^inf P_C(T)/(1+T) dT, computed per event after the
substitution u = T/(1+T) onto (0, 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Optional, Sequence

import numpy as np

from . import interference
from .association import (
    NEGLIGIBLE_PROBABILITY,
    AssociationError,
    AssociationEvent,
    association_probabilities,
)
from .geometry import cluster_distance_law, state_probability
from .numerics import (
    QuadratureSpec,
    integrate_finite,
    integrate_finite_multi,
)
from .scenario import LinkState, NetworkScenario

__all__ = [
    "CoverageQuery",
    "CoverageResult",
    "TwoTierClosedForm",
    "SpectralEfficiencyResult",
    "conditional_coverage",
    "conditional_coverage_nakagami",
    "network_coverage",
    "closed_form_two_tier",
    "coverage_cluster_center",
    "spectral_efficiency",
    "threshold_integral",
]

_STATES = (LinkState.LOS, LinkState.NLOS)

MODES = ("sinr", "noise-limited", "interference-limited", "cluster-center")

_COVERAGE_SPEC = QuadratureSpec(rel_tol=1e-7, abs_tol=1e-13)
_RATE_SPEC = QuadratureSpec(rel_tol=1e-6, abs_tol=1e-9)


@dataclass(frozen=True)
class CoverageQuery:
    """What to evaluate: threshold (linear), mode, fading, power control."""

    threshold: float
    mode: str = "sinr"
    fading: str = "rayleigh"
    power_control_tau: Optional[float] = None
    fpc_branch: str = "pathloss"
    tier_thresholds: Optional[Dict[int, float]] = None
    literal_nakagami: bool = False

    def __post_init__(self):
        if not self.threshold > 0:
            raise ValueError("threshold must be positive (linear units)")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.fading not in ("rayleigh", "nakagami"):
            raise ValueError("fading must be 'rayleigh' or 'nakagami'")

    def tier_threshold(self, j: int) -> float:
        if self.tier_thresholds and j in self.tier_thresholds:
            return self.tier_thresholds[j]
        return self.threshold


@dataclass
class CoverageResult:
    total: float
    per_event: Dict
    per_tier: Dict
    association: Dict
    method: str = "analytic"
    standard_error: Optional[float] = None
    event_standard_error: Optional[Dict] = None
    trials: Optional[int] = None
    seed: Optional[int] = None


def _effective_tau(scenario: NetworkScenario, query: CoverageQuery) -> float:
    if query.power_control_tau is not None:
        return query.power_control_tau
    return scenario.power_control_tau


class _LaplaceProvider:
    """Interference transform products for one (scenario, query) pair.

    Builds the per-tier serving-link profiles once when power control is
    active; evaluations are memoized per (tier, mu)."""

    def __init__(self, scenario, query, spec=interference._SPEC):
        self.tau = _effective_tau(scenario, query)
        self.scenario = replace(scenario, power_control_tau=self.tau)
        self.spec = spec
        self._cache = {}
        self.intra_profiles = {}
        self.inter_profiles = {}
        if self.tau > 0.0:
            for k in self.scenario.cluster_tiers:
                table = association_probabilities(self.scenario.with_typical_tier(k))
                self.intra_profiles[k] = interference.ServingLinkProfile.for_intra_cluster(
                    self.scenario, table
                )
                self.inter_profiles[k] = interference.ServingLinkProfile.for_intercell(
                    self.scenario, table
                )

    def product(self, j: int, mu: float) -> float:
        key = (j, mu)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        sc = self.scenario
        if self.tau > 0.0:
            value = 1.0
            if j in sc.cluster_tiers:
                value *= interference.laplace_intra_cluster_fpc(
                    sc, j, mu, self.intra_profiles[j], self.spec
                )
            for k in sc.cluster_tiers:
                value *= interference.laplace_intercell_fpc(
                    sc, j, k, mu, self.inter_profiles[k], self.spec
                )
        else:
            value = interference.laplace_intra_cluster(sc, j, mu, self.spec)
            for k in sc.cluster_tiers:
                value *= interference.laplace_intercell(sc, j, k, mu, self.spec)
        self._cache[key] = value
        return value


def _event_gain(scenario, query, event, provider):
    """Per-distance coverage kernel g(x) for one event."""
    ch = scenario.channel
    tau = _effective_tau(scenario, query)
    kappa_s = ch.kappa(event.state)
    alpha_s = ch.alpha(event.state)
    mu_scale = query.tier_threshold(event.serving) / (
        scenario.ue_tx_power * scenario.antenna.boresight_gain
    )
    noise = scenario.noise_power
    use_noise = query.mode in ("sinr", "noise-limited", "cluster-center")
    use_interf = query.mode in ("sinr", "interference-limited", "cluster-center")
    j = event.serving

    if query.fading == "nakagami":
        shape = ch.nakagami(event.state)
        eta = shape * math.factorial(shape) ** (-1.0 / shape)
        terms = [
            ((-1.0) ** (n + 1) * math.comb(shape, n),
             1.0 if query.literal_nakagami else n * eta)
            for n in range(1, shape + 1)
        ]
    else:
        terms = [(1.0, 1.0)]

    def gain(x: float) -> float:
        mu0 = mu_scale * (kappa_s * x ** alpha_s) ** (1.0 - tau)
        total = 0.0
        for coef, scale in terms:
            mu = scale * mu0
            value = 1.0
            if use_noise:
                value *= math.exp(-mu * noise)
            if use_interf and value > 0.0:
                value *= provider.product(j, mu)
            total += coef * value
        return total

    return gain


def _event_expectation(event: AssociationEvent, gain: Callable, spec) -> float:
    """E[g] over the event's serving-distance law, fused with its integrand."""

    def f(x):
        base = event.integrand(x)
        out = np.zeros_like(base)
        thresh = 1e-16 * float(np.max(base)) if base.size else 0.0
        for i, (b, xi) in enumerate(zip(base, np.asarray(x, dtype=float))):
            if b > thresh:
                out[i] = b * gain(float(xi))
        return out

    numerator = integrate_finite(f, 0.0, event.cutoff, spec).check().value
    return min(max(numerator / event.probability, 0.0), 1.0)


def conditional_coverage(
    scenario: NetworkScenario,
    event: AssociationEvent,
    query: CoverageQuery,
    provider: Optional[_LaplaceProvider] = None,
    spec: QuadratureSpec = _COVERAGE_SPEC,
) -> float:
    """P(SINR > T | S_(j,s)) for the query's mode and fading."""
    if event.probability <= NEGLIGIBLE_PROBABILITY:
        raise AssociationError(
            f"event {event.key} probability {event.probability:.3g} too small to condition on"
        )
    if provider is None:
        provider = _LaplaceProvider(scenario, query)
    gain = _event_gain(scenario, query, event, provider)
    return _event_expectation(event, gain, spec)


def conditional_coverage_nakagami(
    scenario: NetworkScenario,
    event: AssociationEvent,
    query: CoverageQuery,
    provider: Optional[_LaplaceProvider] = None,
    spec: QuadratureSpec = _COVERAGE_SPEC,
) -> float:
    """Nakagami-fading conditional coverage (integer shapes; shape 1 equals
    the Rayleigh result identically)."""
    naka = replace(query, fading="nakagami")
    return conditional_coverage(scenario, event, naka, provider=provider, spec=spec)


def network_coverage(
    scenario: NetworkScenario,
    query: CoverageQuery,
    events: Optional[Sequence[AssociationEvent]] = None,
    spec: QuadratureSpec = _COVERAGE_SPEC,
) -> CoverageResult:
    """Total coverage P_C = sum over events of conditional coverage times
    association probability, with the per-tier and per-event breakdown."""
    if query.mode == "cluster-center":
        return _cluster_center_result(scenario, query, spec)
    if events is None:
        events = association_probabilities(scenario)
    provider = _LaplaceProvider(scenario, query)
    per_event, association = {}, {}
    contributions = []
    for event in events:
        if event.probability <= NEGLIGIBLE_PROBABILITY:
            continue
        association[event.key] = event.probability
        value = conditional_coverage(scenario, event, query, provider=provider, spec=spec)
        per_event[event.key] = value
        contributions.append(value * event.probability)
    per_tier = {}
    for j in range(0, scenario.num_tiers + 1):
        per_tier[j] = math.fsum(
            per_event.get((j, s), 0.0) * association.get((j, s), 0.0) for s in _STATES
        )
    return CoverageResult(
        total=math.fsum(contributions),
        per_event=per_event,
        per_tier=per_tier,
        association=association,
        method="analytic",
    )


# ---------------------------------------------------------------------------
# Special cases


@dataclass(frozen=True)
class TwoTierClosedForm:
    """Closed-form association and noise-only coverage of the reduced
    two-tier all-LOS alpha=2 network, with its two denominators exposed."""

    a10: float
    a11: float
    a12: float
    p10: float
    p11: float
    p12: float
    c0: float
    c2: float

    @property
    def association_total(self):
        return self.a10 + self.a11 + self.a12


def closed_form_two_tier(scenario: NetworkScenario, threshold: float) -> TwoTierClosedForm:
    """Evaluate the reduced model: two tiers, all links LOS (eps = 0),
    path-loss exponent 2, unit intercept, noise only.

    Preconditions are enforced; the intercept must be normalized to 1
    because the closed-form noise term T sigma_n^2/(P_u G0) carries no
    intercept.
    """
    ch = scenario.channel
    problems = []
    if scenario.num_tiers != 2:
        problems.append("exactly two tiers required")
    if ch.blockage_epsilon != 0.0:
        problems.append("requires eps = 0 (all-LOS)")
    if ch.alpha_los != 2.0:
        problems.append("requires alpha = 2")
    if ch.kappa_los != 1.0:
        problems.append("requires unit intercept")
    if scenario.typical_ue_tier != 1 or not scenario.tier(1).hosts_clusters:
        problems.append("tier 1 must host the typical UE's cluster")
    if scenario.tier(2).hosts_clusters:
        problems.append("tier 2 must be the macro tier")
    pb1 = scenario.tier(1).tx_power * scenario.tier(1).bias
    if scenario.power_bias(0) != pb1:
        problems.append("cluster-center power/bias must equal tier 1's")
    if problems:
        raise ValueError("closed form preconditions violated: " + "; ".join(problems))

    sigma2 = scenario.typical_sigma ** 2
    lam1 = scenario.tier(1).density
    lam2 = scenario.tier(2).density
    ratio = scenario.tier(2).tx_power * scenario.tier(2).bias / pb1
    c0 = 1.0 / (2.0 * sigma2) + math.pi * lam1 + math.pi * lam2 * ratio
    c2 = 1.0 / (2.0 * sigma2 * ratio) + math.pi * lam1 / ratio + math.pi * lam2
    a10 = 1.0 / (2.0 * sigma2 * c0)
    a11 = math.pi * lam1 / c0
    a12 = math.pi * lam2 / c2
    q = threshold * scenario.noise_power / (
        scenario.ue_tx_power * scenario.antenna.boresight_gain
    )
    p10 = 1.0 / (2.0 * sigma2 * (c0 + q) * a10)
    p11 = math.pi * lam1 / ((c0 + q) * a11)
    p12 = math.pi * lam2 / ((c2 + q) * a12)
    return TwoTierClosedForm(a10, a11, a12, p10, p11, p12, c0, c2)


def coverage_cluster_center(
    scenario: NetworkScenario,
    query: CoverageQuery,
    spec: QuadratureSpec = _COVERAGE_SPEC,
) -> float:
    """Coverage when every UE is forced onto its cluster-center BS.

    No association probabilities enter: the serving distance follows the
    state-conditioned cluster law directly, and the center sees only
    inter-cell interference."""
    result = _cluster_center_result(scenario, query, spec)
    return result.total


def _cluster_center_result(scenario, query, spec) -> CoverageResult:
    ch = scenario.channel
    eps = ch.blockage_epsilon
    sigma = scenario.typical_sigma
    law = cluster_distance_law(sigma)
    provider = _LaplaceProvider(scenario, query)
    per_event, association = {}, {}
    contributions = []
    for s in _STATES:
        event = AssociationEvent(
            serving=0,
            state=s,
            probability=1.0,  # placeholder; weight handled below
            integrand=lambda x, s=s: state_probability(x, eps, s) * law.pdf(x),
            cutoff=12.0 * sigma,
        )
        gain = _event_gain(scenario, query, event, provider)

        def f(x, event=event, gain=gain):
            base = event.integrand(x)
            out = np.zeros_like(base)
            thresh = 1e-16 * float(np.max(base)) if base.size else 0.0
            for i, (b, xi) in enumerate(zip(base, np.asarray(x, dtype=float))):
                if b > thresh:
                    out[i] = b * gain(float(xi))
            return out

        weighted = integrate_finite(f, 0.0, event.cutoff, spec).check().value
        weight = integrate_finite(event.integrand, 0.0, event.cutoff, spec).check().value
        association[(0, s)] = weight
        if weight > NEGLIGIBLE_PROBABILITY:
            per_event[(0, s)] = min(weighted / weight, 1.0)
            contributions.append(weighted)
    total = math.fsum(contributions)
    per_tier = {0: total}
    return CoverageResult(
        total=total,
        per_event=per_event,
        per_tier=per_tier,
        association=association,
        method="analytic",
    )


# ---------------------------------------------------------------------------
# Spectral efficiency


@dataclass
class SpectralEfficiencyResult:
    per_event: Dict          # (j, s) -> conditional spectral efficiency
    association: Dict
    total: float             # bits/s/Hz
    rate: float              # bits/s (bandwidth-scaled)


def threshold_integral(pc: Callable, spec: QuadratureSpec = _RATE_SPEC) -> float:
    """(1/ln 2) int_0^inf pc(T)/(1+T) dT via the map u = T/(1+T)."""

    def f(u):
        u = np.asarray(u, dtype=float)
        return np.array([pc(ui / (1.0 - ui)) / (1.0 - ui) for ui in u])

    value = integrate_finite(f, 0.0, 1.0, spec).check().value
    return value / math.log(2.0)


def spectral_efficiency(
    scenario: NetworkScenario,
    query: CoverageQuery,
    events: Optional[Sequence[AssociationEvent]] = None,
    spec: QuadratureSpec = _RATE_SPEC,
) -> SpectralEfficiencyResult:
    """Average ergodic spectral efficiency, decomposed per event.

    All events integrate over the same adaptive threshold grid, so the
    accounting identity R = sum_e A_e * R_e holds to accumulation order.
    """
    if query.mode == "cluster-center":
        raise ValueError("rate integral uses the standard association modes")
    if events is None:
        events = association_probabilities(scenario)
    kept = [e for e in events if e.probability > NEGLIGIBLE_PROBABILITY]
    provider = _LaplaceProvider(scenario, query)
    cov_spec = QuadratureSpec(rel_tol=1e-7, abs_tol=1e-12)

    def f(u_arr):
        rows = []
        for u in np.asarray(u_arr, dtype=float):
            t = u / (1.0 - u)
            q = replace(query, threshold=max(t, 1e-300))
            row = [
                conditional_coverage(scenario, e, q, provider=provider, spec=cov_spec)
                / (1.0 - u)
                for e in kept
            ]
            rows.append(row)
        return np.array(rows)

    values, _errors, aggregate = integrate_finite_multi(f, 0.0, 1.0, spec)
    aggregate.check()
    ln2 = math.log(2.0)
    per_event = {e.key: float(v) / ln2 for e, v in zip(kept, values)}
    association = {e.key: e.probability for e in kept}
    total = math.fsum(per_event[e.key] * e.probability for e in kept)
    return SpectralEfficiencyResult(
        per_event=per_event,
        association=association,
        total=total,
        rate=total * scenario.bandwidth,
    )
