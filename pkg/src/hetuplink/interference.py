"""Laplace transforms of the uplink interference terms.

Two sources are modeled at a reference BS of tier j serving the typical UE:

* intra-cluster: the reference BS's own cluster member (present when the
  reference is a cluster-hosting BS other than the typical UE's parent),
  at a Rayleigh(sigma_j) distance with its own LOS/NLOS state, antenna-gain
  atom and Rayleigh fading;
* inter-cell: one active UE per cluster-hosting BS of each tier k.  The
  Gaussian displacement of those UEs collapses onto the parent PPP by the
  Rice identity int f(r|v) v dv = r, giving a thinned-PPP exponent per gain
  atom and link state.  The pre-collapse double integral is kept behind
  ``exact_displacement`` so the collapse can be verified numerically.

With fractional power control each interferer transmits at
P_u * (kappa_b t^alpha_b)^tau where (t, b) is its own serving link; its
serving-link law is the association-event mixture of its tier, so the
transforms take the association table of the interfering tier and weight a
t-expectation per event.  Event weights are normalized mixtures: for the
intra-cluster member the cluster-center event is excluded (its center is
the reference BS itself; a member served by it would not interfere), for
the inter-cell field all events enter.  This keeps L(0) = 1 and collapses
the tau -> 0 limit exactly onto the no-power-control transforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

import numpy as np

from .association import NEGLIGIBLE_PROBABILITY, AssociationEvent
from .channel import gain_distribution
from .geometry import cluster_distance_law, rice_conditional_pdf, state_probability
from .numerics import QuadratureSpec, integrate_finite, integrate_semi_infinite
from .scenario import LinkState, NetworkScenario

__all__ = [
    "ServingLinkProfile",
    "laplace_intra_cluster",
    "laplace_intercell",
    "laplace_intra_cluster_fpc",
    "laplace_intercell_fpc",
]

_STATES = (LinkState.LOS, LinkState.NLOS)

# Transform values feed reduction identities checked at 1e-9, so the
# quadratures here run tighter than the package default.
_SPEC = QuadratureSpec(rel_tol=1e-10, abs_tol=1e-13)

#: Nodes per serving-distance grid in the power-control t-expectations.
_T_NODES = 96


def _tail_spec(spec: QuadratureSpec, scale: float, value_scale: float = 1.0) -> QuadratureSpec:
    """Tail spec with the probe scale and an absolute tolerance matched to
    the integral's expected magnitude (exponent integrals scale like the
    transition radius squared)."""
    return QuadratureSpec(
        rel_tol=spec.rel_tol,
        abs_tol=spec.abs_tol * max(1.0, value_scale),
        max_subdivisions=spec.max_subdivisions,
        tail_decay_hint=1.0 / scale,
    )


@dataclass(frozen=True)
class ServingLinkProfile:
    """Serving-link mixture of an interfering UE population.

    One entry per association event (m, b) with non-negligible weight:
    (normalized weight, kappa_b, alpha_b, distance nodes, node weights).
    The node weights sum to 1 per entry and the entry weights sum to 1.
    """

    entries: tuple

    @classmethod
    def _build(cls, scenario, events: Sequence[AssociationEvent], include_center: bool):
        ch = scenario.channel
        kept = [
            e for e in events
            if e.probability > NEGLIGIBLE_PROBABILITY and (include_center or e.serving != 0)
        ]
        total = math.fsum(e.probability for e in kept)
        if total <= 0:
            raise ValueError("no association events with usable probability")
        entries = []
        for e in kept:
            nodes, weights = e.distance_grid(_T_NODES)
            entries.append(
                (e.probability / total, ch.kappa(e.state), ch.alpha(e.state), nodes, weights)
            )
        return cls(entries=tuple(entries))

    def power_factors(self, tau: float):
        """Flattened ((kappa_b t^alpha_b)^tau, mixture weight) node arrays.

        At tau = 0 every factor is exactly 1 and the weights sum to 1, so
        the mixture collapses onto the no-power-control kernel identically.
        """
        factors, weights = [], []
        for weight, kappa_b, alpha_b, nodes, wts in self.entries:
            factors.append((kappa_b * nodes ** alpha_b) ** tau)
            weights.append(weight * wts)
        return np.concatenate(factors), np.concatenate(weights)

    @classmethod
    def for_intra_cluster(cls, scenario, events):
        """Mixture for the reference BS's own member: served elsewhere, so
        the cluster-center event is excluded and the rest renormalized."""
        return cls._build(scenario, events, include_center=False)

    @classmethod
    def for_intercell(cls, scenario, events):
        """Mixture for the inter-cell field: all serving events enter."""
        return cls._build(scenario, events, include_center=True)


def _as_profile(scenario, events, builder) -> ServingLinkProfile:
    if isinstance(events, ServingLinkProfile):
        return events
    return builder(scenario, events)


def laplace_intra_cluster(
    scenario: NetworkScenario,
    j: int,
    mu: float,
    spec: QuadratureSpec = _SPEC,
) -> float:
    """E[exp(-mu * I_member)] for the reference BS's own cluster member.

    Returns 1 when the reference BS is the cluster center itself (the
    active member is the typical UE, so the term is empty) or when tier j
    hosts no clusters.
    """
    if mu < 0:
        raise ValueError("mu must be >= 0")
    if j == 0 or j not in scenario.cluster_tiers or mu == 0.0:
        return 1.0
    ch = scenario.channel
    eps = ch.blockage_epsilon
    sigma = scenario.tier(j).cluster_sigma
    law = cluster_distance_law(sigma)
    pu = scenario.ue_tx_power
    atoms = gain_distribution(scenario.antenna)

    total = 0.0
    for a in _STATES:
        alpha = ch.alpha(a)
        cs = np.array([mu * pu * atom.gain / ch.kappa(a) for atom in atoms])
        ps = np.array([atom.probability for atom in atoms])

        def integrand(r, cs=cs, ps=ps, alpha=alpha, a=a):
            r = np.asarray(r, dtype=float)
            ra = r ** alpha
            mgf = (ps[None, :] * ra[:, None] / (ra[:, None] + cs[None, :])).sum(axis=1)
            return state_probability(r, eps, a) * law.pdf(r) * mgf

        total += integrate_semi_infinite(integrand, 0.0, _tail_spec(spec, sigma)).check().value
    return min(total, 1.0)


def _intercell_exponent_term(scenario, k, a, c, spec, exact_displacement=False):
    """r-integral of the thinned-PPP exponent for one (gain, state) pair:
    int p^a(r) * r / (1 + r^alpha_a / c) dr  (times 2*pi*lam*p_G outside)."""
    ch = scenario.channel
    eps = ch.blockage_epsilon
    alpha = ch.alpha(a)
    scale = max(c ** (1.0 / alpha), 1.0)

    if not exact_displacement:
        def integrand(r):
            r = np.asarray(r, dtype=float)
            return state_probability(r, eps, a) * r / (1.0 + r ** alpha / c)

        return integrate_semi_infinite(integrand, 0.0, _tail_spec(spec, scale)).check().value


def _intercell_exponent_mixed(scenario, a, cs, ps, spec):
    """Gain-mixed exponent integral for one link state: the four gain atoms
    share one adaptive integration."""
    ch = scenario.channel
    eps = ch.blockage_epsilon
    alpha = ch.alpha(a)
    scale = max(float(np.max(cs)) ** (1.0 / alpha), 1.0)

    def integrand(r):
        r = np.asarray(r, dtype=float)
        ra = r ** alpha
        mixed = (ps[None, :] / (1.0 + ra[:, None] / cs[None, :])).sum(axis=1)
        return state_probability(r, eps, a) * r * mixed

    tail = _tail_spec(spec, scale, value_scale=scale * scale)
    return integrate_semi_infinite(integrand, 0.0, tail).check().value

    # Pre-collapse form: expectation over the Gaussian displacement of the
    # interferer around its parent at base distance v, via the Rice law.
    sigma = scenario.tier(k).cluster_sigma
    inner_spec = QuadratureSpec(rel_tol=spec.rel_tol, abs_tol=spec.abs_tol,
                                max_subdivisions=spec.max_subdivisions)

    def inner(v_scalar):
        # The Rice density concentrates in a sigma-wide band around v;
        # integrate that window explicitly rather than probing for it.
        lo = max(0.0, v_scalar - 10.0 * sigma)
        hi = v_scalar + 12.0 * sigma

        def rice_integrand(r):
            r = np.asarray(r, dtype=float)
            return (
                state_probability(r, eps, a)
                * rice_conditional_pdf(r, v_scalar, sigma)
                / (1.0 + r ** alpha / c)
            )

        return integrate_finite(rice_integrand, lo, hi, inner_spec).check().value

    def outer(v):
        v = np.asarray(v, dtype=float)
        return np.array([vi * inner(vi) for vi in v])

    outer_spec = QuadratureSpec(
        rel_tol=max(spec.rel_tol, 1e-8), abs_tol=spec.abs_tol,
        max_subdivisions=spec.max_subdivisions, tail_decay_hint=1.0 / (scale + 4 * sigma),
    )
    return integrate_semi_infinite(outer, 0.0, outer_spec).check().value


def laplace_intercell(
    scenario: NetworkScenario,
    j: int,
    k: int,
    mu: float,
    spec: QuadratureSpec = _SPEC,
    exact_displacement: bool = False,
) -> float:
    """E[exp(-mu * I_jk)]: interference from the active UEs of tier k."""
    if mu < 0:
        raise ValueError("mu must be >= 0")
    if k not in scenario.cluster_tiers:
        raise ValueError(f"tier {k} hosts no interfering UEs")
    if mu == 0.0:
        return 1.0
    ch = scenario.channel
    lam = scenario.tier(k).density
    pu = scenario.ue_tx_power
    atoms = gain_distribution(scenario.antenna)
    exponent = 0.0
    if exact_displacement:
        for atom in atoms:
            for a in _STATES:
                c = mu * pu * atom.gain / ch.kappa(a)
                term = _intercell_exponent_term(
                    scenario, k, a, c, spec, exact_displacement=True
                )
                exponent += 2.0 * math.pi * lam * atom.probability * term
    else:
        ps = np.array([atom.probability for atom in atoms])
        for a in _STATES:
            cs = np.array([mu * pu * atom.gain / ch.kappa(a) for atom in atoms])
            term = _intercell_exponent_mixed(scenario, a, cs, ps, spec)
            exponent += 2.0 * math.pi * lam * term
    return math.exp(-exponent)


def laplace_intra_cluster_fpc(
    scenario: NetworkScenario,
    j: int,
    mu: float,
    events: Union[Sequence[AssociationEvent], ServingLinkProfile],
    spec: QuadratureSpec = _SPEC,
) -> float:
    """Intra-cluster transform with the member's power set by its own
    serving link: P_u * (kappa_b t^alpha_b)^tau, (t, b) drawn from the
    tier-j association mixture conditioned on not being served by its own
    cluster center.  ``events`` is the association table of tier-j UEs (or
    a prebuilt profile)."""
    if mu < 0:
        raise ValueError("mu must be >= 0")
    if j == 0 or j not in scenario.cluster_tiers or mu == 0.0:
        return 1.0
    tau = scenario.power_control_tau
    profile = _as_profile(scenario, events, ServingLinkProfile.for_intra_cluster)
    fpc_flat, w_flat = profile.power_factors(tau)
    ch = scenario.channel
    eps = ch.blockage_epsilon
    sigma = scenario.tier(j).cluster_sigma
    law = cluster_distance_law(sigma)
    pu = scenario.ue_tx_power
    atoms = gain_distribution(scenario.antenna)
    total = 0.0
    for a in _STATES:
        alpha = ch.alpha(a)
        bases = [mu * pu * atom.gain / ch.kappa(a) for atom in atoms]

        def integrand(r, bases=bases, alpha=alpha, a=a):
            r = np.asarray(r, dtype=float)
            ra = r ** alpha
            mix = np.zeros_like(r)
            for atom, base in zip(atoms, bases):
                mix += atom.probability * (
                    w_flat[None, :] * ra[:, None]
                    / (ra[:, None] + base * fpc_flat[None, :])
                ).sum(axis=1)
            return state_probability(r, eps, a) * law.pdf(r) * mix

        total += integrate_semi_infinite(integrand, 0.0, _tail_spec(spec, sigma)).check().value
    return min(total, 1.0)


def laplace_intercell_fpc(
    scenario: NetworkScenario,
    j: int,
    k: int,
    mu: float,
    events: Union[Sequence[AssociationEvent], ServingLinkProfile],
    spec: QuadratureSpec = _SPEC,
) -> float:
    """Inter-cell transform with power control: the tier-k field is split by
    the serving event (m, b) of each interferer, thinning the density by the
    event weight and scaling power by (kappa_b t^alpha_b)^tau.  ``events``
    is the association table of tier-k UEs (or a prebuilt profile)."""
    if mu < 0:
        raise ValueError("mu must be >= 0")
    if k not in scenario.cluster_tiers:
        raise ValueError(f"tier {k} hosts no interfering UEs")
    if mu == 0.0:
        return 1.0
    tau = scenario.power_control_tau
    profile = _as_profile(scenario, events, ServingLinkProfile.for_intercell)
    fpc_flat, w_flat = profile.power_factors(tau)
    ch = scenario.channel
    eps = ch.blockage_epsilon
    lam = scenario.tier(k).density
    pu = scenario.ue_tx_power
    atoms = gain_distribution(scenario.antenna)
    exponent = 0.0
    # Typical power-control factor (weighted geometric mean); the raw max
    # is dominated by negligible-weight tail nodes and would misplace the
    # integration scale by orders of magnitude.
    fpc_typ = float(np.exp(np.sum(w_flat * np.log(np.maximum(fpc_flat, 1e-300)))))
    for a in _STATES:
        alpha = ch.alpha(a)
        bases = [mu * pu * atom.gain / ch.kappa(a) for atom in atoms]
        scale = max((max(bases) * fpc_typ) ** (1.0 / alpha), 1.0)

        def integrand(r, bases=bases, alpha=alpha, a=a):
            r = np.asarray(r, dtype=float)
            ra = r ** alpha
            mix = np.zeros_like(r)
            for atom, base in zip(atoms, bases):
                mix += atom.probability * (
                    w_flat[None, :] / (1.0 + ra[:, None] / (base * fpc_flat[None, :]))
                ).sum(axis=1)
            return state_probability(r, eps, a) * r * mix

        tail = _tail_spec(spec, scale, value_scale=scale * scale)
        term = integrate_semi_infinite(integrand, 0.0, tail).check().value
        exponent += 2.0 * math.pi * lam * term
    return math.exp(-exponent)
