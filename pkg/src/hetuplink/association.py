"""Largest biased-received-power association.

A candidate BS of tier k whose link is in state b, at distance x, delivers
long-term biased power P_k*B_k*G0 / (kappa_b * x^alpha_b).  Conditioned on a
serving candidate (tier j, state s, distance r), every competitor class
(k, b) must have no BS inside its exclusion radius

    E_{k,b}(r) = (P_k*B_k*kappa_s / (P_j*B_j*kappa_b) * r^alpha_s)^(1/alpha_b),

so each association probability is an expectation of void probabilities:

* served by the cluster center (j = 0): integrate the state-weighted
  cluster-distance density against the void probabilities of every tier
  and state at their exclusion radii;
* served by a tier-j BS: integrate the unnormalized nearest-(j, s)-BS
  density (which already carries the same-class void factor), times the
  opposite-state same-tier void factor, times the probability that the
  cluster center loses (summed over its possible link states), times the
  void factors of all other tiers.

Events are indexed (j, s) with j = 0 the cluster center; probabilities over
all events sum to 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .numerics import QuadratureSpec, integrate_finite, integrate_semi_infinite
from .scenario import LinkState, NetworkScenario
from . import geometry

__all__ = [
    "AssociationEvent",
    "AssociationError",
    "biased_power_threshold",
    "association_probabilities",
    "conditional_distance_pdf",
]

#: Hard bound on |sum of association probabilities - 1| before the wiring is
#: declared broken.
SUM_TOLERANCE = 1e-4
#: Events below this probability carry no conditional distance law.
NEGLIGIBLE_PROBABILITY = 1e-10

_STATES = (LinkState.LOS, LinkState.NLOS)


class AssociationError(RuntimeError):
    pass


@dataclass
class AssociationEvent:
    """Event S_(j,s): served by tier j (0 = cluster center) over a state-s link."""

    serving: int
    state: LinkState
    probability: float
    serving_distance_pdf: Optional[Callable] = None
    integrand: Callable = field(default=None, repr=False)
    cutoff: float = field(default=math.inf, repr=False)

    @property
    def key(self):
        return (self.serving, self.state)

    def distance_grid(self, n: int = 128):
        """Gauss-Legendre nodes on [0, cutoff] with weights proportional to
        the serving-distance density, normalized to sum exactly to 1."""
        nodes, raw = np.polynomial.legendre.leggauss(n)
        x = 0.5 * self.cutoff * (nodes + 1.0)
        w = 0.5 * self.cutoff * raw * self.integrand(x)
        total = w.sum()
        if total <= 0:
            raise AssociationError(f"event {self.key} has no probability mass")
        return x, w / total


def biased_power_threshold(
    scenario: NetworkScenario,
    k: int,
    b: LinkState,
    j: int,
    s: LinkState,
    r,
):
    """Exclusion radius for competitor class (tier k, state b) against a
    serving BS of (tier j, state s) at distance r."""
    ch = scenario.channel
    ratio = (
        scenario.power_bias(k) * ch.kappa(s)
        / (scenario.power_bias(j) * ch.kappa(b))
    )
    out = (ratio * np.asarray(r, dtype=float) ** ch.alpha(s)) ** (1.0 / ch.alpha(b))
    arr = np.asarray(out)
    return float(arr) if arr.ndim == 0 else out


def _exclusion(scenario, k, b, j, s):
    """Vectorized exclusion radius x -> coef * x^expo for fixed classes."""
    ch = scenario.channel
    ratio = (
        scenario.power_bias(k) * ch.kappa(s)
        / (scenario.power_bias(j) * ch.kappa(b))
    )
    coef = ratio ** (1.0 / ch.alpha(b))
    expo = ch.alpha(s) / ch.alpha(b)

    def radius(x):
        return coef * x ** expo

    return radius


def _event_integrand(scenario: NetworkScenario, j: int, s: LinkState,
                     wiring: str = "reachability"):
    """Unnormalized serving-distance density of event (j, s); integrates to
    the association probability."""
    ch = scenario.channel
    eps = ch.blockage_epsilon
    sigma = scenario.typical_sigma
    tiers = range(1, scenario.num_tiers + 1)
    cluster = geometry.cluster_distance_law(sigma)

    if j == 0:
        factors = [
            (scenario.tier(k).density, b, _exclusion(scenario, k, b, 0, s))
            for k in tiers
            for b in _STATES
        ]

        def integrand(x):
            x = np.asarray(x, dtype=float)
            out = geometry.state_probability(x, eps, s) * cluster.pdf(x)
            for lam, b, radius in factors:
                out = out * geometry.void_probability(lam, eps, b, radius(x))
            return out

        return integrand

    lam_j = scenario.tier(j).density
    opposite = s.other
    opp_radius = _exclusion(scenario, j, opposite, j, s)
    center_terms = [
        (a, _exclusion(scenario, 0, a, j, s)) for a in _STATES
    ]
    other_factors = [
        (scenario.tier(k).density, b, _exclusion(scenario, k, b, j, s))
        for k in tiers
        if k != j
        for b in _STATES
    ]
    if wiring == "reachability":
        scale = 1.0
    elif wiring == "normalized-expectation":
        # Comparison harness only: treat the nearest-BS pdf normalizer as if
        # the reachability factor did not belong in the event probability.
        scale = 1.0 / max(geometry.nearest_bs_law(lam_j, s, eps).reachability, 1e-300)
    else:
        raise ValueError(f"unknown wiring {wiring!r}")

    def integrand(x):
        x = np.asarray(x, dtype=float)
        out = (
            2.0 * math.pi * lam_j * x
            * geometry.state_probability(x, eps, s)
            * geometry.void_probability(lam_j, eps, s, x)
            * geometry.void_probability(lam_j, eps, opposite, opp_radius(x))
            * scale
        )
        center = np.zeros_like(x)
        for a, radius in center_terms:
            center += geometry.cluster_link_tail(sigma, eps, a, radius(x))
        out = out * center
        for lam, b, radius in other_factors:
            out = out * geometry.void_probability(lam, eps, b, radius(x))
        return out

    return integrand


def _event_scale(scenario: NetworkScenario, j: int) -> float:
    sigma = scenario.typical_sigma
    if j == 0:
        return sigma
    return max(sigma, 1.0 / math.sqrt(math.pi * scenario.tier(j).density))


def association_probabilities(
    scenario: NetworkScenario,
    spec: QuadratureSpec = QuadratureSpec(),
    wiring: str = "reachability",
) -> List[AssociationEvent]:
    """Association probability and conditional distance law per (j, s) event.

    Probabilities must sum to 1 within SUM_TOLERANCE, otherwise the formula
    wiring is broken and AssociationError is raised.
    """
    events = []
    for j in range(0, scenario.num_tiers + 1):
        for s in _STATES:
            integrand = _event_integrand(scenario, j, s, wiring=wiring)
            scale = _event_scale(scenario, j)
            ev_spec = QuadratureSpec(
                rel_tol=spec.rel_tol,
                abs_tol=spec.abs_tol,
                max_subdivisions=spec.max_subdivisions,
                tail_decay_hint=1.0 / scale,
            )
            result = integrate_semi_infinite(integrand, 0.0, ev_spec).check()
            probability = max(result.value, 0.0)
            event = AssociationEvent(
                serving=j,
                state=s,
                probability=probability,
                integrand=integrand,
                cutoff=result.cutoff,
            )
            if probability > NEGLIGIBLE_PROBABILITY:
                event.serving_distance_pdf = _normalized_pdf(integrand, probability)
            events.append(event)

    total = math.fsum(e.probability for e in events)
    if wiring == "reachability" and abs(total - 1.0) > SUM_TOLERANCE:
        raise AssociationError(
            f"association probabilities sum to {total:.8f}; formula wiring bug"
        )
    return events


def _normalized_pdf(integrand, probability):
    def pdf(x):
        return integrand(x) / probability

    return pdf


def conditional_distance_pdf(scenario: NetworkScenario, event: AssociationEvent):
    """Serving-distance pdf conditioned on the event; integrates to 1."""
    if event.probability <= NEGLIGIBLE_PROBABILITY:
        raise AssociationError(
            f"event {event.key} has vanishing probability {event.probability:.3g}"
        )
    if event.serving_distance_pdf is not None:
        return event.serving_distance_pdf
    return _normalized_pdf(event.integrand, event.probability)


def event_map(events) -> dict:
    """Index a list of events by (serving, state)."""
    return {e.key: e for e in events}
