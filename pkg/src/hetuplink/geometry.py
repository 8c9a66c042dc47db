"""Analytic distance distributions for the clustered-UE network.

Implements, for a typical UE at the origin:

* the Rayleigh law of the distance to its own cluster-center BS (Gaussian
  scatter with spread sigma gives pdf x/sigma^2 * exp(-x^2/(2 sigma^2)));
* the same law conditioned on the link being LOS or NLOS, with normalizer
  D^s = E[p^s(r)] (the probability the cluster link is in state s);
* the nearest LOS/NLOS BS distance in a PPP tier thinned by the blockage
  function p_LOS(r) = exp(-eps*r), including the reachability probability
  D^s (at least one such BS exists) and the void probability
  V(x) = exp(-Lambda(x)), Lambda(x) = 2*pi*lam*int_0^x t*p^s(t) dt;
* the Rice law of the distance to a Gaussian-displaced point at base
  distance v.

Void probabilities and unnormalized cluster-link tails are exposed directly
because the association integrands are products of exactly those factors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import special

from .numerics import QuadratureSpec, bessel_i0_scaled, integrate_semi_infinite
from .scenario import LinkState

__all__ = [
    "DistanceLaw",
    "NearestBsLaw",
    "los_probability",
    "state_probability",
    "cluster_distance_law",
    "cluster_distance_law_conditioned",
    "cluster_link_tail",
    "interior_measure",
    "void_probability",
    "nearest_bs_law",
    "rice_conditional_pdf",
]

_SQRT_HALF_PI = math.sqrt(math.pi / 2.0)
# Below eps*x = 1e-4 the closed-form interior measure loses digits to
# cancellation; a three-term series takes over.
_SERIES_THRESHOLD = 1e-4


@dataclass(frozen=True)
class DistanceLaw:
    """A distance distribution on [0, inf): vectorized pdf and ccdf."""

    pdf: Callable
    ccdf: Callable
    support: Tuple[float, float] = (0.0, math.inf)


@dataclass(frozen=True)
class NearestBsLaw:
    """Nearest-BS distance law for one (tier, link state) pair.

    ``law`` is conditioned on at least one such BS existing (reachability
    D^s); ``void_probability(x)`` is the unconditional probability that no
    such BS lies within x, the factor association products are built from.
    """

    law: DistanceLaw
    reachability: float
    void_probability: Callable
    interior_measure: Callable


def los_probability(r, epsilon: float):
    """LOS probability exp(-eps*r); the NLOS probability is the complement."""
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0):
        raise ValueError("distance must be >= 0")
    out = np.exp(-epsilon * arr)
    return float(out) if arr.ndim == 0 else out


def state_probability(r, epsilon: float, state: LinkState):
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0):
        raise ValueError("distance must be >= 0")
    los = np.exp(-epsilon * arr)
    out = los if state is LinkState.LOS else 1.0 - los
    return float(out) if arr.ndim == 0 else out


def cluster_distance_law(sigma: float) -> DistanceLaw:
    """Rayleigh law of the UE-to-cluster-center distance."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    two_var = 2.0 * sigma * sigma

    def pdf(x):
        x = np.asarray(x, dtype=float)
        return x / (sigma * sigma) * np.exp(-x * x / two_var)

    def ccdf(x):
        x = np.asarray(x, dtype=float)
        out = np.exp(-x * x / two_var)
        return float(out) if out.ndim == 0 else out

    return DistanceLaw(pdf=pdf, ccdf=ccdf)


def cluster_link_tail(sigma: float, epsilon: float, state: LinkState, y):
    """Unnormalized tail integral T^s(y) = int_y^inf p^s(t) f_cluster(t) dt.

    Equals D^s * ccdf^s(y) of the conditioned law; T^L(0) + T^N(0) = 1.
    The LOS branch has the closed form
        exp(-y^2/(2 sigma^2) - eps*y) * (1 - eps*sigma*sqrt(pi/2)
            * erfcx((y + eps*sigma^2) / (sigma*sqrt(2))))
    and the NLOS branch is the Rayleigh tail minus the LOS branch.
    """
    y = np.asarray(y, dtype=float)
    gauss_tail = np.exp(-y * y / (2.0 * sigma * sigma))
    z = (y + epsilon * sigma * sigma) / (sigma * math.sqrt(2.0))
    los = gauss_tail * np.exp(-epsilon * y) * (
        1.0 - epsilon * sigma * _SQRT_HALF_PI * special.erfcx(z)
    )
    if state is LinkState.LOS:
        out = los
    else:
        out = gauss_tail - los
    out = np.maximum(out, 0.0)
    return float(out) if out.ndim == 0 else out


def cluster_distance_law_conditioned(
    sigma: float,
    state: LinkState,
    epsilon: float,
    spec: QuadratureSpec = QuadratureSpec(),
) -> Tuple[DistanceLaw, float]:
    """Cluster-center distance law given the link state, plus its normalizer.

    The normalizer D^s = E[p^s(r)] is evaluated by semi-infinite quadrature;
    LOS and NLOS normalizers sum to 1.  Conditioning on a state of
    probability below 1e-12 is degenerate and rejected.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    base = cluster_distance_law(sigma)

    def weighted_pdf(x):
        return state_probability(x, epsilon, state) * base.pdf(x)

    tail_spec = QuadratureSpec(
        rel_tol=spec.rel_tol, abs_tol=spec.abs_tol,
        max_subdivisions=spec.max_subdivisions, tail_decay_hint=1.0 / sigma,
    )
    normalizer = integrate_semi_infinite(weighted_pdf, 0.0, tail_spec).check().value
    if normalizer < 1e-12:
        raise ValueError(
            f"degenerate conditioning: state {state.value} has probability {normalizer:.3g}"
        )

    def pdf(x):
        return weighted_pdf(x) / normalizer

    def ccdf(x):
        return cluster_link_tail(sigma, epsilon, state, x) / normalizer

    return DistanceLaw(pdf=pdf, ccdf=ccdf), normalizer


def interior_measure(lam: float, epsilon: float, state: LinkState, x):
    """Lambda^s(x) = 2*pi*lam * int_0^x t * p^s(t) dt.

    Closed form for the exponential blockage profile; the NLOS branch is
    pi*lam*x^2 minus the LOS branch, with a three-term series below
    eps*x = 1e-4 where the subtraction would cancel.
    """
    x = np.asarray(x, dtype=float)
    if epsilon == 0.0:
        los = math.pi * lam * x * x
        nlos = np.zeros_like(los)
    else:
        u = epsilon * x
        small = u < _SERIES_THRESHOLD
        base = 2.0 * math.pi * lam * x * x
        with np.errstate(over="ignore"):
            exact_los = (
                2.0 * math.pi * lam
                * (1.0 - (1.0 + u) * np.exp(-u)) / (epsilon * epsilon)
            )
        series_los = base * (0.5 - u / 3.0 + u * u / 8.0)
        los = np.where(small, series_los, exact_los)
        series_nlos = base * (u / 3.0 - u * u / 8.0 + u ** 3 / 30.0)
        nlos = np.where(small, series_nlos, math.pi * lam * x * x - los)
    out = los if state is LinkState.LOS else nlos
    return float(out) if out.ndim == 0 else out


def void_probability(lam: float, epsilon: float, state: LinkState, x):
    """Probability that no (tier, state) BS lies within distance x."""
    out = np.exp(-interior_measure(lam, epsilon, state, x))
    arr = np.asarray(out)
    return float(arr) if arr.ndim == 0 else out


def _reachability(lam: float, epsilon: float, state: LinkState) -> float:
    """D^s = 1 - exp(-Lambda^s(inf))."""
    if state is LinkState.LOS:
        if epsilon == 0.0:
            return 1.0
        return float(-math.expm1(-2.0 * math.pi * lam / (epsilon * epsilon)))
    # NLOS: the interior measure grows without bound unless eps == 0.
    return 0.0 if epsilon == 0.0 else 1.0


def nearest_bs_law(lam: float, state: LinkState, epsilon: float) -> NearestBsLaw:
    """Distance to the nearest (tier, state) BS in a PPP of density ``lam``.

    With eps = 0 and NLOS there are no such BSs at all: the law is improper
    and reported with reachability 0 (pdf and ccdf identically zero).
    """
    if not lam > 0:
        raise ValueError("density must be positive")
    reach = _reachability(lam, epsilon, state)

    def void(x):
        return void_probability(lam, epsilon, state, x)

    def measure(x):
        return interior_measure(lam, epsilon, state, x)

    if reach == 0.0:
        zero = lambda x: np.zeros_like(np.asarray(x, dtype=float)) + 0.0
        return NearestBsLaw(
            law=DistanceLaw(pdf=zero, ccdf=zero),
            reachability=0.0,
            void_probability=void,
            interior_measure=measure,
        )

    miss = 1.0 - reach  # probability of no BS anywhere

    def pdf(x):
        x = np.asarray(x, dtype=float)
        return (
            2.0 * math.pi * lam * x * state_probability(x, epsilon, state)
            * np.exp(-interior_measure(lam, epsilon, state, x)) / reach
        )

    def ccdf(x):
        out = np.maximum(void_probability(lam, epsilon, state, x) - miss, 0.0) / reach
        arr = np.asarray(out)
        return float(arr) if arr.ndim == 0 else out

    return NearestBsLaw(
        law=DistanceLaw(pdf=pdf, ccdf=ccdf),
        reachability=reach,
        void_probability=void,
        interior_measure=measure,
    )


def rice_conditional_pdf(r, v, sigma: float):
    """Rice density of the distance to a Gaussian-displaced point.

    f(r | v) = r/sigma^2 * exp(-(r^2+v^2)/(2 sigma^2)) * I0(r*v/sigma^2),
    evaluated as exp(-(r-v)^2/(2 sigma^2)) * i0e so that large r*v/sigma^2
    cannot overflow.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    r_arr = np.asarray(r, dtype=float)
    v_arr = np.asarray(v, dtype=float)
    if np.any(r_arr < 0) or np.any(v_arr < 0):
        raise ValueError("distances must be >= 0")
    var = sigma * sigma
    out = (
        r_arr / var
        * np.exp(-((r_arr - v_arr) ** 2) / (2.0 * var))
        * bessel_i0_scaled(r_arr * v_arr / var)
    )
    arr = np.asarray(out)
    return float(arr) if arr.ndim == 0 else out
