"""Reduced one-dimensional operators for one sphere mode.

Type I:   -(1/f w')' + V1 w        (coclosed p-forms, eigenvalue lambda^p)
Type II:  -(1/f w')' + V2 w        (closed (p-1)-forms, eigenvalue lambda^{p-1})
Type III: the 2x2 system coupling the two through g^{-3/2} f^{-1/2} g' sqrt(lambda)

In the arclength coordinate r the weight 1/f disappears and every operator
takes the Schroedinger form -w'' + V(r) w. V(r) is available through two
independent routes:

* ``path="t"``: the t-coordinate potential at t(r), minus the potential
  generated by the Liouville transform of -(1/f w')' alone;
* ``path="r"``: the r-coordinate metric dr^2 + g~(r) dtheta^2 fed directly
  into the same fiber formula with f = 1, using chain-rule derivatives of g~.

They agree to rounding everywhere, including the bridge, which has no
closed form.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .metric import ArclengthMap, MetricProfile


class Kind(str, Enum):
    TYPE_I = "I"
    TYPE_II = "II"
    TYPE_III = "III"


def beta_type1(N: int, p: int) -> float:
    return (N - 1 - 2 * p) / 4.0


def beta_type2(N: int, p: int) -> float:
    # the type II fiber potential is the type I one with beta -> -(N+1-2p)/4,
    # i.e. type I in degree N - p
    return -(N + 1 - 2 * p) / 4.0


def _fiber_potential(beta, lam, lf, lf1, lf2, lg, lg1, lg2):
    """Sum of the six terms of the reduced potential, in ratio form.

    -7/16 f^-3 f'^2 + 1/4 f^-2 f'' - 1/2 f^-2 f' beta g'/g
    + f^-1 beta(beta-1) (g'/g)^2 + f^-1 beta g''/g + lam/g
    """
    inv_f = np.exp(-lf)
    fr = lf1
    f2r = lf2 + lf1 * lf1
    gr = lg1
    g2r = lg2 + lg1 * lg1
    bracket = (
        -7.0 / 16.0 * fr * fr
        + 0.25 * f2r
        - 0.5 * fr * beta * gr
        + beta * (beta - 1.0) * gr * gr
        + beta * g2r
    )
    out = inv_f * bracket
    if lam != 0.0:
        out = out + lam * np.exp(-lg)
    return out


def _liouville_f_term(lf, lf1, lf2):
    """Potential produced by w = f^{1/4} u when rewriting -u_rr in t."""
    return np.exp(-lf) * (-7.0 / 16.0 * lf1 * lf1 + 0.25 * (lf2 + lf1 * lf1))


def potential_type1_general(profile: MetricProfile, N: int, p: int, lam: float) -> Callable:
    """V(t) of the type I reduced operator in the t coordinate."""
    beta = beta_type1(N, p)

    def V(t):
        return _fiber_potential(beta, lam, *profile.log_derivs(t))

    return V


def potential_type2_general(profile: MetricProfile, N: int, p: int, lam: float) -> Callable:
    """V(t) of the type II reduced operator in the t coordinate.

    Coefficients: (N-2p+1)/4 * (N-2p+5)/4 on (g'/g)^2, (-N+2p-1)/4 on g''/g and
    +(N+1-2p)/8 on f' g' / (f^2 g).
    """
    beta = beta_type2(N, p)

    def V(t):
        return _fiber_potential(beta, lam, *profile.log_derivs(t))

    return V


def coupling_v3(profile: MetricProfile) -> Callable:
    """g^{-3/2} f^{-1/2} g' as a function of t (without the sqrt(lambda))."""

    def V3(t):
        lf, _, _, lg, lg1, _ = profile.log_derivs(t)
        return np.exp(-0.5 * lg - 0.5 * lf) * lg1

    return V3


@dataclass(frozen=True)
class PotentialSpec:
    kind: Kind
    N: int
    p: int
    lam: float
    regime: str
    threshold1: float
    threshold2: float
    K1: float | None
    K2: float | None
    c1: float | None
    cbar: float


def potential_spec(kind, amap: ArclengthMap, N: int, p: int, lam: float) -> PotentialSpec:
    prm = amap.profile.params
    b = prm.b
    t1 = ((N - 2 * p - 1) / 2.0) ** 2 * b * b
    t2 = ((N - 2 * p + 1) / 2.0) ** 2 * b * b
    K1 = K2 = None
    if prm.a != -1:
        m = b / prm.abs_a1
        K1 = ((N - 2 * p - 1) / 2.0) ** 2 * m * m + (N - 2 * p - 1) / 2.0 * m
        # the linear term enters with the opposite sign to K1 (type II is
        # type I in degree N - p)
        K2 = ((N - 2 * p + 1) / 2.0) ** 2 * m * m - (N - 2 * p + 1) / 2.0 * m
    return PotentialSpec(Kind(kind), N, p, float(lam), prm.regime, t1, t2, K1, K2, amap.c1, amap.cbar)


def _check_degree(kind: Kind, N: int, p: int) -> None:
    lo, hi = {Kind.TYPE_I: (0, N - 1), Kind.TYPE_II: (1, N), Kind.TYPE_III: (1, N - 1)}[kind]
    if not lo <= p <= hi:
        raise ValueError(f"type {kind.value} operators need {lo} <= p <= {hi}, got p={p}")


@dataclass(frozen=True)
class ReducedOperator:
    """-w'' + V(r) w on (0, inf), or the coupled system for type III where
    ``V`` and ``V2`` are the diagonal entries and ``W`` the (symmetric)
    off-diagonal entry V3(r) sqrt(lambda)."""

    spec: PotentialSpec
    amap: ArclengthMap
    V: Callable
    V2: Callable | None = None
    W: Callable | None = None

    @property
    def coupled(self) -> bool:
        return self.W is not None

    @property
    def cbar(self) -> float:
        return self.amap.cbar


def _r_log_derivs(amap: ArclengthMap, t):
    """log g~ and its r-derivatives, with the flat weight f = 1."""
    lf, lf1, _, lg, lg1, lg2 = amap.profile.log_derivs(t)
    inv_sqrt_f = np.exp(-0.5 * lf)
    dlg = lg1 * inv_sqrt_f
    d2lg = (lg2 - 0.5 * lg1 * lf1) * inv_sqrt_f * inv_sqrt_f
    zero = np.zeros_like(lg)
    return zero, zero, zero, lg, dlg, d2lg


def _beta(kind: Kind, N: int, p: int) -> float:
    return beta_type1(N, p) if kind is Kind.TYPE_I else beta_type2(N, p)


def r_potential(kind, amap: ArclengthMap, N: int, p: int, lam: float, path: str = "r") -> Callable:
    """V(r) for a type I or II operator by the chosen evaluation path."""
    kind = Kind(kind)
    profile = amap.profile
    if path == "t":
        general = (potential_type1_general if kind is Kind.TYPE_I else potential_type2_general)(
            profile, N, p, lam
        )
        return to_arclength_potential(general, amap)
    if path != "r":
        raise ValueError(f"unknown evaluation path {path!r}")
    beta = _beta(kind, N, p)

    def V(r):
        t = amap.t(r)
        return _fiber_potential(beta, lam, *_r_log_derivs(amap, t))

    return V


def to_arclength_potential(V_t: Callable, amap: ArclengthMap) -> Callable:
    """Turn a t-coordinate potential of -(1/f w')' + V_t w into the potential
    of the unitarily equivalent -u'' + V(r) u."""

    def V(r):
        t = amap.t(r)
        lf, lf1, lf2, *_ = amap.profile.log_derivs(t)
        return V_t(t) - _liouville_f_term(lf, lf1, lf2)

    return V


def to_arclength(V_t: Callable | None, amap: ArclengthMap, profile: MetricProfile, kind, N: int, p: int,
                 lam: float, path: str = "t") -> ReducedOperator:
    """Reduced operator in the arclength coordinate.

    With ``path="t"`` the given t-coordinate potential is transported (when
    ``V_t`` is None the general formula for ``kind`` is used); with
    ``path="r"`` the r-coordinate metric is evaluated directly.
    """
    kind = Kind(kind)
    if kind is Kind.TYPE_III:
        raise ValueError("use assemble_type3 for coupled operators")
    if amap.profile is not profile:
        raise ValueError("arclength map was built for a different profile")
    _check_degree(kind, N, p)
    if lam < 0:
        raise ValueError("sphere eigenvalue must be non-negative")
    if path == "t" and V_t is not None:
        V = to_arclength_potential(V_t, amap)
    else:
        V = r_potential(kind, amap, N, p, lam, path=path)
    return ReducedOperator(potential_spec(kind, amap, N, p, lam), amap, _guard(V))


def reduced_operator(kind, amap: ArclengthMap, N: int, p: int, lam: float, path: str = "r") -> ReducedOperator:
    """Convenience constructor for any of the three kinds."""
    kind = Kind(kind)
    if kind is Kind.TYPE_III:
        return assemble_type3(amap.profile, amap, N, p, lam, path=path)
    return to_arclength(None, amap, amap.profile, kind, N, p, lam, path=path)


def r_coupling(amap: ArclengthMap) -> Callable:
    """V3 as a function of r (the combination g^{-3/2} f^{-1/2} g' is
    invariant under the change of variable)."""
    v3 = coupling_v3(amap.profile)

    def V3(r):
        return v3(amap.t(r))

    return V3


def assemble_type3(profile: MetricProfile, amap: ArclengthMap, N: int, p: int, lam: float,
                   path: str = "r") -> ReducedOperator:
    """Coupled operator for coclosed (p-1)-eigenforms with eigenvalue lam > 0."""
    _check_degree(Kind.TYPE_III, N, p)
    if not lam > 0:
        raise ValueError("type III operators need a positive (p-1)-form eigenvalue")
    if amap.profile is not profile:
        raise ValueError("arclength map was built for a different profile")
    V1 = r_potential(Kind.TYPE_I, amap, N, p, lam, path=path)
    V2 = r_potential(Kind.TYPE_II, amap, N, p, lam, path=path)
    V3 = r_coupling(amap)
    root = float(np.sqrt(lam))

    def W(r):
        return root * V3(r)

    return ReducedOperator(potential_spec(Kind.TYPE_III, amap, N, p, lam), amap, _guard(V1), _guard(V2), _guard(W))


def _guard(func: Callable) -> Callable:
    def wrapped(r):
        r = np.asarray(r, dtype=float)
        if np.any(r <= 0):
            raise ValueError("potentials are only defined for r > 0")
        return func(r)

    return wrapped


# Closed forms in the Euclidean region (0, epsilon) and the asymptotic region
# (cbar, inf); NaN on the bridge.

def closed_form_potential(kind, amap: ArclengthMap, N: int, p: int, lam: float) -> Callable:
    kind = Kind(kind)
    prm = amap.profile.params
    eps, b = prm.epsilon, prm.b
    if kind is Kind.TYPE_I:
        u = (N - 2 * p - 1) / 2.0
        near = u * ((N - 2 * p - 3) / 2.0)
    else:
        u = (N - 2 * p + 1) / 2.0
        near = u * ((N - 2 * p + 3) / 2.0)
    spec = potential_spec(kind, amap, N, p, lam)

    def V(r):
        r = np.asarray(r, dtype=float)
        out = np.full_like(r, np.nan)
        inner = r < eps
        out[inner] = (near + lam) / r[inner] ** 2
        outer = r > amap.cbar
        ro = r[outer]
        if prm.a == -1:
            out[outer] = u * u * b * b + lam * np.exp(2.0 * b * ro)
        else:
            K = spec.K1 if kind is Kind.TYPE_I else spec.K2
            A = prm.abs_a1
            x = ro - amap.c1
            out[outer] = K * x**-2 + lam * A ** (2.0 * b / A) * x ** (2.0 * b / A)
        return out

    return V


def closed_form_coupling(amap: ArclengthMap) -> Callable:
    prm = amap.profile.params
    eps, b = prm.epsilon, prm.b

    def V3(r):
        r = np.asarray(r, dtype=float)
        out = np.full_like(r, np.nan)
        inner = r < eps
        out[inner] = 2.0 / r[inner] ** 2
        outer = r > amap.cbar
        ro = r[outer]
        if prm.a == -1:
            out[outer] = -2.0 * b * np.exp(b * ro)
        else:
            A = prm.abs_a1
            out[outer] = (-2.0 * b / A) * A ** (b / A) * (ro - amap.c1) ** (b / A - 1.0)
        return out

    return V3
