"""Numerical checks of the unitary reduction chain.

For a compactly supported test function h, the fiber action of the form
Laplacian on h (computed analytically from h, h', h'') is pushed through the
transform h -> w and compared with the reduced operator applied to w, the
latter with 4th-order central differences. The only error left is the
finite-difference error, so the residual must fall like step^4.

Mutations deliberately break one ingredient so the suite can be shown to
have teeth. ``flip_cross_term`` changes the coefficient of the cross term
f'g'/(f^2 g) in the reduced potential: its sign is flipped for type I, and
for type II it becomes -(N-1+2p)/8 instead of the derived +(N+1-2p)/8. It is
only visible where f' != 0. ``swap_coupling`` exchanges the two coupling
weights of the coupled (type III) fiber action.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.integrate import quad

from .metric import MetricProfile, WarpParams, build_profile
from .reduction import beta_type1, beta_type2, _fiber_potential
from .sphere_modes import coclosed_eigenvalues

MUTATIONS = ("flip_cross_term", "swap_coupling")
MIN_NODES = 16


@dataclass(frozen=True)
class TestProfile:
    """h(t) = scale * (1 - s^2)^power on [t0, t1], s mapping the support to [-1, 1].

    power = 8 keeps h in C^7, enough for the 5-point stencils to see a smooth
    function across the support edges.
    """

    __test__ = False  # not a pytest class

    t0: float
    t1: float
    power: int = 8
    scale: float = 1.0

    def __post_init__(self):
        if not 0 < self.t0 < self.t1:
            raise ValueError("support must satisfy 0 < t0 < t1")
        if self.power < 3:
            raise ValueError("power must be at least 3 for a C^2 bump")

    def derivs(self, t):
        """(h, h', h'') at t, zero outside the support."""
        t = np.asarray(t, dtype=float)
        kappa = 2.0 / (self.t1 - self.t0)
        s = kappa * t - (self.t0 + self.t1) / (self.t1 - self.t0)
        inside = np.abs(s) < 1.0
        q = np.where(inside, 1.0 - s * s, 0.0)
        m = self.power
        h = self.scale * q**m
        h1 = self.scale * m * q ** (m - 1) * (-2.0 * s) * kappa
        h2 = self.scale * kappa**2 * (4.0 * m * (m - 1) * s * s * q ** (m - 2) - 2.0 * m * q ** (m - 1))
        return h, np.where(inside, h1, 0.0), np.where(inside, h2, 0.0)


def _fd(w, step):
    """4th-order first and second derivatives at the interior points [2:-2]."""
    d1 = (-w[4:] + 8.0 * w[3:-1] - 8.0 * w[1:-3] + w[:-4]) / (12.0 * step)
    d2 = (-w[4:] + 16.0 * w[3:-1] - 30.0 * w[2:-2] + 16.0 * w[1:-3] - w[:-4]) / (12.0 * step * step)
    return d1, d2


def _nodes(h: TestProfile, step: float):
    n = int(round((h.t1 - h.t0) / step))
    if n < MIN_NODES:
        raise ValueError(f"grid too coarse: support holds {n} nodes, need at least {MIN_NODES}")
    t = h.t0 + step * np.arange(-2, n + 3)
    if t[0] <= 0:
        raise ValueError("stencil leaves (0, inf); move the support away from 0")
    return t


def _flat_operator(w, step, logs, beta, lam, cross_coeff=None):
    """-(1/f w')' + V w on the interior nodes, with V the reduced potential.

    ``cross_coeff`` replaces the coefficient of f'g'/(f^2 g), which is
    -beta/2 in the reduced potential (mutation)."""
    lf, lf1, lf2, lg, lg1, lg2 = (x[2:-2] for x in logs)
    d1, d2 = _fd(w, step)
    V = _fiber_potential(beta, lam, lf, lf1, lf2, lg, lg1, lg2)
    if cross_coeff is not None:
        V = V + np.exp(-lf) * (0.5 * beta + cross_coeff) * lf1 * lg1
    return -np.exp(-lf) * (d2 - lf1 * d1) + V * w[2:-2]


def _type1_action(h, logs, N, p, lam):
    """Fiber action on type I forms; weight exponent (N-1-2p)/2."""
    hv, h1, h2 = h
    lf, lf1, _, lg, lg1, _ = logs
    e = (N - 1 - 2 * p) / 2.0
    return lam * np.exp(-lg) * hv - np.exp(-lf) * (h2 + (-0.5 * lf1 + e * lg1) * h1)


def _type2_action(h, logs, N, p, lam):
    """Fiber action on type II forms; exponent (N+1-2p)/2 inside the
    derivative."""
    hv, h1, h2 = h
    lf, lf1, lf2, lg, lg1, lg2 = logs
    gam = (N + 1 - 2 * p) / 2.0
    phi1 = -0.5 * lf1 + gam * lg1
    phi2 = -0.5 * lf2 + gam * lg2
    return lam * np.exp(-lg) * hv - np.exp(-lf) * (h2 + (phi1 - lf1) * h1 + (phi2 - lf1 * phi1) * hv)


def _t1_weight(logs, N, p):
    lf, _, _, lg, _, _ = logs
    return np.exp(0.25 * lf + (N - 2 * p - 1) / 4.0 * lg)


def _t2_weight(logs, N, p):
    lf, _, _, lg, _, _ = logs
    return np.exp(-0.25 * lf + (N + 1 - 2 * p) / 4.0 * lg)


def _residual(A, B):
    scale = np.max(np.abs(B))
    if scale == 0:
        raise ValueError("reduced operator vanishes on the test function")
    return float(np.max(np.abs(A - B)) / scale)


def check_type1_reduction(profile: MetricProfile, N: int, p: int, lam: float, h: TestProfile,
                          step: float, mutation: str | None = None) -> float:
    t = _nodes(h, step)
    logs = profile.log_derivs(t)
    hd = h.derivs(t)
    w = hd[0] * _t1_weight(logs, N, p)
    A = (_type1_action(hd, logs, N, p, lam) * _t1_weight(logs, N, p))[2:-2]
    # flipped sign of the cross term
    cross = (N - 1 - 2 * p) / 8.0 if mutation == "flip_cross_term" else None
    B = _flat_operator(w, step, logs, beta_type1(N, p), lam, cross)
    return _residual(A, B)


def check_type2_reduction(profile: MetricProfile, N: int, p: int, lam: float, h: TestProfile,
                          step: float, mutation: str | None = None) -> float:
    t = _nodes(h, step)
    logs = profile.log_derivs(t)
    hd = h.derivs(t)
    w = hd[0] * _t2_weight(logs, N, p)
    A = (_type2_action(hd, logs, N, p, lam) * _t2_weight(logs, N, p))[2:-2]
    # -(N-1+2p)/8 is the coefficient that would make the potential disagree
    # with the transformed fiber action; the derived one is +(N+1-2p)/8
    cross = -(N - 1 + 2 * p) / 8.0 if mutation == "flip_cross_term" else None
    B = _flat_operator(w, step, logs, beta_type2(N, p), lam, cross)
    return _residual(A, B)


def check_type3_reduction(profile: MetricProfile, N: int, p: int, lam: float, h1: TestProfile,
                          h2: TestProfile, step: float, mutation: str | None = None) -> float:
    if not lam > 0:
        raise ValueError("coupled check needs a positive (p-1)-form eigenvalue")
    if (h1.t0, h1.t1) != (h2.t0, h2.t1) and not (h1.t0 <= h2.t0 and h2.t1 <= h1.t1):
        raise ValueError("second test function must live inside the first one's support")
    t = _nodes(h1, step)
    logs = profile.log_derivs(t)
    lf, _, _, lg, lg1, _ = logs
    d1, d2 = h1.derivs(t), h2.derivs(t)
    root = np.sqrt(lam)
    c12 = np.exp(-lf) * lg1  # f^-1 g^-1 g'
    c21 = np.exp(-lg) * lg1  # g^-2 g'
    if mutation == "swap_coupling":
        c12, c21 = c21, c12
    A1 = (_type1_action(d1, logs, N, p, lam) + c12 * root * d2[0]) * _t1_weight(logs, N, p)
    A2 = (_type2_action(d2, logs, N, p, lam) + c21 * root * d1[0]) * _t2_weight(logs, N, p)
    w1 = d1[0] * _t1_weight(logs, N, p)
    w2 = d2[0] * _t2_weight(logs, N, p)
    v3 = (np.exp(-0.5 * lg - 0.5 * lf) * lg1 * root)[2:-2]
    B1 = _flat_operator(w1, step, logs, beta_type1(N, p), lam) + v3 * w2[2:-2]
    B2 = _flat_operator(w2, step, logs, beta_type2(N, p), lam) + v3 * w1[2:-2]
    A = np.concatenate([A1[2:-2], A2[2:-2]])
    B = np.concatenate([B1, B2])
    return _residual(A, B)


def weighted_norms(profile: MetricProfile, N: int, p: int, h: TestProfile, kind: str = "I") -> tuple[float, float]:
    """(int weight * h^2 dt, int w^2 dt) for the type I or II transform,
    computed independently by adaptive quadrature."""
    if kind == "I":
        e_g, e_f = (N - 2 * p - 1) / 2.0, 0.5
        weight_fn = _t1_weight
    elif kind == "II":
        e_g, e_f = (N + 1 - 2 * p) / 2.0, -0.5
        weight_fn = _t2_weight
    else:
        raise ValueError(f"unknown kind {kind!r}")

    def lhs(t):
        logs = profile.log_derivs(np.array([t]))
        return float(np.exp(e_g * logs[3] + e_f * logs[0])[0] * h.derivs(t)[0] ** 2)

    def rhs(t):
        logs = profile.log_derivs(np.array([t]))
        return float((h.derivs(t)[0] * weight_fn(logs, N, p)[0]) ** 2)

    opts = dict(epsabs=1e-14, epsrel=1e-12, limit=200)
    return quad(lhs, h.t0, h.t1, **opts)[0], quad(rhs, h.t0, h.t1, **opts)[0]


@dataclass(frozen=True)
class ConvergenceStudy:
    check: str
    params: dict
    steps: tuple[float, ...]
    residuals: tuple[float, ...]
    orders: tuple[float, ...]
    min_order: float
    passed: bool

    def rows(self) -> list[dict]:
        return [{"check": self.check, "params": self.params, "step": s, "residual": r}
                for s, r in zip(self.steps, self.residuals)]


def convergence_study(check: str, params: WarpParams, N: int, p: int, lam: float, support: tuple[float, float],
                      levels: int = 4, base_cells: int = 32, mutation: str | None = None,
                      order_gate: float = 3.5) -> ConvergenceStudy:
    """Residuals over ``levels`` halvings of the step, starting from
    ``base_cells`` cells across the support; passes when every successive
    observed order reaches ``order_gate``."""
    if levels < 2:
        raise ValueError("need at least two refinement levels")
    profile = build_profile(params)
    h = TestProfile(*support)
    length = support[1] - support[0]
    steps = tuple(length / (base_cells * 2**j) for j in range(levels))
    res = []
    for step in steps:
        if check == "type1":
            res.append(check_type1_reduction(profile, N, p, lam, h, step, mutation))
        elif check == "type2":
            res.append(check_type2_reduction(profile, N, p, lam, h, step, mutation))
        elif check == "type3":
            inner = TestProfile(support[0] + 0.1 * length, support[1], power=9, scale=0.7)
            res.append(check_type3_reduction(profile, N, p, lam, h, inner, step, mutation))
        else:
            raise ValueError(f"unknown check {check!r}")
    r = np.array(res)
    with np.errstate(divide="ignore", invalid="ignore"):
        orders = np.log2(r[:-1] / r[1:])
    orders = np.nan_to_num(orders, nan=0.0)
    min_order = float(np.min(orders))
    rec = {"N": N, "p": p, "a": params.a, "b": params.b, "lambda": lam,
           "support": list(support), "mutation": mutation}
    return ConvergenceStudy(check, rec, steps, tuple(res), tuple(float(o) for o in orders),
                            min_order, bool(min_order >= order_gate))


# default suite: each type on the three pieces of the profile, with a = -2 so
# that f' does not vanish outside the Euclidean region
SUPPORTS = ((0.1, 0.5), (1.1, 1.9), (2.5, 3.5))


def default_cases() -> list[tuple]:
    cases = []
    for a, b in ((-1.0, -1.0), (-2.0, 0.5)):
        params = WarpParams(N=4, a=a, b=b)
        for sup in SUPPORTS:
            cases.append(("type1", params, 4, 1, coclosed_eigenvalues(4, 1, 1)[0].lam, sup))
            cases.append(("type2", params, 4, 2, coclosed_eigenvalues(4, 1, 1)[0].lam, sup))
            cases.append(("type3", params, 4, 2, coclosed_eigenvalues(4, 1, 1)[0].lam, sup))
    return cases


def mutation_for(check: str, mutate: bool) -> str | None:
    if not mutate:
        return None
    return "swap_coupling" if check == "type3" else "flip_cross_term"


def run_suite(mutate: bool = False, cases: Iterable[tuple] | None = None) -> list[ConvergenceStudy]:
    out = []
    for check, params, N, p, lam, sup in (cases if cases is not None else default_cases()):
        out.append(convergence_study(check, params, N, p, lam, sup, mutation=mutation_for(check, mutate)))
    return out


def to_jsonl(studies: Sequence[ConvergenceStudy]) -> str:
    lines = [json.dumps(row, sort_keys=True) for st in studies for row in st.rows()]
    return "\n".join(lines) + ("\n" if lines else "")
