"""Warped-product metric ds^2 = f(t) dt^2 + g(t) dtheta^2 on the unit ball.

The profile is Euclidean near the centre (f = 1, g = t^2 for t < epsilon),
exponential near the boundary (f = exp(-2(a+1)t), g = exp(-2bt) for t > c),
and joined on [epsilon, c] by quintic Hermite interpolation of log f and
log g, which keeps f, g positive and C^2 across both junctions.

Everything is evaluated through log-derivatives (log f, (log f)', (log f)'',
and the same for g) so that potentials built from ratios like g'/g never
overflow even when g itself does.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

QUAD_TOL = 1e-12
INVERSE_TOL = 1e-12

# 16-point Gauss-Legendre rule on [-1, 1]
_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to converge on a subinterval."""

    def __init__(self, lo: float, hi: float, estimate: float):
        super().__init__(
            f"quadrature did not converge on [{lo!r}, {hi!r}] (error estimate {estimate:.3e})"
        )
        self.interval = (lo, hi)
        self.estimate = estimate


@dataclass(frozen=True)
class WarpParams:
    N: int
    a: float
    b: float
    epsilon: float = 1.0
    c: float = 2.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"dimension N must be an integer >= 2, got {self.N!r}")
        if self.a > -1:
            raise ValueError(f"a must be <= -1 (complete metric), got {self.a!r}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon!r}")
        if not self.c > self.epsilon:
            raise ValueError(f"c must exceed epsilon, got c={self.c!r}, epsilon={self.epsilon!r}")

    @property
    def regime(self) -> str:
        return "a_eq_minus1" if self.a == -1 else "a_lt_minus1"

    @property
    def abs_a1(self) -> float:
        """|a + 1|, the exponential rate of sqrt(f) near the boundary."""
        return abs(self.a + 1.0)


def _quintic_hermite(y0, y1, h):
    """Coefficients (in s = (t - t0)/h, s in [0, 1]) matching value, first and
    second t-derivatives given as y0 = (v, d1, d2) at s=0 and y1 at s=1."""
    v0, d10, d20 = y0
    v1, d11, d21 = y1
    # scale t-derivatives to s-derivatives
    rhs = np.array([v0, d10 * h, d20 * h * h, v1, d11 * h, d21 * h * h])
    m = np.array([
        [1, 0, 0, 0, 0, 0],
        [0, 1, 0, 0, 0, 0],
        [0, 0, 2, 0, 0, 0],
        [1, 1, 1, 1, 1, 1],
        [0, 1, 2, 3, 4, 5],
        [0, 0, 2, 6, 12, 20],
    ], dtype=float)
    return np.polynomial.Polynomial(np.linalg.solve(m, rhs))


@dataclass(frozen=True)
class MetricProfile:
    params: WarpParams
    _log_f: np.polynomial.Polynomial = field(repr=False)
    _log_g: np.polynomial.Polynomial = field(repr=False)

    @property
    def epsilon(self) -> float:
        return self.params.epsilon

    @property
    def c(self) -> float:
        return self.params.c

    def log_derivs(self, t):
        """Return (lf, lf1, lf2, lg, lg1, lg2): log f, log g and their first two
        t-derivatives, evaluated piecewise on an array of t > 0."""
        t = np.asarray(t, dtype=float)
        eps, c = self.params.epsilon, self.params.c
        k = -2.0 * (self.params.a + 1.0)
        bb = -2.0 * self.params.b
        out = [np.zeros_like(t) for _ in range(6)]
        inner = t < eps
        outer = t > c
        mid = ~(inner | outer)

        ti = t[inner]
        out[3][inner] = 2.0 * np.log(ti)
        out[4][inner] = 2.0 / ti
        out[5][inner] = -2.0 / ti**2

        to = t[outer]
        out[0][outer] = k * to
        out[1][outer] = k
        out[3][outer] = bb * to
        out[4][outer] = bb

        h = c - eps
        s = (t[mid] - eps) / h
        for base, poly in ((0, self._log_f), (3, self._log_g)):
            d1 = poly.deriv()
            out[base][mid] = poly(s)
            out[base + 1][mid] = d1(s) / h
            out[base + 2][mid] = d1.deriv()(s) / h**2
        return tuple(out)

    def f(self, t):
        return np.exp(self.log_derivs(t)[0])

    def g(self, t):
        return np.exp(self.log_derivs(t)[3])

    def derivs(self, t):
        """Return (f, f', f'', g, g', g'') on an array of t."""
        lf, lf1, lf2, lg, lg1, lg2 = self.log_derivs(t)
        f = np.exp(lf)
        g = np.exp(lg)
        return f, f * lf1, f * (lf2 + lf1**2), g, g * lg1, g * (lg2 + lg1**2)


def build_profile(params: WarpParams) -> MetricProfile:
    """Metric profile with a C^2 log-quintic bridge on [epsilon, c]."""
    eps, c = params.epsilon, params.c
    k = -2.0 * (params.a + 1.0)
    log_f = _quintic_hermite((0.0, 0.0, 0.0), (k * c, k, 0.0), c - eps)
    log_g = _quintic_hermite(
        (2.0 * np.log(eps), 2.0 / eps, -2.0 / eps**2),
        (-2.0 * params.b * c, -2.0 * params.b, 0.0),
        c - eps,
    )
    return MetricProfile(params, log_f, log_g)


def _gl_panel(func, lo, hi):
    half = 0.5 * (hi - lo)
    return half * np.dot(_GL_W, func(lo + half * (_GL_X + 1.0)))


@dataclass(frozen=True)
class ArclengthMap:
    """r(t) = int_0^t sqrt(f(s)) ds and its inverse.

    For a < -1 the asymptotic region satisfies r - c1 = exp(|a+1| t) / |a+1|.
    """

    profile: MetricProfile
    K: float
    cbar: float
    c1: float | None
    _edges: np.ndarray = field(repr=False)
    _cum: np.ndarray = field(repr=False)

    def _sqrt_f(self, t):
        return np.exp(0.5 * self.profile.log_derivs(t)[0])

    def dr_dt(self, t):
        return self._sqrt_f(t)

    def r(self, t):
        t = np.asarray(t, dtype=float)
        p = self.profile.params
        eps, c = p.epsilon, p.c
        out = np.array(t, dtype=float, copy=True)
        outer = t > c
        if p.a == -1:
            out[outer] = t[outer] + (self.cbar - c)
        else:
            # c1 + exp(A t)/A, written relative to cbar so it stays exact as A -> 0
            A = p.abs_a1
            out[outer] = self.cbar + np.exp(A * c) * np.expm1(A * (t[outer] - c)) / A
        mid = (t >= eps) & ~outer
        if np.any(mid):
            out[mid] = eps + self._bridge_integral(t[mid])
        return out

    def _bridge_integral(self, t):
        """int_eps^t sqrt(f) for eps <= t <= c, using the converged panels."""
        idx = np.clip(np.searchsorted(self._edges, t, side="right") - 1, 0, len(self._edges) - 2)
        lo = self._edges[idx]
        half = 0.5 * (t - lo)
        nodes = lo[:, None] + half[:, None] * (_GL_X[None, :] + 1.0)
        vals = self._sqrt_f(nodes.ravel()).reshape(nodes.shape)
        # row-wise sum, not BLAS: equal t must give bitwise-equal r
        return self._cum[idx] + half * (vals * _GL_W).sum(axis=1)

    def t(self, r):
        """Inverse map t(r) by closed forms outside the bridge and safeguarded
        Newton iteration inside it."""
        r = np.asarray(r, dtype=float)
        if np.any(~(r > 0)) or not np.all(np.isfinite(r)):
            raise ValueError("r must be finite and positive")
        p = self.profile.params
        eps, c = p.epsilon, p.c
        out = np.array(r, dtype=float, copy=True)
        outer = r > self.cbar
        if p.a == -1:
            out[outer] = r[outer] - (self.cbar - c)
        else:
            A = p.abs_a1
            out[outer] = c + np.log1p(A * np.exp(-A * c) * (r[outer] - self.cbar)) / A
        mid = (r >= eps) & ~outer
        if np.any(mid):
            out[mid] = self._invert_bridge(r[mid])
        return out

    def _invert_bridge(self, r):
        eps, c = self.profile.params.epsilon, self.profile.params.c
        r_edges = eps + self._cum
        target = r - eps
        lo = np.full_like(r, eps)
        hi = np.full_like(r, c)
        t = np.interp(r, r_edges, self._edges)
        for _ in range(60):
            resid = self._bridge_integral(t) - target
            lo = np.where(resid < 0, t, lo)
            hi = np.where(resid > 0, t, hi)
            step = resid / self._sqrt_f(t)
            t_new = t - step
            # fall back to bisection when Newton leaves the bracket
            bad = (t_new < lo) | (t_new > hi)
            t_new = np.where(bad, 0.5 * (lo + hi), t_new)
            done = np.max(np.abs(t_new - t)) < INVERSE_TOL * max(1.0, c)
            t = t_new
            if done:
                return t
        resid = np.max(np.abs(self._bridge_integral(t) - target))
        raise RuntimeError(f"inverse arclength map did not converge (residual {resid:.3e})")


def arclength(profile: MetricProfile, tol: float = QUAD_TOL, max_depth: int = 40) -> ArclengthMap:
    """Build the arclength coordinate r(t) for a profile.

    The bridge integral is computed by adaptive Gauss-Legendre panels; each
    accepted panel agrees with its two halves to ``tol`` scaled by its length.
    """
    p = profile.params
    eps, c = p.epsilon, p.c

    def sqrt_f(t):
        return np.exp(0.5 * profile.log_derivs(t)[0])

    total = c - eps
    accepted: list[tuple[float, float, float]] = []
    stack = [(eps, c, 0)]
    while stack:
        lo, hi, depth = stack.pop()
        whole = _gl_panel(sqrt_f, lo, hi)
        mid = 0.5 * (lo + hi)
        left = _gl_panel(sqrt_f, lo, mid)
        right = _gl_panel(sqrt_f, mid, hi)
        err = abs(whole - (left + right))
        if err <= tol * (hi - lo) / total and depth > 0:
            accepted.append((lo, hi, left + right))
        elif depth >= max_depth:
            raise QuadratureError(lo, hi, err)
        else:
            stack.append((mid, hi, depth + 1))
            stack.append((lo, mid, depth + 1))
    accepted.sort()
    edges = np.array([lo for lo, _, _ in accepted] + [c])
    cum = np.concatenate([[0.0], np.cumsum([v for _, _, v in accepted])])
    K = float(cum[-1])
    cbar = K + eps
    c1 = None if p.a == -1 else cbar - np.exp(p.abs_a1 * c) / p.abs_a1
    return ArclengthMap(profile, K, cbar, c1, edges, cum)
