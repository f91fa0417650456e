"""Finite-difference discretisation of the reduced operators and low spectra.

-w'' + V w on [r_min, L] with Dirichlet ends is discretised by the 3-point
stencil on a non-uniform grid (geometric near zero, uniform further out).
With lumped masses M_i the generalized problem K w = E M w is symmetrised to
A = M^{-1/2} K M^{-1/2} + diag(V), a symmetric tridiagonal matrix. Coupled
(type III) operators interleave the two components, giving a symmetric
banded matrix with two sub-diagonals.

Eigenvalues are found by bisection on inertia counts (Sturm sequences for
the tridiagonal case, LDL^T pivots for the banded one), eigenvectors by
inverse iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import solve_banded

from . import _kernels
from .reduction import ReducedOperator

# stands in for +inf when exp(2 b r) overflows on long grids
_HUGE_POTENTIAL = 1e300


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (achieved residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class GridPolicy:
    """How grids are built for a truncation ladder.

    ``n`` is the number of uniform cells at the largest ladder length; every
    shorter length reuses the same spacing, so grids along a ladder are nested
    and drift between lengths is pure truncation effect.
    """

    n: int = 4096
    r_min: float | None = None
    ratio: float = 1.02
    scheme: str = "geometric"

    def __post_init__(self):
        if self.n < 64:
            raise ValueError(f"grid needs n >= 64, got {self.n}")
        if self.scheme not in ("geometric", "uniform"):
            raise ValueError(f"unknown grid scheme {self.scheme!r}")
        if not self.ratio > 1.0:
            raise ValueError("geometric ratio must exceed 1")

    def resolve_r_min(self, epsilon: float) -> float:
        r_min = min(epsilon / 10.0, 1e-4) if self.r_min is None else self.r_min
        if not 0 < r_min <= epsilon / 10.0:
            raise ValueError(f"r_min must lie in (0, epsilon/10], got {r_min}")
        return r_min


@dataclass(frozen=True)
class Grid:
    nodes: np.ndarray = field(repr=False)
    scheme: str = "geometric"

    def __post_init__(self):
        nodes = self.nodes
        if nodes.ndim != 1 or nodes.size < 3:
            raise ValueError("a grid needs at least three nodes")
        if not nodes[0] > 0:
            raise ValueError("grid must start at r_min > 0")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("grid nodes must be strictly increasing")

    @property
    def r_min(self) -> float:
        return float(self.nodes[0])

    @property
    def L(self) -> float:
        return float(self.nodes[-1])

    @property
    def n(self) -> int:
        return int(self.nodes.size)

    @property
    def interior(self) -> np.ndarray:
        return self.nodes[1:-1]


def uniform_grid(r_min: float, L: float, n: int) -> Grid:
    return Grid(np.linspace(r_min, L, n + 1), scheme="uniform")


def make_grid(r_min: float, L: float, spacing: float, ratio: float = 1.02) -> Grid:
    """Geometric nodes r_min * ratio^j until the step reaches ``spacing``,
    then uniform steps of ``spacing`` up to L (last step stretched to land on
    L exactly, never shrunk below half a step)."""
    if not 0 < r_min < L:
        raise ValueError("need 0 < r_min < L")
    geo = [r_min]
    while geo[-1] * (ratio - 1.0) < spacing and geo[-1] < L:
        geo.append(geo[-1] * ratio)
    start = geo[-1]
    if start >= L:
        return Grid(np.array(geo[:-1] + [L]))
    m = max(1, int(np.floor((L - start) / spacing + 0.5)))
    uni = start + spacing * np.arange(1, m + 1)
    uni[-1] = L
    return Grid(np.concatenate([geo, uni]))


def ladder_grids(ladder: Sequence[float], policy: GridPolicy, epsilon: float) -> list[Grid]:
    r_min = policy.resolve_r_min(epsilon)
    L_max = max(ladder)
    spacing = (L_max - r_min) / policy.n
    if policy.scheme == "uniform":
        return [uniform_grid(r_min, L, max(64, int(round((L - r_min) / spacing)))) for L in ladder]
    return [make_grid(r_min, L, spacing, policy.ratio) for L in ladder]


@dataclass(frozen=True)
class DiscretizedOperator:
    """Symmetric matrix of a reduced operator on a truncated grid.

    Tridiagonal: diagonal ``d`` and off-diagonal ``e``. Banded (coupled):
    ``band[j, i] = A[i + j, i]`` for j = 0, 1, 2 with components interleaved
    as (w1_0, w2_0, w1_1, w2_1, ...). ``mass`` holds the lumped masses of the
    interior nodes; eigenvectors of A are M^{1/2} w.
    """

    grid: Grid
    mass: np.ndarray = field(repr=False)
    d: np.ndarray | None = field(default=None, repr=False)
    e: np.ndarray | None = field(default=None, repr=False)
    band: np.ndarray | None = field(default=None, repr=False)
    bc: str = "dirichlet"

    @property
    def banded(self) -> bool:
        return self.band is not None

    @property
    def size(self) -> int:
        return self.band.shape[1] if self.banded else self.d.size

    @property
    def components(self) -> int:
        return 2 if self.banded else 1

    def to_dense(self) -> np.ndarray:
        if not self.banded:
            return np.diag(self.d) + np.diag(self.e, 1) + np.diag(self.e, -1)
        n = self.size
        A = np.diag(self.band[0])
        for j in (1, 2):
            off = np.diag(self.band[j, : n - j], -j)
            A = A + off + off.T
        return A

    def shifted(self, c: float) -> "DiscretizedOperator":
        if self.banded:
            band = self.band.copy()
            band[0] += c
            return DiscretizedOperator(self.grid, self.mass, band=band, bc=self.bc)
        return DiscretizedOperator(self.grid, self.mass, d=self.d + c, e=self.e, bc=self.bc)

    def gershgorin_lower(self) -> float:
        if self.banded:
            rad = np.zeros(self.size)
            n = self.size
            for j in (1, 2):
                a = np.abs(self.band[j, : n - j])
                rad[: n - j] += a
                rad[j:] += a
            return float(np.min(self.band[0] - rad))
        ae = np.abs(self.e)
        rad = np.concatenate([ae, [0.0]]) + np.concatenate([[0.0], ae])
        return float(np.min(self.d - rad))


def _laplacian(grid: Grid):
    h = np.diff(grid.nodes)
    mass = 0.5 * (h[:-1] + h[1:])
    d = (1.0 / h[:-1] + 1.0 / h[1:]) / mass
    e = -1.0 / (h[1:-1] * np.sqrt(mass[:-1] * mass[1:]))
    return mass, d, e


def _sample(func, r, what: str) -> np.ndarray:
    with np.errstate(over="ignore", invalid="ignore"):
        vals = np.asarray(func(r), dtype=float)
    vals = np.where(vals == np.inf, _HUGE_POTENTIAL, vals)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        r_bad = r[np.argmax(bad)]
        raise ValueError(f"{what} is not finite at r = {r_bad!r}")
    return np.minimum(vals, _HUGE_POTENTIAL)


def discretize(op: ReducedOperator, grid: Grid) -> DiscretizedOperator:
    """Dirichlet discretisation of ``op`` on ``grid``."""
    r = grid.interior
    mass, d0, e0 = _laplacian(grid)
    V = _sample(op.V, r, "potential")
    if not op.coupled:
        return DiscretizedOperator(grid, mass, d=d0 + V, e=e0)
    V2 = _sample(op.V2, r, "second potential")
    W = _sample(op.W, r, "coupling")
    m = r.size
    band = np.zeros((3, 2 * m))
    band[0, 0::2] = d0 + V
    band[0, 1::2] = d0 + V2
    band[1, 0::2] = W
    band[2, 0 : 2 * m - 2 : 2] = e0
    band[2, 1 : 2 * m - 2 : 2] = e0
    return DiscretizedOperator(grid, mass, band=band)


def count_below(mat: DiscretizedOperator, x: float, backend: str | None = None) -> int:
    """Number of eigenvalues strictly below x."""
    if mat.banded:
        return int(_kernels.band_counts(mat.band, [x], backend)[0])
    return int(_kernels.sturm_counts(mat.d, mat.e, [x], backend)[0])


def eigenvalues_below(mat: DiscretizedOperator, cutoff: float, max_count: int | None = None,
                      rtol: float = 1e-10, backend: str | None = None) -> np.ndarray:
    """All eigenvalues below ``cutoff`` (only the lowest ``max_count`` if
    given), sorted, each to ``rtol`` relative accuracy (absolute near 0)."""
    total = count_below(mat, cutoff, backend)
    k = total if max_count is None else min(total, max_count)
    if k == 0:
        return np.empty(0)
    lo = min(mat.gershgorin_lower(), cutoff) - 1.0
    tol = rtol * max(1.0, abs(cutoff), abs(lo)) * 1e-2
    idx = np.arange(k)
    if mat.banded:
        return _kernels.bisect_band(mat.band, lo, cutoff, idx, tol, backend)
    return _kernels.bisect_tridiagonal(mat.d, mat.e, lo, cutoff, idx, tol, backend)


def _banded_ab(mat: DiscretizedOperator, shift: float) -> tuple[tuple[int, int], np.ndarray]:
    """The matrix minus shift in scipy's (l, u) diagonal-ordered form."""
    if not mat.banded:
        n = mat.size
        ab = np.zeros((3, n))
        ab[0, 1:] = mat.e
        ab[1] = mat.d - shift
        ab[2, :-1] = mat.e
        return (1, 1), ab
    n = mat.size
    ab = np.zeros((5, n))
    ab[2] = mat.band[0] - shift
    for j in (1, 2):
        ab[2 + j, : n - j] = mat.band[j, : n - j]
        ab[2 - j, j:] = mat.band[j, : n - j]
    return (2, 2), ab


def _matvec(mat: DiscretizedOperator, x: np.ndarray) -> np.ndarray:
    if not mat.banded:
        y = mat.d * x
        y[:-1] += mat.e * x[1:]
        y[1:] += mat.e * x[:-1]
        return y
    n = mat.size
    y = mat.band[0] * x
    for j in (1, 2):
        a = mat.band[j, : n - j]
        y[j:] += a * x[: n - j]
        y[: n - j] += a * x[j:]
    return y


def eigenvectors(mat: DiscretizedOperator, values: Sequence[float], tol: float = 1e-8,
                 max_iter: int = 8) -> np.ndarray:
    """Normalised eigenvectors of the symmetric matrix for the given
    eigenvalues (rows of the result), by shifted inverse iteration."""
    n = mat.size
    out = np.empty((len(values), n))
    start = np.cos(np.arange(n) * 0.7) + 1.5  # deterministic, not orthogonal to anything smooth
    # rounding floor of the residual: the 1/h^2 entries near r_min make |A| large
    floor = 1e3 * np.finfo(float).eps * float(np.max(np.abs(_matvec(mat, np.ones(n)))) + np.max(np.abs(
        mat.band[0] if mat.banded else mat.d)))
    for j, lam in enumerate(values):
        # nudge the shift off the eigenvalue so the factorisation is regular
        shift = lam - 1e-12 * max(1.0, abs(lam))
        lu, ab = _banded_ab(mat, shift)
        x = start / np.linalg.norm(start)
        resid = np.inf
        for _ in range(max_iter):
            y = solve_banded(lu, ab, x, check_finite=False)
            x = y / np.linalg.norm(y)
            resid = np.linalg.norm(_matvec(mat, x) - lam * x)
            if resid < tol * max(1.0, abs(lam)) + floor:
                break
        if not resid < tol * max(1.0, abs(lam)) + floor:
            raise ConvergenceError(f"inverse iteration for eigenvalue {lam!r} did not converge", resid)
        if x[np.argmax(np.abs(x))] < 0:
            x = -x
        out[j] = x
    return out


def mass_beyond(mat: DiscretizedOperator, vecs: np.ndarray, r0: float) -> np.ndarray:
    """Fraction of each eigenvector's L^2 mass located at r > r0."""
    r = mat.grid.interior
    mask = np.repeat(r > r0, mat.components)
    sq = vecs * vecs
    return sq[:, mask].sum(axis=1) / sq.sum(axis=1)


@dataclass(frozen=True)
class LadderLevel:
    L: float
    eigenvalues: np.ndarray
    count_below: int
    mass_beyond: np.ndarray
    drift: np.ndarray
    labels: tuple[str, ...]
    band_bottom: float | None


@dataclass(frozen=True)
class SpectrumEstimate:
    cutoff: float
    levels: tuple[LadderLevel, ...]
    bottom: float | None
    uncertainty: float
    count_stable: bool
    verdict: str  # "band" | "ess empty" | "ambiguous"
    ambiguous: tuple[float, ...] = ()

    @property
    def ladder(self) -> tuple[float, ...]:
        return tuple(lv.L for lv in self.levels)

    @property
    def eigenvalues(self) -> tuple[np.ndarray, ...]:
        return tuple(lv.eigenvalues for lv in self.levels)


def _richardson(Ls, Bs):
    L1, L2 = Ls
    B1, B2 = Bs
    return (L2 * L2 * B2 - L1 * L1 * B1) / (L2 * L2 - L1 * L1)


def _label_states(vals, masses, drifts, drift_tol, mass_frac):
    # band needs both signals; a stable state is discrete even with a long
    # tail beyond cbar (weakly bound just under the threshold), while a
    # drifting state kept inside cbar fits neither picture
    labels = []
    for lam, mass, dr in zip(vals, masses, drifts):
        drifting = dr > drift_tol * max(1.0, abs(lam))
        if not drifting:
            labels.append("discrete")
        elif mass > mass_frac:
            labels.append("band")
        else:
            labels.append("ambiguous")
    return tuple(labels)


def essential_bottom(op: ReducedOperator, ladder: Sequence[float] = (40.0, 80.0, 160.0),
                     policy: GridPolicy | None = None, cutoff: float = 50.0, max_states: int = 40,
                     drift_tol: float = 1e-6, mass_frac: float = 0.5,
                     backend: str | None = None) -> SpectrumEstimate:
    """Estimate the bottom of the essential spectrum of ``op`` below ``cutoff``.

    Every state below the cutoff (at most ``max_states`` of them) is labelled
    at each ladder length: "band" when it both drifts under a change of L
    (ordinal-matched against the neighbouring length) and keeps more than
    ``mass_frac`` of its mass beyond cbar, "discrete" when it does not drift,
    "ambiguous" when it drifts while staying localised. The band bottom at each L is the lowest band state
    provided no ambiguous state lies below it; the limit is Richardson
    extrapolated in 1/L^2 from the last two lengths and the uncertainty is the
    change against the extrapolation from the previous pair.
    """
    ladder = [float(L) for L in ladder]
    if len(ladder) < 3 or any(b <= a for a, b in zip(ladder, ladder[1:])):
        raise ValueError("ladder must hold at least three increasing lengths")
    policy = policy or GridPolicy()
    eps = op.amap.profile.params.epsilon
    if ladder[0] <= op.cbar:
        raise ValueError(f"ladder lengths must exceed cbar = {op.cbar:.4g}")
    grids = ladder_grids(ladder, policy, eps)

    mats = [discretize(op, g) for g in grids]
    vals = [eigenvalues_below(m, cutoff, max_states, backend=backend) for m in mats]
    counts = [count_below(m, cutoff, backend) for m in mats]
    masses = [mass_beyond(m, eigenvectors(m, v), op.cbar) if v.size else np.empty(0)
              for m, v in zip(mats, vals)]

    levels = []
    for i, L in enumerate(ladder):
        j = i + 1 if i + 1 < len(ladder) else i - 1
        mine, other = vals[i], vals[j]
        k = min(mine.size, other.size)
        drift = np.full(mine.size, np.inf)  # unmatched states count as drifting
        drift[:k] = np.abs(mine[:k] - other[:k])
        labels = _label_states(mine, masses[i], drift, drift_tol, mass_frac)
        bottom = None
        for lam, lab in zip(mine, labels):
            if lab == "ambiguous":
                break
            if lab == "band":
                bottom = float(lam)
                break
        levels.append(LadderLevel(L, mine, counts[i], masses[i], drift, labels, bottom))

    ambiguous = tuple(float(v) for v, lab in zip(levels[-1].eigenvalues, levels[-1].labels) if lab == "ambiguous")
    count_stable = counts[-1] == counts[-2]
    bottoms = [lv.band_bottom for lv in levels]
    any_band = any(lab == "band" for lv in levels[-2:] for lab in lv.labels)

    if all(b is not None for b in bottoms[-3:]):
        R_last = _richardson(ladder[-2:], bottoms[-2:])
        R_prev = _richardson(ladder[-3:-1], bottoms[-3:-1])
        return SpectrumEstimate(cutoff, tuple(levels), float(R_last), float(abs(R_last - R_prev)),
                                count_stable, "band", ambiguous)
    if count_stable and not any_band and not ambiguous:
        return SpectrumEstimate(cutoff, tuple(levels), None, 0.0, True, "ess empty", ambiguous)
    return SpectrumEstimate(cutoff, tuple(levels), None, 0.0, count_stable, "ambiguous", ambiguous)
