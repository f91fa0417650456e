"""Hot loops of the eigensolver: inertia counts and bisection.

Two interchangeable backends. The numba backend compiles scalar loops; the
numpy backend vectorises the same recurrences over many shifts at once (the
recurrence over the matrix index stays a Python loop). Select with the
environment variable WARPSPEC_BACKEND=numba|numpy; numba is the default when
it imports.
"""

from __future__ import annotations

import os

import numpy as np

# exact-zero pivots are replaced by this (negative) value
_PIVOT_FLOOR = 1e-300

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False


def _default_backend() -> str:
    name = os.environ.get("WARPSPEC_BACKEND", "numba" if HAVE_NUMBA else "numpy").strip().lower()
    if name not in ("numba", "numpy"):
        raise ValueError(f"WARPSPEC_BACKEND must be 'numba' or 'numpy', got {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("WARPSPEC_BACKEND=numba but numba is not importable")
    return name


BACKEND = _default_backend()


# ---------------------------------------------------------------- numpy

def _np_sturm_counts(d, e2, shifts):
    """Number of eigenvalues < shift for each shift (symmetric tridiagonal,
    diagonal d, squared off-diagonal e2)."""
    shifts = np.atleast_1d(np.asarray(shifts, dtype=float))
    q = d[0] - shifts
    q = np.where(q == 0.0, -_PIVOT_FLOOR, q)
    count = (q < 0).astype(np.int64)
    for i in range(1, d.shape[0]):
        q = d[i] - shifts - e2[i - 1] / q
        q = np.where(q == 0.0, -_PIVOT_FLOOR, q)
        count += q < 0
    return count


def _np_band_counts(band, shifts):
    """Negative pivots of LDL^T(A - shift) for a symmetric matrix stored in
    lower banded form band[j, i] = A[i + j, i] (bandwidth 2)."""
    shifts = np.atleast_1d(np.asarray(shifts, dtype=float))
    n = band.shape[1]
    # L entries of the two previous columns, per shift
    l1_prev = np.zeros_like(shifts)  # L[i, i-1]
    l2_prev2 = np.zeros_like(shifts)  # L[i, i-2] pending for column i
    d_prev = np.ones_like(shifts)
    d_prev2 = np.ones_like(shifts)
    count = np.zeros(shifts.shape, dtype=np.int64)
    l_next1 = np.zeros_like(shifts)  # L[i+1, i-1] from column i-1
    for i in range(n):
        # D[i] = A[i,i] - sum_k L[i,k]^2 D[k]
        di = band[0, i] - shifts - l1_prev * l1_prev * d_prev - l2_prev2 * l2_prev2 * d_prev2
        di = np.where(di == 0.0, -_PIVOT_FLOOR, di)
        count += di < 0
        # column i of L: L[i+1, i] and L[i+2, i]
        a1 = band[1, i] if i + 1 < n else 0.0
        a2 = band[2, i] if i + 2 < n else 0.0
        # L[i+1,i] = (A[i+1,i] - L[i+1,i-1] L[i,i-1] D[i-1]) / D[i]
        li1 = (a1 - l_next1 * l1_prev * d_prev) / di
        li2 = a2 / di
        # shift state
        l2_prev2 = l_next1
        d_prev2 = d_prev
        l_next1 = li2
        l1_prev = li1
        d_prev = di
    return count


def _np_bisect(count_fn, lo, hi, indices, tol):
    """Bisection for the eigenvalues with the given 0-based indices; all run
    simultaneously. count_fn(shifts) -> counts of eigenvalues < shift."""
    k = np.asarray(indices, dtype=np.int64)
    lo = np.full(k.shape, float(lo))
    hi = np.full(k.shape, float(hi))
    for _ in range(200):
        width = hi - lo
        scale = np.maximum(np.abs(lo), np.abs(hi))
        active = width > np.maximum(tol, 4.0 * np.finfo(float).eps * scale)
        if not np.any(active):
            break
        mid = 0.5 * (lo + hi)
        c = count_fn(mid)
        go_up = c <= k
        lo = np.where(active & go_up, mid, lo)
        hi = np.where(active & ~go_up, mid, hi)
    return 0.5 * (lo + hi)


def _np_tridiag_solve(d, e, shift, rhs):
    """Solve (T - shift) x = rhs with partial pivoting (banded LU)."""
    from scipy.linalg import solve_banded

    n = d.shape[0]
    ab = np.zeros((3, n))
    ab[0, 1:] = e
    ab[1] = d - shift
    ab[2, :-1] = e
    return solve_banded((1, 1), ab, rhs)


# ---------------------------------------------------------------- numba

if HAVE_NUMBA:

    @numba.njit(cache=True, nogil=True)
    def _nb_sturm_count(d, e2, x):
        q = d[0] - x
        if q == 0.0:
            q = -_PIVOT_FLOOR
        count = 1 if q < 0 else 0
        for i in range(1, d.shape[0]):
            q = d[i] - x - e2[i - 1] / q
            if q == 0.0:
                q = -_PIVOT_FLOOR
            if q < 0:
                count += 1
        return count

    @numba.njit(cache=True, nogil=True)
    def _nb_sturm_counts(d, e2, shifts):
        out = np.empty(shifts.shape[0], dtype=np.int64)
        for j in range(shifts.shape[0]):
            out[j] = _nb_sturm_count(d, e2, shifts[j])
        return out

    @numba.njit(cache=True, nogil=True)
    def _nb_band_count(band, x):
        n = band.shape[1]
        l1_prev = 0.0
        l2_prev2 = 0.0
        d_prev = 1.0
        d_prev2 = 1.0
        l_next1 = 0.0
        count = 0
        for i in range(n):
            di = band[0, i] - x - l1_prev * l1_prev * d_prev - l2_prev2 * l2_prev2 * d_prev2
            if di == 0.0:
                di = -_PIVOT_FLOOR
            if di < 0:
                count += 1
            a1 = band[1, i] if i + 1 < n else 0.0
            a2 = band[2, i] if i + 2 < n else 0.0
            li1 = (a1 - l_next1 * l1_prev * d_prev) / di
            li2 = a2 / di
            l2_prev2 = l_next1
            d_prev2 = d_prev
            l_next1 = li2
            l1_prev = li1
            d_prev = di
        return count

    @numba.njit(cache=True, nogil=True)
    def _nb_band_counts(band, shifts):
        out = np.empty(shifts.shape[0], dtype=np.int64)
        for j in range(shifts.shape[0]):
            out[j] = _nb_band_count(band, shifts[j])
        return out

    @numba.njit(cache=True, nogil=True)
    def _nb_bisect_tridiag(d, e2, lo0, hi0, indices, tol):
        out = np.empty(indices.shape[0])
        eps = 2.220446049250313e-16
        for j in range(indices.shape[0]):
            k = indices[j]
            lo = lo0
            hi = hi0
            for _ in range(200):
                scale = max(abs(lo), abs(hi))
                if hi - lo <= max(tol, 4.0 * eps * scale):
                    break
                mid = 0.5 * (lo + hi)
                if _nb_sturm_count(d, e2, mid) <= k:
                    lo = mid
                else:
                    hi = mid
            out[j] = 0.5 * (lo + hi)
        return out

    @numba.njit(cache=True, nogil=True)
    def _nb_bisect_band(band, lo0, hi0, indices, tol):
        out = np.empty(indices.shape[0])
        eps = 2.220446049250313e-16
        for j in range(indices.shape[0]):
            k = indices[j]
            lo = lo0
            hi = hi0
            for _ in range(200):
                scale = max(abs(lo), abs(hi))
                if hi - lo <= max(tol, 4.0 * eps * scale):
                    break
                mid = 0.5 * (lo + hi)
                if _nb_band_count(band, mid) <= k:
                    lo = mid
                else:
                    hi = mid
            out[j] = 0.5 * (lo + hi)
        return out


# ---------------------------------------------------------------- dispatch

def sturm_counts(d, e, shifts, backend: str | None = None):
    """Eigenvalue counts below each shift for the tridiagonal (d, e)."""
    e2 = np.ascontiguousarray(np.asarray(e, dtype=float) ** 2)
    d = np.ascontiguousarray(d, dtype=float)
    shifts = np.atleast_1d(np.asarray(shifts, dtype=float))
    if (backend or BACKEND) == "numba":
        return _nb_sturm_counts(d, e2, shifts)
    return _np_sturm_counts(d, e2, shifts)


def band_counts(band, shifts, backend: str | None = None):
    band = np.ascontiguousarray(band, dtype=float)
    shifts = np.atleast_1d(np.asarray(shifts, dtype=float))
    if (backend or BACKEND) == "numba":
        return _nb_band_counts(band, shifts)
    return _np_band_counts(band, shifts)


def bisect_tridiagonal(d, e, lo, hi, indices, tol, backend: str | None = None):
    d = np.ascontiguousarray(d, dtype=float)
    e2 = np.ascontiguousarray(np.asarray(e, dtype=float) ** 2)
    indices = np.ascontiguousarray(indices, dtype=np.int64)
    if (backend or BACKEND) == "numba":
        return _nb_bisect_tridiag(d, e2, float(lo), float(hi), indices, float(tol))
    return _np_bisect(lambda s: _np_sturm_counts(d, e2, s), lo, hi, indices, tol)


def bisect_band(band, lo, hi, indices, tol, backend: str | None = None):
    band = np.ascontiguousarray(band, dtype=float)
    indices = np.ascontiguousarray(indices, dtype=np.int64)
    if (backend or BACKEND) == "numba":
        return _nb_bisect_band(band, float(lo), float(hi), indices, float(tol))
    return _np_bisect(lambda s: _np_band_counts(band, s), lo, hi, indices, tol)


def tridiag_solve(d, e, shift, rhs):
    """Solve (T - shift) x = rhs; used by inverse iteration, not a hot loop."""
    return _np_tridiag_solve(np.asarray(d, float), np.asarray(e, float), float(shift), np.asarray(rhs, float))
