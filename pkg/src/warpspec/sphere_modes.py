"""Eigenvalues of the Hodge Laplacian on the round sphere S^{N-1}.

Coclosed p-forms split into harmonic forms (only for p = 0 and p = N-1) and
coexact forms, whose eigenvalues are (k + p)(k + N - 2 - p), k >= 1.
Closed forms are obtained from coclosed ones by the Hodge star, and the full
spectrum of Delta^p is the union of the coclosed p tower and the nonzero
part of the coclosed (p-1) tower (exact p-forms are d of coexact (p-1)-forms).
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True, order=True)
class SphereMode:
    lam: float
    p: int
    k: int


def _check(N: int, p: int) -> None:
    if N < 2:
        raise ValueError(f"N must be >= 2, got {N}")
    if not 0 <= p <= N - 1:
        raise ValueError(f"form degree p={p} outside [0, {N - 1}] for S^{N - 1}")


def coclosed_eigenvalues(N: int, p: int, k_max: int) -> list[SphereMode]:
    """Modes with index k <= k_max of the coclosed p-form tower, sorted.

    k = 0 is the harmonic mode (constants for p = 0, the volume form for
    p = N-1); coexact modes carry k >= 1. For p = N-1 the volume form is the
    only coclosed mode.
    """
    _check(N, p)
    if k_max < 0:
        return []
    modes = []
    if p in (0, N - 1):
        modes.append(SphereMode(0.0, p, 0))
    if p <= N - 2:
        modes += [SphereMode(float((k + p) * (k + N - 2 - p)), p, k) for k in range(1, k_max + 1)]
    return modes


def closed_eigenvalues(N: int, q: int, k_max: int) -> list[SphereMode]:
    """Modes of closed q-forms, via the Hodge star from coclosed (N-1-q)-forms."""
    _check(N, q)
    return [SphereMode(m.lam, q, m.k) for m in coclosed_eigenvalues(N, N - 1 - q, k_max)]


def lowest_hodge_eigenvalue(N: int, q: int) -> float | None:
    """Smallest eigenvalue of the full Hodge Laplacian on q-forms of S^{N-1};
    None when q is not a valid form degree on the sphere."""
    if not 0 <= q <= N - 1:
        return None
    candidates = [m.lam for m in coclosed_eigenvalues(N, q, 1)]
    if q >= 1:
        candidates += [m.lam for m in coclosed_eigenvalues(N, q - 1, 1) if m.lam > 0]
    return min(candidates)


def lambda_bar(N: int, p: int) -> float:
    """min of the lowest Hodge eigenvalues in degrees p and p-1 on S^{N-1}."""
    vals = [v for v in (lowest_hodge_eigenvalue(N, p), lowest_hodge_eigenvalue(N, p - 1)) if v is not None]
    return min(vals)
