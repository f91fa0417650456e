"""Closed-form spectral bands, tail-regime classification and per-mode
aggregation.

The essential and absolutely continuous spectra of the form Laplacian are
half-lines [x, inf), empty, or (in one case) {0} U [x, inf). Per sphere mode
the reduced operator's essential spectrum is read off from the limit of its
potential at infinity; the full answer is the union over modes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .eigensolver import SpectrumEstimate
from .sphere_modes import lambda_bar

MODE_TOLERANCE = 0.05


@dataclass(frozen=True)
class Band:
    """empty, [threshold, inf), or {0} U [threshold, inf) when ``with_zero``."""

    threshold: float | None
    with_zero: bool = False

    def __post_init__(self):
        if self.threshold is not None and self.threshold < 0:
            raise ValueError("band thresholds are non-negative")
        if self.with_zero and self.threshold is None:
            raise ValueError("an isolated zero needs a band next to it")

    @property
    def empty(self) -> bool:
        return self.threshold is None

    @property
    def bottom(self) -> float | None:
        if self.empty:
            return None
        return 0.0 if self.with_zero else self.threshold

    def contains(self, x: float) -> bool:
        if self.empty:
            return False
        return x >= self.threshold or (self.with_zero and x == 0.0)

    def __str__(self) -> str:
        if self.empty:
            return "empty"
        half = f"[{_fmt(self.threshold)}, inf)"
        return "{0} U " + half if self.with_zero else half


EMPTY = Band(None)


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _union(bands: Sequence[Band]) -> Band:
    """Union of half-lines: the smallest threshold wins."""
    full = [b for b in bands if not b.empty]
    if not full:
        return EMPTY
    return Band(min(b.threshold for b in full))


@dataclass(frozen=True)
class BandPrediction:
    N: int
    p: int
    a: float
    b: float
    sigma_ess: Band
    sigma_ac: Band
    sc_status: str  # "empty" | "reduces_to_M3_open"
    provenance: str

    def as_dict(self) -> dict:
        return {
            "params": {"N": self.N, "p": self.p, "a": self.a, "b": self.b},
            "predicted": {"ess": str(self.sigma_ess), "ac": str(self.sigma_ac), "sc": self.sc_status},
            "tag": self.provenance,
        }


def _validate(N: int, p: int, a: float) -> None:
    if int(N) != N or N < 2:
        raise ValueError(f"N must be an integer >= 2, got {N!r}")
    if int(p) != p or not 0 <= p <= N:
        raise ValueError(f"p must be an integer in [0, N], got {p!r}")
    if a > -1:
        raise ValueError(f"a must be <= -1, got {a!r}")


def regime_tag(a: float, b: float) -> str:
    left = "a=-1" if a == -1 else "a<-1"
    right = "b<0" if b < 0 else ("b=0" if b == 0 else "b>0")
    return f"{left}/{right}"


def predict(N: int, p: int, a: float, b: float) -> BandPrediction:
    """Essential, absolutely continuous and singular continuous spectrum of
    the p-form Laplacian."""
    _validate(N, p, a)
    tag = regime_tag(a, b)
    t1 = ((N - 2 * p - 1) / 2.0) ** 2 * b * b
    t2 = ((N - 2 * p + 1) / 2.0) ** 2 * b * b
    edge = p in (0, 1, N - 1, N)
    if b < 0 and a == -1:
        ac = Band(min(t1, t2))
        if 2 * p == N:
            ess = Band(b * b / 4.0, with_zero=True)
            tag += "/p=N/2"
        else:
            ess = ac
    elif b == 0:
        ess = ac = Band(lambda_bar(N, p))
    elif b > 0:
        if not edge:
            ess = ac = EMPTY
        elif a == -1:
            ess = ac = Band(((N - 1) / 2.0) ** 2 * b * b)
        else:
            ess = ac = Band(0.0)
    else:
        ess = ac = Band(0.0)
    # no coupled (type III) part exists in degrees 0 and N
    sc = "empty" if p in (0, N) else "reduces_to_M3_open"
    return BandPrediction(N, p, float(a), float(b), ess, ac, sc, tag)


def predict_mode(kind: str, N: int, p: int, a: float, b: float, lam: float) -> Band:
    """Essential spectrum of one reduced operator (type I in degree p with
    sphere eigenvalue lam; type II and III use lam = lambda^{p-1})."""
    kind = str(getattr(kind, "value", kind))
    if lam < 0:
        raise ValueError("sphere eigenvalues are non-negative")
    if kind == "II":
        return predict_mode("I", N, N - p, a, b, lam)
    if kind == "III":
        return _union([predict_mode("I", N, p, a, b, lam), predict_mode("II", N, p, a, b, lam)])
    if kind != "I":
        raise ValueError(f"unknown operator kind {kind!r}")
    _validate(N, p, a)
    u2 = ((N - 2 * p - 1) / 2.0) ** 2 * b * b
    if b == 0:
        return Band(float(lam))
    if b > 0:
        if lam > 0:
            return EMPTY
        return Band(u2) if a == -1 else Band(0.0)
    return Band(u2) if a == -1 else Band(0.0)


@dataclass(frozen=True)
class RegimeClass:
    mechanism: str  # "AgmonKatoKuroda" | "Lavine" | "EmptyEssential"
    decay_exponent: float | None  # tail ~ r^-exponent; inf for exponential or compact tails


def classify_regime(N: int, p: int, a: float, b: float, lam: float, kind: str = "I") -> RegimeClass:
    """Mechanism behind the continuous spectrum of one reduced operator,
    judged from how its potential approaches its limit at infinity."""
    kind = str(getattr(kind, "value", kind))
    _validate(N, p, a)
    if b > 0 and lam > 0:
        return RegimeClass("EmptyEssential", None)
    if a == -1:
        # lam e^{2br} and the e^{br} coupling decay exponentially; b >= 0 tails are constant
        return RegimeClass("AgmonKatoKuroda", math.inf)
    A = abs(a + 1.0)
    m = b / A
    if kind == "II":
        K = ((N - 2 * p + 1) / 2.0) ** 2 * m * m - (N - 2 * p + 1) / 2.0 * m
    else:
        K = ((N - 2 * p - 1) / 2.0) ** 2 * m * m + (N - 2 * p - 1) / 2.0 * m
    exps = [2.0] if K != 0 or kind == "III" else []
    if b < 0 and lam > 0:
        exps.append(2.0 * abs(b) / A)
    if not exps:
        return RegimeClass("AgmonKatoKuroda", math.inf)
    expo = min(exps)
    return RegimeClass("Lavine" if expo <= 1.0 else "AgmonKatoKuroda", expo)


@dataclass(frozen=True)
class ModeComparison:
    label: str
    numeric_bottom: float | None
    uncertainty: float
    verdict: str
    predicted: Band
    deviation: float | None
    ok: bool


@dataclass(frozen=True)
class AggregateReport:
    modes: tuple[ModeComparison, ...]
    numeric_bottom: float | None
    predicted: Band
    deviation: float | None
    ok: bool


def deviation(numeric: float, predicted: float) -> float:
    return abs(numeric - predicted) / max(1.0, abs(predicted))


def _compare(label: str, est: SpectrumEstimate, pred: Band, tol: float) -> ModeComparison:
    expect_empty = pred.empty or pred.bottom >= est.cutoff
    if est.verdict == "band":
        if expect_empty:
            return ModeComparison(label, est.bottom, est.uncertainty, est.verdict, pred, None, False)
        dev = deviation(est.bottom, pred.bottom)
        return ModeComparison(label, est.bottom, est.uncertainty, est.verdict, pred, dev, dev <= tol)
    ok = est.verdict == "ess empty" and expect_empty
    return ModeComparison(label, None, est.uncertainty, est.verdict, pred, None, ok)


def aggregate_modes(estimates: Sequence[SpectrumEstimate], predictions: Sequence[Band],
                    labels: Sequence[str] | None = None, tol: float = MODE_TOLERANCE) -> AggregateReport:
    """Compare every mode and take the union over modes: the overall band
    bottom is the minimum of the per-mode bottoms."""
    if not estimates:
        raise ValueError("no modes to aggregate")
    if len(estimates) != len(predictions):
        raise ValueError("need one prediction per estimate")
    labels = list(labels) if labels is not None else [str(i) for i in range(len(estimates))]
    modes = tuple(_compare(lab, e, p, tol) for lab, e, p in zip(labels, estimates, predictions))
    bottoms = [m.numeric_bottom for m in modes if m.numeric_bottom is not None]
    num = min(bottoms) if bottoms else None
    pred = _union(list(predictions))
    dev = None
    ok = all(m.ok for m in modes)
    if num is not None and not pred.empty:
        dev = deviation(num, pred.bottom)
        ok = ok and dev <= tol
    elif (num is None) != pred.empty:
        # one side sees a band below the cutoff, the other does not
        cutoff = min(e.cutoff for e in estimates)
        ok = ok and not (num is not None or pred.bottom < cutoff)
    return AggregateReport(modes, num, pred, dev, ok)
