"""Predicted asymptotics and their comparison with exact counts."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import __version__
from .densities import DensityEstimate, euler_product, omega_infty, sum_cx
from .geometry import alpha_constant, cox_data, invariants
from .heights import height_exponent

DEFAULT_M = {"X": 400, "Xprime": 200}


class MissingDensity(RuntimeError):
    """A density input needed for the leading constant is unavailable."""


@dataclass(frozen=True)
class Prediction:
    """c H^a (log H)^(b-1) with H = B^height_exponent, B the monomial-max bound."""

    family: str
    n: int
    a: Fraction
    b: int
    c: float
    c_error: float
    height_exponent: Fraction
    source: str = ""

    @property
    def formula(self) -> str:
        log = "" if self.b == 1 else f" (log H)^{self.b - 1}"
        return f"c H^{self.a}{log}, H = B^{self.height_exponent}"

    def shape(self, B: float) -> float:
        logH = float(self.height_exponent) * math.log(B)
        return math.exp(float(self.a) * logH) * logH ** (self.b - 1)

    def __call__(self, B: float) -> float:
        return self.c * self.shape(B)

    def with_c(self, c: float, c_error: float = 0.0) -> Prediction:
        return Prediction(self.family, self.n, self.a, self.b, c, c_error, self.height_exponent, self.source)

    def to_dict(self) -> dict:
        return {"family": self.family, "n": self.n, "a": str(self.a), "b": self.b, "c": repr(self.c),
                "c_error": repr(self.c_error), "formula": self.formula, "source": self.source}


def leading_constant(family: str, n: int, *, M: int | None = None, omega: DensityEstimate | None = None,
                     seed: int = 0, target_rel: float = 0.01, samples: int | None = None) -> tuple[float, float, str]:
    """The assembled constant with an error bar and a description of its inputs."""
    if family == "X" and n == 2:
        data = cox_data("X", 2, rank=2)
        alpha = alpha_constant(data.effective_cone(), data.anticanonical.coords)
        if omega is None:
            omega = omega_infty("X", 2, seed=seed, target_rel=target_rel, samples=samples)
        ep = float(euler_product("X", 2))
        scale = float(alpha) * ep
        return scale * omega.value, scale * omega.std_error, f"alpha={alpha} omega_inf[{omega.method}]"
    if family in ("X", "Xprime"):
        M = DEFAULT_M[family] if M is None else M
        fs = sum_cx(family, n, M)
        if not math.isfinite(fs.tail):
            raise MissingDensity(f"sum of c_x for {family} n={n} has no finite tail estimate")
        return fs.partial + fs.tail, fs.tail, f"sum_cx M={M} tail={fs.tail_kind}"
    raise ValueError(f"unknown family {family!r}")


def prediction(family: str, n: int, *, c: float | None = None, c_error: float = 0.0, **kwargs) -> Prediction:
    """Prediction with exponents from the cone computations and c assembled from densities."""
    inv = invariants(family, n)
    if c is None:
        c, c_error, source = leading_constant(family, n, **kwargs)
    else:
        source = "supplied"
    return Prediction(family, n, inv.a, inv.b, float(c), float(c_error), height_exponent(family, n), source)


def predicted_count(family: str, n: int, B: float, pred: Prediction | None = None, **kwargs) -> float:
    pred = prediction(family, n, **kwargs) if pred is None else pred
    return pred(B)


@dataclass
class ComparisonReport:
    family: str
    n: int
    prediction: dict
    entries: list[dict] = field(default_factory=list)
    fitted_c: float = math.nan
    trend: str = ""
    monotone: bool = False

    @property
    def ratios(self) -> list[float]:
        return [e["ratio"] for e in self.entries]

    def to_json(self) -> str:
        return json.dumps({"family": self.family, "n": self.n, "version": __version__,
                           "prediction": self.prediction,
                           "entries": [{**e, "B": str(e["B"]), "N": str(e["N"]),
                                        "predicted": repr(e["predicted"]), "ratio": repr(e["ratio"])}
                                       for e in self.entries],
                           "fitted_c": repr(self.fitted_c), "trend": self.trend, "monotone": self.monotone},
                          sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["B", "N", "predicted", "ratio"])
        for e in self.entries:
            wr.writerow([e["B"], e["N"], repr(e["predicted"]), repr(e["ratio"])])
        return buf.getvalue()


def _trend(ratios: Sequence[float], rel: float = 0.01) -> tuple[str, bool]:
    dev = [abs(r - 1) for r in ratios]
    monotone = all(b <= a + 1e-12 for a, b in zip(dev, dev[1:]))
    if len(dev) < 2:
        return "flat", monotone
    if dev[-1] < dev[0] * (1 - rel) - 1e-12:
        return "approaching", monotone
    if dev[-1] > dev[0] * (1 + rel) + 1e-12:
        return "diverging", monotone
    return "flat", monotone


def fit_and_compare(counts: dict[int, int] | Sequence[tuple[int, int]], pred: Prediction) -> ComparisonReport:
    """Per-bound ratios N/predicted and the least-squares c with a, b held fixed.

    ``counts`` maps monomial bound B to a rational point count (a CountSeries
    supplies this through ``series.counts()``).
    """
    items = sorted(dict(counts).items())
    if not items:
        raise ValueError("empty series")
    entries, num, den = [], 0.0, 0.0
    for B, N in items:
        f = pred.shape(B)
        predicted = pred.c * f
        entries.append({"B": int(B), "N": N, "predicted": predicted, "ratio": N / predicted})
        num += N * f
        den += f * f
    trend, monotone = _trend([e["ratio"] for e in entries])
    return ComparisonReport(pred.family, pred.n, pred.to_dict(), entries, num / den, trend, monotone)
