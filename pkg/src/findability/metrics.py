"""
Collection-level summaries of per-document scores: mean, Gini
coefficient, Lorenz curve, and Pearson / Kendall tau-b correlation
between two score vectors.
"""
import csv
from dataclasses import dataclass, field
import io
import logging
import math
import pathlib
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.stats

from findability.conf import settings
from findability.exceptions import DegenerateInputError

logger = logging.getLogger("user_info." + __name__)


@dataclass
class AccessReport:
    gini: float
    mean_score: float
    lorenz_points: List[Tuple[float, float]]
    n_docs: int
    metadata: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "gini": self.gini,
            "mean": self.mean_score,
            "n_docs": self.n_docs,
            "metadata": self.metadata,
        }


@dataclass
class CorrelationReport:
    pearson_r: float
    pearson_p: float
    kendall_tau: float
    kendall_p: float
    n: int

    def as_dict(self) -> dict:
        return {
            "pearson_r": self.pearson_r,
            "pearson_p": self.pearson_p,
            "kendall_tau": self.kendall_tau,
            "kendall_p": self.kendall_p,
            "n": self.n,
        }


def _scores(scores: Sequence[float]) -> np.ndarray:
    xs = np.asarray(scores, dtype=np.float64)
    if xs.ndim != 1 or not len(xs):
        raise DegenerateInputError("empty score vector")
    if np.isnan(xs).any():
        raise DegenerateInputError("score vector contains NaN")
    if (xs < 0).any():
        raise DegenerateInputError("negative score")
    return xs


def gini(scores: Sequence[float]) -> float:
    """
    G = sum_i (2i - N - 1) x_i / (N sum_j x_j) over the ascending scores.
    Bounded by (N - 1) / N.
    """
    xs = np.sort(_scores(scores), kind="stable")
    total = xs.sum()
    if total <= 0:
        raise DegenerateInputError("undefined Gini (zero total)")
    n = len(xs)
    ranks = np.arange(1, n + 1, dtype=np.float64)
    ranks *= 2
    ranks -= n + 1
    return max(float(np.sum(xs * ranks) / (n * total)), 0.0)


def lorenz(scores: Sequence[float], max_points: Optional[int] = None) -> List[Tuple[float, float]]:
    """
    (population share, cumulative score share) from (0, 0) to (1, 1) over
    ascending scores, N + 1 points. Above ``max_points`` the curve is
    subsampled uniformly, end points kept.
    """
    xs = np.sort(_scores(scores), kind="stable")
    total = xs.sum()
    if total <= 0:
        raise DegenerateInputError("undefined Lorenz curve (zero total)")
    n = len(xs)
    share = np.concatenate(([0.0], np.cumsum(xs) / total))
    share[-1] = 1.0
    population = np.arange(n + 1, dtype=np.float64) / n

    max_points = max_points or settings.LORENZ_MAX_POINTS
    if n > max_points:
        keep = np.unique(np.rint(np.linspace(0, n, max_points)).astype(np.int64))
        population, share = population[keep], share[keep]
    return [(float(p), float(s)) for p, s in zip(population, share)]


def lorenz_area(points: Sequence[Tuple[float, float]]) -> float:
    """Trapezoidal area under a Lorenz curve."""
    xs, ys = np.asarray(points, dtype=np.float64).T
    return float(np.sum(np.diff(xs) * (ys[1:] + ys[:-1]) / 2))


def mean_score(scores: Sequence[float]) -> float:
    xs = np.asarray(scores, dtype=np.float64)
    if not len(xs):
        raise DegenerateInputError("empty score vector")
    return math.fsum(xs) / len(xs)


def _paired(x: Sequence[float], y: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DegenerateInputError("degenerate input: vectors must have equal length")
    if len(x) < 2:
        raise DegenerateInputError("degenerate input: at least two pairs are required")
    return x, y


def _fisher_p(r: float, n: int) -> float:
    if n <= 3:
        return 1.0
    if abs(r) >= 1.0:
        return 0.0
    z = math.atanh(r) * math.sqrt(n - 3)
    return min(1.0, float(2 * scipy.stats.norm.sf(abs(z))))


def pearson(x: Sequence[float], y: Sequence[float]) -> Tuple[float, float]:
    """Pearson's r with a two-sided p-value from the Fisher z approximation."""
    x, y = _paired(x, y)
    xc = x - x.mean()
    yc = y - y.mean()
    sxx, syy = float(np.dot(xc, xc)), float(np.dot(yc, yc))
    if sxx == 0 or syy == 0:
        raise DegenerateInputError("degenerate input: zero variance")
    r = float(np.dot(xc, yc)) / math.sqrt(sxx * syy)
    r = min(1.0, max(-1.0, r))
    return r, _fisher_p(r, len(x))


def kendall_tau(x: Sequence[float], y: Sequence[float]) -> Tuple[float, float]:
    """Kendall's tau-b and its two-sided p-value under the tie-corrected normal approximation."""
    x, y = _paired(x, y)
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise DegenerateInputError("degenerate input: all values tied")
    if len(x) < 3:
        # one pair, untied in both vectors
        return float(np.sign(x[1] - x[0]) * np.sign(y[1] - y[0])), 1.0
    tau, p = scipy.stats.kendalltau(x, y, variant="b", method="asymptotic")
    tau = min(1.0, max(-1.0, float(tau)))
    p = 1.0 if np.isnan(p) else min(1.0, max(0.0, float(p)))
    return tau, p


def correlation(x: Sequence[float], y: Sequence[float]) -> CorrelationReport:
    r, r_p = pearson(x, y)
    tau, tau_p = kendall_tau(x, y)
    n = len(x)
    if n < settings.SMALL_SAMPLE:
        logger.warning("p-values are large-sample approximations, n=%s is small", n)
    return CorrelationReport(r, r_p, tau, tau_p, n)


def build_report(scores: Sequence[float], metadata: Optional[dict] = None) -> AccessReport:
    return AccessReport(
        gini=gini(scores),
        mean_score=mean_score(scores),
        lorenz_points=lorenz(scores),
        n_docs=len(scores),
        metadata=metadata or {},
    )


def lorenz_csv_bytes(points: Sequence[Tuple[float, float]]) -> bytes:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(("pop_share", "score_share"))
    for population, share in points:
        writer.writerow((repr(float(population)), repr(float(share))))
    return buffer.getvalue().encode("utf-8")


def write_lorenz_csv(points: Sequence[Tuple[float, float]], path) -> pathlib.Path:
    path = pathlib.Path(path)
    path.write_bytes(lorenz_csv_bytes(points))
    return path
