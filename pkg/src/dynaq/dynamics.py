"""Query-fraction dynamics.

The active learner splits every query batch into an anomalous share, an
uncertain share and a random share. After each labeled batch the shares move
toward whichever query type proved more informative, inside hard bounds that
keep every type represented, while the random share decays exponentially with
the size of the labeled pool. All functions here are pure.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UndefinedMetricError

_EPS_WIDTH = 1e-15


@dataclass(frozen=True)
class DynamicsParams:
    """Hyperparameters steering how query fractions evolve.

    alpha_a0: initial share of the non-random query mass given to anomalies.
    beta: weight of missed attacks (false negatives) in the info metric.
    gamma: curvature of the update factor (1 = linear response).
    tau: decay speed of the random fraction in labeled-pool size.
    """

    alpha_a0: float = 0.5
    beta: float = 1.0
    gamma: float = 1.0
    tau: float = 1.0 / 800.0

    def __post_init__(self):
        if not (0.0 <= self.alpha_a0 <= 1.0):
            raise ValueError(f"alpha_a0 must lie in [0,1], got {self.alpha_a0}")
        for name in ("beta", "gamma", "tau"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")


@dataclass(frozen=True)
class FractionBounds:
    """Bounds induced by the batch size, decay speed and starting pool size."""

    query_size: int
    tau: float
    labeled0: int

    def __post_init__(self):
        if self.query_size < 2:
            raise ValueError("query size must be at least 2")

    @property
    def alpha_min_az(self) -> float:
        # guarantees at least one anomalous and one uncertain query per batch
        return 1.0 / self.query_size

    @property
    def alpha_r_max(self) -> float:
        return 1.0 - 2.0 / self.query_size

    def labeled_at(self, t: int) -> int:
        return self.labeled0 + self.query_size * t

    def alpha_r(self, t: int) -> float:
        """Random-share schedule: exponential decay in the labeled-pool size."""
        return self.alpha_r_max * 2.0 ** (-self.tau * self.labeled_at(t))

    def alpha_max_az(self, t: int) -> float:
        return 1.0 - self.alpha_r(t) - self.alpha_min_az


@dataclass(frozen=True)
class QueryFractions:
    """Shares of a query batch by type at iteration ``t``. Sums to 1."""

    anomalous: float
    uncertain: float
    random: float
    t: int = 0

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.anomalous, self.uncertain, self.random)

    def total(self) -> float:
        return self.anomalous + self.uncertain + self.random

    def within_bounds(self, bounds: FractionBounds, tol: float = 1e-9) -> bool:
        lo = bounds.alpha_min_az - tol
        hi = bounds.alpha_max_az(self.t) + tol
        return (
            lo <= self.anomalous <= hi
            and lo <= self.uncertain <= hi
            and abs(self.total() - 1.0) <= tol
        )


@dataclass(frozen=True)
class UpdateTrace:
    """Record of one fraction update, emitted into the run log."""

    delta_a: float
    delta_z: float
    diff: float
    factor: float
    fractions_next: QueryFractions


def info_metric(prob, pred, truth, beta: float) -> float:
    """Informativeness of a labeled query subset, in [0, 1].

    Sums the prediction error |y_hat - y| over misclassified queries, with
    false negatives weighted by ``beta``, and normalizes by the subset size
    adjusted for the positive count so the result cannot exceed 1.

    Args:
        prob: transformed malicious probabilities y_hat of the subset.
        pred: hard classes assigned by the classifier.
        truth: oracle labels.
        beta: false-negative weight, > 0.

    Raises:
        UndefinedMetricError: when the subset is empty.
    """
    prob = np.asarray(prob, dtype=np.float64)
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if prob.size == 0:
        raise UndefinedMetricError("info metric needs a nonempty query subset")
    if beta <= 0.0:
        raise ValueError(f"beta must be strictly positive, got {beta}")
    fn = (pred == 0) & (truth == 1)
    fp = (pred == 1) & (truth == 0)
    weights = beta * fn + 1.0 * fp
    numer = float(np.sum(np.abs(prob - truth) * weights))
    denom = prob.size + (beta - 1.0) * int(np.count_nonzero(truth == 1))
    return numer / denom


def update_factor(delta_a: float, delta_z: float, gamma: float) -> float:
    """Signed, gamma-warped difference of the two info metrics, in [-1, 1]."""
    if gamma <= 0.0:
        raise ValueError(f"gamma must be strictly positive, got {gamma}")
    diff = delta_a - delta_z
    if diff == 0.0:
        return 0.0
    return math.copysign(abs(diff) ** (1.0 / gamma), diff)


def initial_fractions(params: DynamicsParams, bounds: FractionBounds) -> QueryFractions:
    """Starting fractions at t=0.

    The random share comes from the schedule; the remaining mass is split
    between anomalous and uncertain by the relative share ``alpha_a0`` and
    clipped into the admissible interval. Because the interval endpoints obey
    min + max = mass, clipping one share keeps its complement in bounds too.
    """
    rand = bounds.alpha_r(0)
    mass = 1.0 - rand
    lo = bounds.alpha_min_az
    hi = bounds.alpha_max_az(0)
    anom = min(max(params.alpha_a0 * mass, lo), hi)
    unc = mass - anom
    return QueryFractions(anomalous=anom, uncertain=unc, random=rand, t=0)


def update_fractions(
    current: QueryFractions, factor: float, bounds: FractionBounds
) -> QueryFractions:
    """Advance the fractions one iteration given the update factor.

    A positive factor moves the anomalous share toward the upper bound and
    the uncertain share toward the lower bound, proportionally to the room
    each share has left; a negative factor does the reverse. Both shares are
    then rescaled linearly onto the (slightly wider) interval of the next
    iteration, and the random share is set by the schedule.
    """
    if not -1.0 <= factor <= 1.0:
        raise ValueError(f"update factor must lie in [-1,1], got {factor}")
    t = current.t
    lo = bounds.alpha_min_az
    hi_now = bounds.alpha_max_az(t)
    hi_next = bounds.alpha_max_az(t + 1)

    up = max(0.0, factor)
    down = min(0.0, factor)
    anom = current.anomalous + (hi_now - current.anomalous) * up + (current.anomalous - lo) * down
    unc = current.uncertain + (hi_now - current.uncertain) * (-down) + (current.uncertain - lo) * (-up)

    width = hi_now - lo
    if width > _EPS_WIDTH:
        scale = (hi_next - lo) / width
        anom = scale * (anom - lo) + lo
        unc = scale * (unc - lo) + lo
    # guard against float fuzz at the interval edges
    anom = min(max(anom, lo), hi_next)
    unc = min(max(unc, lo), hi_next)
    return QueryFractions(
        anomalous=anom, uncertain=unc, random=bounds.alpha_r(t + 1), t=t + 1
    )


def rescale_only(current: QueryFractions, bounds: FractionBounds) -> QueryFractions:
    """The zero-factor update: schedule moves, shares keep their relative spot."""
    return update_fractions(current, 0.0, bounds)
