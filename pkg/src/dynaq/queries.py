"""Query batch construction.

Builds each iteration's batch of Q unlabeled indices from three sources:
per-class anomaly rankings, per-class uncertainty rankings, and a uniform
random draw. Fraction-to-count rounding, class shortfalls and anomaly/
uncertainty overlap are all handled here so the loop upstream only sees a
finished batch.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import QueryFractions
from .errors import PoolExhaustedError

# largest-remainder tie-break order across types: anomalous, uncertain,
# random; odd type totals put the extra unit on class 0
_TYPES = ("anom", "unc", "rand")


def certainty_score(y_hat):
    """How sure the classifier is: 2|y_hat - 1/2|, 0 = maximally uncertain."""
    y = np.asarray(y_hat, dtype=np.float64)
    out = 2.0 * np.abs(y - 0.5)
    if np.isscalar(y_hat) or np.ndim(y_hat) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class QueryCounts:
    anom0: int
    anom1: int
    unc0: int
    unc1: int
    rand: int

    @property
    def anom_total(self) -> int:
        return self.anom0 + self.anom1

    @property
    def unc_total(self) -> int:
        return self.unc0 + self.unc1

    def total(self) -> int:
        return self.anom_total + self.unc_total + self.rand


def allocate_counts(
    fractions: QueryFractions, Q: int, enforce_min_az: bool = True
) -> QueryCounts:
    """Round the fraction targets to integer per-component counts summing to Q.

    Two stages: largest-remainder rounding of the three type totals
    (anomalous, uncertain, random; ties broken in that order), then an even
    per-class split of each type with the odd unit on class 0. When
    ``enforce_min_az`` is set, a final correction guarantees at least one
    anomalous and one uncertain member by donating a unit from the
    largest other type (random preferred on ties).
    """
    if Q < 1:
        raise ValueError("Q must be positive")
    targets = np.array(
        [fractions.anomalous * Q, fractions.uncertain * Q, fractions.random * Q]
    )
    totals = np.floor(targets).astype(np.int64)
    leftover = Q - int(totals.sum())
    if leftover > 0:
        remainders = targets - totals
        # sort by remainder descending, type order breaks ties
        order = np.lexsort((np.arange(3), -remainders))
        totals[order[:leftover]] += 1

    if enforce_min_az:
        totals = _ensure_min_types(totals)
    a, z, r = (int(c) for c in totals)
    return QueryCounts(
        anom0=a - a // 2, anom1=a // 2, unc0=z - z // 2, unc1=z // 2, rand=r
    )


def _ensure_min_types(totals: np.ndarray) -> np.ndarray:
    # needs Q >= 2 to satisfy both minimums; the loop upstream enforces that
    totals = totals.copy()
    for starved in (0, 1):
        if totals[starved] > 0:
            continue
        donors = [i for i in range(3) if i != starved]
        donors.sort(key=lambda i: (-totals[i], i != 2))
        donor = donors[0]
        if totals[donor] == 0:
            continue
        totals[donor] -= 1
        totals[starved] += 1
    return totals


@dataclass
class QueryBatch:
    """A finished batch: distinct indices plus per-item attribution flags."""

    indices: np.ndarray
    y_hat: np.ndarray
    c_hat: np.ndarray
    anomalous: np.ndarray  # bool flags, aligned with indices
    uncertain: np.ndarray
    random: np.ndarray
    counts: QueryCounts | None = field(default=None, repr=False)

    @property
    def q_anom(self) -> int:
        return int(self.anomalous.sum())

    @property
    def q_unc(self) -> int:
        return int(self.uncertain.sum())

    @property
    def q_rand(self) -> int:
        return int(self.random.sum())

    def __len__(self) -> int:
        return int(self.indices.size)


def _ranked(candidates: np.ndarray, key: np.ndarray) -> np.ndarray:
    """Order candidates by ascending key, ties by ascending index."""
    order = np.lexsort((candidates, key))
    return candidates[order]


def _take_per_class(
    ids_by_class: tuple[np.ndarray, np.ndarray],
    keys_by_class: tuple[np.ndarray, np.ndarray],
    want: tuple[int, int],
) -> np.ndarray:
    """Top-k per class (keys ascending-is-better), shortfall refilled from the
    other class's ranking past that class's own picks. At most one class can
    fall short, so refills never collide."""
    r0 = _ranked(ids_by_class[0], keys_by_class[0])
    r1 = _ranked(ids_by_class[1], keys_by_class[1])
    t0 = r0[: want[0]]
    t1 = r1[: want[1]]
    short0 = want[0] - t0.size
    short1 = want[1] - t1.size
    if short0 > 0:
        t0 = np.concatenate([t0, r1[want[1] : want[1] + short0]])
    if short1 > 0:
        t1 = np.concatenate([t1, r0[want[0] : want[0] + short1]])
    return np.concatenate([t0, t1])


def _positions(unlabeled: np.ndarray, picks: np.ndarray) -> np.ndarray:
    """Positions of ``picks`` inside the (unique-valued) unlabeled array."""
    order = np.argsort(unlabeled, kind="stable")
    pos = np.searchsorted(unlabeled[order], picks)
    return order[pos]


def build_query_batch(
    unlabeled: np.ndarray,
    y_hat: np.ndarray,
    c_hat: np.ndarray,
    anom_scores: np.ndarray,
    cert_scores: np.ndarray,
    fractions: QueryFractions,
    Q: int,
    rng: np.random.Generator,
    enforce_min_az: bool = True,
) -> QueryBatch:
    """Assemble the batch for one iteration.

    Anomalous members are the per-class highest anomaly scores, uncertain
    members the per-class lowest certainty scores; a class with too few
    candidates borrows from the other class's ranking. Items picked by both
    routes stay in once physically but count toward both types, and the
    freed slots are refilled from the uniform random draw so the batch always
    holds exactly Q distinct indices.

    Raises:
        PoolExhaustedError: fewer than Q unlabeled indices remain.
    """
    unlabeled = np.asarray(unlabeled)
    n = unlabeled.size
    if n < Q:
        raise PoolExhaustedError(f"unlabeled pool has {n} rows, batch needs {Q}")
    counts = allocate_counts(fractions, Q, enforce_min_az=enforce_min_az)

    c_hat = np.asarray(c_hat)
    anom_scores = np.asarray(anom_scores, dtype=np.float64)
    cert_scores = np.asarray(cert_scores, dtype=np.float64)
    is0 = c_hat == 0
    by_class = (unlabeled[is0], unlabeled[~is0])

    anom_picks = _take_per_class(
        by_class,
        (-anom_scores[is0], -anom_scores[~is0]),  # most anomalous first
        (counts.anom0, counts.anom1),
    )
    unc_picks = _take_per_class(
        by_class,
        (cert_scores[is0], cert_scores[~is0]),  # least certain first
        (counts.unc0, counts.unc1),
    )

    union = np.union1d(anom_picks, unc_picks)
    overlap = anom_picks.size + unc_picks.size - union.size

    n_random = counts.rand + overlap
    remaining = unlabeled[~np.isin(unlabeled, union)] if union.size else unlabeled
    if n_random > 0:
        rand_picks = rng.choice(remaining, size=n_random, replace=False)
    else:
        rand_picks = np.empty(0, dtype=unlabeled.dtype)

    final = np.concatenate([union, rand_picks]).astype(np.int64)
    anomalous = np.isin(final, anom_picks)
    uncertain = np.isin(final, unc_picks)
    random_flag = np.zeros(final.size, dtype=bool)
    random_flag[union.size :] = True

    positions = _positions(unlabeled, final)
    return QueryBatch(
        indices=final,
        y_hat=np.asarray(y_hat, dtype=np.float64)[positions],
        c_hat=c_hat[positions],
        anomalous=anomalous,
        uncertain=uncertain,
        random=random_flag,
        counts=counts,
    )


STATIC_FRACTIONS = {
    "anom_only": (1.0, 0.0, 0.0),
    "uncert_only": (0.0, 1.0, 0.0),
    "basic_5050": (0.5, 0.5, 0.0),
}


def static_query(
    kind: str,
    unlabeled: np.ndarray,
    Q: int,
    rng: np.random.Generator,
    y_hat: np.ndarray | None = None,
    c_hat: np.ndarray | None = None,
    anom_scores: np.ndarray | None = None,
    cert_scores: np.ndarray | None = None,
    t: int = 0,
) -> QueryBatch:
    """Batches for the baseline methods with fixed fractions.

    ``rand_only`` samples uniformly with no scores; the other kinds reuse the
    dynamic machinery with a constant fraction triple and no minimum-type
    enforcement (they are deliberately single-sided)."""
    unlabeled = np.asarray(unlabeled)
    if kind == "rand_only":
        if unlabeled.size < Q:
            raise PoolExhaustedError(
                f"unlabeled pool has {unlabeled.size} rows, batch needs {Q}"
            )
        picks = rng.choice(unlabeled, size=Q, replace=False).astype(np.int64)
        yh = np.full(Q, np.nan)
        ch = np.full(Q, -1, dtype=np.int8)
        if y_hat is not None:
            positions = _positions(unlabeled, picks)
            yh = np.asarray(y_hat, dtype=np.float64)[positions]
            ch = np.asarray(c_hat)[positions]
        return QueryBatch(
            indices=picks,
            y_hat=yh,
            c_hat=ch,
            anomalous=np.zeros(Q, dtype=bool),
            uncertain=np.zeros(Q, dtype=bool),
            random=np.ones(Q, dtype=bool),
            counts=QueryCounts(0, 0, 0, 0, Q),
        )
    if kind not in STATIC_FRACTIONS:
        raise ValueError(f"unknown static query kind: {kind}")
    a, z, r = STATIC_FRACTIONS[kind]
    fr = QueryFractions(anomalous=a, uncertain=z, random=r, t=t)
    return build_query_batch(
        unlabeled,
        y_hat,
        c_hat,
        anom_scores,
        cert_scores,
        fr,
        Q,
        rng,
        enforce_min_az=False,
    )
