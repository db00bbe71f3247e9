"""Closed-form probability that a fixed ordered tuple is a witness.

Preference and location factors are exact for the uniform (n; k) model
(the construction's school roles are read off its students' lists, and
exclusivity asks each of the other students to avoid every named school).
The category factor is either the lower bound ``p ** m`` with ``p`` the
smallest category weight, which is what the large-market bounds use, or
the exact category mass implied by the weights.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb, prod
from typing import Dict, Sequence

from ..market import CATEGORIES, UNIFORM_WEIGHTS
from ..model import Constraint, Mode, Sophistication
from .witness import MIN_LIST_LENGTH, SCHOOL_ROLES, TUPLE_SIZE, Theorem

CANONICAL_K = {Theorem.T1: 4, Theorem.T2: 2, Theorem.L1: 2, Theorem.L2: 2}
PRIORITY_PROBABILITY = {Theorem.T1: 1 / 16, Theorem.T2: 1 / 12, Theorem.L1: 1 / 2, Theorem.L2: 1 / 4}

SINCERE, SOPH = Sophistication.SINCERE, Sophistication.SOPHISTICATED
CON, UNC = Constraint.CONSTRAINED, Constraint.UNCONSTRAINED


class TupleSizeError(ValueError):
    pass


@dataclass(frozen=True)
class TupleProbability:
    theorem: Theorem
    n: int
    k: int
    category: float
    preference_factors: Dict[str, float]
    priority: float

    @property
    def preferences(self) -> float:
        """Preference/location conditions only (including exclusivity)."""
        return prod(self.preference_factors.values())

    @property
    def value(self) -> float:
        return self.category * self.preferences * self.priority

    def breakdown(self) -> Dict[str, float]:
        out = {"category": self.category}
        out.update(self.preference_factors)
        out["priority"] = self.priority
        out["total"] = self.value
        return out


def _mass(weights: Sequence[float], *preds) -> float:
    return sum(w for w, cat in zip(weights, CATEGORIES) if all(f(*cat) for f in preds))


def category_probability(
    theorem: Theorem, weights: Sequence[float], exact: bool = False, mode: Mode = Mode.NAIVE
) -> float:
    theorem = Theorem(theorem)
    m = TUPLE_SIZE[theorem]
    if not exact:
        return min(weights) ** m
    sinc = lambda s, c, d: s is SINCERE  # noqa: E731
    soph = lambda s, c, d: s is SOPH  # noqa: E731
    unc = lambda s, c, d: c is UNC  # noqa: E731
    con = lambda s, c, d: c is CON  # noqa: E731
    in_l = lambda s, c, d: d == "L"  # noqa: E731
    in_r = lambda s, c, d: d == "R"  # noqa: E731
    w = weights
    if theorem is Theorem.T1:
        return _mass(w, sinc, in_l) * _mass(w, sinc, unc) * _mass(w, soph, unc) * _mass(w, sinc, in_r) ** 2
    if theorem is Theorem.T2:
        return _mass(w, sinc, in_l) * _mass(w, soph, in_l) * _mass(w, soph, unc)
    if theorem is Theorem.L1:
        return _mass(w, unc) * _mass(w, con, in_l)
    third = _mass(w, unc) if mode is Mode.DISTRICT_STRATEGIC else _mass(w, soph, unc)
    return _mass(w, con, in_l) * _mass(w, con, in_r) * third


def _exclusive(n: int, k: int, named: int, others: int) -> float:
    """Each of ``others`` students avoids ``named`` specific schools in a uniform k-list."""
    return (comb(n - named, k) / comb(n, k)) ** others


def tuple_probability(
    theorem: Theorem,
    n: int,
    weights: Sequence[float] = UNIFORM_WEIGHTS,
    k: int | None = None,
    location_prob: float = 0.5,
    exact_category: bool = False,
    mode: Mode = Mode.NAIVE,
) -> TupleProbability:
    """Probability that students 1..m of a uniform (n; k) market form a witness.

    ``k`` defaults to the list length the construction was stated for (4
    for T1, 2 otherwise); any larger ``k`` is also exact because only
    leading entries are constrained.
    """
    theorem = Theorem(theorem)
    k = CANONICAL_K[theorem] if k is None else k
    m = TUPLE_SIZE[theorem]
    named = len(SCHOOL_ROLES[theorem])
    if n < max(m, named):
        raise TupleSizeError(f"{theorem.value} needs n >= {max(m, named)}, got {n}")
    if not MIN_LIST_LENGTH[theorem] <= k <= n:
        raise TupleSizeError(f"{theorem.value} needs {MIN_LIST_LENGTH[theorem]} <= k <= n, got k={k}")
    if len(weights) != 8 or any(w < 0 for w in weights):
        raise ValueError("weights must be 8 nonnegative numbers")
    q, r = location_prob, 1.0 - location_prob
    others = n - m

    if theorem is Theorem.T1:
        f = {
            "i1_top_in_L": q,
            "i5_top_two_in_R": (n - 1) / n * r * (n - 2) / (n - 1) * r,
            "i4_top_in_R": (n - 3) / n * r,
            "i3_top_in_L_then_R": (n - 4) / n * q * (n - 5) / (n - 1) * r,
            "i2_list_fixed": 1 / (n * (n - 1) * (n - 2) * (n - 3)),
            "exclusivity": _exclusive(n, k, named, others),
        }
    elif theorem is Theorem.T2:
        f = {
            "i1_top_two_in_L": q * q,
            "i2_list_fixed": 1 / n * 1 / (n - 1),
            "i3_top_l2_then_R": 1 / n * (n - 2) / (n - 1) * r,
            "exclusivity": _exclusive(n, k, named, others),
        }
    elif theorem is Theorem.L1:
        f = {
            "i1_top_in_L": q,
            "i2_top_in_R_then_l": (n - 1) / n * r * 1 / (n - 1),
            "exclusivity": _exclusive(n, k, named, others),
        }
    else:
        f = {
            "i1_top_in_L": q,
            "i2_top_in_L_then_R": (n - 1) / n * q * (n - 2) / (n - 1) * r,
            "i3_list_fixed": 1 / n * 1 / (n - 1),
            "exclusivity": _exclusive(n, k, named, others),
        }
    return TupleProbability(
        theorem, n, k,
        category_probability(theorem, weights, exact_category, mode),
        f,
        PRIORITY_PROBABILITY[theorem],
    )


def ordered_tuples(n: int, theorem: Theorem) -> int:
    """Number of ordered tuples of distinct students."""
    m = TUPLE_SIZE[Theorem(theorem)]
    return prod(range(n - m + 1, n + 1))


def expected_count(
    theorem: Theorem,
    n: int,
    weights: Sequence[float] = UNIFORM_WEIGHTS,
    k: int | None = None,
    location_prob: float = 0.5,
    mode: Mode = Mode.NAIVE,
) -> float:
    """Exact expected number of detector hits in one uniform (n; k) market."""
    tp = tuple_probability(theorem, n, weights, k, location_prob, exact_category=True, mode=mode)
    return ordered_tuples(n, theorem) * tp.value
