"""Random two-district markets from the uniform (n; k) model.

Seeding: every entity draws from its own stream,
``default_rng(SeedSequence(seed, spawn_key=(kind, ordinal)))`` with
``kind`` 0 for students and 1 for schools, so any entity can be regenerated
(or sampled in parallel) without touching the others.

A student stream draws, in order: a category index (``Generator.choice``
over the 8 weights) and the preference list (``choice(n, k,
replace=False)``). A school stream draws a uniform float for the location
(L when below ``location_prob``) and then its priority
(``permutation(n)``).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Tuple

import numpy as np

from .model import Constraint, Mechanism, Mode, Problem, School, Sophistication, Student

DISTRICTS = ("L", "R")

#: Category order for the 8 weights: sophistication x constraint x residence,
#: residence varying fastest.
CATEGORIES: Tuple[Tuple[Sophistication, Constraint, str], ...] = tuple(
    itertools.product(
        (Sophistication.SINCERE, Sophistication.SOPHISTICATED),
        (Constraint.CONSTRAINED, Constraint.UNCONSTRAINED),
        DISTRICTS,
    )
)
UNIFORM_WEIGHTS = (0.125,) * 8

STUDENT_STREAM = 0
SCHOOL_STREAM = 1


class MarketParamError(ValueError):
    pass


@dataclass(frozen=True)
class MarketParams:
    n: int
    k: int
    seed: int = 0
    category_weights: Tuple[float, ...] = UNIFORM_WEIGHTS
    location_prob: float = 0.5
    mode: Mode = Mode.NAIVE

    def __post_init__(self):
        if self.n < 1:
            raise MarketParamError(f"n must be positive, got {self.n}")
        if not 1 <= self.k <= self.n:
            raise MarketParamError(f"k must satisfy 1 <= k <= n, got k={self.k}, n={self.n}")
        w = tuple(float(x) for x in self.category_weights)
        if len(w) != 8:
            raise MarketParamError(f"expected 8 category weights, got {len(w)}")
        if any(x <= 0 for x in w):
            raise MarketParamError("category weights must be strictly positive")
        if abs(sum(w) - 1.0) > 1e-9:
            raise MarketParamError(f"category weights must sum to 1, got {sum(w)}")
        if not 0.0 < self.location_prob < 1.0:
            raise MarketParamError("location_prob must lie strictly between 0 and 1")
        object.__setattr__(self, "category_weights", w)


def entity_rng(seed: int, kind: int, ordinal: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(kind, ordinal)))


@dataclass(frozen=True)
class MarketArrays:
    """Raw draws of one market, indexed by entity ordinal."""

    categories: np.ndarray  # (n,) index into CATEGORIES
    preferences: np.ndarray  # (n, k) school ordinals
    in_left: np.ndarray  # (n,) bool
    priorities: np.ndarray  # (n, n) row s = student ordinals from highest priority


def sample_arrays(params: MarketParams) -> MarketArrays:
    n, k = params.n, params.k
    weights = np.asarray(params.category_weights)
    weights = weights / weights.sum()
    cats = np.empty(n, dtype=np.int64)
    prefs = np.empty((n, k), dtype=np.int64)
    for i in range(n):
        rng = entity_rng(params.seed, STUDENT_STREAM, i)
        cats[i] = rng.choice(8, p=weights)
        prefs[i] = rng.choice(n, size=k, replace=False)
    left = np.empty(n, dtype=bool)
    prio = np.empty((n, n), dtype=np.int64)
    for s in range(n):
        rng = entity_rng(params.seed, SCHOOL_STREAM, s)
        left[s] = rng.random() < params.location_prob
        prio[s] = rng.permutation(n)
    return MarketArrays(cats, prefs, left, prio)


def student_id(i: int) -> str:
    return f"i{i + 1}"


def school_id(s: int) -> str:
    return f"s{s + 1}"


def arrays_to_problem(a: MarketArrays, mechanisms: Mapping[str, Mechanism], mode: Mode = Mode.NAIVE) -> Problem:
    students = []
    for i, (c, row) in enumerate(zip(a.categories, a.preferences)):
        soph, cons, res = CATEGORIES[int(c)]
        students.append(Student(student_id(i), res, soph, cons, tuple(school_id(int(s)) for s in row)))
    schools = tuple(
        School(school_id(s), DISTRICTS[0] if a.in_left[s] else DISTRICTS[1], 1,
               tuple(student_id(int(i)) for i in a.priorities[s]))
        for s in range(len(a.in_left))
    )
    mechs = {d: Mechanism(mechanisms[d]) for d in DISTRICTS}
    return Problem(tuple(students), schools, mechs, mode)


def sample_market(params: MarketParams, mechanisms: Mapping[str, Mechanism]) -> Problem:
    """Draw one market; identical ``params`` give an identical problem."""
    return arrays_to_problem(sample_arrays(params), mechanisms, params.mode)
