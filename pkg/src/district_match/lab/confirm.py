"""Equilibrium-level confirmation of detected witness tuples."""
from __future__ import annotations

import enum
from dataclasses import replace

from ..equilibrium import (
    DEFAULT_BUDGET,
    PreferenceReport,
    Refinement,
    SetConstraint,
    SetMechanism,
    SetSophistication,
    Verdict,
    compare_worlds,
)
from ..model import Constraint, Mechanism, Problem, Sophistication
from .witness import MarketView, Theorem, WitnessTuple, check_conditions


class Confirmation(enum.Enum):
    CONFIRMED = "confirmed"
    REFUTED = "refuted"


class NotAWitness(ValueError):
    pass


def induced_subproblem(p: Problem, w: WitnessTuple) -> Problem:
    """Restrict ``p`` to the tuple's students and schools.

    Preferences and priorities are filtered to what remains; nobody outside
    the tuple lists a named school, so the tuple's schools only ever see the
    tuple's students.
    """
    members = set(w.students)
    named = set(w.school_map.values())
    students = tuple(
        replace(s, preferences=tuple(x for x in s.preferences if x in named))
        for s in p.students if s.id in members
    )
    schools = tuple(
        replace(s, priority=tuple(x for x in s.priority if x in members))
        for s in p.schools if s.id in named
    )
    return Problem(students, schools, dict(p.mechanisms), p.mode)


def claim(p: Problem, w: WitnessTuple):
    """The (baseline problem, student, transform) the construction predicts a strict gain for."""
    i = w.students
    if w.theorem is Theorem.T1:
        return p, i[2], SetSophistication(i[1], Sophistication.SOPHISTICATED)
    if w.theorem is Theorem.T2:
        base = SetMechanism(w.left, Mechanism.BM).apply(p)
        return base, i[1], SetMechanism(w.left, Mechanism.DA)
    return p, i[0], SetConstraint(i[1], Constraint.UNCONSTRAINED)


def explain_tuple(
    p: Problem, w: WitnessTuple, budget: int = DEFAULT_BUDGET, refinement: Refinement = Refinement.NONE
) -> PreferenceReport:
    view = MarketView(p)
    if check_conditions(view, w.theorem, w.students, w.left, w.right) != w.school_map:
        raise NotAWitness(f"{w.theorem.value} conditions fail for students {w.students}")
    base, student, t = claim(induced_subproblem(p, w), w)
    return compare_worlds(base, student, t, strict=True, budget=budget, refinement=refinement)


def confirm_tuple(
    p: Problem, w: WitnessTuple, budget: int = DEFAULT_BUDGET, refinement: Refinement = Refinement.NONE
) -> Confirmation:
    """Solve the tuple's subgame in both worlds and check the predicted strict gain."""
    report = explain_tuple(p, w, budget, refinement)
    return Confirmation.CONFIRMED if report.verdict is Verdict.YES else Confirmation.REFUTED
