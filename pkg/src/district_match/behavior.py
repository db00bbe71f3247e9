"""Sincere behavior and the strategy spaces of strategic students."""
from __future__ import annotations

import enum
import itertools
from typing import NamedTuple, Tuple

from .model import ROL, DistrictId, Mode, Problem, Student


class Role(enum.Enum):
    FIXED = "fixed"
    DISTRICT_ONLY = "district_only"
    FULL = "full"


class Strategy(NamedTuple):
    district: DistrictId
    rol: ROL

    @property
    def abstains(self) -> bool:
        return not self.rol


def role(student: Student, mode: Mode) -> Role:
    if not student.sincere:
        return Role.FULL
    if student.constrained or mode is Mode.NAIVE:
        return Role.FIXED
    return Role.DISTRICT_ONLY


def sincere_rol(student: Student, district: DistrictId, p: Problem) -> ROL:
    """True preferences restricted to ``district``, order preserved."""
    return tuple(s for s in student.preferences if p.district_of(s) == district)


def naive_district_choice(student: Student, p: Problem) -> DistrictId:
    if not student.preferences:
        return student.residence
    return p.district_of(student.preferences[0])


def allowed_districts(student: Student, p: Problem) -> Tuple[DistrictId, ...]:
    if student.constrained:
        return (student.residence,)
    return p.districts


def fixed_strategy(student: Student, p: Problem) -> Strategy:
    """Enrollment of a student whose role is ``FIXED``."""
    if student.constrained:
        district = student.residence
    else:
        district = naive_district_choice(student, p)
    rol = sincere_rol(student, district, p)
    if not rol:
        return Strategy(student.residence, ())
    return Strategy(district, rol)


def strategy_space(student: Student, p: Problem) -> Tuple[Strategy, ...]:
    """All strategies of a strategic student, in a deterministic order.

    Full-role students get the single empty-ROL strategy ("abstain",
    enrolled at residence) first, then, district by district, non-empty ROLs
    ordered by length and then by the student's own preference order.
    District-only students get one truthful ROL per district, with empty
    ROLs collapsed into abstaining.
    """
    r = role(student, p.mode)
    if r is Role.FIXED:
        raise ValueError(f"student {student.id!r} is not a strategic player")
    abstain = Strategy(student.residence, ())
    if r is Role.DISTRICT_ONLY:
        out = []
        for district in allowed_districts(student, p):
            s = Strategy(district, sincere_rol(student, district, p))
            s = abstain if s.abstains else s
            if s not in out:
                out.append(s)
        return tuple(out)
    out = [abstain]
    for district in allowed_districts(student, p):
        acceptable = sincere_rol(student, district, p)
        for length in range(1, len(acceptable) + 1):
            for perm in itertools.permutations(acceptable, length):
                out.append(Strategy(district, perm))
    return tuple(out)
