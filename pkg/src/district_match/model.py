"""Domain types for two-district school choice problems."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Mapping, Optional, Sequence, Tuple

StudentId = str
SchoolId = str
DistrictId = str
#: ``None`` stands for "unassigned" everywhere an assignment is expected.
Assignment = Optional[SchoolId]
ROL = Tuple[SchoolId, ...]


class Mechanism(str, enum.Enum):
    BM = "BM"
    DA = "DA"


class Sophistication(str, enum.Enum):
    SINCERE = "sincere"
    SOPHISTICATED = "sophisticated"


class Constraint(str, enum.Enum):
    CONSTRAINED = "constrained"
    UNCONSTRAINED = "unconstrained"


class Mode(str, enum.Enum):
    """How sincere-unconstrained students pick a district.

    ``NAIVE`` students enroll in the district of their first choice.
    ``DISTRICT_STRATEGIC`` students pick the district strategically but
    always submit their true preferences restricted to it.
    """

    NAIVE = "naive"
    DISTRICT_STRATEGIC = "district_strategic"


class Comparison(enum.Enum):
    PREFERS_A = "prefers_a"
    INDIFFERENT = "indifferent"
    PREFERS_B = "prefers_b"


@dataclass(frozen=True)
class Student:
    id: StudentId
    residence: DistrictId
    sophistication: Sophistication
    constraint: Constraint
    preferences: ROL = ()

    @property
    def sincere(self) -> bool:
        return self.sophistication is Sophistication.SINCERE

    @property
    def constrained(self) -> bool:
        return self.constraint is Constraint.CONSTRAINED

    def utility(self, assignment: Assignment) -> int:
        """Ordinal score of an assignment: higher is better.

        Listed schools score above 0 (first choice highest), unassigned
        scores 0 and unlisted schools score -1.
        """
        if assignment is None:
            return 0
        try:
            return len(self.preferences) - self.preferences.index(assignment)
        except ValueError:
            return -1


@dataclass(frozen=True)
class School:
    id: SchoolId
    district: DistrictId
    capacity: int
    priority: Tuple[StudentId, ...]

    @cached_property
    def rank(self) -> dict[StudentId, int]:
        """Student id -> position in the priority order (0 is highest)."""
        return {sid: pos for pos, sid in enumerate(self.priority)}


@dataclass(frozen=True)
class Problem:
    students: Tuple[Student, ...]
    schools: Tuple[School, ...]
    mechanisms: Mapping[DistrictId, Mechanism] = field(hash=False)
    mode: Mode = Mode.NAIVE

    @property
    def districts(self) -> Tuple[DistrictId, ...]:
        return tuple(self.mechanisms)

    @cached_property
    def student(self) -> dict[StudentId, Student]:
        return {s.id: s for s in self.students}

    @cached_property
    def school(self) -> dict[SchoolId, School]:
        return {s.id: s for s in self.schools}

    @cached_property
    def schools_by_district(self) -> dict[DistrictId, Tuple[School, ...]]:
        out: dict[DistrictId, list[School]] = {d: [] for d in self.districts}
        for s in self.schools:
            out.setdefault(s.district, []).append(s)
        return {d: tuple(v) for d, v in out.items()}

    def district_of(self, school_id: SchoolId) -> DistrictId:
        return self.school[school_id].district

    def other_district(self, district: DistrictId) -> DistrictId:
        (other,) = [d for d in self.districts if d != district]
        return other


@dataclass(frozen=True)
class Matching:
    """Assignment of every student to a school id or ``None``."""

    assignment: Tuple[Tuple[StudentId, Assignment], ...]

    @classmethod
    def from_dict(cls, assignment: Mapping[StudentId, Assignment]) -> "Matching":
        return cls(tuple(assignment.items()))

    @cached_property
    def _lookup(self) -> dict[StudentId, Assignment]:
        return dict(self.assignment)

    def __getitem__(self, student_id: StudentId) -> Assignment:
        return self._lookup[student_id]

    def __iter__(self) -> Iterator[StudentId]:
        return iter(self._lookup)

    def __len__(self) -> int:
        return len(self.assignment)

    def as_dict(self) -> dict[StudentId, Assignment]:
        return dict(self.assignment)

    def load(self) -> dict[SchoolId, int]:
        counts: dict[SchoolId, int] = {}
        for _, s in self.assignment:
            if s is not None:
                counts[s] = counts.get(s, 0) + 1
        return counts


def compare_assignment(student: Student, a: Assignment, b: Assignment) -> Comparison:
    ua, ub = student.utility(a), student.utility(b)
    if ua > ub:
        return Comparison.PREFERS_A
    if ua < ub:
        return Comparison.PREFERS_B
    return Comparison.INDIFFERENT


def validate_problem(p: Problem) -> list[str]:
    """Return every invariant violation of ``p``; an empty list means valid."""
    problems: list[str] = []
    if len(p.districts) != 2 or len(set(p.districts)) != 2:
        problems.append(f"expected exactly two districts, got {list(p.districts)}")
    for d, mech in p.mechanisms.items():
        if not isinstance(mech, Mechanism):
            problems.append(f"district {d!r}: unknown mechanism {mech!r}")

    student_ids = [s.id for s in p.students]
    school_ids = [s.id for s in p.schools]
    for label, ids in (("student", student_ids), ("school", school_ids)):
        seen: set[str] = set()
        for x in ids:
            if x in seen:
                problems.append(f"duplicate {label} id {x!r}")
            seen.add(x)
    known_schools = set(school_ids)
    known_students = set(student_ids)

    for st in p.students:
        if st.residence not in p.mechanisms:
            problems.append(f"student {st.id!r}: unknown residence district {st.residence!r}")
        if len(set(st.preferences)) != len(st.preferences):
            problems.append(f"student {st.id!r}: duplicate school in preferences")
        for s in st.preferences:
            if s not in known_schools:
                problems.append(f"student {st.id!r}: preference lists unknown school {s!r}")

    for sc in p.schools:
        if sc.district not in p.mechanisms:
            problems.append(f"school {sc.id!r}: unknown district {sc.district!r}")
        if not isinstance(sc.capacity, int) or sc.capacity < 1:
            problems.append(f"school {sc.id!r}: capacity must be a positive integer, got {sc.capacity!r}")
        prio = list(sc.priority)
        if len(prio) != len(set(prio)):
            problems.append(f"school {sc.id!r}: duplicate student in priority")
        unknown = [x for x in prio if x not in known_students]
        if unknown:
            problems.append(f"school {sc.id!r}: priority names unknown students {unknown}")
        missing = [x for x in student_ids if x not in set(prio)]
        if missing:
            problems.append(f"school {sc.id!r}: priority omits students {missing}")
    return problems


def check_matching(p: Problem, m: Matching, rols: Optional[Mapping[StudentId, Sequence[SchoolId]]] = None) -> list[str]:
    """Capacity (and, given the submitted ROLs, ROL membership) violations of ``m``."""
    problems = []
    for school_id, count in m.load().items():
        cap = p.school[school_id].capacity
        if count > cap:
            problems.append(f"school {school_id!r} holds {count} > capacity {cap}")
    if rols is not None:
        for sid, s in m.assignment:
            if s is not None and s not in rols.get(sid, ()):
                problems.append(f"student {sid!r} assigned to {s!r} not on her ROL")
    return problems
