"""Boston and deferred acceptance matching, plus multi-district assembly."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence, Tuple

from .model import (
    ROL,
    Assignment,
    DistrictId,
    Matching,
    Mechanism,
    Problem,
    School,
    SchoolId,
    StudentId,
)


class MatchInputError(ValueError):
    """An ROL names a school outside the district it was submitted to."""


@dataclass(frozen=True)
class DistrictInput:
    rols: Mapping[StudentId, ROL]
    schools: Tuple[School, ...]

    def check(self) -> None:
        known = {s.id for s in self.schools}
        for sid, rol in self.rols.items():
            foreign = [s for s in rol if s not in known]
            if foreign:
                raise MatchInputError(f"student {sid!r}: ROL names schools outside the district: {foreign}")
            if len(set(rol)) != len(rol):
                raise MatchInputError(f"student {sid!r}: ROL repeats a school")


def _top(applicants: set[StudentId], school: School, seats: int) -> set[StudentId]:
    if seats <= 0:
        return set()
    if len(applicants) <= seats:
        return set(applicants)
    rank = school.rank
    return set(sorted(applicants, key=rank.__getitem__)[:seats])


def boston_match(d: DistrictInput) -> dict[StudentId, Assignment]:
    """Immediate acceptance: round ``k`` acceptances are permanent."""
    d.check()
    by_id = {s.id: s for s in d.schools}
    seats = {s.id: s.capacity for s in d.schools}
    result: dict[StudentId, Assignment] = {sid: None for sid in d.rols}
    pending = set(d.rols)
    longest = max((len(r) for r in d.rols.values()), default=0)
    for k in range(longest):
        applicants: dict[SchoolId, set[StudentId]] = {}
        for sid in pending:
            rol = d.rols[sid]
            if len(rol) > k:
                applicants.setdefault(rol[k], set()).add(sid)
        for school_id, group in applicants.items():
            accepted = _top(group, by_id[school_id], seats[school_id])
            seats[school_id] -= len(accepted)
            for sid in accepted:
                result[sid] = school_id
            pending -= accepted
        if not pending:
            break
    return result


def deferred_acceptance_match(d: DistrictInput) -> dict[StudentId, Assignment]:
    """Student-proposing deferred acceptance over the submitted ROLs."""
    d.check()
    by_id = {s.id: s for s in d.schools}
    held: dict[SchoolId, set[StudentId]] = {s.id: set() for s in d.schools}
    next_choice = {sid: 0 for sid in d.rols}
    proposing = {sid for sid, rol in d.rols.items() if rol}
    while proposing:
        applicants: dict[SchoolId, set[StudentId]] = {}
        for sid in proposing:
            rol = d.rols[sid]
            school_id = rol[next_choice[sid]]
            next_choice[sid] += 1
            applicants.setdefault(school_id, set()).add(sid)
        rejected: set[StudentId] = set()
        for school_id, group in applicants.items():
            pool = held[school_id] | group
            keep = _top(pool, by_id[school_id], by_id[school_id].capacity)
            held[school_id] = keep
            rejected |= pool - keep
        proposing = {sid for sid in rejected if next_choice[sid] < len(d.rols[sid])}
    result: dict[StudentId, Assignment] = {sid: None for sid in d.rols}
    for school_id, group in held.items():
        for sid in group:
            result[sid] = school_id
    return result


MECHANISMS = {
    Mechanism.BM: boston_match,
    Mechanism.DA: deferred_acceptance_match,
}


def run_district(p: Problem, district: DistrictId, rols: Mapping[StudentId, ROL]) -> dict[StudentId, Assignment]:
    d = DistrictInput(rols=rols, schools=p.schools_by_district.get(district, ()))
    return MECHANISMS[p.mechanisms[district]](d)


def run_multi_district(
    p: Problem, enrollments: Mapping[StudentId, Tuple[DistrictId, Sequence[SchoolId]]]
) -> Matching:
    """Run each district's mechanism on the students enrolled there and merge.

    Students missing from ``enrollments`` or submitting an empty ROL end up
    unassigned.
    """
    per_district: dict[DistrictId, dict[StudentId, ROL]] = {d: {} for d in p.districts}
    for sid, (district, rol) in enrollments.items():
        if sid not in p.student:
            raise MatchInputError(f"unknown student {sid!r}")
        if district not in per_district:
            raise MatchInputError(f"student {sid!r}: unknown district {district!r}")
        rol = tuple(rol)
        wrong = [s for s in rol if s not in p.school or p.school[s].district != district]
        if wrong:
            raise MatchInputError(
                f"student {sid!r} enrolled in {district!r} but ranks schools outside it: {wrong}"
            )
        if rol:
            per_district[district][sid] = rol
    merged: dict[StudentId, Assignment] = {}
    for district, rols in per_district.items():
        if rols:
            merged.update(run_district(p, district, rols))
    return Matching(tuple((s.id, merged.get(s.id)) for s in p.students))
