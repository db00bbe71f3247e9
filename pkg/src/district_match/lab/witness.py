"""Syntactic detection of the four witness constructions in a market.

Each construction fixes roles for a few students (``i1``, ``i2``, ...) and
schools (``l1``, ``r1``, ...) and lists conditions in three groups:
categories (sophistication / constraint / residence), preferences and
school locations (including exclusivity: nobody outside the tuple lists a
named school), and priorities. Detectors only check these conditions; see
:mod:`district_match.lab.confirm` for the equilibrium-level check.

T1: sincere ``i2`` turning sophisticated helps sophisticated ``i3``
    (five students, schools l1 l2 r1 r2 r3 r4, DA district in the L role).
T2: sophisticated ``i2`` prefers her district to run DA (three students,
    schools l1 l2 r1).
L1: unconstrained ``i1`` gains if constrained ``i2`` becomes unconstrained
    (two students, schools l r).
L2: constrained ``i1`` gains if constrained ``i2`` from the other district
    becomes unconstrained, through unconstrained ``i3`` (three students,
    schools l1 l2 r1).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Iterable, Optional, Sequence, Tuple

from ..model import Constraint, Mechanism, Mode, Problem, SchoolId, Sophistication, StudentId


class Theorem(str, enum.Enum):
    T1 = "T1"
    T2 = "T2"
    L1 = "L1"
    L2 = "L2"


TUPLE_SIZE = {Theorem.T1: 5, Theorem.T2: 3, Theorem.L1: 2, Theorem.L2: 3}
SCHOOL_ROLES = {
    Theorem.T1: ("l1", "l2", "r1", "r2", "r3", "r4"),
    Theorem.T2: ("l1", "l2", "r1"),
    Theorem.L1: ("l", "r"),
    Theorem.L2: ("l1", "l2", "r1"),
}
#: how many leading preference entries each construction pins down, by student position
NAMED_PREFIX = {
    Theorem.T1: (1, 4, 2, 1, 2),
    Theorem.T2: (2, 2, 2),
    Theorem.L1: (1, 2),
    Theorem.L2: (1, 2, 2),
}
#: shortest preference list length the construction needs
MIN_LIST_LENGTH = {Theorem.T1: 4, Theorem.T2: 2, Theorem.L1: 2, Theorem.L2: 2}

PARTS = frozenset({"category", "preferences", "priorities"})


class DetectorPrecondition(ValueError):
    pass


@dataclass(frozen=True)
class WitnessTuple:
    theorem: Theorem
    students: Tuple[StudentId, ...]
    schools: Tuple[Tuple[str, SchoolId], ...]  # (role, school id) in SCHOOL_ROLES order
    left: str
    right: str

    @property
    def school_map(self) -> Dict[str, SchoolId]:
        return dict(self.schools)


class MarketView:
    """Lookup tables over a problem for fast condition checks."""

    def __init__(self, p: Problem):
        self.p = p
        self.prefs = {s.id: s.preferences for s in p.students}
        self.loc = {s.id: s.district for s in p.schools}
        self.rank = {s.id: s.rank for s in p.schools}
        self.st = p.student
        acceptors: dict[SchoolId, set[StudentId]] = {s.id: set() for s in p.schools}
        for s in p.students:
            for sc in s.preferences:
                acceptors.setdefault(sc, set()).add(s.id)
        self.acceptors = acceptors

    @cached_property
    def by_top(self) -> dict[SchoolId, list[StudentId]]:
        out: dict[SchoolId, list[StudentId]] = {}
        for s in self.p.students:
            if s.preferences:
                out.setdefault(s.preferences[0], []).append(s.id)
        return out

    def above(self, school: SchoolId, a: StudentId, b: StudentId) -> bool:
        r = self.rank[school]
        return r[a] < r[b]

    def exclusive(self, schools: Iterable[SchoolId], members: Sequence[StudentId]) -> bool:
        allowed = set(members)
        return all(self.acceptors.get(s, set()) <= allowed for s in schools)

    def isolated(self, theorem: Theorem, members: Sequence[StudentId], schools: Iterable[SchoolId]) -> bool:
        """No member lists a named school beyond the entries the construction names."""
        named = set(schools)
        for sid, k in zip(members, NAMED_PREFIX[theorem]):
            if named.intersection(self.prefs[sid][k:]):
                return False
        return True


def _pref(view: MarketView, sid: StudentId, pos: int) -> Optional[SchoolId]:
    prefs = view.prefs[sid]
    return prefs[pos] if len(prefs) > pos else None


def _roles_t1(p: Problem) -> Tuple[str, str]:
    da = [d for d, m in p.mechanisms.items() if m is Mechanism.DA]
    bm = [d for d, m in p.mechanisms.items() if m is Mechanism.BM]
    if len(da) != 1 or len(bm) != 1:
        raise DetectorPrecondition("T1 detection needs one DA district and one BM district")
    return da[0], bm[0]


def district_roles(p: Problem, theorem: Theorem) -> Tuple[str, str]:
    """Which district label plays L and which plays R."""
    if Theorem(theorem) is Theorem.T1:
        return _roles_t1(p)
    left = p.districts[0]
    return left, p.other_district(left)


def check_conditions(
    view: MarketView,
    theorem: Theorem,
    members: Sequence[StudentId],
    left: str,
    right: str,
    parts: Iterable[str] = PARTS,
    isolated: bool = False,
) -> Optional[Dict[str, SchoolId]]:
    """Check the selected condition groups for an ordered tuple.

    Returns the role -> school map on success, ``None`` otherwise. School
    roles are read off the tuple's preference lists, so the map is returned
    even when only ``category`` is checked (values may then be ``None``).
    """
    theorem = Theorem(theorem)
    parts = set(parts)
    if len(members) != TUPLE_SIZE[theorem] or len(set(members)) != len(members):
        return None
    st = [view.st[i] for i in members]
    mode_strategic = view.p.mode is Mode.DISTRICT_STRATEGIC
    L = lambda s: s is not None and view.loc[s] == left  # noqa: E731
    R = lambda s: s is not None and view.loc[s] == right  # noqa: E731
    top = lambda j, pos: _pref(view, members[j], pos)  # noqa: E731

    if theorem is Theorem.T1:
        i1, i2, i3, i4, i5 = st
        cat = (
            i1.sincere and i1.residence == left
            and i2.sincere and not i2.constrained
            and not i3.sincere and not i3.constrained
            and i4.sincere and i4.residence == right
            and i5.sincere and i5.residence == right
        )
        schools = {"l1": top(0, 0), "l2": top(2, 0), "r1": top(4, 0), "r2": top(3, 0),
                   "r3": top(2, 1), "r4": top(4, 1)}
        s = schools
        pref = (
            L(s["l1"]) and R(s["r1"]) and R(s["r4"]) and R(s["r2"]) and L(s["l2"]) and R(s["r3"])
            and len(set(s.values())) == 6
            and tuple(view.prefs[members[1]][:4]) == (s["l1"], s["r2"], s["r1"], s["l2"])
        )
        prio = lambda: (  # noqa: E731
            view.above(s["l1"], members[0], members[1])
            and view.above(s["l2"], members[1], members[2])
            and view.above(s["r1"], members[1], members[4])
            and view.above(s["r2"], members[3], members[1])
        )
    elif theorem is Theorem.T2:
        i1, i2, i3 = st
        cat = (
            i1.sincere and i1.residence == left
            and not i2.sincere and i2.residence == left
            and not i3.sincere and not i3.constrained
        )
        s = {"l1": top(0, 0), "l2": top(0, 1), "r1": top(2, 1)}
        pref = (
            L(s["l1"]) and L(s["l2"])
            and tuple(view.prefs[members[1]][:2]) == (s["l2"], s["l1"])
            and top(2, 0) == s["l2"] and R(s["r1"])
        )
        prio = lambda: (  # noqa: E731
            view.above(s["l1"], members[1], members[0])
            and view.above(s["l2"], members[0], members[2])
            and view.above(s["l2"], members[2], members[1])
        )
    elif theorem is Theorem.L1:
        i1, i2 = st
        cat = not i1.constrained and i2.constrained and i2.residence == left
        s = {"l": top(0, 0), "r": top(1, 0)}
        pref = L(s["l"]) and R(s["r"]) and top(1, 1) == s["l"]
        prio = lambda: view.above(s["l"], members[1], members[0])  # noqa: E731
    else:
        i1, i2, i3 = st
        cat = (
            i1.constrained and i1.residence == left
            and i2.constrained and i2.residence == right
            and not i3.constrained
            # i3 must pick her district by payoff, not by her first choice
            and (not i3.sincere or mode_strategic)
        )
        s = {"l1": top(0, 0), "l2": top(1, 0), "r1": top(1, 1)}
        pref = (
            L(s["l1"]) and L(s["l2"]) and s["l1"] != s["l2"] and R(s["r1"])
            and top(2, 0) == s["r1"] and top(2, 1) == s["l1"]
        )
        prio = lambda: (  # noqa: E731
            view.above(s["l1"], members[2], members[0])
            and view.above(s["r1"], members[1], members[2])
        )

    if "category" in parts and not cat:
        return None
    if "preferences" in parts or "priorities" in parts or isolated:
        if not pref:
            return None
    if "preferences" in parts and not view.exclusive(s.values(), members):
        return None
    if "priorities" in parts and not prio():
        return None
    if isolated and not view.isolated(theorem, members, s.values()):
        return None
    return s


def _candidates(view: MarketView, theorem: Theorem, left: str, right: str) -> Iterable[Tuple[StudentId, ...]]:
    """Ordered tuples worth a full check: anchored on pinned top choices."""
    tops = view.by_top
    p = view.p
    if theorem is Theorem.T1:
        for i2 in p.students:
            pr = i2.preferences
            if len(pr) < 4 or not i2.sincere or i2.constrained:
                continue
            l1, r2, r1, l2 = pr[:4]
            for i1 in tops.get(l1, ()):
                for i3 in tops.get(l2, ()):
                    for i4 in tops.get(r2, ()):
                        for i5 in tops.get(r1, ()):
                            yield (i1, i2.id, i3, i4, i5)
    elif theorem is Theorem.T2:
        for i2 in p.students:
            pr = i2.preferences
            if len(pr) < 2 or i2.sincere:
                continue
            l2, l1 = pr[:2]
            for i1 in tops.get(l1, ()):
                for i3 in tops.get(l2, ()):
                    yield (i1, i2.id, i3)
    elif theorem is Theorem.L1:
        for i2 in p.students:
            pr = i2.preferences
            if len(pr) < 2 or not i2.constrained:
                continue
            for i1 in tops.get(pr[1], ()):
                yield (i1, i2.id)
    else:
        for i3 in p.students:
            pr = i3.preferences
            if len(pr) < 2 or i3.constrained:
                continue
            r1, l1 = pr[:2]
            for i1 in tops.get(l1, ()):
                for i2 in view.acceptors.get(r1, ()):
                    if _pref(view, i2, 1) == r1:
                        yield (i1, i2, i3.id)


def detect(p: Problem, theorem: Theorem, isolated: bool = False) -> list[WitnessTuple]:
    """Every ordered tuple of ``p`` meeting all conditions of ``theorem``.

    Results are sorted by the students' positions in ``p``.
    """
    theorem = Theorem(theorem)
    left, right = district_roles(p, theorem)
    view = MarketView(p)
    order = {s.id: j for j, s in enumerate(p.students)}
    hits = []
    for members in _candidates(view, theorem, left, right):
        s = check_conditions(view, theorem, members, left, right, isolated=isolated)
        if s is not None:
            roles = SCHOOL_ROLES[theorem]
            hits.append(WitnessTuple(theorem, tuple(members), tuple((r, s[r]) for r in roles), left, right))
    hits.sort(key=lambda w: [order[i] for i in w.students])
    return hits


def detect_t1_quintuples(p: Problem, isolated: bool = False) -> list[WitnessTuple]:
    return detect(p, Theorem.T1, isolated)


def detect_t2_triplets(p: Problem, isolated: bool = False) -> list[WitnessTuple]:
    return detect(p, Theorem.T2, isolated)


def detect_l1_pairs(p: Problem, isolated: bool = False) -> list[WitnessTuple]:
    return detect(p, Theorem.L1, isolated)


def detect_l2_triplets(p: Problem, isolated: bool = False) -> list[WitnessTuple]:
    return detect(p, Theorem.L2, isolated)


def fixed_tuple_holds(p: Problem, theorem: Theorem, parts: Iterable[str] = ("preferences",)) -> bool:
    """Do the first students of ``p`` (in order) satisfy the chosen condition groups?"""
    theorem = Theorem(theorem)
    left, right = district_roles(p, theorem)
    members = [s.id for s in p.students[: TUPLE_SIZE[theorem]]]
    if len(members) < TUPLE_SIZE[theorem]:
        return False
    return check_conditions(MarketView(p), theorem, members, left, right, parts) is not None
