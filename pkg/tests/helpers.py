"""Test-only market builders: planted witnesses and small random instances."""
from __future__ import annotations

import itertools
from dataclasses import replace

import numpy as np

from district_match.lab.witness import SCHOOL_ROLES, TUPLE_SIZE, Theorem
from district_match.market import MarketParams, sample_market
from district_match.model import Constraint, Mechanism, Mode, Problem, School, Sophistication, Student

SINC, SOPH = Sophistication.SINCERE, Sophistication.SOPHISTICATED
CON, UNC = Constraint.CONSTRAINED, Constraint.UNCONSTRAINED

# allowed (sophistication, constraint, residence) per tuple position; None = any
_CATS = {
    Theorem.T1: [(SINC, None, "L"), (SINC, UNC, None), (SOPH, UNC, None), (SINC, None, "R"), (SINC, None, "R")],
    Theorem.T2: [(SINC, None, "L"), (SOPH, None, "L"), (SOPH, UNC, None)],
    Theorem.L1: [(None, UNC, None), (None, CON, "L")],
    Theorem.L2: [(None, CON, "L"), (None, CON, "R"), (SOPH, UNC, None)],
}
# named prefixes, by school role
_PREFIX = {
    Theorem.T1: [("l1",), ("l1", "r2", "r1", "l2"), ("l2", "r3"), ("r2",), ("r1", "r4")],
    Theorem.T2: [("l1", "l2"), ("l2", "l1"), ("l2", "r1")],
    Theorem.L1: [("l",), ("r", "l")],
    Theorem.L2: [("l1",), ("l2", "r1"), ("r1", "l1")],
}
# required priority chains (highest first), by tuple position
_CHAINS = {
    Theorem.T1: {"l1": [0, 1], "l2": [1, 2], "r1": [1, 4], "r2": [3, 1]},
    Theorem.T2: {"l1": [1, 0], "l2": [0, 2, 1]},
    Theorem.L1: {"l": [1, 0]},
    Theorem.L2: {"l1": [2, 0], "r1": [1, 2]},
}


def plant_witness(
    n: int,
    k: int,
    theorem: Theorem,
    seed: int,
    mechanisms=None,
    mode: Mode = Mode.NAIVE,
    tail_bias: float = 0.5,
) -> Problem:
    """A random (n; k) market whose students i1..im satisfy every condition.

    Entries of the tuple's lists beyond the named prefix are drawn at random;
    with probability ``tail_bias`` each is drawn from the named schools, to
    exercise interference between tuple members.
    """
    theorem = Theorem(theorem)
    mechanisms = mechanisms or {"L": Mechanism.DA, "R": Mechanism.BM}
    base = sample_market(MarketParams(n, k, seed=seed, mode=mode), mechanisms)
    rng = np.random.default_rng([seed, 99])
    m = TUPLE_SIZE[theorem]
    roles = SCHOOL_ROLES[theorem]
    school_ids = [s.id for s in base.schools]
    named = dict(zip(roles, rng.choice(school_ids, size=len(roles), replace=False).tolist()))
    named_set = set(named.values())
    loc = {sid: ("L" if role.startswith("l") else "R") for role, sid in named.items()}

    students = list(base.students)
    for j in range(m):
        soph, cons, res = _CATS[theorem][j]
        soph = soph or (SINC, SOPH)[rng.integers(2)]
        cons = cons or (CON, UNC)[rng.integers(2)]
        res = res or ("L", "R")[rng.integers(2)]
        prefix = [named[r] for r in _PREFIX[theorem][j]]
        tail = []
        pool_named = [s for s in named_set if s not in prefix]
        pool_other = [s for s in school_ids if s not in named_set]
        while len(prefix) + len(tail) < k:
            use_named = rng.random() < tail_bias and any(s not in tail for s in pool_named)
            pool = [s for s in (pool_named if use_named else pool_other) if s not in tail]
            tail.append(str(rng.choice(pool)))
        students[j] = replace(students[j], sophistication=Sophistication(soph), constraint=Constraint(cons),
                              residence=str(res), preferences=tuple(prefix + tail))
    free = [s for s in school_ids if s not in named_set]
    for j in range(m, n):
        prefs = list(students[j].preferences)
        for pos, s in enumerate(prefs):
            if s in named_set:
                prefs[pos] = str(rng.choice([x for x in free if x not in prefs]))
        students[j] = replace(students[j], preferences=tuple(prefs))

    ids = [s.id for s in students]
    schools = []
    for sc in base.schools:
        prio = list(sc.priority)
        role = next((r for r, sid in named.items() if sid == sc.id), None)
        chain = _CHAINS[theorem].get(role) if role else None
        if chain:
            members = [ids[j] for j in chain]
            slots = sorted(prio.index(x) for x in members)
            for slot, x in zip(slots, members):
                prio[slot] = x
        schools.append(replace(sc, district=loc.get(sc.id, sc.district), priority=tuple(prio)))
    return Problem(tuple(students), tuple(schools), dict(base.mechanisms), mode)


def random_district_instance(rng: np.random.Generator, max_students=6, max_schools=6, max_k=3, max_cap=2):
    """Single-district problem (all in L) with random ROLs and priorities."""
    n = int(rng.integers(1, max_students + 1))
    m = int(rng.integers(1, max_schools + 1))
    sids = [f"s{j}" for j in range(m)]
    ids = [f"i{j}" for j in range(n)]
    students = []
    for i in ids:
        length = int(rng.integers(0, min(max_k, m) + 1))
        prefs = tuple(rng.permutation(sids)[:length].tolist())
        students.append(Student(i, "L", SOPH, CON, prefs))
    schools = tuple(
        School(s, "L", int(rng.integers(1, max_cap + 1)), tuple(rng.permutation(ids).tolist())) for s in sids
    )
    return Problem(tuple(students), schools, {"L": Mechanism.DA, "R": Mechanism.BM})


def all_rols(schools):
    """Every ordered subset of ``schools`` (including the empty list)."""
    out = [()]
    for r in range(1, len(schools) + 1):
        out.extend(itertools.permutations(schools, r))
    return out


def l1_market():
    students = (Student("a", "R", SOPH, UNC, ("l",)), Student("b", "L", SINC, CON, ("r", "l")))
    schools = (School("l", "L", 1, ("b", "a")), School("r", "R", 1, ("a", "b")))
    return Problem(students, schools, {"L": Mechanism.DA, "R": Mechanism.BM})


def l2_market():
    students = (
        Student("a", "L", SINC, CON, ("l1",)),
        Student("b", "R", SINC, CON, ("l2", "r1")),
        Student("c", "L", SOPH, UNC, ("r1", "l1")),
    )
    schools = (
        School("l1", "L", 1, ("c", "a", "b")),
        School("l2", "L", 1, ("a", "b", "c")),
        School("r1", "R", 1, ("b", "c", "a")),
    )
    return Problem(students, schools, {"L": Mechanism.DA, "R": Mechanism.BM})
