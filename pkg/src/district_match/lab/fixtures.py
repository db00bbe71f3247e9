"""The worked example markets, built exactly."""
from __future__ import annotations

from typing import Sequence

from ..model import Constraint, Mechanism, Mode, Problem, School, Sophistication, Student

SINCERE, SOPH = Sophistication.SINCERE, Sophistication.SOPHISTICATED
CON, UNC = Constraint.CONSTRAINED, Constraint.UNCONSTRAINED


def _problem(students: Sequence[Student], priorities: dict, districts: dict, mechanisms: dict, mode: Mode) -> Problem:
    order = [s.id for s in students]
    schools = []
    for sid, named in priorities.items():
        rest = [x for x in order if x not in named]
        schools.append(School(sid, districts[sid], 1, tuple(named) + tuple(rest)))
    return Problem(tuple(students), tuple(schools), dict(mechanisms), mode)


def sophistication_example(mode: Mode = Mode.NAIVE) -> Problem:
    """Five students where i3 gains if sincere i2 turns sophisticated (L=DA, R=BM)."""
    students = [
        Student("i1", "L", SINCERE, CON, ("l1",)),
        Student("i2", "L", SINCERE, UNC, ("l1", "r2", "r1", "l2")),
        Student("i3", "L", SOPH, UNC, ("l2", "r3")),
        Student("i4", "R", SINCERE, CON, ("r2",)),
        Student("i5", "R", SINCERE, CON, ("r1", "r4")),
    ]
    priorities = {
        "l1": ["i1", "i2"],
        "l2": ["i2", "i3"],
        "r1": ["i2", "i5"],
        "r2": ["i4", "i2"],
        "r3": ["i3"],
        "r4": ["i5"],
    }
    districts = {s: ("L" if s.startswith("l") else "R") for s in priorities}
    return _problem(students, priorities, districts, {"L": Mechanism.DA, "R": Mechanism.BM}, mode)


def mechanism_example(
    left: Mechanism = Mechanism.BM, right: Mechanism = Mechanism.BM, mode: Mode = Mode.NAIVE
) -> Problem:
    """Three students where sophisticated i2 is better off when L runs DA."""
    students = [
        Student("i1", "L", SINCERE, CON, ("l1", "l2")),
        Student("i2", "L", SOPH, CON, ("l2", "l1")),
        Student("i3", "L", SOPH, UNC, ("l2", "r1")),
    ]
    priorities = {"l1": ["i2", "i1"], "l2": ["i1", "i3", "i2"], "r1": ["i3"]}
    districts = {"l1": "L", "l2": "L", "r1": "R"}
    return _problem(students, priorities, districts, {"L": Mechanism(left), "R": Mechanism(right)}, mode)


def cycle_example(
    x: int, left: Mechanism = Mechanism.BM, right: Mechanism = Mechanism.BM, mode: Mode = Mode.NAIVE
) -> Problem:
    """Preference cycle through ``x`` schools in L with one sincere student.

    i1 is sincere-constrained; i2..i(x+1) are sophisticated-unconstrained.
    """
    if x < 2:
        raise ValueError(f"cycle length must be at least 2, got {x}")
    l = [f"l{j}" for j in range(1, x + 1)]
    i = [f"i{j}" for j in range(1, x + 2)]
    students = [Student(i[0], "L", SINCERE, CON, (l[0], l[x - 1]))]
    for j in range(1, x):
        students.append(Student(i[j], "L", SOPH, UNC, (l[j], l[j - 1])))
    students.append(Student(i[x], "L", SOPH, UNC, (l[x - 1], "r1")))
    priorities = {l[j]: [i[j + 1], i[j]] for j in range(x - 1)}
    priorities[l[x - 1]] = [i[0], i[x], i[x - 1]]
    priorities["r1"] = [i[x]]
    districts = {s: ("L" if s.startswith("l") else "R") for s in priorities}
    return _problem(students, priorities, districts, {"L": Mechanism(left), "R": Mechanism(right)}, mode)


def build_fixture(
    name: str,
    x: int = 2,
    left: Mechanism = Mechanism.BM,
    right: Mechanism = Mechanism.BM,
    mode: Mode = Mode.NAIVE,
) -> Problem:
    """Build a fixture by name: ``sec31``, ``sec41`` or ``cycle`` (with ``x``).

    ``sec31`` always uses L=DA, R=BM; ``left``/``right`` apply to the others.
    A name like ``cycle4`` is accepted as shorthand for ``cycle`` with x=4.
    """
    if name == "sec31":
        return sophistication_example(mode)
    if name == "sec41":
        return mechanism_example(left, right, mode)
    if name.startswith("cycle"):
        suffix = name[len("cycle"):].lstrip(":(").rstrip(")")
        return cycle_example(int(suffix) if suffix else x, left, right, mode)
    raise ValueError(f"unknown fixture {name!r}")
