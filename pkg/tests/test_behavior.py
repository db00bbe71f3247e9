from dataclasses import replace
from math import factorial

import pytest
from hypothesis import given, strategies as st

from district_match.behavior import (
    Role,
    Strategy,
    allowed_districts,
    fixed_strategy,
    naive_district_choice,
    role,
    sincere_rol,
    strategy_space,
)
from district_match.lab.fixtures import build_fixture
from district_match.model import Constraint, Mechanism, Mode, Problem, School, Sophistication, Student

SINC, SOPH = Sophistication.SINCERE, Sophistication.SOPHISTICATED
CON, UNC = Constraint.CONSTRAINED, Constraint.UNCONSTRAINED


def test_roles():
    for mode in Mode:
        assert role(Student("a", "L", SINC, CON, ()), mode) is Role.FIXED
        assert role(Student("a", "L", SOPH, CON, ()), mode) is Role.FULL
        assert role(Student("a", "L", SOPH, UNC, ()), mode) is Role.FULL
    assert role(Student("a", "L", SINC, UNC, ()), Mode.NAIVE) is Role.FIXED
    assert role(Student("a", "L", SINC, UNC, ()), Mode.DISTRICT_STRATEGIC) is Role.DISTRICT_ONLY


def test_sincere_rol_examples():
    p = build_fixture("sec31")
    i2 = p.student["i2"]
    assert sincere_rol(i2, "L", p) == ("l1", "l2")
    assert sincere_rol(i2, "R", p) == ("r2", "r1")
    assert sincere_rol(replace(i2, preferences=()), "L", p) == ()


def test_naive_district_choice():
    p = build_fixture("sec31")
    assert naive_district_choice(p.student["i2"], p) == "L"
    assert naive_district_choice(replace(p.student["i2"], preferences=("r2", "r1")), p) == "R"
    empty = Student("z", "R", SINC, UNC, ())
    assert naive_district_choice(empty, p) == "R"
    assert fixed_strategy(empty, p) == Strategy("R", ())


def test_fixed_strategy_enrolls_where_list_is_empty_as_abstain():
    p = build_fixture("sec41")
    # constrained sincere student whose list is all in the other district submits nothing
    s = Student("z", "L", SINC, CON, ("r1",))
    assert fixed_strategy(s, p) == Strategy("L", ())
    assert fixed_strategy(p.student["i1"], p) == Strategy("L", ("l1", "l2"))


def test_strategy_space_examples():
    p = build_fixture("sec41")
    assert strategy_space(p.student["i3"], p) == (
        Strategy("L", ()), Strategy("L", ("l2",)), Strategy("R", ("r1",)),
    )
    assert strategy_space(p.student["i2"], p) == (
        Strategy("L", ()), Strategy("L", ("l2",)), Strategy("L", ("l1",)),
        Strategy("L", ("l2", "l1")), Strategy("L", ("l1", "l2")),
    )


def test_district_only_space_has_one_strategy_per_district():
    p = build_fixture("sec31", mode=Mode.DISTRICT_STRATEGIC)
    assert strategy_space(p.student["i2"], p) == (Strategy("L", ("l1", "l2")), Strategy("R", ("r2", "r1")))
    lonely = Student("z", "L", SINC, UNC, ("l1",))
    # the empty R list collapses into abstaining
    assert strategy_space(lonely, p) == (Strategy("L", ("l1",)), Strategy("L", ()))


def test_fixed_role_space_is_misuse():
    p = build_fixture("sec41")
    with pytest.raises(ValueError, match="i1"):
        strategy_space(p.student["i1"], p)


def _market(prefs, constraint):
    schools = tuple(School(f"s{j}", "L" if j % 2 == 0 else "R", 1, ("a",)) for j in range(6))
    st_ = Student("a", "L", SOPH, constraint, tuple(prefs))
    return st_, Problem((st_,), schools, {"L": Mechanism.DA, "R": Mechanism.BM})


@given(st.permutations([f"s{j}" for j in range(6)]), st.integers(0, 6))
def test_strategy_space_size_formula(perm, k):
    s, p = _market(perm[:k], CON)
    a = len(sincere_rol(s, "L", p))
    space = strategy_space(s, p)
    assert len(space) == sum(factorial(a) // factorial(a - j) for j in range(a + 1))
    assert len(set(space)) == len(space)
    assert sum(x.abstains for x in space) == 1
    s, p = _market(perm[:k], UNC)
    aL, aR = (len(sincere_rol(s, d, p)) for d in ("L", "R"))
    total = 1 + sum(factorial(a) // factorial(a - j) for a in (aL, aR) for j in range(1, a + 1))
    assert len(strategy_space(s, p)) == total
    assert allowed_districts(s, p) == ("L", "R")


@given(st.permutations([f"s{j}" for j in range(6)]), st.integers(0, 6), st.sampled_from(["L", "R"]))
def test_sincere_rol_is_subsequence(perm, k, d):
    s, p = _market(perm[:k], UNC)
    rol = sincere_rol(s, d, p)
    it = iter(s.preferences)
    assert all(x in it for x in rol)
    assert all(p.district_of(x) == d for x in rol)
