import itertools

import numpy as np
import pytest

from district_match import equilibrium as eqm
from district_match.behavior import Strategy, strategy_space
from district_match.equilibrium import (
    BudgetExceeded,
    ProfileError,
    Refinement,
    SetConstraint,
    SetMechanism,
    SetSophistication,
    Verdict,
    compare_worlds,
    dominated_mask,
    enumerate_equilibria,
    evaluate_profile,
    is_nash,
    prefers,
    strategic_players,
    worker_count,
)
from district_match.lab.fixtures import build_fixture
from district_match.model import Constraint, Mechanism, Mode, Problem, School, Sophistication, Student

S = Strategy
DA, BM = Mechanism.DA, Mechanism.BM


def sec41(left=DA, right=BM, mode=Mode.NAIVE):
    return build_fixture("sec41", left=left, right=right, mode=mode)


def test_evaluate_profile_examples():
    p = sec41()
    m = evaluate_profile(p, {"i2": S("L", ("l2", "l1")), "i3": S("R", ("r1",))})
    assert m.as_dict() == {"i1": "l1", "i2": "l2", "i3": "r1"}
    m = evaluate_profile(p, {"i2": S("L", ("l2", "l1")), "i3": S("L", ("l2",))})
    assert m.as_dict() == {"i1": "l2", "i2": "l1", "i3": None}


def test_evaluate_profile_without_players():
    p = sec41()
    sincere = Problem(
        tuple(s.__class__(**{**s.__dict__, "sophistication": Sophistication.SINCERE,
                             "constraint": Constraint.CONSTRAINED}) for s in p.students),
        p.schools, p.mechanisms,
    )
    assert strategic_players(sincere) == ()
    assert evaluate_profile(sincere, {}).as_dict() == {"i1": "l2", "i2": "l1", "i3": None}
    assert is_nash(sincere, {})
    eq = enumerate_equilibria(sincere)
    assert eq.profiles == [{}] and len(eq.outcomes) == 1


def test_profile_coverage_errors():
    p = sec41()
    with pytest.raises(ProfileError, match="i3"):
        evaluate_profile(p, {"i2": S("L", ("l2",))})
    with pytest.raises(ProfileError, match="i1"):
        evaluate_profile(p, {"i1": S("L", ()), "i2": S("L", ()), "i3": S("L", ())})


def test_is_nash_examples():
    p = sec41()
    assert is_nash(p, {"i2": S("L", ("l2", "l1")), "i3": S("R", ("r1",))}).is_nash
    check = is_nash(p, {"i2": S("L", ("l1",)), "i3": S("R", ("r1",))})
    assert not check.is_nash
    w = check.witness
    assert (w.student, w.strategy, w.current, w.improved) == ("i2", S("L", ("l2", "l1")), "l1", "l2")


def test_mechanism_example_unique_outcomes():
    for right in (BM, DA):
        for mode in Mode:
            eq = enumerate_equilibria(sec41(BM, right, mode))
            assert [m.as_dict() for m in eq.outcomes] == [{"i1": None, "i2": "l1", "i3": "l2"}]
            eq = enumerate_equilibria(sec41(DA, right, mode))
            assert [m.as_dict() for m in eq.outcomes] == [{"i1": "l1", "i2": "l2", "i3": "r1"}]


def test_one_player_one_school():
    p = Problem(
        (Student("a", "L", Sophistication.SOPHISTICATED, Constraint.CONSTRAINED, ("s",)),),
        (School("s", "L", 1, ("a",)),),
        {"L": DA, "R": BM},
    )
    eq = enumerate_equilibria(p)
    assert eq.profiles == [{"a": S("L", ("s",))}]
    assert [m.as_dict() for m in eq.outcomes] == [{"a": "s"}]
    assert eq.scanned == 2


def _brute_equilibria(p):
    players = strategic_players(p)
    spaces = [strategy_space(p.student[i], p) for i in players]
    return [dict(zip(players, combo)) for combo in itertools.product(*spaces)
            if is_nash(p, dict(zip(players, combo)))]


@pytest.mark.parametrize("name,left,mode", [
    ("sec31", DA, Mode.NAIVE), ("sec31", DA, Mode.DISTRICT_STRATEGIC),
    ("sec41", BM, Mode.NAIVE), ("sec41", DA, Mode.DISTRICT_STRATEGIC),
    ("cycle3", BM, Mode.NAIVE), ("cycle3", DA, Mode.NAIVE),
])
def test_enumeration_matches_is_nash_oracle(name, left, mode):
    p = build_fixture(name, left=left, mode=mode)
    eq = enumerate_equilibria(p)
    assert eq.profiles == _brute_equilibria(p)
    assert all(is_nash(p, prof) for prof in eq.profiles)
    assert len(set(eq.outcomes)) == len(eq.outcomes)
    for prof, m in zip(eq.profiles, eq.outcomes):
        assert evaluate_profile(p, prof) in eq.outcomes


def test_budget():
    p = build_fixture("sec31")
    size = enumerate_equilibria(p).scanned
    with pytest.raises(BudgetExceeded) as exc:
        enumerate_equilibria(p, budget=size - 1)
    assert exc.value.size == size and str(size) in str(exc.value)


def test_parallel_matches_serial(monkeypatch):
    p = build_fixture("cycle4", left=DA)
    serial = enumerate_equilibria(p, workers=1)
    monkeypatch.setattr(eqm, "_PARALLEL_THRESHOLD", 0)
    parallel = enumerate_equilibria(p, workers=2)
    assert parallel.profiles == serial.profiles and parallel.outcomes == serial.outcomes


def test_worker_cap_from_environment(monkeypatch):
    monkeypatch.setenv(eqm.THREADS_ENV, "1")
    assert worker_count(8) == 1
    monkeypatch.delenv(eqm.THREADS_ENV)
    assert worker_count(3) == 3


def test_report_document():
    eq = enumerate_equilibria(sec41())
    doc = eq.to_report()
    assert doc["strategy_space_sizes"] == {"i2": 5, "i3": 3}
    assert doc["profiles_scanned"] == 15
    assert doc["outcomes"] == [{"i1": "l1", "i2": "l2", "i3": "r1"}]
    assert doc["profiles"][0]["i3"] == {"district": "R", "rol": ["r1"]}


def test_prefers_examples():
    p = build_fixture("sec31")
    assert prefers(p, "i3", SetSophistication("i2", Sophistication.SOPHISTICATED)) is Verdict.YES
    assert prefers(sec41(BM), "i2", SetMechanism("L", DA)) is Verdict.YES
    assert prefers(p, "i3", SetMechanism("L", DA)) is Verdict.NO
    assert prefers(p, "i3", SetMechanism("L", DA), strict=False) is Verdict.YES
    for q in (p, sec41(BM), build_fixture("cycle4")):
        assert prefers(q, q.students[0].id, SetMechanism("L", q.mechanisms["L"])) is Verdict.NO


@pytest.mark.parametrize("p,i,t", [
    (build_fixture("sec31"), "i3", SetSophistication("i2", Sophistication.SOPHISTICATED)),
    (sec41(BM), "i2", SetMechanism("L", DA)),
    (build_fixture("cycle3", left=BM), "i2", SetMechanism("L", DA)),
])
def test_prefers_antisymmetric_under_inverse(p, i, t):
    assert prefers(p, i, t, refinement=Refinement.UNDOMINATED) is Verdict.YES
    assert prefers(t.apply(p), i, t.inverse(p), refinement=Refinement.UNDOMINATED) is Verdict.NO


def test_mode_invariance_on_fixtures():
    for name, left in (("sec31", DA), ("sec41", BM), ("sec41", DA), ("cycle3", BM)):
        a = enumerate_equilibria(build_fixture(name, left=left, mode=Mode.NAIVE)).outcomes
        b = enumerate_equilibria(build_fixture(name, left=left, mode=Mode.DISTRICT_STRATEGIC)).outcomes
        assert set(a) == set(b)


def test_transforms_validate_targets():
    p = sec41()
    with pytest.raises(KeyError):
        SetMechanism("Z", DA).apply(p)
    with pytest.raises(KeyError):
        SetConstraint("zz", Constraint.CONSTRAINED).apply(p)
    assert SetConstraint("i2", Constraint.UNCONSTRAINED).inverse(p) == SetConstraint("i2", Constraint.CONSTRAINED)


def test_cycle_with_da_has_a_second_plain_equilibrium_outcome():
    # with x >= 3 and L=DA the sophisticated chain can coordinate on the shifted seats,
    # using weakly dominated lists; the undominated refinement removes it
    p = build_fixture("cycle3", left=DA)
    outcomes = {tuple(sorted(m.as_dict().items(), key=str)) for m in enumerate_equilibria(p).outcomes}
    assert len(outcomes) == 2
    shifted = {"i1": "l3", "i2": "l1", "i3": "l2", "i4": "r1"}
    assert tuple(sorted(shifted.items())) in outcomes
    refined = enumerate_equilibria(p, refinement=Refinement.UNDOMINATED).outcomes
    assert [m.as_dict() for m in refined] == [{"i1": "l1", "i2": "l2", "i3": "l3", "i4": "r1"}]
    report = compare_worlds(build_fixture("cycle3", left=BM), "i2", SetMechanism("L", DA))
    assert report.verdict is Verdict.NO and report.mixed


def test_dominated_mask():
    util = np.array([[1, 1], [0, 1], [2, 0]])  # rows: player 0 strategies
    assert dominated_mask(util, 0).tolist() == [False, True, False]
    assert dominated_mask(util.T, 1).tolist() == [False, True, False]


def test_no_pure_equilibrium_gives_undefined(monkeypatch):
    p = sec41()
    empty = eqm.EquilibriumSet((), (), [], [], 0, 0.0)
    monkeypatch.setattr(eqm, "enumerate_equilibria", lambda *a, **k: empty)
    report = compare_worlds(p, "i2", SetMechanism("L", BM))
    assert report.verdict is Verdict.UNDEFINED
    assert report.baseline == () and report.counterfactual == () and not report.mixed
