"""Pure-strategy Nash equilibria of the student game and counterfactual predicates."""
from __future__ import annotations

import enum
import itertools
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .behavior import Role, Strategy, fixed_strategy, role, sincere_rol, strategy_space
from .mechanisms import run_district, run_multi_district
from .model import (
    Assignment,
    Constraint,
    DistrictId,
    Matching,
    Mechanism,
    Problem,
    Sophistication,
    StudentId,
)

DEFAULT_BUDGET = 1_000_000
THREADS_ENV = "DISTRICT_MATCH_THREADS"
# below this many profiles a process pool costs more than it saves
_PARALLEL_THRESHOLD = 50_000

Profile = Mapping[StudentId, Strategy]


class BudgetExceeded(RuntimeError):
    def __init__(self, size: int, budget: int):
        super().__init__(f"strategy profile space has {size} profiles, budget is {budget}")
        self.size = size
        self.budget = budget


class ProfileError(ValueError):
    pass


def worker_count(requested: Optional[int] = None) -> int:
    cap = os.environ.get(THREADS_ENV)
    n = requested if requested is not None else (os.cpu_count() or 1)
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


def strategic_players(p: Problem) -> Tuple[StudentId, ...]:
    return tuple(s.id for s in p.students if role(s, p.mode) is not Role.FIXED)


def _enrollments(p: Problem, profile: Profile) -> dict[StudentId, Strategy]:
    players = set(strategic_players(p))
    missing = sorted(players - set(profile))
    extra = sorted(set(profile) - players)
    if missing or extra:
        raise ProfileError(f"profile must cover exactly the strategic players; missing={missing} extra={extra}")
    out: dict[StudentId, Strategy] = {}
    for st in p.students:
        out[st.id] = Strategy(*profile[st.id]) if st.id in players else fixed_strategy(st, p)
    return out


def evaluate_profile(p: Problem, profile: Profile) -> Matching:
    """Matching produced when strategic players follow ``profile`` and everyone else behaves sincerely."""
    return run_multi_district(p, _enrollments(p, profile))


@dataclass(frozen=True)
class Deviation:
    student: StudentId
    strategy: Strategy
    current: Assignment
    improved: Assignment


@dataclass(frozen=True)
class NashCheck:
    is_nash: bool
    witness: Optional[Deviation] = None

    def __bool__(self) -> bool:
        return self.is_nash


def is_nash(p: Problem, profile: Profile) -> NashCheck:
    """Check every unilateral deviation of every strategic player.

    The witness is a best response of the first player (in student order)
    who can improve; among tied best responses the truthful ROL for that
    district is preferred, otherwise the earliest in strategy order.
    """
    base = evaluate_profile(p, profile)
    for sid in strategic_players(p):
        st = p.student[sid]
        current = base[sid]
        u_now = st.utility(current)
        best: Optional[Tuple[int, bool, Strategy, Assignment]] = None
        for alt in strategy_space(st, p):
            if alt == tuple(profile[sid]):
                continue
            got = evaluate_profile(p, {**profile, sid: alt})[sid]
            u = st.utility(got)
            if u <= u_now:
                continue
            truthful = not alt.abstains and alt.rol == sincere_rol(st, alt.district, p)
            if best is None or (u, truthful) > (best[0], best[1]):
                best = (u, truthful, alt, got)
        if best is not None:
            return NashCheck(False, Deviation(sid, best[2], current, best[3]))
    return NashCheck(True)


@dataclass
class EquilibriumSet:
    players: Tuple[StudentId, ...]
    space_sizes: Tuple[int, ...]
    profiles: list[dict[StudentId, Strategy]]
    outcomes: list[Matching]
    scanned: int
    wall_time: float

    def to_report(self) -> dict:
        return {
            "players": list(self.players),
            "strategy_space_sizes": dict(zip(self.players, self.space_sizes)),
            "profiles": [
                {sid: {"district": s.district, "rol": list(s.rol)} for sid, s in prof.items()}
                for prof in self.profiles
            ],
            "outcomes": [m.as_dict() for m in self.outcomes],
            "profiles_scanned": self.scanned,
            "wall_time_s": round(self.wall_time, 6),
        }


class _Game:
    """Flattened game: per-profile utilities of every strategic player."""

    def __init__(self, p: Problem):
        self.p = p
        self.players = strategic_players(p)
        self.spaces = tuple(strategy_space(p.student[sid], p) for sid in self.players)
        self.sizes = tuple(len(s) for s in self.spaces)
        self.fixed: dict[DistrictId, dict[StudentId, tuple]] = {d: {} for d in p.districts}
        for st in p.students:
            if st.id not in self.players:
                s = fixed_strategy(st, p)
                if s.rol:
                    self.fixed[s.district][st.id] = s.rol
        self._cache: dict[tuple, dict[StudentId, Assignment]] = {}

    @property
    def size(self) -> int:
        return math.prod(self.sizes)

    def assignments(self, idx: Sequence[int]) -> dict[StudentId, Assignment]:
        chosen = [self.spaces[j][k] for j, k in enumerate(idx)]
        out: dict[StudentId, Assignment] = {}
        for d in self.p.districts:
            key = (d,) + tuple(
                (j, idx[j]) for j, s in enumerate(chosen) if s.rol and s.district == d
            )
            res = self._cache.get(key)
            if res is None:
                rols = dict(self.fixed[d])
                for j, _ in key[1:]:
                    rols[self.players[j]] = chosen[j].rol
                res = run_district(self.p, d, rols) if rols else {}
                self._cache[key] = res
            out.update(res)
        return out

    def utilities(self, start: int, stop: int) -> np.ndarray:
        out = np.empty((stop - start, len(self.players)), dtype=np.int64)
        students = [self.p.student[sid] for sid in self.players]
        for row, flat in enumerate(range(start, stop)):
            got = self.assignments(np.unravel_index(flat, self.sizes))
            for j, st in enumerate(students):
                out[row, j] = st.utility(got.get(st.id))
        return out

    def profile(self, idx: Sequence[int]) -> dict[StudentId, Strategy]:
        return {sid: self.spaces[j][k] for j, (sid, k) in enumerate(zip(self.players, idx))}


def _chunk_worker(args: tuple[Problem, int, int]) -> np.ndarray:
    p, start, stop = args
    return _Game(p).utilities(start, stop)


class Refinement(str, enum.Enum):
    NONE = "none"
    #: keep only equilibria where no player uses a weakly dominated strategy
    UNDOMINATED = "undominated"


def dominated_mask(util: np.ndarray, axis: int) -> np.ndarray:
    """Strategies of player ``axis`` weakly dominated by some other strategy."""
    u = np.moveaxis(util, axis, 0).reshape(util.shape[axis], -1)
    ge = (u[None, :, :] >= u[:, None, :]).all(axis=2)  # ge[a, b]: b >= a everywhere
    gt = (u[None, :, :] > u[:, None, :]).any(axis=2)
    return (ge & gt).any(axis=1)


def enumerate_equilibria(
    p: Problem,
    budget: int = DEFAULT_BUDGET,
    workers: Optional[int] = None,
    refinement: Refinement = Refinement.NONE,
) -> EquilibriumSet:
    """Exhaustively scan the strategy profile space for pure Nash equilibria.

    Profiles are reported in lexicographic order of strategy indices, players
    taken in student order. Raises :class:`BudgetExceeded` before scanning if
    the product space is larger than ``budget``.

    With ``refinement=UNDOMINATED`` an equilibrium survives only if every
    player's strategy is undominated in the full game. Every weakly
    dominated strategy is dominated by an undominated one, so these are also
    the equilibria of the game restricted to undominated strategies.
    """
    t0 = time.perf_counter()
    game = _Game(p)
    total = game.size
    if total > budget:
        raise BudgetExceeded(total, budget)
    if not game.players:
        m = run_multi_district(p, _enrollments(p, {}))
        return EquilibriumSet((), (), [{}], [m], 1, time.perf_counter() - t0)

    nw = worker_count(workers)
    if nw > 1 and total >= _PARALLEL_THRESHOLD:
        bounds = np.linspace(0, total, nw * 4 + 1, dtype=np.int64)
        jobs = [(p, int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
        with ProcessPoolExecutor(max_workers=nw) as pool:
            flat = np.concatenate(list(pool.map(_chunk_worker, jobs)))
    else:
        flat = game.utilities(0, total)
    util = flat.reshape(game.sizes + (len(game.players),))

    nash = np.ones(game.sizes, dtype=bool)
    for j in range(len(game.players)):
        u = util[..., j]
        nash &= u == u.max(axis=j, keepdims=True)
    if Refinement(refinement) is Refinement.UNDOMINATED:
        for j in range(len(game.players)):
            keep = ~dominated_mask(util[..., j], j)
            shape = [1] * len(game.sizes)
            shape[j] = -1
            nash &= keep.reshape(shape)

    profiles, outcomes = [], []
    seen: set[Matching] = set()
    for idx in np.argwhere(nash):
        idx = tuple(int(x) for x in idx)
        prof = game.profile(idx)
        got = game.assignments(idx)
        m = Matching(tuple((s.id, got.get(s.id)) for s in p.students))
        profiles.append(prof)
        if m not in seen:
            seen.add(m)
            outcomes.append(m)
    return EquilibriumSet(game.players, game.sizes, profiles, outcomes, total, time.perf_counter() - t0)


@dataclass(frozen=True)
class SetSophistication:
    student: StudentId
    value: Sophistication

    def apply(self, p: Problem) -> Problem:
        return _replace_student(p, self.student, sophistication=Sophistication(self.value))

    def inverse(self, p: Problem) -> "SetSophistication":
        return SetSophistication(self.student, p.student[self.student].sophistication)


@dataclass(frozen=True)
class SetConstraint:
    student: StudentId
    value: Constraint

    def apply(self, p: Problem) -> Problem:
        return _replace_student(p, self.student, constraint=Constraint(self.value))

    def inverse(self, p: Problem) -> "SetConstraint":
        return SetConstraint(self.student, p.student[self.student].constraint)


@dataclass(frozen=True)
class SetMechanism:
    district: DistrictId
    value: Mechanism

    def apply(self, p: Problem) -> Problem:
        if self.district not in p.mechanisms:
            raise KeyError(f"unknown district {self.district!r}")
        mechs = dict(p.mechanisms)
        mechs[self.district] = Mechanism(self.value)
        return replace(p, mechanisms=mechs)

    def inverse(self, p: Problem) -> "SetMechanism":
        return SetMechanism(self.district, p.mechanisms[self.district])


Transform = Union[SetSophistication, SetConstraint, SetMechanism]


def _replace_student(p: Problem, sid: StudentId, **changes) -> Problem:
    if sid not in p.student:
        raise KeyError(f"unknown student {sid!r}")
    students = tuple(replace(s, **changes) if s.id == sid else s for s in p.students)
    return replace(p, students=students)


class Verdict(enum.Enum):
    YES = "yes"
    NO = "no"
    UNDEFINED = "undefined"


@dataclass(frozen=True)
class PreferenceReport:
    verdict: Verdict
    baseline: Tuple[Assignment, ...]
    counterfactual: Tuple[Assignment, ...]
    #: some outcome pairs favour the counterfactual and some do not
    mixed: bool


def compare_worlds(
    p: Problem,
    student: StudentId,
    t: Transform,
    strict: bool = True,
    budget: int = DEFAULT_BUDGET,
    refinement: Refinement = Refinement.NONE,
) -> PreferenceReport:
    """Compare ``student``'s equilibrium assignments in ``p`` and in ``t.apply(p)``."""
    q = t.apply(p)
    st = p.student[student]
    base = tuple(m[student] for m in enumerate_equilibria(p, budget, refinement=refinement).outcomes)
    cf = tuple(m[student] for m in enumerate_equilibria(q, budget, refinement=refinement).outcomes)
    if not base or not cf:
        return PreferenceReport(Verdict.UNDEFINED, base, cf, False)
    better = [st.utility(c) > st.utility(b) for b, c in itertools.product(base, cf)]
    weak = [st.utility(c) >= st.utility(b) for b, c in itertools.product(base, cf)]
    ok = all(better) if strict else all(weak)
    verdict = Verdict.YES if ok else Verdict.NO
    return PreferenceReport(verdict, base, cf, any(better) and not all(better))


def prefers(
    p: Problem,
    student: StudentId,
    t: Transform,
    strict: bool = True,
    budget: int = DEFAULT_BUDGET,
    refinement: Refinement = Refinement.NONE,
) -> Verdict:
    """Does ``student`` prefer every equilibrium of ``t.apply(p)`` to every equilibrium of ``p``?"""
    return compare_worlds(p, student, t, strict, budget, refinement).verdict
