"""Seeded Monte Carlo experiments over random markets.

Two modes:

* count mode runs a detector on every sampled market, confirms each hit
  with the equilibrium solver and compares the mean hit count with the
  exact expected count;
* fixed-tuple mode tests the selected condition groups on the first
  students of each market (``i1``, ``i2``, ...) and compares the empirical
  frequency with the closed-form probability.

Every trial gets its own market seed derived from the master seed, ``n``
and the trial index, so rows can be recomputed independently and in any
order. Reports are CSV with a fixed header; every row carries the full
experiment spec so a report can be regenerated from itself.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np

from .equilibrium import DEFAULT_BUDGET, Refinement, worker_count
from .lab.confirm import Confirmation, confirm_tuple
from .lab.probability import CANONICAL_K, category_probability, expected_count, tuple_probability
from .lab.witness import PARTS, Theorem, detect, fixed_tuple_holds
from .market import UNIFORM_WEIGHTS, MarketParams, sample_market
from .model import Mechanism, Mode

COLUMNS = (
    "row", "theorem", "mode", "mechanisms", "k", "weights", "location_prob", "parts", "refinement",
    "seed", "n", "trial", "trial_seed", "hits", "confirmed", "refuted", "holds",
    "trials", "mean", "se", "mean_confirmed", "analytic", "se_analytic", "z",
)
TUPLE_COLUMNS = ("trial_seed", "theorem", "n", "trial", "students", "schools", "confirmed")
COUNT = "count"
_PART_ORDER = ("category", "preferences", "priorities")


class ExperimentSpecError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentSpec:
    theorem: Theorem
    ns: Tuple[int, ...]
    trials: int
    seed: int = 0
    k: Optional[int] = None
    mechanisms: Mapping[str, Mechanism] = field(
        default_factory=lambda: {"L": Mechanism.DA, "R": Mechanism.BM}, hash=False
    )
    mode: Mode = Mode.NAIVE
    weights: Tuple[float, ...] = UNIFORM_WEIGHTS
    location_prob: float = 0.5
    #: condition groups checked on the first students; empty means count mode
    fixed_parts: Tuple[str, ...] = ()
    confirm: bool = True
    refinement: Refinement = Refinement.NONE
    budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        object.__setattr__(self, "theorem", Theorem(self.theorem))
        object.__setattr__(self, "ns", tuple(int(n) for n in self.ns))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "mechanisms", {d: Mechanism(m) for d, m in self.mechanisms.items()})
        if self.k is None:
            object.__setattr__(self, "k", CANONICAL_K[self.theorem])
        if self.trials < 1:
            raise ExperimentSpecError(f"trials must be at least 1, got {self.trials}")
        if not self.ns:
            raise ExperimentSpecError("need at least one market size")
        unknown = set(self.fixed_parts) - PARTS
        if unknown:
            raise ExperimentSpecError(f"unknown condition groups: {sorted(unknown)}")
        parts = tuple(p for p in _PART_ORDER if p in self.fixed_parts)
        if "priorities" in parts and "preferences" not in parts:
            raise ExperimentSpecError("priority conditions are only defined together with preferences")
        object.__setattr__(self, "fixed_parts", parts)
        for n in self.ns:
            # validates k against n, weights and location probability
            MarketParams(n, self.k, 0, self.weights, self.location_prob, self.mode)

    @property
    def fixed(self) -> bool:
        return bool(self.fixed_parts)


def trial_seed(seed: int, n: int, trial: int) -> int:
    """64-bit market seed for one (n, trial) cell."""
    ss = np.random.SeedSequence(seed, spawn_key=(n, trial))
    return int(ss.generate_state(1, np.uint64)[0])


def analytic_probability(spec: ExperimentSpec, n: int) -> float:
    """Probability that the first students satisfy the selected groups."""
    tp = tuple_probability(spec.theorem, n, spec.weights, spec.k, spec.location_prob, mode=spec.mode)
    value = 1.0
    if "category" in spec.fixed_parts:
        value *= category_probability(spec.theorem, spec.weights, exact=True, mode=spec.mode)
    if "preferences" in spec.fixed_parts:
        value *= tp.preferences
    if "priorities" in spec.fixed_parts:
        value *= tp.priority
    return value


@dataclass(frozen=True)
class TrialResult:
    n: int
    trial: int
    trial_seed: int
    hits: int = 0
    confirmed: int = 0
    refuted: int = 0
    holds: Optional[bool] = None
    tuples: Tuple[Tuple[str, str, bool], ...] = ()


def run_trial(spec: ExperimentSpec, n: int, trial: int) -> TrialResult:
    ts = trial_seed(spec.seed, n, trial)
    params = MarketParams(n, spec.k, ts, spec.weights, spec.location_prob, spec.mode)
    p = sample_market(params, spec.mechanisms)
    if spec.fixed:
        return TrialResult(n, trial, ts, holds=fixed_tuple_holds(p, spec.theorem, spec.fixed_parts))
    hits = detect(p, spec.theorem)
    confirmed = refuted = 0
    tuples = []
    for w in hits:
        ok = None
        if spec.confirm:
            ok = confirm_tuple(p, w, spec.budget, spec.refinement) is Confirmation.CONFIRMED
            confirmed += ok
            refuted += not ok
        tuples.append((" ".join(w.students), " ".join(f"{r}={s}" for r, s in w.schools), ok))
    return TrialResult(n, trial, ts, len(hits), confirmed, refuted, None, tuple(tuples))


def _trial_job(args):
    return run_trial(*args)


def run_trials(spec: ExperimentSpec, workers: Optional[int] = None) -> list[TrialResult]:
    """All trials, ordered by (n, trial index) whatever the completion order."""
    jobs = [(spec, n, t) for n in spec.ns for t in range(spec.trials)]
    nw = worker_count(workers)
    if nw > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=nw) as pool:
            return list(pool.map(_trial_job, jobs, chunksize=max(1, len(jobs) // (nw * 8))))
    return [run_trial(*j) for j in jobs]


@dataclass(frozen=True)
class Aggregate:
    n: int
    trials: int
    mean: float
    se: float
    mean_confirmed: Optional[float]
    analytic: float
    se_analytic: float

    @property
    def z(self) -> Optional[float]:
        """Deviation of the mean from the analytic value, in analytic standard errors."""
        if self.se_analytic > 0:
            return (self.mean - self.analytic) / self.se_analytic
        return None


def aggregate(spec: ExperimentSpec, results: Sequence[TrialResult]) -> list[Aggregate]:
    out = []
    for n in spec.ns:
        rows = [r for r in results if r.n == n]
        m = len(rows)
        if spec.fixed:
            x = np.array([float(r.holds) for r in rows])
            analytic = analytic_probability(spec, n)
            se_analytic = math.sqrt(analytic * (1 - analytic) / m)
            mean_confirmed = None
        else:
            x = np.array([float(r.hits) for r in rows])
            analytic = expected_count(spec.theorem, n, spec.weights, spec.k, spec.location_prob, spec.mode)
            # hit counts are not binomial; use the Poisson-like scale of the expectation
            se_analytic = math.sqrt(analytic / m)
            mean_confirmed = float(np.mean([r.confirmed for r in rows])) if spec.confirm else None
        se = float(x.std(ddof=1) / math.sqrt(m)) if m > 1 else 0.0
        out.append(Aggregate(n, m, float(x.mean()), se, mean_confirmed, analytic, se_analytic))
    return out


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _spec_cells(spec: ExperimentSpec) -> dict:
    return {
        "theorem": spec.theorem.value,
        "mode": spec.mode.value,
        "mechanisms": ";".join(f"{d}={m.value}" for d, m in sorted(spec.mechanisms.items())),
        "k": spec.k,
        "weights": " ".join(repr(w) for w in spec.weights),
        "location_prob": spec.location_prob,
        "parts": "+".join(spec.fixed_parts) or COUNT,
        "refinement": spec.refinement.value if spec.confirm else "off",
        "seed": spec.seed,
    }


def report_rows(spec: ExperimentSpec, results: Sequence[TrialResult]) -> list[dict]:
    base = _spec_cells(spec)
    rows = []
    for r in results:
        row = dict(base, row="trial", n=r.n, trial=r.trial, trial_seed=r.trial_seed)
        if spec.fixed:
            row["holds"] = r.holds
        else:
            row.update(hits=r.hits)
            if spec.confirm:
                row.update(confirmed=r.confirmed, refuted=r.refuted)
        rows.append(row)
    for a in aggregate(spec, results):
        rows.append(dict(
            base, row="aggregate", n=a.n, trials=a.trials, mean=a.mean, se=a.se,
            mean_confirmed=a.mean_confirmed, analytic=a.analytic, se_analytic=a.se_analytic, z=a.z,
        ))
    return rows


def write_csv(rows: Iterable[dict], columns: Sequence[str] = COLUMNS) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row.get(c)) for c in columns])
    return buf.getvalue()


def tuple_rows(spec: ExperimentSpec, results: Sequence[TrialResult]) -> list[dict]:
    return [
        {"trial_seed": r.trial_seed, "theorem": spec.theorem.value, "n": r.n, "trial": r.trial,
         "students": students, "schools": schools, "confirmed": ok}
        for r in results for students, schools, ok in r.tuples
    ]


@dataclass
class ExperimentReport:
    spec: ExperimentSpec
    results: list[TrialResult]

    @property
    def aggregates(self) -> list[Aggregate]:
        return aggregate(self.spec, self.results)

    def csv(self) -> str:
        return write_csv(report_rows(self.spec, self.results))

    def tuples_csv(self) -> str:
        return write_csv(tuple_rows(self.spec, self.results), TUPLE_COLUMNS)


def run_experiment(spec: ExperimentSpec, workers: Optional[int] = None) -> ExperimentReport:
    return ExperimentReport(spec, run_trials(spec, workers))


def spec_from_csv(text: str, budget: int = DEFAULT_BUDGET) -> ExperimentSpec:
    """Rebuild the experiment settings embedded in a report (for replay audits)."""
    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows:
        raise ExperimentSpecError("empty report")
    first = rows[0]
    aggs = [r for r in rows if r["row"] == "aggregate"]
    if not aggs:
        raise ExperimentSpecError("report has no aggregate rows")
    parts = () if first["parts"] == COUNT else tuple(first["parts"].split("+"))
    confirm = first["refinement"] != "off"
    return ExperimentSpec(
        theorem=Theorem(first["theorem"]),
        ns=tuple(int(r["n"]) for r in aggs),
        trials=int(aggs[0]["trials"]),
        seed=int(first["seed"]),
        k=int(first["k"]),
        mechanisms=dict(x.split("=") for x in first["mechanisms"].split(";")),
        mode=Mode(first["mode"]),
        weights=tuple(float(w) for w in first["weights"].split()),
        location_prob=float(first["location_prob"]),
        fixed_parts=parts,
        confirm=confirm,
        refinement=Refinement(first["refinement"]) if confirm else Refinement.NONE,
        budget=budget,
    )
