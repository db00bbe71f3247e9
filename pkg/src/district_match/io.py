"""JSON problem files and report serialization."""
from __future__ import annotations

import json
import re
from pathlib import Path
from typing import Any, Union

from .model import Constraint, Mechanism, Mode, Problem, School, Sophistication, Student


class ProblemFormatError(ValueError):
    """The document is not a well-formed problem file."""


_MODES = {"naive": Mode.NAIVE, "district_strategic": Mode.DISTRICT_STRATEGIC, "strategic": Mode.DISTRICT_STRATEGIC}


def parse_mode(value: str) -> Mode:
    try:
        return _MODES[value]
    except KeyError:
        raise ProblemFormatError(f"unknown mode {value!r}; expected naive or district_strategic") from None


def id_sort_key(x: str) -> tuple:
    return tuple(int(part) if part.isdigit() else part for part in re.split(r"(\d+)", x))


def problem_from_dict(doc: dict[str, Any]) -> Problem:
    """Build a :class:`Problem` from the file schema.

    A school's priority may name only some students; the rest are appended
    in ascending id order (digit runs compare as numbers, so ``i2 < i10``).
    """
    try:
        mechanisms = {d["label"]: Mechanism(d["mechanism"]) for d in doc["districts"]}
        students = tuple(
            Student(
                id=str(s["id"]),
                residence=s["residence"],
                sophistication=Sophistication(s["sophistication"]),
                constraint=Constraint(s["constraint"]),
                preferences=tuple(s.get("preferences", ())),
            )
            for s in doc["students"]
        )
        order = sorted((s.id for s in students), key=id_sort_key)
        schools = []
        for s in doc["schools"]:
            named = [str(x) for x in s.get("priority", ())]
            named_set = set(named)
            schools.append(
                School(
                    id=str(s["id"]),
                    district=s["district"],
                    capacity=s.get("capacity", 1),
                    priority=tuple(named + [x for x in order if x not in named_set]),
                )
            )
        mode = parse_mode(doc.get("mode", "naive"))
    except (KeyError, TypeError) as exc:
        raise ProblemFormatError(f"malformed problem document: missing or bad field {exc}") from exc
    except ValueError as exc:
        raise ProblemFormatError(f"malformed problem document: {exc}") from exc
    return Problem(students=students, schools=tuple(schools), mechanisms=mechanisms, mode=mode)


def problem_to_dict(p: Problem) -> dict[str, Any]:
    return {
        "districts": [{"label": d, "mechanism": m.value} for d, m in p.mechanisms.items()],
        "schools": [
            {"id": s.id, "district": s.district, "capacity": s.capacity, "priority": list(s.priority)}
            for s in p.schools
        ],
        "students": [
            {
                "id": s.id,
                "residence": s.residence,
                "sophistication": s.sophistication.value,
                "constraint": s.constraint.value,
                "preferences": list(s.preferences),
            }
            for s in p.students
        ],
        "mode": p.mode.value,
    }


def load_problem(path: Union[str, Path]) -> Problem:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ProblemFormatError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ProblemFormatError(f"{path}: top level must be an object")
    return problem_from_dict(doc)


def dumps(doc: Any) -> str:
    return json.dumps(doc, indent=2) + "\n"


def save_problem(p: Problem, path: Union[str, Path]) -> None:
    Path(path).write_text(dumps(problem_to_dict(p)))
