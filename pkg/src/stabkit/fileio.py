"""JSON scenario documents, matrix files, and CSV/JSON report emission.

Matrices travel as JSON arrays of rows of finite doubles; symmetry is
enforced on load by averaging with the transpose, and the asymmetry defect
is reported back to the caller.  Scenario documents are validated strictly:
unknown fields anywhere are rejected.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .discretize import (BOUNDARY_TIP, KELVIN_VOIGT, VISCOUS, DampingKind,
                         Grid1D, ModelSpec, StiffnessKind,
                         boundary_tip_damping, kelvin_voigt_damping,
                         viscous_damping)
from .kalman import coupling_pair, symmetrize

ANALYSES = ("kalman", "spectrum", "resolvent", "decay", "branches")
BRANCH_FAMILIES = ("viscous", "kelvin_voigt", "tip")

__all__ = [
    "SchemaError", "Scenario",
    "load_matrix", "save_matrix", "model_from_dict", "model_to_dict",
    "load_scenario", "scenario_from_dict", "write_csv", "write_json",
]


class SchemaError(ValueError):
    """A document does not match the expected schema."""


def _require_keys(obj: dict, allowed: set[str], required: set[str], where: str) -> None:
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: expected an object")
    unknown = set(obj) - allowed
    if unknown:
        raise SchemaError(f"{where}: unknown field(s) {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise SchemaError(f"{where}: missing field(s) {sorted(missing)}")


def _as_matrix(rows, where: str) -> tuple[np.ndarray, float]:
    try:
        M = np.array(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{where}: not a rectangular array of numbers") from exc
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise SchemaError(f"{where}: expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise SchemaError(f"{where}: non-finite entries")
    return symmetrize(M)


def load_matrix(path) -> tuple[np.ndarray, float]:
    """Load a symmetric matrix from a JSON file; returns (matrix, asymmetry defect)."""
    with open(path, encoding="utf-8") as fh:
        return _as_matrix(json.load(fh), str(path))


def save_matrix(path, M: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([[float(v) for v in row] for row in np.asarray(M)], fh)
        fh.write("\n")


def model_from_dict(doc: dict) -> ModelSpec:
    """Build a ModelSpec from its JSON document form (strict schema)."""
    _require_keys(doc, {"n", "stiffness", "damping", "A", "D"},
                  {"n", "stiffness", "damping", "A", "D"}, "model")
    if not isinstance(doc["n"], int) or doc["n"] < 2:
        raise SchemaError("model.n: expected an integer >= 2")
    grid = Grid1D(n=doc["n"])
    st = doc["stiffness"]
    _require_keys(st, {"variant", "shift"}, {"variant"}, "model.stiffness")
    try:
        stiffness = StiffnessKind(variant=st["variant"], shift=float(st.get("shift", 0.0)))
    except ValueError as exc:
        raise SchemaError(f"model.stiffness: {exc}") from exc
    dmp = doc["damping"]
    _require_keys(dmp, {"variant", "params"}, {"variant"}, "model.damping")
    params = dmp.get("params", {})
    try:
        damping = _damping_from_params(dmp["variant"], params, grid.n)
    except ValueError as exc:
        raise SchemaError(f"model.damping: {exc}") from exc
    A, _ = _as_matrix(doc["A"], "model.A")
    D, _ = _as_matrix(doc["D"], "model.D")
    try:
        pair = coupling_pair(A, D)
        return ModelSpec(grid=grid, stiffness=stiffness, damping=damping, pair=pair)
    except ValueError as exc:
        raise SchemaError(f"model: {exc}") from exc


def _damping_from_params(variant: str, params: dict, n: int) -> DampingKind:
    if variant == VISCOUS:
        _require_keys(params, {"omega_lo", "omega_hi"}, {"omega_lo", "omega_hi"},
                      "model.damping.params")
        return viscous_damping(float(params["omega_lo"]), float(params["omega_hi"]))
    if variant == KELVIN_VOIGT:
        _require_keys(params, {"a"}, {"a"}, "model.damping.params")
        a = params["a"]
        if isinstance(a, list):
            if len(a) != n:
                raise SchemaError("model.damping.params.a: need one value per node")
            return kelvin_voigt_damping(np.array(a, dtype=float))
        return kelvin_voigt_damping(float(a))
    if variant == BOUNDARY_TIP:
        _require_keys(params, set(), set(), "model.damping.params")
        return boundary_tip_damping()
    raise SchemaError(f"model.damping.variant: unknown variant {variant!r}")


def model_to_dict(model: ModelSpec) -> dict:
    damping = model.damping
    if damping.variant == VISCOUS:
        params = {"omega_lo": damping.omega[0], "omega_hi": damping.omega[1]}
    elif damping.variant == KELVIN_VOIGT:
        a = damping.a
        params = {"a": float(a) if np.ndim(a) == 0 else [float(v) for v in a]}
    else:
        params = {}
    return {
        "n": model.grid.n,
        "stiffness": {"variant": model.stiffness.variant, "shift": model.stiffness.shift},
        "damping": {"variant": damping.variant, "params": params},
        "A": [[float(v) for v in row] for row in model.pair.A],
        "D": [[float(v) for v in row] for row in model.pair.D],
    }


@dataclass(eq=False)
class Scenario:
    """A named model plus the analyses to run on it and their parameters."""

    name: str
    model: ModelSpec
    analyses: list[str]
    params: dict = field(default_factory=dict)
    seed: int = 0
    svg: bool = False
    out: str | None = None


_PARAM_SCHEMAS = {
    "kalman": ({"samples"}, set()),
    "spectrum": (set(), set()),
    "resolvent": ({"beta_min", "beta_max", "points", "placement", "window"}, set()),
    "decay": ({"dt", "modes", "direction", "profile_exponent", "sample_ratio",
               "t_final"}, {"dt", "modes"}),
    "branches": ({"family", "first", "last"}, {"family", "first", "last"}),
}


def scenario_from_dict(doc: dict) -> Scenario:
    _require_keys(doc, {"name", "model", "analyses", "params", "seed", "svg", "out"},
                  {"name", "model", "analyses"}, "scenario")
    if not isinstance(doc["name"], str):
        raise SchemaError("scenario.name: expected a string")
    model = model_from_dict(doc["model"])
    analyses = doc["analyses"]
    if not isinstance(analyses, list) or any(a not in ANALYSES for a in analyses):
        raise SchemaError(f"scenario.analyses: expected a subset of {ANALYSES}")
    params = doc.get("params", {})
    if not isinstance(params, dict):
        raise SchemaError("scenario.params: expected an object")
    unknown = set(params) - set(ANALYSES)
    if unknown:
        raise SchemaError(f"scenario.params: unknown analysis section(s) {sorted(unknown)}")
    for name, section in params.items():
        allowed, required = _PARAM_SCHEMAS[name]
        _require_keys(section, allowed, required, f"scenario.params.{name}")
    if "branches" in analyses:
        _check_branches(doc, model, params)
    seed = doc.get("seed", 0)
    if not isinstance(seed, int):
        raise SchemaError("scenario.seed: expected an integer")
    svg = doc.get("svg", False)
    if not isinstance(svg, bool):
        raise SchemaError("scenario.svg: expected a boolean")
    out = doc.get("out")
    if out is not None and not isinstance(out, str):
        raise SchemaError("scenario.out: expected a string")
    return Scenario(name=doc["name"], model=model, analyses=list(analyses),
                    params=params, seed=seed, svg=svg, out=out)


def _check_branches(doc: dict, model: ModelSpec, params: dict) -> None:
    from .branches import DEMO_CONTROL, DEMO_COUPLING, TIP_CONTROL, TIP_COUPLING

    section = params.get("branches")
    if section is None:
        raise SchemaError("scenario.params.branches: required when 'branches' is requested")
    family = section["family"]
    if family not in BRANCH_FAMILIES:
        raise SchemaError(f"scenario.params.branches.family: unknown family {family!r}")
    first, last = section["first"], section["last"]
    if not (isinstance(first, int) and isinstance(last, int) and 1 <= first <= last):
        raise SchemaError("scenario.params.branches: need integers 1 <= first <= last")
    if family == "tip":
        A_ref, D_ref = TIP_COUPLING, TIP_CONTROL
    else:
        A_ref, D_ref = DEMO_COUPLING, DEMO_CONTROL
    if not (np.allclose(model.pair.A, A_ref) and np.allclose(model.pair.D, D_ref)):
        raise SchemaError("scenario.params.branches: family does not match the model matrices")


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: invalid JSON ({exc})") from exc
    return scenario_from_dict(doc)


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path, header: list[str], rows) -> None:
    """CSV with '.' decimals, LF line endings, UTF-8, shortest round-trip floats."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")


def write_json(path, doc: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
