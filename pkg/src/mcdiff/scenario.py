"""JSON scenario documents: parsing, validation and canonical serialization.

A document looks like::

    {
      "species": [{"name": "N2", "molar_mass": 0.028}, ...],
      "state": {"T": 300.0, "rho": 1.2, "y": [...], "profile": ...},
      "closure": {"kind": "maxwell-stefan", "payload": {"f": [[...], ...]}},
      "sim": {"n_cells": 200, "length": 0.01, "t_end": 1.0, "dt": null, "output_every": 100}
    }

Closure kinds and payload keys:

* ``fick-onsager``: ``L`` (N x N), optional ``A`` (N) and ``S`` (N x N)
* ``maxwell-stefan``: ``f`` (N x N, symmetric, diagonal ignored)
* ``core-diagonal``: ``d`` (N)
* ``novel``: ``d`` (N) and optional ``K`` (N x N, omitted means zero)
* ``darken-self-diffusion``: ``D_dilute`` (N x N)

``state.profile`` is either an explicit list of per-cell fraction vectors or
``{"pattern": "stripes", "y_a": [...], "y_b": [...], "count": k}``, which
alternates the two compositions following the sign of cos(k pi z / length).
"""

import json
from dataclasses import dataclass

import numpy as np

from .closures import (
    MaxwellStefanClosure,
    OnsagerClosure,
    check_onsager,
    friction_table,
    novel_closure,
    structure_from_onsager,
)
from .darken import SelfDiffusionModel, self_diffusion_mix
from .errors import MixtureError
from .mixture import MixtureState, make_state
from .simulator import (
    CoreDiagonalModel,
    DarkenModel,
    FickOnsagerModel,
    MaxwellStefanModel,
    NovelModel,
    SimConfig,
)

CLOSURE_KINDS = ("fick-onsager", "maxwell-stefan", "core-diagonal", "novel", "darken-self-diffusion")


class ScenarioError(MixtureError):
    """The document does not follow the scenario schema."""


def _require(mapping, key, where):
    if not isinstance(mapping, dict) or key not in mapping:
        raise ScenarioError(f"missing '{key}' in {where}")
    return mapping[key]


def _number(value, where) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{where} must be a number")
    return float(value)


def _vector(value, n, where) -> np.ndarray:
    if not isinstance(value, list) or len(value) != n:
        raise ScenarioError(f"{where} must be a list of {n} numbers")
    return np.array([_number(v, where) for v in value])


def _matrix(value, n, where) -> np.ndarray:
    if not isinstance(value, list) or len(value) != n:
        raise ScenarioError(f"{where} must be an {n}x{n} row-major matrix")
    return np.array([_vector(row, n, where) for row in value])


def _symmetric(mat, where, tol=1e-12):
    scale = max(float(np.max(np.abs(mat))), np.finfo(float).tiny)
    if np.max(np.abs(mat - mat.T)) > tol * scale:
        raise ScenarioError(f"{where} must be symmetric")
    return mat


@dataclass
class Scenario:
    doc: dict

    @property
    def n_species(self) -> int:
        return len(self.doc["species"])

    @property
    def names(self):
        return [s["name"] for s in self.doc["species"]]

    @property
    def molar_masses(self) -> np.ndarray:
        return np.array([float(s["molar_mass"]) for s in self.doc["species"]])

    def state(self) -> MixtureState:
        st = self.doc["state"]
        return make_state(st["T"], st["rho"], self.molar_masses, st["y"])

    def closure_kind(self) -> str:
        return self.doc["closure"]["kind"]

    def payload(self) -> dict:
        return self.doc["closure"]["payload"]


def validate(doc) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("document must be a JSON object")
    species = _require(doc, "species", "document")
    if not isinstance(species, list) or len(species) < 2:
        raise ScenarioError("'species' must list at least two entries")
    for k, sp in enumerate(species):
        if not isinstance(_require(sp, "name", f"species[{k}]"), str):
            raise ScenarioError(f"species[{k}].name must be a string")
        if _number(_require(sp, "molar_mass", f"species[{k}]"), f"species[{k}].molar_mass") <= 0:
            raise ScenarioError(f"species[{k}].molar_mass must be positive")
    n = len(species)
    state = _require(doc, "state", "document")
    for key in ("T", "rho"):
        _number(_require(state, key, "state"), f"state.{key}")
    _vector(_require(state, "y", "state"), n, "state.y")
    if "profile" in state:
        _profile_array(state["profile"], n, None)
    sc = Scenario(doc)
    sc.state()
    if "closure" in doc:
        closure = doc["closure"]
        kind = _require(closure, "kind", "closure")
        if kind not in CLOSURE_KINDS:
            raise ScenarioError(f"unknown closure kind {kind!r}; expected one of {CLOSURE_KINDS}")
        _parse_payload(kind, _require(closure, "payload", "closure"), n)
    if "sim" in doc:
        sim = doc["sim"]
        for key in ("n_cells", "length", "t_end"):
            _number(_require(sim, key, "sim"), f"sim.{key}")
        if sim.get("dt") is not None:
            _number(sim["dt"], "sim.dt")
    return sc


def _parse_payload(kind, payload, n):
    if not isinstance(payload, dict):
        raise ScenarioError("closure.payload must be an object")
    if kind == "fick-onsager":
        out = {"L": _symmetric(_matrix(_require(payload, "L", "payload"), n, "payload.L"), "payload.L", 1e-10)}
        if "A" in payload or "S" in payload:
            out["A"] = _vector(_require(payload, "A", "payload"), n, "payload.A")
            out["S"] = _symmetric(_matrix(_require(payload, "S", "payload"), n, "payload.S"), "payload.S", 1e-10)
        return out
    if kind == "maxwell-stefan":
        return {"f": _symmetric(_matrix(_require(payload, "f", "payload"), n, "payload.f"), "payload.f")}
    if kind in ("core-diagonal", "novel"):
        out = {"d": _vector(_require(payload, "d", "payload"), n, "payload.d")}
        if kind == "novel" and "K" in payload:
            out["K"] = _symmetric(_matrix(payload["K"], n, "payload.K"), "payload.K", 1e-10)
        return out
    return {"D_dilute": _matrix(_require(payload, "D_dilute", "payload"), n, "payload.D_dilute")}


def build_closure(sc: Scenario, state: MixtureState, validate_closure: bool = True):
    """Algebraic closure object (form A, B or C) described by the document."""
    kind = sc.closure_kind()
    p = _parse_payload(kind, sc.payload(), sc.n_species)
    if kind == "fick-onsager":
        if "A" in p:
            closure = OnsagerClosure(p["L"], p["A"], p["S"])
        else:
            closure = structure_from_onsager(state, p["L"]) if state.is_strict else OnsagerClosure(p["L"])
        if validate_closure:
            check_onsager(closure, state)
        return closure
    if kind == "maxwell-stefan":
        return MaxwellStefanClosure(friction_table(p["f"]))
    if kind == "darken-self-diffusion":
        d = self_diffusion_mix(SelfDiffusionModel(p["D_dilute"]), state.x)
        return novel_closure(d, None, state, validate_closure)
    return novel_closure(p["d"], p.get("K"), state, validate_closure)


def closure_block(closure) -> dict:
    """Serialize an algebraic closure back into a ``closure`` section."""
    if isinstance(closure, OnsagerClosure):
        payload = {"L": closure.L.tolist()}
        if closure.has_structure:
            payload["A"] = np.asarray(closure.A_diag).tolist()
            payload["S"] = np.asarray(closure.S_off).tolist()
        return {"kind": "fick-onsager", "payload": payload}
    if isinstance(closure, MaxwellStefanClosure):
        return {"kind": "maxwell-stefan", "payload": {"f": closure.f.tolist()}}
    payload = {"d": np.asarray(closure.d).tolist()}
    if closure.d.shape[0] > 2:
        payload["K"] = np.asarray(closure.K).tolist()
    return {"kind": "novel", "payload": payload}


def _profile_array(profile, n, n_cells):
    if isinstance(profile, list):
        arr = np.array([_vector(row, n, "state.profile") for row in profile])
        if n_cells is not None and arr.shape[0] != n_cells:
            raise ScenarioError("state.profile must have one entry per cell")
        return arr
    if isinstance(profile, dict) and profile.get("pattern") == "stripes":
        y_a = _vector(_require(profile, "y_a", "state.profile"), n, "state.profile.y_a")
        y_b = _vector(_require(profile, "y_b", "state.profile"), n, "state.profile.y_b")
        count = int(_number(_require(profile, "count", "state.profile"), "state.profile.count"))
        if n_cells is None:
            return None
        z = (np.arange(n_cells) + 0.5) / n_cells
        return np.where((np.cos(count * np.pi * z) > 0)[:, None], y_a, y_b)
    raise ScenarioError("state.profile must be a list of compositions or a stripes pattern")


def sim_model(sc: Scenario):
    kind = sc.closure_kind()
    p = _parse_payload(kind, sc.payload(), sc.n_species)
    if kind == "fick-onsager":
        S = p["S"] if "S" in p else structure_from_onsager(sc.state(), p["L"]).S_off
        return FickOnsagerModel(S)
    if kind == "maxwell-stefan":
        return MaxwellStefanModel(friction_table(p["f"]))
    if kind == "core-diagonal":
        return CoreDiagonalModel(p["d"])
    if kind == "novel":
        return NovelModel(p["d"], p.get("K", np.zeros((sc.n_species, sc.n_species))))
    return DarkenModel(p["D_dilute"])


def sim_config(sc: Scenario) -> SimConfig:
    sim = _require(sc.doc, "sim", "document")
    n_cells = int(_number(_require(sim, "n_cells", "sim"), "sim.n_cells"))
    state = sc.doc["state"]
    profile = state.get("profile")
    if profile is None:
        initial = np.tile(np.asarray(state["y"], dtype=float), (n_cells, 1))
    else:
        initial = _profile_array(profile, sc.n_species, n_cells)
    dt = sim.get("dt")
    return SimConfig(
        n_cells=n_cells,
        length=_number(sim["length"], "sim.length"),
        t_end=_number(sim["t_end"], "sim.t_end"),
        closure=sim_model(sc),
        M=sc.molar_masses,
        initial_y=initial,
        T=float(state["T"]),
        rho=float(state["rho"]),
        dt=None if dt is None else float(dt),
        output_every=int(sim.get("output_every", 1)),
        species=tuple(sc.names),
        keep_profiles=True,
    )


def loads(text: str) -> Scenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc}") from None
    return validate(doc)


def dumps(doc) -> str:
    """Canonical text: two-space indent, shortest round-trip floats, trailing newline."""
    return json.dumps(doc.doc if isinstance(doc, Scenario) else doc, indent=2, allow_nan=False) + "\n"
