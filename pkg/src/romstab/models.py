"""Lumped-mass structural models assembled from small element blocks.

A model is a second-order system ``M x'' + C x' + K x = f(t)`` with a
diagonal (lumped) mass matrix, exactly symmetric positive semi-definite
stiffness, and Rayleigh damping ``C = a1 M + a2 K``.  Models may carry
the element blocks they were assembled from; element-level information
is what the hyper-reduction and element-bound machinery feeds on.

The on-disk JSON format is documented with :func:`read_model`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import FormatError
from .kernels import (
    gen_eig_diag_mass,
    require_positive_diagonal,
    require_symmetric,
)

__all__ = [
    "ForceTable",
    "ElementBlock",
    "FullOrderModel",
    "assemble",
    "build_string_model",
    "damping_matrix",
    "model_to_dict",
    "model_from_dict",
    "write_model",
    "read_model",
]


@dataclass(frozen=True)
class ForceTable:
    """External load sampled at increasing time stations.

    Evaluation is piecewise linear between stations and clamps to the end
    rows outside the covered interval.  ``values`` has one row per time
    station, one column per DoF.
    """

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.ndim != 1 or times.size == 0:
            raise ValueError("force table needs at least one time station")
        if np.any(np.diff(times) <= 0.0):
            raise ValueError("force table times must be strictly increasing")
        if values.ndim != 2 or values.shape[0] != times.shape[0]:
            raise ValueError(
                f"force values shaped {values.shape} do not match "
                f"{times.shape[0]} time stations"
            )
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(values))):
            raise ValueError("force table contains non-finite entries")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def at(self, t):
        """Force vector at time ``t`` (clamped linear interpolation)."""
        times = self.times
        if t <= times[0]:
            return self.values[0].copy()
        if t >= times[-1]:
            return self.values[-1].copy()
        i = int(np.searchsorted(times, t, side="right")) - 1
        w = (t - times[i]) / (times[i + 1] - times[i])
        return (1.0 - w) * self.values[i] + w * self.values[i + 1]


@dataclass(frozen=True)
class ElementBlock:
    """One element: local stiffness, lumped local mass, global DoF map.

    ``stiffness`` must be exactly symmetric and positive semi-definite
    (within ``1e-10`` relative); ``mass`` holds the strictly positive
    diagonal of the local lumped mass.  ``length`` and ``wave_speed`` are
    optional geometric annotations used by CFL-style reporting.
    """

    dofs: tuple
    stiffness: np.ndarray
    mass: np.ndarray
    length: float | None = None
    wave_speed: float | None = None

    def __post_init__(self):
        dofs = tuple(int(d) for d in self.dofs)
        if len(dofs) == 0:
            raise ValueError("element needs at least one DoF")
        if len(set(dofs)) != len(dofs):
            raise ValueError(f"element DoFs must be distinct, got {dofs}")
        if any(d < 0 for d in dofs):
            raise ValueError(f"element DoFs must be nonnegative, got {dofs}")
        ke = require_symmetric(self.stiffness, "element stiffness")
        me = require_positive_diagonal(self.mass, "element mass")
        n = len(dofs)
        if ke.shape != (n, n) or me.shape != (n,):
            raise ValueError(
                f"element block shapes {ke.shape}/{me.shape} do not match "
                f"{n} DoFs"
            )
        eigs = np.linalg.eigvalsh(ke)
        scale = max(float(np.max(np.abs(eigs))), 1e-300)
        if eigs[0] < -1e-10 * scale:
            raise ValueError(
                f"element stiffness is not positive semi-definite "
                f"(min eigenvalue {eigs[0]:.3e})"
            )
        for name in ("length", "wave_speed"):
            val = getattr(self, name)
            if val is not None and not (math.isfinite(val) and val > 0.0):
                raise ValueError(f"element {name} must be positive, got {val}")
        object.__setattr__(self, "dofs", dofs)
        object.__setattr__(self, "stiffness", ke)
        object.__setattr__(self, "mass", me)

    def max_eigenvalue(self):
        """Largest eigenvalue of the local ``inv(Me) Ke`` pencil."""
        return float(gen_eig_diag_mass(self.stiffness, self.mass).values[-1])


def assemble(elements, m):
    """Scatter-add element blocks into global (mass diagonal, stiffness).

    The global stiffness is exactly symmetric by construction: each
    element block is, and entries (i, j) and (j, i) accumulate identical
    addend sequences in identical order.
    """
    if m < 1:
        raise ValueError(f"model order must be at least 1, got {m}")
    mass = np.zeros(m)
    stiffness = np.zeros((m, m))
    for pos, element in enumerate(elements):
        if max(element.dofs) >= m:
            raise ValueError(
                f"element {pos} references DoF {max(element.dofs)} "
                f"outside a model of order {m}"
            )
        ix = np.asarray(element.dofs, dtype=int)
        mass[ix] += element.mass
        stiffness[np.ix_(ix, ix)] += element.stiffness
    return mass, stiffness


@dataclass
class FullOrderModel:
    """Assembled second-order model with Rayleigh damping.

    Invariants enforced at construction: strictly positive lumped mass,
    exactly symmetric PSD stiffness, ``a1, a2 >= 0``, and — when element
    blocks are attached — agreement between the stored mass and the
    scatter of the element masses.
    """

    m: int
    mass: np.ndarray
    stiffness: np.ndarray
    a1: float = 0.0
    a2: float = 0.0
    elements: tuple = ()
    external_force: ForceTable | None = None

    def __post_init__(self):
        self.m = int(self.m)
        self.mass = require_positive_diagonal(self.mass, "mass")
        self.stiffness = require_symmetric(self.stiffness, "stiffness")
        if self.mass.shape[0] != self.m or self.stiffness.shape[0] != self.m:
            raise ValueError(
                f"mass/stiffness shapes {self.mass.shape}/{self.stiffness.shape} "
                f"do not match order {self.m}"
            )
        eigs = np.linalg.eigvalsh(self.stiffness)
        scale = max(float(np.max(np.abs(eigs))), 1e-300)
        if eigs[0] < -1e-10 * scale:
            raise ValueError(
                f"stiffness is not positive semi-definite "
                f"(min eigenvalue {eigs[0]:.3e})"
            )
        if self.a1 < 0.0 or self.a2 < 0.0:
            raise ValueError(
                f"Rayleigh coefficients must be nonnegative, got "
                f"a1={self.a1}, a2={self.a2}"
            )
        self.elements = tuple(self.elements)
        if self.elements:
            scattered, _ = assemble(self.elements, self.m)
            tol = 1e-12 * max(float(np.max(scattered)), 1e-300)
            if np.max(np.abs(scattered - self.mass)) > tol:
                raise ValueError(
                    "stored mass differs from the scatter of the element "
                    "masses; the element decomposition is inconsistent"
                )
        if self.external_force is not None:
            if self.external_force.values.shape[1] != self.m:
                raise ValueError(
                    f"external force has {self.external_force.values.shape[1]} "
                    f"columns for a model of order {self.m}"
                )

    @cached_property
    def damping(self):
        """Rayleigh damping matrix ``a1 * M + a2 * K`` (exactly symmetric)."""
        c = self.a2 * self.stiffness
        c[np.diag_indices(self.m)] += self.a1 * self.mass
        return c

    # -- interface consumed by the time integrator ------------------------

    @property
    def dim(self):
        return self.m

    def mass_inverse_apply(self, f):
        return f / self.mass

    def force_at(self, x, v_half, t):
        f = -self.damping @ v_half - self.stiffness @ x
        if self.external_force is not None:
            f = f + self.external_force.at(t)
        return f


def damping_matrix(model):
    """The model's Rayleigh damping matrix ``a1 * M + a2 * K``."""
    return model.damping


def build_string_model(
    m,
    element_mass,
    element_stiffness,
    length,
    boundary_factor=99.0,
    a1=0.0,
    a2=0.0,
):
    """Uniform chain of 2-node spring elements with stiff boundary springs.

    ``m`` nodes carry ``m - 1`` identical elements of stiffness
    ``element_stiffness * [[1, -1], [-1, 1]]`` and lumped mass
    ``element_mass / 2`` per node, so interior nodes accumulate
    ``element_mass`` and the two boundary nodes half of that.  Boundary
    springs of ``boundary_factor * element_stiffness`` tie the end nodes
    to ground; they are folded into the first and last element blocks so
    that the element decomposition reproduces the assembled stiffness
    exactly (which keeps element-level eigenvalue bounds valid).

    Each element records its length ``length / (m - 1)`` and the matching
    wave speed ``length/(m-1) * sqrt(element_stiffness / element_mass)``.
    """
    if m < 2:
        raise ValueError(f"a string model needs at least 2 nodes, got m={m}")
    for name, val in (
        ("element_mass", element_mass),
        ("element_stiffness", element_stiffness),
        ("length", length),
    ):
        if not (math.isfinite(val) and val > 0.0):
            raise ValueError(f"{name} must be positive, got {val}")
    if boundary_factor < 0.0:
        raise ValueError(f"boundary_factor must be nonnegative, got {boundary_factor}")

    el_len = length / (m - 1)
    wave_speed = el_len * math.sqrt(element_stiffness / element_mass)
    half = 0.5 * element_mass
    blocks = []
    for e in range(m - 1):
        ke = element_stiffness * np.array([[1.0, -1.0], [-1.0, 1.0]])
        if e == 0:
            ke[0, 0] += boundary_factor * element_stiffness
        if e == m - 2:
            ke[1, 1] += boundary_factor * element_stiffness
        blocks.append(
            ElementBlock(
                dofs=(e, e + 1),
                stiffness=ke,
                mass=np.array([half, half]),
                length=el_len,
                wave_speed=wave_speed,
            )
        )
    mass, stiffness = assemble(blocks, m)
    return FullOrderModel(
        m=m,
        mass=mass,
        stiffness=stiffness,
        a1=a1,
        a2=a2,
        elements=tuple(blocks),
    )


# ---------------------------------------------------------------------------
# JSON round-trip
# ---------------------------------------------------------------------------

_MODEL_KEYS = {"m", "mass", "stiffness_coo", "a1", "a2", "elements", "external_force"}
_ELEMENT_KEYS = {"dofs", "Ke", "Me", "length", "wave_speed"}
_FORCE_KEYS = {"times", "values"}


def _require_keys(mapping, allowed, required, what):
    unknown = set(mapping) - allowed
    if unknown:
        raise FormatError(f"{what} has unknown keys: {sorted(unknown)}")
    missing = required - set(mapping)
    if missing:
        raise FormatError(f"{what} is missing keys: {sorted(missing)}")


def _as_int(value, what):
    if isinstance(value, bool) or not isinstance(value, int):
        raise FormatError(f"{what} must be an integer, got {value!r}")
    return value


def _as_number(value, what):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise FormatError(f"{what} must be a number, got {value!r}")
    return float(value)


def model_to_dict(model):
    """Plain-data form of a model (see :func:`read_model` for the schema)."""
    k = model.stiffness
    coo = []
    for i in range(model.m):
        for j in range(i, model.m):
            if k[i, j] != 0.0:
                coo.append([i, j, float(k[i, j])])
    doc = {
        "m": model.m,
        "mass": [float(v) for v in model.mass],
        "stiffness_coo": coo,
        "a1": float(model.a1),
        "a2": float(model.a2),
        "elements": [],
    }
    for element in model.elements:
        entry = {
            "dofs": list(element.dofs),
            "Ke": [float(v) for v in element.stiffness.ravel()],
            "Me": [float(v) for v in element.mass],
        }
        if element.length is not None:
            entry["length"] = float(element.length)
        if element.wave_speed is not None:
            entry["wave_speed"] = float(element.wave_speed)
        doc["elements"].append(entry)
    if model.external_force is not None:
        doc["external_force"] = {
            "times": [float(t) for t in model.external_force.times],
            "values": [[float(v) for v in row] for row in model.external_force.values],
        }
    return doc


def model_from_dict(doc):
    """Rebuild a model from its plain-data form (strict: unknown keys fail)."""
    if not isinstance(doc, dict):
        raise FormatError("model document must be a JSON object")
    _require_keys(doc, _MODEL_KEYS, {"m", "mass", "stiffness_coo", "a1", "a2"}, "model")
    m = _as_int(doc["m"], "m")
    if m < 1:
        raise FormatError(f"m must be at least 1, got {m}")
    mass = np.array([_as_number(v, "mass entry") for v in doc["mass"]])
    if mass.shape != (m,):
        raise FormatError(f"mass has {mass.shape[0]} entries for order {m}")

    stiffness = np.zeros((m, m))
    seen = set()
    for entry in doc["stiffness_coo"]:
        if not isinstance(entry, (list, tuple)) or len(entry) != 3:
            raise FormatError(f"stiffness_coo entries must be [i, j, value], got {entry!r}")
        i = _as_int(entry[0], "stiffness_coo row")
        j = _as_int(entry[1], "stiffness_coo column")
        val = _as_number(entry[2], "stiffness_coo value")
        if not 0 <= i <= j < m:
            raise FormatError(
                f"stiffness_coo index ({i}, {j}) out of range (need 0 <= i <= j < {m})"
            )
        if (i, j) in seen:
            raise FormatError(f"stiffness_coo has a duplicate entry for ({i}, {j})")
        seen.add((i, j))
        stiffness[i, j] = val
        stiffness[j, i] = val

    elements = []
    for pos, entry in enumerate(doc.get("elements", [])):
        if not isinstance(entry, dict):
            raise FormatError(f"element {pos} must be a JSON object")
        _require_keys(entry, _ELEMENT_KEYS, {"dofs", "Ke", "Me"}, f"element {pos}")
        dofs = tuple(_as_int(d, f"element {pos} DoF") for d in entry["dofs"])
        n = len(dofs)
        ke = np.array([_as_number(v, f"element {pos} Ke entry") for v in entry["Ke"]])
        if ke.size != n * n:
            raise FormatError(
                f"element {pos} Ke has {ke.size} entries, expected {n * n}"
            )
        me = np.array([_as_number(v, f"element {pos} Me entry") for v in entry["Me"]])
        kwargs = {}
        for name in ("length", "wave_speed"):
            if name in entry:
                kwargs[name] = _as_number(entry[name], f"element {pos} {name}")
        try:
            elements.append(
                ElementBlock(dofs, ke.reshape(n, n), me, **kwargs)
            )
        except ValueError as exc:
            raise FormatError(f"element {pos}: {exc}") from exc

    force = None
    if "external_force" in doc:
        fdoc = doc["external_force"]
        if not isinstance(fdoc, dict):
            raise FormatError("external_force must be a JSON object")
        _require_keys(fdoc, _FORCE_KEYS, _FORCE_KEYS, "external_force")
        times = [_as_number(t, "force time") for t in fdoc["times"]]
        values = [[_as_number(v, "force value") for v in row] for row in fdoc["values"]]
        try:
            force = ForceTable(np.array(times), np.array(values))
        except ValueError as exc:
            raise FormatError(f"external_force: {exc}") from exc

    try:
        return FullOrderModel(
            m=m,
            mass=mass,
            stiffness=stiffness,
            a1=_as_number(doc["a1"], "a1"),
            a2=_as_number(doc["a2"], "a2"),
            elements=tuple(elements),
            external_force=force,
        )
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def write_model(model, path):
    """Write a model as JSON (schema documented with :func:`read_model`)."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=1)
        fh.write("\n")


def read_model(path):
    """Read a model from JSON.

    Schema (all indices 0-based, unknown keys rejected)::

        {
          "m": int,
          "mass": [m floats],
          "stiffness_coo": [[i, j, value], ...],   # upper triangle, i <= j
          "a1": float, "a2": float,
          "elements": [                            # optional
            {"dofs": [...], "Ke": [row-major floats], "Me": [floats],
             "length": float?, "wave_speed": float?}, ...
          ],
          "external_force": {"times": [...], "values": [[...], ...]}?  # optional
        }

    Off-diagonal COO entries are mirrored; duplicate (i, j) pairs are a
    format error, as is anything violating the model invariants.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from exc
    return model_from_dict(doc)
