"""Projection bases and Galerkin-reduced models.

Snapshot data is handled as plain ``(m, n_snapshots)`` arrays, one
snapshot per column; :func:`snapshots_from_trajectory` turns a recorded
trajectory into that layout.

Two basis flavors exist.  A *plain-orthonormal* basis satisfies
``V.T V = I``; a *mass-orthonormal* one satisfies ``V.T M V = I`` for the
model's lumped mass, which makes the reduced mass matrix the identity
and is the flavor the stability results are stated for.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import FormatError, RankDeficiencyError
from .kernels import (
    gen_eig_diag_mass,
    m_orthonormalize,
    pseudoinverse,
    require_positive_diagonal,
    thin_svd,
)
from .models import ForceTable

__all__ = [
    "PLAIN_ORTHONORMAL",
    "MASS_ORTHONORMAL",
    "PROVENANCES",
    "ReducedBasis",
    "ReducedModel",
    "snapshots_from_trajectory",
    "pod_basis",
    "modal_basis",
    "galerkin_reduce",
    "reconstruct",
    "basis_to_dict",
    "basis_from_dict",
    "write_basis",
    "read_basis",
]

PLAIN_ORTHONORMAL = "plain-orthonormal"
MASS_ORTHONORMAL = "mass-orthonormal"

PROVENANCES = (
    "galerkin",
    "naive-collocation",
    "projected-collocation",
    "deim",
    "gnat",
    "ecsw",
)


def snapshots_from_trajectory(trajectory):
    """Snapshot matrix (one column per recorded state) from a trajectory."""
    if trajectory.states.size == 0:
        raise ValueError("trajectory holds no recorded states")
    return trajectory.states.T.copy()


@dataclass(frozen=True)
class ReducedBasis:
    """Orthonormal basis columns plus the flavor of orthonormality.

    ``mass`` must carry the lumped-mass diagonal for the
    mass-orthonormal flavor (it is what the basis is orthonormal
    against); it stays ``None`` for plain bases.
    """

    matrix: np.ndarray
    kind: str
    mass: np.ndarray | None = None

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=float)
        if matrix.ndim != 2:
            raise ValueError(f"basis must be 2-D, got shape {matrix.shape}")
        m, k = matrix.shape
        if not 1 <= k <= m:
            raise ValueError(f"basis needs 1 <= k <= m, got shape {matrix.shape}")
        if not np.all(np.isfinite(matrix)):
            raise ValueError("basis contains non-finite entries")
        if self.kind == PLAIN_ORTHONORMAL:
            gram = matrix.T @ matrix
            mass = None
        elif self.kind == MASS_ORTHONORMAL:
            if self.mass is None:
                raise ValueError("mass-orthonormal basis needs the mass diagonal")
            mass = require_positive_diagonal(self.mass, "mass")
            if mass.shape[0] != m:
                raise ValueError(
                    f"mass has {mass.shape[0]} entries for basis with {m} rows"
                )
            gram = matrix.T @ (mass[:, None] * matrix)
        else:
            raise ValueError(
                f"kind must be {PLAIN_ORTHONORMAL!r} or {MASS_ORTHONORMAL!r}, "
                f"got {self.kind!r}"
            )
        if np.max(np.abs(gram - np.eye(k))) > 1e-10:
            raise ValueError(f"basis columns are not {self.kind} (within 1e-10)")
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "mass", mass)

    @property
    def m(self):
        return self.matrix.shape[0]

    @property
    def k(self):
        return self.matrix.shape[1]


def pod_basis(snapshots, k, mass=None):
    """Leading ``k`` left singular vectors of the snapshot matrix.

    With ``mass`` given the result is re-orthonormalized against the mass
    inner product; the span of the returned columns is unchanged by that
    step.  Requesting more columns than the numerical rank (tail singular
    value below ``1e-12`` of the largest) raises
    :class:`RankDeficiencyError`.
    """
    snapshots = np.asarray(snapshots, dtype=float)
    if snapshots.ndim != 2:
        raise ValueError(f"snapshots must be 2-D, got shape {snapshots.shape}")
    u, sigma, _ = thin_svd(snapshots)
    if not 1 <= k <= min(snapshots.shape):
        raise ValueError(
            f"k must lie in [1, {min(snapshots.shape)}], got {k}"
        )
    if sigma[k - 1] <= 1e-12 * sigma[0]:
        raise RankDeficiencyError(
            f"requested k={k} exceeds the numerical rank of the snapshots "
            f"(singular value {sigma[k - 1]:.3e} vs largest {sigma[0]:.3e})",
            column=k - 1,
        )
    cols = u[:, :k]
    if mass is None:
        return ReducedBasis(cols, PLAIN_ORTHONORMAL)
    mass = require_positive_diagonal(mass, "mass")
    return ReducedBasis(m_orthonormalize(cols, mass), MASS_ORTHONORMAL, mass=mass)


def modal_basis(model, modes):
    """Mass-orthonormal eigenvectors of ``inv(M) K`` for selected modes.

    ``modes`` are 0-based positions in the ascending spectrum; they are
    sorted and must be distinct.
    """
    modes = [int(i) for i in modes]
    if len(modes) == 0:
        raise ValueError("at least one mode index is required")
    if len(set(modes)) != len(modes):
        raise ValueError(f"mode indices must be distinct, got {modes}")
    if min(modes) < 0 or max(modes) >= model.m:
        raise ValueError(
            f"mode indices must lie in [0, {model.m - 1}], got {modes}"
        )
    modes = sorted(modes)
    pairs = gen_eig_diag_mass(model.stiffness, model.mass)
    phi = pairs.vectors[:, modes]
    v = phi / np.sqrt(model.mass)[:, None]
    return ReducedBasis(v, MASS_ORTHONORMAL, mass=model.mass)


@dataclass
class ReducedModel:
    """Projected (and possibly sampled) second-order model.

    ``mass``, ``damping`` and ``stiffness`` are ``k x k`` for projected
    provenances; the naive collocation variant stores ``p x k`` blocks
    (one row per sampled DoF) and is stepped by the sampled update rule
    instead of the plain central-difference one.

    ``symmetric`` declares that damping and stiffness are symmetric up to
    round-off (Galerkin and ECSW); the flag is validated at construction.
    External load handling: ``reduced_load(t)`` evaluates the full-order
    force table at ``t``, restricts it to ``load_rows`` (when set) and
    applies ``load_map`` (when set).
    """

    mass: np.ndarray
    damping: np.ndarray
    stiffness: np.ndarray
    provenance: str
    symmetric: bool
    basis: ReducedBasis
    a1: float = 0.0
    a2: float = 0.0
    mass_is_identity: bool = False
    external_force: ForceTable | None = None
    load_rows: np.ndarray | None = None
    load_map: np.ndarray | None = None
    samples: object | None = None
    row_mass: np.ndarray | None = None
    row_basis: np.ndarray | None = None

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(
                f"provenance must be one of {PROVENANCES}, got {self.provenance!r}"
            )
        self.mass = np.asarray(self.mass, dtype=float)
        self.damping = np.asarray(self.damping, dtype=float)
        self.stiffness = np.asarray(self.stiffness, dtype=float)
        if not (
            self.mass.shape == self.damping.shape == self.stiffness.shape
        ) or self.mass.ndim != 2:
            raise ValueError("reduced matrices must share one 2-D shape")
        if self.stiffness.shape[1] != self.basis.k:
            raise ValueError(
                f"reduced matrices have {self.stiffness.shape[1]} columns for "
                f"a basis with k={self.basis.k}"
            )
        if self.symmetric:
            for name, mat in (("damping", self.damping), ("stiffness", self.stiffness)):
                scale = max(float(np.max(np.abs(mat))), 1e-300)
                if np.max(np.abs(mat - mat.T)) > 1e-10 * scale:
                    raise ValueError(
                        f"reduced {name} marked symmetric but is not (within 1e-10)"
                    )
            eigs = np.linalg.eigvalsh(0.5 * (self.stiffness + self.stiffness.T))
            scale = max(float(np.max(np.abs(eigs))), 1e-300)
            if eigs[0] < -1e-8 * scale:
                raise ValueError(
                    f"reduced stiffness is not positive semi-definite "
                    f"(min eigenvalue {eigs[0]:.3e})"
                )

    @property
    def dim(self):
        return self.stiffness.shape[1]

    @cached_property
    def row_basis_pinv(self):
        if self.row_basis is None:
            raise ValueError("model carries no sampled basis rows")
        return pseudoinverse(self.row_basis)

    def reduced_load(self, t):
        rows = self.stiffness.shape[0]
        if self.external_force is None:
            return np.zeros(rows)
        f = self.external_force.at(t)
        if self.load_rows is not None:
            f = f[self.load_rows]
        if self.load_map is not None:
            f = self.load_map @ f
        return f

    # -- interface consumed by the time integrator ------------------------

    def mass_inverse_apply(self, f):
        if self.provenance == "naive-collocation":
            raise TypeError(
                "naive-collocation models are stepped by hrom_step, not by "
                "the square mass solve"
            )
        if self.mass_is_identity:
            return np.array(f, dtype=float)
        try:
            return np.linalg.solve(self.mass, f)
        except np.linalg.LinAlgError as exc:
            raise ValueError(
                f"reduced mass matrix is singular ({exc}); the sampling does "
                f"not resolve the basis"
            ) from exc

    def force_at(self, x, v_half, t):
        return self.reduced_load(t) - self.damping @ v_half - self.stiffness @ x


def galerkin_reduce(model, basis):
    """Project a full-order model onto a basis (Galerkin, both flavors).

    For a mass-orthonormal basis the reduced mass is the identity by
    construction and is stored exactly as such.  Rayleigh structure
    carries over: the reduced damping equals ``a1 Mr + a2 Kr`` up to
    round-off.
    """
    v = basis.matrix
    if basis.m != model.m:
        raise ValueError(
            f"basis has {basis.m} rows for a model of order {model.m}"
        )
    k = basis.k
    if basis.kind == MASS_ORTHONORMAL:
        mass_r = np.eye(k)
        identity = True
    else:
        mass_r = v.T @ (model.mass[:, None] * v)
        identity = False
    damping_r = v.T @ (model.damping @ v)
    stiffness_r = v.T @ (model.stiffness @ v)
    return ReducedModel(
        mass=mass_r,
        damping=damping_r,
        stiffness=stiffness_r,
        provenance="galerkin",
        symmetric=True,
        basis=basis,
        a1=model.a1,
        a2=model.a2,
        mass_is_identity=identity,
        external_force=model.external_force,
        load_map=v.T,
    )


def reconstruct(basis, reduced):
    """Lift reduced coordinates back to the full space.

    Accepts a single state ``(k,)`` or a stack of states ``(n, k)`` (the
    layout of ``Trajectory.states``) and returns the matching full-space
    array.
    """
    reduced = np.asarray(reduced, dtype=float)
    if reduced.ndim == 1:
        if reduced.shape[0] != basis.k:
            raise ValueError(
                f"state has {reduced.shape[0]} entries for k={basis.k}"
            )
        return basis.matrix @ reduced
    if reduced.ndim == 2:
        if reduced.shape[1] != basis.k:
            raise ValueError(
                f"states have {reduced.shape[1]} columns for k={basis.k}"
            )
        return reduced @ basis.matrix.T
    raise ValueError(f"reduced states must be 1-D or 2-D, got {reduced.ndim}-D")


# ---------------------------------------------------------------------------
# Basis JSON round-trip
# ---------------------------------------------------------------------------

_BASIS_KEYS = {"m", "k", "kind", "columns"}


def basis_to_dict(basis):
    return {
        "m": basis.m,
        "k": basis.k,
        "kind": basis.kind,
        "columns": [[float(v) for v in basis.matrix[:, j]] for j in range(basis.k)],
    }


def basis_from_dict(doc, mass=None):
    """Rebuild a basis from its plain-data form.

    A mass-orthonormal basis file does not store the mass diagonal; pass
    the model's mass so the orthonormality invariant can be validated.
    """
    if not isinstance(doc, dict):
        raise FormatError("basis document must be a JSON object")
    unknown = set(doc) - _BASIS_KEYS
    if unknown:
        raise FormatError(f"basis has unknown keys: {sorted(unknown)}")
    missing = _BASIS_KEYS - set(doc)
    if missing:
        raise FormatError(f"basis is missing keys: {sorted(missing)}")
    m, k, kind = doc["m"], doc["k"], doc["kind"]
    if kind not in (PLAIN_ORTHONORMAL, MASS_ORTHONORMAL):
        raise FormatError(f"unknown basis kind {kind!r}")
    columns = doc["columns"]
    if len(columns) != k or any(len(col) != m for col in columns):
        raise FormatError(
            f"basis columns do not form an {m} x {k} array"
        )
    matrix = np.array(columns, dtype=float).T
    if kind == MASS_ORTHONORMAL and mass is None:
        raise ValueError(
            "loading a mass-orthonormal basis requires the model's mass diagonal"
        )
    try:
        return ReducedBasis(matrix, kind, mass=mass if kind == MASS_ORTHONORMAL else None)
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def write_basis(basis, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(basis_to_dict(basis), fh, indent=1)
        fh.write("\n")


def read_basis(path, mass=None):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from exc
    return basis_from_dict(doc, mass=mass)
