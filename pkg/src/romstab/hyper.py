"""Hyper-reduction: force sampling on top of a projection basis.

Collocation evaluates the nodal force at a subset of DoFs only.  The
*reach* of a sample set is the set of DoFs those sampled force rows
actually touch through the damping/stiffness sparsity; keeping it
explicit is what makes sampled evaluation cheap and is validated here
against the matrix structure.

DEIM/GNAT replace plain row selection by an oblique projection built
from a force basis.  ECSW instead re-weights element force
contributions with sparse nonnegative weights trained on snapshots; it
preserves symmetry, which the interpolation methods generally do not.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .errors import FormatError, RankDeficiencyError
from .kernels import pseudoinverse, sparse_nnls
from .reduction import MASS_ORTHONORMAL, ReducedModel

__all__ = [
    "SampleSet",
    "EcswWeights",
    "deim_points",
    "collocate_naive",
    "collocate_projected",
    "deim_reduce",
    "gnat_reduce",
    "ecsw_training_system",
    "ecsw_train",
    "ecsw_reduce",
    "ecsw_weighted_operator",
    "hrom_step",
    "sampled_step_matrix",
    "sample_set_to_dict",
    "sample_set_from_dict",
    "write_sample_set",
    "read_sample_set",
    "weights_to_dict",
    "weights_from_dict",
    "write_weights",
    "read_weights",
]


@dataclass(frozen=True)
class SampleSet:
    """Collocation DoFs plus the DoFs their force rows reach.

    ``collocation`` keeps its given order (point order matters to the
    interpolation methods); the reach tuples are sorted.  Both reaches
    must contain every collocation DoF.
    """

    collocation: tuple
    damping_reach: tuple
    stiffness_reach: tuple

    def __post_init__(self):
        coll = tuple(int(i) for i in self.collocation)
        if len(coll) == 0:
            raise ValueError("sample set needs at least one collocation DoF")
        if len(set(coll)) != len(coll):
            raise ValueError(f"collocation DoFs must be distinct, got {coll}")
        if min(coll) < 0:
            raise ValueError(f"collocation DoFs must be nonnegative, got {coll}")
        reaches = {}
        for name in ("damping_reach", "stiffness_reach"):
            reach = tuple(sorted(int(i) for i in getattr(self, name)))
            if len(set(reach)) != len(reach):
                raise ValueError(f"{name} has duplicate entries")
            if not set(coll) <= set(reach):
                raise ValueError(f"{name} must contain all collocation DoFs")
            reaches[name] = reach
        object.__setattr__(self, "collocation", coll)
        object.__setattr__(self, "damping_reach", reaches["damping_reach"])
        object.__setattr__(self, "stiffness_reach", reaches["stiffness_reach"])

    @classmethod
    def from_model(cls, model, collocation):
        """Sample set with reaches computed from the matrix sparsity."""
        coll = tuple(int(i) for i in collocation)
        if any(not 0 <= i < model.m for i in coll):
            raise ValueError(
                f"collocation DoFs must lie in [0, {model.m - 1}], got {coll}"
            )
        damping_reach = set(coll)
        stiffness_reach = set(coll)
        for i in coll:
            damping_reach.update(np.flatnonzero(model.damping[i] != 0.0).tolist())
            stiffness_reach.update(np.flatnonzero(model.stiffness[i] != 0.0).tolist())
        return cls(coll, tuple(sorted(damping_reach)), tuple(sorted(stiffness_reach)))


@dataclass(frozen=True)
class EcswWeights:
    """Trained nonnegative element weights.

    ``support`` lists the indices of the strictly positive weights in
    increasing order; ``residual`` is the relative training residual.
    """

    xi: np.ndarray
    support: tuple
    residual: float

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=float)
        if xi.ndim != 1:
            raise ValueError(f"weights must be 1-D, got shape {xi.shape}")
        if not np.all(np.isfinite(xi)) or np.any(xi < 0.0):
            raise ValueError("weights must be finite and nonnegative")
        support = tuple(int(i) for i in self.support)
        if support != tuple(np.flatnonzero(xi).tolist()):
            raise ValueError(
                "support must list exactly the positive-weight indices, ascending"
            )
        if not (np.isfinite(self.residual) and self.residual >= 0.0):
            raise ValueError(f"residual must be nonnegative, got {self.residual}")
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "support", support)


def _check_reach(model, samples):
    """A sampled force row must not touch DoFs outside the declared reach."""
    dr = set(samples.damping_reach)
    zr = set(samples.stiffness_reach)
    if samples.collocation and max(samples.collocation) >= model.m:
        raise ValueError(
            f"collocation DoF {max(samples.collocation)} outside model of "
            f"order {model.m}"
        )
    for i in samples.collocation:
        touched = set(np.flatnonzero(model.damping[i] != 0.0).tolist())
        if not touched <= dr:
            raise ValueError(
                f"damping row {i} touches DoFs {sorted(touched - dr)} outside "
                f"the declared damping reach"
            )
        touched = set(np.flatnonzero(model.stiffness[i] != 0.0).tolist())
        if not touched <= zr:
            raise ValueError(
                f"stiffness row {i} touches DoFs {sorted(touched - zr)} outside "
                f"the declared stiffness reach"
            )


def deim_points(force_basis):
    """Greedy interpolation points for a force basis.

    The first point maximizes ``|U[:, 0]|``; each later point maximizes
    the magnitude of the residual of the next column after interpolating
    it at the points found so far.  Ties resolve to the lowest index.
    """
    u = np.asarray(force_basis, dtype=float)
    if u.ndim != 2 or u.shape[1] < 1:
        raise ValueError(f"force basis must be 2-D with columns, got {u.shape}")
    if u.shape[1] > u.shape[0]:
        raise ValueError("force basis has more columns than rows")
    if not np.all(np.isfinite(u)):
        raise ValueError("force basis contains non-finite entries")
    points = [int(np.argmax(np.abs(u[:, 0])))]
    for j in range(1, u.shape[1]):
        sub = u[np.ix_(points, range(j))]
        try:
            coef = np.linalg.solve(sub, u[points, j])
        except np.linalg.LinAlgError as exc:
            raise RankDeficiencyError(
                f"interpolation submatrix is singular after {j} points",
                column=j,
            ) from exc
        residual = u[:, j] - u[:, :j] @ coef
        pick = int(np.argmax(np.abs(residual)))
        if pick in points:
            raise RankDeficiencyError(
                f"degenerate force basis: column {j} adds no new point",
                column=j,
            )
        points.append(pick)
    return np.array(points, dtype=int)


def _sampled_blocks(model, basis, samples):
    """Common masked row extraction for the collocation variants."""
    _check_reach(model, samples)
    v = basis.matrix
    if basis.m != model.m:
        raise ValueError(f"basis has {basis.m} rows for model order {model.m}")
    rows = np.asarray(samples.collocation, dtype=int)
    dr = np.asarray(samples.damping_reach, dtype=int)
    zr = np.asarray(samples.stiffness_reach, dtype=int)
    row_basis = v[rows]
    damping_rows = model.damping[np.ix_(rows, dr)] @ v[dr]
    stiffness_rows = model.stiffness[np.ix_(rows, zr)] @ v[zr]
    return rows, row_basis, damping_rows, stiffness_rows


def _require_row_rank(row_basis):
    sv = np.linalg.svd(row_basis, compute_uv=False)
    if sv[-1] <= 1e-12 * sv[0] or sv[0] == 0.0:
        raise RankDeficiencyError(
            "sampled basis rows are rank-deficient; add collocation DoFs"
        )


def collocate_naive(model, basis, samples):
    """Row-sampled model: forces evaluated at the collocation DoFs only.

    Stores rectangular ``p x k`` operator blocks (p sampled rows) — with
    more rows than basis columns the displacement update solves a least
    squares problem each step, see :func:`hrom_step`.
    """
    rows, row_basis, damping_rows, stiffness_rows = _sampled_blocks(
        model, basis, samples
    )
    if len(rows) < basis.k:
        raise ValueError(
            f"need at least k={basis.k} collocation DoFs, got {len(rows)}"
        )
    _require_row_rank(row_basis)
    mass_rows = model.mass[rows, None] * row_basis
    return ReducedModel(
        mass=mass_rows,
        damping=damping_rows,
        stiffness=stiffness_rows,
        provenance="naive-collocation",
        symmetric=False,
        basis=basis,
        a1=model.a1,
        a2=model.a2,
        external_force=model.external_force,
        load_rows=rows,
        samples=samples,
        row_mass=model.mass[rows],
        row_basis=row_basis,
    )


def collocate_projected(model, basis, samples):
    """Collocation re-projected onto the basis (square ``k x k`` system).

    The reduced mass ``(P.T V).T diag(mass) (P.T V)`` is symmetric
    positive semi-definite by construction; damping and stiffness are in
    general *not* symmetric because sampling acts from one side only.
    """
    rows, row_basis, damping_rows, stiffness_rows = _sampled_blocks(
        model, basis, samples
    )
    if len(rows) < basis.k:
        raise ValueError(
            f"need at least k={basis.k} collocation DoFs, got {len(rows)}"
        )
    _require_row_rank(row_basis)
    mass_r = row_basis.T @ (model.mass[rows, None] * row_basis)
    return ReducedModel(
        mass=mass_r,
        damping=row_basis.T @ damping_rows,
        stiffness=row_basis.T @ stiffness_rows,
        provenance="projected-collocation",
        symmetric=False,
        basis=basis,
        a1=model.a1,
        a2=model.a2,
        external_force=model.external_force,
        load_rows=rows,
        load_map=row_basis.T,
        samples=samples,
    )


def _interpolation_blocks(model, basis, force_basis, rows):
    u = np.asarray(force_basis, dtype=float)
    rows = np.asarray(rows, dtype=int)
    if u.ndim != 2 or u.shape[0] != model.m:
        raise ValueError(
            f"force basis shaped {u.shape} does not match model order {model.m}"
        )
    if len(set(rows.tolist())) != len(rows):
        raise ValueError("sample rows must be distinct")
    if np.any(rows < 0) or np.any(rows >= model.m):
        raise ValueError(f"sample rows must lie in [0, {model.m - 1}]")
    samples = SampleSet.from_model(model, rows.tolist())
    dr = np.asarray(samples.damping_reach, dtype=int)
    zr = np.asarray(samples.stiffness_reach, dtype=int)
    v = basis.matrix
    damping_rows = model.damping[np.ix_(rows, dr)] @ v[dr]
    stiffness_rows = model.stiffness[np.ix_(rows, zr)] @ v[zr]
    return u, rows, samples, damping_rows, stiffness_rows


def _galerkin_mass(model, basis):
    if basis.kind == MASS_ORTHONORMAL:
        return np.eye(basis.k), True
    v = basis.matrix
    return v.T @ (model.mass[:, None] * v), False


def deim_reduce(model, basis, force_basis, points):
    """Oblique interpolation of the force at exactly one row per column.

    The square selection ``U[points]`` must be well conditioned; a
    condition number beyond 1e12 raises :class:`RankDeficiencyError`
    naming it.  The reduced mass stays Galerkin (identity for a
    mass-orthonormal basis) — only the force terms are interpolated.
    """
    u, rows, samples, damping_rows, stiffness_rows = _interpolation_blocks(
        model, basis, force_basis, points
    )
    if len(rows) != u.shape[1]:
        raise ValueError(
            f"DEIM needs one point per force-basis column: "
            f"{len(rows)} points for {u.shape[1]} columns"
        )
    ptu = u[rows]
    sv = np.linalg.svd(ptu, compute_uv=False)
    if sv[-1] <= 1e-12 * sv[0] or sv[0] == 0.0:
        cond = np.inf if sv[-1] == 0.0 else sv[0] / sv[-1]
        raise RankDeficiencyError(
            f"interpolation submatrix is numerically singular "
            f"(condition number {cond:.3e})"
        )
    v = basis.matrix
    # left factor V.T U (P.T U)^-1, computed via a solve on the transpose
    left = np.linalg.solve(ptu.T, (v.T @ u).T).T
    mass_r, identity = _galerkin_mass(model, basis)
    return ReducedModel(
        mass=mass_r,
        damping=left @ damping_rows,
        stiffness=left @ stiffness_rows,
        provenance="deim",
        symmetric=False,
        basis=basis,
        a1=model.a1,
        a2=model.a2,
        mass_is_identity=identity,
        external_force=model.external_force,
        load_rows=rows,
        load_map=left,
        samples=samples,
    )


def gnat_reduce(model, basis, force_basis, rows):
    """Least-squares variant of force interpolation: more sample rows than
    force-basis columns, gappy reconstruction via the pseudo-inverse."""
    u, rows, samples, damping_rows, stiffness_rows = _interpolation_blocks(
        model, basis, force_basis, rows
    )
    if len(rows) < u.shape[1]:
        raise ValueError(
            f"need at least as many sample rows as force-basis columns: "
            f"{len(rows)} rows for {u.shape[1]} columns"
        )
    ptu = u[rows]
    sv = np.linalg.svd(ptu, compute_uv=False)
    if sv[-1] <= 1e-12 * sv[0] or sv[0] == 0.0:
        raise RankDeficiencyError(
            "sampled force basis is rank-deficient; add sample rows"
        )
    v = basis.matrix
    left = (v.T @ u) @ pseudoinverse(ptu)
    mass_r, identity = _galerkin_mass(model, basis)
    return ReducedModel(
        mass=mass_r,
        damping=left @ damping_rows,
        stiffness=left @ stiffness_rows,
        provenance="gnat",
        symmetric=False,
        basis=basis,
        a1=model.a1,
        a2=model.a2,
        mass_is_identity=identity,
        external_force=model.external_force,
        load_rows=rows,
        load_map=left,
        samples=samples,
    )


# ---------------------------------------------------------------------------
# ECSW
# ---------------------------------------------------------------------------


def _require_mass_orthonormal(basis):
    if basis.kind != MASS_ORTHONORMAL:
        raise ValueError("ECSW requires a mass-orthonormal basis")


def ecsw_training_system(model, basis, snapshots):
    """Training matrix and target for the weight fit.

    Column ``e`` stacks, over all snapshots, the basis-projected force
    contribution of element ``e`` evaluated at the snapshot's reduced
    coordinates; the target is the total (all elements, weight one), so
    the all-ones weight vector reproduces it exactly.
    """
    _require_mass_orthonormal(basis)
    if not model.elements:
        raise ValueError("model carries no element blocks to weight")
    snaps = np.asarray(snapshots, dtype=float)
    if snaps.ndim == 1:
        snaps = snaps[:, None]
    if snaps.ndim != 2 or snaps.shape[0] != model.m:
        raise ValueError(
            f"snapshots shaped {snaps.shape} do not match model order {model.m}"
        )
    v = basis.matrix
    reduced_coords = v.T @ (model.mass[:, None] * snaps)
    n_elements = len(model.elements)
    k, n_s = reduced_coords.shape
    g = np.zeros((k * n_s, n_elements))
    for e, element in enumerate(model.elements):
        ve = v[np.asarray(element.dofs, dtype=int)]
        fe = element.stiffness @ (ve @ reduced_coords)
        g[:, e] = (ve.T @ fe).T.ravel()
    return g, g.sum(axis=1)


def ecsw_train(model, basis, snapshots, tau):
    """Fit sparse nonnegative element weights on stiffness-force snapshots."""
    g, b = ecsw_training_system(model, basis, snapshots)
    if float(np.linalg.norm(b)) == 0.0:
        raise ValueError(
            "snapshots produce zero projected element forces; nothing to train on"
        )
    xi = sparse_nnls(g, b, tau)
    residual = float(np.linalg.norm(g @ xi - b) / np.linalg.norm(b))
    return EcswWeights(
        xi=xi, support=tuple(np.flatnonzero(xi).tolist()), residual=residual
    )


def _weighted_assembly(model, weights):
    xi = np.asarray(getattr(weights, "xi", weights), dtype=float)
    if xi.shape[0] != len(model.elements):
        raise ValueError(
            f"{xi.shape[0]} weights for {len(model.elements)} elements"
        )
    mass_w = np.zeros(model.m)
    stiffness_w = np.zeros((model.m, model.m))
    for w, element in zip(xi, model.elements):
        if w == 0.0:
            continue
        ix = np.asarray(element.dofs, dtype=int)
        mass_w[ix] += w * element.mass
        stiffness_w[np.ix_(ix, ix)] += w * element.stiffness
    return mass_w, stiffness_w


def ecsw_weighted_operator(model, weights):
    """Mass-normalized weighted stiffness ``M^-1/2 (sum xi_e Ke) M^-1/2``.

    Its eigenvalues are what the weighted reduced stiffness inherits
    bounds from; exposed separately for reporting.
    """
    if not model.elements:
        raise ValueError("model carries no element blocks to weight")
    _, stiffness_w = _weighted_assembly(model, weights)
    inv_sqrt = 1.0 / np.sqrt(model.mass)
    return stiffness_w * np.outer(inv_sqrt, inv_sqrt)


def ecsw_reduce(model, weights, basis):
    """Weighted-element reduced model: identity mass, symmetric operators.

    Stiffness and damping are assembled from the weighted elements and
    projected; Rayleigh damping keeps its structure with the weighted
    mass appearing in the mass-proportional part.
    """
    _require_mass_orthonormal(basis)
    if basis.m != model.m:
        raise ValueError(f"basis has {basis.m} rows for model order {model.m}")
    if not model.elements:
        raise ValueError("model carries no element blocks to weight")
    mass_w, stiffness_w = _weighted_assembly(model, weights)
    v = basis.matrix
    stiffness_r = v.T @ (stiffness_w @ v)
    damping_r = model.a1 * (v.T @ (mass_w[:, None] * v)) + model.a2 * stiffness_r
    return ReducedModel(
        mass=np.eye(basis.k),
        damping=damping_r,
        stiffness=stiffness_r,
        provenance="ecsw",
        symmetric=True,
        basis=basis,
        a1=model.a1,
        a2=model.a2,
        mass_is_identity=True,
        external_force=model.external_force,
        load_map=v.T,
    )


# ---------------------------------------------------------------------------
# Sampled stepping
# ---------------------------------------------------------------------------


def hrom_step(hrom, state, dt, velocity_update="chained"):
    """One explicit step of a naive-collocation model.

    Accelerations are formed at the sampled rows only and the sampled
    displacement rows are advanced; the reduced displacement update then
    solves ``(P.T V) x_new = (P.T V) x + dt * v_rows`` (least squares when
    there are more rows than basis columns).

    ``velocity_update`` selects what happens to velocities:

    * ``"chained"`` (default): the sampled-row velocities persist across
      steps (``state.row_v_half``) and the reduced half-step velocity is
      recovered from the displacement difference.
    * ``"least-squares"``: the reduced half-step velocity is re-fit from
      the updated row velocities each step and rows are re-projected from
      it; nothing extra persists.

    The two coincide when the number of sampled rows equals the basis
    size.
    """
    if hrom.provenance != "naive-collocation":
        raise TypeError(
            f"hrom_step handles naive-collocation models, got {hrom.provenance!r}"
        )
    if velocity_update not in ("chained", "least-squares"):
        raise ValueError(f"unknown velocity_update {velocity_update!r}")
    row_basis = hrom.row_basis
    force_rows = hrom.force_at(state.x, state.v_half, state.t)
    accel_rows = force_rows / hrom.row_mass
    v_rows = state.row_v_half
    if v_rows is None or velocity_update == "least-squares":
        v_rows = row_basis @ state.v_half
    v_rows = v_rows + dt * accel_rows
    if velocity_update == "chained":
        x_new = hrom.row_basis_pinv @ (row_basis @ state.x + dt * v_rows)
        v_half_new = (x_new - state.x) / dt
        carry = v_rows
    else:
        v_half_new = hrom.row_basis_pinv @ v_rows
        x_new = state.x + dt * v_half_new
        carry = None
    return replace(
        state,
        x=x_new,
        v_half=v_half_new,
        t=state.t + dt,
        n=state.n + 1,
        row_v_half=carry,
    )


def sampled_step_matrix(hrom, dt):
    """Exact one-step matrix of the chained sampled update (zero load).

    State layout ``[reduced displacements (k), sampled row velocities (p)]``;
    after the first step the chained update is linear in that state, so
    its spectral radius governs stability of :func:`hrom_step`.
    """
    if hrom.provenance != "naive-collocation":
        raise TypeError(
            f"sampled_step_matrix handles naive-collocation models, "
            f"got {hrom.provenance!r}"
        )
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    k = hrom.dim
    p = hrom.row_basis.shape[0]
    pinv = hrom.row_basis_pinv
    inv_mass = 1.0 / hrom.row_mass
    # v_rows' = v_rows + dt * a_rows,  a_rows = -Minv (Cr pinv v_rows + Kr x)
    block_vx = -dt * (inv_mass[:, None] * hrom.stiffness)
    block_vv = np.eye(p) - dt * (inv_mass[:, None] * (hrom.damping @ pinv))
    # x' = x + dt * pinv v_rows'
    top = np.hstack([np.eye(k) + dt * (pinv @ block_vx), dt * (pinv @ block_vv)])
    bottom = np.hstack([block_vx, block_vv])
    return np.vstack([top, bottom])


# ---------------------------------------------------------------------------
# JSON round-trips
# ---------------------------------------------------------------------------

_SAMPLE_KEYS = {"collocation", "damping_reach", "stiffness_reach"}
_WEIGHT_KEYS = {"xi", "support", "residual"}


def sample_set_to_dict(samples):
    return {
        "collocation": list(samples.collocation),
        "damping_reach": list(samples.damping_reach),
        "stiffness_reach": list(samples.stiffness_reach),
    }


def sample_set_from_dict(doc):
    if not isinstance(doc, dict):
        raise FormatError("sample-set document must be a JSON object")
    unknown = set(doc) - _SAMPLE_KEYS
    if unknown:
        raise FormatError(f"sample set has unknown keys: {sorted(unknown)}")
    missing = _SAMPLE_KEYS - set(doc)
    if missing:
        raise FormatError(f"sample set is missing keys: {sorted(missing)}")
    try:
        return SampleSet(
            tuple(doc["collocation"]),
            tuple(doc["damping_reach"]),
            tuple(doc["stiffness_reach"]),
        )
    except (TypeError, ValueError) as exc:
        raise FormatError(str(exc)) from exc


def write_sample_set(samples, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(sample_set_to_dict(samples), fh, indent=1)
        fh.write("\n")


def read_sample_set(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from exc
    return sample_set_from_dict(doc)


def weights_to_dict(weights):
    return {
        "xi": [float(w) for w in weights.xi],
        "support": list(weights.support),
        "residual": float(weights.residual),
    }


def weights_from_dict(doc):
    if not isinstance(doc, dict):
        raise FormatError("weights document must be a JSON object")
    unknown = set(doc) - _WEIGHT_KEYS
    if unknown:
        raise FormatError(f"weights have unknown keys: {sorted(unknown)}")
    missing = _WEIGHT_KEYS - set(doc)
    if missing:
        raise FormatError(f"weights are missing keys: {sorted(missing)}")
    try:
        return EcswWeights(
            xi=np.array(doc["xi"], dtype=float),
            support=tuple(doc["support"]),
            residual=float(doc["residual"]),
        )
    except (TypeError, ValueError) as exc:
        raise FormatError(str(exc)) from exc


def write_weights(weights, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(weights_to_dict(weights), fh, indent=1)
        fh.write("\n")


def read_weights(weights_path):
    try:
        with open(weights_path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{weights_path}: not valid JSON ({exc})") from exc
    return weights_from_dict(doc)
