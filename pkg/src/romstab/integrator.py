"""Explicit central-difference time stepping.

The scheme is the staggered (leapfrog) form: accelerations at step ``n``
come from the nodal force evaluated with displacements at ``n`` and
velocities at ``n - 1/2``; velocities then advance to ``n + 1/2`` and
displacements to ``n + 1``.  On the very first step the initial velocity
stands in for the half-step history.

Any object providing ``dim``, ``mass_inverse_apply(f)`` and
``force_at(x, v_half, t)`` can be stepped — full-order models and
projection-reduced models alike.  Sampled (collocation) reduced models
carry their own update rule and are dispatched to it by
:func:`integrate`.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import FormatError
from .kernels import spectral_radius

__all__ = [
    "IntegratorState",
    "Trajectory",
    "cd_step",
    "integrate",
    "amplification_matrix",
    "assess_amplification_stability",
    "AmplificationAssessment",
    "write_trajectory",
    "read_trajectory",
]


@dataclass(frozen=True)
class IntegratorState:
    """State carried between central-difference steps.

    ``v_half`` holds the staggered velocity at ``t - dt/2`` (the initial
    velocity before the first step).  ``row_v_half`` is only populated by
    the sampled collocation stepper, which chains velocities at its
    sampled rows; everyone else leaves it ``None``.
    """

    x: np.ndarray
    v_half: np.ndarray
    t: float = 0.0
    n: int = 0
    row_v_half: np.ndarray | None = None

    @classmethod
    def initial(cls, x0, v0):
        x0 = np.asarray(x0, dtype=float)
        v0 = np.asarray(v0, dtype=float)
        if x0.shape != v0.shape or x0.ndim != 1:
            raise ValueError(
                f"initial state shapes {x0.shape}/{v0.shape} must be equal 1-D"
            )
        return cls(x=x0, v_half=v0, t=0.0, n=0)


@dataclass
class Trajectory:
    """Recorded displacement history of one integration run."""

    times: np.ndarray
    states: np.ndarray
    divergence_flag: bool = False
    divergence_step: int | None = None


def cd_step(model, state, dt):
    """Advance one central-difference step.

    Non-finite values are *not* trapped here; they propagate into the new
    state so that the driver can flag divergence instead of crashing.
    """
    accel = model.mass_inverse_apply(model.force_at(state.x, state.v_half, state.t))
    v_new = state.v_half + dt * accel
    x_new = state.x + dt * v_new
    return replace(state, x=x_new, v_half=v_new, t=state.t + dt, n=state.n + 1)


def _step_count(t_end, dt):
    # Exact multiples of dt land exactly; anything else rounds down so the
    # run never oversteps t_end.
    return int(np.floor(t_end / dt + 1e-9))


def integrate(model, x0, v0, t_end, dt, record_every=1, blowup=1e6):
    """Step from ``t = 0`` to ``t_end`` at constant ``dt``, recording states.

    Records the initial state, every ``record_every``-th step and the
    final step.  A run is flagged divergent — and stops — when the state
    stops being finite or ``norm(x)`` exceeds ``blowup * max(1, norm(x0))``.

    Returns a :class:`Trajectory`; divergence is reported on the
    trajectory, not raised.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    if t_end < 0.0:
        raise ValueError(f"t_end must be nonnegative, got {t_end}")
    if record_every < 1:
        raise ValueError(f"record_every must be at least 1, got {record_every}")
    if blowup <= 0.0:
        raise ValueError(f"blowup must be positive, got {blowup}")
    x0 = np.asarray(x0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    if x0.shape != (model.dim,) or v0.shape != (model.dim,):
        raise ValueError(
            f"initial state shapes {x0.shape}/{v0.shape} do not match "
            f"model dimension {model.dim}"
        )

    stepper = cd_step
    if getattr(model, "provenance", None) == "naive-collocation":
        from .hyper import hrom_step

        stepper = hrom_step

    state = IntegratorState.initial(x0, v0)
    limit = blowup * max(1.0, float(np.linalg.norm(x0)))
    times = [state.t]
    states = [state.x.copy()]
    diverged = False
    divergence_step = None

    n_steps = _step_count(t_end, dt)
    for n in range(1, n_steps + 1):
        state = stepper(model, state, dt)
        bad = not np.all(np.isfinite(state.x)) or not np.all(
            np.isfinite(state.v_half)
        )
        if bad or float(np.linalg.norm(state.x)) > limit:
            diverged = True
            divergence_step = n
            times.append(state.t)
            states.append(state.x.copy())
            break
        if n % record_every == 0 or n == n_steps:
            times.append(state.t)
            states.append(state.x.copy())

    return Trajectory(
        times=np.array(times),
        states=np.array(states),
        divergence_flag=diverged,
        divergence_step=divergence_step,
    )


def amplification_matrix(mass, damping, stiffness, dt):
    """One-step transfer matrix of the central-difference scheme.

    Maps ``(x_n, x_{n-1})`` to ``(x_{n+1}, x_n)``:

        [[2 I - dt^2 Minv K - dt Minv C,   dt Minv C - I],
         [I,                                0           ]]

    ``mass`` may be a 1-D diagonal or a general square matrix (reduced
    models have dense mass).
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    mass = np.asarray(mass, dtype=float)
    damping = np.asarray(damping, dtype=float)
    stiffness = np.asarray(stiffness, dtype=float)
    d = stiffness.shape[0]
    if stiffness.shape != (d, d) or damping.shape != (d, d):
        raise ValueError("damping and stiffness must be square and same order")
    if mass.ndim == 1:
        if mass.shape != (d,):
            raise ValueError(f"mass diagonal has {mass.shape[0]} entries for order {d}")
        minv_k = stiffness / mass[:, None]
        minv_c = damping / mass[:, None]
    elif mass.ndim == 2:
        if mass.shape != (d, d):
            raise ValueError(f"mass shaped {mass.shape} for order {d}")
        minv_k = np.linalg.solve(mass, stiffness)
        minv_c = np.linalg.solve(mass, damping)
    else:
        raise ValueError("mass must be 1-D (diagonal) or 2-D")
    eye = np.eye(d)
    return np.block(
        [
            [2.0 * eye - dt * dt * minv_k - dt * minv_c, dt * minv_c - eye],
            [eye, np.zeros((d, d))],
        ]
    )


@dataclass(frozen=True)
class AmplificationAssessment:
    stable: bool
    radius: float
    repeated_unit_root: bool


def assess_amplification_stability(a):
    """Classify a transfer matrix: stable iff the spectral radius is at
    most ``1 + 1e-10`` and no root on the unit circle is repeated."""
    sr = spectral_radius(a)
    repeated_unit = sr.repeated_dominant and abs(sr.radius - 1.0) <= 1e-8
    stable = sr.radius <= 1.0 + 1e-10 and not repeated_unit
    return AmplificationAssessment(
        stable=stable, radius=sr.radius, repeated_unit_root=repeated_unit
    )


# ---------------------------------------------------------------------------
# Trajectory CSV round-trip
# ---------------------------------------------------------------------------


def write_trajectory(trajectory, path):
    """Write a trajectory as CSV: header ``t, x_0, ..., x_{d-1}``, one row
    per record, and a final comment ``# diverged=<bool> step=<n>`` (step is
    -1 when the run did not diverge)."""
    d = np.atleast_2d(trajectory.states).shape[1]
    header = ", ".join(["t"] + [f"x_{i}" for i in range(d)])
    step = trajectory.divergence_step if trajectory.divergence_step is not None else -1
    flag = "true" if trajectory.divergence_flag else "false"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for t, row in zip(trajectory.times, trajectory.states):
            fh.write(",".join([repr(float(t))] + [repr(float(v)) for v in row]) + "\n")
        fh.write(f"# diverged={flag} step={step}\n")


def read_trajectory(path):
    """Read a trajectory written by :func:`write_trajectory`."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh]
    lines = [line for line in lines if line.strip()]
    if not lines:
        raise FormatError(f"{path}: empty trajectory file")
    header = [tok.strip() for tok in lines[0].split(",")]
    if header[0] != "t" or any(
        tok != f"x_{i}" for i, tok in enumerate(header[1:])
    ):
        raise FormatError(f"{path}: malformed trajectory header {lines[0]!r}")
    d = len(header) - 1
    diverged = False
    step = None
    rows = []
    for line in lines[1:]:
        if line.lstrip().startswith("#"):
            tokens = line.lstrip("# ").split()
            fields = dict(tok.split("=", 1) for tok in tokens if "=" in tok)
            if "diverged" not in fields or "step" not in fields:
                raise FormatError(f"{path}: malformed trailer {line!r}")
            if fields["diverged"] not in ("true", "false"):
                raise FormatError(f"{path}: malformed divergence flag {line!r}")
            diverged = fields["diverged"] == "true"
            step = int(fields["step"])
            step = None if step < 0 else step
            continue
        values = [tok.strip() for tok in line.split(",")]
        if len(values) != d + 1:
            raise FormatError(
                f"{path}: row has {len(values)} fields, expected {d + 1}"
            )
        try:
            rows.append([float(v) for v in values])
        except ValueError as exc:
            raise FormatError(f"{path}: non-numeric row {line!r}") from exc
    data = np.array(rows) if rows else np.zeros((0, d + 1))
    return Trajectory(
        times=data[:, 0],
        states=data[:, 1:],
        divergence_flag=diverged,
        divergence_step=step,
    )
