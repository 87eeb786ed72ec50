"""Golden-number checks behind the ``romstab reproduce`` command.

The expected values are regression targets for the bundled reference
models: a five-node spring-string with stiff boundary springs, its one-mode
reductions, a hand-weighted element assembly, and a 100-node variant.  Each
target pairs the embedded expected value and tolerance with the value the
library computes now; drift in any row signals a regression in assembly,
reduction, or stability analysis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hyper import ecsw_reduce, ecsw_weighted_operator
from .kernels import gen_eig_diag_mass
from .models import build_string_model
from .reduction import galerkin_reduce, modal_basis
from .stability import critical_dt_report

__all__ = [
    "TargetCheck",
    "ReproduceReport",
    "GROUPS",
    "reference_string_model",
    "REFERENCE_OPERATOR",
    "OPERATOR_NOTE",
    "run_reproduce",
]

GROUPS = ("string5", "galerkin", "ecsw", "string100")

#: Expected inv(M) K for the five-node reference string (element mass 1,
#: element stiffness 10, unit length, boundary springs 99x stiffer).  End
#: nodes carry half an element mass, so the boundary rows are scaled by 2.
REFERENCE_OPERATOR = np.array(
    [
        [2000.0, -20.0, 0.0, 0.0, 0.0],
        [-10.0, 20.0, -10.0, 0.0, 0.0],
        [0.0, -10.0, 20.0, -10.0, 0.0],
        [0.0, 0.0, -10.0, 20.0, -10.0],
        [0.0, 0.0, 0.0, -20.0, 2000.0],
    ]
)

OPERATOR_NOTE = (
    "note: the trailing diagonal entry of inv(M) K is +2000, not negative — "
    "a negative value would contradict the positive semi-definiteness of the "
    "stiffness and the trace identity trace(inv(M) K) = 4060 = sum of the "
    "eigenvalues, both of which are checked above."
)

#: The hand-picked element weight vector for the weighted-assembly example:
#: all weight on the second element.
EXAMPLE_WEIGHTS = (0.0, 4.0, 0.0, 0.0)


@dataclass(frozen=True)
class TargetCheck:
    """One golden-number row: expected vs computed at a stated tolerance."""

    name: str
    group: str
    description: str
    expected: str
    computed: str
    tolerance: str
    passed: bool

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "group": self.group,
            "description": self.description,
            "expected": self.expected,
            "computed": self.computed,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


@dataclass(frozen=True)
class ReproduceReport:
    checks: tuple
    operator: np.ndarray
    note: str

    @property
    def all_pass(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "checks": [c.to_dict() for c in self.checks],
            "operator": self.operator.tolist(),
            "note": self.note,
            "all_pass": self.all_pass,
        }


def reference_string_model(m=5):
    """The reference string: element mass 1, stiffness 10, length 1, stiff ends."""
    return build_string_model(
        m, element_mass=1.0, element_stiffness=10.0, length=1.0, boundary_factor=99.0
    )


def _vec(x):
    return "[" + ", ".join(f"{v:.6g}" for v in np.atleast_1d(x)) + "]"


def _string5_checks():
    model = reference_string_model(5)
    operator = model.stiffness / model.mass[:, None]
    dev = float(np.abs(operator - REFERENCE_OPERATOR).max())
    yield TargetCheck(
        name="string5-operator",
        group="string5",
        description="five-node string: inv(M) K matches the reference matrix",
        expected="max abs deviation 0",
        computed=f"max abs deviation {dev:.3g}",
        tolerance="1e-9 absolute per entry",
        passed=dev <= 1e-9,
    )

    eigs = gen_eig_diag_mass(model.stiffness, model.mass).values
    target = np.array([5.81, 19.90, 34.09, 2000.101, 2000.101])
    worst = float(np.abs(eigs - target).max())
    yield TargetCheck(
        name="string5-spectrum",
        group="string5",
        description="five-node string: eigenvalues of inv(M) K",
        expected=_vec(target),
        computed=_vec(eigs),
        tolerance="0.01 absolute per entry",
        passed=worst <= 0.01,
    )

    trace = float(np.trace(operator))
    eig_sum = float(eigs.sum())
    trace_dev = abs(trace - 4060.0) / 4060.0
    sum_dev = abs(eig_sum - trace) / 4060.0
    yield TargetCheck(
        name="string5-trace",
        group="string5",
        description="five-node string: trace of inv(M) K equals 4060 and the eigenvalue sum",
        expected="4060",
        computed=f"trace {trace:.12g}, eigenvalue sum {eig_sum:.12g}",
        tolerance="1e-9 relative",
        passed=trace_dev <= 1e-9 and sum_dev <= 1e-9,
    )


def _galerkin_checks():
    model = reference_string_model(5)
    basis = modal_basis(model, [1])
    rom = galerkin_reduce(model, basis)
    lam = float(rom.stiffness[0, 0])
    yield TargetCheck(
        name="galerkin-second-mode",
        group="galerkin",
        description="one-mode (second-mode) reduction of the five-node string: reduced stiffness",
        expected="[19.9]",
        computed=_vec([lam]),
        tolerance="0.05 absolute",
        passed=abs(lam - 19.90) <= 0.05,
    )


def _ecsw_checks():
    model = reference_string_model(5)
    weights = np.array(EXAMPLE_WEIGHTS)
    operator = ecsw_weighted_operator(model, weights)
    eigs = np.sort(np.linalg.eigvalsh(0.5 * (operator + operator.T)))
    target = np.array([0.0, 0.0, 0.0, 0.0, 80.0])
    worst = float(np.abs(eigs - target).max())
    yield TargetCheck(
        name="ecsw-weighted-spectrum",
        group="ecsw",
        description="weighted assembly with element weights (0, 4, 0, 0): "
        "eigenvalues of the mass-normalized weighted stiffness",
        expected=_vec(target),
        computed=_vec(eigs),
        tolerance="1e-9 absolute per entry",
        passed=worst <= 1e-9,
    )

    basis = modal_basis(model, [1])
    hrom = ecsw_reduce(model, weights, basis)
    lam = float(hrom.stiffness[0, 0])
    yield TargetCheck(
        name="ecsw-reduced-eigenvalue",
        group="ecsw",
        description="weighted one-mode reduction: reduced stiffness eigenvalue",
        expected="[20]",
        computed=_vec([lam]),
        tolerance="0.1 absolute",
        passed=abs(lam - 20.0) <= 0.1,
    )


def _string100_checks():
    model = reference_string_model(100)
    fom_eigs = gen_eig_diag_mass(model.stiffness, model.mass).values
    basis = modal_basis(model, list(range(10)))
    rom = galerkin_reduce(model, basis)
    rom_eigs = np.linalg.eigvalsh(0.5 * (rom.stiffness + rom.stiffness.T))

    ratio = float(fom_eigs[-1] / rom_eigs[-1])
    yield TargetCheck(
        name="string100-eigenvalue-ratio",
        group="string100",
        description="100-node string vs its 10-mode reduction: largest-eigenvalue ratio",
        expected="about 2000",
        computed=f"{ratio:.6g}",
        tolerance="within [1800, 2200]",
        passed=1800.0 <= ratio <= 2200.0,
    )

    dt_fom = critical_dt_report(model).dt_crit
    dt_rom = critical_dt_report(rom).dt_crit
    gain = float(dt_rom / dt_fom)
    yield TargetCheck(
        name="string100-dt-gain",
        group="string100",
        description="100-node string vs its 10-mode reduction: critical-step gain",
        expected="44.72",
        computed=f"{gain:.6g}",
        tolerance="5% relative",
        passed=abs(gain - 44.72) <= 0.05 * 44.72,
    )


def run_reproduce(only=None):
    """Evaluate all golden-number rows (or one group) and return the report."""
    if only is not None and only not in GROUPS:
        raise ValueError(f"unknown group {only!r}; choose from {GROUPS}")
    producers = {
        "string5": _string5_checks,
        "galerkin": _galerkin_checks,
        "ecsw": _ecsw_checks,
        "string100": _string100_checks,
    }
    groups = GROUPS if only is None else (only,)
    checks = []
    for group in groups:
        checks.extend(producers[group]())
    model = reference_string_model(5)
    operator = model.stiffness / model.mass[:, None]
    return ReproduceReport(checks=tuple(checks), operator=operator, note=OPERATOR_NOTE)


def format_report(report, show_operator=True):
    """Human-readable rendering: one PASS/FAIL row per target plus the matrix."""
    lines = []
    for c in report.checks:
        status = "PASS" if c.passed else "FAIL"
        lines.append(f"[{status}] {c.name}: {c.description}")
        lines.append(f"       expected {c.expected}  (tolerance {c.tolerance})")
        lines.append(f"       computed {c.computed}")
    if show_operator:
        lines.append("")
        lines.append("reference operator inv(M) K:")
        for row in report.operator:
            lines.append("  [" + "  ".join(f"{v:9.1f}" for v in row) + "]")
        lines.append(report.note)
    return "\n".join(lines)
