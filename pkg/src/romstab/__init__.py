"""romstab: critical time steps for explicitly integrated reduced models.

Builds lumped-mass structural models, integrates them with central
differences, projects them onto POD or modal bases, hyper-reduces the
force evaluation (collocation, DEIM/GNAT, ECSW), and reports critical
time steps with the guarantees that survive each reduction.
"""

from .errors import (
    ConvergenceError,
    FormatError,
    InfeasibleError,
    RankDeficiencyError,
    RomStabError,
)
from .kernels import (
    EigenPairs,
    SpectralRadius,
    gen_eig_diag_mass,
    m_orthonormalize,
    pseudoinverse,
    sparse_nnls,
    spectral_radius,
    sym_eig,
    symmetrize,
    thin_svd,
)
from .models import (
    ElementBlock,
    ForceTable,
    FullOrderModel,
    assemble,
    build_string_model,
    damping_matrix,
    read_model,
    write_model,
)
from .integrator import (
    AmplificationAssessment,
    IntegratorState,
    Trajectory,
    amplification_matrix,
    assess_amplification_stability,
    cd_step,
    integrate,
    read_trajectory,
    write_trajectory,
)
from .reduction import (
    MASS_ORTHONORMAL,
    PLAIN_ORTHONORMAL,
    ReducedBasis,
    ReducedModel,
    galerkin_reduce,
    modal_basis,
    pod_basis,
    read_basis,
    reconstruct,
    snapshots_from_trajectory,
    write_basis,
)
from .hyper import (
    EcswWeights,
    SampleSet,
    collocate_naive,
    collocate_projected,
    deim_points,
    deim_reduce,
    ecsw_reduce,
    ecsw_train,
    ecsw_training_system,
    ecsw_weighted_operator,
    gnat_reduce,
    hrom_step,
    read_sample_set,
    read_weights,
    sampled_step_matrix,
    write_sample_set,
    write_weights,
)
from .stability import (
    DominanceCheck,
    InterlacingCheck,
    StabilityReport,
    check_interlacing,
    critical_dt_at_frequency,
    critical_dt_modal,
    critical_dt_report,
    critical_dt_system,
    damping_ratio,
    element_dt_bound,
    verify_rom_dt_dominance,
)
from .verify import PROPERTY_NAMES, PropertyResult, run_property, run_suite
from .reproduce import (
    ReproduceReport,
    TargetCheck,
    reference_string_model,
    run_reproduce,
)

__version__ = "0.1.0"

__all__ = [
    "RomStabError",
    "ConvergenceError",
    "RankDeficiencyError",
    "InfeasibleError",
    "FormatError",
    "EigenPairs",
    "SpectralRadius",
    "symmetrize",
    "sym_eig",
    "gen_eig_diag_mass",
    "thin_svd",
    "m_orthonormalize",
    "pseudoinverse",
    "sparse_nnls",
    "spectral_radius",
    "ForceTable",
    "ElementBlock",
    "FullOrderModel",
    "assemble",
    "build_string_model",
    "damping_matrix",
    "read_model",
    "write_model",
    "IntegratorState",
    "Trajectory",
    "cd_step",
    "integrate",
    "amplification_matrix",
    "assess_amplification_stability",
    "AmplificationAssessment",
    "read_trajectory",
    "write_trajectory",
    "PLAIN_ORTHONORMAL",
    "MASS_ORTHONORMAL",
    "ReducedBasis",
    "ReducedModel",
    "pod_basis",
    "modal_basis",
    "galerkin_reduce",
    "reconstruct",
    "snapshots_from_trajectory",
    "read_basis",
    "write_basis",
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
    "read_sample_set",
    "write_sample_set",
    "read_weights",
    "write_weights",
    "StabilityReport",
    "InterlacingCheck",
    "DominanceCheck",
    "damping_ratio",
    "critical_dt_modal",
    "critical_dt_at_frequency",
    "critical_dt_system",
    "critical_dt_report",
    "element_dt_bound",
    "check_interlacing",
    "verify_rom_dt_dominance",
    "PropertyResult",
    "PROPERTY_NAMES",
    "run_property",
    "run_suite",
    "TargetCheck",
    "ReproduceReport",
    "reference_string_model",
    "run_reproduce",
    "__version__",
]
