"""Mesh-free neural solver for Stokes interface problems.

Discontinuous pressure is represented by a network with an indicator
augmented input; velocity with kinked derivatives by a network with a
|level set| augmented input. Both are trained jointly by full-batch
Levenberg-Marquardt on momentum, incompressibility, traction-balance and
boundary residuals at mesh-free collocation points.
"""

import os as _os

# long busy-wait spins in the BLAS worker pool starve the frequent small
# kernels of this workload; must be set before the pool first spins up
_os.environ.setdefault("OPENBLAS_THREAD_TIMEOUT", "4")
_os.environ.setdefault("OMP_WAIT_POLICY", "PASSIVE")

from .geometry import (
    Circle,
    InterfacePoint,
    InterfacePoints,
    LevelSetGeometry,
    PolarFlower,
    Sphere,
    cusp_features,
    curvature2d,
    indicator,
    parameterize_interface,
    phi,
    unit_normal,
)
from .network import (
    NetPair,
    SubNetParams,
    count_params,
    forward,
    forward_jet,
    init_net_pair,
    init_params,
    jet_param_jacobian,
)
from .optimizer import LMState, TrainConfig, lm_step, train
from .physics import (
    ExactFieldJets,
    NetworkJets,
    ResidualAssembler,
    ResidualVector,
    assemble,
    assemble_jacobian,
    boundary_residual,
    divergence_residual,
    momentum_residual,
    traction_residual,
)
from .problems import (
    CATALOG,
    FieldOracle,
    ProblemSpec,
    derive_traction_force,
    example1,
    example2,
    example3,
    example4,
    example5,
    get_problem,
    list_problems,
)
from .sampling import (
    Ball,
    Box,
    TrainingSet,
    build_test_set,
    build_training_set,
    latin_hypercube,
    sample_boundary,
    sample_interior,
)
from .evaluation import (
    ErrorReport,
    dump_fields,
    linf_errors,
    run_trials,
)

__version__ = "0.1.0"
