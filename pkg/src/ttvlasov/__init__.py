"""Low-rank tensor-train algebra with a semi-Lagrangian Vlasov-Poisson solver."""

from .tt import (
    CFLViolation,
    TTTensor,
    TruncationControl,
    add,
    constant,
    dot,
    hadamard_rounded,
    load_tt,
    norm,
    orthogonalize,
    rank_one,
    reconstruct_entry,
    reconstruct_full,
    round,
    save_tt,
    scale,
    scale_fiber,
    shift_fiber,
    tt_from_full,
    zeros,
)
from .ttop import (
    MatrixKernel,
    TTMatrix,
    add_matrix,
    apply_direct,
    diag_field,
    diag_matrix,
    identity_matrix,
    matvec,
    round_matrix,
)
from .grid import PhaseSpaceGrid, make_grid
from .fields import (
    SpatialField,
    density,
    electric_energy,
    field_to_tt,
    poisson_solve,
)
from .advection import advect_multivariate, advect_univariate
from .simulation import (
    DiagnosticsRecord,
    SimulationConfig,
    diagnostics,
    init_case,
    project_conserve,
    run,
    strang_step,
    tolerance_schedule,
)
from .fullgrid import dense_advect, dense_run

__version__ = "0.1.0"

__all__ = [
    "CFLViolation",
    "DiagnosticsRecord",
    "MatrixKernel",
    "PhaseSpaceGrid",
    "SimulationConfig",
    "SpatialField",
    "TTMatrix",
    "TTTensor",
    "TruncationControl",
    "advect_multivariate",
    "advect_univariate",
    "dense_advect",
    "dense_run",
    "density",
    "diagnostics",
    "electric_energy",
    "field_to_tt",
    "init_case",
    "make_grid",
    "poisson_solve",
    "project_conserve",
    "run",
    "strang_step",
    "tolerance_schedule",
    "add_matrix",
    "apply_direct",
    "diag_field",
    "diag_matrix",
    "identity_matrix",
    "matvec",
    "round_matrix",
    "add",
    "constant",
    "dot",
    "hadamard_rounded",
    "load_tt",
    "norm",
    "orthogonalize",
    "rank_one",
    "reconstruct_entry",
    "reconstruct_full",
    "round",
    "save_tt",
    "scale",
    "scale_fiber",
    "shift_fiber",
    "tt_from_full",
    "zeros",
    "__version__",
]
