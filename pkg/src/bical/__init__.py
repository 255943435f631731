"""bical: constructive boundary-data toolkit for fourth-order problems in 2D.

Grid-embedded smooth domains, a collocated clamped fourth-order solver with
curved-boundary closure, oscillatory special solutions with cutoff boundary
data, a Gaussian-windowed analytic transform, linearized boundary maps for
lower-order perturbations, moment-based coefficient recovery, and kernel-
potential density checks — with a CLI producing deterministic CSV/JSON
reports and figures.
"""

__version__ = "0.1.0"

from .geometry import (
    Disk,
    SmoothedStadium,
    DentedDisk,
    SigmaArc,
    Domain,
    GridRectangle,
    build_domain,
    build_aligned_rectangle,
    enclosing_rectangle,
    lattice_injection,
    standard_configuration,
    NormalizedConfiguration,
    support_function,
)
from .fields import Field, BoundaryData
from .core import (
    DiscreteOperator,
    assemble_bilaplacian,
    solve_dirichlet,
    green_kernel,
    CauchyTraces,
)
from .special import (
    Amplitude,
    Cutoff,
    CgoProfile,
    SpecialSolution,
    cgo_phase,
    make_cutoff,
    make_special_solution,
    standard_amplitudes,
    verify_decay,
)
from .linearized import (
    CauchyQuadruple,
    PerturbationQ,
    apply_Q,
    bilinear_form,
    boundary_map,
    duality_check,
    frechet_derivative_B,
    linearization_order,
    perturbed_operator,
    random_perturbation,
    random_sigma_data,
    solve_P_Q,
)

__all__ = [
    "Disk",
    "SmoothedStadium",
    "DentedDisk",
    "SigmaArc",
    "Domain",
    "GridRectangle",
    "build_domain",
    "build_aligned_rectangle",
    "enclosing_rectangle",
    "lattice_injection",
    "standard_configuration",
    "NormalizedConfiguration",
    "support_function",
    "Field",
    "BoundaryData",
    "DiscreteOperator",
    "assemble_bilaplacian",
    "solve_dirichlet",
    "green_kernel",
    "CauchyTraces",
    "Amplitude",
    "Cutoff",
    "CgoProfile",
    "SpecialSolution",
    "cgo_phase",
    "make_cutoff",
    "make_special_solution",
    "standard_amplitudes",
    "verify_decay",
    "__version__",
]
