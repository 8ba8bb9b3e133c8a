"""Non-reciprocal cavity-circulator models for Python."""

from ._errors import (
    CirculatorError,
    ConfigError,
    DataParseError,
    DegenerateAnisotropyError,
    DegenerateCouplingError,
    DivisionByNegligibleError,
    DomainError,
    FitNonConvergenceError,
    ModeCollapseError,
    NearDefectiveError,
    NumericalError,
    OnResonancePoleError,
    QuadratureNonConvergenceError,
    SingularAtResonanceError,
    SingularBlockError,
    UnidentifiableParameterError,
)
from ._version import __version__
from .anisotropy import (
    anisotropy_profile,
    fit_sech,
    langevin_moments,
    moment_expectations,
    partition_function,
)
from .ferrite import (
    anisotropic_weighted_tensor,
    demagnetized_tensor,
    kittel_frequency,
    kittel_frequency_general,
    oersted_to_ampere_per_meter,
    partial_magnetization,
    polder_tensor,
    polder_tensor_for_field,
    sandy_green_scalars,
    sandy_green_tensor,
)
from .fitting import (
    fit_global_params,
    fit_global_traces,
    fit_two_lorentzians,
    predict_tables,
    sweep_extract,
    synthesize_sweep,
)
from .model import (
    beta_of_field,
    build_four_mode,
    build_two_mode,
    coupling_strengths,
    internal_mode_params,
    magnetization_of_field,
)
from .nonhermitian import (
    adiabatic_eliminate,
    amplitude_ratio,
    eig_biorthogonal,
    eigen_sweep,
    label_modes,
    participation,
    r_limit_check,
    r_ratio,
    similarity_analysis,
    track_modes,
    transform_ratio,
)
from .scattering import (
    circulator_working_point,
    greens_function,
    hybrid_ports,
    insertion_loss,
    isolation_bandwidth,
    isolation_db,
    isolation_ratio,
    kappa_3_from_kappa_c,
    kappa_c_from_kappa_3,
    lorentzian_decomposition,
    optimize_working_point,
    s_matrix,
    three_port_circulator,
    working_point_splitting,
)
from .types import (
    EigenSweep,
    EigenSystem,
    ExtractedTables,
    FerriteParams,
    GlobalFitResult,
    LimitCheck,
    LorentzianComponent,
    LorentzianSet,
    ModelParams,
    ModeLabel,
    PermeabilityTensor,
    Port,
    PortMap,
    ReducedModel,
    SandyGreenScalars,
    SimilarityResult,
    SpectrumTrace,
    ToyModelParams,
    TwoLorentzianFit,
    WorkingPoint,
)

__all__ = [
    "__version__",
    # Model
    "ModelParams",
    "beta_of_field",
    "coupling_strengths",
    "build_two_mode",
    "build_four_mode",
    "magnetization_of_field",
    "internal_mode_params",
    # Non-Hermitian analysis
    "EigenSystem",
    "EigenSweep",
    "ModeLabel",
    "ReducedModel",
    "SimilarityResult",
    "LimitCheck",
    "eig_biorthogonal",
    "track_modes",
    "participation",
    "label_modes",
    "eigen_sweep",
    "r_ratio",
    "amplitude_ratio",
    "adiabatic_eliminate",
    "similarity_analysis",
    "transform_ratio",
    "r_limit_check",
    # Scattering
    "Port",
    "PortMap",
    "LorentzianComponent",
    "LorentzianSet",
    "WorkingPoint",
    "greens_function",
    "hybrid_ports",
    "s_matrix",
    "lorentzian_decomposition",
    "isolation_db",
    "isolation_ratio",
    "three_port_circulator",
    "insertion_loss",
    "kappa_c_from_kappa_3",
    "kappa_3_from_kappa_c",
    "working_point_splitting",
    "optimize_working_point",
    "isolation_bandwidth",
    "circulator_working_point",
    # Ferrite
    "FerriteParams",
    "PermeabilityTensor",
    "SandyGreenScalars",
    "oersted_to_ampere_per_meter",
    "kittel_frequency",
    "kittel_frequency_general",
    "polder_tensor",
    "polder_tensor_for_field",
    "sandy_green_scalars",
    "sandy_green_tensor",
    "partial_magnetization",
    "demagnetized_tensor",
    "anisotropic_weighted_tensor",
    # Anisotropy toy model
    "ToyModelParams",
    "partition_function",
    "moment_expectations",
    "langevin_moments",
    "anisotropy_profile",
    "fit_sech",
    # Fitting
    "SpectrumTrace",
    "TwoLorentzianFit",
    "ExtractedTables",
    "GlobalFitResult",
    "fit_two_lorentzians",
    "sweep_extract",
    "predict_tables",
    "fit_global_params",
    "fit_global_traces",
    "synthesize_sweep",
    # Errors
    "CirculatorError",
    "ConfigError",
    "DataParseError",
    "NumericalError",
    "NearDefectiveError",
    "DivisionByNegligibleError",
    "SingularBlockError",
    "DegenerateCouplingError",
    "SingularAtResonanceError",
    "OnResonancePoleError",
    "DomainError",
    "QuadratureNonConvergenceError",
    "DegenerateAnisotropyError",
    "FitNonConvergenceError",
    "ModeCollapseError",
    "UnidentifiableParameterError",
]
