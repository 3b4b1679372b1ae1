"""Simulator for relational (perspectival) modal state assignments and
discrete measurement models built on them."""
from .errors import (
    ConfigError,
    DimensionMismatch,
    InvariantViolation,
    ModalSimError,
    NonHermitianError,
    NonUnitaryError,
    OverlappingSystems,
    PhotonMissError,
    SubsystemError,
    ZeroProbabilityBranch,
)
from .hilbert import (
    CompositeSpace,
    DensityOperator,
    PureState,
    Subsystem,
    partial_trace,
    schmidt_decompose,
    spectral_resolution,
    tensor_product,
)
from .relational import (
    Assignment,
    joint_assignment_probability,
    relational_state,
    sample_assignment,
    self_state_candidates,
)
from .photon import (
    ObjectDensity,
    ObjectGrid,
    RecoilKernel,
    TransferFunctions,
    build_transfer_functions,
    display_probabilities,
    display_probabilities_recoil,
    relational_object_state,
)
from .observers import JointOutcomeTable, agreement_mass, epr_scenario, two_device_joint
from .dynamics import free_propagator, momentum_check, third_conditional, two_time_joint, two_time_state
from .deloc import JointObjectDeviceState, deloc_joint_prob, relative_state
from .decoherence import (
    DecoherenceReport,
    SectorModel,
    build_sector_model,
    definiteness_check,
    evolve_sector,
    multi_display_model,
    scaling_experiment,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DimensionMismatch",
    "InvariantViolation",
    "ModalSimError",
    "NonHermitianError",
    "NonUnitaryError",
    "OverlappingSystems",
    "PhotonMissError",
    "SubsystemError",
    "ZeroProbabilityBranch",
    "CompositeSpace",
    "DensityOperator",
    "PureState",
    "Subsystem",
    "partial_trace",
    "schmidt_decompose",
    "spectral_resolution",
    "tensor_product",
    "Assignment",
    "joint_assignment_probability",
    "relational_state",
    "sample_assignment",
    "self_state_candidates",
    "ObjectDensity",
    "ObjectGrid",
    "RecoilKernel",
    "TransferFunctions",
    "build_transfer_functions",
    "display_probabilities",
    "display_probabilities_recoil",
    "relational_object_state",
    "JointOutcomeTable",
    "agreement_mass",
    "epr_scenario",
    "two_device_joint",
    "free_propagator",
    "momentum_check",
    "third_conditional",
    "two_time_joint",
    "two_time_state",
    "JointObjectDeviceState",
    "deloc_joint_prob",
    "relative_state",
    "DecoherenceReport",
    "SectorModel",
    "build_sector_model",
    "definiteness_check",
    "evolve_sector",
    "multi_display_model",
    "scaling_experiment",
]
