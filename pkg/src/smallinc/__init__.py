"""Small-inclusion asymptotics for time-harmonic electromagnetic fields.

Closed-form dyadic kernels, polarization tensors, leading-order field
expansions, a Lippmann-Schwinger volume-integral oracle and energy
perturbation metrics.
"""
__version__ = "0.1.0"

from .asymptotics import (
    AsymptoticCoefficients,
    asymptotic_E,
    asymptotic_E_ball,
    asymptotic_H,
    asymptotic_H_ball,
    ball_coefficients,
    energy_rate_perturbation,
    source_pairing,
)
from .energy import (
    AsymptoticProvider,
    BackgroundProvider,
    EnergyReport,
    OracleProvider,
    ProbeRegion,
    div_poynting,
    energy_scaling_fit,
    instantaneous_energy,
    poynting,
)
from .errors import ConfigError, DomainError, KernelSingularityError, SmallIncError, SolverError
from .green import curl_dyadic_green, dyadic_green, scalar_green
from .oracle import OracleSolution, convergence_study, scattered_field, solve_interior
from .polarization import ContrastProblem, PolarizationTensor, ptensor_ball, ptensor_numeric
from .scene import (
    Ball,
    DipoleSource,
    InclusionSpec,
    Scene,
    VoxelShape,
    WaveContext,
    material_at,
    probe_points,
    validate_scene,
)
from .sources import FieldSample, background_fields
