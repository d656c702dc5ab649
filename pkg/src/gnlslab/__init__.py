"""Spectral laboratory for the frequency-truncated generalized NLS on the circle."""

from .spectral import (
    FourierState,
    ModelParams,
    project,
    dyadic_project,
    sobolev_norm,
    lebesgue_norm,
    nonlinearity,
)
from .sampling import EnsembleSpec, CutoffSpec, sample_mu_s, smooth_cutoff, cutoff_weight, ensemble_mean
from .functionals import (
    FrequencyTuple,
    EnergyBreakdown,
    psi_2s,
    omega,
    Psi0,
    Psi1,
    mass,
    hamiltonian,
    counterterm,
    truncated_energy,
    renormalized_energy,
    multilinear_M,
    multilinear_T,
    multilinear_N,
    energy_correction,
    modified_energy,
    modified_energy_derivative,
    density_g,
    density_f,
)
from .flow import (
    evolve,
    picard_local,
    roundtrip_defect,
    conservation_report,
    TrajectoryRecord,
)

__version__ = "0.1.0"
