"""Delayed incompressible Navier-Stokes on the periodic 3-torus.

Fourier-Galerkin fields, a linear advection-diffusion stepper, the method
of steps for the delayed problem, an undelayed reference solver and
property suites that check the solvers against their invariants.
"""
from .config import (
    ConfigError,
    FieldSpec,
    SimConfig,
    build_field,
    default_config,
    default_config_text,
    load_config,
    parse_config,
    steady_field,
)
from .delay import (
    HistorySegment,
    SemigroupState,
    UMapInput,
    history_as_advection,
    map_U,
    segment_at,
    semigroup_apply,
    solve_delay,
    steps_per_delay,
)
from .io import CheckpointError, CheckpointRecord, read_checkpoint, write_checkpoint, write_diagnostics
from .linearized import (
    AdvectionSeries,
    BlowUpError,
    EnergyLedger,
    Trajectory,
    apriori_margin,
    energy_residual,
    energy_residual_series,
    solve_linearized,
    step_linearized,
)
from .operators import (
    bound_ratio,
    check_trilinear_exponents,
    convolution_B_oracle,
    integrating_factor,
    negative_control,
    nonlinear_B,
    stokes_apply,
    stokes_multiplier,
    trilinear_b,
)
from .reference import solve_nse, splitting_terms, unsplit_integral
from .spectral import (
    Lattice,
    SpectralField,
    divergence_max,
    from_physical,
    galerkin_truncate,
    inner,
    leray_project,
    make_lattice,
    random_solenoidal_field,
    single_mode_field,
    sobolev_norm,
    to_physical,
)
from .verify import (
    VerifyReport,
    continuity_probe,
    dt_refinement_study,
    holder_quotient,
    mu_sweep,
    run_invariant_suite,
)

__version__ = "0.1.0"
