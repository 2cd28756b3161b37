"""Dual classical actions: solvers, functionals, bounds and propagators."""

from .action import (
    ActionValue,
    SurfaceResidualField,
    action_r,
    action_s,
    hj_residual_r,
    hj_residual_s,
    k_total_derivative_residual,
    legendre_residual,
)
from .bounds import (
    BoundCertificate,
    PerturbationSpec,
    certify_bounds,
    functional_G,
    functional_Gp,
    functional_J,
    functional_Jp,
    pi_from_theta,
    theta_from_pi,
)
from .dynamics import (
    BoundarySpec,
    PhasePath,
    ShootingReport,
    integrate_ivp,
    solve_momentum_bvp,
    solve_position_bvp,
)
from .errors import (
    BandwidthError,
    BlowUpError,
    CausticError,
    DomainError,
    DualActionError,
    NotSaddleError,
    NumericError,
    PreconditionError,
    RootFindError,
    UnsolvableRestrictionError,
    UnsupportedOrderError,
)
from .extrema import (
    ExtremumReport,
    SecondVariationMatrix,
    classify_extremum,
    hessian_r,
    hessian_s,
)
from .model import DomainBox, HamiltonianModel, convexity_probe, eval_partials, saddle_probe
from .propagator import (
    DeltaKernel,
    FourierGrid,
    KernelSamples,
    PropagatorValue,
    SliceScheme,
    compose_kernels,
    fourier_endpoints,
    free_momentum_delta_kernel,
    free_momentum_propagator,
    momentum_kernel_sampler,
    normalization_extraction,
    position_kernel_sampler,
    sliced_momentum_propagator,
    sliced_position_propagator,
)
from .spin import (
    SpinPathEnsemble,
    composite_spin_propagator,
    spin_half_propagator,
)

__version__ = "0.1.0"
