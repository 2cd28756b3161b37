"""Time-sliced quantum propagators for quadratic systems, in both
representations, plus the endpoint Fourier transform linking them.

The N-slice Gaussian chain is evaluated exactly: the quadratic-form
determinant obeys the forward recurrence f_{j+1} = (2 - w^2 dt^2) f_j -
f_{j-1} (w -> iw flips the sign for the saddle family), and the
exponent is the discrete action of the discrete classical path.  The
momentum representation of the oscillator reuses the same chain with
the dual parameters (mass 1/(m w^2), same frequency).

Delta-supported kernels (free particle in momentum representation) are
carried symbolically: a support predicate, a unimodular phase and a
causality flag.  Transforms against oscillatory kernels integrate over
a Planck-tapered window so the truncation error decays faster than any
power of the bandwidth.
"""

from __future__ import annotations

import cmath
import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import BandwidthError, CausticError, PreconditionError
from .model import HamiltonianModel

UNIMODULAR_TOL = 1e-12
CAUSTIC_DET_TOL = 1e-9
MIN_TAPER_SWING = 8.0 * math.pi  # phase turns across the taper zone for <1% leakage
MAX_PHASE_STEP = 0.9 * math.pi   # aliasing guard on the quadrature grid


@dataclass(frozen=True)
class SliceScheme:
    n_slices: int
    representation: str = "position"
    hbar: float = 1.0

    def __post_init__(self):
        if self.n_slices < 1:
            raise PreconditionError("slicing needs n_slices >= 1")
        if self.representation not in ("position", "momentum"):
            raise PreconditionError("representation must be 'position' or 'momentum'")
        if self.hbar <= 0:
            raise PreconditionError("hbar must be positive")


@dataclass(frozen=True)
class PropagatorValue:
    """Either a regular complex amplitude or a delta-supported value."""

    variant: str
    amplitude: complex
    support_matched: bool | None = None
    causal: bool | None = None

    @classmethod
    def regular(cls, amplitude):
        return cls(variant="regular", amplitude=complex(amplitude))

    @classmethod
    def delta(cls, phase, support_matched, causal):
        phase = complex(phase)
        if abs(abs(phase) - 1.0) > UNIMODULAR_TOL:
            raise PreconditionError("delta-variant phase must be unimodular")
        return cls(variant="delta", amplitude=phase, support_matched=bool(support_matched),
                   causal=bool(causal))

    @property
    def phase(self):
        if self.variant != "delta":
            raise PreconditionError("phase is defined for delta-variant values only")
        return self.amplitude


@dataclass(frozen=True)
class ChainResult:
    """Raw Gaussian-chain output: amplitude = prefactor * exp(i action / hbar)."""

    amplitude: complex
    prefactor: complex
    discrete_action: float
    nodes: np.ndarray
    dt: float


def _quadratic_coefficients(model):
    """(mass, c0, c2) for H = p^2/2m + c0 + c2 q^2; rejects anything else."""
    if model.kind not in ("separable", "quadratic-saddle") or model._vcoeffs is None:
        raise PreconditionError("sliced propagators need a polynomial quadratic model")
    c = list(model.potential_coeffs) + [0.0, 0.0, 0.0]
    if any(abs(x) > 0 for x in c[3:]) or c[1] != 0.0:
        raise PreconditionError(
            "sliced propagators cover the quadratic family only (V = c0 + c2 q^2)"
        )
    return model.mass, c[0], c[2]


def _gaussian_chain(mass, c0, c2, x_i, x_f, t, n_slices, hbar):
    """Exact N-slice chain for H = x'^2/(2 mass) + c0 + c2 x^2.

    The prefactor square root takes the principal branch, which is the
    continuous continuation from t -> 0+ as long as the determinant
    stays positive (guaranteed below the first caustic).
    """
    if t <= 0:
        raise PreconditionError("sliced propagators need t > 0")
    omega_sq = 2.0 * c2 / mass
    if omega_sq > 0 and math.sqrt(omega_sq) * t >= math.pi:
        raise PreconditionError("endpoint beyond the first caustic (omega t >= pi)")
    dt = t / n_slices
    u = 2.0 - omega_sq * dt * dt

    f = np.empty(n_slices + 1)
    f[0], f[1] = 0.0, 1.0
    for j in range(1, n_slices):
        f[j + 1] = u * f[j] - f[j - 1]
    det = dt * f[n_slices]
    if abs(det) < CAUSTIC_DET_TOL:
        raise CausticError(f"chain determinant {det:.3e} below caustic tolerance")

    # discrete classical path from the three-term recursion
    nodes = (x_i * f[::-1] + x_f * f) / f[n_slices]
    kinetic = mass * np.sum(np.diff(nodes) ** 2) / (2.0 * dt)
    v = c0 + c2 * nodes**2
    potential = dt * (np.sum(v) - 0.5 * (v[0] + v[-1]))
    action = kinetic - potential

    prefactor = cmath.sqrt(mass / (2.0j * math.pi * hbar * det))
    return ChainResult(
        amplitude=prefactor * cmath.exp(1j * action / hbar),
        prefactor=prefactor, discrete_action=float(action), nodes=nodes, dt=dt,
    )


def sliced_position_chain(model: HamiltonianModel, q_i, q_f, t, scheme: SliceScheme) -> ChainResult:
    mass, c0, c2 = _quadratic_coefficients(model)
    return _gaussian_chain(mass, c0, c2, float(q_i), float(q_f), float(t),
                           scheme.n_slices, scheme.hbar)


def sliced_position_propagator(model: HamiltonianModel, q_i, q_f, t, scheme: SliceScheme) -> PropagatorValue:
    """Position-representation N-slice propagator for the quadratic family."""
    return PropagatorValue.regular(sliced_position_chain(model, q_i, q_f, t, scheme).amplitude)


def _dual_chain_parameters(model):
    """Momentum-representation chain parameters for the oscillator.

    Substituting the force equation into H leaves kinetic-like momentum
    slopes over 2 m w^2 and a momentum-squared 'potential' p^2/2m, i.e.
    the same chain with mass 1/(m w^2) and the original frequency.
    """
    mass, c0, c2 = _quadratic_coefficients(model)
    if c2 <= 0:
        raise PreconditionError(
            "momentum-representation slicing needs an oscillator (c2 > 0)"
        )
    return 1.0 / (2.0 * c2), c0, 1.0 / (2.0 * mass)


def sliced_momentum_chain(model: HamiltonianModel, p_i, p_f, t, scheme: SliceScheme) -> ChainResult:
    dual_mass, c0, dual_c2 = _dual_chain_parameters(model)
    return _gaussian_chain(dual_mass, c0, dual_c2, float(p_i), float(p_f), float(t),
                           scheme.n_slices, scheme.hbar)


def sliced_momentum_propagator(model: HamiltonianModel, p_i, p_f, t, scheme: SliceScheme) -> PropagatorValue:
    """Momentum-representation N-slice oscillator propagator."""
    return PropagatorValue.regular(sliced_momentum_chain(model, p_i, p_f, t, scheme).amplitude)


def free_momentum_propagator(mass, p_i, p_f, t, hbar: float = 1.0,
                             support_atol: float = 0.0) -> PropagatorValue:
    """Delta-supported free-particle momentum propagator.

    Support matching compares the endpoint momenta exactly (set
    support_atol > 0 for sampled grids); the phase is
    exp(-i p^2 t / (2 m hbar)) and the causal flag records t > 0.
    """
    if mass <= 0:
        raise PreconditionError("mass must be positive")
    phase = cmath.exp(-1j * p_i**2 * t / (2.0 * mass * hbar))
    matched = p_i == p_f if support_atol == 0.0 else abs(p_i - p_f) <= support_atol
    return PropagatorValue.delta(phase, matched, t > 0.0)


@dataclass(frozen=True)
class DeltaKernel:
    """Symbolic delta-supported kernel: prefactor * phase(x) on the diagonal."""

    phase_fn: Callable
    prefactor: float = 1.0
    causal: bool = True


def free_momentum_delta_kernel(mass, t, hbar: float = 1.0, prefactor: float = 1.0) -> DeltaKernel:
    """The free momentum propagator as a transformable kernel object."""
    def phase(p):
        return np.exp(-1j * np.asarray(p, dtype=float) ** 2 * t / (2.0 * mass * hbar))

    return DeltaKernel(phase_fn=phase, prefactor=prefactor, causal=t > 0.0)


# ---------------------------------------------------------------------------
# tapered oscillatory quadrature

def _planck_taper(x, lo, hi, core_lo, core_hi):
    """C-infinity window: 1 on the core, smoothly 0 at the band edges."""
    w = np.ones_like(x)

    def ramp(s):
        s = np.clip(s, 1e-12, 1.0 - 1e-12)
        with np.errstate(over="ignore"):
            return 1.0 / (1.0 + np.exp(1.0 / s - 1.0 / (1.0 - s)))

    right = x > core_hi
    if np.any(right):
        w[right] = ramp((hi - x[right]) / (hi - core_hi))
    left = x < core_lo
    if np.any(left):
        w[left] = ramp((x[left] - lo) / (core_lo - lo))
    w[(x >= hi) | (x <= lo)] = 0.0
    return w


@dataclass(frozen=True)
class FourierGrid:
    """Endpoint grids plus the quadrature window for fourier_endpoints.

    band is the half-width of the integration window in the source
    representation; core_fraction is the untapered part of it.
    """

    out_final: np.ndarray
    out_initial: np.ndarray
    band: float = 48.0
    n_quad: int = 4096
    core_fraction: float = 0.6

    def __post_init__(self):
        object.__setattr__(self, "out_final", np.atleast_1d(np.asarray(self.out_final, float)))
        object.__setattr__(self, "out_initial", np.atleast_1d(np.asarray(self.out_initial, float)))
        if self.band <= 0 or not (0.0 < self.core_fraction < 1.0):
            raise PreconditionError("grid needs band > 0 and core_fraction in (0, 1)")
        if self.n_quad < 16:
            raise PreconditionError("grid needs n_quad >= 16")

    def quad_axis(self):
        x = np.linspace(-self.band, self.band, self.n_quad)
        core = self.core_fraction * self.band
        w = _planck_taper(x, -self.band, self.band, -core, core)
        return x, w, x[1] - x[0]


def _check_bandwidth(values, grid: FourierGrid):
    """Aliasing and band-energy guard on a sampled 1-d integrand (untapered).

    The phase increment per step must stay resolvable, the stationary
    point must sit in the untapered core, and the phase must wind
    through several full turns across each taper zone (a proxy for the
    kernel keeping <1% of its energy beyond the band).  Magnitudes far
    below the peak carry no energy and are ignored.
    """
    mag = np.abs(values)
    peak = np.max(mag)
    alive = np.minimum(mag[1:], mag[:-1]) > 1e-12 * peak
    steps = np.angle(values[1:] * np.conj(values[:-1]))
    absteps = np.where(alive, np.abs(steps), np.nan)
    if np.nanmax(absteps) > MAX_PHASE_STEP:
        raise BandwidthError("quadrature grid cannot resolve the kernel oscillation")
    edge = max(np.max(mag[:8]), np.max(mag[-8:]))
    if edge < 1e-4 * peak:
        return  # magnitude decay alone confines the energy to the band
    core = grid.core_fraction * grid.band
    x = np.linspace(-grid.band, grid.band, grid.n_quad)
    xmid = 0.5 * (x[1:] + x[:-1])
    stationary = xmid[np.nanargmin(absteps)]
    if abs(stationary) > 0.9 * core:
        raise BandwidthError("stationary point of the kernel leaves the untapered core")
    left = np.nansum(absteps[xmid < -core])
    right = np.nansum(absteps[xmid > core])
    if min(left, right) < MIN_TAPER_SWING:
        raise BandwidthError("kernel energy outside the band exceeds tolerance")


@dataclass(frozen=True)
class KernelSamples:
    """Propagator samples over final x initial endpoint grids."""

    representation: str
    x_final: np.ndarray
    x_initial: np.ndarray
    values: np.ndarray
    hbar: float = 1.0

    def value_at(self, x_f, x_i):
        i = int(np.argmin(np.abs(self.x_final - x_f)))
        j = int(np.argmin(np.abs(self.x_initial - x_i)))
        return complex(self.values[i, j])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x_final", "x_initial", "re", "im"])
            for i, xf in enumerate(self.x_final):
                for j, xi in enumerate(self.x_initial):
                    v = self.values[i, j]
                    writer.writerow([repr(float(xf)), repr(float(xi)), repr(v.real), repr(v.imag)])


def fourier_endpoints(source, grid: FourierGrid, to: str, hbar: float = 1.0,
                      check_bandwidth: bool = True) -> KernelSamples:
    """Transform a propagator between representations over both endpoints.

    The momentum-to-position direction applies exp(+i p q / hbar) on the
    final endpoint and exp(-i p q / hbar) on the initial one (each with
    1/sqrt(2 pi hbar)); position-to-momentum applies the conjugate pair.
    Delta-variant sources collapse one integral analytically and the
    remaining one is quadratured; regular sources get the tapered double
    quadrature.
    """
    if to not in ("position", "momentum"):
        raise PreconditionError("to must be 'position' or 'momentum'")
    sign_final = +1.0 if to == "position" else -1.0
    x, w, h = grid.quad_axis()
    xf, xi = grid.out_final, grid.out_initial

    if isinstance(source, DeltaKernel):
        if not source.causal:
            values = np.zeros((xf.size, xi.size), dtype=complex)
            return KernelSamples(to, xf, xi, values, hbar)
        phase = source.phase_fn(x) * source.prefactor
        delta = xf[:, None] - xi[None, :]
        if check_bandwidth:
            flat = np.unique(np.round(delta.ravel(), 12))
            for probe_delta in (flat[np.argmax(np.abs(flat))], flat[np.argmin(np.abs(flat))]):
                _check_bandwidth(phase * np.exp(sign_final * 1j * probe_delta * x / hbar), grid)
        kernel = np.exp(sign_final * 1j * delta[..., None] * x / hbar)
        values = (h / (2.0 * math.pi * hbar)) * np.sum(kernel * (phase * w), axis=-1)
        return KernelSamples(to, xf, xi, values.astype(complex), hbar)

    # regular source: chunked double quadrature
    E_f = np.exp(sign_final * 1j * np.outer(xf, x) / hbar) * (w * h)
    E_i = np.exp(-sign_final * 1j * np.outer(xi, x) / hbar) * (w * h)
    if check_bandwidth:
        corner_f = xf[np.argmax(np.abs(xf))]
        corner_i = xi[np.argmax(np.abs(xi))]
        row = np.asarray(source(np.full(1, 0.0), x)).reshape(-1)
        col = np.asarray(source(x, np.full(1, 0.0))).reshape(-1)
        _check_bandwidth(col * np.exp(sign_final * 1j * corner_f * x / hbar), grid)
        _check_bandwidth(row * np.exp(-sign_final * 1j * corner_i * x / hbar), grid)
    acc = np.zeros((xf.size, xi.size), dtype=complex)
    chunk = max(1, int(2_000_000 / grid.n_quad))
    for lo in range(0, grid.n_quad, chunk):
        hi = min(lo + chunk, grid.n_quad)
        block = np.asarray(source(x[lo:hi, None], x[None, :]), dtype=complex)
        acc += E_f[:, lo:hi] @ (block @ E_i.T)
    values = acc / (2.0 * math.pi * hbar)
    return KernelSamples(to, xf, xi, values, hbar)


def position_kernel_sampler(model: HamiltonianModel, t, scheme: SliceScheme):
    """Vectorized (q_f, q_i) -> amplitude sampler of the N-slice chain.

    The discrete action of a quadratic chain is a quadratic form in the
    endpoints, so four chain evaluations determine it exactly.
    """
    ref = sliced_position_chain(model, 0.0, 0.0, t, scheme)
    s00 = ref.discrete_action
    s10 = sliced_position_chain(model, 1.0, 0.0, t, scheme).discrete_action
    s01 = sliced_position_chain(model, 0.0, 1.0, t, scheme).discrete_action
    s11 = sliced_position_chain(model, 1.0, 1.0, t, scheme).discrete_action
    a_i = 2.0 * (s10 - s00)
    a_f = 2.0 * (s01 - s00)
    cross = s11 - s10 - s01 + s00
    pref = ref.prefactor
    hbar = scheme.hbar

    def sample(q_f, q_i):
        q_f = np.asarray(q_f, dtype=float)
        q_i = np.asarray(q_i, dtype=float)
        action = 0.5 * a_i * q_i**2 + 0.5 * a_f * q_f**2 + cross * q_i * q_f + s00
        return pref * np.exp(1j * action / hbar)

    return sample


def momentum_kernel_sampler(model: HamiltonianModel, t, scheme: SliceScheme):
    """Vectorized (p_f, p_i) -> amplitude sampler of the momentum chain."""
    ref = sliced_momentum_chain(model, 0.0, 0.0, t, scheme)
    s00 = ref.discrete_action
    s10 = sliced_momentum_chain(model, 1.0, 0.0, t, scheme).discrete_action
    s01 = sliced_momentum_chain(model, 0.0, 1.0, t, scheme).discrete_action
    s11 = sliced_momentum_chain(model, 1.0, 1.0, t, scheme).discrete_action
    a_i = 2.0 * (s10 - s00)
    a_f = 2.0 * (s01 - s00)
    cross = s11 - s10 - s01 + s00
    pref = ref.prefactor
    hbar = scheme.hbar

    def sample(p_f, p_i):
        p_f = np.asarray(p_f, dtype=float)
        p_i = np.asarray(p_i, dtype=float)
        action = 0.5 * a_i * p_i**2 + 0.5 * a_f * p_f**2 + cross * p_i * p_f + s00
        return pref * np.exp(1j * action / hbar)

    return sample


def compose_kernels(kernel_late, kernel_early, x_f, x_i, band: float = 24.0,
                    n_quad: int = 4096, core_fraction: float = 0.6):
    """Semigroup composition: integrate kernel_late(x_f, y) kernel_early(y, x_i)
    over the intermediate endpoint y with a tapered window."""
    y = np.linspace(-band, band, n_quad)
    core = core_fraction * band
    w = _planck_taper(y, -band, band, -core, core)
    h = y[1] - y[0]
    vals = np.asarray(kernel_late(np.full_like(y, x_f), y)) * np.asarray(
        kernel_early(y, np.full_like(y, x_i))
    )
    return complex(np.sum(vals * w) * h)


def normalization_extraction(samples: KernelSamples, mass, t, hbar: float = 1.0) -> float:
    """Ratio of the transformed unit-prefactor delta kernel to the
    reference (2 pi hbar t / mass)^(-1/2) magnitude.

    The testable content is that the ratio is one constant across
    endpoint separations and times; its value absorbs the overall
    normalization the slicing leaves undetermined.
    """
    reference = math.sqrt(mass / (2.0 * math.pi * hbar * t))
    ratios = np.abs(samples.values) / reference
    return float(np.mean(ratios))
