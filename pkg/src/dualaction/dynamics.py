"""Hamiltonian trajectories and the two endpoint problems.

Position-type boundary conditions pin q at both ends and shoot over the
initial momentum; momentum-type conditions pin p and shoot over the
initial position.  The integrator is classical fixed-step RK4: the paths
here are short and shooting needs smooth dependence on initial data more
than long-time structure preservation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BlowUpError, PreconditionError
from .model import HamiltonianModel

SHOOTING_TOL = 1e-9
SENSITIVITY_TOL = 1e-6
BRACKET_RANGE = 1e3
MAX_SECANT_ITER = 100


@dataclass(frozen=True)
class PhasePath:
    """Paired (p, q) samples on a uniform time grid."""

    t_start: float
    t_end: float
    p: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        q = np.asarray(self.q, dtype=float)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        if p.shape != q.shape or p.ndim != 1 or p.size < 2:
            raise PreconditionError("phase path needs matching 1-d p/q arrays with >= 2 nodes")
        if not (self.t_end > self.t_start):
            raise PreconditionError("phase path needs t_end > t_start")
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(q))):
            raise PreconditionError("phase path samples must be finite")

    @property
    def n_intervals(self):
        return self.p.size - 1

    @property
    def dt(self):
        return (self.t_end - self.t_start) / self.n_intervals

    @property
    def times(self):
        return np.linspace(self.t_start, self.t_end, self.p.size)


@dataclass(frozen=True)
class BoundarySpec:
    """Endpoint constraint: 'position-type' pins q, 'momentum-type' pins p."""

    kind: str
    start: float
    end: float

    def __post_init__(self):
        if self.kind not in ("position-type", "momentum-type"):
            raise PreconditionError(f"unknown boundary kind {self.kind!r}")


@dataclass(frozen=True)
class ShootingReport:
    path: PhasePath
    parameter: float
    residual: float
    flag: str  # unique | conjugate-degenerate | infeasible

    @property
    def solved(self):
        return self.flag != "infeasible"


def _rk4_batch(model, p0, q0, t_span, n_steps, keep_path=False, check=True):
    """Vectorized fixed-step RK4 for Hamilton's equations.

    p0, q0 are broadcastable arrays of initial states; t_span endpoints
    may also be arrays (per-element horizons).  Returns either the final
    (p, q) or full (n_steps+1, ...) histories.  With check=False a
    blowing-up lane poisons only itself with non-finite values instead
    of raising.
    """
    hp = model._derivative(1, 0)
    hq = model._derivative(0, 1)
    t0, t1 = t_span
    p, q, dt = np.broadcast_arrays(
        np.asarray(p0, float), np.asarray(q0, float),
        (np.asarray(t1, float) - np.asarray(t0, float)) / n_steps,
    )
    p, q = p.copy(), q.copy()
    if keep_path:
        P = np.empty((n_steps + 1,) + p.shape)
        Q = np.empty_like(P)
        P[0], Q[0] = p, q

    # overflow in a blowing-up lane is reported via BlowUpError (check=True)
    # or poisons only that lane (check=False); either way not a warning
    with np.errstate(all="ignore"):
        for j in range(n_steps):
            k1p, k1q = -hq(p, q), hp(p, q)
            p2, q2 = p + 0.5 * dt * k1p, q + 0.5 * dt * k1q
            k2p, k2q = -hq(p2, q2), hp(p2, q2)
            p3, q3 = p + 0.5 * dt * k2p, q + 0.5 * dt * k2q
            k3p, k3q = -hq(p3, q3), hp(p3, q3)
            p4, q4 = p + dt * k3p, q + dt * k3q
            k4p, k4q = -hq(p4, q4), hp(p4, q4)
            p = p + (dt / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
            q = q + (dt / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)
            if check and not (np.all(np.isfinite(p)) and np.all(np.isfinite(q))):
                raise BlowUpError(f"non-finite state at node {j + 1}", node_index=j + 1)
            if keep_path:
                P[j + 1], Q[j + 1] = p, q

    if keep_path:
        return P, Q
    return p, q


def integrate_ivp(model: HamiltonianModel, p0: float, q0: float, t_span, n_steps: int) -> PhasePath:
    """Integrate Hamilton's equations from (p0, q0) with fixed-step RK4."""
    if n_steps < 1:
        raise PreconditionError("integration needs n_steps >= 1")
    P, Q = _rk4_batch(model, float(p0), float(q0), t_span, n_steps, keep_path=True)
    return PhasePath(t_span[0], t_span[1], P.reshape(n_steps + 1), Q.reshape(n_steps + 1))


def _scan_candidates(scan_range):
    mags = np.geomspace(1e-3, scan_range, 16)
    return np.concatenate([-mags[::-1], [0.0], mags])


def _shoot_batch(model, start_value, targets, t_span, n_steps, shoot_on,
                 tol=SHOOTING_TOL, scan_range=BRACKET_RANGE):
    """Shoot a family of endpoint targets with a shared scan + batched secant.

    shoot_on = 'p0' varies initial momentum with q(t_i) = start_value and
    matches final q (position-type); shoot_on = 'q0' varies initial
    position with p(t_i) = start_value and matches final p.  The horizon
    t_span[1] may be an array giving one horizon per target.

    Returns (roots, residuals, flags, sensitivities) arrays over targets.
    """
    targets = np.asarray(targets, dtype=float)
    n_t = targets.size
    t0 = float(t_span[0])
    t1 = np.broadcast_to(np.asarray(t_span[1], dtype=float), targets.shape).astype(float)

    def endpoint(x, horizons):
        x = np.asarray(x, dtype=float)
        if shoot_on == "p0":
            _, qe = _rk4_batch(model, x, np.full_like(x, start_value), (t0, horizons),
                               n_steps, check=False)
            return qe
        pe, _ = _rk4_batch(model, np.full_like(x, start_value), x, (t0, horizons),
                           n_steps, check=False)
        return pe

    cand = _scan_candidates(scan_range)
    n_c = cand.size
    ends = endpoint(
        np.broadcast_to(cand[:, None], (n_c, n_t)),
        np.broadcast_to(t1[None, :], (n_c, n_t)),
    )
    res = ends - targets[None, :]
    res = np.where(np.isfinite(res), res, np.nan)

    x0 = np.zeros(n_t)
    x1 = np.zeros(n_t)
    flags = np.array(["unique"] * n_t, dtype=object)
    bracket_counts = np.zeros(n_t, dtype=int)
    have_bracket = np.zeros(n_t, dtype=bool)

    with np.errstate(invalid="ignore"):
        sign_change = res[:-1] * res[1:] < 0
        exact_hit = np.abs(res) <= tol
    for k in range(n_t):
        changes = np.flatnonzero(sign_change[:, k])
        bracket_counts[k] = changes.size
        hits = np.flatnonzero(exact_hit[:, k])
        col = res[:, k]
        if changes.size:
            x0[k], x1[k] = cand[changes[0]], cand[changes[0] + 1]
            have_bracket[k] = True
        elif hits.size:
            best = hits[np.argmin(np.abs(cand[hits]))]
            x0[k] = x1[k] = cand[best]
            have_bracket[k] = True
        elif np.any(np.isfinite(col)) and np.nanmax(np.abs(col)) <= 10.0 * tol:
            # every scanned parameter already solves the problem
            x0[k] = x1[k] = 0.0
            have_bracket[k] = True
            flags[k] = "conjugate-degenerate"
        else:
            x0[k] = x1[k] = cand[np.nanargmin(np.abs(col))] if np.any(np.isfinite(col)) else 0.0
            flags[k] = "infeasible"

    roots = x1.copy()
    r1 = endpoint(roots, t1) - targets
    r0 = endpoint(x0, t1) - targets
    with np.errstate(invalid="ignore"):
        active = have_bracket & (np.abs(r1) > tol)
    xprev, rprev = x0.copy(), r0.copy()
    for _ in range(MAX_SECANT_ITER):
        if not np.any(active):
            break
        denom = r1 - rprev
        with np.errstate(invalid="ignore", divide="ignore"):
            step = np.where(denom != 0, r1 * (roots - xprev) / np.where(denom == 0, 1.0, denom), 0.0)
            stalled = active & (denom == 0)
            xnew = np.where(active, roots - step, roots)
        rnew = endpoint(xnew, t1) - targets
        xprev, rprev = np.where(active, roots, xprev), np.where(active, r1, rprev)
        roots, r1 = np.where(active, xnew, roots), np.where(active, rnew, r1)
        with np.errstate(invalid="ignore"):
            active = active & (np.abs(r1) > tol) & ~stalled

    residuals = r1
    with np.errstate(invalid="ignore"):
        bad = have_bracket & ~(np.abs(residuals) <= tol)
    unresolved = bad & (flags == "unique")
    flags[unresolved] = "infeasible"

    h = np.maximum(1e-6, 1e-6 * np.abs(roots))
    sens = (endpoint(roots + h, t1) - endpoint(roots - h, t1)) / (2.0 * h)
    with np.errstate(invalid="ignore"):
        degenerate = have_bracket & ((np.abs(sens) < SENSITIVITY_TOL) | (bracket_counts > 1))
    flags[degenerate & (flags != "infeasible")] = "conjugate-degenerate"
    return roots, residuals, flags, sens


def _bvp(model, bounds, t_span, n_steps, shoot_on, tol, scan_range):
    roots, residuals, flags, _ = _shoot_batch(
        model, bounds.start, [bounds.end], t_span, n_steps, shoot_on,
        tol=tol, scan_range=scan_range,
    )
    root, residual, flag = float(roots[0]), float(abs(residuals[0])), str(flags[0])
    if shoot_on == "p0":
        path = integrate_ivp(model, root, bounds.start, t_span, n_steps)
    else:
        path = integrate_ivp(model, bounds.start, root, t_span, n_steps)
    return ShootingReport(path=path, parameter=root, residual=residual, flag=flag)


def solve_position_bvp(model: HamiltonianModel, bounds: BoundarySpec, t_span, n_steps: int,
                       tol: float = SHOOTING_TOL, scan_range: float = BRACKET_RANGE) -> ShootingReport:
    """Secant shooting over the initial momentum for q(t_i) -> q(t_f).

    Flags 'conjugate-degenerate' when the endpoint stops responding to
    the initial momentum (|dq(t_f)/dp(t_i)| below tolerance) or several
    distinct initial momenta reach the target.
    """
    if bounds.kind != "position-type":
        raise PreconditionError("solve_position_bvp needs a position-type boundary spec")
    return _bvp(model, bounds, t_span, n_steps, "p0", tol, scan_range)


def solve_momentum_bvp(model: HamiltonianModel, bounds: BoundarySpec, t_span, n_steps: int,
                       tol: float = SHOOTING_TOL, scan_range: float = BRACKET_RANGE) -> ShootingReport:
    """Secant shooting over the initial position for p(t_i) -> p(t_f).

    When H is cyclic in q (free particle) the momentum never moves: the
    problem is feasible only for equal endpoint momenta, and then any
    initial position works, reported as a zero-residual degenerate
    family at q0 = 0.
    """
    if bounds.kind != "momentum-type":
        raise PreconditionError("solve_momentum_bvp needs a momentum-type boundary spec")
    if model.is_cyclic_in_q():
        path = integrate_ivp(model, bounds.start, 0.0, t_span, n_steps)
        residual = abs(float(path.p[-1]) - bounds.end)
        flag = "conjugate-degenerate" if residual <= tol else "infeasible"
        return ShootingReport(path=path, parameter=0.0, residual=residual, flag=flag)
    return _bvp(model, bounds, t_span, n_steps, "q0", tol, scan_range)
