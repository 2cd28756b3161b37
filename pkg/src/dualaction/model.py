"""Hamiltonian descriptors: evaluation, partial derivatives, convexity probes.

A :class:`HamiltonianModel` supplies H(p, q) together with every partial
derivative up to total order 3.  Separable models with polynomial
potentials differentiate exactly; black-box evaluators fall back to
Richardson-extrapolated central differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import DomainError, PreconditionError, UnsupportedOrderError

BUILTIN_NAMES = ("free", "sho", "saddle-quadratic", "constant-force")

# Stencil steps per total derivative order, in the natural scale of the
# axis.  Orders 2-3 need wider Richardson stencils than the first-order
# step: plain central differences at 1e-5 drown orders >= 2 in rounding
# noise, so the second/third-order steps sit near the float64 optimum.
_FD_STEP = {1: 1e-5, 2: 6e-3, 3: 1.2e-2}


@dataclass(frozen=True)
class DomainBox:
    """Rectangular probe region in phase space."""

    p_min: float
    p_max: float
    q_min: float
    q_max: float
    n_p: int = 21
    n_q: int = 21

    def __post_init__(self):
        if not (self.p_min < self.p_max and self.q_min < self.q_max):
            raise PreconditionError("domain box must have positive extent on both axes")
        if self.n_p < 3 or self.n_q < 3:
            raise PreconditionError("domain box grid counts must be >= 3")

    def p_grid(self):
        return np.linspace(self.p_min, self.p_max, self.n_p)

    def q_grid(self):
        return np.linspace(self.q_min, self.q_max, self.n_q)

    def contains(self, p, q):
        return (
            np.all(p >= self.p_min) and np.all(p <= self.p_max)
            and np.all(q >= self.q_min) and np.all(q <= self.q_max)
        )


def _richardson_d1(f, x, h):
    def d1(step):
        return (f(x + step) - f(x - step)) / (2.0 * step)

    return (4.0 * d1(h / 2.0) - d1(h)) / 3.0


def _richardson_d2(f, x, h):
    def d2(step):
        return (f(x + step) - 2.0 * f(x) + f(x - step)) / step**2

    return (4.0 * d2(h / 2.0) - d2(h)) / 3.0


def _richardson_d3(f, x, h):
    def d3(step):
        return (
            f(x + 2.0 * step) - 2.0 * f(x + step) + 2.0 * f(x - step) - f(x - 2.0 * step)
        ) / (2.0 * step**3)

    return (4.0 * d3(h / 2.0) - d3(h)) / 3.0


_FD_RULE = {1: _richardson_d1, 2: _richardson_d2, 3: _richardson_d3}


def _fd_directional(f, x, order, h_base):
    """Derivative of a scalar/vectorized 1-argument function at x."""
    scale = np.maximum(1.0, np.abs(x))
    h = h_base * scale
    return _FD_RULE[order](f, x, h)


def _poly_derivs(coeffs, max_order=3):
    """Ascending-order coefficient arrays for V, V', V'', V'''."""
    out = [np.asarray(coeffs, dtype=float)]
    for _ in range(max_order):
        out.append(P.polyder(out[-1]) if len(out[-1]) > 1 else np.zeros(1))
    return out


@dataclass(frozen=True)
class HamiltonianModel:
    """H(p, q) with partial derivatives through third order.

    kind
        "separable" for p^2/(2m) + V(q), "quadratic-saddle" for the
        pure quadratic saddle family, "general" for a black-box
        evaluator of (p, q).
    derivative_mode
        "analytic" uses exact polynomial/user-supplied derivatives and
        raises when an order is missing; "fd" fills missing orders with
        central finite differences.
    """

    kind: str
    mass: float | None = None
    potential_coeffs: tuple[float, ...] | None = None
    potential: Callable | None = None
    evaluator: Callable | None = None
    partials: Mapping[tuple[int, int], Callable] | None = None
    derivative_mode: str = "analytic"
    h_fd: float = 1e-5
    domain: DomainBox | None = None
    label: str = ""
    _vcoeffs: tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("separable", "quadratic-saddle", "general"):
            raise PreconditionError(f"unknown Hamiltonian kind: {self.kind!r}")
        if self.kind == "general":
            if self.evaluator is None:
                raise PreconditionError("general kind requires an evaluator")
        else:
            if self.mass is None or self.mass <= 0:
                raise PreconditionError("separable kind requires a positive mass")
            if self.potential_coeffs is None and self.potential is None:
                raise PreconditionError("separable kind requires a potential")
        if self.potential_coeffs is not None:
            object.__setattr__(
                self, "_vcoeffs", tuple(map(tuple, _poly_derivs(self.potential_coeffs)))
            )

    # ---- constructors -------------------------------------------------

    @classmethod
    def separable(cls, mass, potential_coeffs=None, potential=None, label="", **kw):
        if potential_coeffs is not None:
            potential_coeffs = tuple(float(c) for c in potential_coeffs)
        return cls(
            kind="separable", mass=float(mass), potential_coeffs=potential_coeffs,
            potential=potential, label=label, **kw
        )

    @classmethod
    def general(cls, evaluator, partials=None, derivative_mode=None, label="", **kw):
        mode = derivative_mode or ("analytic" if partials else "fd")
        return cls(
            kind="general", evaluator=evaluator, partials=dict(partials or {}),
            derivative_mode=mode, label=label, **kw
        )

    @classmethod
    def free(cls, mass=1.0):
        return cls.separable(mass, potential_coeffs=(0.0,), label="free")

    @classmethod
    def sho(cls, mass=1.0, omega=1.0):
        k = mass * omega**2
        return cls.separable(mass, potential_coeffs=(0.0, 0.0, 0.5 * k), label="sho")

    @classmethod
    def saddle_quadratic(cls, mass=1.0, k=1.0):
        """H = p^2/(2m) - k q^2/2: convex in p, concave in q."""
        m = cls.separable(mass, potential_coeffs=(0.0, 0.0, -0.5 * k), label="saddle-quadratic")
        return m

    @classmethod
    def quadratic_saddle(cls, p_coeff=1.0, q_coeff=1.0):
        """H = a p^2 - b q^2 written as a separable model (m = 1/(2a))."""
        model = cls.separable(1.0 / (2.0 * p_coeff), potential_coeffs=(0.0, 0.0, -q_coeff))
        object.__setattr__(model, "kind", "quadratic-saddle")
        object.__setattr__(model, "label", "quadratic-saddle")
        return model

    @classmethod
    def constant_force(cls, mass=1.0, force=1.0):
        return cls.separable(mass, potential_coeffs=(0.0, -float(force)), label="constant-force")

    @classmethod
    def with_drift(cls, mass, drift_coeffs, potential_coeffs, label="drift"):
        """H = p^2/(2m) + B(q) p + V(q) with polynomial B and V.

        Built as a general-kind model with exact analytic partials, so
        third derivatives stay noise-free.
        """
        b = _poly_derivs(drift_coeffs)
        v = _poly_derivs(potential_coeffs)
        m = float(mass)

        def H(p, q):
            return p**2 / (2.0 * m) + P.polyval(q, b[0]) * p + P.polyval(q, v[0])

        partials = {
            (1, 0): lambda p, q: p / m + P.polyval(q, b[0]),
            (2, 0): lambda p, q: np.full_like(np.asarray(p, dtype=float), 1.0 / m),
            (3, 0): lambda p, q: np.zeros_like(np.asarray(p, dtype=float)),
            (2, 1): lambda p, q: np.zeros(np.broadcast(p, q).shape),
        }
        for bq in range(1, 4):
            db, dv = b[bq], v[bq]
            partials[(0, bq)] = (
                lambda p, q, db=db, dv=dv: P.polyval(q, db) * p + P.polyval(q, dv)
            )
            if bq <= 2:
                partials[(1, bq)] = lambda p, q, db=db: P.polyval(q, db) * np.ones_like(
                    np.asarray(p, dtype=float)
                )
        return cls.general(H, partials=partials, label=label)

    @classmethod
    def builtin(cls, name, mass=1.0, omega=1.0, k=1.0, force=1.0):
        table = {
            "free": lambda: cls.free(mass),
            "sho": lambda: cls.sho(mass, omega),
            "saddle-quadratic": lambda: cls.saddle_quadratic(mass, k),
            "constant-force": lambda: cls.constant_force(mass, force),
        }
        if name not in table:
            raise PreconditionError(
                f"unknown builtin {name!r}; choose from {', '.join(BUILTIN_NAMES)}"
            )
        return table[name]()

    # ---- evaluation ---------------------------------------------------

    def eval(self, p, q):
        return self._derivative(0, 0)(p, q)

    def _v_derivative(self, order):
        """dV/dq^order as a vectorized callable of q."""
        if self._vcoeffs is not None:
            c = np.asarray(self._vcoeffs[order])

            def dv(q, c=c):
                return P.polyval(np.asarray(q, dtype=float), c)

            return dv
        if order == 0:
            return lambda q: np.asarray(self.potential(q), dtype=float)
        return lambda q: _fd_directional(
            lambda x: np.asarray(self.potential(x), dtype=float), np.asarray(q, dtype=float),
            order, _FD_STEP[order],
        )

    def _derivative(self, a, b):
        """Vectorized callable for d^{a+b} H / dp^a dq^b."""
        if a + b > 3 or a < 0 or b < 0:
            raise UnsupportedOrderError(f"partial order ({a},{b}) exceeds total order 3")
        if self.kind != "general":
            return self._separable_derivative(a, b)
        key = (a, b)
        if self.partials and key in self.partials:
            fn = self.partials[key]
            return lambda p, q: np.asarray(fn(p, q), dtype=float)
        if a == 0 and b == 0:
            return lambda p, q: np.asarray(self.evaluator(p, q), dtype=float)
        if self.derivative_mode == "analytic":
            raise UnsupportedOrderError(
                f"analytic mode has no partial of order ({a},{b}) for this model"
            )
        return self._fd_derivative(a, b)

    def _separable_derivative(self, a, b):
        m = self.mass
        if a > 0 and b > 0:
            return lambda p, q: np.zeros(np.broadcast(p, q).shape)
        if a == 1:
            return lambda p, q: np.asarray(p, dtype=float) / m
        if a == 2:
            return lambda p, q: np.full(np.broadcast(p, q).shape, 1.0 / m)
        if a == 3:
            return lambda p, q: np.zeros(np.broadcast(p, q).shape)
        dv = self._v_derivative(b)
        if b == 0:
            return lambda p, q: np.asarray(p, dtype=float) ** 2 / (2.0 * m) + dv(q)
        return lambda p, q: dv(q) * np.ones(np.broadcast(p, q).shape)

    def _fd_derivative(self, a, b):
        h = _FD_STEP[a + b]

        def deriv(p, q):
            p = np.asarray(p, dtype=float)
            q = np.asarray(q, dtype=float)
            if a and b:
                inner = lambda qq: self._fd_p_only(a, h, np.broadcast_to(p, qq.shape), qq)
                return _fd_directional(inner, np.broadcast_to(q, np.broadcast(p, q).shape), b, h)
            if a:
                return self._fd_p_only(a, h, p, q)
            f = lambda qq: np.asarray(self.evaluator(np.broadcast_to(p, qq.shape), qq), dtype=float)
            return _fd_directional(f, np.broadcast_to(q, np.broadcast(p, q).shape), b, h)

        return deriv

    def _fd_p_only(self, a, h, p, q):
        f = lambda pp: np.asarray(self.evaluator(pp, np.broadcast_to(q, pp.shape)), dtype=float)
        return _fd_directional(f, np.broadcast_to(p, np.broadcast(p, q).shape), a, h)

    def is_cyclic_in_q(self):
        """True when H_q vanishes identically (free-particle structure)."""
        if self.kind != "general" and self._vcoeffs is not None:
            return not np.any(np.asarray(self._vcoeffs[1]))
        hq = self._derivative(0, 1)
        probe = np.array([-1.7, -0.4, 0.3, 1.2])
        vals = hq(probe[:, None], probe[None, :] * 0.7 + 0.1)
        return float(np.max(np.abs(vals))) < 1e-11


def eval_partials(model: HamiltonianModel, p, q, order=(0, 0)):
    """Evaluate d^{a+b} H / dp^a dq^b at (p, q) for order = (a, b)."""
    a, b = order
    if a + b > 3:
        raise UnsupportedOrderError(f"requested order {order} exceeds total order 3")
    if model.domain is not None and not model.domain.contains(p, q):
        raise DomainError(f"point ({p}, {q}) lies outside the declared domain box")
    val = model._derivative(a, b)(p, q)
    if not np.all(np.isfinite(val)):
        raise DomainError(f"non-finite H partial {order} at (p={p}, q={q})")
    if np.ndim(val) == 0 or (hasattr(val, "shape") and val.shape == ()):
        return float(val)
    return val


_LAMBDAS = np.arange(0.1, 0.95, 0.1)


def _chord_flags(model, box, axis, samples, slack=1e-12):
    """(convex_ok, concave_ok) from exhaustive chord tests on the box."""
    if samples < 10:
        raise PreconditionError("convexity probe needs samples >= 10")
    if axis == "p-axis":
        xs, frozen = np.linspace(box.p_min, box.p_max, samples), box.q_grid()
    elif axis == "q-axis":
        xs, frozen = np.linspace(box.q_min, box.q_max, samples), box.p_grid()
    else:
        raise PreconditionError(f"axis must be 'p-axis' or 'q-axis', got {axis!r}")
    if xs[0] == xs[-1]:
        raise PreconditionError("degenerate box: probed axis has zero extent")

    i, j = np.triu_indices(samples, k=1)
    x1, x2 = xs[i], xs[j]                      # (P,)
    lam = _LAMBDAS[:, None]                    # (L, 1)
    xmid = lam * x1 + (1.0 - lam) * x2         # (L, P)

    def h(x, w):
        if axis == "p-axis":
            return eval_partials(model, x, w, (0, 0))
        return eval_partials(model, w, x, (0, 0))

    convex_ok = concave_ok = True
    for w in frozen:
        ww = np.full_like(xmid, w)
        arc = h(xmid, ww)
        chord = lam * h(x1, np.full_like(x1, w)) + (1.0 - lam) * h(x2, np.full_like(x2, w))
        if np.any(arc > chord + slack):
            convex_ok = False
        if np.any(arc < chord - slack):
            concave_ok = False
        if not (convex_ok or concave_ok):
            break
    return convex_ok, concave_ok


def convexity_probe(model: HamiltonianModel, box: DomainBox, axis: str, samples: int = 24):
    """Chord-above-arc verdict on one axis: 'convex', 'concave' or 'neither'.

    Verdicts are for the probed box only.  A function passing both
    non-strict tests (affine on the axis) reports 'convex'.
    """
    convex_ok, concave_ok = _chord_flags(model, box, axis, samples)
    if convex_ok:
        return "convex"
    if concave_ok:
        return "concave"
    return "neither"


def saddle_probe(model: HamiltonianModel, box: DomainBox, samples: int = 24):
    """'saddle' when H is convex along p and concave along q on the box.

    Both tests are non-strict, so a q-independent H (free particle)
    still qualifies.
    """
    convex_p, _ = _chord_flags(model, box, "p-axis", samples)
    _, concave_q = _chord_flags(model, box, "q-axis", samples)
    return "saddle" if (convex_p and concave_q) else "not-saddle"
