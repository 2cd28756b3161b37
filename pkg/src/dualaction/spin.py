"""Spin propagators from piecewise-constant momentum paths with sign freedom.

A freely spinning particle keeps |l| fixed but the unobservable angle
leaves the sign of l open on each of the N time slices, so the
propagator is an equal-weight sum of 2^N sign paths (4^N constituent
paths for the two-particle composite), normalized by the same count.
Only l^2 enters the phase, so the unconstrained sum collapses to a pure
phase; the endpoint-filtered policy keeps the same normalization but
admits only paths whose first/last slice match the requested signs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError

SPIN_HALF_ENUM_CAP = 20
COMPOSITE_ENUM_CAP = 10
_CHUNK = 1 << 16
POLICIES = ("paper-unconstrained", "endpoint-filtered")


@dataclass(frozen=True)
class SpinPathEnsemble:
    """Allowed per-interval values with multiplicities and the path policy."""

    n_intervals: int
    values: tuple  # ((value, multiplicity), ...)
    policy: str = "paper-unconstrained"

    def __post_init__(self):
        if self.n_intervals < 1:
            raise PreconditionError("need at least one interval")
        if self.policy not in POLICIES:
            raise PreconditionError(f"policy must be one of {POLICIES}")

    @property
    def path_count(self):
        per_interval = sum(mult for _, mult in self.values)
        return per_interval**self.n_intervals


def _parse_sign(sign):
    if sign in ("+", 1, +1.0):
        return 1
    if sign in ("-", -1, -1.0):
        return -1
    raise PreconditionError(f"sign must be '+' or '-', got {sign!r}")


def spin_half_closed_form(inertia, l, sign_i, sign_f, t, n_intervals,
                          policy="paper-unconstrained", hbar=1.0):
    """C * (admitted path count) * exp(-i l^2 t / (2 I hbar)) with C = 2^-N."""
    phase = np.exp(-1j * l**2 * t / (2.0 * inertia * hbar))
    total = 2**n_intervals
    if policy == "paper-unconstrained":
        count = total
    elif n_intervals == 1:
        count = 1 if _parse_sign(sign_i) == _parse_sign(sign_f) else 0
    else:
        count = 2 ** (n_intervals - 2)
    return complex(count * phase / total)


def spin_half_propagator(inertia, l, sign_i, sign_f, t, n_intervals,
                         policy="paper-unconstrained", hbar=1.0,
                         use_closed_form=False):
    """Sum over all sign paths of the spinning free particle.

    Brute-force enumeration up to N = 20; beyond that the closed form
    must be requested explicitly.
    """
    if inertia <= 0:
        raise PreconditionError("inertia must be positive")
    SpinPathEnsemble(n_intervals, ((l, 1), (-l, 1)), policy)
    if n_intervals > SPIN_HALF_ENUM_CAP:
        if use_closed_form:
            return spin_half_closed_form(inertia, l, sign_i, sign_f, t, n_intervals, policy, hbar)
        raise PreconditionError(
            f"N = {n_intervals} exceeds the enumeration cap {SPIN_HALF_ENUM_CAP}; "
            "pass use_closed_form=True"
        )

    si, sf = _parse_sign(sign_i), _parse_sign(sign_f)
    dt = t / n_intervals
    total = 2**n_intervals
    shifts = np.arange(n_intervals, dtype=np.uint32)
    acc = 0.0 + 0.0j
    for lo in range(0, total, _CHUNK):
        codes = np.arange(lo, min(lo + _CHUNK, total), dtype=np.uint32)
        bits = (codes[:, None] >> shifts[None, :]) & 1
        values = l * (2.0 * bits - 1.0)
        phases = np.exp(-1j * np.sum(values**2, axis=1) * dt / (2.0 * inertia * hbar))
        if policy == "endpoint-filtered":
            admit = (values[:, 0] == si * l) & (values[:, -1] == sf * l)
            phases = phases[admit]
        acc += np.sum(phases)
    return complex(acc / total)


def composite_values(l0):
    """Per-interval composite angular momentum values with multiplicities."""
    return ((+2.0 * l0, 1), (0.0, 2), (-2.0 * l0, 1))


def composite_closed_form(inertia, l0, l_i, l_f, t, n_intervals,
                          policy="paper-unconstrained", hbar=1.0):
    dt = t / n_intervals
    def mult(v):
        return 2 if v == 0.0 else 1

    def slice_phase(v):
        return np.exp(-1j * v**2 * dt / (2.0 * inertia * hbar))

    full = sum(m * slice_phase(v) for v, m in composite_values(l0))
    if policy == "paper-unconstrained":
        return complex((full / 4.0) ** n_intervals)
    if n_intervals == 1:
        if l_i != l_f:
            return 0.0 + 0.0j
        return complex(mult(l_i) * slice_phase(l_i) / 4.0)
    ends = mult(l_i) * slice_phase(l_i) * mult(l_f) * slice_phase(l_f)
    return complex(ends * full ** (n_intervals - 2) / 4.0**n_intervals)


def composite_spin_propagator(inertia, l0, l_i, l_f, t, n_intervals,
                              policy="paper-unconstrained", hbar=1.0,
                              use_closed_form=False):
    """Two-constituent composite: per-interval values +2 l0, 0, -2 l0 with
    multiplicities 1:2:1 from the four constituent sign pairs, C = 4^-N."""
    if inertia <= 0:
        raise PreconditionError("inertia must be positive")
    SpinPathEnsemble(n_intervals, composite_values(l0), policy)
    if n_intervals > COMPOSITE_ENUM_CAP:
        if use_closed_form:
            return composite_closed_form(inertia, l0, l_i, l_f, t, n_intervals, policy, hbar)
        raise PreconditionError(
            f"N = {n_intervals} exceeds the enumeration cap {COMPOSITE_ENUM_CAP}; "
            "pass use_closed_form=True"
        )

    dt = t / n_intervals
    total = 4**n_intervals
    shifts = np.arange(2 * n_intervals, dtype=np.uint32)
    acc = 0.0 + 0.0j
    for lo in range(0, total, _CHUNK):
        codes = np.arange(lo, min(lo + _CHUNK, total), dtype=np.uint64)
        bits = (codes[:, None] >> shifts[None, :]) & 1
        s1 = 2.0 * bits[:, 0::2] - 1.0
        s2 = 2.0 * bits[:, 1::2] - 1.0
        values = l0 * (s1 + s2)
        phases = np.exp(-1j * np.sum(values**2, axis=1) * dt / (2.0 * inertia * hbar))
        if policy == "endpoint-filtered":
            admit = (values[:, 0] == l_i) & (values[:, -1] == l_f)
            phases = phases[admit]
        acc += np.sum(phases)
    return complex(acc / total)
