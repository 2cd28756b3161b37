"""Second-variation matrices along a path and extremum classification.

Each action has its own symmetric 2x2 matrix per node, built from H
partials up to third order.  Eigenvalue signs over the whole time window
decide whether the critical path is a minimum, maximum, indefinite, or
degenerate for that action; the verdict is only ever claimed for the
supplied window.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .action import _grad
from .dynamics import PhasePath
from .errors import PreconditionError
from .model import HamiltonianModel

ZERO_TOL_RELATIVE = 1e-9


@dataclass(frozen=True)
class SecondVariationMatrix:
    """Symmetric matrix entries (a12 stored once) with the action tag."""

    a11: np.ndarray
    a12: np.ndarray
    a22: np.ndarray
    which: str  # "S" or "R"

    def eigenvalues(self):
        """Closed-form eigenvalue pair(s), smaller first."""
        half_tr = 0.5 * (self.a11 + self.a22)
        disc = np.sqrt(0.25 * (self.a11 - self.a22) ** 2 + self.a12**2)
        return np.stack([half_tr - disc, half_tr + disc], axis=-1)

    def determinant(self):
        return self.a11 * self.a22 - self.a12**2

    def as_array(self):
        return np.stack(
            [np.stack([self.a11, self.a12], axis=-1), np.stack([self.a12, self.a22], axis=-1)],
            axis=-2,
        )


def hessian_s(model: HamiltonianModel, p, q) -> SecondVariationMatrix:
    """Second-variation matrix of S at (p, q):
    [[H_pp + p H_ppp, p H_ppq], [p H_ppq, p H_pqq - H_qq]]."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    d = model._derivative
    a11 = d(2, 0)(p, q) + p * d(3, 0)(p, q)
    a12 = p * d(2, 1)(p, q)
    a22 = p * d(1, 2)(p, q) - d(0, 2)(p, q)
    return SecondVariationMatrix(a11, a12, a22, "S")


def hessian_r(model: HamiltonianModel, p, q) -> SecondVariationMatrix:
    """Second-variation matrix of R at (p, q):
    [[q H_ppq - H_pp, q H_qqp], [q H_qqp, q H_qqq + H_qq]]."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    d = model._derivative
    a11 = q * d(2, 1)(p, q) - d(2, 0)(p, q)
    a12 = q * d(1, 2)(p, q)
    a22 = q * d(0, 3)(p, q) + d(0, 2)(p, q)
    return SecondVariationMatrix(a11, a12, a22, "R")


@dataclass(frozen=True)
class ExtremumReport:
    which: str
    times: np.ndarray
    eigenvalues: np.ndarray  # (n_nodes, 2)
    classification: str      # minimum | maximum | indefinite | degenerate
    zero_tol: float
    hamilton_residual: float

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "lambda_1", "lambda_2"])
            for t, (l1, l2) in zip(self.times, self.eigenvalues):
                writer.writerow([repr(float(t)), repr(float(l1)), repr(float(l2))])

    def summary(self):
        return {
            "which": self.which,
            "classification": self.classification,
            "zero_tol": self.zero_tol,
            "eigenvalue_min": float(np.min(self.eigenvalues)),
            "eigenvalue_max": float(np.max(self.eigenvalues)),
            "hamilton_residual": self.hamilton_residual,
            "nodes": int(self.eigenvalues.shape[0]),
        }

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)


def _classify(eigenvalues, zero_tol):
    lam_min = float(np.min(eigenvalues))
    lam_max = float(np.max(eigenvalues))
    if lam_min > zero_tol:
        return "minimum"
    if lam_max < -zero_tol:
        return "maximum"
    if np.any(np.abs(eigenvalues) <= zero_tol):
        return "degenerate"
    return "indefinite"


def classify_extremum(model: HamiltonianModel, path: PhasePath, which: str = "S",
                      zero_tol_relative: float = ZERO_TOL_RELATIVE) -> ExtremumReport:
    """Per-node eigenvalues of the second-variation matrix plus a verdict.

    The caller is responsible for supplying a critical path; the report
    carries the Hamilton-equation defect of the path as a stationarity
    check.  The zero tolerance is relative to the largest matrix entry
    on the path.
    """
    if which not in ("S", "R"):
        raise PreconditionError("which must be 'S' or 'R'")
    mat = (hessian_s if which == "S" else hessian_r)(model, path.p, path.q)
    scale = max(
        float(np.max(np.abs(mat.a11))), float(np.max(np.abs(mat.a12))),
        float(np.max(np.abs(mat.a22))),
    )
    zero_tol = zero_tol_relative * scale
    eig = mat.eigenvalues()

    dt = path.dt
    defect_q = _grad(path.q, dt) - model._derivative(1, 0)(path.p, path.q)
    defect_p = _grad(path.p, dt) + model._derivative(0, 1)(path.p, path.q)
    interior = slice(1, -1) if path.p.size > 2 else slice(None)
    hamilton_residual = float(
        np.max(np.abs(defect_q[interior])) + np.max(np.abs(defect_p[interior]))
    )

    return ExtremumReport(
        which=which,
        times=path.times,
        eigenvalues=eig,
        classification=_classify(eig, zero_tol),
        zero_tol=zero_tol,
        hamilton_residual=hamilton_residual,
    )
