"""Analytic steady-state conditions used as independent checks on converged states.

Two results drive these checks. For the edge-operator (qsw) channel the
maximally mixed state stays stationary under conditioning only when all the
degree weights D_k^2 + D_k coincide, i.e. on regular graphs; and every fixed
point must satisfy a per-node balance between incoming incoherent flow,
coherent flow and the degree-weighted loss:

    rho_kk = sum_j A_kj ( p (1-eta) rho_jj + 2 (1-p) Im rho_kj )
             -----------------------------------------------------
             p ( D_k (1 + eta D_k) - eta sum_j (D_j^2 + D_j) rho_jj )

For on-site dephasing the steady state is I/N on any connected graph,
independent of the detection efficiency.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import NetworkGraph
from .nlme import DensityState

DENOMINATOR_FLOOR = 1e-12


@dataclass(frozen=True)
class ConstraintReport:
    """Per-node comparison of predicted vs actual steady-state populations."""

    predicted: np.ndarray
    actual: np.ndarray
    residuals: np.ndarray
    max_residual: float
    uniform_ok: bool

    def to_dict(self) -> dict:
        return {
            "predicted": self.predicted.tolist(),
            "actual": self.actual.tolist(),
            "residuals": self.residuals.tolist(),
            "max_residual": self.max_residual,
            "uniform_ok": self.uniform_ok,
        }


def uniform_condition_holds(g: NetworkGraph, eta: float) -> bool:
    """Whether I/N is stationary for the edge-operator channel at this eta.

    Without conditioning (eta = 0) the uniform state is always stationary;
    with it, the degree weights D_k^2 + D_k must all agree, which for integer
    degrees happens exactly when the graph is regular.
    """
    if eta == 0.0:
        return True
    return g.is_regular()


def constraint_residual(rho_ss: DensityState | np.ndarray, g: NetworkGraph,
                        p: float, eta: float) -> ConstraintReport:
    """Evaluate the fixed-point population balance on a converged state."""
    if p == 0.0:
        raise ValueError("the population constraint divides by p; p must be > 0")
    rho = rho_ss.matrix if isinstance(rho_ss, DensityState) else np.asarray(rho_ss)
    if rho.shape != (g.n, g.n):
        raise ValueError(f"state dimension {rho.shape} does not match graph size {g.n}")

    deg = g.degrees.astype(np.float64)
    adj = g.adjacency.astype(np.float64)
    diag = rho.diagonal().real
    w = deg * deg + deg

    numerator = p * (1.0 - eta) * (adj @ diag) \
        + 2.0 * (1.0 - p) * (adj * rho.imag).sum(axis=1)
    denominator = p * (deg * (1.0 + eta * deg) - eta * np.dot(w, diag))
    bad = np.nonzero(np.abs(denominator) < DENOMINATOR_FLOOR)[0]
    if bad.size:
        raise ValueError(f"constraint denominator vanishes at node {bad[0]}")

    predicted = numerator / denominator
    residuals = np.abs(diag - predicted)
    return ConstraintReport(predicted=predicted, actual=diag, residuals=residuals,
                            max_residual=float(residuals.max()),
                            uniform_ok=uniform_condition_holds(g, eta))


def hs_steady_state_prediction(n: int) -> DensityState:
    """I/N: the unique on-site-dephasing steady state on a connected graph."""
    if n < 1:
        raise ValueError("node count must be >= 1")
    return DensityState.maximally_mixed(n)
