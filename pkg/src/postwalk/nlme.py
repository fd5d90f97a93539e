"""Postselected master-equation engine for walks on networks.

Assembles the right-hand side

    drho/dt = -i w [H, rho]
              + r sum_k ( -1/2 {Pk' Pk, rho} + (1-eta) Pk rho Pk'
                          + eta Tr(Pk' Pk rho) rho )

for each decoherence channel, both from an explicit jump-operator list and
from closed forms that use only node degrees and adjacency, and integrates
the density matrix with a fixed-step RK4 scheme. The trace term is the
state-dependent renormalization that conditioning on discarded jumps
introduces; eta = 0 recovers the standard linear Lindblad equation.

Channels:
  haken_strobl  on-site dephasing projectors |k><k| at every node, rate gamma;
                the nonlinearity cancels identically and the closed form is
                drho/dt = -i[H, rho] - gamma (1-eta) (rho - diag(rho)).
  qsw           edge operators H_kj |k><j| for every nonzero Laplacian entry
                (diagonal included), rate p, coherent weight 1-p.

The gain term is evaluated as eta Tr(Pk' Pk rho) rho / Tr(rho). On the
physical unit-trace manifold this is exactly the equation above, but it makes
the trace a neutrally stable (instead of exponentially unstable) direction,
so rounding noise cannot feed back on itself; trace preservation then stays
a meaningful checked invariant of the integration rather than an applied
correction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .graphs import GraphSpec, NetworkGraph, laplacian

CHANNEL_KINDS = ("haken_strobl", "qsw", "spin_hop")


class InvariantViolation(RuntimeError):
    """A state invariant (trace, hermiticity, positivity, finiteness) broke."""

    def __init__(self, quantity: str, magnitude: float, step: int, t: float):
        self.quantity = quantity
        self.magnitude = magnitude
        self.step = step
        self.t = t
        super().__init__(
            f"{quantity} violation at step {step} (t={t:.6g}): magnitude {magnitude:.3e}")


class NonConvergenceError(RuntimeError):
    """Steady-state search hit t_max before the residual target."""

    def __init__(self, t_max: float, residual: float, target: float):
        self.t_max = t_max
        self.residual = residual
        self.target = target
        super().__init__(
            f"no steady state by t={t_max:.6g}: residual {residual:.3e} > {target:.3e}")


@dataclass(frozen=True)
class Tolerances:
    """Numerical guard rails for the integrator and steady-state detector."""

    tol_herm: float = 1e-10
    tol_tr: float = 1e-8
    tol_pos: float = 1e-8
    eps_ss: float = 1e-9


@dataclass(frozen=True)
class DensityState:
    """Dense complex density matrix with its validity checks."""

    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def populations(self) -> np.ndarray:
        return self.matrix.diagonal().real.copy()

    @classmethod
    def basis_state(cls, dim: int, k: int) -> "DensityState":
        if not 0 <= k < dim:
            raise ValueError(f"basis index {k} out of range for dimension {dim}")
        m = np.zeros((dim, dim), dtype=np.complex128)
        m[k, k] = 1.0
        return cls(m)

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityState":
        return cls(np.eye(dim, dtype=np.complex128) / dim)

    def validate(self, tol: Tolerances = Tolerances(), step: int = 0, t: float = 0.0):
        m = self.matrix
        if not np.isfinite(m).all():
            raise InvariantViolation("finiteness", np.inf, step, t)
        herm = float(np.abs(m - m.conj().T).max())
        if herm > tol.tol_herm:
            raise InvariantViolation("hermiticity", herm, step, t)
        drift = abs(float(np.trace(m).real) - 1.0)
        if drift > tol.tol_tr:
            raise InvariantViolation("trace", drift, step, t)
        min_eig = float(np.linalg.eigvalsh(0.5 * (m + m.conj().T)).min())
        if min_eig < -tol.tol_pos:
            raise InvariantViolation("positivity", -min_eig, step, t)


@dataclass(frozen=True)
class NoiseChannel:
    """Decoherence specification: kind, detection efficiency and strength."""

    kind: str
    eta: float
    gamma: float | None = None
    p: float | None = None

    def __post_init__(self):
        if self.kind not in CHANNEL_KINDS:
            raise ValueError(f"unknown channel kind {self.kind!r}; expected one of {CHANNEL_KINDS}")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")
        if self.kind == "qsw":
            if self.p is None or not 0.0 <= self.p <= 1.0:
                raise ValueError(f"qsw channel needs p in [0, 1], got {self.p}")
            if self.gamma is not None:
                raise ValueError("qsw channel takes p, not gamma")
        else:
            if self.gamma is None or self.gamma < 0.0:
                raise ValueError(f"{self.kind} channel needs gamma >= 0, got {self.gamma}")
            if self.p is not None:
                raise ValueError(f"{self.kind} channel takes gamma, not p")

    @property
    def has_dissipation(self) -> bool:
        strength = self.p if self.kind == "qsw" else self.gamma
        return strength is not None and strength > 0.0


@dataclass(frozen=True)
class JumpOperatorSet:
    """Stacked jump operators sharing one rate multiplier.

    Caches sum_k Pk' Pk, which is all the anticommutator and the trace
    (renormalization) terms ever need.
    """

    operators: np.ndarray  # (M, d, d) complex
    rate: float
    operators_dag: np.ndarray = field(init=False, repr=False)
    sum_pdagp: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        ops = np.asarray(self.operators, dtype=np.complex128)
        if ops.ndim != 3 or ops.shape[1] != ops.shape[2]:
            raise ValueError(f"operators must be a (M, d, d) stack, got {ops.shape}")
        dag = ops.conj().transpose(0, 2, 1).copy()
        object.__setattr__(self, "operators", ops)
        object.__setattr__(self, "operators_dag", dag)
        object.__setattr__(self, "sum_pdagp", np.matmul(dag, ops).sum(axis=0))

    @property
    def count(self) -> int:
        return self.operators.shape[0]

    @property
    def dim(self) -> int:
        return self.operators.shape[1]


def haken_strobl_jump_set(n: int, gamma: float) -> JumpOperatorSet:
    """One projector |k><k| per node."""
    ops = np.zeros((n, n, n), dtype=np.complex128)
    for k in range(n):
        ops[k, k, k] = 1.0
    return JumpOperatorSet(operators=ops, rate=gamma)


def qsw_jump_set(g: NetworkGraph, p: float) -> JumpOperatorSet:
    """One operator H_kj |k><j| per nonzero Laplacian entry, diagonal included.

    Both orientations of every edge appear, and the diagonal entries supply
    the degree-dependent on-site dephasing.
    """
    H = laplacian(g)
    ks, js = np.nonzero(H)
    ops = np.zeros((ks.size, g.n, g.n), dtype=np.complex128)
    for m, (k, j) in enumerate(zip(ks, js)):
        ops[m, k, j] = H[k, j]
    return JumpOperatorSet(operators=ops, rate=p)


def nlme_rhs_generic(rho: np.ndarray, H: np.ndarray, jumps: JumpOperatorSet,
                     eta: float, coherent_weight: float = 1.0) -> np.ndarray:
    """Right-hand side assembled directly from the jump-operator list."""
    d = rho.shape[0]
    if H.shape != (d, d) or jumps.dim != d:
        raise ValueError(
            f"dimension mismatch: rho {rho.shape}, H {H.shape}, jumps dim {jumps.dim}")
    out = -1j * coherent_weight * (H @ rho - rho @ H)
    s = jumps.sum_pdagp
    sandwich = np.matmul(np.matmul(jumps.operators, rho), jumps.operators_dag).sum(axis=0)
    out += jumps.rate * (-0.5 * (s @ rho + rho @ s) + (1.0 - eta) * sandwich)
    if eta != 0.0:
        gain = np.einsum("ij,ji->", s, rho) / np.trace(rho)
        out += (jumps.rate * eta) * gain * rho
    return out


def qsw_rhs_closed_form(rho: np.ndarray, g: NetworkGraph, p: float, eta: float) -> np.ndarray:
    """Edge-operator channel collapsed to degree/adjacency arithmetic.

    Summing |H_kj|^2 over the operator list leaves only the diagonal weights
    w_j = D_j^2 + D_j, so no operator stack is ever materialized:

        drho/dt = -i (1-p) [H, rho] - (p/2) {diag(w), rho}
                  + p (1-eta) diag_k( D_k^2 rho_kk + sum_j A_kj rho_jj )
                  + p eta (sum_j w_j rho_jj / Tr rho) rho
    """
    if rho.shape != (g.n, g.n):
        raise ValueError(f"rho shape {rho.shape} does not match graph size {g.n}")
    return _qsw_closed_rhs(rho, laplacian(g), g.degrees.astype(np.float64),
                           g.adjacency.astype(np.float64), p, eta)


def _qsw_closed_rhs(rho: np.ndarray, H: np.ndarray, deg: np.ndarray,
                    adj: np.ndarray, p: float, eta: float) -> np.ndarray:
    w = deg * deg + deg
    diag = rho.diagonal()
    out = -1j * (1.0 - p) * (H @ rho - rho @ H)
    out -= (0.5 * p) * (w[:, None] * rho + rho * w[None, :])
    jump_diag = deg * deg * diag + adj @ diag
    out[np.diag_indices(rho.shape[0])] += p * (1.0 - eta) * jump_diag
    if eta != 0.0:
        out += (p * eta) * (np.dot(w, diag) / diag.sum()) * rho
    return out


def hs_rhs_closed_form(rho: np.ndarray, H: np.ndarray, gamma: float, eta: float) -> np.ndarray:
    """On-site dephasing channel; the renormalization term cancels exactly.

    Because the projectors sum to the identity, conditioning removes jumps
    at a state-independent rate and the dynamics stay linear:
    drho/dt = -i [H, rho] - gamma (1-eta) (rho - diag(rho)).
    """
    if rho.shape != H.shape:
        raise ValueError(f"dimension mismatch: rho {rho.shape}, H {H.shape}")
    out = -1j * (H @ rho - rho @ H)
    decay = gamma * (1.0 - eta)
    if decay != 0.0:
        off = rho.copy()
        np.fill_diagonal(off, 0.0)
        out -= decay * off
    return out


def make_rhs(channel: NoiseChannel, g: NetworkGraph) -> Callable[[np.ndarray], np.ndarray]:
    """Bind the closed-form right-hand side for a node-basis walk channel."""
    if channel.kind == "qsw":
        H = laplacian(g)
        deg = g.degrees.astype(np.float64)
        adj = g.adjacency.astype(np.float64)
        return lambda rho: _qsw_closed_rhs(rho, H, deg, adj, channel.p, channel.eta)
    if channel.kind == "haken_strobl":
        H = laplacian(g)
        return lambda rho: hs_rhs_closed_form(rho, H, channel.gamma, channel.eta)
    raise ValueError(f"channel kind {channel.kind!r} does not act on the node basis")


def rk4_step(rho: np.ndarray, dt: float, rhs: Callable, k1: np.ndarray | None = None) -> np.ndarray:
    """One fixed-step RK4 update followed by re-hermitization."""
    if k1 is None:
        k1 = rhs(rho)
    k2 = rhs(rho + (0.5 * dt) * k1)
    k3 = rhs(rho + (0.5 * dt) * k2)
    k4 = rhs(rho + dt * k3)
    out = rho + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
    return 0.5 * (out + out.conj().T)


@dataclass
class IntegrationReport:
    """Bookkeeping shared by trajectory and steady-state runs."""

    max_trace_drift: float = 0.0
    min_eigenvalue: float = 1.0
    max_herm_dev: float = 0.0
    converged: bool = False
    t_converged: float | None = None
    final_residual: float | None = None


def run_integration(rhs: Callable, rho0: np.ndarray, *, dt: float, t_max: float,
                    sample_interval: float, tol: Tolerances = Tolerances(),
                    sample_fn: Callable[[float, np.ndarray], None] | None = None,
                    residual_target: float | None = None,
                    required_consecutive: int = 10) -> tuple[np.ndarray, IntegrationReport]:
    """Fixed-step RK4 loop with per-sample invariant checks.

    Samples (and checks) at t = 0, every `sample_interval`, and at the end.
    When `residual_target` is set, stops early once ||drho/dt||_F stays below
    it for `required_consecutive` consecutive samples; reaching t_max without
    that raises NonConvergenceError. Invariant breaches always raise.
    """
    if dt <= 0 or t_max <= 0:
        raise ValueError("dt and t_max must be positive")
    if sample_interval < dt:
        raise ValueError("sample_interval must be at least dt")
    steps_per_sample = max(1, int(round(sample_interval / dt)))
    n_steps = max(1, int(round(t_max / dt)))

    rho = np.array(rho0, dtype=np.complex128)
    report = IntegrationReport()
    streak = 0
    residual = None

    for step in range(n_steps + 1):
        t = step * dt
        k1 = None
        at_sample = (step % steps_per_sample == 0) or step == n_steps
        if at_sample:
            if not np.isfinite(rho).all():
                raise InvariantViolation("finiteness", np.inf, step, t)
            herm = float(np.abs(rho - rho.conj().T).max())
            drift = abs(float(np.trace(rho).real) - 1.0)
            min_eig = float(np.linalg.eigvalsh(rho).min())
            report.max_herm_dev = max(report.max_herm_dev, herm)
            report.max_trace_drift = max(report.max_trace_drift, drift)
            report.min_eigenvalue = min(report.min_eigenvalue, min_eig)
            if herm > tol.tol_herm:
                raise InvariantViolation("hermiticity", herm, step, t)
            if drift > tol.tol_tr:
                raise InvariantViolation("trace", drift, step, t)
            if min_eig < -tol.tol_pos:
                raise InvariantViolation("positivity", -min_eig, step, t)

            if sample_fn is not None:
                sample_fn(t, rho)

            if residual_target is not None:
                k1 = rhs(rho)
                residual = float(np.linalg.norm(k1))
                streak = streak + 1 if residual < residual_target else 0
                if streak >= required_consecutive:
                    report.converged = True
                    report.t_converged = t
                    report.final_residual = residual
                    return rho, report

        if step < n_steps:
            rho = rk4_step(rho, dt, rhs, k1=k1)

    report.final_residual = residual
    if residual_target is not None:
        raise NonConvergenceError(t_max, residual if residual is not None else np.inf,
                                  residual_target)
    return rho, report


@dataclass(frozen=True)
class SimConfig:
    """One walk run: graph, channel, initial node and integrator settings.

    Times are in units of the inverse hopping rate (the Laplacian entries are
    O(1)). initial_node refers to the graph *before* defect removal and is
    remapped automatically.
    """

    graph: GraphSpec
    channel: NoiseChannel
    initial_node: int = 0
    dt: float = 0.005
    t_max: float = 500.0
    sample_interval: float = 0.05
    tolerances: Tolerances = Tolerances()

    def __post_init__(self):
        if self.dt <= 0 or self.t_max <= 0:
            raise ValueError("dt and t_max must be positive")
        if self.sample_interval < self.dt:
            raise ValueError("sample_interval must be at least dt")

    def resolve(self) -> tuple[NetworkGraph, dict[int, int], np.ndarray]:
        """Build the graph and the initial basis projector on it."""
        g, index_map = self.graph.build()
        if self.initial_node not in index_map:
            raise ValueError(
                f"initial node {self.initial_node} is not present (removed by a defect?)")
        rho0 = DensityState.basis_state(g.n, index_map[self.initial_node]).matrix
        return g, index_map, rho0


@dataclass
class Trajectory:
    """Sampled observables of one evolution plus its final state."""

    times: np.ndarray
    populations: np.ndarray        # (samples, n)
    coherence_l1: np.ndarray       # (samples,)
    trace_distance: np.ndarray | None
    final_state: DensityState
    report: IntegrationReport
    index_map: dict[int, int]


def evolve(config: SimConfig, reference: np.ndarray | DensityState | None = None) -> Trajectory:
    """Integrate the configured run, sampling populations and coherence.

    When `reference` is given, the trace distance to it is sampled as well
    (used for relaxation-time analysis against a precomputed steady state).
    """
    from .observables import l1_coherence, trace_distance

    g, index_map, rho0 = config.resolve()
    rhs = make_rhs(config.channel, g)
    ref = reference.matrix if isinstance(reference, DensityState) else reference

    times: list[float] = []
    pops: list[np.ndarray] = []
    coh: list[float] = []
    dist: list[float] = []

    def sample(t: float, rho: np.ndarray):
        times.append(t)
        pops.append(rho.diagonal().real.copy())
        coh.append(l1_coherence(rho))
        if ref is not None:
            dist.append(trace_distance(rho, ref))

    final, report = run_integration(
        rhs, rho0, dt=config.dt, t_max=config.t_max,
        sample_interval=config.sample_interval, tol=config.tolerances,
        sample_fn=sample)
    return Trajectory(times=np.array(times), populations=np.array(pops),
                      coherence_l1=np.array(coh),
                      trace_distance=np.array(dist) if ref is not None else None,
                      final_state=DensityState(final), report=report,
                      index_map=index_map)


@dataclass
class SteadyStateResult:
    state: DensityState
    report: IntegrationReport
    index_map: dict[int, int]


def steady_state_run(config: SimConfig) -> SteadyStateResult:
    """Integrate until ||drho/dt||_F stays below eps_ss for 10 samples."""
    if not config.channel.has_dissipation:
        raise ValueError("steady-state search needs dissipation (gamma > 0 or p > 0)")
    g, index_map, rho0 = config.resolve()
    rhs = make_rhs(config.channel, g)
    final, report = run_integration(
        rhs, rho0, dt=config.dt, t_max=config.t_max,
        sample_interval=config.sample_interval, tol=config.tolerances,
        residual_target=config.tolerances.eps_ss)
    return SteadyStateResult(state=DensityState(final), report=report, index_map=index_map)


def steady_state(config: SimConfig) -> DensityState:
    """Converged steady state of the configured run."""
    return steady_state_run(config).state
