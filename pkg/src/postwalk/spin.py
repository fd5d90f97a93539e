"""Spin-network sector: XY hopping of a single excitation under monitored
environment-mediated hops, with Wootters pairwise concurrence.

States live on the full 2^n tensor-product space (spin 0 is the most
significant bit, bit 1 = spin-up). The excitation-number-conserving structure
confines a single-excitation start to an n-dimensional block, which the
sector fast path exploits; the full space stays the reference because the
two-site reduced matrices need the spin-down background explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import GraphSpec, NetworkGraph
from .nlme import (DensityState, IntegrationReport, JumpOperatorSet,
                   Tolerances, nlme_rhs_generic, run_integration)

MAX_SPINS = 8

EIG_CLAMP = 1e-10

_SIGMA_PLUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=np.complex128)   # |up><down|
_SIGMA_MINUS = _SIGMA_PLUS.T.copy()
_SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=np.complex128)
_NUMBER = _SIGMA_PLUS @ _SIGMA_MINUS


@dataclass(frozen=True)
class SpinSystem:
    """n interacting spins coupled along the edges of a network."""

    graph: NetworkGraph
    j_coupling: float = 1.0

    def __post_init__(self):
        if self.graph.n > MAX_SPINS:
            raise ValueError(
                f"{self.graph.n} spins exceeds the {MAX_SPINS}-spin Hilbert-space guard")
        if not self.graph.is_connected():
            raise ValueError("spin network must be connected")

    @property
    def n_spins(self) -> int:
        return self.graph.n

    @property
    def hilbert_dim(self) -> int:
        return 2 ** self.graph.n


def _site_operator(op: np.ndarray, site: int, n: int) -> np.ndarray:
    """Embed a single-spin operator at `site` (spin 0 most significant)."""
    left = np.eye(2 ** site, dtype=np.complex128)
    right = np.eye(2 ** (n - site - 1), dtype=np.complex128)
    return np.kron(np.kron(left, op), right)


def hop_operator(sys: SpinSystem, dst: int, src: int) -> np.ndarray:
    """sigma^+_dst sigma^-_src: moves one excitation src -> dst."""
    n = sys.n_spins
    return _site_operator(_SIGMA_PLUS, dst, n) @ _site_operator(_SIGMA_MINUS, src, n)


def xy_hamiltonian(sys: SpinSystem) -> np.ndarray:
    """Isotropic XY exchange over the network edges, J (s+_i s-_j + s-_i s+_j)."""
    d = sys.hilbert_dim
    H = np.zeros((d, d), dtype=np.complex128)
    for i, j in sys.graph.edges:
        hop = hop_operator(sys, i, j)
        H += hop + hop.conj().T
    return sys.j_coupling * H


def number_operators(sys: SpinSystem) -> np.ndarray:
    """Stack of per-site excitation-number operators."""
    n = sys.n_spins
    return np.stack([_site_operator(_NUMBER, i, n) for i in range(n)])


def spin_hop_jump_set(sys: SpinSystem, gamma: float,
                      both_orientations: bool = True) -> JumpOperatorSet:
    """Environment-mediated hop operators along the network edges.

    By default each undirected edge contributes both ordered orientations,
    mirroring the node-walk channel where jumps run along both directions;
    `both_orientations=False` keeps a single operator per edge for comparison.
    """
    ops = []
    for i, j in sys.graph.edges:
        ops.append(hop_operator(sys, i, j))
        if both_orientations:
            ops.append(hop_operator(sys, j, i))
    return JumpOperatorSet(operators=np.stack(ops), rate=gamma)


def spin_nlme_rhs(rho: np.ndarray, sys: SpinSystem, gamma: float, eta: float,
                  both_orientations: bool = True) -> np.ndarray:
    """Conditioned master-equation right-hand side on the full spin space."""
    if rho.shape != (sys.hilbert_dim, sys.hilbert_dim):
        raise ValueError(
            f"rho shape {rho.shape} does not match Hilbert dimension {sys.hilbert_dim}")
    H = xy_hamiltonian(sys)
    jumps = spin_hop_jump_set(sys, gamma, both_orientations)
    return nlme_rhs_generic(rho, H, jumps, eta, coherent_weight=1.0)


def make_spin_rhs(sys: SpinSystem, gamma: float, eta: float,
                  both_orientations: bool = True):
    """Bound right-hand side exploiting the hop operators' sparsity.

    Each hop operator is a partial permutation of basis states (flip one
    down-up pair), so sum_m Pm rho Pm' is a gather/scatter over precomputed
    index tables, and every Pm' Pm is diagonal. Produces exactly the same
    matrix as the dense generic assembly; the dense path stays as the oracle.
    """
    d = sys.hilbert_dim
    H = xy_hamiltonian(sys)
    jumps = spin_hop_jump_set(sys, gamma, both_orientations)
    s_diag = jumps.sum_pdagp.diagonal().real.copy()

    src_lin: list[np.ndarray] = []
    dst_lin: list[np.ndarray] = []
    for op in jumps.operators:
        dst, src = np.nonzero(op)  # entries are exactly 1
        src_lin.append((src[:, None] * d + src[None, :]).ravel())
        dst_lin.append((dst[:, None] * d + dst[None, :]).ravel())
    src_idx = np.concatenate(src_lin)
    dst_idx = np.concatenate(dst_lin)

    def rhs(rho: np.ndarray) -> np.ndarray:
        out = -1j * (H @ rho - rho @ H)
        out -= (0.5 * gamma) * (s_diag[:, None] * rho + rho * s_diag[None, :])
        flat = rho.ravel()
        re = np.bincount(dst_idx, weights=flat.real[src_idx], minlength=d * d)
        im = np.bincount(dst_idx, weights=flat.imag[src_idx], minlength=d * d)
        out += (gamma * (1.0 - eta)) * (re + 1j * im).reshape(d, d)
        if eta != 0.0:
            diag = rho.diagonal()
            out += (gamma * eta) * (np.dot(s_diag, diag) / diag.sum()) * rho
        return out

    return rhs


def single_excitation_index(n: int, site: int) -> int:
    """Basis index of |down..up(site)..down> with spin 0 most significant."""
    return 1 << (n - site - 1)


def single_excitation_state(sys: SpinSystem, site: int) -> DensityState:
    """Projector onto one spin up at `site` in a spin-down background."""
    if not 0 <= site < sys.n_spins:
        raise ValueError(f"spin index {site} out of range")
    return DensityState.basis_state(sys.hilbert_dim, single_excitation_index(sys.n_spins, site))


def excitation_populations(rho: np.ndarray, sys: SpinSystem) -> np.ndarray:
    """Per-site excitation probability Tr(rho n_i) from the diagonal."""
    n = sys.n_spins
    diag = np.asarray(rho).diagonal().real
    basis = np.arange(sys.hilbert_dim)
    pops = np.empty(n)
    for i in range(n):
        mask = (basis >> (n - i - 1)) & 1
        pops[i] = diag[mask == 1].sum()
    return pops


def sector_leakage(rho: np.ndarray, sys: SpinSystem) -> float:
    """Total population outside the single-excitation sector."""
    n = sys.n_spins
    diag = rho.diagonal().real
    sector = [single_excitation_index(n, i) for i in range(n)]
    return float(diag.sum() - diag[sector].sum())


def reduced_pair_state(rho: np.ndarray, sys: SpinSystem, i: int, j: int) -> np.ndarray:
    """Two-site reduced density matrix, basis |s_i s_j> with 1 = up."""
    n = sys.n_spins
    t = rho.reshape([2] * (2 * n))
    others = [a for a in range(n) if a not in (i, j)]
    perm = [i, j, *others, n + i, n + j, *[n + a for a in others]]
    d_rest = 2 ** len(others)
    t = t.transpose(perm).reshape(4, d_rest, 4, d_rest)
    return np.einsum("akbk->ab", t)


def concurrence_from_pair(rho_pair: np.ndarray) -> float:
    """Wootters concurrence of a two-qubit density matrix."""
    yy = np.kron(_SIGMA_Y, _SIGMA_Y)
    r = rho_pair @ (yy @ rho_pair.conj() @ yy)
    evals = np.linalg.eigvals(r)
    if np.abs(evals.imag).max() > EIG_CLAMP:
        raise ValueError(
            f"spin-flipped spectrum has imaginary part {np.abs(evals.imag).max():.3e}; "
            "state is not a valid density matrix")
    evals = evals.real
    if evals.min() < -EIG_CLAMP:
        raise ValueError(
            f"spin-flipped spectrum has negative eigenvalue {evals.min():.3e}; "
            "state is not a valid density matrix")
    lam = np.sqrt(np.sort(np.clip(evals, 0.0, None))[::-1])
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def pairwise_concurrence(rho: np.ndarray, sys: SpinSystem, i: int, j: int) -> float:
    """Concurrence between spins i and j after tracing out the rest."""
    if i == j:
        raise ValueError("concurrence needs two distinct spins")
    return concurrence_from_pair(reduced_pair_state(rho, sys, i, j))


def concurrence_matrix(rho: np.ndarray, sys: SpinSystem) -> np.ndarray:
    """Symmetric matrix of pairwise concurrences (zero diagonal)."""
    n = sys.n_spins
    c = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            c[i, j] = c[j, i] = pairwise_concurrence(rho, sys, i, j)
    return c


def max_concurrence(rho: np.ndarray, sys: SpinSystem) -> float:
    """Largest pairwise concurrence over all unordered spin pairs."""
    return float(concurrence_matrix(rho, sys).max())


@dataclass(frozen=True)
class SpinConfig:
    """One spin-transport run; J is fixed to 1 and gamma carries the rate."""

    graph: GraphSpec
    gamma: float
    eta: float
    initial_spin: int | None = None   # default: node 0, or node 1 on a star (hub = 0)
    dt: float = 0.005
    t_max: float = 200.0
    sample_interval: float = 0.05
    tolerances: Tolerances = Tolerances()
    both_orientations: bool = True
    collect_pairwise: bool = False

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")
        if self.dt <= 0 or self.t_max <= 0:
            raise ValueError("dt and t_max must be positive")
        if self.sample_interval < self.dt:
            raise ValueError("sample_interval must be at least dt")

    def resolve(self) -> tuple[SpinSystem, int]:
        g, _ = self.graph.build()
        sys = SpinSystem(graph=g)
        site = self.initial_spin
        if site is None:
            site = 1 if self.graph.family == "star" else 0
        if not 0 <= site < g.n:
            raise ValueError(f"initial spin {site} out of range for {g.n} spins")
        return sys, site


@dataclass
class SpinTrajectory:
    """Sampled excitation populations and concurrence of one spin run."""

    times: np.ndarray
    populations: np.ndarray          # (samples, n)
    max_concurrence: np.ndarray      # (samples,)
    pairwise: np.ndarray | None      # (samples, n, n) when collected
    final_state: DensityState
    report: IntegrationReport
    system: SpinSystem


def evolve_spin(config: SpinConfig) -> SpinTrajectory:
    """Integrate a spin run, sampling site populations and max concurrence."""
    sys, site = config.resolve()
    rhs = make_spin_rhs(sys, config.gamma, config.eta, config.both_orientations)
    rho0 = single_excitation_state(sys, site).matrix

    times: list[float] = []
    pops: list[np.ndarray] = []
    cmax: list[float] = []
    pairwise: list[np.ndarray] = []

    def sample(t: float, rho: np.ndarray):
        times.append(t)
        pops.append(excitation_populations(rho, sys))
        c = concurrence_matrix(rho, sys)
        cmax.append(float(c.max()))
        if config.collect_pairwise:
            pairwise.append(c)

    final, report = run_integration(
        rhs, rho0, dt=config.dt, t_max=config.t_max,
        sample_interval=config.sample_interval, tol=config.tolerances,
        sample_fn=sample)
    return SpinTrajectory(times=np.array(times), populations=np.array(pops),
                          max_concurrence=np.array(cmax),
                          pairwise=np.array(pairwise) if config.collect_pairwise else None,
                          final_state=DensityState(final), report=report, system=sys)


@dataclass
class SpinSteadyStateResult:
    state: DensityState
    report: IntegrationReport
    system: SpinSystem


def spin_steady_state_run(config: SpinConfig) -> SpinSteadyStateResult:
    """Integrate until excitation transport settles into its fixed point."""
    if config.gamma <= 0:
        raise ValueError("steady-state search needs gamma > 0")
    sys, site = config.resolve()
    rhs = make_spin_rhs(sys, config.gamma, config.eta, config.both_orientations)
    rho0 = single_excitation_state(sys, site).matrix
    final, report = run_integration(
        rhs, rho0, dt=config.dt, t_max=config.t_max,
        sample_interval=config.sample_interval, tol=config.tolerances,
        residual_target=config.tolerances.eps_ss)
    return SpinSteadyStateResult(state=DensityState(final), report=report, system=sys)


def sector_hamiltonian(sys: SpinSystem) -> np.ndarray:
    """Single-excitation block of the XY Hamiltonian: J times the adjacency."""
    return sys.j_coupling * sys.graph.adjacency.astype(np.float64)


def make_sector_rhs(sys: SpinSystem, gamma: float, eta: float):
    """n-dimensional fast path for single-excitation dynamics.

    In the one-excitation block the hop operators act like |i><j| per directed
    edge, the loss weights reduce to the node degrees, and the renormalization
    gain is the degree-weighted population sum.
    """
    A = sector_hamiltonian(sys)
    deg = sys.graph.degrees.astype(np.float64)
    adj = sys.graph.adjacency.astype(np.float64)

    def rhs(rho: np.ndarray) -> np.ndarray:
        diag = rho.diagonal()
        out = -1j * (A @ rho - rho @ A)
        out -= (0.5 * gamma) * (deg[:, None] * rho + rho * deg[None, :])
        out[np.diag_indices(rho.shape[0])] += gamma * (1.0 - eta) * (adj @ diag)
        if eta != 0.0:
            out += (gamma * eta) * (np.dot(deg, diag) / diag.sum()) * rho
        return out

    return rhs
