"""Synchronization/stability errors, Hurwitz synthesis, potentials, control law.

The per-agent control is u_i = u_i^d - u_i^c - u_i^0:

    u_i^d = rho_i/(d_i + b_i0) - fhat_i - what_i + fhat0 + r_i - c . E_i0
    u_i^c = collision terms,   u_i^0 = obstacle terms

where e^k is the neighbor/leader-weighted disagreement of the k-th state
channel, r = lambda_1 e^1 + ... + lambda_{n-1} e^{n-1} + e^n, and
rho = lambda_1 e^2 + ... + lambda_{n-1} e^n.

Avoidance terms are scalar potentials multiplied by a direction factor
sign(x_i - other) chosen so that the net contribution to u_i repels agent i
along the position axis (a signless sum cannot repel symmetrically in 1-D).
Scenarios can opt into the raw signless form via ``signless_avoidance``.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .dynamics import FleetState
from .estimator import LipEstimator, estimate
from .graph import GraphLyapunov, Topology

# Distances are clamped below by this before dividing, and the obstacle
# potential saturates at the value attained at core_radius * (1 + this).
DISTANCE_CLAMP = 1e-6
HURWITZ_TOL = 1e-12


class NotHurwitz(ValueError):
    """lambda_bar does not place all companion-matrix roots in the open left half plane."""


class IsolatedAgent(RuntimeError):
    """An agent has d_i + b_i0 = 0 and cannot evaluate the control law."""


class NonFiniteControl(RuntimeError):
    """A term of the control law evaluated to NaN/Inf."""


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Offsets:
    """Desired per-order offsets for each agent and the leader."""

    per_agent: np.ndarray  # (N, n)
    leader: np.ndarray     # (n,)

    def __post_init__(self):
        pa = _readonly(self.per_agent)
        ld = _readonly(self.leader)
        if pa.ndim != 2 or ld.ndim != 1 or pa.shape[1] != ld.shape[0]:
            raise ValueError("per_agent must be (N, n) and leader (n,)")
        if not (np.all(np.isfinite(pa)) and np.all(np.isfinite(ld))):
            raise ValueError("offsets must be finite")
        object.__setattr__(self, "per_agent", pa)
        object.__setattr__(self, "leader", ld)

    @staticmethod
    def zero(n_agents: int, order: int) -> "Offsets":
        return Offsets(np.zeros((n_agents, order)), np.zeros(order))


@dataclass(frozen=True)
class ControlGains:
    """All controller constants: Hurwitz weights, feedback row, avoidance shape."""

    lambda_bar: np.ndarray       # (n-1,) Hurwitz-certified weights
    c: np.ndarray                # (n,) relative-error feedback row
    gamma0: float = 0.0          # obstacle avoidance gain
    gamma1: float = 0.0          # inter-agent avoidance gain
    gamma2: float = 0.0          # leader-proximity gain
    chi: float = 1.0             # repulsive potential strength
    psi_ij: float = 1.0          # pairwise separation threshold
    psi_i0: float = 1.0          # leader separation threshold
    detect_radius: float = 2.0   # obstacle detection radius R
    obstacle_radius: float = 0.5 # obstacle core radius (must be < R)
    obstacles: np.ndarray = ()   # scalar obstacle positions
    alpha_bar: float = 1.0       # right-hand side of the companion Lyapunov equation
    strict_decentralized: bool = False
    signless_avoidance: bool = False

    def __post_init__(self):
        lam = _readonly(self.lambda_bar)
        c = _readonly(self.c)
        obstacles = _readonly(np.atleast_1d(np.asarray(self.obstacles, dtype=float)))
        object.__setattr__(self, "lambda_bar", lam)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "obstacles", obstacles)
        if lam.ndim != 1 or lam.shape[0] < 1:
            raise ValueError("lambda_bar must be a nonempty vector")
        if c.ndim != 1 or c.shape[0] != lam.shape[0] + 1:
            raise ValueError("c must have length n = len(lambda_bar) + 1")
        for name in ("gamma0", "gamma1", "gamma2"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        for name in ("chi", "psi_ij", "psi_i0", "detect_radius", "obstacle_radius", "alpha_bar"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.obstacle_radius < self.detect_radius:
            raise ValueError("obstacle_radius must be smaller than detect_radius")
        if not check_hurwitz(lam):
            raise NotHurwitz(f"lambda_bar {lam} fails the Hurwitz check")

    @property
    def order(self) -> int:
        return self.c.shape[0]


def hurwitz_lambda(xi) -> np.ndarray:
    """Coefficients (lambda_1..lambda_{n-1}) of prod_j (s + xi_j) for positive xi_j."""
    xi = np.asarray(xi, dtype=float)
    if xi.ndim != 1 or xi.shape[0] < 1:
        raise ValueError("xi must be a nonempty vector")
    if np.any(xi <= 0):
        raise ValueError("all xi_j must be positive")
    coeffs = np.array([1.0])
    for root in xi:
        coeffs = np.convolve(coeffs, np.array([1.0, root]))
    # coeffs = [1, lambda_{n-1}, ..., lambda_1]; drop the leading 1 and reverse.
    return coeffs[1:][::-1]


def companion(lambda_bar) -> np.ndarray:
    """The (n-1)x(n-1) companion matrix with -lambda_j in its last row."""
    lam = np.asarray(lambda_bar, dtype=float)
    m = lam.shape[0]
    delta = np.zeros((m, m))
    if m > 1:
        delta[:-1, 1:] = np.eye(m - 1)
    delta[-1, :] = -lam
    return delta


def check_hurwitz(lambda_bar) -> bool:
    """True iff every companion-matrix eigenvalue has real part < -1e-12."""
    lam = np.asarray(lambda_bar, dtype=float)
    if lam.ndim != 1 or lam.shape[0] < 1 or not np.all(np.isfinite(lam)):
        return False
    eig = np.linalg.eigvals(companion(lam))
    return bool(np.all(eig.real < -HURWITZ_TOL))


def lyapunov_P1(lambda_bar, alpha_bar: float) -> np.ndarray:
    """Solve Delta^T P1 + P1 Delta = -alpha_bar * I for the Hurwitz companion Delta."""
    if not alpha_bar > 0:
        raise ValueError("alpha_bar must be positive")
    lam = np.asarray(lambda_bar, dtype=float)
    if not check_hurwitz(lam):
        raise NotHurwitz(f"lambda_bar {lam} is not Hurwitz")
    delta = companion(lam)
    m = delta.shape[0]
    p1 = scipy.linalg.solve_continuous_lyapunov(delta.T, -alpha_bar * np.eye(m))
    return 0.5 * (p1 + p1.T)


def sync_error(k: int, fleet: FleetState, topology: Topology, offsets: Offsets) -> np.ndarray:
    """Weighted synchronization error of the k-th channel (k is 1-based).

    e_i^k = -nu1 * sum_j a_ij [(x_i^k - psi_i) - (x_j^k - psi_j)]
            -nu2 * b_i0   [(x_i^k - psi_i) - (x_0^k - psi_0)]

    computed as the literal per-agent sums; equals the matrix form
    -(nu1 L + nu2 B)(xbar^k - xbar_0^k) to floating-point accuracy.
    """
    n = fleet.order
    if not 1 <= k <= n:
        raise ValueError(f"order index k={k} out of range 1..{n}")
    xbar = fleet.agents[:, k - 1] - offsets.per_agent[:, k - 1]
    xbar0 = fleet.leader[k - 1] - offsets.leader[k - 1]
    adj = topology.adjacency
    b = topology.leader_weights
    e = np.empty(topology.n_agents)
    for i in range(topology.n_agents):
        acc = 0.0
        for j in range(topology.n_agents):
            if adj[i, j] != 0.0:
                acc += adj[i, j] * (xbar[i] - xbar[j])
        e[i] = -topology.nu1 * acc - topology.nu2 * b[i] * (xbar[i] - xbar0)
    return e


def stability_error(e_stack: np.ndarray, lambda_bar) -> np.ndarray:
    """r = lambda_1 e^1 + ... + lambda_{n-1} e^{n-1} + e^n from the (n, N) stack."""
    e = np.asarray(e_stack, dtype=float)
    lam = np.asarray(lambda_bar, dtype=float)
    if e.shape[0] != lam.shape[0] + 1:
        raise ValueError("e_stack must hold n = len(lambda_bar) + 1 error vectors")
    return lam @ e[:-1] + e[-1]


def rho(e_tail: np.ndarray, lambda_bar) -> np.ndarray:
    """rho = lambda_1 e^2 + ... + lambda_{n-1} e^n from the (n-1, N) tail stack."""
    e = np.asarray(e_tail, dtype=float)
    lam = np.asarray(lambda_bar, dtype=float)
    if e.shape[0] != lam.shape[0]:
        raise ValueError("e_tail must hold the n-1 vectors e^2..e^n")
    return lam @ e


def collision_potential(xi1: float, xj1: float, chi: float, psi: float) -> float:
    """chi / distance inside the separation threshold, 0 at or beyond it."""
    dist = abs(xi1 - xj1)
    if dist >= psi:
        return 0.0
    return chi / max(dist, DISTANCE_CLAMP)


def leader_potential(xi1: float, x01: float, chi: float, psi0: float) -> float:
    """Agent-to-leader variant of the collision potential."""
    dist = abs(xi1 - x01)
    if dist >= psi0:
        return 0.0
    return chi / max(dist, DISTANCE_CLAMP)


def obstacle_potential(xi1: float, omega: float, detect_radius: float, d_core: float) -> float:
    """[(R^2 - d^2)/(d^2 - core^2)]^2 in the detection annulus, 0 beyond R.

    Inside the core (outside the formula's stated domain) the value
    saturates at the one attained at distance core * (1 + 1e-6).
    """
    if not d_core < detect_radius:
        raise ValueError("d_core must be smaller than detect_radius")
    dist = abs(xi1 - omega)
    if dist > detect_radius:
        return 0.0
    dist = max(dist, d_core * (1.0 + DISTANCE_CLAMP))
    ratio = (detect_radius ** 2 - dist ** 2) / (dist ** 2 - d_core ** 2)
    return ratio ** 2


def _direction(origin: float, other: float) -> float:
    # Repulsive direction along the position axis; zero only at exact overlap.
    return float(np.sign(origin - other))


def control_input(
    i: int,
    fleet: FleetState,
    topology: Topology,
    lyap: GraphLyapunov,
    offsets: Offsets,
    gains: ControlGains,
    estimators: tuple[LipEstimator, LipEstimator, LipEstimator],
    t: float,
) -> float:
    """Composite control for agent i from a consistent fleet snapshot.

    ``estimators`` holds agent i's drift, disturbance, and leader estimators.
    ``lyap`` certifies the topology (it feeds the tuning laws, not this law).
    """
    del lyap
    n = fleet.order
    adj = topology.adjacency
    d_i = float(adj[i].sum())
    b_i = float(topology.leader_weights[i])
    if d_i + b_i == 0.0:
        raise IsolatedAgent(f"agent {i} has no neighbors and no leader link")

    e_stack = np.stack([sync_error(k, fleet, topology, offsets) for k in range(1, n + 1)])
    r_i = float(stability_error(e_stack, gains.lambda_bar)[i])
    rho_i = float(rho(e_stack[1:], gains.lambda_bar)[i])

    est_f, est_w, est_leader = estimators
    f_hat = estimate(est_f, fleet.agents[i])
    w_hat = estimate(est_w, t)
    l_hat = estimate(est_leader, fleet.leader)

    delta_i = (fleet.agents[i] - offsets.per_agent[i]) - (fleet.leader - offsets.leader)
    if gains.strict_decentralized and b_i == 0.0:
        c_term = 0.0
    else:
        c_term = float(gains.c @ delta_i)

    u_d = rho_i / (d_i + b_i) - f_hat - w_hat + l_hat + r_i - c_term

    x_i = float(fleet.agents[i, 0])
    u_c = 0.0
    for j in range(topology.n_agents):
        if j == i:
            continue
        m_ij = collision_potential(x_i, float(fleet.agents[j, 0]), gains.chi, gains.psi_ij)
        if m_ij:
            u_c += gains.gamma1 * m_ij * (1.0 if gains.signless_avoidance
                                          else -_direction(x_i, float(fleet.agents[j, 0])))
    m_i0 = leader_potential(x_i, float(fleet.leader[0]), gains.chi, gains.psi_i0)
    if m_i0:
        u_c += gains.gamma2 * m_i0 * (1.0 if gains.signless_avoidance
                                      else -_direction(x_i, float(fleet.leader[0])))
    u_0 = 0.0
    for omega in gains.obstacles:
        m_ib = obstacle_potential(x_i, float(omega), gains.detect_radius, gains.obstacle_radius)
        if m_ib:
            u_0 += gains.gamma0 * m_ib * (1.0 if gains.signless_avoidance
                                          else -_direction(x_i, float(omega)))

    u = u_d - u_c - u_0
    if not np.isfinite(u):
        raise NonFiniteControl(f"control for agent {i} is non-finite at t={t}")
    return float(u)
