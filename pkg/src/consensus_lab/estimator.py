"""Linear-in-parameters approximators and their adaptive tuning laws.

Each estimated quantity (agent drift, leader drift, disturbance) is modeled
as theta^T phi(input) with a fixed bounded basis phi and adapted weights
theta.  Tuning combines a learning term driven by the weighted stability
error with a damping term -kappa*theta that keeps weights bounded without
persistent excitation.  The leader estimate enters the control law with the
opposite sign of the agent estimate, so its tuning law flips sign too.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

GAUSSIAN_RBF_STATE = "gaussian_rbf_state"
GAUSSIAN_RBF_TIME = "gaussian_rbf_time"
FOURIER_TIME = "fourier_time"

DEFAULT_GRID_PER_AXIS = 5
DEFAULT_FOURIER_FREQS = (2.0, 1.0)


class DimensionMismatch(ValueError):
    """Basis input does not match the dimension of the centers."""


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class BasisSpec:
    """Fixed basis description.

    gaussian_rbf_state: `centers` is (p, d), each component
        exp(-||x - c_j||^2 / (2 width^2)), so each lies in (0, 1].
    gaussian_rbf_time: `centers` is (p,) on the time axis, same formula.
    fourier_time: `centers` holds frequencies (w_1, ..., w_m) and the basis
        is [1, sin(w_1 t), cos(w_1 t), ..., sin(w_m t), cos(w_m t)].
    Every kind is bounded with sup-norm at most sqrt(count).
    """

    kind: str
    centers: np.ndarray
    width: float = 1.0
    count: int = 0

    def __post_init__(self):
        if self.kind not in (GAUSSIAN_RBF_STATE, GAUSSIAN_RBF_TIME, FOURIER_TIME):
            raise ValueError(f"unknown basis kind {self.kind!r}")
        centers = _readonly(self.centers)
        if self.kind == GAUSSIAN_RBF_STATE:
            if centers.ndim != 2:
                raise ValueError("state RBF centers must be a (p, d) array")
            count = centers.shape[0]
        elif self.kind == GAUSSIAN_RBF_TIME:
            if centers.ndim != 1:
                raise ValueError("time RBF centers must be a 1-D array")
            count = centers.shape[0]
        else:
            if centers.ndim != 1 or centers.shape[0] < 1:
                raise ValueError("fourier basis needs at least one frequency")
            count = 1 + 2 * centers.shape[0]
        if self.kind != FOURIER_TIME and not self.width > 0:
            raise ValueError("width must be positive")
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "width", float(self.width))
        object.__setattr__(self, "count", int(count))


def gaussian_grid(box, per_axis=DEFAULT_GRID_PER_AXIS, width=None) -> BasisSpec:
    """Uniform RBF grid over a state box; default width is the largest grid spacing."""
    box = [(float(lo), float(hi)) for lo, hi in box]
    if isinstance(per_axis, int):
        per_axis = [per_axis] * len(box)
    if len(per_axis) != len(box):
        raise ValueError("per_axis must match the box dimension")
    axes, spacings = [], []
    for (lo, hi), m in zip(box, per_axis):
        if not hi > lo or m < 1:
            raise ValueError("box bounds must satisfy hi > lo with at least one node per axis")
        axes.append(np.linspace(lo, hi, m))
        spacings.append((hi - lo) / (m - 1) if m > 1 else (hi - lo))
    mesh = np.meshgrid(*axes, indexing="ij")
    centers = np.stack([m.ravel() for m in mesh], axis=1)
    if width is None:
        width = max(spacings)
    return BasisSpec(kind=GAUSSIAN_RBF_STATE, centers=centers, width=width)


def fourier_basis(freqs=DEFAULT_FOURIER_FREQS) -> BasisSpec:
    return BasisSpec(kind=FOURIER_TIME, centers=np.asarray(freqs, dtype=float))


def basis_eval(basis: BasisSpec, value) -> np.ndarray:
    """Evaluate the basis at a state vector or a time instant."""
    if basis.kind == GAUSSIAN_RBF_STATE:
        x = np.asarray(value, dtype=float)
        if x.shape != (basis.centers.shape[1],):
            raise DimensionMismatch(
                f"input of shape {x.shape} does not match centers of dimension {basis.centers.shape[1]}")
        d2 = np.sum((basis.centers - x) ** 2, axis=1)
        return np.exp(-d2 / (2.0 * basis.width ** 2))
    if basis.kind == GAUSSIAN_RBF_TIME:
        t = float(value)
        d2 = (basis.centers - t) ** 2
        return np.exp(-d2 / (2.0 * basis.width ** 2))
    t = float(value)
    out = np.empty(basis.count)
    out[0] = 1.0
    out[1::2] = np.sin(basis.centers * t)
    out[2::2] = np.cos(basis.centers * t)
    return out


def basis_eval_batch(basis: BasisSpec, states: np.ndarray) -> np.ndarray:
    """Evaluate a state RBF basis for a stack of states, returning (N, p)."""
    if basis.kind != GAUSSIAN_RBF_STATE:
        raise DimensionMismatch("batch evaluation is defined for state RBF bases only")
    x = np.asarray(states, dtype=float)
    diff = x[:, None, :] - basis.centers[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    return np.exp(-d2 / (2.0 * basis.width ** 2))


def basis_bound(basis: BasisSpec) -> float:
    """Sup-norm bound on phi: sqrt(p) for every supported kind."""
    return math.sqrt(basis.count)


@dataclass(frozen=True)
class LipEstimator:
    """Adaptive weights theta, their basis, the SPD tuning gain F, and damping kappa."""

    theta: np.ndarray
    basis: BasisSpec
    gain: Optional[np.ndarray] = None  # scalar, matrix, or None for identity
    sigma: float = 0.05

    def __post_init__(self):
        theta = _readonly(self.theta)
        if theta.shape != (self.basis.count,):
            raise ValueError(f"theta must have length {self.basis.count}")
        if not np.all(np.isfinite(theta)):
            raise ValueError("theta must be finite")
        if self.gain is None:
            gain = np.eye(self.basis.count)
        else:
            gain = np.array(self.gain, dtype=float)
            if gain.ndim == 0:
                gain = float(gain) * np.eye(self.basis.count)
        if gain.shape != (self.basis.count, self.basis.count):
            raise ValueError("gain must be a square matrix matching the basis size")
        if np.max(np.abs(gain - gain.T)) > 1e-10:
            raise ValueError("gain must be symmetric")
        if np.linalg.eigvalsh(gain)[0] <= 0:
            raise ValueError("gain must be positive definite")
        gain.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "gain", gain)
        object.__setattr__(self, "sigma", float(self.sigma))
        if self.sigma < 0:
            raise ValueError("sigma damping must be nonnegative")


def zero_estimator(basis: BasisSpec, gain=None, sigma: float = 0.05) -> LipEstimator:
    return LipEstimator(theta=np.zeros(basis.count), basis=basis, gain=gain, sigma=sigma)


def estimate(est: LipEstimator, value) -> float:
    """theta^T phi(input)."""
    return float(est.theta @ basis_eval(est.basis, value))


def tune_agent(est: LipEstimator, phi: np.ndarray, r_i: float, p_i: float, pin_degree: float) -> np.ndarray:
    """Weight derivative -F [phi * r_i * p_i * (d_i + b_i0) + kappa * theta]."""
    return -est.gain @ (np.asarray(phi, dtype=float) * (r_i * p_i * pin_degree) + est.sigma * est.theta)


def tune_leader(est: LipEstimator, phi0: np.ndarray, r_i: float, p_i: float, pin_degree: float) -> np.ndarray:
    """Weight derivative +F [phi0 * r_i * p_i * (d_i + b_i0) - kappa * theta]."""
    return est.gain @ (np.asarray(phi0, dtype=float) * (r_i * p_i * pin_degree) - est.sigma * est.theta)


def tune_disturbance(est: LipEstimator, phiw: np.ndarray, r_i: float, p_i: float, pin_degree: float) -> np.ndarray:
    """Same structure as tune_agent, applied to the time-basis estimator."""
    return -est.gain @ (np.asarray(phiw, dtype=float) * (r_i * p_i * pin_degree) + est.sigma * est.theta)


@dataclass(frozen=True)
class NNConfig:
    """Basis and gain configuration for the three estimator families.

    One scalar tuning gain F (times identity) is shared by all families, as
    exposed in the scenario file; per-family damping constants kappa,
    kappa0, kappaw.  Weights start at zero, the unforced equilibrium of the
    damped laws.  weight_breaker is the norm at which a run aborts.
    """

    f_basis: BasisSpec
    leader_basis: BasisSpec
    w_basis: BasisSpec
    gain: float = 10.0
    kappa: float = 0.05
    kappa0: float = 0.05
    kappaw: float = 0.05
    weight_breaker: float = 1e6

    def __post_init__(self):
        if not self.gain > 0:
            raise ValueError("tuning gain must be positive")
        for name in ("kappa", "kappa0", "kappaw"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
