"""Brunovsky-chain agent/leader dynamics and the bundled five-vehicle fleet.

Every model is a chain of n integrators whose last channel is forced:
followers by drift + control + disturbance, the leader by its autonomous
drift.  Drifts are plain callables f(state, t) -> float; the bundled fleet
hard-codes five heterogeneous longitudinal vehicle models (mass, quadratic
drag, road grade) plus a self-regulating leader.  User scenarios may instead
supply drift expressions in a small arithmetic grammar.
"""

import ast
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

GRAVITY = 9.81
GRADE_AMPLITUDE = 0.05
GRADE_WAVENUMBER = 0.1


class NonFiniteDrift(RuntimeError):
    """A drift or disturbance evaluated to NaN/Inf; the model blew up."""


def _grade(s: float) -> float:
    return GRADE_AMPLITUDE * math.sin(GRADE_WAVENUMBER * s)


def _slope_force(s: float) -> float:
    return GRAVITY * math.sin(_grade(s))


@dataclass(frozen=True)
class AgentModel:
    """One follower: chain order, drift f(x, t), mass, disturbance w(t)."""

    order: int
    drift: Callable[[np.ndarray, float], float]
    mass: float
    disturbance: Callable[[float], float]
    label: str = ""

    def __post_init__(self):
        if self.order < 2:
            raise ValueError("chain order must be >= 2")
        if not self.mass > 0:
            raise ValueError("mass must be positive")


@dataclass(frozen=True)
class LeaderModel:
    """Leader: chain order and autonomous drift f0(x0, t)."""

    order: int
    drift: Callable[[np.ndarray, float], float]
    label: str = ""

    def __post_init__(self):
        if self.order < 2:
            raise ValueError("chain order must be >= 2")


@dataclass(frozen=True)
class FleetState:
    """Stacked follower states (N, n), leader state (n,), and the clock."""

    agents: np.ndarray
    leader: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        agents = np.array(self.agents, dtype=float)
        leader = np.array(self.leader, dtype=float)
        if agents.ndim != 2:
            raise ValueError("agents must be a 2-D array (N, n)")
        if leader.ndim != 1 or leader.shape[0] != agents.shape[1]:
            raise ValueError("leader state length must match the chain order")
        if not (np.all(np.isfinite(agents)) and np.all(np.isfinite(leader))):
            raise ValueError("states must be finite")
        if self.time < 0:
            raise ValueError("time must be nonnegative")
        agents.setflags(write=False)
        leader.setflags(write=False)
        object.__setattr__(self, "agents", agents)
        object.__setattr__(self, "leader", leader)
        object.__setattr__(self, "time", float(self.time))

    @property
    def n_agents(self) -> int:
        return self.agents.shape[0]

    @property
    def order(self) -> int:
        return self.agents.shape[1]


def agent_derivative(model: AgentModel, state: np.ndarray, u: float, t: float) -> np.ndarray:
    """Chain derivative [x2, ..., xn, f(x, t) + u + w(t)]."""
    x = np.asarray(state, dtype=float)
    if x.shape != (model.order,):
        raise ValueError(f"state must have length {model.order}")
    forcing = model.drift(x, t) + u + model.disturbance(t)
    if not math.isfinite(forcing):
        raise NonFiniteDrift(f"model {model.label!r} produced non-finite forcing at t={t}")
    out = np.empty(model.order)
    out[:-1] = x[1:]
    out[-1] = forcing
    return out


def leader_derivative(model: LeaderModel, state: np.ndarray, t: float) -> np.ndarray:
    """Chain derivative with the leader's autonomous drift in the last channel."""
    x = np.asarray(state, dtype=float)
    if x.shape != (model.order,):
        raise ValueError(f"state must have length {model.order}")
    forcing = model.drift(x, t)
    if not math.isfinite(forcing):
        raise NonFiniteDrift(f"leader {model.label!r} produced non-finite drift at t={t}")
    out = np.empty(model.order)
    out[:-1] = x[1:]
    out[-1] = forcing
    return out


def disturbance_eval(model: AgentModel, t: float) -> float:
    """w_i(t) for the given model."""
    return float(model.disturbance(t))


def validate_initial_bounds(fleet_state: FleetState, x_bound: float, x0_bound: float) -> bool:
    """True iff every follower norm <= x_bound and the leader norm <= x0_bound."""
    agent_norms = np.linalg.norm(fleet_state.agents, axis=1)
    return bool(np.all(agent_norms <= x_bound) and np.linalg.norm(fleet_state.leader) <= x0_bound)


# ---------------------------------------------------------------------------
# Bundled fleet: one leader and five followers with distinct nonlinearities.
# Control and disturbance enter the library's chain with unit gain, i.e. the
# simulated input is the acceleration command (physical force / mass).

PLATOON_MASSES = (1200.0, 1100.0, 1500.0, 1400.0, 1500.0)
PLATOON_LEADER_MASS = 2000.0
PLATOON_DISTURBANCE = 5.0


def _agent1_drift(m):
    def f(x, t):
        s, v = x[0], x[1]
        return v * math.sin(s) / m + math.cos(v) ** 2 - 0.47 * v * v / m - _slope_force(s)
    return f


def _agent2_drift(m):
    def f(x, t):
        s, v = x[0], x[1]
        return -s * s * v / m + math.cos(v) ** 2 - 0.52 * v * v / m - _slope_force(s)
    return f


def _agent3_drift(m):
    def f(x, t):
        s, v = x[0], x[1]
        return -s * s * v / m + math.sin(v) ** 2 - 0.57 * v * v / m - _slope_force(s)
    return f


def _agent4_drift(m):
    def f(x, t):
        s, v = x[0], x[1]
        w = s + v - 1.0
        return (-3.0 * w * w * w / m - v + 0.5 * math.sin(2.0 * t) + math.cos(2.0 * t)
                - 0.65 * v * v / m - _slope_force(s))
    return f


def _agent5_drift(m):
    def f(x, t):
        s, v = x[0], x[1]
        return math.cos(s) - 0.74 * v * v / m - _slope_force(s)
    return f


def _leader_drift(m):
    def f(x, t):
        s, v = x[0], x[1]
        w = s + v - 1.0
        return (-3.0 * v + 1.0 - _slope_force(s) - 0.4 * v * v / m
                + (3.0 * math.sin(2.0 * t) + 6.0 * math.cos(2.0 * t)) / m
                - w * w * (s + 4.0 * v - 1.0) / (3.0 * m))
    return f


BUILTIN_AGENT_DRIFTS = {
    "platoon_agent_1": _agent1_drift,
    "platoon_agent_2": _agent2_drift,
    "platoon_agent_3": _agent3_drift,
    "platoon_agent_4": _agent4_drift,
    "platoon_agent_5": _agent5_drift,
}

BUILTIN_LEADER_DRIFTS = {
    "platoon_leader": _leader_drift,
}


def constant_disturbance(value: float) -> Callable[[float], float]:
    return lambda t: value


def sinusoid_disturbance(amp: float, freq: float) -> Callable[[float], float]:
    return lambda t: amp * math.sin(freq * t)


def builtin_fleet() -> tuple[LeaderModel, list[AgentModel], dict]:
    """The bundled five-vehicle fleet and its parameter table."""
    agents = []
    factories = [_agent1_drift, _agent2_drift, _agent3_drift, _agent4_drift, _agent5_drift]
    for i, (factory, mass) in enumerate(zip(factories, PLATOON_MASSES), start=1):
        agents.append(AgentModel(
            order=2,
            drift=factory(mass),
            mass=mass,
            disturbance=constant_disturbance(PLATOON_DISTURBANCE),
            label=f"platoon_agent_{i}",
        ))
    leader = LeaderModel(order=2, drift=_leader_drift(PLATOON_LEADER_MASS), label="platoon_leader")
    params = {
        "masses": PLATOON_MASSES,
        "leader_mass": PLATOON_LEADER_MASS,
        "gravity": GRAVITY,
        "grade_amplitude": GRADE_AMPLITUDE,
        "grade_wavenumber": GRADE_WAVENUMBER,
        "agent_disturbance": PLATOON_DISTURBANCE,
    }
    return leader, agents, params


# ---------------------------------------------------------------------------
# Expression-form drifts for user scenarios: +, -, *, /, **, unary minus,
# sin/cos/tan/exp, the constants pi and e, and the variables s, v, t
# (plus x1..xn for higher-order chains).

_ALLOWED_FUNCS = {"sin": math.sin, "cos": math.cos, "tan": math.tan, "exp": math.exp}
_ALLOWED_CONSTS = {"pi": math.pi, "e": math.e}
_ALLOWED_NODES = (
    ast.Expression, ast.BinOp, ast.UnaryOp, ast.Add, ast.Sub, ast.Mult, ast.Div,
    ast.Pow, ast.USub, ast.UAdd, ast.Constant, ast.Name, ast.Call, ast.Load,
)


def _check_expression(text: str, variables: set[str]) -> ast.Expression:
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"cannot parse expression {text!r}: {exc.msg}") from exc
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED_NODES):
            raise ValueError(f"expression {text!r} uses unsupported syntax: {type(node).__name__}")
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _ALLOWED_FUNCS:
                raise ValueError(f"expression {text!r} calls an unsupported function")
            if node.keywords:
                raise ValueError("keyword arguments are not supported in expressions")
        if isinstance(node, ast.Name):
            if node.id not in variables and node.id not in _ALLOWED_FUNCS and node.id not in _ALLOWED_CONSTS:
                raise ValueError(f"expression {text!r} references unknown name {node.id!r}")
        if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
            raise ValueError(f"expression {text!r} contains a non-numeric constant")
    return tree


def compile_state_expression(text: str, order: int) -> Callable[[np.ndarray, float], float]:
    """Compile a drift expression over s, v (aliases of x1, x2), x1..xn, and t."""
    names = {"t"} | {f"x{k}" for k in range(1, order + 1)}
    if order >= 1:
        names.add("s")
    if order >= 2:
        names.add("v")
    tree = _check_expression(text, names)
    code = compile(tree, "<drift>", "eval")
    base = {"__builtins__": {}}
    base.update(_ALLOWED_FUNCS)
    base.update(_ALLOWED_CONSTS)

    def drift(x, t):
        env = dict(base)
        env["t"] = t
        env["s"] = x[0]
        if order >= 2:
            env["v"] = x[1]
        for k in range(order):
            env[f"x{k + 1}"] = x[k]
        return float(eval(code, env))

    return drift


def compile_time_expression(text: str) -> Callable[[float], float]:
    """Compile a disturbance expression in t alone."""
    tree = _check_expression(text, {"t"})
    code = compile(tree, "<disturbance>", "eval")
    base = {"__builtins__": {}}
    base.update(_ALLOWED_FUNCS)
    base.update(_ALLOWED_CONSTS)

    def disturbance(t):
        env = dict(base)
        env["t"] = t
        return float(eval(code, env))

    return disturbance
