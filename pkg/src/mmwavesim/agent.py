"""Per-beam deep Q-learning scheduler built on a from-scratch LSTM.

The recurrent Q-network follows the standard gate recursion

    i_t = sigm(x_t Wx_i + h_{t-1} Wh_i + b_i)      input gate
    f_t = sigm(x_t Wx_f + h_{t-1} Wh_f + b_f)      forget gate
    o_t = sigm(x_t Wx_o + h_{t-1} Wh_o + b_o)      output gate
    g_t = tanh(x_t Wx_g + h_{t-1} Wh_g + b_g)      candidate
    c_t = f_t * c_{t-1} + i_t * g_t
    h_t = o_t * tanh(c_t)
    q_t = h_t Wq + bq

with Q-values one per schedulable user. Training minimizes the mean
squared temporal-difference error against a delayed target copy of the
network, using plain gradient descent; gradients are obtained by full
backpropagation through time and are validated against central finite
differences in the test suite.

The recurrent carry lives for the resource-block groups of one TTI and
resets at TTI boundaries; experiences store the carry observed at
decision time so replayed transitions are recomputed in their original
context.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from scipy.special import expit as _sigmoid

from .errors import ConfigError
from .seeding import derive_seed, make_rng

__all__ = [
    "UserClass",
    "AgentConfig",
    "ExperienceTuple",
    "LstmNetwork",
    "ReplayMemory",
    "DqnAgent",
    "encode_state",
    "reward",
    "lstm_forward",
    "select_action",
    "train_step",
    "sync_target",
    "save_checkpoint",
    "load_checkpoint",
]

_GATES = ("i", "f", "o", "g")


class UserClass(Enum):
    URLLC = "urllc"
    EMBB = "embb"


@dataclass(frozen=True)
class AgentConfig:
    action_count: int
    gamma: float = 0.9
    epsilon: float = 0.1
    nn_learning_rate: float = 0.01
    hidden_units: int = 20
    input_size: int = 1
    minibatch: int = 20
    replay_capacity: int = 60
    train_interval_ttis: int = 60
    target_copy_interval_ttis: int = 120
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError(f"gamma must be in [0, 1], got {self.gamma}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError(f"epsilon must be in [0, 1], got {self.epsilon}")
        for name in (
            "action_count",
            "hidden_units",
            "input_size",
            "minibatch",
            "replay_capacity",
            "train_interval_ttis",
            "target_copy_interval_ttis",
        ):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.minibatch > self.replay_capacity:
            raise ConfigError("minibatch cannot exceed replay_capacity")
        if self.nn_learning_rate <= 0:
            raise ConfigError("nn_learning_rate must be > 0")


@dataclass
class ExperienceTuple:
    state: float
    action: int
    next_state: float
    reward: float
    hidden_context: tuple  # (h, c) carry at decision time, each shape (H,)
    action_mask: Optional[tuple] = None  # feasible actions at decision time


def encode_state(cqi: int) -> float:
    """CQI index normalized to [0, 1]."""
    if not 0 <= cqi <= 15:
        raise ConfigError(f"cqi must be in [0, 15], got {cqi}")
    return cqi / 15.0


def reward(user_class: UserClass, sinr_ratio: float, delay_ratio: float = None) -> float:
    """QoS reward in (0, 1).

    Rate-sensitive users score sigm(sinr_ratio); latency-sensitive users
    score sigm(sinr_ratio * delay_ratio), where sinr_ratio is the linear
    SINR over its QoS requirement and delay_ratio is the latency budget
    over the (floored) head-of-line delay.
    """
    if sinr_ratio <= 0:
        raise ConfigError("sinr_ratio must be > 0")
    if user_class is UserClass.URLLC:
        if delay_ratio is None or delay_ratio <= 0:
            raise ConfigError("URLLC reward needs delay_ratio > 0")
        x = sinr_ratio * delay_ratio
    else:
        x = sinr_ratio
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    ex = math.exp(x)
    return ex / (1.0 + ex)


class LstmNetwork:
    """Gate weights plus the linear Q-value head.

    Parameters live in a dict of float64 arrays keyed wx_i, wh_i, b_i,
    ... (one triple per gate), wq and bq. Initialization is uniform on
    [-0.1, 0.1] drawn in a fixed key order from the seed.
    """

    def __init__(self, input_size: int, hidden_units: int, action_count: int, seed: int = 0):
        self.input_size = input_size
        self.hidden_units = hidden_units
        self.action_count = action_count
        rng = make_rng(seed)
        d, h, a = input_size, hidden_units, action_count
        p = {}
        for gate in _GATES:
            p[f"wx_{gate}"] = rng.uniform(-0.1, 0.1, size=(d, h))
            p[f"wh_{gate}"] = rng.uniform(-0.1, 0.1, size=(h, h))
            p[f"b_{gate}"] = rng.uniform(-0.1, 0.1, size=(h,))
        p["wq"] = rng.uniform(-0.1, 0.1, size=(h, a))
        p["bq"] = rng.uniform(-0.1, 0.1, size=(a,))
        self.params = p

    def clone(self) -> "LstmNetwork":
        other = LstmNetwork.__new__(LstmNetwork)
        other.input_size = self.input_size
        other.hidden_units = self.hidden_units
        other.action_count = self.action_count
        other.params = {k: v.copy() for k, v in self.params.items()}
        return other

    def zero_carry(self, batch: Optional[int] = None):
        if batch is None:
            return (np.zeros(self.hidden_units), np.zeros(self.hidden_units))
        return (
            np.zeros((batch, self.hidden_units)),
            np.zeros((batch, self.hidden_units)),
        )


def _forward(net: LstmNetwork, x: np.ndarray, h0: np.ndarray, c0: np.ndarray):
    """Batched forward pass.

    x has shape (T, B, D); h0/c0 have shape (B, H). Returns Q-values of
    shape (T, B, A), the final carry and the step cache for backprop.
    """
    p = net.params
    steps, batch, _ = x.shape
    qs = np.empty((steps, batch, net.action_count))
    h, c = h0, c0
    cache = []
    for t in range(steps):
        xt = x[t]
        i = _sigmoid(xt @ p["wx_i"] + h @ p["wh_i"] + p["b_i"])
        f = _sigmoid(xt @ p["wx_f"] + h @ p["wh_f"] + p["b_f"])
        o = _sigmoid(xt @ p["wx_o"] + h @ p["wh_o"] + p["b_o"])
        g = np.tanh(xt @ p["wx_g"] + h @ p["wh_g"] + p["b_g"])
        c_new = f * c + i * g
        tc = np.tanh(c_new)
        h_new = o * tc
        qs[t] = h_new @ p["wq"] + p["bq"]
        cache.append((xt, h, c, i, f, o, g, tc, h_new))
        h, c = h_new, c_new
    return qs, (h, c), cache


def _backward(net: LstmNetwork, cache, dqs: np.ndarray):
    """Backpropagation through time for the loss gradient dqs = dL/dq.

    Returns parameter gradients keyed like `net.params`. Gradients do
    not flow into the initial carry (it is treated as an input).
    """
    p = net.params
    grads = {k: np.zeros_like(v) for k, v in p.items()}
    batch = dqs.shape[1]
    hdim = net.hidden_units
    dh_next = np.zeros((batch, hdim))
    dc_next = np.zeros((batch, hdim))
    for t in range(len(cache) - 1, -1, -1):
        xt, h_prev, c_prev, i, f, o, g, tc, h_new = cache[t]
        dq = dqs[t]
        grads["wq"] += h_new.T @ dq
        grads["bq"] += dq.sum(axis=0)
        dh = dq @ p["wq"].T + dh_next
        do = dh * tc
        dc = dh * o * (1.0 - tc * tc) + dc_next
        di = dc * g
        dg = dc * i
        df = dc * c_prev
        dc_next = dc * f
        d_ai = di * i * (1.0 - i)
        d_af = df * f * (1.0 - f)
        d_ao = do * o * (1.0 - o)
        d_ag = dg * (1.0 - g * g)
        dh_next = np.zeros((batch, hdim))
        for gate, da in zip(_GATES, (d_ai, d_af, d_ao, d_ag)):
            grads[f"wx_{gate}"] += xt.T @ da
            grads[f"wh_{gate}"] += h_prev.T @ da
            grads[f"b_{gate}"] += da.sum(axis=0)
            dh_next += da @ p[f"wh_{gate}"].T
    return grads


def _as_sequence(states) -> np.ndarray:
    x = np.asarray(states, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1, 1, 1)
    elif x.ndim == 1:
        x = x.reshape(-1, 1, 1)
    elif x.ndim == 2:
        x = x[:, None, :]
    return x


def lstm_forward(net: LstmNetwork, states, carry=None):
    """Q-value rows for a single state sequence.

    `states` is (T,) of scalars or (T, D); `carry` is an optional (h, c)
    pair of shape-(H,) arrays. Returns (q, carry) with q of shape (T, A).
    """
    x = _as_sequence(states)
    if carry is None:
        h0, c0 = net.zero_carry(batch=1)
    else:
        h0 = carry[0].reshape(1, -1)
        c0 = carry[1].reshape(1, -1)
    qs, (h, c), _ = _forward(net, x, h0, c0)
    return qs[:, 0, :], (h[0], c[0])


def select_action(
    net: LstmNetwork,
    state: float,
    carry,
    epsilon: float,
    rng: np.random.Generator,
    mask: Optional[Sequence[bool]] = None,
):
    """Epsilon-greedy action and the advanced carry.

    With probability epsilon a uniform draw over the feasible actions,
    otherwise the feasible argmax of the Q-row (lowest index on ties).
    `mask` marks feasible actions; None means all are feasible.
    """
    q, new_carry = lstm_forward(net, [state], carry)
    row = q[0]
    if mask is None:
        feasible = np.arange(net.action_count)
    else:
        feasible = np.flatnonzero(np.asarray(mask, dtype=bool))
        if feasible.size == 0:
            raise ConfigError("action mask excludes every action")
    if epsilon > 0.0 and rng.random() < epsilon:
        action = int(feasible[rng.integers(feasible.size)])
    else:
        sub = row[feasible]
        action = int(feasible[int(np.argmax(sub))])
    return action, new_carry


def train_step(
    main: LstmNetwork, target: LstmNetwork, batch: Sequence[ExperienceTuple], cfg: AgentConfig
) -> float:
    """One gradient-descent update of the main network; returns the loss.

    The target value is r + gamma * max_a Q_target(s', a), with the
    target network advanced through (s, s') from the stored carry so the
    bootstrap is evaluated in the context the next decision would see.
    The loss is the mean squared TD error over the minibatch; the target
    network is left untouched.
    """
    if len(batch) != cfg.minibatch:
        raise ConfigError(f"minibatch size must be {cfg.minibatch}, got {len(batch)}")
    b = len(batch)
    h0 = np.stack([e.hidden_context[0] for e in batch])
    c0 = np.stack([e.hidden_context[1] for e in batch])
    states = np.array([e.state for e in batch]).reshape(1, b, 1)
    actions = np.array([e.action for e in batch], dtype=int)
    rewards = np.array([e.reward for e in batch])

    x_target = np.array(
        [[e.state for e in batch], [e.next_state for e in batch]]
    ).reshape(2, b, 1)
    q_target, _, _ = _forward(target, x_target, h0, c0)
    q_next = q_target[1].copy()
    for row, e in enumerate(batch):
        if e.action_mask is not None:
            q_next[row, ~np.asarray(e.action_mask, dtype=bool)] = -np.inf
    targets = rewards + cfg.gamma * q_next.max(axis=1)

    qs, _, cache = _forward(main, states, h0, c0)
    preds = qs[0, np.arange(b), actions]
    td = targets - preds
    loss = float(np.mean(td * td))

    dqs = np.zeros_like(qs)
    dqs[0, np.arange(b), actions] = -2.0 * td / b
    grads = _backward(main, cache, dqs)
    lr = cfg.nn_learning_rate
    for k, g in grads.items():
        main.params[k] -= lr * g
    return loss


def sync_target(main: LstmNetwork, target: LstmNetwork) -> None:
    """Copy the main parameters into the target, bit for bit."""
    for k, v in main.params.items():
        np.copyto(target.params[k], v)


class ReplayMemory:
    """Ring buffer of experiences with uniform sampling."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ConfigError("replay capacity must be >= 1")
        self.capacity = capacity
        self._buf = deque(maxlen=capacity)

    def __len__(self):
        return len(self._buf)

    def push(self, exp: ExperienceTuple) -> None:
        self._buf.append(exp)

    def sample(self, size: int, rng: np.random.Generator):
        """`size` distinct experiences, or None while underfilled."""
        if len(self._buf) < size:
            return None
        idx = rng.choice(len(self._buf), size=size, replace=False)
        return [self._buf[int(i)] for i in idx]


def save_checkpoint(path, main: LstmNetwork, target: LstmNetwork) -> None:
    """Dump both parameter sets to an .npz archive.

    Layout: `meta` holds (input_size, hidden_units, action_count);
    every parameter array appears twice under `main_<key>` and
    `target_<key>`. float64 payloads round-trip bit-identically.
    """
    arrays = {f"main_{k}": v for k, v in main.params.items()}
    arrays.update({f"target_{k}": v for k, v in target.params.items()})
    arrays["meta"] = np.array(
        [main.input_size, main.hidden_units, main.action_count], dtype=np.int64
    )
    np.savez(path, **arrays)


def load_checkpoint(path):
    """Rebuild (main, target) networks from `save_checkpoint` output."""
    data = np.load(path)
    d, h, a = (int(v) for v in data["meta"])
    main = LstmNetwork(d, h, a, seed=0)
    target = LstmNetwork(d, h, a, seed=0)
    for k in main.params:
        main.params[k] = data[f"main_{k}"].copy()
        target.params[k] = data[f"target_{k}"].copy()
    return main, target


class DqnAgent:
    """One beam's scheduler: paired networks, replay memory and rngs.

    Sub-seeds are derived from cfg.seed so two agents with different
    seeds share nothing; all operations on one agent are sequential.
    """

    def __init__(self, cfg: AgentConfig):
        self.cfg = cfg
        self.main = LstmNetwork(
            cfg.input_size, cfg.hidden_units, cfg.action_count, seed=derive_seed(cfg.seed, 0)
        )
        self.target = self.main.clone()
        self.replay = ReplayMemory(cfg.replay_capacity)
        self.action_rng = make_rng(derive_seed(cfg.seed, 1))
        self.sample_rng = make_rng(derive_seed(cfg.seed, 2))
        self.last_cqi = 0

    def act(self, state: float, carry, mask=None):
        return select_action(self.main, state, carry, self.cfg.epsilon, self.action_rng, mask)

    def remember(self, exp: ExperienceTuple) -> None:
        self.replay.push(exp)

    def train(self):
        """One minibatch update if the memory is ready, else None."""
        batch = self.replay.sample(self.cfg.minibatch, self.sample_rng)
        if batch is None:
            return None
        return train_step(self.main, self.target, batch, self.cfg)

    def sync(self) -> None:
        sync_target(self.main, self.target)
