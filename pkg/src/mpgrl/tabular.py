"""Lookup-table twin of the momentum-adjusted target rule on finite MDPs.

Two Q tables are maintained. Each update bootstraps from the greedy
next-state action, subtracts the average of the current and previous
absolute table gaps from the larger estimate, and writes the result back
with a Robbins-Monro step size. A value-iteration oracle supplies Q* for
convergence measurements.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

import numpy as np


@dataclass
class FiniteMdp:
    transition: np.ndarray  # (S, A, S) probabilities
    reward: np.ndarray  # (S, A) mean rewards
    gamma: float
    reward_noise: float = 0.0  # uniform +- half-width added on sampling

    def __post_init__(self):
        self.transition = np.asarray(self.transition, dtype=float)
        self.reward = np.asarray(self.reward, dtype=float)
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must be in [0, 1)")
        sums = self.transition.sum(axis=2)
        if not np.allclose(sums, 1.0, atol=1e-12):
            raise ValueError("transition rows must sum to 1")
        if not np.all(np.isfinite(self.reward)):
            raise ValueError("rewards must be finite")

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transition.shape[1]


def random_mdp(n_states: int, n_actions: int, gamma: float,
               reward_noise: float, rng: np.random.Generator) -> FiniteMdp:
    """Dense random MDP with Dirichlet-ish transitions and U(-1,1) mean rewards."""
    p = rng.uniform(0.01, 1.0, size=(n_states, n_actions, n_states))
    p /= p.sum(axis=2, keepdims=True)
    r = rng.uniform(-1.0, 1.0, size=(n_states, n_actions))
    return FiniteMdp(transition=p, reward=r, gamma=gamma, reward_noise=reward_noise)


def value_iteration(mdp: FiniteMdp, tol: float) -> np.ndarray:
    """Q* to sup-norm accuracy `tol` (stops when the Bellman residual is
    below tol * (1 - gamma) / gamma)."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    q = np.zeros((mdp.n_states, mdp.n_actions))
    if mdp.gamma == 0.0:
        return mdp.reward.copy()
    thresh = tol * (1.0 - mdp.gamma) / mdp.gamma
    while True:
        v = q.max(axis=1)
        q_new = mdp.reward + mdp.gamma * mdp.transition @ v
        if np.max(np.abs(q_new - q)) < thresh:
            return q_new
        q = q_new


@dataclass
class QTablePair:
    q: np.ndarray
    q_prime: np.ndarray
    delta_last: float = 0.0  # |q - q_prime| at the previously updated pair

    @classmethod
    def zeros(cls, n_states: int, n_actions: int) -> "QTablePair":
        return cls(q=np.zeros((n_states, n_actions)),
                   q_prime=np.zeros((n_states, n_actions)))


def mpg_tabular_update(
    tables: QTablePair,
    s: int,
    a: int,
    r: float,
    s_next: int,
    alpha: float,
    gamma: float,
    write: str = "both",
) -> QTablePair:
    """One momentum-adjusted Q update at (s, a).

    write="both" gives both tables the same target (their gap then
    contracts deterministically); write="q" / write="q_prime" updates a
    single table, the alternating regime used by the deep variant.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    q, qp = tables.q, tables.q_prime
    n_states, n_actions = q.shape
    if not (0 <= s < n_states and 0 <= s_next < n_states and 0 <= a < n_actions):
        raise IndexError("state/action index out of range")

    a_star = int(np.argmax(q[s_next]))
    q1, q2 = q[s_next, a_star], qp[s_next, a_star]
    delta = abs(q1 - q2)
    delta_adj = 0.5 * (delta + tables.delta_last)
    y = r + gamma * (max(q1, q2) - delta_adj)
    if write in ("both", "q"):
        q[s, a] = (1.0 - alpha) * q[s, a] + alpha * y
    if write in ("both", "q_prime"):
        qp[s, a] = (1.0 - alpha) * qp[s, a] + alpha * y
    if write not in ("both", "q", "q_prime"):
        raise ValueError(f"unknown write mode {write!r}")
    tables.delta_last = delta
    return tables


@dataclass
class ConvergenceTrace:
    steps: list[int] = field(default_factory=list)
    sup_error: list[float] = field(default_factory=list)
    q_minus_qprime_sup: list[float] = field(default_factory=list)

    @property
    def terminal_error(self) -> float:
        return self.sup_error[-1]

    def write_csv(self, path) -> None:
        with open(path, "w") as f:
            f.write("step,sup_error,q_minus_qprime_sup\n")
            for s, e, d in zip(self.steps, self.sup_error, self.q_minus_qprime_sup):
                f.write(f"{s},{e!r},{d!r}\n")


def convergence_experiment(
    mdp: FiniteMdp,
    n_steps: int,
    seed: int,
    mode: str = "shared",
    record_every: int = 1000,
    q_star: np.ndarray | None = None,
    asymmetric_init: float = 0.5,
    alpha_power: float = 1.0,
) -> ConvergenceTrace:
    """Uniform-random (s, a) sampling with alpha = visit-count ** -alpha_power.

    Any power in (0.5, 1] satisfies the Robbins-Monro conditions
    sum alpha = inf, sum alpha^2 < inf. The default 1.0 is the classical
    1/visit-count schedule; its transient bias decays only like
    n ** -(1 - gamma), so powers around 0.6 converge far faster when
    gamma is close to 1.
    mode="shared" gives both tables the coupled common target;
    mode="alternating" flips a coin per update over which table is written.
    Tables start offset by +-asymmetric_init so their gap is exercised.
    """
    if mode not in ("shared", "alternating"):
        raise ValueError(f"unknown mode {mode!r}")
    if not 0.5 < alpha_power <= 1.0:
        raise ValueError("alpha_power must lie in (0.5, 1] to satisfy "
                         "the Robbins-Monro step-size conditions")
    if q_star is None:
        q_star = value_iteration(mdp, 1e-10)
    rng = np.random.default_rng(seed)
    ns, na = mdp.n_states, mdp.n_actions

    # Pre-draw everything; the update loop itself is scalar work on plain
    # Python lists (a several-fold speedup over per-step numpy indexing).
    states = rng.integers(0, ns, size=n_steps).tolist()
    actions = rng.integers(0, na, size=n_steps).tolist()
    u_next = rng.random(n_steps).tolist()
    noise = (rng.uniform(-mdp.reward_noise, mdp.reward_noise, size=n_steps)
             if mdp.reward_noise > 0 else np.zeros(n_steps)).tolist()
    coins = (rng.random(n_steps) < 0.5).tolist()
    cum = np.cumsum(mdp.transition, axis=2).tolist()
    rewards = mdp.reward.tolist()

    q = [[asymmetric_init] * na for _ in range(ns)]
    qp = [[-asymmetric_init] * na for _ in range(ns)]
    visits = [[0] * na for _ in range(ns)]
    delta_last = 0.0
    trace = ConvergenceTrace()
    gamma = mdp.gamma
    shared = mode == "shared"
    action_range = range(na)
    for t in range(n_steps):
        s = states[t]
        a = actions[t]
        s2 = bisect.bisect_left(cum[s][a], u_next[t])
        r = rewards[s][a] + noise[t]
        visits[s][a] += 1
        alpha = visits[s][a] ** -alpha_power

        row = q[s2]
        a_star = max(action_range, key=row.__getitem__)
        q1 = row[a_star]
        q2 = qp[s2][a_star]
        delta = abs(q1 - q2)
        big = q1 if q1 >= q2 else q2
        y = r + gamma * (big - 0.5 * (delta + delta_last))
        if shared:
            q[s][a] += alpha * (y - q[s][a])
            qp[s][a] += alpha * (y - qp[s][a])
        elif coins[t]:
            q[s][a] += alpha * (y - q[s][a])
        else:
            qp[s][a] += alpha * (y - qp[s][a])
        delta_last = delta

        if (t + 1) % record_every == 0 or t == n_steps - 1:
            q_arr, qp_arr = np.asarray(q), np.asarray(qp)
            trace.steps.append(t + 1)
            trace.sup_error.append(float(np.max(np.abs(q_arr - q_star))))
            trace.q_minus_qprime_sup.append(float(np.max(np.abs(q_arr - qp_arr))))
    return trace
