"""Exact dynamic-programming ground truth on small explicit MDPs.

Used to verify the tabular learners against independently computed optimal
values; also drives the ``oracle-check`` CLI command.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .env import Transition
from .validation import ConfigError


@dataclass(frozen=True)
class ExplicitMdp:
    """Finite MDP with deterministic or distributional transitions.

    Exactly one of ``next_state`` (shape (S, A), deterministic) or
    ``trans_probs`` (shape (S, A, S)) must be given.  Rows for terminal
    states are ignored; their value is fixed at 0.
    """

    n_states: int
    n_actions: int
    reward: np.ndarray = field(repr=False)       # (S, A)
    gamma: float = 0.99
    next_state: Optional[np.ndarray] = field(default=None, repr=False)
    trans_probs: Optional[np.ndarray] = field(default=None, repr=False)
    terminal: frozenset = frozenset()

    def __post_init__(self):
        if (self.next_state is None) == (self.trans_probs is None):
            raise ConfigError("give exactly one of next_state or trans_probs")
        reward = np.asarray(self.reward, dtype=float)
        if reward.shape != (self.n_states, self.n_actions):
            raise ConfigError("reward must have shape (n_states, n_actions)")
        if not np.all(np.isfinite(reward)):
            raise ConfigError("rewards must be finite")
        object.__setattr__(self, "reward", reward)
        if self.next_state is not None:
            ns = np.asarray(self.next_state, dtype=int)
            if ns.shape != (self.n_states, self.n_actions):
                raise ConfigError("next_state must have shape (n_states, n_actions)")
            if ns.min() < 0 or ns.max() >= self.n_states:
                raise ConfigError("next_state entries must index valid states")
            object.__setattr__(self, "next_state", ns)
        else:
            tp = np.asarray(self.trans_probs, dtype=float)
            if tp.shape != (self.n_states, self.n_actions, self.n_states):
                raise ConfigError("trans_probs must have shape (S, A, S)")
            if not np.allclose(tp.sum(axis=2), 1.0, atol=1e-12):
                raise ConfigError("transition distributions must sum to 1")
            object.__setattr__(self, "trans_probs", tp)
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError("gamma must lie in [0, 1]")
        object.__setattr__(self, "terminal", frozenset(int(s) for s in self.terminal))

    def terminal_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_states, dtype=bool)
        for s in self.terminal:
            mask[s] = True
        return mask


def value_iteration(mdp: ExplicitMdp, tol: float = 1e-9,
                    max_sweeps: int = 10_000_000):
    """Bellman optimality iteration to max-norm change < ``tol``.

    Returns (V*, Q*) with V*(s) = max_a Q*(s, a) and terminal states pinned
    to 0.
    """
    if tol <= 0:
        raise ConfigError("tol must be > 0")
    terminal = mdp.terminal_mask()
    v = np.zeros(mdp.n_states)
    gamma = mdp.gamma
    for _ in range(max_sweeps):
        if mdp.next_state is not None:
            q = mdp.reward + gamma * v[mdp.next_state]
        else:
            q = mdp.reward + gamma * (mdp.trans_probs @ v)
        q[terminal, :] = 0.0
        v_new = q.max(axis=1)
        if np.max(np.abs(v_new - v)) < tol:
            return v_new, q
        v = v_new
    raise RuntimeError(f"value iteration did not converge within {max_sweeps} sweeps")


def build_chain_mdp(n: int, gamma: float = 0.99) -> ExplicitMdp:
    """Deterministic chain: actions {left, right}, reward -1, terminal at n-1.

    Left at state 0 self-loops, so the only way out is to walk right.
    """
    if n < 2:
        raise ConfigError("chain needs at least 2 states")
    next_state = np.zeros((n, 2), dtype=int)
    for s in range(n):
        next_state[s, 0] = max(s - 1, 0)          # left
        next_state[s, 1] = min(s + 1, n - 1)      # right
    reward = np.full((n, 2), -1.0)
    return ExplicitMdp(n_states=n, n_actions=2, reward=reward, gamma=gamma,
                       next_state=next_state, terminal=frozenset({n - 1}))


def build_random_mdp(n_states: int, n_actions: int, seed: int,
                     gamma: float = 0.9) -> ExplicitMdp:
    """Seeded random deterministic MDP with distinct rewards per (s, a).

    Action 0 always advances toward the terminal state so every episode can
    end; remaining actions jump uniformly at random.
    """
    rng = np.random.default_rng(seed)
    next_state = rng.integers(0, n_states, size=(n_states, n_actions))
    next_state[:, 0] = np.minimum(np.arange(n_states) + 1, n_states - 1)
    reward = rng.uniform(-1.0, 1.0, size=(n_states, n_actions))
    return ExplicitMdp(n_states=n_states, n_actions=n_actions, reward=reward,
                       gamma=gamma, next_state=next_state,
                       terminal=frozenset({n_states - 1}))


class FixtureEnv:
    """Episodic environment facade over an :class:`ExplicitMdp`.

    Presents the same reset/step surface as the EMS environment so the
    learners can train on exactly solvable fixtures.  Episodes are truncated
    at ``max_steps`` to keep random policies finite.
    """

    def __init__(self, mdp: ExplicitMdp, start_state: int = 0,
                 max_steps: int = 10_000, seed: int = 0):
        self.mdp = mdp
        self.start_state = int(start_state)
        self.max_steps = int(max_steps)
        self._rng = np.random.default_rng(seed)
        self._terminal = mdp.terminal
        self._state = self.start_state
        self._steps = 0
        self._done = True
        self._completed = False

    @property
    def n_states(self) -> int:
        return self.mdp.n_states

    @property
    def n_actions(self) -> int:
        return self.mdp.n_actions

    @property
    def episode_completed(self) -> bool:
        return self._completed

    def reset(self, start_soc=None) -> int:
        # start_soc accepted for interface parity with the EMS environment
        self._state = self.start_state
        self._steps = 0
        self._done = False
        self._completed = False
        return self._state

    def step(self, action: int) -> Transition:
        if self._done:
            raise RuntimeError("episode is finished; call reset()")
        s = self._state
        mdp = self.mdp
        if mdp.next_state is not None:
            s2 = int(mdp.next_state[s, action])
        else:
            s2 = int(self._rng.choice(mdp.n_states, p=mdp.trans_probs[s, action]))
        r = float(mdp.reward[s, action])
        self._steps += 1
        reached_terminal = s2 in self._terminal
        done = reached_terminal or self._steps >= self.max_steps
        self._state = s2
        if done:
            self._done = True
            self._completed = reached_terminal
        return Transition(state=s, action=int(action), reward=r,
                          next_state=s2, done=done)
