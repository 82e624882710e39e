"""Fixture checks pairing the tabular learners with the exact oracle.

Backs the ``oracle-check`` CLI command: each check returns its residual so
regressions print with numbers attached.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .agents import Hyperparams, _run_training
from .oracle import FixtureEnv, build_chain_mdp, value_iteration


@dataclass(frozen=True)
class CheckResult:
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.tolerance


def check_value_iteration_residual() -> CheckResult:
    """Bellman residual of V* on the 5-state chain."""
    mdp = build_chain_mdp(5, gamma=0.99)
    v, q = value_iteration(mdp, tol=1e-12)
    backup = mdp.reward + mdp.gamma * v[mdp.next_state]
    backup[mdp.terminal_mask(), :] = 0.0
    residual = float(np.max(np.abs(backup.max(axis=1) - v)))
    return CheckResult("value-iteration Bellman residual (5-state chain)",
                       residual, 1e-9)


def check_qlearning_matches_value_iteration() -> CheckResult:
    """Greedy Q-learning values against V* on the 5-state chain."""
    mdp = build_chain_mdp(5, gamma=0.99)
    v_star, _ = value_iteration(mdp, tol=1e-9)
    env = FixtureEnv(mdp, max_steps=1000, seed=1)
    hyper = Hyperparams(alpha_lr=0.1, epsilon=0.2, gamma=0.99, episodes=5000,
                        eval_every=5000, eval_epsilon=0.0, seed=7)
    result = _run_training(env, hyper, "qlearning")
    residual = float(np.max(np.abs(result.q.values.max(axis=1) - v_star)))
    return CheckResult("Q-learning max-Q vs value iteration", residual, 1e-6)


def check_sarsa_lambda_zero_identity() -> CheckResult:
    """SARSA(lambda=0) must replay SARSA exactly over 100 episodes."""
    mdp = build_chain_mdp(5, gamma=0.99)
    hyper = Hyperparams(alpha_lr=0.2, epsilon=0.3, gamma=0.99, episodes=100,
                        lam=0.0, eval_every=100, eval_epsilon=0.0, seed=3)
    a = _run_training(FixtureEnv(mdp, max_steps=1000, seed=1), hyper, "sarsa")
    b = _run_training(FixtureEnv(mdp, max_steps=1000, seed=1), hyper,
                      "sarsa_lambda")
    residual = float(np.max(np.abs(a.q.values - b.q.values)))
    return CheckResult("SARSA(lambda=0) == SARSA (element-wise)", residual, 0.0)


def check_mc_convergence() -> CheckResult:
    """Every-visit MC near Q* on the 2-state chain under mild exploration."""
    mdp = build_chain_mdp(2, gamma=0.9)
    _, q_star = value_iteration(mdp, tol=1e-12)
    env = FixtureEnv(mdp, max_steps=1000, seed=1)
    hyper = Hyperparams(alpha_lr=0.02, epsilon=0.05, gamma=0.9,
                        episodes=10_000, eval_every=10_000, eval_epsilon=0.0,
                        seed=11)
    result = _run_training(env, hyper, "mc")
    visited = result.q.visit_counts > 0
    residual = float(np.max(np.abs(result.q.values - q_star)[visited]))
    return CheckResult("MC Q-estimates vs Q* (2-state chain)", residual, 0.05)


ALL_CHECKS = (
    check_value_iteration_residual,
    check_qlearning_matches_value_iteration,
    check_sarsa_lambda_zero_identity,
    check_mc_convergence,
)


def run_all_checks() -> list:
    return [check() for check in ALL_CHECKS]
