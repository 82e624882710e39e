"""Tabular learners: Monte Carlo, SARSA, Q-learning, and SARSA(lambda).

The episode runners work against anything exposing ``reset(start_soc)``,
``step(action) -> Transition``, ``n_states`` and ``n_actions`` -- the EMS
environment and the oracle fixtures both qualify.

Two RNG streams are forked from the run seed: one drives training, one the
periodic stochastic evaluations, so evaluation never perturbs training
randomness.  Greedy evaluation draws nothing.  Learning rates and
exploration stay constant across a run.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .env import Transition
from .records import (EvalTrace, LearningCurve, QTable, RunRecord,
                      config_hash)
from .validation import (ConfigError, check_choice, check_count,
                         check_fraction, check_in_range)

ALGORITHMS = ("mc", "sarsa", "qlearning", "sarsa_lambda")

# Eligibility entries below this are dropped; keeps the active trace set
# bounded without observable effect on double-precision updates.
_TRACE_FLOOR = 1e-12


@dataclass(frozen=True)
class Hyperparams:
    """One training run's settings.  ``lam`` only affects SARSA(lambda)."""

    alpha_lr: float = 0.1
    epsilon: float = 0.3
    gamma: float = 0.99
    episodes: int = 1000
    start_soc: Optional[float] = None   # None: environment default
    lam: float = 0.9
    eval_every: int = 100
    eval_epsilon: float = 0.3
    seed: int = 0

    def __post_init__(self):
        check_in_range("alpha_lr", self.alpha_lr, 0.0, 1.0, lo_open=True)
        check_fraction("epsilon", self.epsilon)
        check_fraction("gamma", self.gamma)
        check_count("episodes", self.episodes, minimum=0)
        if self.start_soc is not None:
            check_fraction("start_soc", self.start_soc)
        check_fraction("lambda", self.lam)
        check_count("eval_every", self.eval_every, minimum=1)
        check_fraction("eval_epsilon", self.eval_epsilon)
        check_count("seed", self.seed, minimum=0)


def epsilon_greedy(values: np.ndarray, state: int, epsilon: float, rng) -> int:
    """Greedy action with probability 1-epsilon, else uniform random.

    Greedy ties break to the lowest action index.  With epsilon == 0 the rng
    is never touched.
    """
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.integers(values.shape[1]))
    return int(np.argmax(values[state]))


def sarsa_update(q: QTable, tr: Transition, next_action: int,
                 alpha_lr: float, gamma: float) -> float:
    """On-policy TD(0) update; terminal transitions bootstrap with 0."""
    values = q.values
    target = tr.reward if tr.done \
        else tr.reward + gamma * values[tr.next_state, next_action]
    new = values[tr.state, tr.action] + alpha_lr * (target - values[tr.state, tr.action])
    values[tr.state, tr.action] = new
    q.visit_counts[tr.state, tr.action] += 1
    return new


def qlearning_update(q: QTable, tr: Transition, alpha_lr: float,
                     gamma: float) -> float:
    """Off-policy update against the greedy next-state value."""
    values = q.values
    target = tr.reward if tr.done \
        else tr.reward + gamma * values[tr.next_state].max()
    new = values[tr.state, tr.action] + alpha_lr * (target - values[tr.state, tr.action])
    values[tr.state, tr.action] = new
    q.visit_counts[tr.state, tr.action] += 1
    return new


def _mc_episode(env, q, hyper, rng):
    # every-visit returns, computed backward then applied in trajectory order
    values, visits = q.values, q.visit_counts
    eps, gamma, alpha = hyper.epsilon, hyper.gamma, hyper.alpha_lr
    s = env.reset(hyper.start_soc)
    states, actions, rewards = [], [], []
    while True:
        a = epsilon_greedy(values, s, eps, rng)
        tr = env.step(a)
        states.append(s)
        actions.append(a)
        rewards.append(tr.reward)
        if tr.done:
            break
        s = tr.next_state
    g = 0.0
    returns = [0.0] * len(rewards)
    for i in range(len(rewards) - 1, -1, -1):
        g = rewards[i] + gamma * g
        returns[i] = g
    for s_, a_, g_ in zip(states, actions, returns):
        values[s_, a_] += alpha * (g_ - values[s_, a_])
        visits[s_, a_] += 1


def _sarsa_episode(env, q, hyper, rng):
    values = q.values
    eps, gamma, alpha = hyper.epsilon, hyper.gamma, hyper.alpha_lr
    s = env.reset(hyper.start_soc)
    a = epsilon_greedy(values, s, eps, rng)
    while True:
        tr = env.step(a)
        if tr.done:
            sarsa_update(q, tr, 0, alpha, gamma)
            return
        a2 = epsilon_greedy(values, tr.next_state, eps, rng)
        sarsa_update(q, tr, a2, alpha, gamma)
        a = a2


def _qlearning_episode(env, q, hyper, rng):
    values = q.values
    eps, gamma, alpha = hyper.epsilon, hyper.gamma, hyper.alpha_lr
    s = env.reset(hyper.start_soc)
    while True:
        a = epsilon_greedy(values, s, eps, rng)
        tr = env.step(a)
        qlearning_update(q, tr, alpha, gamma)
        if tr.done:
            return
        s = tr.next_state


def _sarsa_lambda_episode(env, q, hyper, rng):
    # accumulating traces: decay the whole trace by gamma*lambda, then add 1
    # at the visited cell, then apply the scalar TD error everywhere
    values, visits = q.values, q.visit_counts
    eps, gamma, alpha, lam = hyper.epsilon, hyper.gamma, hyper.alpha_lr, hyper.lam
    gl = gamma * lam
    trace = {}
    s = env.reset(hyper.start_soc)
    a = epsilon_greedy(values, s, eps, rng)
    while True:
        tr = env.step(a)
        if tr.done:
            target = tr.reward
            a2 = 0
        else:
            a2 = epsilon_greedy(values, tr.next_state, eps, rng)
            target = tr.reward + gamma * values[tr.next_state, a2]
        delta = target - values[s, a]
        if gl > 0.0:
            trace = {sa: e * gl for sa, e in trace.items()
                     if e * gl > _TRACE_FLOOR}
        elif trace:
            trace.clear()
        trace[(s, a)] = trace.get((s, a), 0.0) + 1.0
        step_size = alpha * delta
        for (si, ai), e in trace.items():
            values[si, ai] += step_size * e
        visits[s, a] += 1
        if tr.done:
            return
        s, a = tr.next_state, a2


_EPISODE_FNS = {
    "mc": _mc_episode,
    "sarsa": _sarsa_episode,
    "qlearning": _qlearning_episode,
    "sarsa_lambda": _sarsa_lambda_episode,
}


def _rollout(env, choose, start_soc, epsilon_label: float) -> EvalTrace:
    is_plant = hasattr(env, "soc")
    if hasattr(env, "record_info"):
        env.record_info = True
    s = env.reset(start_soc)
    socs = [env.soc] if is_plant else None
    actions = []
    motor, engine, fc = [], [], []
    reward_sum = 0.0
    fuel = 0.0
    while True:
        a = choose(s)
        tr = env.step(a)
        actions.append(a)
        reward_sum += tr.reward
        info = tr.info
        if info is not None:
            fuel += info.fuel_g
            motor.append(info.motor_point)
            if info.engine_point is not None:
                engine.append(info.engine_point)
            if info.fc_point is not None:
                fc.append(info.fc_point)
        if is_plant:
            socs.append(env.soc)
        if tr.done:
            break
        s = tr.next_state

    def _pts(rows):
        return np.asarray(rows, dtype=float) if rows else None

    return EvalTrace(
        epsilon=epsilon_label, reward_sum=reward_sum, fuel_g=fuel,
        length=len(actions),
        completed=getattr(env, "episode_completed", True),
        actions=np.asarray(actions, dtype=int),
        soc=np.asarray(socs) if socs is not None else None,
        motor_points=_pts(motor), engine_points=_pts(engine), fc_points=_pts(fc))


def evaluate_policy(env, values: np.ndarray, epsilon: float, rng,
                    start_soc=None) -> EvalTrace:
    """Run one evaluation episode; records SOC and operating points when the
    environment provides them."""
    return _rollout(env, lambda s: epsilon_greedy(values, s, epsilon, rng),
                    start_soc, epsilon)


def run_fixed_policy(env, action_index: int, start_soc=None) -> EvalTrace:
    """Roll out one episode holding a single action index."""
    a = int(action_index)
    if not 0 <= a < env.n_actions:
        raise ConfigError(f"action index {a} outside [0, {env.n_actions})")
    return _rollout(env, lambda s: a, start_soc, 0.0)


@dataclass
class TrainResult:
    q: QTable
    curve: LearningCurve
    final_eval: Optional[EvalTrace]
    greedy_eval: EvalTrace


def _run_training(env, hyper: Hyperparams, algorithm: str) -> TrainResult:
    check_choice("algorithm", algorithm, ALGORITHMS)
    episode_fn = _EPISODE_FNS[algorithm]
    q = QTable.zeros(env.n_states, env.n_actions)
    train_seq, eval_seq = np.random.SeedSequence(hyper.seed).spawn(2)
    rng = np.random.default_rng(train_seq)
    rng_eval = np.random.default_rng(eval_seq)

    has_info_switch = hasattr(env, "record_info")
    curve = LearningCurve()
    final_eval = None
    for ep in range(1, hyper.episodes + 1):
        if has_info_switch:
            env.record_info = False
        episode_fn(env, q, hyper, rng)
        if ep % hyper.eval_every == 0:
            final_eval = evaluate_policy(env, q.values, hyper.eval_epsilon,
                                         rng_eval, hyper.start_soc)
            curve.append(episode=ep, reward_sum=final_eval.reward_sum,
                         fuel_g=final_eval.fuel_g,
                         delta_soc=final_eval.delta_soc,
                         length=final_eval.length,
                         completed=final_eval.completed)
    greedy_eval = evaluate_policy(env, q.values, 0.0, None, hyper.start_soc)
    if has_info_switch:
        env.record_info = True
    return TrainResult(q=q, curve=curve, final_eval=final_eval,
                       greedy_eval=greedy_eval)


def mc_train(env, hyper: Hyperparams):
    """Every-visit Monte Carlo control; returns (QTable, LearningCurve)."""
    result = _run_training(env, hyper, "mc")
    return result.q, result.curve


def sarsa_train(env, hyper: Hyperparams):
    result = _run_training(env, hyper, "sarsa")
    return result.q, result.curve


def qlearning_train(env, hyper: Hyperparams):
    result = _run_training(env, hyper, "qlearning")
    return result.q, result.curve


def sarsa_lambda_train(env, hyper: Hyperparams):
    """SARSA with accumulating eligibility traces; lambda from the hypers."""
    result = _run_training(env, hyper, "sarsa_lambda")
    return result.q, result.curve


def train(algorithm: str, env, hyper: Hyperparams,
          config: dict = None) -> RunRecord:
    """Train and package the run; deterministic given the seed."""
    t0 = time.perf_counter()
    result = _run_training(env, hyper, algorithm)
    wall = time.perf_counter() - t0
    cfg = config if config is not None else {}
    return RunRecord(
        algorithm=algorithm, config=cfg, seed=hyper.seed,
        config_hash=config_hash(cfg), curve=result.curve, q_table=result.q,
        final_eval=result.final_eval, greedy_eval=result.greedy_eval,
        wall_clock_s=wall)


class TabularAgent(BaseEstimator):
    """Estimator-style facade over the training loops.

    ``fit(env)`` trains on an environment and stores the learned table as
    fitted attributes; ``predict(states)`` returns greedy action indices.
    Hyperparameters follow scikit-learn conventions (constructor args stored
    verbatim, introspectable via ``get_params``), which is what the sweep
    harness leans on.
    """

    algorithm: str = None

    def __init__(self, alpha_lr=0.1, epsilon=0.3, gamma=0.99, episodes=1000,
                 start_soc=None, lam=0.9, eval_every=100, eval_epsilon=0.3,
                 seed=0):
        self.alpha_lr = alpha_lr
        self.epsilon = epsilon
        self.gamma = gamma
        self.episodes = episodes
        self.start_soc = start_soc
        self.lam = lam
        self.eval_every = eval_every
        self.eval_epsilon = eval_epsilon
        self.seed = seed

    def hyperparams(self) -> Hyperparams:
        return Hyperparams(**self.get_params())

    def fit(self, env, y=None):
        if self.algorithm is None:
            raise ConfigError("use a concrete agent class, not TabularAgent")
        result = _run_training(env, self.hyperparams(), self.algorithm)
        self.q_values_ = result.q.values
        self.visit_counts_ = result.q.visit_counts
        self.curve_ = result.curve
        self.final_eval_ = result.final_eval
        self.greedy_eval_ = result.greedy_eval
        self.n_states_ = env.n_states
        self.n_actions_ = env.n_actions
        return self

    def predict(self, states):
        if not hasattr(self, "q_values_"):
            raise NotFittedError("agent is not fitted; call fit(env) first")
        states = np.asarray(states, dtype=int)
        return np.argmax(self.q_values_[states], axis=-1)


class MonteCarloAgent(TabularAgent):
    algorithm = "mc"


class SarsaAgent(TabularAgent):
    algorithm = "sarsa"


class QLearningAgent(TabularAgent):
    algorithm = "qlearning"


class SarsaLambdaAgent(TabularAgent):
    algorithm = "sarsa_lambda"


AGENT_CLASSES = {
    "mc": MonteCarloAgent,
    "sarsa": SarsaAgent,
    "qlearning": QLearningAgent,
    "sarsa_lambda": SarsaLambdaAgent,
}
