import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from emsrl.agents import (AGENT_CLASSES, ALGORITHMS, Hyperparams,
                          QLearningAgent, SarsaLambdaAgent, _run_training,
                          epsilon_greedy, evaluate_policy, mc_train,
                          qlearning_train, qlearning_update, run_fixed_policy,
                          sarsa_lambda_train, sarsa_update, train)
from emsrl.env import Transition
from emsrl.oracle import (ExplicitMdp, FixtureEnv, build_chain_mdp,
                          build_random_mdp, value_iteration)
from emsrl.records import QTable
from emsrl.validation import ConfigError


def linear_mdp(rewards, gamma=1.0):
    """Single-action corridor: state i -> i+1 collecting rewards[i]."""
    n = len(rewards) + 1
    next_state = np.minimum(np.arange(n) + 1, n - 1).reshape(-1, 1)
    r = np.array(list(rewards) + [0.0]).reshape(-1, 1)
    return ExplicitMdp(n_states=n, n_actions=1, reward=r, gamma=gamma,
                       next_state=next_state, terminal=frozenset({n - 1}))


class CountingEnv:
    """Wraps an environment and counts step() calls."""

    def __init__(self, env):
        self.env = env
        self.steps = 0
        self.n_states = env.n_states
        self.n_actions = env.n_actions

    def reset(self, start_soc=None):
        return self.env.reset(start_soc)

    def step(self, action):
        self.steps += 1
        return self.env.step(action)

    @property
    def episode_completed(self):
        return self.env.episode_completed


# -- hyperparams ---------------------------------------------------------------

def test_hyperparams_validation():
    Hyperparams()
    with pytest.raises(ConfigError):
        Hyperparams(alpha_lr=0.0)
    with pytest.raises(ConfigError):
        Hyperparams(epsilon=1.2)
    with pytest.raises(ConfigError):
        Hyperparams(gamma=-0.1)
    with pytest.raises(ConfigError):
        Hyperparams(episodes=-1)
    with pytest.raises(ConfigError):
        Hyperparams(lam=1.5)
    with pytest.raises(ConfigError):
        Hyperparams(eval_every=0)


# -- action selection ------------------------------------------------------------

def test_epsilon_greedy_tie_breaks_low():
    values = np.array([[0.0, 5.0, 5.0]])
    rng = np.random.default_rng(0)
    assert epsilon_greedy(values, 0, 0.0, rng) == 1


def test_epsilon_greedy_greedy_dominant():
    values = np.array([[1.0, 9.0, 2.0]])
    for _ in range(20):
        assert epsilon_greedy(values, 0, 0.0, None) == 1


def test_epsilon_greedy_pure_exploration_uniform():
    values = np.array([[9.0, 0.0, 0.0, 0.0, 0.0]])
    rng = np.random.default_rng(123)
    n = 10_000
    counts = np.zeros(5)
    for _ in range(n):
        counts[epsilon_greedy(values, 0, 1.0, rng)] += 1
    expected = n / 5
    chi2 = float(np.sum((counts - expected) ** 2 / expected))
    # chi-square critical value, df=4, p=0.001
    assert chi2 < 18.467


# -- single updates ------------------------------------------------------------

def tr(s, a, r, s2, done=False):
    return Transition(state=s, action=a, reward=r, next_state=s2, done=done)


def test_sarsa_update_from_zero():
    q = QTable.zeros(3, 2)
    sarsa_update(q, tr(0, 1, 1.0, 1, done=True), 0, alpha_lr=0.1, gamma=0.9)
    assert q.values[0, 1] == pytest.approx(0.1)
    assert q.visit_counts[0, 1] == 1


def test_sarsa_update_hand_value():
    q = QTable.zeros(3, 2)
    q.values[0, 0] = 2.0
    q.values[1, 1] = 2.0
    new = sarsa_update(q, tr(0, 0, 1.0, 1), next_action=1, alpha_lr=0.5,
                       gamma=1.0)
    assert new == pytest.approx(2.5)


def test_sarsa_update_gamma_zero_ignores_next():
    for next_value in (0.0, 100.0, -50.0):
        q = QTable.zeros(2, 2)
        q.values[1, 0] = next_value
        sarsa_update(q, tr(0, 0, 1.0, 1), 0, alpha_lr=0.3, gamma=0.0)
        assert q.values[0, 0] == pytest.approx(0.3)


def test_qlearning_update_uses_row_max():
    q = QTable.zeros(2, 3)
    q.values[1] = [1.0, 3.0, 2.0]
    qlearning_update(q, tr(0, 0, 0.0, 1), alpha_lr=1.0, gamma=1.0)
    assert q.values[0, 0] == pytest.approx(3.0)


def test_qlearning_equals_sarsa_on_flat_next_row():
    for next_action in range(3):
        q1 = QTable.zeros(2, 3)
        q2 = QTable.zeros(2, 3)
        q1.values[1] = [4.0, 4.0, 4.0]
        q2.values[1] = [4.0, 4.0, 4.0]
        qlearning_update(q1, tr(0, 1, 0.5, 1), alpha_lr=0.2, gamma=0.9)
        sarsa_update(q2, tr(0, 1, 0.5, 1), next_action, alpha_lr=0.2, gamma=0.9)
        assert q1.values[0, 1] == q2.values[0, 1]


def test_terminal_bootstraps_zero():
    q = QTable.zeros(2, 2)
    q.values[1] = [99.0, 99.0]
    qlearning_update(q, tr(0, 0, 1.0, 1, done=True), alpha_lr=1.0, gamma=1.0)
    assert q.values[0, 0] == 1.0


# -- monte carlo -----------------------------------------------------------------

def test_mc_single_step_episode():
    mdp = linear_mdp([1.0])
    q, curve = mc_train(FixtureEnv(mdp), Hyperparams(
        alpha_lr=0.5, epsilon=0.0, gamma=0.9, episodes=1, eval_every=10))
    assert q.values[0, 0] == pytest.approx(0.5)
    assert len(curve) == 0


def test_mc_returns_discounting():
    # rewards [0, 1] with gamma 0.5: G_0 = 0.5, G_1 = 1
    mdp = linear_mdp([0.0, 1.0], gamma=0.5)
    q, _ = mc_train(FixtureEnv(mdp), Hyperparams(
        alpha_lr=1.0, epsilon=0.0, gamma=0.5, episodes=1, eval_every=10))
    assert q.values[0, 0] == pytest.approx(0.5)
    assert q.values[1, 0] == pytest.approx(1.0)


def test_mc_converges_to_q_star_on_two_state_chain():
    mdp = build_chain_mdp(2, gamma=0.9)
    _, q_star = value_iteration(mdp, tol=1e-12)
    env = FixtureEnv(mdp, max_steps=1000, seed=1)
    result = _run_training(env, Hyperparams(
        alpha_lr=0.02, epsilon=0.05, gamma=0.9, episodes=10_000,
        eval_every=10_000, eval_epsilon=0.0, seed=11), "mc")
    visited = result.q.visit_counts > 0
    assert visited[0].all()
    assert np.max(np.abs(result.q.values - q_star)[visited]) < 0.05


# -- sarsa(lambda) ----------------------------------------------------------------

def test_sarsa_lambda_zero_equals_sarsa_exactly():
    mdp = build_chain_mdp(5, gamma=0.99)
    hyper = Hyperparams(alpha_lr=0.2, epsilon=0.3, gamma=0.99, episodes=1,
                        lam=0.0, eval_every=1000, seed=3)
    from emsrl.agents import _sarsa_episode, _sarsa_lambda_episode
    env1, env2 = FixtureEnv(mdp, seed=1), FixtureEnv(mdp, seed=1)
    q1, q2 = QTable.zeros(5, 2), QTable.zeros(5, 2)
    rng1 = np.random.default_rng(42)
    rng2 = np.random.default_rng(42)
    for _ in range(100):
        _sarsa_episode(env1, q1, hyper, rng1)
        _sarsa_lambda_episode(env2, q2, hyper, rng2)
        assert np.array_equal(q1.values, q2.values)


def test_trace_decay_two_steps_back():
    # rewards [0, 0, 1]: only the final TD error is nonzero, so the first
    # cell receives alpha * delta * (gamma*lambda)^2 = 0.45^2
    mdp = linear_mdp([0.0, 0.0, 1.0])
    q, _ = sarsa_lambda_train(FixtureEnv(mdp), Hyperparams(
        alpha_lr=1.0, epsilon=0.0, gamma=0.9, episodes=1, lam=0.5,
        eval_every=10))
    assert q.values[0, 0] == pytest.approx(0.2025, abs=1e-15)
    assert q.values[1, 0] == pytest.approx(0.45, abs=1e-15)
    assert q.values[2, 0] == pytest.approx(1.0, abs=1e-15)


def test_sarsa_lambda_one_matches_mc_single_sweep():
    # lambda=1, gamma=1 on a fixed 3-step corridor: cumulative trace updates
    # reproduce every-visit MC residual updates
    rewards = [0.3, -0.7, 1.1]
    hyper_l = Hyperparams(alpha_lr=0.25, epsilon=0.0, gamma=1.0, episodes=1,
                          lam=1.0, eval_every=10)
    hyper_mc = Hyperparams(alpha_lr=0.25, epsilon=0.0, gamma=1.0, episodes=1,
                           eval_every=10)
    q_l, _ = sarsa_lambda_train(FixtureEnv(linear_mdp(rewards)), hyper_l)
    q_mc, _ = mc_train(FixtureEnv(linear_mdp(rewards)), hyper_mc)
    assert np.allclose(q_l.values, q_mc.values, atol=1e-12)


# -- full training behaviors ------------------------------------------------------

def test_gamma_zero_policy_is_immediate_reward_argmax():
    mdp = build_random_mdp(6, 3, seed=17)
    hyper = Hyperparams(alpha_lr=0.3, epsilon=1.0, gamma=0.0, episodes=2000,
                        eval_every=2000, eval_epsilon=0.0, seed=5)
    for algorithm in ALGORITHMS:
        result = _run_training(FixtureEnv(mdp, max_steps=50, seed=2), hyper,
                               algorithm)
        greedy = result.q.values.argmax(axis=1)
        expected = mdp.reward.argmax(axis=1)
        nonterminal = ~mdp.terminal_mask()
        assert np.array_equal(greedy[nonterminal], expected[nonterminal]), \
            algorithm


def test_qlearning_reaches_v_star_on_chain():
    mdp = build_chain_mdp(5, gamma=0.99)
    v_star, _ = value_iteration(mdp, tol=1e-9)
    q, _ = qlearning_train(FixtureEnv(mdp, max_steps=1000, seed=1),
                           Hyperparams(alpha_lr=0.1, epsilon=0.2, gamma=0.99,
                                       episodes=5000, eval_every=5000, seed=7))
    assert np.max(np.abs(q.values.max(axis=1) - v_star)) < 1e-6


def test_training_determinism():
    mdp = build_random_mdp(6, 3, seed=4)
    hyper = Hyperparams(alpha_lr=0.2, epsilon=0.4, gamma=0.9, episodes=300,
                        eval_every=100, seed=99)
    a = _run_training(FixtureEnv(mdp, max_steps=100, seed=8), hyper, "sarsa")
    b = _run_training(FixtureEnv(mdp, max_steps=100, seed=8), hyper, "sarsa")
    assert np.array_equal(a.q.values, b.q.values)
    assert np.array_equal(a.q.visit_counts, b.q.visit_counts)
    assert a.curve.reward_sums == b.curve.reward_sums
    assert np.array_equal(a.greedy_eval.actions, b.greedy_eval.actions)


def test_visit_count_conservation():
    mdp = build_random_mdp(6, 3, seed=4)
    hyper = Hyperparams(alpha_lr=0.2, epsilon=0.5, gamma=0.9, episodes=50,
                        eval_every=100, seed=1)
    for algorithm in ("mc", "sarsa", "qlearning", "sarsa_lambda"):
        env = CountingEnv(FixtureEnv(mdp, max_steps=100, seed=3))
        result = _run_training(env, hyper, algorithm)
        # eval_every > episodes: no evaluation episodes ran except the final
        # greedy one, whose steps don't update the table
        greedy_steps = result.greedy_eval.length
        assert result.q.visit_counts.sum() == env.steps - greedy_steps, algorithm


def test_unvisited_cells_stay_zero():
    mdp = build_random_mdp(8, 4, seed=21)
    hyper = Hyperparams(alpha_lr=0.3, epsilon=0.2, gamma=0.9, episodes=20,
                        eval_every=100, seed=2)
    for algorithm in ("mc", "sarsa", "qlearning"):
        result = _run_training(FixtureEnv(mdp, max_steps=60, seed=5), hyper,
                               algorithm)
        untouched = result.q.visit_counts == 0
        assert np.all(result.q.values[untouched] == 0.0), algorithm


def test_values_stay_finite():
    mdp = build_random_mdp(6, 3, seed=30)
    hyper = Hyperparams(alpha_lr=0.9, epsilon=0.5, gamma=0.95, episodes=500,
                        eval_every=1000, seed=0)
    for algorithm in ALGORITHMS:
        result = _run_training(FixtureEnv(mdp, max_steps=200, seed=6), hyper,
                               algorithm)
        assert np.all(np.isfinite(result.q.values)), algorithm


def test_zero_episodes_returns_empty():
    mdp = build_chain_mdp(3)
    q, curve = qlearning_train(FixtureEnv(mdp), Hyperparams(episodes=0))
    assert np.all(q.values == 0.0)
    assert np.all(q.visit_counts == 0)
    assert len(curve) == 0


def test_curve_point_count():
    mdp = build_chain_mdp(3)
    record = train("qlearning", FixtureEnv(mdp, seed=1),
                   Hyperparams(episodes=200, eval_every=100, seed=0))
    assert record.curve.episodes == [100, 200]
    assert record.algorithm == "qlearning"
    assert record.q_table is not None
    assert record.wall_clock_s > 0.0


def test_evaluate_policy_greedy_uses_no_rng():
    mdp = build_chain_mdp(4)
    env = FixtureEnv(mdp, seed=1)
    values = np.zeros((4, 2))
    values[:, 1] = 1.0
    trace = evaluate_policy(env, values, 0.0, None)
    assert trace.length == 3
    assert trace.completed
    assert list(trace.actions) == [1, 1, 1]


def test_run_fixed_policy_bounds():
    env = FixtureEnv(build_chain_mdp(3), seed=0)
    with pytest.raises(ConfigError):
        run_fixed_policy(env, 5)
    trace = run_fixed_policy(env, 1)
    assert trace.length == 2


# -- estimator facade -------------------------------------------------------------

def test_agent_fit_predict():
    mdp = build_chain_mdp(5, gamma=0.99)
    agent = QLearningAgent(alpha_lr=0.1, epsilon=0.2, gamma=0.99, episodes=500,
                           eval_every=250, seed=7)
    fitted = agent.fit(FixtureEnv(mdp, max_steps=1000, seed=1))
    assert fitted is agent
    actions = agent.predict([0, 1, 2, 3])
    assert np.array_equal(actions, np.argmax(agent.q_values_[:4], axis=1))
    assert agent.n_states_ == 5


def test_agent_not_fitted_error():
    with pytest.raises(NotFittedError):
        QLearningAgent().predict([0])


def test_agent_get_set_params_clone():
    agent = SarsaLambdaAgent(lam=0.7, alpha_lr=0.05)
    params = agent.get_params()
    assert params["lam"] == 0.7
    assert params["alpha_lr"] == 0.05
    other = clone(agent).set_params(epsilon=0.1)
    assert other.epsilon == 0.1
    assert other.lam == 0.7


def test_agent_classes_cover_algorithms():
    assert set(AGENT_CLASSES) == set(ALGORITHMS)
    for name, cls in AGENT_CLASSES.items():
        assert cls.algorithm == name


def test_qtable_save_load_round_trip(tmp_path):
    from emsrl.records import load_qtable, save_qtable
    mdp = build_random_mdp(5, 3, seed=2)
    record = train("sarsa", FixtureEnv(mdp, max_steps=50, seed=1),
                   Hyperparams(episodes=40, eval_every=20, seed=6))
    path = tmp_path / "q.csv"
    save_qtable(record.q_table, path, {"config_hash": record.config_hash})
    loaded, meta = load_qtable(path)
    assert np.array_equal(loaded.values, record.q_table.values)
    assert np.array_equal(loaded.visit_counts, record.q_table.visit_counts)
    assert meta["config_hash"] == record.config_hash
    assert meta["n_states"] == 5
