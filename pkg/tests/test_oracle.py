import numpy as np
import pytest

from emsrl.oracle import (ExplicitMdp, FixtureEnv, build_chain_mdp,
                          build_random_mdp, value_iteration)
from emsrl.validation import ConfigError


def test_self_loop_geometric_series():
    mdp = ExplicitMdp(n_states=1, n_actions=1, reward=np.array([[1.0]]),
                      gamma=0.5, next_state=np.array([[0]]))
    v, q = value_iteration(mdp, tol=1e-12)
    assert v[0] == pytest.approx(2.0, abs=1e-9)
    assert q[0, 0] == pytest.approx(2.0, abs=1e-9)


def test_zero_rewards_zero_values():
    mdp = build_random_mdp(6, 3, seed=0)
    mdp = ExplicitMdp(n_states=6, n_actions=3, reward=np.zeros((6, 3)),
                      gamma=0.9, next_state=mdp.next_state,
                      terminal=mdp.terminal)
    v, q = value_iteration(mdp, tol=1e-12)
    assert np.all(v == 0.0)
    assert np.all(q == 0.0)


def test_chain_shortest_path_values():
    mdp = build_chain_mdp(5, gamma=1.0 - 1e-9)
    v, q = value_iteration(mdp, tol=1e-9)
    for s in range(5):
        assert v[s] == pytest.approx(-(4 - s), abs=1e-6)


def test_chain_structure():
    mdp = build_chain_mdp(2)
    assert mdp.n_states == 2
    assert mdp.terminal == frozenset({1})
    assert mdp.next_state[0, 0] == 0  # left self-loops at the boundary
    assert mdp.next_state[0, 1] == 1


def test_v_equals_max_q_and_bellman_residual():
    mdp = build_random_mdp(8, 3, seed=5, gamma=0.9)
    v, q = value_iteration(mdp, tol=1e-10)
    assert np.array_equal(v, q.max(axis=1))
    backup = mdp.reward + mdp.gamma * v[mdp.next_state]
    backup[mdp.terminal_mask(), :] = 0.0
    assert np.max(np.abs(backup.max(axis=1) - v)) < 1e-10


def test_relabeling_invariance():
    mdp = build_random_mdp(7, 2, seed=9, gamma=0.8)
    v, _ = value_iteration(mdp, tol=1e-13)
    rng = np.random.default_rng(1)
    perm = rng.permutation(7)
    inv = np.argsort(perm)
    permuted = ExplicitMdp(
        n_states=7, n_actions=2,
        reward=mdp.reward[inv],
        gamma=mdp.gamma,
        next_state=perm[mdp.next_state[inv]],
        terminal=frozenset(int(perm[s]) for s in mdp.terminal))
    v_p, _ = value_iteration(permuted, tol=1e-13)
    assert np.max(np.abs(v_p[perm] - v)) < 1e-12


def test_stochastic_transitions():
    # 50/50 step to terminal reward 1 or stay with reward 0:
    # V(0) = 0.5*(1) + 0.5*(0 + g*V(0))  with r attached to (s, a)
    probs = np.zeros((2, 1, 2))
    probs[0, 0, 0] = 0.5
    probs[0, 0, 1] = 0.5
    probs[1, 0, 1] = 1.0
    mdp = ExplicitMdp(n_states=2, n_actions=1, reward=np.array([[1.0], [0.0]]),
                      gamma=0.5, trans_probs=probs, terminal=frozenset({1}))
    v, _ = value_iteration(mdp, tol=1e-12)
    # V = 1 + 0.5*0.5*V -> V = 1/(1 - 0.25)
    assert v[0] == pytest.approx(1.0 / 0.75, abs=1e-9)


def test_mdp_validation():
    with pytest.raises(ConfigError):
        ExplicitMdp(n_states=2, n_actions=1, reward=np.zeros((2, 1)),
                    gamma=0.9)  # neither transition form
    with pytest.raises(ConfigError):
        ExplicitMdp(n_states=2, n_actions=1, reward=np.zeros((2, 1)),
                    gamma=0.9, next_state=np.array([[5], [0]]))
    with pytest.raises(ConfigError):
        build_chain_mdp(1)


def test_fixture_env_walk():
    env = FixtureEnv(build_chain_mdp(3), max_steps=100)
    s = env.reset()
    assert s == 0
    tr = env.step(1)
    assert (tr.state, tr.next_state, tr.reward, tr.done) == (0, 1, -1.0, False)
    tr = env.step(1)
    assert tr.done
    assert env.episode_completed


def test_fixture_env_truncation():
    env = FixtureEnv(build_chain_mdp(5), max_steps=3)
    env.reset()
    done = False
    steps = 0
    while not done:
        done = env.step(0).done  # keep walking left
        steps += 1
    assert steps == 3
    assert not env.episode_completed
