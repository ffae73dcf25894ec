import math
from dataclasses import replace

import numpy as np
import pytest
from scipy import stats

from fdqn.agent import Agent
from fdqn.checkpoint import load_checkpoint
from fdqn.config import apply_overrides, load_config
from fdqn.envs import Chain
from fdqn.errors import ConfigError, NumericError
from fdqn.metrics import format_record, read_metrics
from fdqn.nn import NetworkSpec, forward, init_params
from fdqn.runner import derive_rng, derive_seed, evaluate, evaluate_checkpoint, train

from oracles import value_iteration


def test_zero_episodes(small_cartpole, tmp_path):
    cfg = replace(small_cartpole, num_episodes=0)
    result = train(cfg)
    assert result.records == []
    assert (tmp_path / "metrics.txt").read_text() == ""
    params, meta = load_checkpoint(cfg.checkpoint_path)
    spec = NetworkSpec((4,), 2, (16, 16))
    assert params.equals(init_params(spec, derive_seed(cfg.seed, "init")))
    assert meta["episodes"] == "0"


def test_byte_identical_reruns(small_cartpole, tmp_path):
    a = replace(small_cartpole, checkpoint_path=str(tmp_path / "a.fdqn"), metrics_path=str(tmp_path / "a.txt"))
    b = replace(small_cartpole, checkpoint_path=str(tmp_path / "b.fdqn"), metrics_path=str(tmp_path / "b.txt"))
    train(a)
    train(b)
    assert (tmp_path / "a.txt").read_bytes() == (tmp_path / "b.txt").read_bytes()
    assert (tmp_path / "a.fdqn").read_bytes() == (tmp_path / "b.fdqn").read_bytes()


def test_metrics_file_contents(small_cartpole):
    result = train(small_cartpole)
    with open(small_cartpole.metrics_path) as fh:
        records = read_metrics(fh)
    assert [format_record(r) for r in records] == [format_record(r) for r in result.records]
    assert [r.episode for r in records] == list(range(1, 13))
    assert all(r.wall_ms == 0 for r in records)
    assert records[0].epsilon == 1.0 and records[1].epsilon == 0.995


def test_wall_time_recorded(small_cartpole):
    result = train(replace(small_cartpole, record_wall_time=True, num_episodes=3))
    assert all(r.wall_ms >= 0 for r in result.records)


def test_learn_gating(small_cartpole):
    cfg = apply_overrides(small_cartpole, ["agent.learn_start=120", "agent.batch_size=16"])
    result = train(cfg)
    learned = False
    for r in result.records:
        if r.buffer_size < 120:
            assert math.isnan(r.mean_loss)
        if not math.isnan(r.mean_loss):
            learned = True
    assert learned


def test_learn_never_runs_below_threshold(small_cartpole, monkeypatch):
    sizes = []
    original = Agent.learn_step

    def spy(self, batch):
        sizes.append(len(batch))
        return original(self, batch)

    monkeypatch.setattr(Agent, "learn_step", spy)
    cfg = apply_overrides(small_cartpole, ["agent.learn_start=100", "agent.updates_per_step=2"])
    result = train(cfg)
    total_steps = sum(r.steps for r in result.records)
    # learning runs on every step from the 100th transition onwards, twice per step
    assert len(sizes) == 2 * (total_steps - 99)


def test_target_constant_between_syncs(small_cartpole):
    cfg = apply_overrides(small_cartpole, ["agent.target_sync_interval=3", "agent.learn_start=16"])
    result = train(cfg, track_target=True)
    sums = result.target_checksums
    assert len(sums) == 12
    for start in range(0, 12, 3):
        # episodes start+1, start+2 keep the target from the previous sync
        prev = sums[start - 1] if start else None
        if prev is not None:
            assert sums[start] == sums[start + 1] == prev
    assert len(set(sums)) > 1


def test_unwritable_path_fails_before_training(small_cartpole, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    cfg = replace(small_cartpole, checkpoint_path=str(blocker / "sub" / "c.fdqn"))
    with pytest.raises(OSError):
        train(cfg)
    assert not (tmp_path / "metrics.txt").exists()


def test_nan_loss_aborts_with_diagnostic(small_cartpole, tmp_path, monkeypatch):
    monkeypatch.setattr(Agent, "learn_step", lambda self, batch: float("nan"))
    with pytest.raises(NumericError, match="diverged"):
        train(small_cartpole)
    assert (tmp_path / "run.fdqn.diverged").exists()
    assert not (tmp_path / "run.fdqn").exists()
    assert not (tmp_path / "metrics.txt").exists()


def test_seed_streams_are_independent():
    a = derive_rng(1, "env").integers(1 << 30, size=4)
    b = derive_rng(1, "replay").integers(1 << 30, size=4)
    c = derive_rng(1, "env").integers(1 << 30, size=4)
    assert not np.array_equal(a, b) and np.array_equal(a, c)


def test_batch_size_does_not_perturb_env_stream(small_cartpole):
    # the env and policy streams are untouched by replay sampling, so the
    # first episode (before any learning) is identical across batch sizes
    r1 = train(apply_overrides(small_cartpole, ["num_episodes=1"]))
    r2 = train(apply_overrides(small_cartpole, ["num_episodes=1", "agent.batch_size=32"]))
    assert r1.records[0].steps == r2.records[0].steps


class TestEvaluate:
    spec = NetworkSpec((4,), 2)

    def test_untrained_cartpole_is_poor(self):
        summary = evaluate(init_params(self.spec, 0), "cartpole", 100, 0.01, seed=1)
        assert summary.mean < 50
        assert len(summary.rewards) == 100

    def test_repeatable(self):
        params = init_params(self.spec, 1)
        assert evaluate(params, "cartpole", 20, 0.1, seed=4) == evaluate(params, "cartpole", 20, 0.1, seed=4)

    def test_threads_do_not_change_results(self):
        params = init_params(self.spec, 2)
        a = evaluate(params, "cartpole", 16, 0.2, seed=4, workers=1)
        b = evaluate(params, "cartpole", 16, 0.2, seed=4, workers=4)
        assert a == b

    def test_epsilon_one_ignores_network(self):
        a = evaluate(init_params(self.spec, 0), "cartpole", 30, 1.0, seed=2)
        b = evaluate(init_params(self.spec, 1), "cartpole", 30, 1.0, seed=2)
        assert a == b

    def test_epsilon_one_is_random_policy(self):
        from fdqn.envs import CartPole

        summary = evaluate(init_params(self.spec, 0), "cartpole", 400, 1.0, seed=3)
        env, rng, lengths = CartPole(), np.random.default_rng(99), []
        for i in range(400):
            env.reset(10_000 + i)
            n = 0
            while True:
                n += 1
                if env.step(int(rng.integers(2))).done:
                    break
            lengths.append(n)
        assert stats.ks_2samp(summary.rewards, lengths).pvalue > 0.001

    def test_spec_mismatch(self):
        with pytest.raises(ConfigError, match=r"\(4,\).*mountaincar.*\(2,\)"):
            evaluate(init_params(self.spec, 0), "mountaincar", 1)

    def test_checkpoint_evaluation(self, small_cartpole):
        result = train(small_cartpole)
        direct = evaluate(result.agent.online, "cartpole", 10, 0.0, seed=1)
        assert evaluate_checkpoint(result.checkpoint_path, episodes=10, eval_epsilon=0.0, seed=1) == direct


def chain_q_star(gamma=0.9):
    env = Chain()
    return value_iteration(env.transition, 5, 2, {4}, gamma)[:4]


def test_value_iteration_oracle_closed_form():
    q = chain_q_star()
    v = [0.9 ** (3 - s) for s in range(4)]
    np.testing.assert_allclose(q[:, 1], v, atol=1e-12)
    np.testing.assert_allclose(q[:, 0], [0.9 * v[max(s - 1, 0)] for s in range(4)], atol=1e-12)


def test_chain_matches_value_iteration(config_dir, tmp_path):
    cfg = load_config(config_dir / "chain.yaml")
    cfg = replace(cfg, checkpoint_path=str(tmp_path / "c.fdqn"), metrics_path=str(tmp_path / "c.txt"))
    result = train(cfg)
    q_star = chain_q_star(cfg.agent.gamma)
    q_net = forward(result.agent.online, np.eye(5, dtype=np.float32)[:4])
    assert np.array_equal(q_net.argmax(axis=1), q_star.argmax(axis=1))
    assert np.abs(q_net - q_star).max() < 0.1
