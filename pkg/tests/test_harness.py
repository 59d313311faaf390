from dataclasses import replace
from math import pi

import numpy as np
import pytest

from splinetd.control import PolicyParams
from splinetd.errors import InvalidParam
from splinetd.harness import (ExperimentConfig, build_agent, compute_t_up,
                              initial_angle, moving_average, run_experiment_I,
                              run_experiment_II, run_trial)
from splinetd.pendulum import PendulumParams, PendulumState, step

# Small space: quadratic splines on the 8-triangle grid, fast enough for
# dozens of trials per second.  The coarse space wants a short horizon and a
# hard-saturating policy.
DESK = dict(degree=2, continuity=1, gamma=0.9,
            policy=PolicyParams(tau=1.0),
            theta_breaks=(-pi, 0.0, pi),
            thetadot_breaks=(-2 * pi, 0.0, 2 * pi))


def desk_config(**kwargs):
    return ExperimentConfig(**{**DESK, **kwargs})


class TestTup:
    def test_runs_of_three_and_five(self):
        theta = np.full(20, 3.0)
        theta[2:5] = 0.0          # 3 upright samples
        theta[10:15] = 0.1        # 5 upright samples
        assert compute_t_up(theta, 0.02) == pytest.approx(0.10)

    def test_no_upright_samples(self):
        assert compute_t_up(np.full(100, 2.0), 0.02) == 0.0

    def test_full_window_hits_ceiling(self):
        assert compute_t_up(np.zeros(999), 0.02) == pytest.approx(19.98)

    def test_threshold_is_strict_quarter_pi(self):
        assert compute_t_up([pi / 4], 0.02) == 0.0
        assert compute_t_up([pi / 4 - 1e-9], 0.02) == pytest.approx(0.02)


class TestMovingAverage:
    def test_constant_series_unchanged(self):
        x = np.full(7, 3.3)
        assert np.allclose(moving_average(x), x)

    def test_impulse_center_value(self):
        out = moving_average([0.0, 0.0, 5.0, 0.0, 0.0])
        assert out[2] == pytest.approx(1.0)

    def test_empty_series(self):
        assert moving_average([]).size == 0

    def test_edges_use_truncated_window(self):
        out = moving_average([0.0, 0.0, 5.0, 0.0, 0.0])
        assert out[0] == pytest.approx(5.0 / 3.0)
        assert out[1] == pytest.approx(5.0 / 4.0)


class TestSeedContract:
    def test_initial_angles_shared_across_variants(self):
        angles_a = [initial_angle(7, k) for k in range(10)]
        angles_b = [initial_angle(7, k) for k in range(10)]
        assert angles_a == angles_b
        assert all(-pi <= a < pi for a in angles_a)

    def test_different_seeds_differ(self):
        assert initial_angle(1, 0) != initial_angle(2, 0)

    def test_trial_determinism(self):
        cfg = desk_config(master_seed=5, trials=2)
        agent_a = build_agent(cfg)
        agent_b = build_agent(cfg)
        rec_a, traj_a = run_trial(agent_a, cfg, 0, record_trajectory=True)
        rec_b, traj_b = run_trial(agent_b, cfg, 0, record_trajectory=True)
        assert rec_a == rec_b
        assert np.array_equal(traj_a, traj_b, equal_nan=True)

    def test_theta0_independent_of_noise_setting(self):
        cfg_quiet = desk_config(master_seed=3, trials=3)
        cfg_noisy = desk_config(master_seed=3, trials=3,
                                pendulum=PendulumParams(sigma_w=3.0))
        res_quiet = run_experiment_I(cfg_quiet)
        res_noisy = run_experiment_I(cfg_noisy)
        for a, b in zip(res_quiet.records, res_noisy.records):
            assert a.theta0 == b.theta0
        # The noise stream itself must change the outcomes.
        assert any(a.t_up != b.t_up or a.total_reward != b.total_reward
                   for a, b in zip(res_quiet.records, res_noisy.records))


class TestRunTrial:
    def test_record_fields(self):
        cfg = desk_config(master_seed=1)
        agent = build_agent(cfg)
        record, trajectory = run_trial(agent, cfg, 0, record_trajectory=True)
        assert record.trial_index == 0
        assert 0.0 <= record.t_up <= cfg.trial_length
        assert record.total_reward <= 0.0
        assert not record.diverged
        assert trajectory.shape == (cfg.steps_per_trial + 1, 5)
        assert trajectory[0, 0] == 0.0
        assert trajectory[-1, 0] == pytest.approx(cfg.trial_length)

    def test_zero_policy_keeps_pendulum_near_bottom(self):
        # With no torque the plant swings through the upright cone at most
        # briefly; replicates the all-zero-coefficients, no-noise situation.
        params = PendulumParams()
        state = PendulumState(initial_angle(9, 0), 0.0)
        thetas = []
        for _ in range(999):
            state = step(state, 0.0, 0.0, params).state
            thetas.append(state.theta)
        assert compute_t_up(thetas, params.dt) < 2.0

    def test_divergence_flagged_not_raised(self):
        cfg = desk_config(master_seed=1)
        agent = build_agent(cfg)
        agent.c[:] = 2e9   # already past the divergence guard
        record, _ = run_trial(agent, cfg, 0)
        assert record.diverged
        assert agent.step_count == 1   # trial aborted at the first update

    def test_estimator_state_persists_across_trials(self):
        cfg = desk_config(master_seed=2, trials=2)
        agent = build_agent(cfg)
        run_trial(agent, cfg, 0)
        steps_after_first = agent.step_count
        run_trial(agent, cfg, 1)
        assert agent.step_count == 2 * steps_after_first


class TestExperiments:
    def test_experiment_I_shapes_and_summary(self):
        cfg = desk_config(master_seed=11, trials=5)
        result = run_experiment_I(cfg)
        assert len(result.records) == 5
        assert [r.trial_index for r in result.records] == list(range(5))
        values = result.t_up_values
        assert result.summary["t_up_mean_s"] == pytest.approx(values.mean())
        assert result.summary["t_up_std_s"] == pytest.approx(values.std(ddof=1))
        assert result.summary["experiment"] == "I"
        assert result.final_c is not None

    def test_learning_signal_on_desk_scale(self):
        cfg = desk_config(master_seed=1, trials=40)
        result = run_experiment_I(cfg)
        values = result.t_up_values
        assert values[20:].mean() > values[:5].mean()

    def test_experiment_II_null_perturbation_matches_pretrained_behaviour(self):
        base = desk_config(master_seed=4, trials=8, pretrain_trials=8, mass_after=1.0)
        result = run_experiment_II(base)
        # Mass unchanged: the post-"change" trials must continue exactly the
        # deterministic trajectory of a longer plain run.
        longer = run_experiment_I(replace(base, trials=16))
        for a, b in zip(result.records, longer.records[8:]):
            assert a.theta0 == b.theta0
            assert a.t_up == b.t_up
            assert a.total_reward == b.total_reward

    def test_experiment_II_checkpoint_reuse(self, tmp_path):
        # The checkpoint captures the state right after pretraining, so a
        # resumed run must replay the post-change trials exactly.
        cfg = desk_config(master_seed=6, trials=4, pretrain_trials=5)
        ckpt = tmp_path / "pre.npz"
        direct = run_experiment_II(cfg, save_checkpoint=ckpt)
        resumed = run_experiment_II(cfg, checkpoint=str(ckpt))
        assert resumed.records == direct.records

    def test_trial_length_must_be_integral(self):
        with pytest.raises(InvalidParam):
            desk_config(trial_length=0.03)

    def test_unknown_variant_rejected(self):
        with pytest.raises(InvalidParam):
            desk_config(variant="lstd")

    def test_policy_noise_disabled_is_deterministic_between_variants(self):
        quiet = PolicyParams(sigma_n=0.0)
        cfg_a = desk_config(master_seed=8, trials=2, policy=quiet, variant="rlstd")
        cfg_b = desk_config(master_seed=8, trials=2, policy=quiet,
                            variant="rlstd_forget", beta2=0.0)
        res_a = run_experiment_I(cfg_a)
        res_b = run_experiment_I(cfg_b)
        for a, b in zip(res_a.records, res_b.records):
            assert a.t_up == b.t_up
            assert a.total_reward == b.total_reward
