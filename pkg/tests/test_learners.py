import logging
import math

import numpy as np
import pytest

from stressbed import (
    EnvSpec,
    EnvironmentTrace,
    Feedback,
    QuadraticLoss,
    RunAbortedError,
    best_comparator_in_UK,
    dynamic_regret,
    generate,
    hedge_step,
    make_learner,
    make_space,
    ogd_step,
    run_learner,
)

# --- ogd_step / hedge_step primitives -----------------------------------------


def test_ogd_zero_gradient_no_move(sym_box_2d):
    x = np.array([0.25, -0.5])
    np.testing.assert_array_equal(ogd_step(sym_box_2d, x, np.zeros(2), 0.5), x)


def test_ogd_single_step_hand_value():
    space = make_space("box", 1, lo=-1.0, hi=1.0)
    got = ogd_step(space, np.array([0.0]), np.array([1.0]), 0.5)
    np.testing.assert_allclose(got, [-0.5])


def test_ogd_three_steps_geometric_approach():
    # independent scripted recursion a <- a + eta * (theta - a)
    theta, eta = 0.8, 0.5
    a = 0.0
    scripted = []
    for _ in range(3):
        a = a + eta * (theta - a)
        scripted.append(a)
    assert scripted == pytest.approx([0.4, 0.6, 0.7])

    space = make_space("box", 1, lo=-1.0, hi=1.0)
    learner = make_learner("ogd", space, horizon=3, step=eta)
    learner.x = np.array([0.0])
    seen = []
    for t in (1, 2, 3):
        x = learner.act(t)
        g = x - np.array([theta])  # gradient of 0.5 (x - theta)^2
        learner.observe(t, Feedback(0.0, g, QuadraticLoss(np.array([theta]))))
        seen.append(float(learner.x[0]))
    assert seen == pytest.approx(scripted, rel=1e-12)


def test_ogd_aborts_on_non_finite_gradient(sym_box_2d):
    learner = make_learner("ogd", sym_box_2d, horizon=4)
    with pytest.raises(RunAbortedError):
        learner.observe(1, Feedback(0.0, np.array([np.nan, 0.0]), QuadraticLoss(np.zeros(2))))


def test_hedge_equal_losses_keep_weights():
    w = np.array([0.2, 0.3, 0.5])
    np.testing.assert_allclose(hedge_step(w, np.array([4.0, 4.0, 4.0]), 1.0), w, rtol=1e-15)


def test_hedge_two_experts_closed_form():
    w = hedge_step(np.array([0.5, 0.5]), np.array([0.0, 10.0]), 1.0)
    want = np.array([1.0, math.exp(-10.0)])
    want /= want.sum()
    np.testing.assert_allclose(w, want, rtol=1e-12)
    assert w[1] == pytest.approx(4.539787e-05, rel=1e-4)


def test_hedge_zero_eta_keeps_weights():
    w = np.array([0.9, 0.1])
    np.testing.assert_allclose(hedge_step(w, np.array([0.0, 123.0]), 0.0), w)


def test_hedge_underflow_resets_uniform(caplog):
    with caplog.at_level(logging.WARNING):
        w = hedge_step(np.array([0.5, 0.5]), np.array([1e6, 2e6]), 1.0)
    np.testing.assert_allclose(w, [0.5, 0.5])
    assert any("underflow" in rec.message for rec in caplog.records)


def test_hedge_weights_stay_on_simplex(rng):
    w = np.full(4, 0.25)
    for _ in range(200):
        w = hedge_step(w, rng.uniform(0, 2, size=4), 0.3)
        assert np.all(w >= 0)
        assert abs(w.sum() - 1.0) <= 1e-12


# --- run contract ---------------------------------------------------------------


ALL_LEARNERS = [
    ("ogd", {}),
    ("greedy", {}),
    ("windowed", {"window": 8}),
    ("restart", {"period": 16}),
    ("meta_expert", {}),
    ("regime", {}),
]


@pytest.mark.parametrize("lid,params", ALL_LEARNERS)
def test_actions_always_feasible(lid, params, sym_box_2d):
    trace = generate(
        EnvSpec(
            family="latent_regime",
            horizon=96,
            space=sym_box_2d,
            block_size=6,
            num_states=3,
            seed=5,
        )
    )
    learner = make_learner(lid, sym_box_2d, trace.horizon, seed=1, **params)
    record = run_learner(learner, trace)
    for row in record.actions:
        assert sym_box_2d.contains(row, tol=1e-9)
    np.testing.assert_allclose(
        record.cumulative_loss, np.cumsum(record.loss_values), rtol=1e-9
    )


@pytest.mark.parametrize("lid,params", ALL_LEARNERS)
def test_causality_future_losses_irrelevant(lid, params, sym_box_2d):
    # actions up to round t may not depend on anything after round t
    t_cut = 40
    trace = generate(
        EnvSpec(
            family="latent_regime",
            horizon=80,
            space=sym_box_2d,
            block_size=5,
            num_states=3,
            seed=17,
        )
    )
    perm = np.random.default_rng(3).permutation(np.arange(t_cut, 80))
    targets2 = trace.targets.copy()
    targets2[t_cut:] = trace.targets[perm]
    latent2 = list(trace.latent_states)
    for i, p in enumerate(perm):
        latent2[t_cut + i] = trace.latent_states[p]
    other = EnvironmentTrace(
        horizon=80,
        loss_kind="quadratic",
        targets=targets2,
        latent_states=tuple(latent2),
        env_id="permuted",
        family=trace.family,
    )
    a = run_learner(make_learner(lid, sym_box_2d, 80, seed=1, **params), trace).actions
    b = run_learner(make_learner(lid, sym_box_2d, 80, seed=1, **params), other).actions
    np.testing.assert_array_equal(a[:t_cut], b[:t_cut])


def test_ogd_sublinear_on_iid_quadratic_sanity(unit_box_1d):
    # light version of the scaling check; the acceptance suite runs the
    # full-horizon variant
    regrets = []
    horizons = [256, 1024, 4096]
    for T in horizons:
        per_seed = []
        for seed in range(3):
            trace = generate(
                EnvSpec(family="piecewise", horizon=T, space=unit_box_1d, block_size=1, seed=seed)
            )
            record = run_learner(make_learner("ogd", unit_box_1d, T), trace)
            comp = best_comparator_in_UK(unit_box_1d, trace, K=T)
            per_seed.append(dynamic_regret(trace, record.actions, comp))
        regrets.append(np.mean(per_seed))
    slope = np.polyfit(np.log(horizons), np.log(regrets), 1)[0]
    assert 0.2 < slope < 0.9


# --- greedy -----------------------------------------------------------------------


def test_greedy_stationary_plays_target_from_round_two(sym_box_2d):
    theta = np.array([0.3, -0.4])
    targets = np.tile(theta, (10, 1))
    trace = EnvironmentTrace(horizon=10, loss_kind="quadratic", targets=targets)
    record = run_learner(make_learner("greedy", sym_box_2d, 10), trace)
    np.testing.assert_array_equal(record.actions[0], sym_box_2d.centroid())
    for t in range(1, 10):
        np.testing.assert_array_equal(record.actions[t], theta)
    assert float(np.sum(record.loss_values[1:])) == 0.0


def test_greedy_alternating_one_step_behind(unit_box_1d):
    a_t, b_t = np.array([0.2]), np.array([0.8])
    targets = np.stack([a_t if t % 2 == 0 else b_t for t in range(12)])
    trace = EnvironmentTrace(horizon=12, loss_kind="quadratic", targets=targets)
    record = run_learner(make_learner("greedy", unit_box_1d, 12), trace)
    per_round = 0.5 * float(np.sum((a_t - b_t) ** 2))
    for t in range(1, 12):
        assert record.loss_values[t] == pytest.approx(per_round)


# --- windowed / restart -------------------------------------------------------------


def test_windowed_ftl_converges_to_projected_mean(unit_box_1d):
    trace = generate(
        EnvSpec(family="piecewise", horizon=400, space=unit_box_1d, block_size=1, seed=8)
    )
    learner = make_learner("windowed", unit_box_1d, 400, window=None)
    run_learner(learner, trace)
    # after the last observe, the iterate is the projected mean of all targets
    want = unit_box_1d.project(np.mean(trace.targets, axis=0))
    np.testing.assert_allclose(learner.x, want, atol=1e-8)


def test_restart_period_one_plays_initialization(sym_box_2d):
    trace = generate(
        EnvSpec(family="piecewise", horizon=32, space=sym_box_2d, block_size=4, seed=2)
    )
    record = run_learner(make_learner("restart", sym_box_2d, 32, period=1), trace)
    for row in record.actions:
        np.testing.assert_array_equal(row, sym_box_2d.centroid())


def test_windowed_tracks_blocks_better_than_ogd(sym_box_2d):
    # paired comparison on block-switching environments: inside blocks,
    # after the window has filled, the windowed learner should be at least
    # as good as vanilla OGD on average
    K = 16
    win_losses, ogd_losses = [], []
    for seed in range(20):
        trace = generate(
            EnvSpec(family="piecewise", horizon=256, space=sym_box_2d, block_size=K, seed=seed)
        )
        rec_w = run_learner(make_learner("windowed", sym_box_2d, 256, window=K), trace)
        rec_o = run_learner(make_learner("ogd", sym_box_2d, 256), trace)
        mask = np.zeros(256, dtype=bool)
        for start in range(0, 256, K):
            mask[start + K // 2 : start + K] = True  # settled part of each block
        win_losses.append(float(np.mean(rec_w.loss_values[mask])))
        ogd_losses.append(float(np.mean(rec_o.loss_values[mask])))
    assert np.mean(win_losses) <= np.mean(ogd_losses) + 1e-9


# --- meta expert ---------------------------------------------------------------------


def test_meta_single_expert_equals_constant_step_ogd(sym_box_2d):
    T = 64
    trace = generate(
        EnvSpec(family="piecewise", horizon=T, space=sym_box_2d, block_size=4, seed=3)
    )
    D = sym_box_2d.diameter()
    eta = D / (D * math.sqrt(T))
    rec_meta = run_learner(make_learner("meta_expert", sym_box_2d, T, n_experts=1), trace)
    rec_ogd = run_learner(make_learner("ogd", sym_box_2d, T, step=eta), trace)
    np.testing.assert_allclose(rec_meta.actions, rec_ogd.actions, atol=1e-12)


def test_meta_weights_valid_and_concentrating(unit_box_1d):
    T = 4096
    trace = generate(
        EnvSpec(family="drift", horizon=T, space=unit_box_1d, v_target=4.0, seed=9)
    )
    learner = make_learner("meta_expert", unit_box_1d, T)
    entropies = []
    for t in range(1, T + 1):
        a = learner.act(t)
        diff = a - trace.targets[t - 1]
        fb = Feedback(0.5 * float(diff @ diff), diff, trace.losses[t - 1])
        learner.observe(t, fb)
        w = learner.weights
        assert np.all(w >= 0) and abs(float(w.sum()) - 1.0) <= 1e-12
        entropies.append(-float(np.sum(np.where(w > 0, w * np.log(w), 0.0))))
    assert np.mean(entropies[-T // 4 :]) < np.mean(entropies[: T // 4])


def test_meta_close_to_best_expert_on_iid_quadratic(unit_box_1d):
    T = 2**14
    trace = generate(
        EnvSpec(family="piecewise", horizon=T, space=unit_box_1d, block_size=1, seed=12)
    )
    meta = make_learner("meta_expert", unit_box_1d, T)
    rec = run_learner(meta, trace)
    D = unit_box_1d.diameter()
    best = math.inf
    for i in range(len(meta.etas)):
        ogd = make_learner("ogd", unit_box_1d, T, step=float(meta.etas[i]))
        best = min(best, run_learner(ogd, trace).total_loss)
    assert rec.total_loss <= 1.1 * best


# --- regime ---------------------------------------------------------------------------


def test_regime_single_state_matches_plain_ogd(sym_box_2d):
    trace = generate(
        EnvSpec(family="latent_regime", horizon=64, space=sym_box_2d, num_states=1, block_size=8, seed=4)
    )
    rec_r = run_learner(make_learner("regime", sym_box_2d, 64), trace)
    rec_o = run_learner(make_learner("ogd", sym_box_2d, 64), trace)
    np.testing.assert_allclose(rec_r.actions, rec_o.actions, atol=1e-12)


def test_regime_aborts_without_reveals(sym_box_2d):
    trace = generate(
        EnvSpec(family="drift", horizon=16, space=sym_box_2d, v_target=1.0, seed=4)
    )
    with pytest.raises(RunAbortedError):
        run_learner(make_learner("regime", sym_box_2d, 16), trace)


def test_regime_transition_table_perfect_after_one_cycle(sym_box_2d):
    K, X, T = 4, 2, 64
    trace = generate(
        EnvSpec(family="latent_regime", horizon=T, space=sym_box_2d, num_states=X, block_size=K, seed=6)
    )
    learner = make_learner("regime", sym_box_2d, T, use_transitions=True)
    states = trace.latent_states
    correct_after_cycle = []
    for t in range(1, T + 1):
        predicted = learner._predict()
        # one full cycle of both regimes observed, including the wrap-around
        # transition revealed at round 2K+1
        if t > 2 * K + 1:
            correct_after_cycle.append(predicted == states[t - 1])
        a = learner.act(t)
        diff = a - trace.targets[t - 1]
        learner.observe(
            t, Feedback(0.5 * float(diff @ diff), diff, trace.losses[t - 1], states[t - 1])
        )
    assert all(correct_after_cycle)


def test_regime_per_regime_regret_sublinear_in_visits(sym_box_2d):
    T = 1024
    trace = generate(
        EnvSpec(family="latent_regime", horizon=T, space=sym_box_2d, num_states=3, block_size=8, seed=10)
    )
    record = run_learner(make_learner("regime", sym_box_2d, T, use_transitions=True), trace)
    states = np.asarray(trace.latent_states)
    pool = np.asarray(trace.extra["regime_targets"])
    for s in range(3):
        idx = np.nonzero(states == s)[0]
        # cumulative loss vs the regime's own best fixed action (its target)
        regret = np.cumsum(record.loss_values[idx])
        n = len(idx)
        # slope of log-regret in log-visits over the last half is clearly < 1
        lo, hi = n // 2, n
        slope = np.polyfit(
            np.log(np.arange(lo, hi) + 1.0), np.log(regret[lo:hi] + 1e-12), 1
        )[0]
        assert slope < 0.8


def test_get_params_roundtrip(sym_box_2d):
    learner = make_learner("regime", sym_box_2d, 32, use_transitions=True)
    assert learner.get_params()["use_transitions"] is True
    learner2 = make_learner("ogd", sym_box_2d, 32, step=0.1)
    assert learner2.get_params() == {"step": 0.1, "grad_bound": None}
