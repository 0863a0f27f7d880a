import itertools
import json

import numpy as np
import pytest

from stressbed import (
    EnvSpec,
    EnvironmentTrace,
    InvalidSpecError,
    best_comparator_in_UK,
    dynamic_regret,
    generate,
    make_space,
    path_length,
    trace_from_json,
    trace_to_json,
)


def spec(family, T, space, **kw):
    return EnvSpec(family=family, horizon=T, space=space, **kw)


# --- shared invariants --------------------------------------------------------


@pytest.mark.parametrize(
    "family,kw",
    [
        ("piecewise", {"block_size": 3}),
        ("drift", {"v_target": 2.0}),
        ("besbes_adversarial", {"v_target": 2.0}),
        ("zhang_piecewise", {"v_target": 2.0}),
        ("latent_regime", {"block_size": 4, "num_states": 3}),
    ],
)
def test_determinism_bit_identical(family, kw, sym_box_2d):
    a = generate(spec(family, 64, sym_box_2d, seed=7, **kw))
    b = generate(spec(family, 64, sym_box_2d, seed=7, **kw))
    np.testing.assert_array_equal(a.targets, b.targets)
    assert a.latent_states == b.latent_states
    assert a.switch_times == b.switch_times
    assert a.env_id == b.env_id
    c = generate(spec(family, 64, sym_box_2d, seed=8, **kw))
    assert not np.array_equal(a.targets, c.targets)


@pytest.mark.parametrize(
    "family,kw",
    [
        ("piecewise", {"block_size": 4}),
        ("drift", {"v_target": 3.0}),
        ("besbes_adversarial", {"v_target": 3.0}),
        ("zhang_piecewise", {"v_target": 3.0}),
        ("latent_regime", {"block_size": 4, "num_states": 3}),
    ],
)
def test_realized_volatility_honesty(family, kw, sym_box_2d):
    trace = generate(spec(family, 48, sym_box_2d, seed=3, **kw))
    comp = best_comparator_in_UK(sym_box_2d, trace, K=1)
    assert trace.realized_path_length == pytest.approx(path_length(comp), rel=1e-9)


@pytest.mark.parametrize(
    "family,kw",
    [
        ("piecewise", {}),
        ("drift", {}),
        ("besbes_adversarial", {}),
        ("zhang_piecewise", {}),
        ("latent_regime", {"num_states": 4}),
    ],
)
def test_monotone_stress_knob(family, kw, sym_box_2d):
    levels = [0.5, 1.0, 2.0, 4.0, 8.0]
    medians = []
    for v in levels:
        realized = [
            generate(spec(family, 128, sym_box_2d, v_target=v, seed=s, **kw)).realized_path_length
            for s in range(9)
        ]
        medians.append(float(np.median(realized)))
    assert all(a <= b + 1e-9 for a, b in zip(medians, medians[1:]))


def test_targets_always_feasible(sym_box_2d, simplex_3d):
    for space in (sym_box_2d, simplex_3d):
        for family, kw in [
            ("piecewise", {"block_size": 2}),
            ("drift", {"v_target": 2.0}),
            ("besbes_adversarial", {"v_target": 1.0}),
            ("zhang_piecewise", {"v_target": 1.5}),
            ("latent_regime", {"block_size": 3, "num_states": 2}),
        ]:
            trace = generate(spec(family, 32, space, seed=1, **kw))
            for row in trace.targets:
                assert space.contains(row, tol=1e-9)


# --- piecewise ------------------------------------------------------------------


def test_piecewise_stationary_when_K_equals_T(unit_box_1d):
    trace = generate(spec("piecewise", 50, unit_box_1d, block_size=50, seed=2))
    assert trace.realized_path_length == 0.0
    assert trace.switch_times == ()


def test_piecewise_switch_times_K2_T6(unit_box_1d):
    trace = generate(spec("piecewise", 6, unit_box_1d, block_size=2, seed=5))
    assert trace.switch_times == (3, 5)


def test_piecewise_K1_path_matches_monte_carlo(unit_box_1d):
    # E|U - U'| for independent uniforms on [0, 1], estimated independently
    mc = np.random.default_rng(999)
    est = float(np.mean(np.abs(mc.random(1_000_000) - mc.random(1_000_000))))
    T = 1000
    paths = [
        generate(spec("piecewise", T, unit_box_1d, block_size=1, seed=s)).realized_path_length
        for s in range(20)
    ]
    mean_step = float(np.mean(paths)) / (T - 1)
    assert est == pytest.approx(1.0 / 3.0, abs=1e-3)
    assert mean_step == pytest.approx(est, abs=0.01)


def test_piecewise_rejects_K_above_T(unit_box_1d):
    with pytest.raises(InvalidSpecError):
        generate(spec("piecewise", 4, unit_box_1d, block_size=5))


# --- drift ----------------------------------------------------------------------


def test_drift_zero_volatility_constant(sym_box_2d):
    trace = generate(spec("drift", 40, sym_box_2d, v_target=0.0, seed=11))
    assert np.all(trace.targets == trace.targets[0])
    assert trace.realized_path_length == 0.0


def test_drift_exact_budget_without_clipping():
    space = make_space("box", 2, lo=-100.0, hi=100.0)
    trace = generate(spec("drift", 101, space, v_target=10.0, seed=4))
    assert trace.realized_path_length == pytest.approx(10.0, abs=1e-9)
    assert trace.extra["clip_gap"] == pytest.approx(0.0, abs=1e-9)


def test_drift_clipping_matches_rewalk(unit_box_1d):
    # tight box forces clipping; re-walking the stored sequence must
    # reproduce both the realized path and the reported gap
    trace = generate(spec("drift", 51, unit_box_1d, v_target=30.0, seed=4))
    steps = np.linalg.norm(trace.targets[1:] - trace.targets[:-1], axis=1)
    realized = float(np.sum(steps))
    assert realized <= 30.0
    assert trace.realized_path_length == pytest.approx(realized, rel=1e-12)
    assert trace.extra["clip_gap"] == pytest.approx(30.0 - realized, rel=1e-9)


def test_drift_budget_over_capacity_rejected(unit_box_1d):
    with pytest.raises(InvalidSpecError):
        generate(spec("drift", 10, unit_box_1d, v_target=1e6))


# --- besbes ---------------------------------------------------------------------


def test_besbes_tiny_volatility_is_stationary(sym_box_2d):
    trace = generate(spec("besbes_adversarial", 32, sym_box_2d, v_target=1e-6, seed=0))
    assert trace.extra["num_batches"] == 1
    assert trace.realized_path_length == 0.0


def test_besbes_T8_four_batches(sym_box_2d):
    gap = sym_box_2d.diameter() / 4.0
    trace = generate(spec("besbes_adversarial", 8, sym_box_2d, v_target=4 * gap, seed=9))
    assert trace.extra["num_batches"] == 4
    assert len(set(trace.latent_states)) <= 2
    assert trace.latent_states is not None and len(trace.latent_states) == 8
    assert set(trace.switch_times or ()).issubset({3, 5, 7})


def test_besbes_coin_fairness_across_seeds(sym_box_2d):
    gap = sym_box_2d.diameter() / 4.0
    coins = []
    for s in range(64):
        trace = generate(spec("besbes_adversarial", 16, sym_box_2d, v_target=4 * gap, seed=s))
        coins.extend(trace.latent_states[:: trace.extra["batch_length"]])
    assert 0.35 < np.mean(coins) < 0.65


def test_besbes_expected_regret_lower_bound(unit_box_1d):
    # exact expectation by enumerating all coin patterns at T=8, d=1:
    # for any fixed action the dynamic regret against per-batch optima
    # averages at least (T/2) * (gap^2 / 8)
    T = 8
    gap = unit_box_1d.diameter() / 4.0
    base = generate(spec("besbes_adversarial", T, unit_box_1d, v_target=4 * gap, seed=0))
    candidates = np.asarray(base.extra["candidates"])
    n_batches = base.extra["num_batches"]
    batch_len = base.extra["batch_length"]
    for a in [0.0, 0.25, 0.5, 0.625, 1.0]:
        actions = np.full((T, 1), a)
        total = 0.0
        for pattern in itertools.product([0, 1], repeat=n_batches):
            targets = np.repeat(candidates[list(pattern)], batch_len, axis=0)
            trace = EnvironmentTrace(horizon=T, loss_kind="quadratic", targets=targets)
            comp = best_comparator_in_UK(unit_box_1d, trace, K=batch_len)
            total += dynamic_regret(trace, actions, comp)
        expected = total / 2**n_batches
        assert expected >= (T / 2.0) * (gap**2 / 8.0) - 1e-12


def test_besbes_volatility_too_high_rejected(unit_box_1d):
    with pytest.raises(InvalidSpecError):
        generate(spec("besbes_adversarial", 8, unit_box_1d, v_target=100.0))


# --- zhang ----------------------------------------------------------------------


def test_zhang_single_segment_stationary(unit_box_1d):
    trace = generate(spec("zhang_piecewise", 20, unit_box_1d, v_target=0.0, seed=3))
    assert trace.extra["num_segments"] == 1
    assert trace.realized_path_length == 0.0


def test_zhang_distance_rule(unit_box_1d):
    # L = 2 on [0, 1]: consecutive segment minimizers at least 1/2 apart
    trace = generate(spec("zhang_piecewise", 10, unit_box_1d, v_target=1.0, seed=6))
    assert trace.extra["num_segments"] == 2
    jump = abs(trace.targets[-1, 0] - trace.targets[0, 0])
    assert jump >= 0.5


@pytest.mark.parametrize("v", [2.0, 4.0, 7.0])
def test_zhang_path_at_least_budgeted_jumps(v, sym_box_2d):
    trace = generate(spec("zhang_piecewise", 64, sym_box_2d, v_target=v, seed=8))
    L = trace.extra["num_segments"]
    assert L == 1 + int(v / sym_box_2d.diameter())
    # recompute the per-segment optimum path from the emitted trace
    comp = best_comparator_in_UK(sym_box_2d, trace, K=1)
    assert path_length(comp) >= (L - 1) * sym_box_2d.diameter() / 2.0 - 1e-9


def test_zhang_too_many_segments_rejected(unit_box_1d):
    with pytest.raises(InvalidSpecError):
        generate(spec("zhang_piecewise", 3, unit_box_1d, v_target=10.0))


# --- latent regime ---------------------------------------------------------------


def test_latent_single_state_stationary(sym_box_2d):
    trace = generate(spec("latent_regime", 30, sym_box_2d, num_states=1, block_size=5, seed=2))
    assert trace.realized_path_length == 0.0
    assert set(trace.latent_states) == {0}


def test_latent_cyclic_schedule_exact(sym_box_2d):
    trace = generate(spec("latent_regime", 24, sym_box_2d, num_states=3, block_size=4, seed=13))
    states = np.asarray(trace.latent_states)
    expected = np.repeat([0, 1, 2, 0, 1, 2], 4)
    np.testing.assert_array_equal(states, expected)
    counts = np.bincount(states)
    assert np.all(counts == 8)  # each regime active exactly twice for 4 rounds


def test_latent_path_matches_regime_distances(sym_box_2d):
    trace = generate(spec("latent_regime", 24, sym_box_2d, num_states=3, block_size=4, seed=13))
    pool = np.asarray(trace.extra["regime_targets"])
    states = np.asarray(trace.latent_states)
    switches = np.nonzero(states[1:] != states[:-1])[0]
    want = sum(
        float(np.linalg.norm(pool[states[i + 1]] - pool[states[i]])) for i in switches
    )
    assert trace.realized_path_length == pytest.approx(want, rel=1e-9)


def test_latent_jitter_perturbs_block_lengths(sym_box_2d):
    base = generate(spec("latent_regime", 64, sym_box_2d, num_states=2, block_size=8, seed=21))
    jit = generate(
        spec("latent_regime", 64, sym_box_2d, num_states=2, block_size=8, seed=21, jitter=True)
    )
    assert base.switch_times != jit.switch_times
    lengths = np.diff(np.array((1,) + jit.switch_times + (65,)))
    # all full blocks within +-25% of 8; the final block may be truncated
    assert np.all(lengths[:-1] >= 6) and np.all(lengths[:-1] <= 10)
    assert lengths[-1] <= 10


def test_latent_regimes_recur(sym_box_2d):
    trace = generate(spec("latent_regime", 60, sym_box_2d, num_states=3, block_size=5, seed=4))
    states = np.asarray(trace.latent_states)
    for s in range(3):
        runs = np.nonzero(np.diff(np.concatenate([[0], (states == s).astype(int), [0]])))[0]
        assert len(runs) >= 4  # at least two separate visits


# --- serialization ---------------------------------------------------------------


def test_trace_json_roundtrip(sym_box_2d):
    trace = generate(
        spec("latent_regime", 24, sym_box_2d, num_states=3, block_size=4, seed=13, v_target=0.0)
    )
    doc = trace_to_json(trace, sym_box_2d)
    text = json.dumps(doc)
    back, space2 = trace_from_json(json.loads(text))
    np.testing.assert_array_equal(back.targets, trace.targets)
    assert back.latent_states == trace.latent_states
    assert back.switch_times == trace.switch_times
    assert back.env_id == trace.env_id
    assert space2.to_json() == sym_box_2d.to_json()
