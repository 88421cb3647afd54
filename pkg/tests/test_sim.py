import numpy as np
import pytest

from silo_games.game import social_welfare, utility_matrix
from silo_games.markov import build_transition_matrix
from silo_games.mmzd import PinningSpec, synthesize
from silo_games.sim import (
    SimPlan,
    Trajectory,
    convergence_report,
    run,
    strategy_grid,
)
from silo_games.strategies import make_baseline
from tests.helpers import c2_game, feasible_pinning


def test_allc_welfare_is_constant(c1):
    plan = SimPlan(c1, [make_baseline("allc", c1)] * 2, rounds=7, reps=4, seed=1)
    traj = run(plan)
    assert traj.actions.shape == (4, 7, 2)
    assert np.all(traj.actions == 1)
    np.testing.assert_allclose(traj.welfare, 0.3, atol=1e-15)
    np.testing.assert_allclose(traj.running_mean(), 0.3, atol=1e-15)


def test_utilities_match_profiles(c1):
    traj = run(SimPlan(c1, [make_baseline("rand", c1)] * 2, rounds=5, reps=3, seed=9))
    for rep in range(3):
        for t in range(5):
            prof = tuple(int(a) for a in traj.actions[rep, t])
            assert traj.welfare[rep, t] == pytest.approx(social_welfare(c1, prof), abs=1e-15)


def test_determinism_and_threads(c1):
    plan = SimPlan(c1, [make_baseline("rand", c1), make_baseline("mixed", c1)], rounds=10, reps=20, seed=42)
    a, b, c = run(plan, threads=1), run(plan, threads=1), run(plan, threads=4)
    np.testing.assert_array_equal(a.actions, b.actions)
    np.testing.assert_array_equal(a.actions, c.actions)
    assert a.labels == c.labels
    other = run(SimPlan(c1, plan.strategies, rounds=10, reps=20, seed=43))
    assert not np.array_equal(a.actions, other.actions)


def test_rep_streams_independent_of_rep_count(c1):
    s = [make_baseline("rand", c1)] * 2
    short = run(SimPlan(c1, s, rounds=6, reps=3, seed=5))
    long = run(SimPlan(c1, s, rounds=6, reps=10, seed=5))
    np.testing.assert_array_equal(short.actions, long.actions[:3])


def test_initial_states(c1):
    tft = [make_baseline("tft", c1)] * 2
    # TFT copies the half the previous round fell in
    assert np.all(run(SimPlan(c1, tft, rounds=3, reps=2, initial_state="zero")).actions == 0)
    assert np.all(run(SimPlan(c1, tft, rounds=3, reps=2, initial_state="full")).actions == 1)
    assert np.all(run(SimPlan(c1, tft, rounds=3, reps=2, initial_state=(0, 1))).actions == 1)
    with pytest.raises(ValueError):
        SimPlan(c1, tft, initial_state="random")
    with pytest.raises(ValueError):
        SimPlan(c1, tft, initial_state=(0, 2))
    with pytest.raises(ValueError):
        SimPlan(c1, tft[:1])
    with pytest.raises(ValueError):
        SimPlan(c1, tft, rounds=0)


def _traj(welfare):
    w = np.asarray(welfare, dtype=float)
    u = np.stack([w, np.zeros_like(w)], axis=2)
    return Trajectory(np.zeros(u.shape, dtype=np.int64), u, [["x", "y"]] * len(w))


def test_convergence_report_examples():
    traj = _traj([[0, 0, 1, 1], [0, 0, 1, 3]])
    rep = convergence_report(traj, target=1.5, window=2)
    # per-rep window means 1 and 2
    assert rep.window_mean == 1.5
    assert rep.deviation == 0.0
    assert rep.std_error == pytest.approx(0.5)
    assert rep.tolerance == pytest.approx(1.5)
    assert rep.within
    far = convergence_report(traj, target=4.0, window=2)
    assert not far.within
    fixed = convergence_report(traj, target=1.0, window=2, tol=0.4)
    assert fixed.tolerance == 0.4 and not fixed.within
    with pytest.raises(ValueError):
        traj.window_means(5)


def test_mmzd_simulation_converges(rng):
    cfg, spec, b = feasible_pinning(rng, 2, 2)
    res = synthesize(cfg, spec, b.alpha0_min)
    opp = make_baseline("rand", cfg)
    traj = run(SimPlan(cfg, [res.strategy, opp], rounds=60, reps=200, seed=3))
    rep = convergence_report(traj, res.pinned_value, window=30)
    assert rep.within


def test_small_grid():
    cfg = c2_game()
    res = synthesize(cfg, PinningSpec(phi=0.5, slice=0), 3 / 55)
    cells = strategy_grid(cfg, pinning=res, rounds=30, reps=40, seed=1, window=5, initial_state=(0, 1))
    assert len(cells) == 20
    assert [c.controller for c in cells[:5]] == ["mmzd"] * 5
    again = strategy_grid(cfg, pinning=res, rounds=30, reps=40, seed=1, window=5, initial_state=(0, 1))
    assert cells == again
    for c in cells:
        if c.controller == "mmzd":
            assert c.pinned_target == pytest.approx(-3 / 55)
        if c.controller == "allc" and c.opponent == "allc":
            assert c.mean_welfare == pytest.approx(0.0, abs=1e-12)
            assert c.std_error == 0.0
    with pytest.raises(ValueError):
        strategy_grid(cfg, pinning=None)
    # (1,0) absorbs ALLD play at about 7% per round; 300 rounds leave ~1e-10 unabsorbed
    long = strategy_grid(
        cfg, controllers=("mmzd",), opponents=("allc", "alld"), pinning=res,
        rounds=300, reps=40, seed=1, initial_state=(0, 1),
    )
    for c in long:
        assert c.mean_welfare == pytest.approx(-3 / 55, abs=1e-12)


def _c2_controller():
    return synthesize(c2_game(), PinningSpec(phi=0.5, slice=0), 3 / 55).strategy


def test_convergence_c2_vs_alld_absorbed():
    cfg = c2_game()
    plan = SimPlan(cfg, [_c2_controller(), make_baseline("alld", cfg)], rounds=20, reps=100, seed=2, initial_state=(1, 0))
    rep = convergence_report(run(plan), -3 / 55, window=5)
    assert rep.deviation < 1e-12
    assert rep.round_mean_std < 1e-12


def test_convergence_c2_vs_alld_default_start():
    # leaving (1,1) towards (0,0) happens with probability 3/110, and from
    # there absorption leaks at 4/55 per round, so a few reps may lag
    cfg = c2_game()
    plan = SimPlan(cfg, [_c2_controller(), make_baseline("alld", cfg)], rounds=20, reps=100, seed=2)
    rep = convergence_report(run(plan), -3 / 55, window=5)
    assert rep.deviation < 0.01


def _exact_window_mean(M, S, start, rounds, window):
    x = np.zeros(len(M))
    x[start] = 1.0
    means = []
    for _ in range(rounds):
        x = x @ M
        means.append(x @ S)
    return float(np.mean(means[-window:]))


def test_c2_vs_rand_finite_horizon_bias():
    # second eigenvalue 0.95: twenty rounds from all-r are not yet stationary
    cfg = c2_game()
    M = build_transition_matrix([_c2_controller(), make_baseline("rand", cfg)], cfg.space)
    S = utility_matrix(cfg).sum(axis=1)
    bias20 = _exact_window_mean(M, S, 3, 20, 10) + 3 / 55
    assert bias20 == pytest.approx(0.011794140826, abs=1e-10)
    assert abs(_exact_window_mean(M, S, 3, 100, 10) + 3 / 55) < 2e-4


def test_convergence_c2_vs_rand():
    cfg = c2_game()
    plan = SimPlan(cfg, [_c2_controller(), make_baseline("rand", cfg)], rounds=100, reps=1000, seed=4)
    rep = convergence_report(run(plan), -3 / 55, window=10)
    assert rep.deviation < 0.01
