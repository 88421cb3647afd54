from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from silo_games.game import (
    analyze_dilemma,
    model_precision,
    org_utility,
    own_action_strictly_decreasing,
    pure_nash_equilibria,
    social_welfare,
    utility_breakdown,
    utility_matrix,
)
from tests.helpers import C3_THETA0, C3_THETA1, c1_game, c2_game, game, zero_game
from tests.oracles import all_profiles, exact_utility, exact_welfare

C3_GAME = game(10, 200, 33, C3_THETA0, C3_THETA1, (1,) * 10, (0.01,) * 10, (0,) * 10)


def test_precision_reference_constants():
    chi0 = Fraction("23271.584") / Fraction("50193.243")
    assert model_precision(C3_GAME, 0) == pytest.approx(float(chi0), rel=1e-15)
    assert model_precision(C3_GAME, 0) == pytest.approx(0.46364, abs=5e-6)
    chi330 = Fraction("23271.584") / (Fraction("50193.243") + 200 * 330)
    assert model_precision(C3_GAME, 330) == pytest.approx(float(chi330), rel=1e-15)
    assert model_precision(C3_GAME, 330) == pytest.approx(0.20028, abs=5e-6)


def test_precision_trivial_and_errors(c2):
    assert model_precision(c2, 0) == 1.0
    with pytest.raises(ValueError):
        model_precision(c2, 3)  # N*r = 2
    values = [model_precision(C3_GAME, t) for t in range(331)]
    assert all(a > b for a, b in zip(values, values[1:]))


C2_ARGS = (1, "10", "10", ("3", "3"), ("0.4", "0.4"), ("0.1", "0.1"))
C1_ARGS = (5, "10", "10", ("3", "3"), ("0.25", "0.25"), ("0.1", "0.1"))


def test_org_utility_examples(c1, c2):
    assert exact_utility(*C2_ARGS, 0, (0, 1)) == Fraction(19, 110)
    assert org_utility(c2, 0, (0, 1)) == pytest.approx(19 / 110, abs=1e-15)
    assert org_utility(c2, 0, (0, 0)) == pytest.approx(-0.1, abs=1e-15)
    assert exact_utility(*C1_ARGS, 0, (1, 1)) == Fraction(3, 20)
    assert org_utility(c1, 0, (1, 1)) == pytest.approx(0.15, abs=1e-15)


def test_breakdown_parts(c1):
    b = utility_breakdown(c1, 0, (1, 1))
    assert b.revenue == pytest.approx(1.5)
    assert b.compute_cost == pytest.approx(1.25)
    assert b.comm_cost == pytest.approx(0.1)
    assert b.utility == pytest.approx(0.15)


def test_social_welfare_examples(c1, c2):
    assert social_welfare(c1, (1, 1)) == pytest.approx(0.3, abs=1e-15)
    assert social_welfare(c1, (0, 0)) == pytest.approx(-0.2, abs=1e-15)
    assert exact_welfare(*C2_ARGS, (0, 1)) == Fraction(-3, 55)
    assert social_welfare(c2, (0, 1)) == pytest.approx(-3 / 55, abs=1e-15)


@pytest.mark.parametrize("cfg", [c1_game(), c2_game(), game(3, 2, 2, 7, 5, (1, 2, 0.5), (0.1, 0.3, 0.05), (0, 0.2, 0.1))])
def test_utility_matrix_matches_exact_oracle(cfg):
    args = (
        cfg.local_iters,
        repr(cfg.theta0),
        repr(cfg.theta1),
        [repr(o.unit_revenue) for o in cfg.orgs],
        [repr(o.compute_coeff) for o in cfg.orgs],
        [repr(o.comm_cost) for o in cfg.orgs],
    )
    U = utility_matrix(cfg)
    for j, prof in enumerate(all_profiles(cfg.n_orgs, cfg.n_actions)):
        for i in range(cfg.n_orgs):
            assert U[j, i] == pytest.approx(float(exact_utility(*args, i, prof)), abs=1e-13)
        # welfare identity
        assert social_welfare(cfg, prof) == sum(org_utility(cfg, i, prof) for i in range(cfg.n_orgs))


def test_analyze_c1():
    rep = analyze_dilemma(c1_game())
    assert rep.is_dilemma
    assert rep.condition_holds_per_org == (True, True)
    assert rep.nash_profile == (0, 0)
    assert rep.nash_welfare == pytest.approx(-0.2, abs=1e-12)
    assert rep.full_participation_welfare == pytest.approx(0.3, abs=1e-12)
    assert rep.premise_positive_model_value
    assert rep.ne_certified is True
    assert rep.pure_equilibria == ((0, 0),)


def test_analyze_cheap_compute_flips():
    rep = analyze_dilemma(c1_game(beta=0.05))
    assert not rep.is_dilemma
    assert rep.condition_holds_per_org == (False, False)
    # training pays for each org, so everyone trains
    assert rep.nash_profile == (1, 1)
    assert rep.ne_certified is True


def test_analyze_zero_game():
    rep = analyze_dilemma(zero_game())
    assert not rep.is_dilemma
    assert rep.nash_welfare == 0.0


def test_analyze_large_game_skips_certification():
    rep = analyze_dilemma(C3_GAME)
    assert rep.ne_certified is None
    assert rep.pure_equilibria is None
    assert len(rep.condition_holds_per_org) == 10


small_games = st.builds(
    lambda n, r, K, t0, t1, ms, bs, cs: game(n, K, r, t0, t1, ms[:n], bs[:n], cs[:n]),
    st.integers(2, 3),
    st.integers(1, 3),
    st.integers(1, 5),
    st.floats(0.5, 50),
    st.floats(0.5, 50),
    # magnitudes far below the utility scale get absorbed by float rounding
    st.lists(st.one_of(st.just(0.0), st.floats(1e-4, 5)), min_size=3, max_size=3),
    st.lists(st.one_of(st.just(0.0), st.floats(1e-4, 2)), min_size=3, max_size=3),
    st.lists(st.floats(0, 1), min_size=3, max_size=3),
)


@settings(max_examples=60, deadline=None)
@given(small_games)
def test_utility_depends_on_others_only_through_total(cfg):
    U = utility_matrix(cfg)
    A = cfg.space.actions
    for i in range(cfg.n_orgs):
        seen = {}
        for j in range(len(A)):
            key = (A[j, i], A[j].sum())
            if key in seen:
                assert U[j, i] == pytest.approx(seen[key], rel=1e-12, abs=1e-12)
            seen[key] = U[j, i]


@settings(max_examples=60, deadline=None)
@given(small_games)
def test_revenue_monotone_in_total(cfg):
    totals = range(cfg.n_orgs * cfg.max_rounds + 1)
    chi = [model_precision(cfg, t) for t in totals]
    assert all(a > b for a, b in zip(chi, chi[1:]))
    for org in cfg.orgs:
        if org.unit_revenue > 0:
            rev = [org.unit_revenue * (cfg.chi0 - c) for c in chi]
            assert all(a < b for a, b in zip(rev, rev[1:]))


@settings(max_examples=60, deadline=None)
@given(small_games)
def test_dilemma_report_consistency(cfg):
    rep = analyze_dilemma(cfg)
    if all(rep.condition_holds_per_org):
        zero = (0,) * cfg.n_orgs
        assert zero in pure_nash_equilibria(cfg)
        assert own_action_strictly_decreasing(cfg)
        assert rep.ne_certified
    if rep.is_dilemma:
        assert rep.nash_profile == (0,) * cfg.n_orgs
        assert rep.nash_welfare < rep.full_participation_welfare
    # the certified profile really admits no profitable deviation
    if rep.ne_certified:
        U = utility_matrix(cfg)
        space = cfg.space
        base = space.encode(rep.nash_profile)
        for i in range(cfg.n_orgs):
            for a in range(cfg.n_actions):
                dev = list(rep.nash_profile)
                dev[i] = a
                assert U[space.encode(dev), i] <= U[base, i] + 1e-9
