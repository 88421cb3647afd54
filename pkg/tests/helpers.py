"""Game builders and random generators shared by the tests."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from silo_games.game import GameConfig, OrgParams

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"

C3_THETA0 = 23271.584
C3_THETA1 = 50193.243


def game(n, K, r, theta0, theta1, m, beta, cm):
    return GameConfig(n, K, r, float(theta0), float(theta1), tuple(
        OrgParams(float(a), float(b), float(c)) for a, b, c in zip(m, beta, cm)
    ))


def c1_game(beta=0.25):
    return game(2, 5, 1, 10, 10, (3, 3), (beta, beta), (0.1, 0.1))


def c2_game():
    return game(2, 1, 1, 10, 10, (3, 3), (0.4, 0.4), (0.1, 0.1))


def zero_game(n=2, r=1):
    return game(n, 1, r, 10, 10, (0,) * n, (0,) * n, (0,) * n)


def random_game(rng, n, r, controller_scale=1.0, hetero=True):
    m = rng.uniform(0, 3, n)
    beta = rng.uniform(0, 1, n)
    beta[0] *= controller_scale
    if not hetero:
        m[:] = m[0]
        beta[:] = beta[0]
    return game(
        n,
        int(rng.integers(1, 6)),
        r,
        rng.uniform(1, 20),
        rng.uniform(1, 20),
        m,
        beta,
        rng.uniform(0, 0.5, n),
    )


def random_table(rng, space, deterministic_frac=0.0):
    """Random stochastic table; a fraction of rows are made one-hot."""
    T = rng.dirichlet(np.ones(space.n_actions), size=space.size)
    for j in np.flatnonzero(rng.random(space.size) < deterministic_frac):
        T[j] = np.eye(space.n_actions)[rng.integers(space.n_actions)]
    return T


def feasible_pinning(rng, n, r, negative=False, completion="uniform", max_tries=200):
    """Random heterogeneous game plus a pinning spec with a nonempty alpha0 interval.

    A costly controller makes its own action dominate welfare, so the block
    where it plays r (phi > 0) or 0 (phi < 0) sits at one end of the range.
    """
    from silo_games.mmzd import PinningSpec, pinning_bounds, state_welfare_vector

    for _ in range(max_tries):
        cfg = random_game(rng, n, r, controller_scale=float(rng.uniform(20, 60)))
        S = state_welfare_vector(cfg)
        spread = float(S.max() - S.min())
        phi = float(rng.uniform(0.2, 0.9)) / spread
        spec = PinningSpec(
            phi=-phi if negative else phi,
            controller=0,
            slice=0 if negative else r,
            completion=completion,
        )
        b = pinning_bounds(cfg, spec)
        if b.feasible and b.alpha0_max - b.alpha0_min > 1e-9:
            return cfg, spec, b
    raise RuntimeError("no feasible configuration found")
