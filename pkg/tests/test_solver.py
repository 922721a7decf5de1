import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linex.blackbox import builtin_linear
from linex.core import Example
from linex.errors import DegenerateGammaError, SingularSystemError
from linex.neighborhood import EnvironmentSet, Neighborhood
from linex.solver import (
    GameConfig,
    best_response,
    default_gamma,
    lambda_max,
    ne_oracle_multi,
    ne_oracle_two,
    play_game,
    project_l1_ball,
    sparsify,
    weighted_lsq,
    weighted_lsq_full,
)
from linex.wlasso import ZeroWeightError


def orthogonal_design(n, d, rng, scale=1.0):
    """Exactly mean-zero, mutually orthogonal columns."""
    m = np.column_stack([np.ones(n), rng.standard_normal((n, d))])
    q, _ = np.linalg.qr(m)
    return q[:, 1:d + 1] * np.sqrt(n) * scale


def linear_env(X, w_star, weights=None):
    y = X @ np.asarray(w_star, dtype=np.float64)
    return Neighborhood(X, y, np.ones(X.shape[0]) if weights is None else weights)


def env_set(envs, anchor_dim=None):
    d = envs[0].dim if anchor_dim is None else anchor_dim
    return EnvironmentSet(envs[0], tuple(envs), Example(np.zeros(d)))


def oracle_game_config(k, d, gamma=1.0, **kw):
    defaults = dict(epsilon=1e-7, max_rounds=5000, inner_max_iters=300, inner_tol=1e-10)
    defaults.update(kw)
    return GameConfig(k=k, gamma=gamma, t=gamma * d, **defaults)


class TestWeightedLsq:
    def test_exact_linear_recovery(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((40, 3))
        bb = builtin_linear([1.5, -2.0, 0.25], intercept=4.0)
        env = Neighborhood(X, bb.predict_batch(X), np.ones(40))
        slope, intercept = weighted_lsq_full(env)
        assert np.allclose(slope, [1.5, -2.0, 0.25], atol=1e-8)
        assert intercept == pytest.approx(4.0, abs=1e-7)

    def test_single_feature_two_points(self):
        env = Neighborhood(np.array([[0.0], [1.0]]), np.array([0.0, 1.0]), np.ones(2))
        assert weighted_lsq(env)[0] == pytest.approx(1.0, abs=1e-7)

    def test_five_point_weighted_vs_hand_inversion(self):
        # independent oracle: explicit 2x2 normal-equation inversion
        X = np.array([[1.0, 2.0], [0.0, 1.0], [-1.0, 0.5], [2.0, -1.0], [0.5, 0.5]])
        y = np.array([1.0, -0.5, 0.25, 2.0, 0.0])
        w = np.array([1.0, 2.0, 0.5, 1.5, 3.0])
        S = w.sum()
        xbar = (w @ X) / S
        ybar = (w @ y) / S
        Xc, yc = X - xbar, y - ybar
        a11 = np.sum(w * Xc[:, 0] ** 2)
        a12 = np.sum(w * Xc[:, 0] * Xc[:, 1])
        a22 = np.sum(w * Xc[:, 1] ** 2)
        b1 = np.sum(w * Xc[:, 0] * yc)
        b2 = np.sum(w * Xc[:, 1] * yc)
        det = a11 * a22 - a12 * a12
        hand = np.array([(a22 * b1 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det])
        assert np.allclose(weighted_lsq(Neighborhood(X, y, w), ridge=0.0), hand, atol=1e-10)

    def test_singular_without_ridge(self):
        X = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])  # rank 1
        env = Neighborhood(X, np.array([1.0, 2.0, 3.0]), np.ones(3))
        with pytest.raises(SingularSystemError):
            weighted_lsq(env, ridge=0.0)
        weighted_lsq(env)  # default ridge handles it

    def test_zero_weights_raise(self):
        env = Neighborhood(np.eye(2), np.ones(2), np.zeros(2))
        with pytest.raises(ZeroWeightError):
            weighted_lsq(env)


class TestProjectL1:
    def test_examples(self):
        v = np.array([0.25, -0.5])
        assert np.array_equal(project_l1_ball(v, 1.0), v)
        assert np.allclose(project_l1_ball(np.array([3.0, 0.0]), 1.0), [1.0, 0.0])
        assert np.allclose(project_l1_ball(np.array([2.0, 1.0]), 2.0), [1.5, 0.5])

    def test_rejects_nonpositive_radius(self):
        with pytest.raises(ValueError):
            project_l1_ball(np.ones(2), 0.0)


class TestBestResponse:
    def test_slack_constraints_match_unconstrained(self):
        rng = np.random.default_rng(1)
        X = orthogonal_design(60, 3, rng)
        w_star = np.array([0.4, -0.2, 0.6])
        env = linear_env(X, w_star)
        others = np.array([0.1, 0.0, -0.1])
        cfg = GameConfig(k=2, gamma=100.0, t=1000.0, inner_max_iters=400, inner_tol=1e-12)
        w = best_response(0, others, env, cfg)
        # mean-zero design: the residual unconstrained fit is w_star - others
        assert np.allclose(w, w_star - others, atol=1e-8)

    def test_1d_box_clip(self):
        X = np.linspace(-1, 1, 21).reshape(-1, 1)
        env = linear_env(X, [5.0])
        cfg = GameConfig(k=2, gamma=1.0, t=2.0, inner_tol=1e-12)
        w = best_response(0, np.zeros(1), env, cfg)
        assert w[0] == pytest.approx(1.0, abs=1e-8)

    def test_1d_opposite_sign_push(self):
        # others at +gamma, environment optimum below -gamma: response -gamma
        gamma = 0.5
        X = np.linspace(-1, 1, 21).reshape(-1, 1)
        env = linear_env(X, [-(gamma + 0.3)])
        cfg = GameConfig(k=2, gamma=gamma, t=2 * gamma, inner_tol=1e-12)
        w = best_response(0, np.array([gamma]), env, cfg)
        assert w[0] == pytest.approx(-gamma, abs=1e-8)

    @pytest.mark.parametrize("case", range(6))
    def test_grid_search_optimality(self, case):
        # dense grid over the feasible set certifies the returned objective
        rng = np.random.default_rng(100 + case)
        d = 1 + case % 2
        X = rng.standard_normal((25, d))
        y = rng.standard_normal(25)
        weights = rng.uniform(0.2, 1.0, 25)
        env = Neighborhood(X, y, weights)
        s = rng.standard_normal(d) * 0.3
        gamma = rng.uniform(0.2, 0.8)
        t = gamma * d + abs(rng.standard_normal()) * 0.5 + np.abs(s).sum() * 0.2
        t = max(t, np.maximum(np.abs(s) - gamma, 0).sum() + 0.05)
        cfg = GameConfig(k=2, gamma=gamma, t=t, inner_max_iters=2000, inner_tol=1e-12)
        w = best_response(0, s, env, cfg)

        def objective(u):
            total = s + u
            return np.sum(weights * (y - X @ total) ** 2)

        got = objective(w)
        axes = [np.linspace(-gamma, gamma, 101)] * d
        best = np.inf
        for point in itertools.product(*axes):
            u = np.array(point)
            if np.abs(s + u).sum() <= t:
                best = min(best, objective(u))
        assert got <= best * (1 + 1e-6) + 1e-12


class TestNeOracles:
    def test_two_direct(self):
        out = ne_oracle_two(np.array([2.0, -1.0]), np.array([1.0, 1.0]), gamma=10.0)
        assert np.array_equal(out, [1.0, 0.0])

    def test_two_identity(self):
        v = np.array([0.3, -0.7, 0.0])
        assert np.array_equal(ne_oracle_two(v, v, 1.0), v)

    def test_two_zero_entries(self):
        out = ne_oracle_two(np.array([0.0, 3.0]), np.array([5.0, 0.0]), gamma=10.0)
        assert np.array_equal(out, [0.0, 0.0])

    def test_tie_takes_first(self):
        out = ne_oracle_two(np.array([2.0]), np.array([2.0]), 10.0)
        assert out[0] == 2.0

    def test_multi_median(self):
        out = ne_oracle_multi([np.array([-1.0]), np.array([2.0]), np.array([5.0])], 10.0)
        assert out[0] == 2.0

    def test_multi_even_opposite_middles(self):
        vals = [np.array([-5.0]), np.array([-1.0]), np.array([2.0]), np.array([7.0])]
        assert ne_oracle_multi(vals, 10.0)[0] == 0.0

    def test_multi_even_same_sign_middles(self):
        vals = [np.array([-5.0]), np.array([1.0]), np.array([2.0]), np.array([7.0])]
        assert ne_oracle_multi(vals, 10.0)[0] == 1.0

    def test_multi_k2_matches_two(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            a, b = rng.standard_normal(4), rng.standard_normal(4)
            assert np.array_equal(ne_oracle_multi([a, b], 1.0), ne_oracle_two(a, b, 1.0))


class TestPlayGame:
    def test_identical_envs_recover_linear(self):
        rng = np.random.default_rng(2)
        X = orthogonal_design(50, 3, rng)
        w_star = np.array([0.5, -0.25, 0.75])
        env = linear_env(X, w_star)
        es = env_set([env, env])
        cfg = GameConfig(k=2, gamma=10.0, t=60.0, inner_tol=1e-12)
        att, state = play_game(es, cfg)
        assert state.converged
        assert state.rounds_used <= 2
        assert np.allclose(att.coefficients, w_star, atol=1e-8)
        assert att.intercept == pytest.approx(0.0, abs=1e-8)

    def test_1d_sign_elimination(self):
        rng = np.random.default_rng(3)
        a, b, gamma = 0.8, 0.6, 0.5
        envs = [linear_env(orthogonal_design(40, 1, rng), [a]),
                linear_env(orthogonal_design(40, 1, rng), [-b])]
        att, _ = play_game(env_set(envs), oracle_game_config(2, 1, gamma))
        assert att.coefficients[0] == pytest.approx(0.0, abs=1e-6)

    def test_1d_same_sign_keeps_smaller(self):
        rng = np.random.default_rng(4)
        a, b, gamma = 0.8, 0.5, 1.0
        envs = [linear_env(orthogonal_design(40, 1, rng), [a]),
                linear_env(orthogonal_design(40, 1, rng), [b])]
        att, _ = play_game(env_set(envs), oracle_game_config(2, 1, gamma))
        assert att.coefficients[0] == pytest.approx(b, abs=1e-6)

    def test_feasibility_invariant(self):
        rng = np.random.default_rng(5)
        envs = [Neighborhood(rng.standard_normal((20, 3)),
                             rng.standard_normal(20),
                             rng.uniform(0.1, 1, 20)) for _ in range(3)]
        cfg = GameConfig(k=3, gamma=0.4, t=1.2, max_rounds=50)
        att, state = play_game(env_set(envs), cfg)
        assert np.all(np.abs(state.w_tilde) <= cfg.gamma + cfg.inner_tol)
        assert np.abs(state.w_tilde.sum(axis=0)).sum() <= cfg.t + cfg.inner_tol
        assert np.allclose(state.w_tilde.sum(axis=0), att.coefficients)

    def test_fixed_point_when_converged(self):
        rng = np.random.default_rng(6)
        envs = [linear_env(orthogonal_design(60, 2, rng),
                           rng.uniform(0.1, 0.8, 2) * rng.choice([-1, 1], 2))
                for _ in range(2)]
        cfg = oracle_game_config(2, 2)
        att, state = play_game(env_set(envs), cfg)
        assert state.converged
        total = state.w_tilde.sum(axis=0)
        for i, env in enumerate(envs):
            others = total - state.w_tilde[i]
            again = best_response(i, others, env, cfg)
            assert np.linalg.norm(again - state.w_tilde[i]) <= cfg.epsilon

    def test_nonconvergence_is_flagged_not_raised(self):
        rng = np.random.default_rng(7)
        envs = [Neighborhood(rng.standard_normal((10, 4)),
                             rng.standard_normal(10), np.ones(10)) for _ in range(2)]
        cfg = GameConfig(k=2, gamma=0.5, t=2.0, max_rounds=1)
        att, state = play_game(env_set(envs), cfg)
        assert state.rounds_used == 1
        assert isinstance(att.intercept, float)

    def test_k_mismatch(self):
        rng = np.random.default_rng(8)
        envs = [linear_env(orthogonal_design(20, 2, rng), [0.1, 0.2])] * 2
        with pytest.raises(ValueError):
            play_game(env_set(envs), GameConfig(k=3, gamma=1.0, t=3.0))

    def test_intercept_is_weighted_mean_residual(self):
        rng = np.random.default_rng(9)
        X = rng.standard_normal((30, 2))
        y = rng.standard_normal(30) + 2.0
        w = rng.uniform(0.1, 1.0, 30)
        env = Neighborhood(X, y, w)
        es = env_set([env, env])
        att, state = play_game(es, GameConfig(k=2, gamma=5.0, t=20.0))
        expected = float(w @ (y - X @ att.coefficients) / w.sum())
        assert att.intercept == pytest.approx(expected, abs=1e-12)


class TestOracleAgreement:
    """The central solver check: the played game matches the closed-form
    equilibrium of the per-environment least-squares optima under exact
    coordinate independence."""

    def run_trials(self, k, trials=40, d=3, gamma=1.0, seed=0):
        rng = np.random.default_rng(seed)
        worst = 0.0
        branches = {"opposite": 0, "same": 0}
        for _ in range(trials):
            envs, stars = [], []
            for _ in range(k):
                X = orthogonal_design(60, d, rng)
                w_star = rng.uniform(0.05, 0.9, d) * rng.choice([-1.0, 1.0], d)
                envs.append(linear_env(X, w_star))
                stars.append(w_star)
            att, _ = play_game(env_set(envs), oracle_game_config(k, d, gamma))
            lsq = [weighted_lsq(e) for e in envs]
            oracle = ne_oracle_two(lsq[0], lsq[1], gamma) if k == 2 \
                else ne_oracle_multi(lsq, gamma)
            worst = max(worst, float(np.max(np.abs(att.coefficients - oracle))))
            if k == 2:
                for j in range(d):
                    branches["opposite" if stars[0][j] * stars[1][j] < 0 else "same"] += 1
        return worst, branches

    def test_two_envs(self):
        worst, branches = self.run_trials(k=2)
        assert worst <= 1e-3
        assert branches["opposite"] >= 20 and branches["same"] >= 20

    @pytest.mark.parametrize("k", [3, 4, 5])
    def test_multi_envs(self, k):
        worst, _ = self.run_trials(k=k, trials=25, seed=k)
        assert worst <= 1e-3

    def test_sign_elimination_property(self):
        # strictly opposite signs with magnitudes >= gamma eliminate exactly
        rng = np.random.default_rng(11)
        gamma = 0.4
        for _ in range(10):
            d = 3
            mags1 = rng.uniform(gamma, 3 * gamma, d)
            mags2 = rng.uniform(gamma, 3 * gamma, d)
            signs = rng.choice([-1.0, 1.0], d)
            envs = [linear_env(orthogonal_design(50, d, rng), signs * mags1),
                    linear_env(orthogonal_design(50, d, rng), -signs * mags2)]
            att, _ = play_game(env_set(envs), oracle_game_config(2, d, gamma))
            assert np.max(np.abs(att.coefficients)) <= 1e-3

    def test_conservatism_property(self):
        # same signs with gamma above both magnitudes keep the smaller one
        rng = np.random.default_rng(12)
        gamma = 1.0
        for _ in range(10):
            d = 3
            signs = rng.choice([-1.0, 1.0], d)
            m1 = rng.uniform(0.05, 0.9, d)
            m2 = rng.uniform(0.05, 0.9, d)
            envs = [linear_env(orthogonal_design(50, d, rng), signs * m1),
                    linear_env(orthogonal_design(50, d, rng), signs * m2)]
            att, _ = play_game(env_set(envs), oracle_game_config(2, d, gamma))
            assert np.allclose(np.abs(att.coefficients), np.minimum(m1, m2), atol=1e-3)
            assert np.allclose(np.sign(att.coefficients), signs)

    def test_median_law(self):
        rng = np.random.default_rng(13)
        for k in (3, 5):
            d = 2
            stars = [rng.uniform(0.05, 0.9, d) * rng.choice([-1.0, 1.0], d)
                     for _ in range(k)]
            envs = [linear_env(orthogonal_design(60, d, rng), s) for s in stars]
            att, _ = play_game(env_set(envs), oracle_game_config(k, d))
            med = np.median(np.stack(stars), axis=0)
            assert np.allclose(att.coefficients, med, atol=1e-3)


class TestSparsify:
    def _make_es(self, X, y):
        base = Neighborhood(X, y, np.ones(X.shape[0]))
        return EnvironmentSet(base, (base, base), Example(np.zeros(X.shape[1])))

    def test_budget_equals_dim(self):
        rng = np.random.default_rng(14)
        X = rng.standard_normal((30, 4))
        es = self._make_es(X, rng.standard_normal(30))
        assert sparsify(es, 4) == frozenset(range(4))

    def test_budget_exceeds_dim_clamped(self):
        rng = np.random.default_rng(15)
        X = rng.standard_normal((30, 4))
        es = self._make_es(X, rng.standard_normal(30))
        assert sparsify(es, 5) == frozenset(range(4))

    def test_dense_mode(self):
        rng = np.random.default_rng(16)
        X = rng.standard_normal((30, 6))
        es = self._make_es(X, rng.standard_normal(30))
        assert sparsify(es, 2, ridge_alt=0.001) == frozenset(range(6))

    def test_two_relevant_of_ten(self):
        rng = np.random.default_rng(17)
        X = orthogonal_design(80, 10, rng)
        y = X @ np.array([0, 0, 2.5, 0, 0, 0, -1.5, 0, 0, 0], dtype=float)
        es = self._make_es(X, y)
        assert sparsify(es, 2) == frozenset({2, 6})


class TestDefaultGamma:
    def test_max_absolute_rule(self):
        rng = np.random.default_rng(18)
        envs = [linear_env(orthogonal_design(60, 2, rng), [0.2, -0.5]),
                linear_env(orthogonal_design(60, 2, rng), [0.4, 0.1])]
        gamma = default_gamma(env_set(envs), K=2)
        assert gamma == pytest.approx(0.5, rel=1e-4)

    def test_constant_blackbox_degenerate(self):
        X = np.random.default_rng(19).standard_normal((20, 2))
        env = Neighborhood(X, np.full(20, 3.0), np.ones(20))
        with pytest.raises(DegenerateGammaError):
            default_gamma(env_set([env, env]), K=2)

    def test_linear_blackbox_within_ten_percent(self):
        rng = np.random.default_rng(20)
        w_star = np.array([0.8, -0.3, 0.45])
        envs = [linear_env(orthogonal_design(80, 3, rng), w_star) for _ in range(2)]
        gamma = default_gamma(env_set(envs), K=3)
        assert gamma == pytest.approx(np.abs(w_star).max(), rel=0.1)


def test_box_l1_compatibility_flag():
    cfg = GameConfig(k=2, gamma=0.5, t=2.0)
    assert cfg.box_l1_compatible(4)      # t = gamma * d exactly
    assert cfg.box_l1_compatible(3)
    assert not cfg.box_l1_compatible(5)  # t below gamma * d


def test_lambda_max_matches_eigvalsh():
    rng = np.random.default_rng(21)
    for _ in range(10):
        d = int(rng.integers(1, 6))
        A = rng.standard_normal((d, d))
        G = A @ A.T
        assert lambda_max(G) == pytest.approx(np.linalg.eigvalsh(G).max(), rel=1e-6)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 6), st.integers(0, 10_000))
def test_ne_oracle_two_componentwise_properties(d, seed):
    rng = np.random.default_rng(seed)
    w1 = rng.standard_normal(d)
    w2 = rng.standard_normal(d)
    out = ne_oracle_two(w1, w2, 1.0)
    for j in range(d):
        if w1[j] * w2[j] < 0:
            assert out[j] == 0.0
        else:
            assert abs(out[j]) == min(abs(w1[j]), abs(w2[j]))
            if out[j] != 0.0:
                assert np.sign(out[j]) == np.sign(w1[j] if abs(w1[j]) <= abs(w2[j]) else w2[j])
