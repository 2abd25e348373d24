import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bellvis.formats import load_fixture
from bellvis.lp import (
    CAPPED,
    DEGENERATE,
    OPTIMAL,
    BellWitness,
    LhvModel,
    LpProblem,
    NonterminationError,
    SizeError,
    StallError,
    extend_model,
    solve,
    solve_column_generation,
    solve_dense,
    verify_model,
    verify_witness,
)
from bellvis.predictions import SettingsSpec, build_prediction_matrix, fold_angles
from bellvis.strategies import StrategyPair, enumerate_canonical
from oracles import facet_formula, highs_vstar

R = math.sqrt(2) / 2
CHSH = np.array([[-R, R], [-R, -R]])
BACKENDS = [solve_dense, solve_column_generation]


def random_q(rng, max_n=5, max_m=5):
    return rng.uniform(-1, 1, size=(rng.integers(1, max_n + 1), rng.integers(1, max_m + 1)))


@pytest.fixture(params=BACKENDS, ids=["dense", "cg"])
def backend(request):
    return request.param


class TestExamples:
    def test_chsh(self, backend):
        res = backend(CHSH)
        assert res.status == OPTIMAL
        assert res.critical_v == pytest.approx(1 / math.sqrt(2), abs=1e-9)

    def test_single_pair(self, backend):
        res = backend([[-1.0]])
        assert res.status == OPTIMAL
        assert res.critical_v == pytest.approx(1.0, abs=1e-12)

    def test_strategy_matrix_itself(self, backend):
        res = backend(np.ones((2, 2)))
        assert res.status == OPTIMAL
        assert res.critical_v == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("name,expected,tol", [
        ("weinfurter-michler", 0.796, 1e-3),
        ("long-distance", 0.7366, 5e-4),
    ])
    def test_bundled_data(self, backend, name, expected, tol):
        res = backend(load_fixture(name))
        assert abs(res.critical_v - expected) <= tol

    def test_backends_agree_on_chsh(self):
        assert solve_dense(CHSH).critical_v == pytest.approx(solve_column_generation(CHSH).critical_v, abs=1e-9)


class TestSpecialCases:
    def test_zero_matrix(self, backend):
        res = backend(np.zeros((2, 3)))
        assert res.status == DEGENERATE
        assert math.isinf(res.critical_v)
        assert res.model is None and res.witness is None

    def test_cap_binds(self, backend):
        res = backend(LpProblem(0.1 * np.ones((2, 2)), v_cap=4.0))
        assert res.status == CAPPED
        assert res.critical_v == 4.0
        assert verify_model(res.model, 0.1 * np.ones((2, 2))).passed

    def test_lower_cap(self, backend):
        res = backend(LpProblem(CHSH, v_cap=0.5))
        assert res.status == CAPPED and res.critical_v == 0.5

    def test_dense_cap(self):
        with pytest.raises(SizeError, match="dense cap"):
            solve_dense(np.zeros((12, 11)) + 0.1)
        with pytest.raises(SizeError):
            solve_dense(CHSH, dense_cap=3)

    def test_iteration_limit_is_explicit(self):
        with pytest.raises(NonterminationError):
            solve_dense(load_fixture("weinfurter-michler"), max_iter=3)

    def test_stall_guard(self):
        # degenerate rounds on evenly spaced 4x4 settings leave V flat
        th = np.arange(4) * np.pi / 4
        q = -np.cos(th[:, None] - th[None, :] - np.pi / 8)
        with pytest.raises(StallError):
            solve_column_generation(LpProblem(q), columns_per_round=1, stall_window=1)

    @pytest.mark.parametrize("kwargs", [{"v_cap": 0}, {"tolerance": 0}, {"tolerance": 1e-2}])
    def test_problem_validation(self, kwargs):
        with pytest.raises(ValueError):
            LpProblem(CHSH, **kwargs)

    def test_auto_backend(self):
        assert solve(CHSH).diagnostics["backend"] == "dense"
        q = np.random.default_rng(0).uniform(-1, 1, (10, 9))
        res = solve(q)
        assert res.diagnostics["backend"] == "column_generation"
        assert verify_model(res.model, q).passed
        assert verify_witness(res.witness, q, res.critical_v).passed


class TestAgainstOracle:
    def test_random_matrices(self, backend):
        rng = np.random.default_rng(11)
        for _ in range(40):
            q = random_q(rng, 4, 4)
            assert backend(q).critical_v == pytest.approx(highs_vstar(q), abs=1e-7)

    def test_two_by_two_facets(self):
        rng = np.random.default_rng(5)
        for _ in range(300):
            q = rng.uniform(-1, 1, (2, 2))
            assert solve_dense(q).critical_v == pytest.approx(facet_formula(q), abs=1e-7)

    def test_quantum_three_by_three(self):
        # frozen from the HiGHS vertex LP for alpha = 0,60,120 deg, beta = 30,90,150 deg
        a, b = np.radians([0, 60, 120]), np.radians([30, 90, 150])
        q = -np.cos(a[:, None] - b[None, :])
        assert solve_dense(q).critical_v == pytest.approx(0.769800358919501, abs=1e-8)


class TestCertificates:
    def test_chsh_certificates(self, backend):
        res = backend(CHSH)
        assert verify_model(res.model, CHSH).passed
        rep = verify_witness(res.witness, CHSH, res.critical_v)
        assert rep.passed and rep.method == "exhaustive"
        assert rep.lhv_bound == pytest.approx(1, abs=1e-9)
        assert rep.quantum_value == pytest.approx(math.sqrt(2), abs=1e-7)

    def test_random_three_by_three(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            q = rng.uniform(-1, 1, (3, 3))
            res = solve_dense(q)
            assert verify_model(res.model, q).passed
            assert verify_witness(res.witness, q, res.critical_v).passed

    def test_hand_built_model(self):
        model = LhvModel([(StrategyPair((1, 1), (1, 1)), 1.0)], 1.0)
        rep = verify_model(model, np.ones((2, 2)))
        assert rep.passed and rep.max_deviation == 0

    def test_wrong_claimed_visibility(self):
        model = LhvModel([(StrategyPair((1, 1), (1, 1)), 1.0)], 0.5)
        rep = verify_model(model, np.ones((2, 2)))
        assert not rep.passed
        assert rep.max_deviation == pytest.approx(0.5)

    def test_normalized_chsh_witness(self):
        w = BellWitness(0.5 * np.array([[-1.0, 1.0], [-1.0, -1.0]]), 1.0, math.sqrt(2))
        rep = verify_witness(w, CHSH, 1 / math.sqrt(2))
        assert rep.passed
        assert rep.lhv_bound == pytest.approx(1)
        assert rep.quantum_value == pytest.approx(math.sqrt(2))

    def test_unnormalized_chsh_witness_fails_gap(self):
        # scale 1/(2 sqrt 2): lhv bound 1/sqrt(2), value 1, so c.Q != 1/V*
        w = BellWitness(np.array([[-1.0, 1.0], [-1.0, -1.0]]) / (2 * math.sqrt(2)), 1.0, 1.0)
        rep = verify_witness(w, CHSH, 1 / math.sqrt(2))
        assert rep.lhv_bound == pytest.approx(1 / math.sqrt(2))
        assert rep.quantum_value == pytest.approx(1.0)
        assert not rep.passed

    def test_zero_witness_fails(self):
        rep = verify_witness(BellWitness(np.zeros((2, 2)), 0.0, 0.0), CHSH, 1 / math.sqrt(2))
        assert not rep.passed

    def test_pricing_verification_for_large(self):
        q = np.random.default_rng(4).uniform(-1, 1, (12, 11))
        res = solve_column_generation(q)
        rep = verify_witness(res.witness, q, res.critical_v)
        assert rep.method == "pricing" and rep.passed
        assert verify_model(res.model, q).passed


class TestInvariants:
    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.2, 1.0))
    def test_gauge_scaling(self, seed, t):
        q = random_q(np.random.default_rng(seed), 4, 4)
        c = t / np.max(np.abs(q))
        r1, r2 = solve_dense(q), solve_dense(c * q)
        if r1.status == CAPPED:
            if c <= 1:
                assert r2.status == CAPPED
            return
        assert r2.critical_v == pytest.approx(min(4.0, r1.critical_v / c), abs=1e-7)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_relabeling(self, seed):
        rng = np.random.default_rng(seed)
        q = random_q(rng, 4, 4)
        v = solve_dense(q).critical_v
        p = q[rng.permutation(q.shape[0])][:, rng.permutation(q.shape[1])]
        assert solve_dense(p).critical_v == pytest.approx(v, abs=1e-9)
        f = q.copy()
        f[rng.integers(q.shape[0])] *= -1
        assert solve_dense(f).critical_v == pytest.approx(v, abs=1e-9)
        f = q.copy()
        f[:, rng.integers(q.shape[1])] *= -1
        assert solve_dense(f).critical_v == pytest.approx(v, abs=1e-9)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_rows_only_tighten(self, seed):
        rng = np.random.default_rng(seed)
        q = random_q(rng, 3, 4)
        v = solve_dense(q).critical_v
        dup = np.vstack([q, q[rng.integers(q.shape[0])]])
        assert solve_dense(dup).critical_v == pytest.approx(v, abs=1e-9)
        extra = np.vstack([q, rng.uniform(-1, 1, q.shape[1])])
        assert solve_dense(extra).critical_v <= v + 1e-9

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_convex_combination_is_local(self, seed):
        rng = np.random.default_rng(seed)
        n, m = rng.integers(1, 5, size=2)
        ps = list(enumerate_canonical(n, m))
        weights = rng.dirichlet(np.ones(len(ps)))
        q = sum(w * p.matrix() for w, p in zip(weights, ps))
        if np.max(np.abs(q)) > 1e-6:
            assert solve_dense(q).critical_v >= 1 - 1e-9

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_backend_equivalence(self, seed):
        q = random_q(np.random.default_rng(seed))
        a, b = solve_dense(q), solve_column_generation(q, threads=1)
        assert a.status == b.status
        assert a.critical_v == pytest.approx(b.critical_v, abs=1e-7)


class TestExtendModel:
    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.floats(0, 3.1, allow_nan=False), min_size=1, max_size=3, unique=True),
           st.lists(st.floats(0, 3.1, allow_nan=False), min_size=1, max_size=3, unique=True),
           st.lists(st.integers(-2, 2), min_size=1, max_size=4),
           st.lists(st.integers(-2, 2), min_size=1, max_size=4))
    def test_half_turn_copies(self, alpha, beta, ka, kb):
        alpha_full = [alpha[i % len(alpha)] + k * math.pi for i, k in enumerate(ka)] + alpha
        beta_full = [beta[i % len(beta)] + k * math.pi for i, k in enumerate(kb)] + beta
        ra, am = fold_angles(alpha_full)
        rb, bm = fold_angles(beta_full)
        small = solve(LpProblem(build_prediction_matrix(SettingsSpec(ra, rb)).values))
        q = build_prediction_matrix(SettingsSpec(alpha_full, beta_full)).values
        ext = extend_model(small.model, am, bm)
        assert verify_model(ext, q).passed
        assert solve(LpProblem(q)).critical_v == pytest.approx(small.critical_v, abs=1e-7)

    def test_merges_coinciding_pairs(self):
        model = LhvModel([(StrategyPair((1, 1), (1,)), 0.5), (StrategyPair((1, -1), (1,)), 0.5)], 1.0)
        ext = extend_model(model, [(0, 1)], [(0, 1)])
        assert ext.support == [(StrategyPair((1,), (1,)), 1.0)]


class TestNearDegenerate:
    """Nearly dependent rows and columns must not derail the pivoting."""

    CASES = {
        "near_collinear_settings": build_prediction_matrix(
            SettingsSpec([1.0, 1.0], [math.pi, 0.0, 1e-6])).values,
        "negated_rows_near_duplicate_columns": np.array([
            [-0.23041258, -0.69351328, -0.2304126, -0.69351334],
            [0.75291322, 0.38081089, 0.75291328, 0.38081093],
            [0.23041258, 0.69351328, 0.2304126, 0.69351334],
            [-0.75291322, -0.38081089, -0.75291328, -0.38081093],
        ]),
    }

    @pytest.mark.parametrize("name", sorted(CASES))
    def test_against_oracle(self, backend, name):
        q = self.CASES[name]
        res = backend(LpProblem(q))
        assert res.status == OPTIMAL
        # HiGHS works to a 1e-7 feasibility tolerance on data that differ at 1e-7
        assert res.critical_v == pytest.approx(highs_vstar(q), abs=2e-7)
        assert verify_model(res.model, q).passed
        assert verify_witness(res.witness, q, res.critical_v).passed
