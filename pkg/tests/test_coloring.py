import math
import random

import pytest

from cdcount import (
    ColoringInstance,
    Graph,
    count_color,
    derive_constants,
    exact_z_coloring,
    marginal_error_profile,
    phi,
    phi_vector,
    required_depth,
    theoretical_error_bound,
)
from cdcount.coloring import DecayConstants, contraction_terms
from cdcount.errors import ConditionViolated, Epsilon0OutOfRange, GreedyStuck, ZeroDenominator
from cdcount.oracle import exact_marginals_coloring

from instances import cycle, path, random_lists, random_triangle_free, star

C = derive_constants(3.0, 20.0)


class TestConstants:
    def test_alpha3_beta20(self):
        assert C.epsilon0 == pytest.approx(0.0570321345780702, abs=1e-12)
        assert C.epsilon == pytest.approx(0.00416312379420547, abs=1e-12)
        assert C.clamp_beta == 0.05

    def test_identities(self):
        g = 3.0 * math.exp(-(1 / 3.0) * (1 + 1 / 20.0))
        assert 2 * (1 + C.epsilon0) == pytest.approx(g, rel=1e-15)
        assert 1 - C.epsilon == pytest.approx(1 / ((1 - 1 / 20.0) * (1 + C.epsilon0)),
                                              rel=1e-15)

    def test_beta15_violates(self):
        with pytest.raises(ConditionViolated):
            derive_constants(3.0, 15.0)

    def test_large_beta_limit(self):
        c = derive_constants(3.0, 1e9)
        assert c.epsilon0 == pytest.approx(3 * math.exp(-1 / 3) / 2 - 1, abs=1e-8)
        assert c.epsilon0 == pytest.approx(0.0748, abs=1e-4)

    def test_epsilon0_out_of_range(self):
        with pytest.raises(Epsilon0OutOfRange) as info:
            derive_constants(4.0, 50.0)
        assert info.value.epsilon0 >= 0.1


class TestDepthAndBound:
    def test_required_depth(self):
        assert required_depth(10, 0.5) == 14
        assert required_depth(2, 1 - math.exp(-1)) == 3
        # the theoretical depth is far beyond what tests can evaluate
        assert required_depth(10, C.epsilon) == 2208

    def test_required_depth_rejects(self):
        with pytest.raises(ValueError):
            required_depth(1, 0.5)
        with pytest.raises(ValueError):
            required_depth(10, 1.0)

    def test_bound_values(self):
        assert theoretical_error_bound(26, 2, 20.0, 0.1, 0, 1) == pytest.approx(3.360683127,
                                                                               abs=1e-9)
        assert theoretical_error_bound(26, 2, 20.0, 1.0, 3, 1) == 0.0

    def test_bound_doubling(self):
        for d in (1, 3, 7):
            b1 = theoretical_error_bound(26, 2, 20.0, 0.2, d, 2)
            b2 = theoretical_error_bound(26, 2, 20.0, 0.2, 2 * d, 2)
            assert b2 == pytest.approx(b1 * 0.8 ** d, rel=1e-12)


class TestPhi:
    def test_outside_list(self):
        inst = ColoringInstance.build(path(2), 30, [list(range(1, 27)), list(range(2, 28))])
        for d in range(4):
            assert phi(inst, 1, 1, d, C) == 0.0
            assert phi(inst, 0, 30, d, C) == 0.0

    def test_isolated(self):
        inst = ColoringInstance.full(Graph.from_edges(1, []), 26)
        for d in range(4):
            assert phi(inst, 0, 7, d, C) == 1 / 26

    def test_edge_depth_one(self):
        inst = ColoringInstance.full(path(2), 26)
        vec = phi_vector(inst, 0, 1, C)
        for i in range(1, 27):
            assert vec[i] == pytest.approx(1 / 26, rel=1e-15)

    def test_depth_zero_uniform(self):
        inst = random_lists(random.Random(1), cycle(5), 30, 26, 28)
        for v in range(5):
            vec = phi_vector(inst, v, 0, C)
            for i in inst.lists[v]:
                assert vec[i] == 1 / len(inst.lists[v])

    def test_clamps_apply(self):
        # small lists make the ratio exceed 1/beta; the clamp caps it
        inst = ColoringInstance.full(path(2), 4)
        vec = phi_vector(inst, 0, 2, C)
        assert max(vec) == pytest.approx(1 / 20)
        fb = DecayConstants.fallback(3.0, 20.0)
        assert fb.degree_coef == 0.0
        assert max(phi_vector(inst, 0, 2, fb)) == pytest.approx(1 / 20)

    def test_deterministic(self):
        inst = random_lists(random.Random(5), cycle(6), 30, 26)
        a = phi_vector(inst, 2, 3, C)
        b = phi_vector(inst, 2, 3, C)
        assert a == b

    def test_negative_depth(self):
        with pytest.raises(ValueError):
            phi_vector(ColoringInstance.full(path(2), 26), 0, -1, C)


class TestCountColor:
    def test_single_node(self):
        res = count_color(ColoringInstance.full(Graph.from_edges(1, []), 26), 3)
        assert res.log_z_hat == pytest.approx(math.log(26), rel=1e-15)
        assert len(res.steps) == 1

    def test_edge(self):
        res = count_color(ColoringInstance.full(path(2), 26), 2)
        assert math.exp(res.log_z_hat) == pytest.approx(650.0, rel=1e-9)
        assert exact_z_coloring(ColoringInstance.full(path(2), 26)) == 650

    def test_path6(self):
        inst = ColoringInstance.full(path(6), 26)
        res = count_color(inst, 3)
        assert abs(res.log_z_hat - math.log(exact_z_coloring(inst))) <= 0.01

    def test_log_z_is_sum_of_steps(self):
        inst = random_lists(random.Random(3), cycle(5), 30, 26)
        res = count_color(inst, 2)
        assert res.log_z_hat == -sum(math.log(s.p_hat) for s in res.steps)
        assert all(0 < s.p_hat <= 1 for s in res.steps)
        assert [s.node for s in res.steps] == list(range(5))
        assert res.theoretical_error is not None and res.theoretical_error > 0

    def test_isolated_nodes_product(self):
        rng = random.Random(9)
        inst = random_lists(rng, Graph.from_edges(6, []), 40, 20, 40)
        res = count_color(inst, 2)
        want = sum(math.log(len(lst)) for lst in inst.lists)
        assert abs(res.log_z_hat - want) <= 1e-12 * 6

    def test_condition_violated(self):
        inst = ColoringInstance.full(path(3), 10)
        with pytest.raises(ConditionViolated):
            count_color(inst, 2)
        res = count_color(inst, 2, force=True)
        assert any("list_size" in n for n in res.notes)
        # out of regime the 1/beta clamp binds and biases the estimate
        assert res.steps[0].p_hat == 0.05
        assert res.log_z_hat > math.log(exact_z_coloring(inst)) + 1.0

    def test_forced_without_constants(self):
        inst = ColoringInstance.full(cycle(4), 6)
        res = count_color(inst, 3, alpha=3.0, beta=15.0, force=True)
        assert res.theoretical_error is None
        assert any("degree clamp disabled" in n for n in res.notes)

    def test_greedy_failure_surfaces(self):
        inst = ColoringInstance.build(path(2), 3, [[1], []])
        with pytest.raises(GreedyStuck):
            count_color(inst, 1, force=True)

    def test_zero_denominator_out_of_regime(self):
        g = Graph.from_edges(5, [(0, 3), (0, 4), (1, 3), (1, 4), (2, 3)])
        inst = ColoringInstance.build(g, 3, [[1, 2], [1], [1], [1, 2], [3]])
        with pytest.raises(ZeroDenominator):
            count_color(inst, 3, alpha=1.0, beta=1.0, force=True)

    def test_explicit_constants(self):
        inst = ColoringInstance.full(path(3), 26)
        a = count_color(inst, 2)
        b = count_color(inst, 2, consts=C)
        assert a.log_z_hat == b.log_z_hat


class TestProfile:
    def test_single_node(self):
        inst = ColoringInstance.full(Graph.from_edges(1, []), 26)
        rows = marginal_error_profile(inst, C, 3)
        assert [r.max_abs_log_err for r in rows] == [0.0] * 4

    def test_edge_exact_at_depth_one(self):
        rows = marginal_error_profile(ColoringInstance.full(path(2), 26), C, 2)
        assert rows[1].max_abs_log_err <= 1e-15

    def test_path5_within_bound(self):
        inst = random_lists(random.Random(2), path(5), 30, 26, 26)
        rows = marginal_error_profile(inst, C, 4)
        assert all(r.violations == 0 for r in rows)
        assert rows[3].max_abs_log_err <= rows[3].max_bound


class TestInvariants:
    @pytest.mark.parametrize("seed", range(6))
    def test_recursion_bounds_on_every_tree_node(self, seed):
        rng = random.Random(seed)
        g = cycle(rng.randint(4, 6)) if seed % 2 else path(rng.randint(3, 6))
        inst = random_lists(rng, g, 30, 26, 26)
        q, delta, beta = inst.q, g.max_degree, 20.0
        seen = [0]

        def obs(st, v, d, m, out):
            seen[0] += 1
            cols = st.colors(v)
            cap = min(1 / beta, 1 / (2 * (1 + C.epsilon0) * m)) if m else 1 / beta
            assert sum(out) <= 1.0 + 1e-12
            for c in cols:
                assert out[c] <= cap + 1e-15
                assert out[c] >= (1 - 1 / beta) ** delta / q

        for v in range(g.node_count):
            phi_vector(inst, v, 3, C, observer=obs)
        assert seen[0] > g.node_count

    @pytest.mark.parametrize("seed", range(6))
    def test_contraction(self, seed):
        rng = random.Random(seed)
        g = random_triangle_free(rng, rng.randint(2, 5), max_degree=2)
        if g.max_degree == 0:
            g = path(3)
        inst = random_lists(rng, g, 30, 26, 28)
        for v in range(g.node_count):
            if g.degree(v) == 0:
                continue
            for d in (1, 2):
                lhs, rhs = contraction_terms(inst, v, d, C)
                assert lhs <= rhs + 1e-12

    def test_marginals_sum(self):
        inst = random_lists(random.Random(11), star(2), 30, 26)
        for d in range(4):
            assert sum(phi_vector(inst, 0, d, C)) <= 1.0 + 1e-12
        exact = exact_marginals_coloring(inst, 0)
        assert sum(exact.values()) == 1
