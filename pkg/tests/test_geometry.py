from fractions import Fraction
import json

import pytest
from hypothesis import given, settings, strategies as st

from torsorlab.geometry import (
    ConeSpec, DivisorClass, GeometryError, MembershipError, NoFiniteInfimum, alpha_constant, b_invariant,
    cone_contains, cox_data, extremal_rays, invariants, is_simplicial, min_t_effective,
)


def test_x2_rank2_grading():
    d = cox_data("X", 2, rank=2)
    deg = {v: d.generator_degrees[v].coords for v in d.variables}
    assert d.anticanonical.coords == (4, 2)
    assert deg["b"] == deg["d"] == (2, 1)
    assert deg["a"] == deg["c"] == deg["z"] == (1, 0)
    assert deg["w"] == (0, 1)


def test_xprime3_anticanonical():
    assert cox_data("Xprime", 3).anticanonical.coords == (5, 4, 1, 2)


@pytest.mark.parametrize("n", range(2, 8))
def test_relation_degree_matches_both_monomials(n):
    d = cox_data("X", n, rank=2)
    g = d.generator_degrees
    assert d.relation_degree == g["a"] + g["d"] == g["z"].scaled(n + 1) + g["w"]
    assert d.relation_degree.coords == (n + 1, 1)


@pytest.mark.parametrize("family,rank", [("X", 2), ("X", 3), ("Xprime", None)])
@pytest.mark.parametrize("n", [2, 3, 5])
def test_adjunction(family, rank, n):
    d = cox_data(family, n, rank=rank)
    total = DivisorClass((0,) * d.rank)
    for v in d.variables:
        total = total + d.generator_degrees[v]
    assert d.anticanonical == total - d.relation_degree


def test_cox_data_rejects_small_n():
    with pytest.raises(ValueError):
        cox_data("X", 1)


def test_grading_json_shape():
    payload = json.loads(cox_data("X", 2, rank=2).to_json())
    assert set(payload) == {"family", "n", "rank", "degrees", "antiK", "relation"}
    assert payload["antiK"] == [4, 2]


def test_min_t_x2_example():
    cone = ConeSpec(((1, 0), (2, 1), (0, 1)))
    t = min_t_effective(cone, (2, 1), (-4, -2))
    assert t == 2
    assert t * Fraction(2, 4) == 1  # scaled by n/(n+2)


def test_min_t_anticanonical_is_one():
    d = cox_data("Xprime", 2)
    K = [-x for x in d.anticanonical.coords]
    assert min_t_effective(d.effective_cone(), d.anticanonical, K) == 1


def test_min_t_infeasible():
    cone = ConeSpec(((1, 0),))
    with pytest.raises(NoFiniteInfimum):
        min_t_effective(cone, (1, 0), (0, -1))


@pytest.mark.parametrize("n", range(2, 11))
def test_a_invariants(n):
    assert invariants("X", n).a == Fraction(2 * n, n + 2)
    assert invariants("Xprime", n).a == Fraction(2 * n + 2, n + 3)


def test_a_invariant_x3():
    assert invariants("X", 3).a == Fraction(6, 5)


@pytest.mark.parametrize("n", range(2, 11))
def test_b_invariants(n):
    assert invariants("X", n).b == (2 if n == 2 else 1)
    assert invariants("Xprime", n).b == 1


def test_b_invariant_examples():
    cone = cox_data("X", 2, rank=2).effective_cone()
    assert b_invariant(cone, (0, 0)) == 2
    cone3 = cox_data("X", 3, rank=2).effective_cone()
    assert b_invariant(cone3, (1, 0)) == 1


def test_b_invariant_outside_cone():
    with pytest.raises(MembershipError):
        b_invariant(ConeSpec(((1, 0), (0, 1))), (-1, 0))


@pytest.mark.parametrize("n", range(2, 11))
def test_xprime_residual_direction(n):
    res = invariants("Xprime", n).residual
    target = (n + 2, n + 1, 1, 0)
    k = res[0] / target[0]
    assert k > 0
    assert all(r == k * t for r, t in zip(res, target))
    assert k == Fraction(n - 1, n + 3)


def test_extremal_rays_small():
    cone = ConeSpec(((1, 0), (0, 1), (2, 1)))
    assert sorted(r.coords for r in extremal_rays(cone)) == [(0, 1), (1, 0)]
    assert is_simplicial(cone)


def test_xprime2_effective_cone_not_simplicial():
    cone = ConeSpec(((1, 1, -1), (2, 1, 1), (1, 0, 0), (0, 1, 0), (0, 0, 1)))
    assert len(extremal_rays(cone)) >= 4
    assert not is_simplicial(cone)


@pytest.mark.parametrize("n", range(2, 11))
def test_simpliciality_of_models(n):
    assert is_simplicial(cox_data("X", n, rank=2).effective_cone())
    assert not is_simplicial(cox_data("Xprime", n).effective_cone())


def test_alpha_x2():
    d = cox_data("X", 2, rank=2)
    assert alpha_constant(d.effective_cone(), d.anticanonical.coords) == Fraction(1, 8)


def test_mixed_rank_cone_rejected():
    with pytest.raises(GeometryError):
        ConeSpec(((1, 0), (1, 0, 0)))


vec2 = st.tuples(st.integers(0, 6), st.integers(0, 6)).filter(lambda v: v != (0, 0))


@settings(max_examples=60, deadline=None)
@given(st.permutations(range(3)), st.lists(vec2, max_size=3), st.integers(2, 6))
def test_min_t_permutation_and_redundancy(perm, extra, n):
    gens = [(1, 0), (n, 1), (0, 1)]
    L, K = (n, 1), (-(n + 2), -2)
    base = min_t_effective(ConeSpec(tuple(gens)), L, K)
    shuffled = [gens[i] for i in perm]
    # nonnegative vectors are inside the first quadrant, hence redundant here
    assert min_t_effective(ConeSpec(tuple(shuffled + extra)), L, K) == base


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 5), st.integers(0, 5), st.integers(0, 5))
def test_cone_contains_nonnegative_combinations(x, y, z):
    cone = ConeSpec(((1, 1, -1), (2, 1, 1), (1, 0, 0), (0, 1, 0), (0, 0, 1)))
    v = (x + 2 * y, x + y, -x + y + z)
    assert cone_contains(cone, v)
