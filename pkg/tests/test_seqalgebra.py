import random
from fractions import Fraction as F

import pytest

from gasketcalc.errors import ConfigurationError, VerificationError
from gasketcalc.seqalgebra import (
    RelationSpec,
    TAU_X,
    X,
    known,
    seq_from,
    seq_identity,
    seq_mul,
    seq_pow,
    seq_tau,
    solve_implicit_relation,
)

RHO_SG = F(1, 5)


def rand_seq(rng, degree=20, rho=RHO_SG):
    return seq_from(
        [F(rng.randint(-9, 9), rng.randint(1, 9)) for _ in range(degree + 1)], rho)


def test_identity_element():
    a = seq_from([1, F(1, 6), F(2, 7)], RHO_SG)
    assert seq_mul(seq_identity(2, RHO_SG), a).entries == a.entries


def test_cauchy_product_entry():
    a = seq_from([1, F(1, 6)], RHO_SG)
    assert seq_mul(a, a)[1] == F(1, 3)


def test_mul_commutative_and_associative():
    rng = random.Random(0)
    for _ in range(10):
        a, b, c = (rand_seq(rng) for _ in range(3))
        assert seq_mul(a, b).entries == seq_mul(b, a).entries
        assert seq_mul(seq_mul(a, b), c).entries == seq_mul(a, seq_mul(b, c)).entries


def test_mismatched_context_rejected():
    a = seq_from([1, 2], RHO_SG)
    with pytest.raises(ConfigurationError):
        seq_mul(a, seq_from([1, 2, 3], RHO_SG))
    with pytest.raises(ConfigurationError):
        seq_mul(a, seq_from([1, 2], F(1, 7)))


def test_tau_examples():
    assert seq_tau(seq_identity(3, RHO_SG)).entries == seq_identity(3, RHO_SG).entries
    a = seq_from([1, F(1, 6)], RHO_SG)
    assert seq_tau(a).entries == (F(1), F(5, 6))


def test_tau_linear_and_invertible():
    rng = random.Random(1)
    a, b = rand_seq(rng), rand_seq(rng)
    assert seq_tau(a + b).entries == (seq_tau(a) + seq_tau(b)).entries
    # tau with rho, then with 1/rho, recovers the input
    back = seq_tau(seq_tau(a).with_rho(1 / RHO_SG)).with_rho(RHO_SG)
    assert back.entries == a.entries


def test_solver_sg_alpha():
    rel = RelationSpec(TAU_X, 4 * X ** 2 - 3 * X, "alpha")
    alpha = solve_implicit_relation(rel, [1, F(1, 6)], 5, RHO_SG)
    assert alpha[2] == F(1, 180)
    assert alpha[3] == F(1, 16200)


def test_solver_sg3_and_hg_alpha2():
    rel3 = RelationSpec((1 + 6 * X) * TAU_X,
                        1 + 12 * X - 6 * X ** 2 - 96 * X ** 3 + 96 * X ** 4)
    alpha3 = solve_implicit_relation(rel3, [1, F(1, 6)], 3, F(7, 90))
    assert alpha3[2] == F(239, 44820)
    relh = RelationSpec((2 * X - 1) * TAU_X,
                        -1 + 4 * X + 14 * X ** 2 - 48 * X ** 3 + 32 * X ** 4)
    alphah = solve_implicit_relation(relh, [1, F(1, 6)], 3, F(1, 14))
    assert alphah[2] == F(17, 3276)


def test_solver_residual_is_exactly_zero():
    rel = RelationSpec(TAU_X, 4 * X ** 2 - 3 * X)
    alpha = solve_implicit_relation(rel, [1, F(1, 6)], 20, RHO_SG)
    assert rel.residual({}, alpha).is_zero()


def test_solver_zero_pivot_reported():
    # tau(x) = rho^{-j} x_j makes "tau(x) = x" unsolvable past degree 0
    rel = RelationSpec(TAU_X, X)
    with pytest.raises(VerificationError, match="degree 1"):
        solve_implicit_relation(rel, [1], 3, RHO_SG)


def test_solver_rejects_bad_seed():
    rel = RelationSpec(TAU_X, 4 * X ** 2 - 3 * X)
    with pytest.raises(VerificationError, match="seeded degree"):
        solve_implicit_relation(rel, [2], 3, RHO_SG)


def test_known_sequences_in_relations():
    rng = random.Random(2)
    alpha = rand_seq(rng, degree=6)
    # x = alpha solves tau(x) = tau(alpha) trivially; uses the env lookup
    rel = RelationSpec(TAU_X, known("alpha") * 0 + X * 0 +
                       seq_tau(alpha)[0] * 0 + X * 0 + TAU_X)
    # simpler: check evaluation of an expression against direct algebra
    expr = (2 * known("a") + 1) * (4 * known("a") + 1)
    spec = RelationSpec(X, expr)
    direct = seq_mul(alpha.scale(2) + seq_identity(6, RHO_SG),
                     alpha.scale(4) + seq_identity(6, RHO_SG))
    solved = solve_implicit_relation(spec, [direct[0]], 6, RHO_SG, {"a": alpha})
    assert solved.entries == direct.entries


def test_pow_matches_repeated_mul():
    rng = random.Random(3)
    a = rand_seq(rng, degree=8)
    assert seq_pow(a, 3).entries == seq_mul(seq_mul(a, a), a).entries
