import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from svperturb.errors import InvalidInputError, InvalidParameterError
from svperturb.matcore import (
    FROBENIUS,
    MAX_ABS,
    NUCLEAR,
    OPERATOR,
    TWO_INF,
    NormSpec,
    SvdFactors,
    apply_norm,
    as_matrix,
    check_orthonormal,
    effective_rank,
    gauge,
    kyfan,
    norm_spec_from_token,
    orth_projector,
    schatten,
    singular_values,
    svd,
)

RNG = np.random.default_rng(20240814)


def random_matrix(n, m, seed):
    return np.random.default_rng(seed).standard_normal((n, m))


finite_vals = st.lists(
    st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, width=64),
    min_size=1,
    max_size=12,
)


class TestGauge:
    def test_empty_is_zero(self):
        assert gauge(np.array([]), OPERATOR) == 0.0
        assert gauge(np.array([0.0, 0.0]), NUCLEAR) == 0.0

    def test_operator_is_max_abs(self):
        v = np.array([3.0, -7.0, 2.0])
        assert gauge(v, OPERATOR) == 7.0

    def test_nuclear_is_abs_sum(self):
        v = np.array([1.0, -2.0, 3.0])
        assert gauge(v, NUCLEAR) == pytest.approx(6.0)

    def test_frobenius_is_l2(self):
        v = np.array([3.0, 4.0])
        assert gauge(v, FROBENIUS) == pytest.approx(5.0)

    def test_kyfan_partial_sum(self):
        v = np.array([5.0, 3.0, 1.0, 0.5])
        assert gauge(v, kyfan(2)) == pytest.approx(8.0)

    def test_schatten_interpolates(self):
        v = np.array([2.0, 1.0])
        assert gauge(v, schatten(3)) == pytest.approx((8.0 + 1.0) ** (1.0 / 3.0))

    @given(finite_vals)
    @settings(max_examples=60, deadline=None)
    def test_kyfan1_equals_operator(self, vals):
        v = np.asarray(vals)
        assert gauge(v, kyfan(1)) == pytest.approx(gauge(v, OPERATOR))

    @given(finite_vals)
    @settings(max_examples=60, deadline=None)
    def test_full_kyfan_equals_nuclear(self, vals):
        v = np.asarray(vals)
        assert gauge(v, kyfan(len(vals))) == pytest.approx(gauge(v, NUCLEAR))

    @given(finite_vals)
    @settings(max_examples=60, deadline=None)
    def test_schatten2_equals_frobenius(self, vals):
        v = np.asarray(vals)
        assert gauge(v, schatten(2)) == pytest.approx(gauge(v, FROBENIUS), abs=1e-9)

    @given(finite_vals)
    @settings(max_examples=60, deadline=None)
    def test_dominance_chain(self, vals):
        v = np.asarray(vals)
        op = gauge(v, OPERATOR)
        fro = gauge(v, FROBENIUS)
        nuc = gauge(v, NUCLEAR)
        tol = 1e-9 * max(1.0, nuc)
        assert op <= fro + tol
        assert fro <= nuc + tol

    @given(finite_vals, st.floats(min_value=0.0, max_value=100.0))
    @settings(max_examples=60, deadline=None)
    def test_homogeneous(self, vals, c):
        v = np.asarray(vals)
        for spec in (OPERATOR, FROBENIUS, NUCLEAR, schatten(3), kyfan(2)):
            lhs = gauge(c * v, spec)
            rhs = c * gauge(v, spec)
            assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)

    def test_sign_and_order_invariant(self):
        v = np.array([1.0, -4.0, 2.5])
        w = np.array([4.0, 2.5, 1.0])
        for spec in (OPERATOR, FROBENIUS, NUCLEAR, schatten(1.5), kyfan(2)):
            assert gauge(v, spec) == pytest.approx(gauge(w, spec))

    def test_large_values_no_overflow(self):
        v = np.array([1e200, 5e199])
        assert np.isfinite(gauge(v, schatten(4)))


class TestNormSpec:
    def test_schatten_needs_p_at_least_one(self):
        with pytest.raises(InvalidParameterError):
            schatten(0.5)

    def test_kyfan_needs_positive_int(self):
        with pytest.raises(InvalidParameterError):
            kyfan(0)
        with pytest.raises(InvalidParameterError):
            NormSpec("kyfan", k=-2)

    def test_unknown_kind(self):
        with pytest.raises(InvalidParameterError):
            NormSpec("spectralish")

    def test_invariant_flags(self):
        assert OPERATOR.invariant
        assert FROBENIUS.invariant
        assert NUCLEAR.invariant
        assert schatten(3).invariant
        assert kyfan(2).invariant
        assert not TWO_INF.invariant
        assert not MAX_ABS.invariant

    def test_labels(self):
        assert OPERATOR.label == "operator"
        assert kyfan(3).label == "kyfan3"
        assert schatten(2).label == "schatten2"

    def test_token_roundtrip(self):
        for tok in ("operator", "frobenius", "nuclear", "kyfan4", "schatten2.5", "two_inf", "max"):
            spec = norm_spec_from_token(tok)
            assert spec.label == tok

    def test_bad_token(self):
        with pytest.raises(InvalidParameterError):
            norm_spec_from_token("kyfan")
        with pytest.raises(InvalidParameterError):
            norm_spec_from_token("elephant")


class TestApplyNorm:
    def test_matches_numpy_on_random(self):
        a = random_matrix(9, 6, 1)
        assert apply_norm(a, OPERATOR) == pytest.approx(np.linalg.norm(a, 2))
        assert apply_norm(a, FROBENIUS) == pytest.approx(np.linalg.norm(a, "fro"))
        assert apply_norm(a, NUCLEAR) == pytest.approx(np.linalg.norm(a, "nuc"))

    def test_two_inf_is_max_row_length(self):
        a = np.array([[3.0, 4.0], [1.0, 0.0]])
        assert apply_norm(a, TWO_INF) == pytest.approx(5.0)

    def test_max_abs_entry(self):
        a = np.array([[1.0, -9.0], [2.0, 3.0]])
        assert apply_norm(a, MAX_ABS) == 9.0

    def test_kyfan_beyond_rank_rejected(self):
        a = random_matrix(4, 3, 2)
        with pytest.raises(InvalidParameterError):
            apply_norm(a, kyfan(4))

    def test_unitary_invariance(self):
        a = random_matrix(8, 5, 3)
        q1, _ = np.linalg.qr(random_matrix(8, 8, 4))
        q2, _ = np.linalg.qr(random_matrix(5, 5, 5))
        for spec in (OPERATOR, FROBENIUS, NUCLEAR, schatten(3), kyfan(2)):
            assert apply_norm(q1 @ a @ q2, spec) == pytest.approx(
                apply_norm(a, spec), rel=1e-9
            )

    def test_two_inf_not_left_invariant(self):
        a = np.zeros((3, 2))
        a[0, 0] = 1.0
        q = np.array(
            [
                [1 / np.sqrt(3), -np.sqrt(2.0 / 3.0), 0.0],
                [1 / np.sqrt(3), 1 / np.sqrt(6), -1 / np.sqrt(2)],
                [1 / np.sqrt(3), 1 / np.sqrt(6), 1 / np.sqrt(2)],
            ]
        )
        assert apply_norm(q @ a, TWO_INF) != pytest.approx(apply_norm(a, TWO_INF))

    def test_submultiplicative_sandwich(self):
        a = random_matrix(6, 6, 6)
        b = random_matrix(6, 6, 7)
        for spec in (FROBENIUS, NUCLEAR, schatten(3), kyfan(2)):
            lhs = apply_norm(a @ b, spec)
            assert lhs <= apply_norm(a, OPERATOR) * apply_norm(b, spec) + 1e-9
            assert lhs <= apply_norm(a, spec) * apply_norm(b, OPERATOR) + 1e-9


class TestSvd:
    def test_reconstruction_and_orthonormality(self):
        a = random_matrix(7, 5, 8)
        fac = svd(a)
        fac.validate(a)  # raises on failure
        assert np.allclose(fac.left @ np.diag(fac.singulars) @ fac.right.T, a)

    def test_descending_order(self):
        fac = svd(random_matrix(10, 4, 9))
        assert np.all(np.diff(fac.singulars) <= 1e-12)

    def test_sign_convention_deterministic(self):
        a = random_matrix(6, 6, 10)
        f1 = svd(a)
        f2 = svd(a.copy())
        assert np.array_equal(f1.left, f2.left)
        first_rows = f1.left[np.argmax(np.abs(f1.left) > 1e-12, axis=0), np.arange(6)]
        assert np.all(first_rows >= 0)

    def test_matches_known_diagonal(self):
        a = np.diag([3.0, 2.0, 1.0])
        fac = svd(a)
        assert np.allclose(fac.singulars, [3.0, 2.0, 1.0])

    def test_singular_values_shortcut(self):
        a = random_matrix(5, 8, 11)
        assert np.allclose(singular_values(a), svd(a).singulars)

    def test_rejects_nonfinite(self):
        a = np.ones((3, 3))
        a[1, 1] = np.nan
        with pytest.raises(InvalidInputError):
            svd(a)

    def test_rejects_non_2d(self):
        with pytest.raises(InvalidInputError):
            as_matrix(np.ones(4))

    def test_factor_shape_mismatch_rejected(self):
        fac = svd(random_matrix(5, 4, 12))
        with pytest.raises(InvalidInputError):
            SvdFactors(fac.left[:, :2], fac.singulars, fac.right)

    def test_ascending_singulars_rejected(self):
        fac = svd(random_matrix(5, 4, 13))
        with pytest.raises(InvalidInputError):
            SvdFactors(fac.left, fac.singulars[::-1].copy(), fac.right)


class TestEffectiveRank:
    def test_exact_rank(self):
        u = np.linalg.qr(random_matrix(8, 3, 14))[0]
        v = np.linalg.qr(random_matrix(6, 3, 15))[0]
        a = u @ np.diag([5.0, 2.0, 1.0]) @ v.T
        assert effective_rank(svd(a), 1e-10) == 3

    def test_zero_matrix(self):
        assert effective_rank(svd(np.zeros((4, 4))), 1e-10) == 0

    def test_threshold_is_relative(self):
        a = np.diag([1.0, 1e-12])
        assert effective_rank(svd(a), 1e-10) == 1
        assert effective_rank(svd(a), 1e-14) == 2

    def test_negative_tol_rejected(self):
        with pytest.raises(InvalidParameterError):
            effective_rank(svd(np.eye(3)), -1.0)


class TestOrthonormal:
    def test_projector(self):
        b = np.linalg.qr(random_matrix(9, 4, 16))[0]
        p = orth_projector(b)
        assert np.allclose(p @ p, p)
        assert np.allclose(p @ b, b)

    def test_check_rejects_skew(self):
        b = np.linalg.qr(random_matrix(9, 4, 17))[0]
        b = b + 1e-3
        with pytest.raises(InvalidInputError):
            check_orthonormal(b)
