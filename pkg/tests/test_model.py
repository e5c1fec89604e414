"""Dictionary families, coefficients, the decision rule, and serialization."""

import numpy as np
import pytest

from rejopt.losses import CostModel
from rejopt.model import (
    ClippedAffine,
    Coefficients,
    Dictionary,
    PointIndicator,
    RejectDecision,
    SignStump,
    Tabulated,
    classify,
    evaluate,
    l0_count,
    l1_norm,
)


def random_dictionary(rng, m=5, dim=2, c_f=1.5):
    fns = []
    for _ in range(m):
        kind = rng.integers(0, 4)
        if kind == 0:
            fns.append(SignStump(dim=int(rng.integers(0, dim)), threshold=float(rng.normal())))
        elif kind == 1:
            fns.append(
                ClippedAffine(
                    weights=tuple(float(v) for v in rng.normal(size=dim)),
                    intercept=float(rng.normal()),
                    clip=float(rng.uniform(0.5, c_f)),
                )
            )
        elif kind == 2:
            fns.append(PointIndicator(point=tuple(float(v) for v in rng.integers(0, 3, size=dim))))
        else:
            # tabulate the whole {0,1,2}^dim grid so any probe point resolves
            grid = [tuple(float(v) for v in divmod(i, 3)) for i in range(9)]
            fns.append(
                Tabulated(
                    points=tuple(grid),
                    values=tuple(float(v) for v in rng.uniform(-c_f, c_f, size=len(grid))),
                )
            )
    return Dictionary(fns, c_f=c_f)


class TestFamilies:
    def test_sign_stump(self):
        f = SignStump(dim=0, threshold=0.5)
        assert f.evaluate([0.5]) == 1.0
        assert f.evaluate([0.49]) == -1.0
        np.testing.assert_array_equal(
            f.evaluate_batch(np.array([[0.0], [1.0]])), [-1.0, 1.0]
        )

    def test_clipped_affine(self):
        f = ClippedAffine(weights=(2.0,), intercept=0.0, clip=1.0)
        assert f.evaluate([0.25]) == 0.5
        assert f.evaluate([5.0]) == 1.0
        assert f.evaluate([-5.0]) == -1.0

    def test_point_indicator(self):
        f = PointIndicator(point=(1.0, 0.0))
        assert f.evaluate([1.0, 0.0]) == 1.0
        assert f.evaluate([0.0, 0.0]) == 0.0

    def test_tabulated(self):
        f = Tabulated(points=((0.0,), (1.0,)), values=(1.0, -0.5))
        assert f.evaluate([1.0]) == -0.5
        with pytest.raises(KeyError):
            f.evaluate([2.0])

    def test_tabulated_rejects_duplicates(self):
        with pytest.raises(ValueError):
            Tabulated(points=((0.0,), (0.0,)), values=(1.0, 2.0))


class TestDictionary:
    def test_bound_verified_against_intrinsic(self):
        with pytest.raises(ValueError):
            Dictionary([ClippedAffine(weights=(1.0,), intercept=0.0, clip=2.0)], c_f=1.0)
        with pytest.raises(ValueError):
            Dictionary([Tabulated(points=((0.0,),), values=(3.0,))], c_f=1.0)

    def test_bound_verified_on_support(self):
        # intrinsic bound fine, but the declared c_f is tighter than a stump
        with pytest.raises(ValueError):
            Dictionary([SignStump(dim=0, threshold=0.0)], c_f=0.5)

    def test_support_check_passes(self):
        support = np.array([[0.0], [1.0]])
        Dictionary([SignStump(dim=0, threshold=0.5)], c_f=1.0, support=support)

    def test_empty_dictionary_rejected(self):
        with pytest.raises(ValueError):
            Dictionary([], c_f=1.0)

    def test_evaluate_matrix_matches_pointwise(self):
        rng = np.random.default_rng(0)
        dic = random_dictionary(rng)
        xs = np.array([[0.0, 0.0], [1.0, 2.0], [2.0, 1.0]])
        mat = dic.evaluate_matrix(xs)
        for i, x in enumerate(xs):
            np.testing.assert_array_equal(mat[i], dic.evaluate_point(x))


class TestEvaluateAndClassify:
    def setup_method(self):
        self.dic = Dictionary(
            [SignStump(dim=0, threshold=0.5), SignStump(dim=0, threshold=0.5)], c_f=1.0
        )

    def test_zero_coefficients(self):
        assert evaluate(self.dic, Coefficients.zeros(2), [1.0]) == 0.0

    def test_single_term(self):
        dic = Dictionary([ClippedAffine(weights=(0.0,), intercept=0.5, clip=1.0)], c_f=1.0)
        assert evaluate(dic, Coefficients(values=(2.0,)), [0.0]) == 1.0

    def test_cancellation(self):
        assert evaluate(self.dic, Coefficients(values=(1.0, -1.0)), [1.0]) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            evaluate(self.dic, Coefficients(values=(1.0,)), [1.0])

    def test_classify(self):
        cm = CostModel(d=0.25, tau=0.3)
        assert classify(0.5, cm) is RejectDecision.PLUS
        assert classify(0.2, cm) is RejectDecision.REJECT
        assert classify(-0.5, cm) is RejectDecision.MINUS
        assert classify(0.3, cm) is RejectDecision.REJECT

    def test_score_scale_covariance(self):
        rng = np.random.default_rng(1)
        dic = random_dictionary(rng)
        lam = Coefficients.from_array(rng.normal(size=len(dic)))
        x = np.array([1.0, 2.0])
        base = evaluate(dic, lam, x)
        for c in (0.5, 2.0, 7.0):
            scaled = Coefficients.from_array(c * lam.as_array())
            np.testing.assert_allclose(evaluate(dic, scaled, x), c * base, rtol=1e-12)

    def test_score_bounded_by_l1_times_cf(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            dic = random_dictionary(rng)
            lam = Coefficients.from_array(rng.normal(size=len(dic)))
            x = rng.integers(0, 3, size=2).astype(float)
            assert abs(evaluate(dic, lam, x)) <= lam.l1_norm() * dic.c_f + 1e-12


class TestCoefficients:
    def test_l1_examples(self):
        assert l1_norm(Coefficients(values=(0.0, 0.0, 0.0))) == 0.0
        assert l1_norm(Coefficients(values=(1.0, -2.0, 3.0))) == 6.0
        assert l1_norm(Coefficients(values=(0.5,))) == 0.5

    def test_l0_examples(self):
        assert l0_count(Coefficients(values=(0.0, 0.0, 0.0)), zero_tol=0.0) == 0
        assert l0_count(Coefficients(values=(1.0, 0.0, -0.5)), zero_tol=0.0) == 2
        assert l0_count(Coefficients(values=(1e-12, 1.0)), zero_tol=1e-10) == 1

    def test_support(self):
        lam = Coefficients(values=(0.0, 2.0, -1e-12, 3.0))
        assert lam.support() == (1, 3)

    def test_l0_zero_iff_l1_zero(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            vals = rng.normal(size=4) * rng.integers(0, 2, size=4)
            lam = Coefficients.from_array(vals)
            assert (lam.l1_norm() == 0.0) == (lam.l0_count(0.0) == 0)
            assert lam.l0_count(0.0) <= 4

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            Coefficients(values=(np.inf,))


class TestSerialization:
    def test_round_trip_bit_exact(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            dic = random_dictionary(rng)
            clone = Dictionary.from_yaml(dic.to_yaml())
            assert clone.c_f == dic.c_f
            assert clone.functions == dic.functions

    def test_round_trip_through_file(self, tmp_path):
        dic = Dictionary(
            [
                SignStump(dim=0, threshold=1.0 / 3.0),
                ClippedAffine(weights=(0.1, -0.2), intercept=1e-9, clip=1.0),
            ],
            c_f=1.0,
        )
        path = tmp_path / "dict.yaml"
        dic.save(path)
        clone = Dictionary.load(path)
        assert clone.functions == dic.functions

    def test_unknown_family_rejected(self):
        with pytest.raises(ValueError):
            Dictionary.from_yaml("c_f: 1.0\nfunctions:\n- family: mystery\n")
