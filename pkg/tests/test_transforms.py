import json

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from oracles import legacy_mu_minus, quantile_bisect
from ssda.data import Dataset, code_binary
from ssda.errors import DimensionMismatchError, InsufficientClassDataError, LegacyDegenerateError
from ssda.transforms import (
    TransformModel,
    apply_transform,
    fit_ecdf,
    fit_legacy,
    fit_multiclass_pooled,
    fit_naive,
    fit_pooled,
    fit_transform,
    generalized_inverse,
    identity_transform,
)

Z_09375 = 1.5341205443525463117  # bisection oracle, Phi^-1(1 - 1/16)
Z_075 = 0.6744897501960817432  # bisection oracle, Phi^-1(0.75)


def two_class(pos, neg, pos_label="p", neg_label="q"):
    """One- or multi-feature dataset from per-class value lists."""
    pos = np.asarray(pos, dtype=float).reshape(len(pos), -1)
    neg = np.asarray(neg, dtype=float).reshape(len(neg), -1)
    y = np.array([pos_label] * len(pos) + [neg_label] * len(neg), dtype=object)
    return Dataset(np.vstack([pos, neg]), y)


# ------------------------------------------------------------------ ECDF


class TestEcdf:
    table = fit_ecdf([1, 2, 3, 4], 0.25, 0.75)

    def test_interior(self):
        assert self.table.evaluate(2.0) == 0.5

    def test_clipped_above(self):
        assert self.table.evaluate(4.0) == 0.75

    def test_clipped_below(self):
        assert self.table.evaluate(0.0) == 0.25

    def test_right_continuous_with_ties(self):
        t = fit_ecdf([1, 2, 2, 3], 0.01, 0.99)
        assert t.raw(2.0) == 0.75
        assert t.raw(np.nextafter(2.0, 0)) == 0.25

    def test_too_few_values(self):
        with pytest.raises(InsufficientClassDataError):
            fit_ecdf([1.0], 0.1, 0.9)

    def test_bad_bounds(self):
        with pytest.raises(ValueError):
            fit_ecdf([1.0, 2.0], 0.6, 0.4)

    def test_degenerate_maps_to_upper_bound(self):
        t = fit_ecdf([3.0, 3.0, 3.0], 0.1, 0.9)
        assert t.degenerate
        assert np.all(t.evaluate([-10.0, 3.0, 10.0]) == 0.9)

    def test_generalized_inverse(self):
        t = fit_ecdf([1, 2, 3, 4], 0.2, 0.8)
        assert generalized_inverse(t, 0.2) == 1.0
        assert generalized_inverse(t, 0.25) == 1.0
        assert generalized_inverse(t, 0.26) == 2.0
        assert generalized_inverse(t, 0.8) == 4.0

    @given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=40),
           st.lists(st.floats(-2e6, 2e6), min_size=1, max_size=20))
    def test_bounded_and_nondecreasing(self, values, queries):
        n = len(values)
        a = 1.0 / n**2
        t = fit_ecdf(values, a, 1 - a)
        q = np.sort(np.asarray(queries))
        out = t.evaluate(q)
        assert np.all((out >= a) & (out <= 1 - a))
        assert np.all(np.diff(out) >= 0)


# ------------------------------------------------------------------ naive


class TestNaive:
    data = two_class([1, 2, 3, 4], [0.5, 2.5])

    def test_center(self):
        assert fit_naive(self.data).apply([[2.0]])[0, 0] == 0.0

    def test_upper_clip(self):
        assert fit_naive(self.data).apply([[4.0]])[0, 0] == pytest.approx(Z_09375, abs=1e-13)

    def test_constant_extrapolation(self):
        m = fit_naive(self.data)
        assert m.apply([[100.0]])[0, 0] == m.apply([[4.0]])[0, 0]
        assert m.apply([[-100.0]])[0, 0] == pytest.approx(-Z_09375, abs=1e-13)

    def test_only_majority_class_matters(self):
        other = two_class([1, 2, 3, 4], [-50.0, 70.0])
        q = np.linspace(-5, 8, 27).reshape(-1, 1)
        assert np.array_equal(fit_naive(self.data).apply(q), fit_naive(other).apply(q))

    def test_cubed_data_same_output(self):
        cubed = two_class(np.array([1, 2, 3, 4]) ** 3, np.array([0.5, 2.5]) ** 3)
        q = np.array([[-1.0], [1.5], [2.0], [3.7], [9.0]])
        assert np.array_equal(fit_naive(cubed).apply(q**3), fit_naive(self.data).apply(q))

    def test_single_class(self):
        with pytest.raises(InsufficientClassDataError):
            fit_naive(Dataset(np.ones((4, 1)), np.array([1, 1, 1, 1])))

    def test_majority_is_positive(self):
        m = fit_naive(two_class([1, 2], [3, 4, 5], "a", "b"))
        assert m.labels == ("b", "a")
        assert m.priors == pytest.approx((0.6, 0.4))

    def test_tie_break_by_sort_order(self):
        _, pos, neg = code_binary(np.array([1, -1, 1, -1]))
        assert (pos, neg) == (-1, 1)
        _, pos, neg = code_binary(np.array(["yes", "no", "yes", "no"]))
        assert (pos, neg) == ("no", "yes")

    @given(st.integers(2, 30), st.integers(0, 2**31 - 1))
    def test_bounds(self, n_pos, seed):
        rng = np.random.default_rng(seed)
        data = two_class(rng.normal(size=(n_pos, 2)), rng.normal(size=(n_pos - 1 if n_pos > 2 else 2, 2)))
        _, pos, _ = code_binary(data.y)
        n_plus = int(np.sum(data.y == pos))
        lim = float(quantile_bisect(1 - 1 / n_plus**2))
        out = fit_naive(data).apply(np.linspace(-10, 10, 101).reshape(-1, 1).repeat(2, axis=1))
        assert np.all(np.isfinite(out))
        assert np.all(np.abs(out) <= lim + 1e-12)


# ------------------------------------------------------------------ pooled


class TestPooled:
    data = two_class([0, 1], [0, 1], "a", "b")

    def test_hand_computed_shift(self):
        m = fit_pooled(self.data)
        # mu(+) = (0 + Phi^-1(0.75)) / 2, mu(-) = -mu(+), pooled with weights 1/2
        assert Z_075 / 2 == pytest.approx(0.33724, abs=1e-5)
        assert m.mu_minus_hat[0] == pytest.approx(0.0, abs=1e-15)

    def test_identical_classes_equal_naive(self):
        q = np.linspace(-1, 2, 13).reshape(-1, 1)
        assert np.allclose(fit_pooled(self.data).apply(q), fit_naive(self.data).apply(q),
                           atol=1e-15)

    def test_minority_weight(self):
        data = two_class([1, 2, 3, 4, 5, 6], [2.5, 3.5])
        assert fit_pooled(data).priors[1] == 2 / 8

    def test_minority_needs_two(self):
        with pytest.raises(InsufficientClassDataError):
            fit_pooled(two_class([1, 2, 3], [4]))

    @pytest.mark.parametrize("shift", [-1.0, 0.0, 1.0])
    def test_shift_consistency(self, shift):
        rng = np.random.default_rng(7)
        data = two_class(rng.normal(size=2600), rng.normal(loc=shift, size=2400))
        assert fit_pooled(data).mu_minus_hat[0] == pytest.approx(shift, abs=0.08)

    def test_shift_formula(self, rng):
        pos, neg = rng.normal(size=9), rng.normal(0.7, size=5)
        m = fit_pooled(two_class(pos, neg))
        tp, tm = fit_ecdf(pos, 1 / 81, 1 - 1 / 81), fit_ecdf(neg, 1 / 25, 1 - 1 / 25)
        mu_p = np.mean([float(quantile_bisect(tp.evaluate(x))) for x in neg])
        mu_m = -np.mean([float(quantile_bisect(tm.evaluate(x))) for x in pos])
        assert m.mu_minus_hat[0] == pytest.approx(9 / 14 * mu_p + 5 / 14 * mu_m, abs=1e-12)


# ------------------------------------------------------------------ legacy


class TestLegacy:
    def test_straight_line_example(self):
        data = two_class([1, 2, 3, 4], [1.5, 2.5])
        m = fit_legacy(data, 0.2, 0.8)
        expected = legacy_mu_minus([1, 2, 3, 4], [1.5, 2.5], 0.2, 0.8)
        assert expected == pytest.approx(-Z_075 / 2, abs=1e-12)
        assert m.mu_minus_hat[0] == pytest.approx(expected, abs=1e-12)

    def test_boundary_density_terms(self):
        pos, neg = [1, 2, 3, 4, 5, 6, 7, 8], [2.5, 4.5, 7.5]
        m = fit_legacy(two_class(pos, neg), 0.3, 0.7)
        assert m.mu_minus_hat[0] == pytest.approx(legacy_mu_minus(pos, neg, 0.3, 0.7), abs=1e-12)

    def test_degenerate_names_feature(self):
        data = two_class([[1, 1], [2, 2], [3, 3], [4, 4]], [[2.5, 10], [3.5, 11]])
        with pytest.raises(LegacyDegenerateError) as err:
            fit_legacy(data, 0.2, 0.8)
        assert err.value.feature == 1
        assert "1" in str(err.value)

    @given(st.lists(st.integers(-30, 30), min_size=3, max_size=8, unique=True),
           st.lists(st.integers(-30, 30), min_size=2, max_size=3),
           st.sampled_from([(0.1, 0.9), (0.2, 0.8), (0.3, 0.75)]))
    def test_matches_transcription(self, pos, neg, ab):
        assume(len(pos) > len(neg))
        pos = [v / 4 for v in pos]
        neg = [v / 4 + 0.125 for v in neg]
        a, b = ab
        inside = [x for x in neg if a < sum(v <= x for v in pos) / len(pos) < b]
        data = two_class(pos, neg)
        if not inside:
            with pytest.raises(LegacyDegenerateError):
                fit_legacy(data, a, b)
            return
        got = fit_legacy(data, a, b).mu_minus_hat[0]
        assert got == pytest.approx(legacy_mu_minus(pos, neg, a, b), abs=1e-10)

    def test_needs_bounds(self):
        with pytest.raises(ValueError):
            fit_transform(two_class([1, 2, 3], [1, 2]), "legacy")


# ------------------------------------------------------------------ multiclass


class TestMulticlass:
    def test_two_class_reduces_to_pooled(self):
        data = two_class([0, 1], [0, 1], "a", "b")
        q = np.linspace(-1, 2, 13).reshape(-1, 1)
        assert np.allclose(fit_multiclass_pooled(data).apply(q), fit_pooled(data).apply(q),
                           atol=1e-15)

    def test_two_class_shift_matches_pooled_for_large_n(self, rng):
        data = two_class(rng.normal(size=3000), rng.normal(0.5, size=2000))
        multi = fit_multiclass_pooled(data)
        assert multi.class_shifts[1, 0] == pytest.approx(fit_pooled(data).mu_minus_hat[0],
                                                         abs=0.02)

    def test_same_distribution_shifts_vanish(self, rng):
        # 10^4 draws per class: the shift noise is ~sqrt(2e-4) = 0.014, so 0.05 is ~3.5 sd
        y = np.repeat(np.array(["r", "g", "b"], dtype=object), [10_400, 10_200, 10_000])
        m = fit_multiclass_pooled(Dataset(rng.normal(size=(len(y), 2)), y))
        assert np.all(np.abs(m.class_shifts) < 0.05)
        assert len(m.labels) == 3

    def test_shifted_classes_recovered(self, rng):
        parts = [rng.normal(mu, size=(3000, 1)) for mu in (0.0, 1.0, -0.5)]
        y = np.repeat(np.array([0, 1, 2]), [3400, 3000, 2800])
        X = np.vstack([rng.normal(size=(3400, 1)), parts[1], parts[2][:2800]])
        m = fit_multiclass_pooled(Dataset(X, y))
        assert m.labels == (0, 1, 2)
        assert m.class_shifts[:, 0] == pytest.approx([0.0, 1.0, -0.5], abs=0.08)

    def test_priors_sum_to_one(self, rng):
        y = np.repeat([1, 2, 3, 4], [5, 7, 3, 6])
        m = fit_multiclass_pooled(Dataset(rng.normal(size=(21, 2)), y))
        assert sum(m.priors) == 1.0 or abs(sum(m.priors) - 1.0) <= 2e-16

    def test_small_class(self, rng):
        y = np.array([1, 1, 1, 2, 2, 3])
        with pytest.raises(InsufficientClassDataError):
            fit_multiclass_pooled(Dataset(rng.normal(size=(6, 1)), y))


# ------------------------------------------------------------------ apply / model


def test_identity_is_bitwise(rng):
    X = rng.normal(size=(5, 3))
    out = apply_transform(identity_transform(3), X)
    assert np.array_equal(out, X) and out is not X


def test_dimension_mismatch(rng):
    m = fit_naive(two_class(rng.normal(size=(4, 2)), rng.normal(size=(3, 2))))
    with pytest.raises(DimensionMismatchError):
        m.apply(np.zeros((2, 3)))


@pytest.mark.parametrize("variant", ["naive", "pooled", "legacy"])
def test_serialization_round_trip(variant, rng):
    data = two_class(rng.normal(size=(12, 3)), rng.normal(0.5, size=(8, 3)))
    m = fit_transform(data, variant, a=0.05, b=0.95)
    back = TransformModel.from_dict(json.loads(json.dumps(m.to_dict())))
    Q = rng.normal(size=(50, 3)) * 2
    assert np.array_equal(back.apply(Q), m.apply(Q))
    assert back.labels == m.labels and back.variant == variant


MONOTONE = {
    "cube": lambda x: x**3,
    "exp": lambda x: np.exp(x / 8),
    "arctan": lambda x: np.arctan(x / 8),
    "affine": lambda x: 3 * x - 7,
}


@given(st.integers(0, 2**31 - 1), st.sampled_from(sorted(MONOTONE)),
       st.sampled_from(["naive", "pooled", "legacy"]))
def test_monotone_invariance(seed, gname, variant):
    rng = np.random.default_rng(seed)
    g = MONOTONE[gname]
    # values on a coarse grid so that g keeps them strictly ordered in floating point
    X = rng.integers(-40, 40, size=(30, 3)) / 4.0
    y = np.array([1] * 17 + [-1] * 13)
    Q = rng.integers(-48, 48, size=(25, 3)) / 4.0 + 0.125
    try:
        ref = fit_transform(Dataset(X, y), variant, a=0.1, b=0.9).apply(Q)
    except LegacyDegenerateError:
        with pytest.raises(LegacyDegenerateError):
            fit_transform(Dataset(g(X), y), variant, a=0.1, b=0.9)
        return
    got = fit_transform(Dataset(g(X), y), variant, a=0.1, b=0.9).apply(g(Q))
    assert np.array_equal(got, ref)


@given(st.integers(0, 2**31 - 1), st.sampled_from(["naive", "pooled", "legacy"]))
def test_nondecreasing_and_strict_on_training_values(seed, variant):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(20, 2))
    y = np.array([1] * 12 + [-1] * 8)
    try:
        m = fit_transform(Dataset(X, y), variant, a=0.02, b=0.98)
    except LegacyDegenerateError:
        return
    grid = np.sort(np.concatenate([X[:, 0], rng.normal(size=40) * 3]))
    out = m.apply(np.column_stack([grid, grid]))
    assert np.all(np.isfinite(out))
    assert np.all(np.diff(out[:, 0]) >= 0)
    if variant != "pooled":
        # strictly increasing across distinct "+" class training values inside the bounds
        pos = np.sort(X[y == 1, 0])
        vals = m.apply(np.column_stack([pos, pos]))[:, 0]
        levels = np.arange(1, len(pos) + 1) / len(pos)
        inner = (levels > 0.02) & (levels < 0.98)
        assert np.all(np.diff(vals[inner]) > 0)
    else:
        train = np.sort(X[:, 0])
        vals = m.apply(np.column_stack([train, train]))[:, 0]
        assert np.all(np.diff(vals) > 0)
