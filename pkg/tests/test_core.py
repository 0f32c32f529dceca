"""Core estimator tests: frozen examples, brute-force oracles, invariants."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from proxybias import errors
from proxybias.core import (
    AttributeSource,
    ErrorProfile,
    JointTable,
    PredictionRecord,
    Rates,
    build_bias_report,
    build_joint_table,
    ci_violation,
    conditional_errors,
    corrected_bias,
    deltas,
    distortion_factor,
    forward_noisy_estimates,
    gamma_values,
    general_corrected_bias,
    naive_bias,
    naive_components,
    rates,
    true_bias,
)
from proxybias.core import _gamma_raw


def rec(i, y, yh, a=None, ah=None, score=None):
    return PredictionRecord(id=f"r{i}", y=bool(y), y_hat=bool(yh), a=None if a is None else bool(a),
                            a_hat=None if ah is None else bool(ah), score=score)


# Six rows of the adversarial table: (y, a, yhat, ahat), one count each.
# yhat plays the role of the label rule's output, ahat of the attribute
# classifier believed optimal for the distribution.
COUNTER_ROWS = [
    (1, 1, 0, 0),
    (1, 1, 1, 1),
    (1, 0, 1, 1),
    (1, 0, 0, 0),
    (0, 1, 1, 1),
    (0, 0, 0, 0),
]


@pytest.fixture
def counter_records():
    return [rec(i, y, yh, a, ah) for i, (y, a, yh, ah) in enumerate(COUNTER_ROWS)]


@pytest.fixture
def counter_table(counter_records):
    return build_joint_table(counter_records, AttributeSource.BOTH)


def brute_conditional(records, event, given):
    """Exact conditional probability from raw records, Fraction arithmetic."""
    def matches(r, cond):
        return all(getattr(r, k) == v for k, v in cond.items())

    den = [r for r in records if matches(r, given)]
    num = [r for r in den if matches(r, event)]
    if not den:
        return None
    return Fraction(len(num), len(den))


class TestBuildJointTable:
    def test_counterexample_rows_tally(self, counter_table):
        assert counter_table.total == 6.0
        assert np.count_nonzero(counter_table.cells) == 6
        assert set(np.unique(counter_table.cells)) == {0.0, 1.0}

    def test_empty_input(self):
        with pytest.raises(errors.EmptyInput):
            build_joint_table([], AttributeSource.BOTH)

    def test_point_mass(self):
        records = [rec(i, 1, 1, 1, 1) for i in range(4)]
        t = build_joint_table(records, AttributeSource.BOTH)
        assert t.mass(y=1, a=1, yhat=1, ahat=1) == 4.0
        assert t.total == 4.0
        assert t.mass(y=1, a=1, yhat=1) / t.mass(y=1, a=1) == 1.0
        assert t.mass(y=1, a=1, ahat=1) / t.mass(y=1, a=1) == 1.0

    def test_missing_field_named(self):
        records = [rec(0, 1, 1, a=1, ah=1), rec(1, 1, 0, a=None, ah=0)]
        with pytest.raises(errors.MissingField) as ei:
            build_joint_table(records, AttributeSource.TRUE_A)
        assert ei.value.record_id == "r1"
        assert ei.value.field == "a"

    def test_collapsed_axis_flags(self):
        records = [rec(0, 1, 1, a=1), rec(1, 1, 0, a=0)]
        t = build_joint_table(records, AttributeSource.TRUE_A)
        assert t.has_true_attr and not t.has_pred_attr
        with pytest.raises(errors.MissingField):
            naive_bias(t)


class TestRates:
    def test_counterexample(self, counter_table):
        got = rates(counter_table)
        assert got.r == pytest.approx(1 / 3, abs=1e-15)
        assert got.s == pytest.approx(1 / 3, abs=1e-15)
        assert got.missing_group is None

    def test_point_mass_flags_missing_group(self):
        t = build_joint_table([rec(0, 1, 1, 1, 1)], AttributeSource.BOTH)
        got = rates(t)
        assert got.r == 1.0 and got.s == 0.0
        assert got.missing_group == "(y=1, a=0)"

    def test_uniform_table(self):
        t = JointTable(np.ones((2, 2, 2, 2)))
        got = rates(t)
        assert got.r == 0.25 and got.s == 0.25

    def test_no_positive_mass(self):
        t = build_joint_table([rec(0, 0, 1, 1, 1)], AttributeSource.BOTH)
        with pytest.raises(errors.MissingGroup):
            rates(t)


class TestBiases:
    def test_counterexample_true_zero_naive_one(self, counter_table):
        assert true_bias(counter_table) == 0.0
        assert naive_bias(counter_table) == 1.0

    def test_yhat_equals_a_gives_one(self):
        records = [rec(0, 1, 1, 1, 1), rec(1, 1, 0, 0, 0), rec(2, 1, 1, 1, 0), rec(3, 1, 0, 0, 1)]
        t = build_joint_table(records, AttributeSource.BOTH)
        assert true_bias(t) == 1.0

    def test_perfect_proxy_naive_equals_true(self):
        rng = np.random.default_rng(7)
        records = []
        for i in range(400):
            y = bool(rng.integers(2))
            a = bool(rng.integers(2))
            yh = bool(rng.random() < (0.8 if a else 0.4))
            records.append(rec(i, y, yh, a, a))
        t = build_joint_table(records, AttributeSource.BOTH)
        assert naive_bias(t) == pytest.approx(true_bias(t), abs=1e-15)

    def test_naive_of_forward_map_table(self):
        # alpha=1, beta=0, r=s, g1=g2=0.25 pushed through the forward map
        # gives proxy-conditional rates (0.75, 0.25), hence a naive gap 0.5.
        alpha_hat, beta_hat = forward_noisy_estimates(1.0, 0.0, Rates(0.25, 0.25), 0.25, 0.25)
        assert alpha_hat == pytest.approx(0.75, abs=1e-15)
        assert beta_hat == pytest.approx(0.25, abs=1e-15)
        assert alpha_hat - beta_hat == pytest.approx(0.5, abs=1e-15)

    def test_missing_predicted_group(self):
        records = [rec(0, 1, 1, 1, 1), rec(1, 1, 0, 0, 1)]
        t = build_joint_table(records, AttributeSource.BOTH)
        with pytest.raises(errors.EmptyPredictedGroup):
            naive_bias(t)


class TestErrorRates:
    def test_counterexample_conditional_errors(self, counter_table, counter_records):
        g1, g2 = conditional_errors(counter_table)
        assert g1 == 0.5 and g2 == 0.5
        # brute-force oracle over raw records
        b1 = brute_conditional(counter_records, {"a_hat": True}, {"a": False, "y": True})
        b2 = brute_conditional(counter_records, {"a_hat": False}, {"a": True, "y": True})
        assert Fraction(g1) == b1 and Fraction(g2) == b2

    def test_perfect_and_inverted_proxy(self):
        perfect = [rec(i, 1, i % 2, i % 2, i % 2) for i in range(4)]
        t = build_joint_table(perfect, AttributeSource.BOTH)
        assert conditional_errors(t) == (0.0, 0.0)
        inverted = [rec(i, 1, i % 2, i % 2, 1 - (i % 2)) for i in range(4)]
        t = build_joint_table(inverted, AttributeSource.BOTH)
        assert conditional_errors(t) == (1.0, 1.0)

    def test_counterexample_deltas(self, counter_table):
        d1, d2 = deltas(counter_table)
        assert d1 == 1.0 and d2 == 0.0

    def test_deltas_fair_coin(self):
        records = []
        i = 0
        for a in (0, 1):
            for ah in (0, 1):
                records.append(rec(i, 1, 1, a, ah)); i += 1
        t = build_joint_table(records, AttributeSource.BOTH)
        assert deltas(t) == (0.5, 0.5)

    def test_deltas_missing_event_named(self):
        records = [rec(0, 1, 1, 1, 1), rec(1, 1, 0, 0, 0)]
        t = build_joint_table(records, AttributeSource.BOTH)
        with pytest.raises(errors.MissingConditioningEvent) as ei:
            deltas(t)
        assert "a=0" in ei.value.event

    def test_smoothing_defines_empty_cells(self):
        records = [rec(0, 1, 1, 1, 1)]
        t = build_joint_table(records, AttributeSource.BOTH)
        g1, g2 = conditional_errors(t, smoothing=1.0)
        assert g1 == 0.5  # no (y=1,a=0) data: pseudo-counts give 1/2
        assert g2 == pytest.approx(1 / 3)

    def test_brute_force_consistency_random_records(self):
        rng = np.random.default_rng(42)
        records = []
        for i in range(500):
            y = bool(rng.integers(2)) or i < 30  # guarantee positives
            a = bool(rng.integers(2))
            records.append(rec(i, y, bool(rng.integers(2)), a, bool(rng.integers(2))))
        t = build_joint_table(records, AttributeSource.BOTH)
        g1, g2 = conditional_errors(t)
        d1, d2 = deltas(t)
        rt = rates(t)
        assert g1 == pytest.approx(
            float(brute_conditional(records, {"a_hat": True}, {"a": False, "y": True})), abs=1e-12)
        assert g2 == pytest.approx(
            float(brute_conditional(records, {"a_hat": False}, {"a": True, "y": True})), abs=1e-12)
        assert d1 == pytest.approx(
            float(brute_conditional(records, {"a_hat": True}, {"y_hat": True, "a": False, "y": True})),
            abs=1e-12)
        assert d2 == pytest.approx(
            float(brute_conditional(records, {"a_hat": False}, {"y_hat": True, "a": True, "y": True})),
            abs=1e-12)
        n_pos1 = sum(1 for r in records if r.y and r.a)
        n_pos0 = sum(1 for r in records if r.y and not r.a)
        assert rt.r == pytest.approx(n_pos1 / len(records), abs=1e-12)
        assert rt.s == pytest.approx(n_pos0 / len(records), abs=1e-12)


class TestDistortionFactor:
    def test_perfect_classifier(self):
        assert distortion_factor(0.0, 0.0, Rates(0.3, 0.3)) == 1.0

    def test_errors_summing_to_one(self):
        assert distortion_factor(0.6, 0.4, Rates(0.2, 0.4)) == 0.0

    def test_frozen_example(self):
        # (g1, g2) = (0.2, 0.1) at equal base rates: 0.7 / (0.9 * 1.1) = 70/99
        got = distortion_factor(0.2, 0.1, Rates(0.25, 0.25))
        assert got == pytest.approx(float(Fraction(70, 99)), abs=1e-15)

    def test_cross_check_against_forward_map(self):
        r = Rates(0.25, 0.25)
        gamma = distortion_factor(0.2, 0.1, r)
        alpha_hat, beta_hat = forward_noisy_estimates(1.0, 0.0, r, 0.2, 0.1)
        assert abs(alpha_hat - beta_hat) == pytest.approx(gamma, abs=1e-12)

    def test_missing_group(self):
        with pytest.raises(errors.MissingGroup):
            distortion_factor(0.2, 0.1, Rates(0.0, 0.5))

    def test_zero_denominator_corner(self):
        with pytest.raises(errors.ZeroDenominator):
            distortion_factor(1.0, 0.0, Rates(0.25, 0.25))
        with pytest.raises(errors.ZeroDenominator):
            distortion_factor(0.0, 1.0, Rates(0.25, 0.25))

    @given(
        g1=st.floats(0.0, 1.0),
        g2=st.floats(0.0, 1.0),
        r=st.floats(0.01, 0.98),
        u=st.floats(0.01, 0.99),
    )
    @settings(max_examples=300, derandomize=True)
    def test_gamma_range_property(self, g1, g2, r, u):
        s = (1.0 - r) * u
        with np.errstate(invalid="ignore", divide="ignore"):
            raw = _gamma_raw(g1, g2, r, s)
        if np.isfinite(raw):  # 0/0 only at the (1,0)/(0,1) corners
            assert raw <= 1.0 + 1e-9
            got = gamma_values(g1, g2, r, s)
            assert 0.0 <= got <= 1.0


class TestForwardMap:
    def test_equal_rates_preserved(self):
        ah, bh = forward_noisy_estimates(0.4, 0.4, Rates(0.3, 0.2), 0.25, 0.35)
        assert ah == pytest.approx(0.4, abs=1e-12)
        assert bh == pytest.approx(0.4, abs=1e-12)

    def test_zero_errors_identity(self):
        ah, bh = forward_noisy_estimates(0.7, 0.2, Rates(0.3, 0.2), 0.0, 0.0)
        assert ah == pytest.approx(0.7, abs=1e-15)
        assert bh == pytest.approx(0.2, abs=1e-15)

    def test_frozen_example(self):
        ah, bh = forward_noisy_estimates(1.0, 0.0, Rates(0.2, 0.2), 0.25, 0.25)
        assert ah == pytest.approx(0.75, abs=1e-15)
        assert bh == pytest.approx(0.25, abs=1e-15)

    def test_zero_denominator(self):
        with pytest.raises(errors.ZeroDenominator):
            forward_noisy_estimates(0.5, 0.5, Rates(0.5, 0.0), 0.0, 1.0)

    @given(
        alpha=st.floats(0.0, 1.0),
        beta=st.floats(0.0, 1.0),
        g1=st.floats(0.0, 0.95),
        g2=st.floats(0.0, 0.95),
        r=st.floats(0.02, 0.9),
        u=st.floats(0.05, 0.95),
    )
    @settings(max_examples=300, derandomize=True)
    def test_shrinkage_identity(self, alpha, beta, g1, g2, r, u):
        s = (1.0 - r) * u
        rt = Rates(r, s)
        ah, bh = forward_noisy_estimates(alpha, beta, rt, g1, g2)
        gamma = distortion_factor(g1, g2, rt)
        assert abs(ah - bh) == pytest.approx(gamma * abs(alpha - beta), abs=1e-12)
        assert abs(ah - bh) <= abs(alpha - beta) + 1e-15


class TestCorrectedBias:
    def test_inverts_forward_example(self):
        assert corrected_bias(0.5, 0.5).value == 1.0

    def test_identity_at_gamma_one(self):
        for x in (0.0, 0.3, 1.0):
            got = corrected_bias(x, 1.0)
            assert got.value == x and not got.clamped

    def test_degenerate_gamma(self):
        with pytest.raises(errors.UninvertibleDistortion):
            corrected_bias(0.1, 0.0)

    def test_clamps_above_one(self):
        got = corrected_bias(0.9, 0.5)
        assert got.value == 1.0 and got.clamped


class TestGeneralCorrectedBias:
    def test_frozen_example(self):
        profile = ErrorProfile(0.25, 0.25, 0.25, 0.25)
        got = general_corrected_bias(0.75, 0.25, profile, Rates(0.25, 0.25))
        assert got == pytest.approx(1.0, abs=1e-12)

    def test_reduces_to_naive_difference(self):
        profile = ErrorProfile(0.0, 0.0, 0.0, 0.0)
        got = general_corrected_bias(0.62, 0.24, profile, Rates(0.3, 0.2))
        assert got == pytest.approx(0.62 - 0.24, abs=1e-15)

    def test_counterexample_is_degenerate(self, counter_table):
        d1, d2 = deltas(counter_table)
        g1, g2 = conditional_errors(counter_table)
        profile = ErrorProfile(g1, g2, d1, d2)
        ah, bh = naive_components(counter_table)
        with pytest.raises(errors.DegenerateDeltas):
            general_corrected_bias(ah, bh, profile, rates(counter_table))

    def test_identity_on_random_tables(self):
        # The inversion is algebraic: profile + rates + naive components of a
        # table reproduce the table's own true gap, no independence needed.
        rng = np.random.default_rng(123)
        checked = 0
        while checked < 200:
            cells = rng.dirichlet(np.ones(16)).reshape(2, 2, 2, 2)
            t = JointTable(cells)
            events = [
                t.mass(y=1, a=1), t.mass(y=1, a=0),
                t.mass(y=1, ahat=1), t.mass(y=1, ahat=0),
                t.mass(y=1, a=0, yhat=1), t.mass(y=1, a=1, yhat=1),
            ]
            if min(events) < 0.01:
                continue
            d1, d2 = deltas(t)
            if abs(1.0 - d1 - d2) < 0.05:
                continue
            checked += 1
            g1, g2 = conditional_errors(t)
            ah, bh = naive_components(t)
            got = general_corrected_bias(ah, bh, ErrorProfile(g1, g2, d1, d2), rates(t))
            assert got == pytest.approx(true_bias(t), abs=1e-9)


class TestCiViolation:
    def test_counterexample(self, counter_table):
        assert ci_violation(counter_table) == pytest.approx(0.25, abs=1e-15)

    def test_independent_coin(self):
        records = []
        i = 0
        for y in (0, 1):
            for a in (0, 1):
                for yh in (0, 1):
                    for ah in (0, 1):
                        records.append(rec(i, y, yh, a, ah)); i += 1
        t = build_joint_table(records, AttributeSource.BOTH)
        assert ci_violation(t) == 0.0

    def test_skips_empty_cells(self):
        t = build_joint_table([rec(0, 1, 1, 1, 1), rec(1, 1, 0, 1, 0)], AttributeSource.BOTH)
        assert ci_violation(t) >= 0.0


class TestJointTableInvariants:
    def test_marginalization_consistency(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            t = JointTable(rng.dirichlet(np.ones(16)).reshape(2, 2, 2, 2))
            if t.mass(y=1) <= 0 or t.mass(y=1, a=1) <= 0:
                continue
            direct = t.mass(y=1, a=1, yhat=1) / t.mass(y=1)
            chained = (t.mass(y=1, a=1) / t.mass(y=1)) * (
                t.mass(y=1, a=1, yhat=1) / t.mass(y=1, a=1)
            )
            assert direct == pytest.approx(chained, abs=1e-12)

    def test_rejects_bad_cells(self):
        with pytest.raises(errors.InvalidParams):
            JointTable(np.full((2, 2, 2, 2), -1.0))
        with pytest.raises(errors.InvalidParams):
            JointTable(np.zeros((2, 2, 2, 2)))
        with pytest.raises(errors.InvalidParams):
            JointTable(np.ones((2, 2)))

    def test_cells_immutable(self):
        t = JointTable(np.ones((2, 2, 2, 2)))
        with pytest.raises(ValueError):
            t.cells[0, 0, 0, 0] = 5.0

    def test_record_score_validation(self):
        with pytest.raises(errors.InvalidParams):
            PredictionRecord(id="x", y=True, y_hat=True, score=1.5)


class TestBiasReport:
    def test_full_report_on_counterexample(self, counter_table):
        report = build_bias_report(counter_table, counter_table)
        assert report.true_bias_signed == 0.0
        assert report.naive_signed == 1.0
        assert report.error_profile == ErrorProfile(0.5, 0.5, 1.0, 0.0)
        assert report.gamma == 0.0
        assert report.corrected_abs is None
        assert "UninvertibleDistortion" in report.degenerate["corrected"]
        assert report.general_signed is None
        assert "DegenerateDeltas" in report.degenerate["general"]
        assert report.direct_abs == 0.0
        assert report.ci_violation == pytest.approx(0.25)
        assert report.n_labeled == 6
        payload = report.to_dict()
        assert payload["naive_abs"] == 1.0
        assert payload["true_bias_abs"] == 0.0

    def test_perfect_proxy_collapse(self):
        rng = np.random.default_rng(11)
        records = []
        for i in range(600):
            y = bool(rng.integers(2))
            a = bool(rng.integers(2))
            yh = bool(rng.random() < (0.9 if a else 0.3))
            records.append(rec(i, y, yh, a, a))
        t = build_joint_table(records, AttributeSource.BOTH)
        report = build_bias_report(t, t)
        assert report.gamma == 1.0
        assert report.naive_signed == pytest.approx(report.true_bias_signed, abs=1e-15)
        assert report.corrected_abs == pytest.approx(abs(report.true_bias_signed), abs=1e-12)
        assert report.general_signed == pytest.approx(report.true_bias_signed, abs=1e-12)

    def test_no_common_data(self, counter_table):
        report = build_bias_report(counter_table)
        assert report.naive_signed == 1.0
        assert report.corrected_abs is None
        assert "corrected" in report.degenerate
