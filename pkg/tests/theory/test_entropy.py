"""Tests for the entropies and their regularizations."""

from fractions import Fraction
from unittest.mock import patch

import numpy as np
import pytest

from app.theory.entropy import (
    canonical_decomposition,
    entropies_closed_form,
    mutual_information,
    s1_oracle,
    s2_oracle,
    s3,
    s_reg,
    s_reg_limit,
    shannon,
    superadditivity_witness,
)
from app.theory.errors import InvariantViolation, NotNormalizedError, OracleBoundError
from app.theory.opt_core import PureIndex, State, SystemShape, compose_states, tensor_power


class TestShannon:
    """Test suite for the Shannon entropy."""

    def test_fair_bit(self, uniform_bit):
        """Test H(1/2, 1/2) = 1."""
        assert shannon(uniform_bit) == pytest.approx(1.0)

    def test_pure(self, pure_bit):
        """Test that zero-probability letters contribute nothing."""
        assert shannon(pure_bit) == 0.0

    def test_biased_bit(self, biased_bit):
        """Test H(0.9, 0.1)."""
        assert shannon(biased_bit) == pytest.approx(0.468995594, abs=1e-9)

    def test_unnormalized_rejected(self):
        """Test that non-distributions are rejected."""
        with pytest.raises(NotNormalizedError):
            shannon([0.5, 0.6])


class TestClosedForms:
    """Test suite for S1 = S2 = S3 = H."""

    def test_monoentropic(self):
        """Test that the three entropies coincide with H."""
        rho = State.from_distribution((Fraction(1, 2), Fraction(1, 3), Fraction(1, 6)))
        report = entropies_closed_form(rho, range(1, 4))
        assert report.monoentropic
        assert report.s1 == report.h == pytest.approx(1.459147917)
        assert report.sreg_at_n[2] == pytest.approx(report.h + 0.5)

    def test_composite_pure_state(self):
        """Test that |i) x |j) has entropy one."""
        one = State.from_distribution((1, 0))
        assert entropies_closed_form(compose_states(one, one)).h == pytest.approx(1.0)

    def test_decomposition_merges_repeats(self):
        """Test that repeated pure states are merged before taking H."""
        x, y = PureIndex((1,)), PureIndex((2,))
        pairs = [(x, Fraction(1, 4)), (y, Fraction(1, 2)), (x, Fraction(1, 4)), (y, 0)]
        assert canonical_decomposition(pairs) == [(x, Fraction(1, 2)), (y, Fraction(1, 2))]

    def test_s3_is_shannon_of_weights(self, biased_bit):
        """Test S3 of a single system."""
        assert s3(State.from_distribution(biased_bit)) == pytest.approx(shannon(biased_bit))


class TestOracles:
    """Test suite for the S1 and S2 search oracles."""

    def test_s1_oracle_never_beats_the_perfect_test(self):
        """Test that splitting effects never lowers the outcome entropy."""
        rho = State.from_distribution((Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)))
        result = s1_oracle(rho, search_budget=200, seed=3)
        assert result.best == result.perfect_test
        assert result.best == pytest.approx(1.5)
        assert result.tests_evaluated == 201

    def test_s1_oracle_pure_state(self):
        """Test that a pure state has zero measurement entropy."""
        assert s1_oracle(State.from_distribution((1, 0)), search_budget=20).best == 0.0

    def test_s2_oracle_is_bounded_by_h(self):
        """Test that no stochastic test carries more than H bits."""
        rho = State.from_distribution((Fraction(1, 3), Fraction(2, 3)))
        result = s2_oracle(rho, search_budget=200, seed=3)
        assert result.best == pytest.approx(shannon((Fraction(1, 3), Fraction(2, 3))), abs=1e-9)

    def test_mutual_information_of_independent_table(self):
        """Test that a product table has zero mutual information."""
        joint = np.outer([0.25, 0.75], [0.5, 0.5])
        assert mutual_information(joint) == pytest.approx(0.0, abs=1e-12)

    def test_oracle_size_bound(self):
        """Test that the oracles refuse large systems."""
        rho = tensor_power(State.from_distribution((Fraction(1, 2), Fraction(1, 2))), 4)
        with pytest.raises(OracleBoundError):
            s1_oracle(rho)


class TestRegularizedEntropy:
    """Test suite for S_i(rho^N)/N."""

    def test_length_one(self, biased_bit):
        """Test that N = 1 gives H."""
        assert s_reg(biased_bit, 1) == pytest.approx(shannon(biased_bit))

    def test_fair_bit_length_four(self, uniform_bit):
        """Test S(rho^4)/4 = 1 + 1 - 1/4."""
        assert s_reg(uniform_bit, 4) == pytest.approx(1.75)

    def test_pure_source(self, pure_bit):
        """Test that a pure source gains only the sign entropy."""
        assert s_reg(pure_bit, 5) == pytest.approx(0.8)

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_enumeration_agrees_with_spectrum(self, n):
        """Test the entry-by-entry path against the spectrum path."""
        p = (Fraction(1, 2), Fraction(1, 3), Fraction(1, 6))
        assert s_reg(p, n, enumerate_weights=True) == pytest.approx(s_reg(p, n))

    def test_limit(self, biased_bit):
        """Test the regularized entropy H + 1."""
        assert s_reg_limit(biased_bit) == pytest.approx(shannon(biased_bit) + 1)

    def test_mismatch_raises(self, uniform_bit):
        """Test that a direct value off the closed form is an invariant violation."""
        with patch("app.theory.entropy.spectrum_entropy", return_value=0.0):
            with pytest.raises(InvariantViolation, match="closed form"):
                s_reg(uniform_bit, 3)

    @pytest.mark.parametrize("which", [2, 3])
    def test_all_entropies_share_the_value(self, biased_bit, which):
        """Test that S2 and S3 regularize to the same value as S1."""
        assert s_reg(biased_bit, 6, which=which) == s_reg(biased_bit, 6, which=1)

    def test_index_named_in_violation(self, uniform_bit):
        """Test that a failed check reports which entropy it was labelled with."""
        with patch("app.theory.entropy.spectrum_entropy", return_value=0.0):
            with pytest.raises(InvariantViolation, match="S_3"):
                s_reg(uniform_bit, 3, which=3)

    def test_unknown_entropy_index(self, uniform_bit):
        """Test that only S1, S2 and S3 exist."""
        with pytest.raises(ValueError, match="1, 2 or 3"):
            s_reg(uniform_bit, 2, which=4)


class TestSuperadditivity:
    """Test suite for the superadditivity witness."""

    def test_two_bits(self):
        """Test S(Sigma) = 1 and S(Sigma x Sigma) = 3."""
        bit = SystemShape.single(2)
        witness = superadditivity_witness(PureIndex((1,)), PureIndex((2,)), bit, bit)
        assert witness.single == pytest.approx(1.0)
        assert witness.double == pytest.approx(3.0)
        assert witness.strict
        assert witness.additivity_gap == pytest.approx(1.0)

    def test_doubling_ratios(self):
        """Test S(Sigma^(2^k))/2^k = 1, 3/2, 7/4."""
        bit = SystemShape.single(2)
        witness = superadditivity_witness(PureIndex((1,)), PureIndex((1,)), bit, SystemShape.single(3))
        assert [r for _, r in witness.doubling] == pytest.approx([1.0, 1.5, 1.75])
        assert witness.doubling_nondecreasing
