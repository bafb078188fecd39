"""Tests for message spectra and typical sets."""

import math
from fractions import Fraction
from itertools import product

import pytest

from app.theory.errors import MemoryBoundError, NotNormalizedError, ShapeMismatchError
from app.theory.opt_core import State, tensor_power
from app.theory.typical import (
    as_distribution,
    compositions,
    message_distribution,
    message_spectrum,
    multinomial,
    top_mass,
    typical_lemma_mass,
    typical_mass_bounds,
    typical_set,
)

THREE_LETTERS = (Fraction(1, 2), Fraction(1, 4), Fraction(1, 4))


class TestHelpers:
    """Test suite for distribution and counting helpers."""

    def test_state_is_read_as_distribution(self, uniform_state, uniform_bit):
        """Test that a single-system state gives its weights."""
        assert as_distribution(uniform_state) == uniform_bit

    def test_unnormalized_rejected(self):
        """Test that weights must sum to one."""
        with pytest.raises(NotNormalizedError):
            as_distribution((Fraction(1, 2), Fraction(1, 4)))

    def test_single_outcome_rejected(self):
        """Test that a source needs two outcomes."""
        with pytest.raises(ShapeMismatchError):
            as_distribution((1,))

    def test_compositions_are_counted(self):
        """Test that there are C(n+d-1, d-1) compositions."""
        assert len(list(compositions(5, 3))) == math.comb(7, 2)
        assert all(sum(c) == 5 for c in compositions(5, 3))

    def test_multinomial(self):
        """Test a multinomial coefficient."""
        assert multinomial((2, 1, 1)) == 12


class TestMessageDistribution:
    """Test suite for the written-out message state."""

    def test_length_one_is_the_source(self, uniform_state):
        """Test that rho^1 is rho."""
        assert message_distribution(uniform_state, 1) == uniform_state

    def test_matches_tensor_power(self, biased_bit):
        """Test that the entry-wise weights equal the composed state."""
        rho = State.from_distribution(biased_bit)
        assert message_distribution(biased_bit, 3) == tensor_power(rho, 3)

    def test_sign_marginal_is_the_product_distribution(self):
        """Test that summing over signs gives prod p_{i_k}."""
        message = message_distribution(THREE_LETTERS, 3)
        for locals_ in product((1, 2, 3), repeat=3):
            total = sum(w for x, w in message.items() if x.locals == locals_)
            expected = math.prod(THREE_LETTERS[i - 1] for i in locals_)
            assert total == expected

    def test_memory_bound(self, uniform_bit):
        """Test that oversized messages are refused."""
        with pytest.raises(MemoryBoundError, match="memory bound"):
            message_distribution(uniform_bit, 30, bound_log2=10)


class TestMessageSpectrum:
    """Test suite for the type spectrum."""

    def test_total_mass_is_one(self, biased_bit):
        """Test sum multiplicity * weight = 1."""
        spectrum = message_spectrum(biased_bit, 12)
        assert sum(e.multiplicity * e.weight for e in spectrum) == 1

    def test_multiplicities_count_the_support(self):
        """Test that multiplicities add up to |supp|^N 2^(N-1)."""
        spectrum = message_spectrum(THREE_LETTERS, 6)
        assert sum(e.multiplicity for e in spectrum) == 3**6 * 2**5

    def test_zero_probability_letters_are_dropped(self, pure_bit):
        """Test that a pure source has one spectrum entry."""
        (entry,) = message_spectrum(pure_bit, 5)
        assert entry.weight == Fraction(1, 16)
        assert entry.multiplicity == 16

    def test_sorted_by_weight(self, biased_bit):
        """Test that entries come heaviest first."""
        weights = [e.weight for e in message_spectrum(biased_bit, 8)]
        assert weights == sorted(weights, reverse=True)

    def test_top_mass(self, uniform_bit):
        """Test the mass of the k heaviest entries."""
        spectrum = message_spectrum(uniform_bit, 3)
        assert top_mass(spectrum, 8) == Fraction(1, 4)
        assert top_mass(spectrum, 10**6) == 1


class TestTypicalSet:
    """Test suite for typical_set."""

    def test_uniform_source_is_all_typical(self, uniform_bit):
        """Test that every string of a uniform source is typical."""
        ts = typical_set(uniform_bit, 7, 0.0)
        assert ts.cardinality == 2**7
        assert ts.total_mass == 1

    def test_pure_source(self, pure_bit):
        """Test that only the all-ones string is typical for a pure source."""
        ts = typical_set(pure_bit, 6, 0.1)
        assert ts.cardinality == 1
        assert list(ts.strings()) == [(1,) * 6]
        assert ts.total_mass == 1

    def test_matches_brute_force(self, biased_bit):
        """Test membership and mass against a direct string-by-string check."""
        n, delta = 10, 0.2
        ts = typical_set(biased_bit, n, delta)
        h = ts.entropy
        mass = Fraction(0)
        members = []
        for string in product((1, 2), repeat=n):
            prob = math.prod(biased_bit[i - 1] for i in string)
            if abs(-math.log2(prob) / n - h) <= delta:
                members.append(string)
                mass += prob
        assert list(ts.strings()) == members
        assert ts.total_mass == mass
        assert ts.cardinality == 10

    def test_rank_and_unrank(self):
        """Test that rank enumerates typical strings in lexicographic order."""
        ts = typical_set(THREE_LETTERS, 4, 0.3)
        strings = list(ts.strings())
        assert len(strings) == ts.cardinality > 1
        for r, s in enumerate(strings):
            assert ts.rank(s) == r
            assert ts.unrank(r) == s

    def test_rank_of_atypical_string(self, biased_bit):
        """Test that atypical strings have no rank."""
        ts = typical_set(biased_bit, 10, 0.2)
        with pytest.raises(KeyError, match="not typical"):
            ts.rank((2,) * 10)

    def test_empty_set(self, biased_bit):
        """Test a delta too small for any type of length 3."""
        ts = typical_set(biased_bit, 3, 0.2)
        assert ts.is_empty
        assert ts.total_mass == 0

    def test_negative_delta(self, biased_bit):
        """Test that delta must be non-negative."""
        with pytest.raises(ShapeMismatchError):
            typical_set(biased_bit, 3, -0.1)


class TestTypicalBounds:
    """Test suite for the finite-length cardinality bounds."""

    @pytest.mark.parametrize(
        "p",
        [
            (Fraction(9, 10), Fraction(1, 10)),
            (Fraction(3, 4), Fraction(1, 4)),
            (Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)),
            (Fraction(1, 5), Fraction(3, 10), Fraction(1, 2)),
        ],
    )
    def test_bounds_hold(self, p):
        """Test P(T) 2^{N(H-delta)} <= |T| <= 2^{N(H+delta)} for N <= 14."""
        for n in range(1, 15):
            for delta in (0.05, 0.2, 0.5):
                assert typical_mass_bounds(p, n, delta).holds

    def test_lemma_mass_decays_below_the_target(self, uniform_bit):
        """Test that 2^{2NR-1} entries carry a vanishing mass for R < (H+1)/2."""
        assert typical_lemma_mass(uniform_bit, 4, 0.75) == Fraction(1, 4)
        assert typical_lemma_mass(uniform_bit, 8, 0.75) == Fraction(1, 16)
