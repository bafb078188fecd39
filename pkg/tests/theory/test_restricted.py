"""Tests for the permutation-restricted bit theory."""

from fractions import Fraction

import pytest

from app.theory.errors import OracleBoundError, ShapeMismatchError
from app.theory.restricted import (
    PermutationCodec,
    permutation_codecs,
    restricted_rate,
    retained_mass,
)


class TestPermutationCodec:
    """Test suite for permutation codecs."""

    def test_round_trip_overwrites_discarded_bits(self):
        """Test that discarded positions are re-prepared."""
        codec = PermutationCodec(permutation=(2, 0, 1), m=1, preparation=(1, 2))
        assert codec.round_trip((2, 2, 2)) == (1, 2, 2)

    def test_codecs_are_deduplicated_by_kept_set(self):
        """Test one codec per kept set and preparation."""
        codecs = list(permutation_codecs(3, 1))
        assert len(codecs) == 3 * 4

    def test_keeping_everything_is_lossless(self, biased_bit):
        """Test that M = N retains all the mass."""
        (codec,) = permutation_codecs(2, 2)
        assert retained_mass(biased_bit, codec, 2) == 1


class TestRestrictedRate:
    """Test suite for restricted_rate."""

    @pytest.mark.parametrize("n", range(1, 7))
    def test_no_compression_below_threshold(self, uniform_bit, biased_bit, n):
        """Test M_min = N for both bit sources at eps = 0.1."""
        for p in (uniform_bit, biased_bit):
            result = restricted_rate(p, n, Fraction(1, 10))
            assert result.m_min == n
            assert result.m_min_mixed == n
            assert not result.compresses

    def test_best_retained_mass(self, biased_bit):
        """Test that the best codec keeping M bits retains pmax^(N-M)."""
        result = restricted_rate(biased_bit, 4, Fraction(1, 10))
        assert result.best_retained == {m: Fraction(9, 10) ** (4 - m) for m in range(5)}
        assert result.threshold == Fraction(1, 5)

    def test_compresses_above_threshold(self, biased_bit):
        """Test that eps = 1/2 lets the biased source drop two bits."""
        result = restricted_rate(biased_bit, 4, Fraction(1, 2))
        assert result.m_min == 2
        assert result.compresses

    def test_pure_source_needs_no_bits(self, pure_bit):
        """Test that a pure source is re-prepared from nothing."""
        assert restricted_rate(pure_bit, 3, Fraction(1, 10)).m_min == 0

    def test_bits_only(self):
        """Test that sources with more than two letters are rejected."""
        with pytest.raises(ShapeMismatchError, match="bits only"):
            restricted_rate((Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)), 2, Fraction(1, 10))

    def test_length_bound(self, uniform_bit):
        """Test that exhaustive search is capped."""
        with pytest.raises(OracleBoundError):
            restricted_rate(uniform_bit, 9, Fraction(1, 10))
