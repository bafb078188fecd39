"""Tests for codecs, figures of merit and minimal compression rates."""

import math
from fractions import Fraction

import pytest

from app.theory.channels import Channel, random_channel
from app.theory.compression import (
    ChannelCodec,
    additivity_check,
    build_codec,
    codec_length,
    composite_source,
    converse_retained_mass,
    exact_rate,
    exhaustive_codec_rate,
    fom_dil_check,
    fom_tilde,
    info_content_estimate,
    register_size,
    retention_threshold,
    top_k_codec,
)
from app.theory.errors import InfeasibleCodecError, OracleBoundError
from app.theory.opt_core import PLUS, PureIndex, SystemShape


def _identity_codec(p, n: int, m: int) -> ChannelCodec:
    size = SystemShape.power(len(p), n).size
    return ChannelCodec(tuple(p), n, m, Channel.identity(size), Channel.identity(size))


class TestHelpers:
    """Test suite for register sizes and thresholds."""

    def test_register_size(self):
        """Test |B^M| = 2^(2M-1)."""
        assert [register_size(m) for m in (1, 2, 3)] == [2, 8, 32]

    def test_retention_threshold(self):
        """Test D~ < eps <=> retained > 1 - eps/2."""
        assert retention_threshold("1/10") == Fraction(19, 20)

    def test_threshold_needs_positive_epsilon(self):
        """Test that epsilon must be positive."""
        with pytest.raises(ValueError, match="positive"):
            retention_threshold(0)

    def test_codec_length_rounds_near_integers(self):
        """Test that floating noise does not push M up by one."""
        assert codec_length(1.0, 2, 0.5) == 3
        assert codec_length(1.0, 10, 0.1 + 0.2 - 0.3) == 10


class TestTypicalSetCodec:
    """Test suite for build_codec."""

    def test_pure_source(self, pure_bit):
        """Test M = ceil(3 (1/2 + 0.1)) = 2 for a pure source of length 3."""
        codec = build_codec(pure_bit, 3, 0.1)
        assert codec.m == 2
        assert codec.used_codewords == 4
        assert codec.register_shape.size == 8
        codewords = {codec.encode(x) for x in codec.message_shape.pure_indices() if x.locals == (1, 1, 1)}
        assert len(codewords) == 4

    def test_uniform_source(self, uniform_bit):
        """Test M = ceil(2 (1 + 0.05)) = 3."""
        assert build_codec(uniform_bit, 2, 0.05).m == 3

    def test_decode_inverts_encode_on_typical_entries(self):
        """Test the round trip on every typical entry."""
        codec = build_codec((Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)), 4, 0.3)
        for x in codec.message_shape.pure_indices():
            if x.locals in codec.typical:
                assert codec.decode(codec.encode(x)) == x
            else:
                assert codec.encode(x) == codec.fallback_codeword

    def test_unused_codewords_decode_to_fallback(self, pure_bit):
        """Test that codewords beyond the typical entries decode to the fallback string."""
        codec = build_codec(pure_bit, 3, 0.1)
        last = codec.register_shape.index_at(codec.register_shape.size - 1)
        assert codec.decode(last) == codec.fallback_string == PureIndex((1, 1, 1), (PLUS, PLUS))

    def test_empty_typical_set_falls_back(self, biased_bit):
        """Test a codec whose typical set is empty."""
        codec = build_codec(biased_bit, 3, 0.2)
        assert codec.typical.is_empty
        assert codec.m == 3
        assert codec.retained_mass() == Fraction(729, 1000) / 4
        assert fom_tilde(biased_bit, 3, codec, path="both") == 2 * (1 - Fraction(729, 4000))

    def test_channels_match_the_maps(self, biased_bit):
        """Test that the explicit channels agree with encode and decode."""
        codec = build_codec(biased_bit, 3, 0.35)
        channel_codec = codec.as_channel_codec()
        assert channel_codec.retained_mass() == codec.retained_mass()


class TestFomTilde:
    """Test suite for the codec error D~."""

    def test_identity_codec_is_perfect(self, uniform_bit):
        """Test that a lossless codec has D~ = 0 on both paths."""
        codec = _identity_codec(uniform_bit, 1, 1)
        assert fom_tilde(uniform_bit, 1, codec, path="both") == 0

    def test_typical_codec_loses_the_atypical_mass(self, biased_bit):
        """Test D~ = 2 P(non-typical) on the closed and norm paths."""
        codec = build_codec(biased_bit, 3, 0.35)
        assert codec.typical.total_mass == Fraction(729, 1000)
        assert fom_tilde(biased_bit, 3, codec, path="both") == Fraction(271, 500)

    def test_random_stochastic_codec(self, rng, biased_bit):
        """Test that the two paths agree for a non-deterministic codec."""
        codec = ChannelCodec(biased_bit, 2, 1, random_channel(8, 2, rng), random_channel(2, 8, rng))
        assert 0 <= fom_tilde(biased_bit, 2, codec, path="both") <= 2

    def test_wrong_source(self, uniform_bit, biased_bit):
        """Test that a codec built for another source is rejected."""
        codec = build_codec(biased_bit, 3, 0.35)
        with pytest.raises(InfeasibleCodecError, match="another source"):
            fom_tilde(uniform_bit, 3, codec)

    def test_unknown_path(self, pure_bit):
        """Test that only closed, norm and both are known paths."""
        with pytest.raises(ValueError, match="unknown path"):
            fom_tilde(pure_bit, 3, build_codec(pure_bit, 3, 0.1), path="fast")

    def test_register_size_checked(self, uniform_bit):
        """Test that a codec must go through B^M."""
        with pytest.raises(InfeasibleCodecError, match="register"):
            ChannelCodec(uniform_bit, 1, 1, Channel.identity(2), Channel.constant(3, 2))


class TestDilationCheck:
    """Test suite for fom_dil_check."""

    def test_mother_dilation_attains_fom_tilde(self, biased_bit):
        """Test that the mother dilation error equals D~ and bounds the samples."""
        codec = build_codec(biased_bit, 3, 0.35)
        check = fom_dil_check(biased_bit, 3, codec, samples=6, seed=1)
        assert check.mother_error == check.fom_tilde
        assert check.within_bound
        assert check.samples == 8

    def test_lossless_codec(self, pure_bit):
        """Test that a lossless codec leaves every dilation unchanged."""
        check = fom_dil_check(pure_bit, 3, build_codec(pure_bit, 3, 0.1), samples=4)
        assert check.max_error == 0


class TestExactRate:
    """Test suite for exact_rate and the converse bound."""

    def test_pure_source(self, pure_bit):
        """Test M_min = 2 for a pure source of length 4 at eps = 0.1."""
        assert exact_rate(pure_bit, 4, "1/10") == 2

    @pytest.mark.parametrize("n", [1, 2, 5, 9])
    def test_uniform_source_is_incompressible(self, uniform_bit, n):
        """Test M_min = N for a fair bit."""
        assert exact_rate(uniform_bit, n, "1/50") == n

    def test_biased_source_small(self):
        """Test M_min = 2 for (3/4, 1/4), N = 2, eps = 1/2."""
        assert exact_rate((Fraction(3, 4), Fraction(1, 4)), 2, "1/2") == 2

    def test_monotone_in_n_and_epsilon(self, biased_bit):
        """Test that M_min grows with N and shrinks with epsilon."""
        small = [exact_rate(biased_bit, n, "1/50") for n in range(1, 11)]
        large = [exact_rate(biased_bit, n, "1/2") for n in range(1, 11)]
        assert small == sorted(small)
        assert all(a >= b for a, b in zip(small, large))

    def test_typical_codec_is_sandwiched(self, biased_bit):
        """Test M_min <= M of any typical-set codec with D~ < eps."""
        codec = build_codec(biased_bit, 16, 0.5)
        d_tilde = fom_tilde(biased_bit, 16, codec)
        assert d_tilde < Fraction(1, 10)
        assert exact_rate(biased_bit, 16, Fraction(1, 10)) <= codec.m
        assert codec.retained_mass() <= converse_retained_mass(biased_bit, 16, codec.m)

    @pytest.mark.parametrize("n, m", [(2, 1), (2, 2), (3, 2)])
    def test_top_k_codec_attains_the_converse(self, biased_bit, n, m):
        """Test that keeping the heaviest entries reaches the converse bound."""
        codec = top_k_codec(biased_bit, n, m)
        assert codec.retained_mass() == converse_retained_mass(biased_bit, n, m)


class TestExhaustiveCodecRate:
    """Test suite for the brute-force codec oracle."""

    def test_matches_exact_rate(self):
        """Test the oracle on (3/4, 1/4), N = 2, eps = 1/2."""
        p = (Fraction(3, 4), Fraction(1, 4))
        result = exhaustive_codec_rate(p, 2, "1/2")
        assert result.m_min == 2
        assert result.best_retained[1] == converse_retained_mass(p, 2, 1) == Fraction(9, 16)
        assert result.best_retained[2] == 1

    def test_single_letter_enumerates_all_decoders(self, uniform_bit):
        """Test that N = 1, M = 1 searches the 2^2 decoders."""
        result = exhaustive_codec_rate(uniform_bit, 1, "1/2", max_m=1)
        assert result.codecs_searched == 4
        assert result.best_retained[1] == 1

    def test_size_bound(self, uniform_bit):
        """Test that large messages are refused."""
        with pytest.raises(OracleBoundError):
            exhaustive_codec_rate(uniform_bit, 4, "1/2")


class TestRateCurves:
    """Test suite for info_content_estimate and the additivity check."""

    def test_uniform_curve(self, uniform_bit):
        """Test that a fair bit has rate one at every N."""
        (curve,) = info_content_estimate(uniform_bit, ["1/10"], 6)
        assert curve.rates == {n: 1.0 for n in range(1, 7)}
        assert curve.target == pytest.approx(1.0)
        assert curve.limsup == 1.0

    def test_pure_curve_target(self, pure_bit):
        """Test that a pure source aims at rate 1/2."""
        (curve,) = info_content_estimate(pure_bit, ["1/10"], 8, n_min=2)
        assert curve.target == 0.5
        assert curve.s2_bound == 0.0
        assert curve.points == {n: math.ceil(n / 2) for n in range(2, 9)}
        assert len(curve.rows()) == 7

    def test_grid_order(self, biased_bit):
        """Test that one curve is returned per epsilon, in grid order."""
        curves = info_content_estimate(biased_bit, ["1/2", "1/50"], 4)
        assert [c.epsilon for c in curves] == [Fraction(1, 2), Fraction(1, 50)]

    def test_composite_source_weights(self, pure_bit, uniform_bit):
        """Test that |1) x (1/2, 1/2) spreads over four of eight entries."""
        r = composite_source(pure_bit, uniform_bit)
        assert len(r) == 8
        assert sorted(r, reverse=True)[:4] == [Fraction(1, 4)] * 4

    def test_pure_and_uniform_sources(self, pure_bit, uniform_bit):
        """Test M_min = ceil(3N/2) for the composite of a pure and a fair bit."""
        result = additivity_check(pure_bit, uniform_bit, 6, "1/10")
        assert result.curve.points == {n: math.ceil(3 * n / 2) for n in range(1, 7)}
        assert result.target_sum == pytest.approx(1.5)
        assert result.entropy_additive

    def test_two_fair_bits(self, uniform_bit):
        """Test that two fair bits compose into an incompressible source of rate two."""
        result = additivity_check(uniform_bit, uniform_bit, 3, "1/10")
        assert result.curve.rates == {n: 2.0 for n in range(1, 4)}
