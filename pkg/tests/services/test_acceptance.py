"""Tests for the named acceptance targets."""

import numpy as np
import pytest

from app.services.acceptance import CRITERIA, random_distribution, random_shape, run_criterion


class TestAcceptance:
    """Test suite for the acceptance criteria."""

    @pytest.mark.parametrize("number", sorted(CRITERIA))
    def test_criterion_passes(self, number):
        """Test that every acceptance target passes with the default seed."""
        result = run_criterion(number)
        assert result.passed, result.details
        assert result.criterion == number
        assert result.elapsed_ms >= 0

    def test_unknown_criterion(self):
        """Test that criterion numbers outside the table are rejected."""
        with pytest.raises(ValueError, match="criterion must be one of"):
            run_criterion(13)

    def test_seed_is_forwarded(self):
        """Test that an explicit seed still passes a randomized criterion."""
        assert run_criterion(7, seed=2024).passed


class TestSamplers:
    """Test suite for the acceptance samplers."""

    def test_random_distribution_is_normalized(self, rng):
        """Test that sampled distributions have full support and sum to one."""
        p = random_distribution(rng, 4)
        assert sum(p) == 1
        assert all(v > 0 for v in p)

    def test_random_shape_respects_size(self):
        """Test that sampled shapes stay below the requested size."""
        rng = np.random.default_rng(0)
        assert all(random_shape(rng, max_size=24).size <= 24 for _ in range(20))
