"""Compression in a classical theory whose transformations are restricted to bit permutations.

The source emits N ordinary (locally discriminable) bits. A codec permutes
them, keeps the first M and discards the rest; the decoder re-prepares the
discarded bits in fixed states and undoes the permutation. Such codecs can only
retain pmax^(N-M) of the mass, so no compression is possible below the
threshold epsilon* = 2(1 - pmax), whatever the Shannon entropy of the source.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations, product
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from app.theory.errors import InvariantViolation, OracleBoundError, ShapeMismatchError
from app.theory.opt_core import Number, State, as_rational
from app.theory.typical import as_distribution, source_entropy

logger = logging.getLogger(__name__)

MAX_BITS = 8


@dataclass(frozen=True)
class PermutationCodec:
    permutation: tuple[int, ...]
    m: int
    preparation: tuple[int, ...]

    def round_trip(self, bits: Sequence[int]) -> tuple[int, ...]:
        out = list(bits)
        for position, value in zip(self.permutation[self.m :], self.preparation):
            out[position] = value
        return tuple(out)


def permutation_codecs(n: int, m: int):
    """Codecs keeping m of n bits, one per kept set and preparation."""
    seen = set()
    for perm in permutations(range(n)):
        kept = frozenset(perm[:m])
        if kept in seen:
            continue
        seen.add(kept)
        for preparation in product((1, 2), repeat=n - m):
            yield PermutationCodec(perm, m, preparation)


def retained_mass(p: Sequence[Fraction], codec: PermutationCodec, n: int) -> Fraction:
    """Probability that the round trip returns the emitted string."""
    total = Fraction(0)
    for bits in product((1, 2), repeat=n):
        if codec.round_trip(bits) == bits:
            prob = Fraction(1)
            for b in bits:
                prob *= p[b - 1]
            total += prob
    return total


def _mixture_best(values: list[Fraction]) -> Fraction:
    # maximize sum c_k r_k over the simplex of convex weights
    scale = max(values) or Fraction(1)
    c = -np.array([float(v / scale) for v in values])
    result = linprog(c, A_eq=np.ones((1, len(values))), b_eq=[1.0], bounds=(0, 1), method="highs")
    if not result.success:
        raise RuntimeError(f"mixture LP failed: {result.message}")
    return values[int(np.argmax(result.x))]


@dataclass(frozen=True)
class RestrictedRate:
    n: int
    epsilon: Fraction
    m_min: int
    m_min_mixed: int
    best_retained: dict[int, Fraction]
    threshold: Fraction
    entropy: float
    codecs_searched: int

    @property
    def compresses(self) -> bool:
        return self.m_min < self.n


def restricted_rate(p: Sequence[Number] | State, n: int, epsilon: Number) -> RestrictedRate:
    """Least M (0 allowed) for which some permutation codec retains more than 1 - epsilon/2.

    Deterministic codecs are searched exhaustively; mixtures of them are solved
    as a linear program over convex weights.

    Raises:
        ShapeMismatchError: If the source is not a bit.
        OracleBoundError: If N is above the exhaustive-search bound.
    """
    probs = as_distribution(p)
    if len(probs) != 2:
        raise ShapeMismatchError("the permutation-restricted theory models bits only")
    if not 1 <= n <= MAX_BITS:
        raise OracleBoundError(f"N must be in 1..{MAX_BITS}, got {n}")
    eps = as_rational(epsilon)
    target = 1 - eps / 2
    pmax = max(probs)

    best: dict[int, Fraction] = {}
    m_min = m_min_mixed = None
    searched = 0
    for m in range(n + 1):
        values = [retained_mass(probs, codec, n) for codec in permutation_codecs(n, m)]
        searched += len(values)
        best[m] = max(values)
        if best[m] != pmax ** (n - m):
            raise InvariantViolation(f"best permutation codec at M={m} retains {best[m]}, expected {pmax ** (n - m)}")
        if m_min is None and best[m] > target:
            m_min = m
        if m_min_mixed is None and _mixture_best(values) > target:
            m_min_mixed = m
    logger.debug(f"Restricted search N={n}: {searched} codecs, M_min={m_min}")
    return RestrictedRate(
        n=n,
        epsilon=eps,
        m_min=m_min,
        m_min_mixed=m_min_mixed,
        best_retained=best,
        threshold=2 * (1 - pmax),
        entropy=source_entropy(probs),
        codecs_searched=searched,
    )
