"""Typical sets and the spectrum of the N-letter message distribution.

A message of length N from a source with local distribution p puts weight
p_i * 2^-(N-1) on every (i, s): a local string and a sign string. Weights only
depend on the composition (type) of the local string, so the whole weight
vector is described by one entry per type.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations_with_replacement, product
from typing import Iterator, NamedTuple, Sequence

import numpy as np
from scipy.stats import entropy as scipy_entropy

from app.config.settings import settings
from app.theory.errors import MemoryBoundError, NotNormalizedError, ShapeMismatchError
from app.theory.opt_core import (
    MINUS,
    PLUS,
    Number,
    PureIndex,
    State,
    SystemShape,
    as_rational,
)

logger = logging.getLogger(__name__)

Counts = tuple[int, ...]


def as_distribution(p: Sequence[Number] | State) -> tuple[Fraction, ...]:
    """Exact distribution from a sequence or a single-system state.

    Raises:
        NotNormalizedError: If the weights are negative or do not sum to one.
    """
    if isinstance(p, State):
        if p.shape.n != 1:
            raise ShapeMismatchError("a source must be a single-system state")
        probs = tuple(p[PureIndex((i,))] for i in range(1, p.shape.factors[0] + 1))
    else:
        probs = tuple(as_rational(v) for v in p)
    if len(probs) < 2:
        raise ShapeMismatchError("a source needs at least two outcomes")
    if any(v < 0 for v in probs) or sum(probs) != 1:
        raise NotNormalizedError(f"distribution {[str(v) for v in probs]} is not normalized")
    return probs


def source_entropy(p: Sequence[Fraction]) -> float:
    return float(scipy_entropy([float(v) for v in p], base=2))


def check_memory_bound(entries: int, bound_log2: int | None = None) -> None:
    bound_log2 = settings.memory_bound_log2 if bound_log2 is None else bound_log2
    if entries > 2**bound_log2:
        raise MemoryBoundError(f"{entries} entries exceed the memory bound 2^{bound_log2}")


def compositions(n: int, d: int) -> Iterator[Counts]:
    """All (n_1, ..., n_d) with non-negative entries summing to n."""
    for bars in combinations_with_replacement(range(d), n):
        counts = [0] * d
        for b in bars:
            counts[b] += 1
        yield tuple(counts)


def multinomial(counts: Sequence[int]) -> int:
    total, result = 0, 1
    for c in counts:
        total += c
        result *= math.comb(total, c)
    return result


def type_probability(p: Sequence[Fraction], counts: Counts) -> Fraction:
    """Probability of one local string with the given composition."""
    prob = Fraction(1)
    for pi, n in zip(p, counts):
        if n:
            prob *= pi**n
    return prob


# ---------------------------------------------------------------------------
# Message spectrum
# ---------------------------------------------------------------------------


class SpectrumEntry(NamedTuple):
    weight: Fraction
    multiplicity: int
    counts: Counts


def message_spectrum(p: Sequence[Number] | State, n: int) -> list[SpectrumEntry]:
    """Nonzero weights of the N-letter message with their multiplicities.

    Entries are sorted by weight, largest first; equal weights keep the
    lexicographic order of their compositions.
    """
    probs = as_distribution(p)
    if n < 1:
        raise ShapeMismatchError("message length must be >= 1")
    support = [k for k, v in enumerate(probs) if v > 0]
    sign_strings = 2 ** (n - 1)
    entries = []
    for sub_counts in compositions(n, len(support)):
        counts = [0] * len(probs)
        for k, c in zip(support, sub_counts):
            counts[k] = c
        counts = tuple(counts)
        weight = type_probability(probs, counts) / sign_strings
        entries.append(SpectrumEntry(weight, multinomial(counts) * sign_strings, counts))
    entries.sort(key=lambda e: (-e.weight, tuple(-c for c in e.counts)))
    logger.debug(f"Spectrum of N={n}: {len(entries)} distinct types")
    return entries


def top_mass(spectrum: Sequence[SpectrumEntry], k: int) -> Fraction:
    """Largest total weight carried by k message entries."""
    mass, left = Fraction(0), k
    for entry in spectrum:
        if left <= 0:
            break
        take = min(left, entry.multiplicity)
        mass += take * entry.weight
        left -= take
    return mass


def message_distribution(rho: State | Sequence[Number], n: int, bound_log2: int | None = None) -> State:
    """The state rho^N written out entry by entry (left-nested signs)."""
    probs = as_distribution(rho)
    shape = SystemShape.power(len(probs), n)
    check_memory_bound(shape.size, bound_log2)
    scale = Fraction(1, 2 ** (n - 1))
    support = [i + 1 for i, v in enumerate(probs) if v > 0]
    sign_strings = list(product((PLUS, MINUS), repeat=n - 1))
    weights = {}
    for locals_ in product(support, repeat=n):
        w = type_probability(probs, _counts(locals_, len(probs))) * scale
        for signs in sign_strings:
            weights[PureIndex(locals_, signs)] = w
    return State(shape, weights)


def _counts(locals_: Sequence[int], d: int) -> Counts:
    counts = [0] * d
    for i in locals_:
        counts[i - 1] += 1
    return tuple(counts)


# ---------------------------------------------------------------------------
# Typical sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TypicalSet:
    """(N, delta)-typical local strings of a source.

    Members are represented by their compositions; strings are ranked in
    lexicographic order without being enumerated.
    """

    p: tuple[Fraction, ...]
    n: int
    delta: float
    entropy: float
    types: frozenset[Counts] = field(repr=False)

    @cached_property
    def cardinality(self) -> int:
        return sum(multinomial(t) for t in self.types)

    @cached_property
    def total_mass(self) -> Fraction:
        return sum((multinomial(t) * type_probability(self.p, t) for t in self.types), Fraction(0))

    @property
    def mass(self) -> float:
        return float(self.total_mass)

    @property
    def is_empty(self) -> bool:
        return not self.types

    def __contains__(self, locals_: Sequence[int]) -> bool:
        return len(locals_) == self.n and _counts(locals_, len(self.p)) in self.types

    def _completions(self, prefix: Counts, remaining: int) -> int:
        total = 0
        for t in self.types:
            rest = tuple(a - b for a, b in zip(t, prefix))
            if min(rest) >= 0 and sum(rest) == remaining:
                total += multinomial(rest)
        return total

    def rank(self, locals_: Sequence[int]) -> int:
        """Position of a typical string among typical strings in lexicographic order."""
        if locals_ not in self:
            raise KeyError(f"{tuple(locals_)} is not typical")
        d = len(self.p)
        prefix = [0] * d
        rank = 0
        for k, i in enumerate(locals_):
            for c in range(1, i):
                prefix[c - 1] += 1
                rank += self._completions(tuple(prefix), self.n - k - 1)
                prefix[c - 1] -= 1
            prefix[i - 1] += 1
        return rank

    def unrank(self, r: int) -> tuple[int, ...]:
        if not 0 <= r < self.cardinality:
            raise IndexError(f"rank {r} outside 0..{self.cardinality - 1}")
        d = len(self.p)
        prefix = [0] * d
        out = []
        for k in range(self.n):
            for c in range(1, d + 1):
                prefix[c - 1] += 1
                count = self._completions(tuple(prefix), self.n - k - 1)
                if r < count:
                    out.append(c)
                    break
                r -= count
                prefix[c - 1] -= 1
        return tuple(out)

    def strings(self) -> Iterator[tuple[int, ...]]:
        """Typical strings in lexicographic order."""
        for locals_ in product(range(1, len(self.p) + 1), repeat=self.n):
            if locals_ in self:
                yield locals_


def is_typical(
    p: Sequence[Fraction], counts: Counts, entropy: float, delta: float, tolerance: float
) -> bool:
    """|-(1/N) log2 p(i) - H| <= delta, boundary inclusive up to ``tolerance``."""
    if any(c and pi == 0 for pi, c in zip(p, counts)):
        return False
    n = sum(counts)
    log_prob = sum(c * math.log2(pi) for pi, c in zip(p, counts) if c)
    return abs(-log_prob / n - entropy) <= delta + tolerance


def typical_set(
    p: Sequence[Number] | State, n: int, delta: float, tolerance: float | None = None
) -> TypicalSet:
    probs = as_distribution(p)
    if n < 1 or delta < 0:
        raise ShapeMismatchError("typical set needs N >= 1 and delta >= 0")
    tolerance = settings.tolerance if tolerance is None else tolerance
    h = source_entropy(probs)
    types = frozenset(
        t for t in compositions(n, len(probs)) if is_typical(probs, t, h, delta, tolerance)
    )
    result = TypicalSet(probs, n, float(delta), h, types)
    logger.debug(
        f"Typical set N={n} delta={delta}: {len(types)} types, "
        f"{result.cardinality} strings, mass {result.mass:.6g}"
    )
    return result


@dataclass(frozen=True)
class TypicalBounds:
    cardinality: int
    mass: Fraction
    log2_cardinality: float
    log2_lower: float
    log2_upper: float

    @property
    def holds(self) -> bool:
        tol = settings.tolerance * max(1.0, abs(self.log2_upper))
        return self.log2_lower - tol <= self.log2_cardinality <= self.log2_upper + tol


def typical_mass_bounds(p: Sequence[Number] | State, n: int, delta: float) -> TypicalBounds:
    """Finite-N cardinality bounds P(T) 2^{N(H-delta)} <= |T| <= 2^{N(H+delta)}."""
    ts = typical_set(p, n, delta)
    mass = ts.total_mass
    log_card = math.log2(ts.cardinality) if ts.cardinality else -math.inf
    log_mass = math.log2(mass) if mass else -math.inf
    return TypicalBounds(
        cardinality=ts.cardinality,
        mass=mass,
        log2_cardinality=log_card,
        log2_lower=log_mass + n * (ts.entropy - delta),
        log2_upper=n * (ts.entropy + delta),
    )


def typical_lemma_mass(p: Sequence[Number] | State, n: int, rate: float) -> Fraction:
    """Largest mass carried by floor(2^{2NR-1}) message entries."""
    k = max(1, math.floor(2 ** (2 * n * rate - 1)))
    return top_mass(message_spectrum(p, n), k)


def spectrum_entropy(spectrum: Sequence[SpectrumEntry]) -> float:
    """Shannon entropy (bits) of the weight vector described by a spectrum."""
    weights = np.array([float(e.weight) for e in spectrum])
    mults = np.array([float(e.multiplicity) for e in spectrum])
    # log2 of the exact weight avoids underflow for long messages
    logs = np.array([math.log2(e.weight.numerator) - math.log2(e.weight.denominator) for e in spectrum])
    return float(-(mults * weights * logs).sum())
