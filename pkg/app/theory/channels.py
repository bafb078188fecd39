"""Deterministic transformations of BCT systems.

A channel from a system of size D_A to one of size D_B is given, for every
input pure index i, by a distribution over (output index m, sign tau). With an
ancilla it acts as (x k)_s -> sum lambda^(x)_{m,tau} (m k)_{tau s}; on the bare
system the signs are marginalized. Channels between composite systems are
stored flat, by the canonical linear index of the composite.
"""

from __future__ import annotations

import logging
import math
import re
from collections import defaultdict
from fractions import Fraction
from typing import Callable, Iterable, Mapping, NamedTuple

import numpy as np

from app.theory.errors import InvalidChannelError, ShapeMismatchError
from app.theory.opt_core import (
    MINUS,
    PLUS,
    SIGN_SYMBOLS,
    SYMBOL_SIGNS,
    Number,
    PureIndex,
    State,
    StateDelta,
    SystemShape,
    WeightVector,
    as_rational,
    bipartition,
    format_rational,
    join,
)

logger = logging.getLogger(__name__)

Outcome = tuple[int, int]
_ENTRY = re.compile(r"\(\s*(\d+)\s*,\s*([+-])\s*\)\s*=\s*(-?\d+(?:/\d+)?)")


class Channel:
    """Row-stochastic map {input i -> distribution over (m, tau)}, exact rationals."""

    __slots__ = ("in_size", "out_size", "_rows")

    def __init__(
        self,
        in_size: int,
        out_size: int,
        rows: Iterable[Mapping[Outcome, Number]],
    ):
        self.in_size = int(in_size)
        self.out_size = int(out_size)
        if self.in_size < 1 or self.out_size < 1:
            raise InvalidChannelError("channel sizes must be positive")
        converted = []
        for i, row in enumerate(rows, start=1):
            clean = {}
            for (m, tau), p in row.items():
                p = as_rational(p)
                if p < 0:
                    raise InvalidChannelError(f"negative entry {p} in row {i}")
                if not 1 <= m <= self.out_size or tau not in (PLUS, MINUS):
                    raise InvalidChannelError(f"row {i} has invalid outcome ({m}, {tau})")
                if p:
                    clean[(int(m), int(tau))] = p
            if sum(clean.values(), Fraction(0)) != 1:
                raise InvalidChannelError(f"row {i} sums to {sum(clean.values())}, expected 1")
            converted.append(clean)
        if len(converted) != self.in_size:
            raise InvalidChannelError(f"expected {self.in_size} rows, got {len(converted)}")
        self._rows = tuple(converted)

    # -- constructors --------------------------------------------------------

    @classmethod
    def from_function(
        cls, in_size: int, out_size: int, fn: Callable[[int], Mapping[Outcome, Number]]
    ) -> "Channel":
        return cls(in_size, out_size, [fn(i) for i in range(1, in_size + 1)])

    @classmethod
    def from_map(cls, in_size: int, out_size: int, fn: Callable[[int], Outcome]) -> "Channel":
        """Point-mass channel i -> fn(i) = (m, tau)."""
        return cls.from_function(in_size, out_size, lambda i: {fn(i): 1})

    @classmethod
    def identity(cls, size: int) -> "Channel":
        return cls.from_map(size, size, lambda i: (i, PLUS))

    @classmethod
    def sign_flip(cls, size: int) -> "Channel":
        return cls.from_map(size, size, lambda i: (i, MINUS))

    @classmethod
    def constant(cls, in_size: int, out_size: int, m: int = 1, tau: int = PLUS) -> "Channel":
        return cls.from_map(in_size, out_size, lambda i: (m, tau))

    # -- access --------------------------------------------------------------

    def row(self, i: int) -> Mapping[Outcome, Fraction]:
        """Distribution lambda^(i) (1-based input index)."""
        return self._rows[i - 1]

    @property
    def rows(self) -> tuple[Mapping[Outcome, Fraction], ...]:
        return self._rows

    def local_row(self, i: int) -> dict[int, Fraction]:
        """Row with the sign marginalized: m -> sum_tau lambda^(i)_{m,tau}."""
        out: dict[int, Fraction] = defaultdict(Fraction)
        for (m, _), p in self._rows[i - 1].items():
            out[m] += p
        return dict(out)

    @property
    def is_point_mass(self) -> bool:
        return all(len(row) == 1 for row in self._rows)

    def is_reversible(self) -> bool:
        """True iff every row is a point mass and i -> m is a bijection."""
        if self.in_size != self.out_size or not self.is_point_mass:
            return False
        targets = {next(iter(row))[0] for row in self._rows}
        return len(targets) == self.in_size

    def __eq__(self, other) -> bool:
        if not isinstance(other, Channel):
            return NotImplemented
        return (
            self.in_size == other.in_size
            and self.out_size == other.out_size
            and self._rows == other._rows
        )

    __hash__ = None

    def __repr__(self) -> str:
        return f"Channel({self.in_size} -> {self.out_size})"

    # -- text format ---------------------------------------------------------

    def to_text(self) -> str:
        """One line per input: ``i: (m,tau)=p ...`` with outcomes in canonical order."""
        lines = []
        for i, row in enumerate(self._rows, start=1):
            entries = sorted(row.items(), key=lambda kv: (kv[0][0], kv[0][1] == MINUS))
            body = " ".join(
                f"({m},{SIGN_SYMBOLS[tau]})={format_rational(p)}" for (m, tau), p in entries
            )
            lines.append(f"{i}: {body}\n")
        return "".join(lines)

    @classmethod
    def parse(cls, text: str, out_size: int | None = None) -> "Channel":
        """Parse :meth:`to_text` output; ``out_size`` defaults to the largest m seen."""
        rows: dict[int, dict[Outcome, Fraction]] = {}
        for line in text.splitlines():
            if not line.strip():
                continue
            head, _, body = line.partition(":")
            entries = _ENTRY.findall(body)
            if not entries:
                raise InvalidChannelError(f"no entries on line '{line}'")
            rows[int(head)] = {
                (int(m), SYMBOL_SIGNS[s]): Fraction(p) for m, s, p in entries
            }
        in_size = len(rows)
        if sorted(rows) != list(range(1, in_size + 1)):
            raise InvalidChannelError("rows must be numbered 1..D_A without gaps")
        if out_size is None:
            out_size = max(m for row in rows.values() for m, _ in row)
        return cls(in_size, out_size, [rows[i] for i in range(1, in_size + 1)])


# ---------------------------------------------------------------------------
# Action on states
# ---------------------------------------------------------------------------


def apply_local(channel: Channel, vector: WeightVector) -> WeightVector:
    """Act on a bare system of size D_A; signs are marginalized.

    Composite inputs whose total size is D_A are read through their canonical
    linear index. The result is a single-system vector of size D_B, of the
    same kind (State or StateDelta) as the input.
    """
    shape = vector.shape
    if shape.size != channel.in_size:
        raise ShapeMismatchError(
            f"channel expects size {channel.in_size}, input has size {shape.size}"
        )
    out: dict[PureIndex, Fraction] = defaultdict(Fraction)
    for x, w in vector.weights.items():
        for m, p in channel.local_row(shape.linear_index(x) + 1).items():
            out[PureIndex((m,))] += w * p
    return type(vector)(_single(channel.out_size), out)


def apply_with_ancilla(
    channel: Channel, state: WeightVector, target_cut: int, side: str = "left"
) -> WeightVector:
    """Act on one block of a bipartite composite.

    The state is split at ``target_cut`` into (L R)_s. With ``side="left"`` the
    channel acts on L, otherwise on R; the targeted block is read as one system
    of its total size and replaced by a single factor of size D_B.

    Raises:
        ShapeMismatchError: If the targeted block's size differs from D_A.
        InvalidCutError: If the cut is outside 1..n-1.
    """
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    shape = state.shape
    if shape.n == 1:
        return apply_local(channel, state)
    left_shape, right_shape = shape.sub(0, target_cut), shape.sub(target_cut)
    target_shape = left_shape if side == "left" else right_shape
    if target_shape.size != channel.in_size:
        raise ShapeMismatchError(
            f"channel expects size {channel.in_size}, targeted block has size {target_shape.size}"
        )
    out_block = _single(channel.out_size)
    if side == "left":
        out_shape = out_block.compose(right_shape)
    else:
        out_shape = left_shape.compose(out_block)

    out: dict[PureIndex, Fraction] = defaultdict(Fraction)
    for x, w in state.weights.items():
        left, right, s = bipartition(x, target_cut)
        target = left if side == "left" else right
        row = channel.row(target_shape.linear_index(target) + 1)
        for (m, tau), p in row.items():
            block = PureIndex((m,))
            y = join(block, right, tau * s) if side == "left" else join(left, block, tau * s)
            out[y] += w * p
    return type(state)(out_shape, out)


def compose_seq(second: Channel, first: Channel) -> Channel:
    """Sequential composition ``second o first``; signs multiply."""
    if first.out_size != second.in_size:
        raise ShapeMismatchError(
            f"cannot compose: first outputs size {first.out_size}, second expects {second.in_size}"
        )
    rows = []
    for row in first.rows:
        out: dict[Outcome, Fraction] = defaultdict(Fraction)
        for (m, tau), p in row.items():
            for (k, tau2), q in second.row(m).items():
                out[(k, tau * tau2)] += p * q
        rows.append(out)
    return Channel(first.in_size, second.out_size, rows)


def _single(size: int) -> SystemShape:
    return SystemShape.single(size)


# ---------------------------------------------------------------------------
# Digitization
# ---------------------------------------------------------------------------


class Digitizer(NamedTuple):
    encoder: Channel
    decoder: Channel
    k: int


def digitizer_length(a_size: int, b_size: int) -> int:
    """Least k with (2 D_B)^k >= 2 D_A, i.e. the register B^k holds A."""
    k = 1
    while (2 * b_size) ** k < 2 * a_size:
        k += 1
    return k


def build_digitizer(a_size: int, b_size: int) -> Digitizer:
    """Encode A into k copies of B and decode it back exactly.

    The encoder sends i to the i-th pure index of B^k (canonical order) with
    sign +; the decoder inverts it and sends every other pure index to (1, +).
    """
    if a_size < 2 or b_size < 2:
        raise ShapeMismatchError("digitizer sizes must be >= 2")
    k = digitizer_length(a_size, b_size)
    register = SystemShape.power(b_size, k).size
    encoder = Channel.from_map(a_size, register, lambda i: (i, PLUS))
    decoder = Channel.from_map(register, a_size, lambda j: (j if j <= a_size else 1, PLUS))
    logger.debug(f"Digitizer {a_size} -> {b_size}^{k} (register size {register})")
    return Digitizer(encoder, decoder, k)


def asymptotic_rate(b1_size: int, b2_size: int, k1: int) -> int:
    """Least M with (2 D_B2)^M >= (2 D_B1)^k1, i.e. ceil(k1 log_{2 D_B2} 2 D_B1)."""
    if b1_size < 2 or b2_size < 2 or k1 < 1:
        raise ShapeMismatchError("asymptotic_rate needs sizes >= 2 and k1 >= 1")
    base, target = 2 * b2_size, (2 * b1_size) ** k1
    # float estimate, corrected exactly on integers
    m = max(math.ceil(k1 * math.log(2 * b1_size, base)), 0)
    while base**m < target:
        m += 1
    while m > 0 and base ** (m - 1) >= target:
        m -= 1
    return m


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------


def random_channel(
    in_size: int, out_size: int, rng: np.random.Generator, denominator: int = 12
) -> Channel:
    """Channel with random rational rows (integer weights up to ``denominator``)."""
    outcomes = [(m, tau) for m in range(1, out_size + 1) for tau in (PLUS, MINUS)]
    rows = []
    for _ in range(in_size):
        weights = rng.integers(0, denominator + 1, size=len(outcomes))
        if weights.sum() == 0:
            weights[rng.integers(len(outcomes))] = 1
        total = int(weights.sum())
        rows.append({o: Fraction(int(w), total) for o, w in zip(outcomes, weights) if w})
    return Channel(in_size, out_size, rows)


def random_reversible_channel(size: int, rng: np.random.Generator) -> Channel:
    """Permutation of the pure states with random signs."""
    perm = rng.permutation(size) + 1
    signs = rng.choice([PLUS, MINUS], size=size)
    return Channel.from_map(size, size, lambda i: (int(perm[i - 1]), int(signs[i - 1])))


def random_delta(shape: SystemShape, rng: np.random.Generator, denominator: int = 10) -> StateDelta:
    """Difference of two random states on ``shape``."""
    return random_state(shape, rng, denominator) - random_state(shape, rng, denominator)


def random_state(shape: SystemShape, rng: np.random.Generator, denominator: int = 10) -> State:
    """Deterministic state with random rational weights."""
    indices = list(shape.pure_indices())
    weights = rng.integers(0, denominator + 1, size=len(indices))
    if weights.sum() == 0:
        weights[0] = 1
    total = int(weights.sum())
    return State(shape, {x: Fraction(int(w), total) for x, w in zip(indices, weights) if w})
