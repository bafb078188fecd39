"""Systems, pure-state indexing, states, effects and the operational norm.

Pure states of a composite of n elementary systems are labelled by n local
indices and n-1 signs. Stored indices always use the left-nested association
((...((i1 i2)_s1 i3)_s2 ...) in)_s(n-1); other association trees only appear
transiently inside :func:`reassociate`.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from itertools import product
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Union

import numpy as np
from scipy.optimize import linprog

from app.config.settings import settings
from app.theory.errors import (
    InvalidCutError,
    InvalidEffectError,
    InvalidStateError,
    OracleBoundError,
    ShapeMismatchError,
)

logger = logging.getLogger(__name__)

PLUS = 1
MINUS = -1
SIGN_SYMBOLS = {PLUS: "+", MINUS: "-"}
SYMBOL_SIGNS = {"+": PLUS, "-": MINUS}

Number = Union[int, float, str, Fraction]
Tree = Union[int, tuple]


def as_rational(value: Number) -> Fraction:
    """Convert a number to an exact rational.

    Floats are read through their decimal repr, so ``0.9`` becomes ``9/10``.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


def format_rational(value: Fraction) -> str:
    """Render a rational as ``p/q`` (denominator always present)."""
    return f"{value.numerator}/{value.denominator}"


# ---------------------------------------------------------------------------
# Systems and pure indices
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PureIndex:
    """Label of a pure state: local indices (1-based) and left-nested signs."""

    locals: tuple[int, ...]
    signs: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "locals", tuple(int(i) for i in self.locals))
        object.__setattr__(self, "signs", tuple(int(s) for s in self.signs))
        if len(self.signs) != max(len(self.locals) - 1, 0):
            raise ShapeMismatchError(
                f"{len(self.locals)} locals need {max(len(self.locals) - 1, 0)} signs, "
                f"got {len(self.signs)}"
            )
        if any(s not in (PLUS, MINUS) for s in self.signs):
            raise ShapeMismatchError(f"signs must be +1/-1, got {self.signs}")

    @property
    def n(self) -> int:
        return len(self.locals)

    def __str__(self) -> str:
        locs = ",".join(str(i) for i in self.locals)
        sgns = "".join(SIGN_SYMBOLS[s] for s in self.signs)
        return f"{locs}|{sgns}"

    @classmethod
    def parse(cls, text: str) -> "PureIndex":
        """Parse the ``i1,...,in|s1...s(n-1)`` form."""
        locs, _, sgns = text.strip().partition("|")
        locals_ = tuple(int(t) for t in locs.split(",") if t.strip())
        try:
            signs = tuple(SYMBOL_SIGNS[c] for c in sgns.strip())
        except KeyError as e:
            raise ShapeMismatchError(f"bad sign symbol in '{text}'") from e
        return cls(locals_, signs)


@dataclass(frozen=True)
class SystemShape:
    """Ordered composite of elementary BCT systems (empty = trivial system I)."""

    factors: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(int(d) for d in self.factors))
        if any(d < 2 for d in self.factors):
            raise ShapeMismatchError(f"elementary sizes must be >= 2, got {self.factors}")

    @classmethod
    def trivial(cls) -> "SystemShape":
        return cls(())

    @classmethod
    def single(cls, size: int) -> "SystemShape":
        return cls((size,))

    @classmethod
    def power(cls, size: int, n: int) -> "SystemShape":
        """Shape of ``n`` copies of the system of the given size."""
        return cls((size,) * n)

    @property
    def is_trivial(self) -> bool:
        return not self.factors

    @property
    def n(self) -> int:
        return len(self.factors)

    @property
    def size(self) -> int:
        """Closed form 2^(n-1) * prod(D_k) (1 for the trivial system)."""
        if self.is_trivial:
            return 1
        return 2 ** (self.n - 1) * reduce(lambda a, b: a * b, self.factors, 1)

    def recursive_size(self) -> int:
        """Size obtained by applying D_AB = 2 D_A D_B left-nested."""
        if self.is_trivial:
            return 1
        return reduce(lambda acc, d: 2 * acc * d, self.factors[1:], self.factors[0])

    def compose(self, other: "SystemShape") -> "SystemShape":
        return SystemShape(self.factors + other.factors)

    def sub(self, start: int, stop: int | None = None) -> "SystemShape":
        return SystemShape(self.factors[start:stop])

    def validate(self, x: PureIndex) -> None:
        if x.n != self.n:
            raise ShapeMismatchError(f"index {x} has {x.n} locals, shape has {self.n} factors")
        for i, d in zip(x.locals, self.factors):
            if not 1 <= i <= d:
                raise ShapeMismatchError(f"local index {i} out of range 1..{d}")

    def linear_index(self, x: PureIndex) -> int:
        """0-based mixed-radix position: locals most significant, then signs (+ < -)."""
        local_part = 0
        for i, d in zip(x.locals, self.factors):
            local_part = local_part * d + (i - 1)
        sign_part = 0
        for s in x.signs:
            sign_part = 2 * sign_part + (0 if s == PLUS else 1)
        return local_part * 2 ** max(self.n - 1, 0) + sign_part

    def index_at(self, k: int) -> PureIndex:
        """Inverse of :meth:`linear_index`."""
        if not 0 <= k < self.size:
            raise ShapeMismatchError(f"linear index {k} out of range 0..{self.size - 1}")
        n_signs = max(self.n - 1, 0)
        local_part, sign_part = divmod(k, 2**n_signs)
        signs = []
        for _ in range(n_signs):
            sign_part, bit = divmod(sign_part, 2)
            signs.append(MINUS if bit else PLUS)
        locals_ = []
        for d in reversed(self.factors):
            local_part, r = divmod(local_part, d)
            locals_.append(r + 1)
        return PureIndex(tuple(reversed(locals_)), tuple(reversed(signs)))

    def pure_indices(self) -> Iterator[PureIndex]:
        """All pure indices in canonical order."""
        if self.is_trivial:
            yield PureIndex(())
            return
        sign_strings = list(product((PLUS, MINUS), repeat=self.n - 1))
        for locals_ in product(*(range(1, d + 1) for d in self.factors)):
            for signs in sign_strings:
                yield PureIndex(locals_, signs)


def compose_shapes(a: SystemShape, b: SystemShape) -> SystemShape:
    """Parallel composition of two shapes (trivial system is the identity)."""
    return a.compose(b)


# ---------------------------------------------------------------------------
# Association trees and reassociation moves
# ---------------------------------------------------------------------------


def left_nested_tree(n: int, offset: int = 0) -> Tree:
    """Tree ((...((0 1) 2) ...) n-1) over leaves offset..offset+n-1."""
    if n < 1:
        raise ShapeMismatchError("a tree needs at least one leaf")
    return reduce(lambda acc, k: (acc, k), range(offset + 1, offset + n), offset)


def right_nested_tree(n: int, offset: int = 0) -> Tree:
    if n < 1:
        raise ShapeMismatchError("a tree needs at least one leaf")
    tree: Tree = offset + n - 1
    for k in range(offset + n - 2, offset - 1, -1):
        tree = (k, tree)
    return tree


def tree_leaves(tree: Tree) -> list[int]:
    if isinstance(tree, int):
        return [tree]
    left, right = tree
    return tree_leaves(left) + tree_leaves(right)


def _tree_width(tree: Tree) -> int:
    return 1 if isinstance(tree, int) else _tree_width(tree[0]) + _tree_width(tree[1])


@dataclass(frozen=True)
class _Node:
    left: "_Node | int"
    right: "_Node | int"
    sign: int
    width: int


def _width(value: "_Node | int") -> int:
    return 1 if isinstance(value, int) else value.width


def _node(left, right, sign: int) -> _Node:
    return _Node(left, right, sign, _width(left) + _width(right))


def _label(tree: Tree, locals_: Iterator[int], signs: Iterator[int]) -> "_Node | int":
    # signs are consumed in post-order
    if isinstance(tree, int):
        return next(locals_)
    left = _label(tree[0], locals_, signs)
    right = _label(tree[1], locals_, signs)
    return _node(left, right, next(signs))


def _unlabel(value: "_Node | int", locals_: list[int], signs: list[int]) -> None:
    if isinstance(value, int):
        locals_.append(value)
        return
    _unlabel(value.left, locals_, signs)
    _unlabel(value.right, locals_, signs)
    signs.append(value.sign)


def _rotate_right(value: _Node) -> _Node:
    # ((a b)_s1 c)_s2 -> (a (b c)_{s1 s2})_s1
    inner = value.left
    return _node(inner.left, _node(inner.right, value.right, inner.sign * value.sign), inner.sign)


def _rotate_left(value: _Node) -> _Node:
    # (a (b c)_t)_u -> ((a b)_u c)_{u t}
    inner = value.right
    return _node(_node(value.left, inner.left, value.sign), inner.right, value.sign * inner.sign)


def _reshape(value: "_Node | int", tree: Tree) -> "_Node | int":
    if isinstance(tree, int):
        return value
    target = _tree_width(tree[0])
    while _width(value.left) > target:
        value = _rotate_right(value)
    while _width(value.left) < target:
        value = _rotate_left(value)
    return _node(_reshape(value.left, tree[0]), _reshape(value.right, tree[1]), value.sign)


def _check_tree(tree: Tree, n: int) -> None:
    if tree_leaves(tree) != list(range(n)):
        raise ShapeMismatchError(f"tree {tree} does not describe the factor list 0..{n - 1}")


def reassociate(x: PureIndex, from_tree: Tree, to_tree: Tree) -> PureIndex:
    """Re-index a pure state between two association trees.

    Signs are read and written in post-order of each tree; locals never move.
    The map is a composite of elementary ``((i j)_s1 k)_s2 = (i (j k)_{s1 s2})_s1``
    moves and their inverses.

    Raises:
        ShapeMismatchError: If the trees do not describe the index's factor list.
    """
    _check_tree(from_tree, x.n)
    _check_tree(to_tree, x.n)
    if from_tree == to_tree:
        return x
    value = _label(from_tree, iter(x.locals), iter(x.signs))
    value = _reshape(value, to_tree)
    locals_: list[int] = []
    signs: list[int] = []
    _unlabel(value, locals_, signs)
    return PureIndex(tuple(locals_), tuple(signs))


def bipartition(x: PureIndex, cut: int) -> tuple[PureIndex, PureIndex, int]:
    """Write a left-nested index as ``(L R)_s`` with L over factors 1..cut.

    Returns:
        Tuple of (left block index, right block index, relative sign)
    """
    n = x.n
    if not 1 <= cut < n:
        raise InvalidCutError(f"cut must be in 1..{n - 1}, got {cut}")
    target = (left_nested_tree(cut), left_nested_tree(n - cut, offset=cut))
    value = _reshape(_label(left_nested_tree(n), iter(x.locals), iter(x.signs)), target)
    parts = []
    for block in (value.left, value.right):
        locals_: list[int] = []
        signs: list[int] = []
        _unlabel(block, locals_, signs)
        parts.append(PureIndex(tuple(locals_), tuple(signs)))
    return parts[0], parts[1], value.sign


def join(left: PureIndex, right: PureIndex, sign: int) -> PureIndex:
    """Inverse of :func:`bipartition`: the left-nested index of ``(L R)_sign``."""
    if right.n == 1:
        return PureIndex(left.locals + right.locals, left.signs + (sign,))
    value = _node(
        _label(left_nested_tree(left.n), iter(left.locals), iter(left.signs)),
        _label(left_nested_tree(right.n, offset=left.n), iter(right.locals), iter(right.signs)),
        sign,
    )
    value = _reshape(value, left_nested_tree(left.n + right.n))
    locals_: list[int] = []
    signs: list[int] = []
    _unlabel(value, locals_, signs)
    return PureIndex(tuple(locals_), tuple(signs))


# ---------------------------------------------------------------------------
# Weight vectors: states and state differences
# ---------------------------------------------------------------------------


class WeightVector:
    """Rational weights over the pure indices of a shape (zeros not stored)."""

    __slots__ = ("_shape", "_weights", "_order")

    def __init__(
        self,
        shape: SystemShape,
        weights: Mapping[PureIndex, Number] | Iterable[tuple[PureIndex, Number]] = (),
    ):
        items = weights.items() if isinstance(weights, Mapping) else weights
        merged: dict[PureIndex, Fraction] = defaultdict(Fraction)
        for x, w in items:
            shape.validate(x)
            merged[x] += as_rational(w)
        self._shape = shape
        self._weights = {x: w for x, w in merged.items() if w != 0}
        self._order: list[PureIndex] | None = None
        self._check()

    def _check(self) -> None:
        pass

    @property
    def shape(self) -> SystemShape:
        return self._shape

    @property
    def weights(self) -> Mapping[PureIndex, Fraction]:
        return MappingProxyType(self._weights)

    def __getitem__(self, x: PureIndex) -> Fraction:
        return self._weights.get(x, Fraction(0))

    def __len__(self) -> int:
        return len(self._weights)

    def support(self) -> list[PureIndex]:
        """Nonzero indices in canonical order."""
        if self._order is None:
            self._order = sorted(self._weights, key=self._shape.linear_index)
        return self._order

    def items(self) -> Iterator[tuple[PureIndex, Fraction]]:
        for x in self.support():
            yield x, self._weights[x]

    def total(self) -> Fraction:
        return sum(self._weights.values(), Fraction(0))

    def __eq__(self, other) -> bool:
        if not isinstance(other, WeightVector):
            return NotImplemented
        return self._shape == other._shape and self._weights == other._weights

    __hash__ = None

    def __repr__(self) -> str:
        body = ", ".join(f"{x}: {format_rational(w)}" for x, w in self.items())
        return f"{type(self).__name__}({self._shape.factors}, {{{body}}})"

    def to_text(self) -> str:
        """Canonical text form, one ``i1,...,in|s1...: p/q`` line per nonzero weight."""
        return "".join(f"{x}: {format_rational(w)}\n" for x, w in self.items())

    def vector(self) -> list[Fraction]:
        """Dense weights in canonical order (every pure index of the shape)."""
        return [self[x] for x in self._shape.pure_indices()]


class StateDelta(WeightVector):
    """Signed weight vector (difference of states, scaled arbitrarily)."""

    __slots__ = ()

    def _linear(self, other: WeightVector, factor: int) -> "StateDelta":
        if other.shape != self.shape:
            raise ShapeMismatchError(f"shapes differ: {self.shape} vs {other.shape}")
        merged = dict(self._weights)
        for x, w in other.weights.items():
            merged[x] = merged.get(x, Fraction(0)) + factor * w
        return StateDelta(self.shape, merged)

    def __add__(self, other: WeightVector) -> "StateDelta":
        return self._linear(other, 1)

    def __sub__(self, other: WeightVector) -> "StateDelta":
        return self._linear(other, -1)

    def __mul__(self, scalar: Number) -> "StateDelta":
        c = as_rational(scalar)
        return StateDelta(self.shape, {x: c * w for x, w in self._weights.items()})

    __rmul__ = __mul__

    def __neg__(self) -> "StateDelta":
        return self * -1


class State(WeightVector):
    """Sub-normalized state: non-negative weights summing to at most one."""

    __slots__ = ()

    def _check(self) -> None:
        if any(w < 0 for w in self._weights.values()):
            raise InvalidStateError("state weights must be non-negative")
        if self.total() > 1:
            raise InvalidStateError(f"state weights sum to {self.total()} > 1")

    @classmethod
    def pure(cls, shape: SystemShape, x: PureIndex) -> "State":
        return cls(shape, {x: 1})

    @classmethod
    def from_distribution(cls, p: Iterable[Number]) -> "State":
        """Single-system state sum_i p_i |i)."""
        probs = [as_rational(v) for v in p]
        shape = SystemShape.single(len(probs))
        return cls(shape, {PureIndex((i + 1,)): w for i, w in enumerate(probs)})

    @classmethod
    def from_text(cls, shape: SystemShape, text: str) -> "State":
        weights = []
        for line in text.splitlines():
            if not line.strip():
                continue
            key, _, value = line.rpartition(":")
            weights.append((PureIndex.parse(key), Fraction(value.strip())))
        return cls(shape, weights)

    @property
    def is_deterministic(self) -> bool:
        return self.total() == 1

    @property
    def is_pure(self) -> bool:
        return len(self._weights) == 1 and next(iter(self._weights.values())) == 1

    def __sub__(self, other: WeightVector) -> StateDelta:
        return StateDelta(self.shape, self._weights) - other

    def as_delta(self) -> StateDelta:
        return StateDelta(self.shape, self._weights)


def compose_states(rho: State, sigma: State) -> State:
    """Parallel composition: |i) x |j) = 1/2 [(ij)_+ + (ij)_-], extended bilinearly."""
    if rho.shape.is_trivial:
        c = rho.total()
        return State(sigma.shape, {x: c * w for x, w in sigma.weights.items()})
    if sigma.shape.is_trivial:
        c = sigma.total()
        return State(rho.shape, {x: c * w for x, w in rho.weights.items()})
    half = Fraction(1, 2)
    out: dict[PureIndex, Fraction] = defaultdict(Fraction)
    for x, wx in rho.items():
        for y, wy in sigma.items():
            for s in (PLUS, MINUS):
                out[join(x, y, s)] += half * wx * wy
    return State(rho.shape.compose(sigma.shape), out)


def tensor_power(rho: State, n: int) -> State:
    """rho composed with itself n times, left-nested."""
    if n < 1:
        raise ShapeMismatchError("tensor power needs n >= 1")
    return reduce(compose_states, [rho] * (n - 1), rho)


def flatten(vector: WeightVector) -> WeightVector:
    """Re-label a composite vector on the unique single system of the same size."""
    flat = SystemShape.single(vector.shape.size) if vector.shape.size > 1 else vector.shape
    if flat == vector.shape:
        return vector
    mapped = {
        PureIndex((vector.shape.linear_index(x) + 1,)): w for x, w in vector.weights.items()
    }
    return type(vector)(flat, mapped)


def unflatten(vector: WeightVector, shape: SystemShape) -> WeightVector:
    """Inverse of :func:`flatten` for a chosen composite shape."""
    if vector.shape.size != shape.size:
        raise ShapeMismatchError(f"size {vector.shape.size} cannot carry shape {shape.factors}")
    if vector.shape == shape:
        return vector
    mapped = {shape.index_at(x.locals[0] - 1): w for x, w in vector.weights.items()}
    return type(vector)(shape, mapped)


# ---------------------------------------------------------------------------
# Effects and observation tests
# ---------------------------------------------------------------------------


class Effect:
    """Effect given by its values on pure states (missing indices read as 0)."""

    __slots__ = ("shape", "_values")

    def __init__(self, shape: SystemShape, values: Mapping[PureIndex, Number]):
        converted = {}
        for x, v in values.items():
            shape.validate(x)
            v = as_rational(v)
            if not 0 <= v <= 1:
                raise InvalidEffectError(f"effect value {v} on {x} outside [0, 1]")
            if v:
                converted[x] = v
        self.shape = shape
        self._values = converted

    @classmethod
    def deterministic(cls, shape: SystemShape) -> "Effect":
        return cls(shape, {x: 1 for x in shape.pure_indices()})

    @classmethod
    def atomic(cls, shape: SystemShape, x: PureIndex, scale: Number = 1) -> "Effect":
        return cls(shape, {x: scale})

    def __getitem__(self, x: PureIndex) -> Fraction:
        return self._values.get(x, Fraction(0))

    @property
    def is_atomic(self) -> bool:
        return len(self._values) == 1

    def __call__(self, vector: WeightVector) -> Fraction:
        """Pairing (a|rho)."""
        if vector.shape != self.shape:
            raise ShapeMismatchError("effect and state live on different shapes")
        return sum((self[x] * w for x, w in vector.weights.items()), Fraction(0))


class ObservationTest:
    """Finite list of effects summing to the deterministic effect."""

    __slots__ = ("shape", "effects")

    def __init__(self, shape: SystemShape, effects: Iterable[Effect]):
        self.shape = shape
        self.effects = tuple(effects)
        for a in self.effects:
            if a.shape != shape:
                raise ShapeMismatchError("test elements live on different shapes")
        for x in shape.pure_indices():
            total = sum((a[x] for a in self.effects), Fraction(0))
            if total != 1:
                raise InvalidEffectError(f"test elements sum to {total} on {x}, expected 1")

    @property
    def is_atomic(self) -> bool:
        return all(a.is_atomic for a in self.effects)

    def outcome_distribution(self, vector: WeightVector) -> list[Fraction]:
        return [a(vector) for a in self.effects]


def discrimination_test(shape: SystemShape) -> ObservationTest:
    """Test of atomic effects, one per pure state; it perfectly discriminates them."""
    return ObservationTest(shape, [Effect.atomic(shape, x) for x in shape.pure_indices()])


# ---------------------------------------------------------------------------
# Operational norm
# ---------------------------------------------------------------------------


def op_norm(delta: WeightVector) -> Fraction:
    """Operational norm of a state difference.

    In a simplicial theory every set of pure states is jointly perfectly
    discriminable, so the optimal binary test reads the sign of each weight
    and the norm is the l1 norm in simplex coordinates.
    """
    return sum((abs(w) for w in delta.weights.values()), Fraction(0))


def op_norm_lp_oracle(delta: WeightVector, size_bound: int | None = None) -> Fraction:
    """Operational norm as the LP sup over binary tests {a0, e - a0}, 0 <= a0 <= e.

    The LP is solved with HiGHS; its optimal vertex is 0/1-valued, so the
    chosen test is read back and evaluated exactly.

    Raises:
        OracleBoundError: If the shape is larger than the oracle bound.
    """
    bound = settings.oracle_size_bound if size_bound is None else size_bound
    shape = delta.shape
    if shape.size > bound:
        raise OracleBoundError(f"shape size {shape.size} above oracle bound {bound}")
    indices = list(shape.pure_indices())
    values = [delta[x] for x in indices]
    if not any(values):
        return Fraction(0)
    # maximize sum (2 a0 - 1) delta  <=>  minimize -sum a0 delta; the LP is
    # separable, so only the sign of each weight enters the costs
    c = -np.array([(v > 0) - (v < 0) for v in values], dtype=float)
    result = linprog(c, bounds=[(0.0, 1.0)] * len(indices), method="highs")
    if not result.success:
        raise RuntimeError(f"LP oracle failed: {result.message}")
    a0 = [1 if xi > 0.5 else 0 for xi in result.x]
    logger.debug(f"LP oracle on {len(indices)} indices, objective {-result.fun:.6g}")
    return sum(((2 * a - 1) * v for a, v in zip(a0, values)), Fraction(0))
