"""Codecs through M bibits, their figures of merit and the minimal compression rate.

A codec encodes the N-letter message (a system of size D_A^N 2^(N-1)) into the
register B^M of M bibits (size 2^(2M-1)) and decodes it back. Its error on the
mother dilation is D~ = 2 (1 - retained mass), where the retained mass is the
weight of the message entries the round trip returns with sign +.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations, product
from typing import Callable, Iterable, Protocol, Sequence

from app.config.settings import settings
from app.theory.channels import Channel, apply_with_ancilla, compose_seq
from app.theory.dilation import mother_dilation, product_dilation, random_dilation
from app.theory.errors import InfeasibleCodecError, InvariantViolation, OracleBoundError
from app.theory.opt_core import (
    MINUS,
    PLUS,
    Number,
    PureIndex,
    State,
    SystemShape,
    as_rational,
    compose_states,
    flatten,
    op_norm,
)
from app.theory.typical import (
    TypicalSet,
    as_distribution,
    check_memory_bound,
    message_distribution,
    message_spectrum,
    source_entropy,
    top_mass,
    type_probability,
    typical_set,
)

logger = logging.getLogger(__name__)


def register_shape(m: int) -> SystemShape:
    """B^M: M bibits."""
    return SystemShape.power(2, m)


def register_size(m: int) -> int:
    return 2 ** (2 * m - 1)


def retention_threshold(epsilon: Number) -> Fraction:
    """D~ < epsilon  <=>  retained mass > 1 - epsilon/2."""
    eps = as_rational(epsilon)
    if eps <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    return 1 - eps / 2


def information_target(h: float) -> float:
    """(H(p) + 1) / 2."""
    return (h + 1) / 2


class Codec(Protocol):
    p: tuple[Fraction, ...]
    n: int
    m: int

    def round_trip_channel(self) -> Channel: ...

    def retained_mass(self) -> Fraction: ...


# ---------------------------------------------------------------------------
# Explicit codecs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChannelCodec:
    """Encoder/decoder pair given as explicit flat channels."""

    p: tuple[Fraction, ...]
    n: int
    m: int
    encoder: Channel
    decoder: Channel

    def __post_init__(self):
        message = SystemShape.power(len(self.p), self.n).size
        if self.encoder.in_size != message or self.decoder.out_size != message:
            raise InfeasibleCodecError("codec does not act on the message system")
        if self.encoder.out_size != register_size(self.m) or self.decoder.in_size != register_size(self.m):
            raise InfeasibleCodecError(f"codec register is not B^{self.m}")

    @cached_property
    def _round_trip(self) -> Channel:
        return compose_seq(self.decoder, self.encoder)

    def round_trip_channel(self) -> Channel:
        return self._round_trip

    def retained_mass(self) -> Fraction:
        """sum_x w_x (D o E)^(x)_{x,+}."""
        shape = SystemShape.power(len(self.p), self.n)
        scale = Fraction(1, 2 ** (self.n - 1))
        total = Fraction(0)
        for k in range(shape.size):
            x = shape.index_at(k)
            w = type_probability(self.p, _counts(x.locals, len(self.p))) * scale
            if w:
                total += w * self._round_trip.row(k + 1).get((k + 1, PLUS), Fraction(0))
        return total


def _counts(locals_: Sequence[int], d: int) -> tuple[int, ...]:
    counts = [0] * d
    for i in locals_:
        counts[i - 1] += 1
    return tuple(counts)


@dataclass(frozen=True)
class TypicalSetCodec:
    """Point-mass codec through the typical set.

    Typical (i, s) is sent to codeword h(i, s) = rank(i) 2^(N-1) + rank(s) with
    sign +; every other entry goes to the fallback codeword h(first typical, +...+).
    The decoder inverts h and sends unused codewords to the fallback string.
    """

    p: tuple[Fraction, ...]
    n: int
    m: int
    delta: float
    typical: TypicalSet = field(repr=False)

    @property
    def message_shape(self) -> SystemShape:
        return SystemShape.power(len(self.p), self.n)

    @property
    def register_shape(self) -> SystemShape:
        return register_shape(self.m)

    @property
    def used_codewords(self) -> int:
        return self.typical.cardinality * 2 ** (self.n - 1)

    @property
    def fallback_codeword(self) -> PureIndex:
        return self.register_shape.index_at(0)

    @cached_property
    def fallback_string(self) -> PureIndex:
        locals_ = self.typical.unrank(0) if not self.typical.is_empty else (1,) * self.n
        return PureIndex(locals_, (PLUS,) * (self.n - 1))

    def h(self, x: PureIndex) -> int:
        """Codeword linear index of a typical entry."""
        sign_rank = 0
        for s in x.signs:
            sign_rank = 2 * sign_rank + (0 if s == PLUS else 1)
        return self.typical.rank(x.locals) * 2 ** (self.n - 1) + sign_rank

    def encode(self, x: PureIndex) -> PureIndex:
        if x.locals in self.typical:
            return self.register_shape.index_at(self.h(x))
        return self.fallback_codeword

    def decode(self, y: PureIndex) -> PureIndex:
        k = self.register_shape.linear_index(y)
        if k >= self.used_codewords:
            return self.fallback_string
        rank, sign_rank = divmod(k, 2 ** (self.n - 1))
        signs = []
        for _ in range(self.n - 1):
            sign_rank, bit = divmod(sign_rank, 2)
            signs.append(MINUS if bit else PLUS)
        return PureIndex(self.typical.unrank(rank), tuple(reversed(signs)))

    def retained_mass(self) -> Fraction:
        if self.typical.is_empty:
            x = self.fallback_string
            return type_probability(self.p, _counts(x.locals, len(self.p))) / 2 ** (self.n - 1)
        return self.typical.total_mass

    def encoder_channel(self) -> Channel:
        shape = self.message_shape
        check_memory_bound(shape.size)
        reg = self.register_shape
        return Channel.from_map(
            shape.size,
            reg.size,
            lambda k: (reg.linear_index(self.encode(shape.index_at(k - 1))) + 1, PLUS),
        )

    def decoder_channel(self) -> Channel:
        shape = self.message_shape
        check_memory_bound(shape.size)
        reg = self.register_shape
        check_memory_bound(reg.size)
        return Channel.from_map(
            reg.size,
            shape.size,
            lambda k: (shape.linear_index(self.decode(reg.index_at(k - 1))) + 1, PLUS),
        )

    def round_trip_channel(self) -> Channel:
        return compose_seq(self.decoder_channel(), self.encoder_channel())

    def as_channel_codec(self) -> ChannelCodec:
        return ChannelCodec(self.p, self.n, self.m, self.encoder_channel(), self.decoder_channel())


def codec_length(h: float, n: int, delta: float, tolerance: float | None = None) -> int:
    """M = ceil(N[(H+1)/2 + delta]); values within tolerance of an integer are rounded."""
    tolerance = settings.tolerance if tolerance is None else tolerance
    raw = n * (information_target(h) + delta)
    nearest = round(raw)
    m = nearest if abs(raw - nearest) <= tolerance * max(1.0, raw) else math.ceil(raw)
    return max(m, 1)


def build_codec(p: Sequence[Number] | State, n: int, delta: float | None = None) -> TypicalSetCodec:
    """Typical-set codec with M = ceil(N[(H+1)/2 + delta]).

    Raises:
        InfeasibleCodecError: If the typical entries do not fit into B^M.
    """
    probs = as_distribution(p)
    delta = float(settings.default_delta) if delta is None else float(delta)
    ts = typical_set(probs, n, delta)
    m = codec_length(ts.entropy, n, delta)
    codec = TypicalSetCodec(probs, n, m, delta, ts)
    if codec.used_codewords > register_size(m):
        raise InfeasibleCodecError(
            f"{codec.used_codewords} typical entries do not fit into B^{m} ({register_size(m)})"
        )
    logger.debug(f"Typical-set codec N={n} delta={delta}: M={m}, |T|={ts.cardinality}")
    return codec


def top_k_codec(p: Sequence[Number] | State, n: int, m: int) -> ChannelCodec:
    """Point-mass codec keeping the 2^(2M-1) heaviest message entries.

    Ties are broken by canonical index; everything else goes to codeword 1,
    and unused codewords decode to the heaviest entry.
    """
    probs = as_distribution(p)
    shape = SystemShape.power(len(probs), n)
    check_memory_bound(shape.size)
    scale = Fraction(1, 2 ** (n - 1))
    weights = [
        type_probability(probs, _counts(shape.index_at(k).locals, len(probs))) * scale
        for k in range(shape.size)
    ]
    order = sorted(range(shape.size), key=lambda k: (-weights[k], k))
    kept = order[: register_size(m)]
    slot = {k: c for c, k in enumerate(kept)}
    encoder = Channel.from_map(shape.size, register_size(m), lambda k: (slot.get(k - 1, 0) + 1, PLUS))
    decoder = Channel.from_map(
        register_size(m),
        shape.size,
        lambda c: ((kept[c - 1] if c - 1 < len(kept) else kept[0]) + 1, PLUS),
    )
    return ChannelCodec(probs, n, m, encoder, decoder)


# ---------------------------------------------------------------------------
# Figures of merit
# ---------------------------------------------------------------------------


def _norm_path(codec: Codec) -> Fraction:
    channel = codec.round_trip_channel()
    probs = codec.p
    shape = SystemShape.power(len(probs), codec.n)
    flat = SystemShape.single(shape.size)
    pair = SystemShape((shape.size, shape.size))
    scale = Fraction(1, 2 ** (codec.n - 1))
    total = Fraction(0)
    for k in range(shape.size):
        w = type_probability(probs, _counts(shape.index_at(k).locals, len(probs))) * scale
        if not w:
            continue
        x = flat.index_at(k).locals[0]
        diagonal = State.pure(pair, PureIndex((x, x), (PLUS,)))
        out = apply_with_ancilla(channel, diagonal, target_cut=1, side="left")
        total += w * op_norm(out - diagonal)
    return total


def fom_tilde(rho: State | Sequence[Number], n: int, codec: Codec, path: str = "closed") -> Fraction:
    """D~ = sum_x w_x ||((C - I) x I)(x x)_+||, exactly.

    ``path`` is "closed" (2(1 - retained mass)), "norm" (explicit channel
    action and operational norm, small N only) or "both" (cross-checked).

    Raises:
        InvariantViolation: If the two paths disagree.
    """
    probs = as_distribution(rho)
    if probs != tuple(codec.p) or n != codec.n:
        raise InfeasibleCodecError("codec was built for another source or message length")
    if path == "closed":
        return 2 * (1 - codec.retained_mass())
    if path == "norm":
        return _norm_path(codec)
    if path == "both":
        closed, norm = 2 * (1 - codec.retained_mass()), _norm_path(codec)
        if closed != norm:
            raise InvariantViolation(f"D~ closed form {closed} differs from norm path {norm}")
        return closed
    raise ValueError(f"unknown path {path!r}")


@dataclass(frozen=True)
class DilationCheck:
    fom_tilde: Fraction
    mother_error: Fraction
    max_error: Fraction
    samples: int

    @property
    def within_bound(self) -> bool:
        return self.max_error <= self.fom_tilde


def fom_dil_check(
    rho: State | Sequence[Number],
    n: int,
    codec: Codec,
    samples: int = 10,
    seed: int | None = None,
    ancilla_sizes: Sequence[int] = (2, 3),
) -> DilationCheck:
    """Largest ||(C x I)Psi - Psi|| over sampled dilations Psi of rho^N.

    The mother dilation, a product dilation and ``samples`` random dilations
    are evaluated; each must stay below D~.
    """
    probs = as_distribution(rho)
    message = flatten(message_distribution(probs, n))
    channel = codec.round_trip_channel()
    seed = settings.default_seed if seed is None else seed

    def error(joint: State) -> Fraction:
        return op_norm(apply_with_ancilla(channel, joint, target_cut=1, side="left") - joint)

    mother = error(mother_dilation(message))
    worst = max(mother, error(product_dilation(message, ancilla_sizes[0]).joint))
    for k in range(samples):
        f_size = ancilla_sizes[k % len(ancilla_sizes)]
        worst = max(worst, error(random_dilation(message, f_size, seed + k).joint))
    return DilationCheck(fom_tilde(probs, n, codec), mother, worst, samples + 2)


# ---------------------------------------------------------------------------
# Rates
# ---------------------------------------------------------------------------


def converse_retained_mass(p: Sequence[Number] | State, n: int, m: int) -> Fraction:
    """Upper bound on any codec's retained mass: the 2^(2M-1) heaviest entries."""
    return top_mass(message_spectrum(p, n), register_size(m))


def exact_rate(p: Sequence[Number] | State, n: int, epsilon: Number) -> int:
    """Least M >= 1 whose top-2^(2M-1) mass exceeds 1 - epsilon/2."""
    threshold = retention_threshold(epsilon)
    spectrum = message_spectrum(p, n)
    m = 1
    while top_mass(spectrum, register_size(m)) <= threshold:
        m += 1
    logger.debug(f"exact_rate N={n} eps={epsilon}: M_min={m}")
    return m


def _rate_task(args: tuple[tuple[Fraction, ...], int, Fraction]) -> tuple[int, Fraction, int]:
    probs, n, eps = args
    return n, eps, exact_rate(probs, n, eps)


@dataclass(frozen=True)
class RateCurve:
    """Minimal M per message length at one epsilon.

    Finite-N evidence only: ``limsup`` is the largest rate over the upper
    half of the computed window.
    """

    p: tuple[Fraction, ...]
    epsilon: Fraction
    points: dict[int, int]
    entropy: float

    @property
    def target(self) -> float:
        return information_target(self.entropy)

    @property
    def s2_bound(self) -> float:
        """Lower bound S2/log2(4) = H/2 for bibit registers."""
        return self.entropy / 2

    def rate(self, n: int) -> float:
        return self.points[n] / n

    @property
    def rates(self) -> dict[int, float]:
        return {n: self.rate(n) for n in sorted(self.points)}

    @property
    def limsup(self) -> float:
        ns = sorted(self.points)
        upper = [n for n in ns if n >= ns[-1] - (ns[-1] - ns[0]) // 2]
        return max(self.rate(n) for n in upper)

    @property
    def last_rate(self) -> float:
        return self.rate(max(self.points))

    def gap(self, n: int) -> float:
        return self.rate(n) - self.target

    def rows(self) -> list[tuple[int, Fraction, int, float, float, float]]:
        """(N, epsilon, M_min, rate, target, gap) in N order."""
        return [
            (n, self.epsilon, self.points[n], self.rate(n), self.target, self.gap(n))
            for n in sorted(self.points)
        ]


def info_content_estimate(
    p: Sequence[Number] | State,
    epsilon_grid: Iterable[Number],
    n_max: int,
    n_min: int = 1,
    n_values: Sequence[int] | None = None,
    map_fn: Callable = map,
) -> list[RateCurve]:
    """Tabulate exact_rate over an epsilon grid and a range of message lengths.

    ``map_fn`` lets callers run the (N, epsilon) tasks in a worker pool; results
    are regrouped in input order.
    """
    probs = as_distribution(p)
    grid = [as_rational(e) for e in epsilon_grid]
    ns = list(n_values) if n_values is not None else list(range(n_min, n_max + 1))
    tasks = [(probs, n, eps) for eps in grid for n in ns]
    points: dict[Fraction, dict[int, int]] = {eps: {} for eps in grid}
    for n, eps, m in map_fn(_rate_task, tasks):
        points[eps][n] = m
    h = source_entropy(probs)
    return [RateCurve(probs, eps, points[eps], h) for eps in grid]


@dataclass(frozen=True)
class ExhaustiveResult:
    m_min: int | None
    best_retained: dict[int, Fraction]
    codecs_searched: int


def exhaustive_codec_rate(
    p: Sequence[Number] | State,
    n: int,
    epsilon: Number,
    max_m: int = 2,
    decoder_limit: int = 4096,
    size_bound: int | None = None,
) -> ExhaustiveResult:
    """Brute-force minimal M over point-mass codecs.

    Decoders are enumerated as maps codeword -> message entry when there are at
    most ``decoder_limit`` of them, otherwise through their images (every
    non-empty set of at most 2^(2M-1) entries). Each decoder is paired with its
    best-response encoder, which sends an entry to a codeword decoding back to
    it (sign matched) and everything else to codeword 1. The decoder sign is
    fixed to + since the encoder sign can always match it.
    """
    probs = as_distribution(p)
    shape = SystemShape.power(len(probs), n)
    bound = settings.oracle_size_bound if size_bound is None else size_bound
    if shape.size > bound:
        raise OracleBoundError(f"message size {shape.size} above oracle bound {bound}")
    threshold = retention_threshold(epsilon)
    size = shape.size
    best: dict[int, Fraction] = {}
    searched = 0
    m_min = None
    for m in range(1, max_m + 1):
        k = register_size(m)
        if size**k <= decoder_limit:
            decoders: Iterable[tuple[int, ...]] = product(range(size), repeat=k)
        else:
            decoders = (
                subset + (subset[0],) * (k - len(subset))
                for r in range(1, min(k, size) + 1)
                for subset in combinations(range(size), r)
            )
        best_m = Fraction(0)
        for decoder_map in decoders:
            searched += 1
            first_slot: dict[int, int] = {}
            for c, x in enumerate(decoder_map):
                first_slot.setdefault(x, c)
            codec = ChannelCodec(
                probs,
                n,
                m,
                Channel.from_map(size, k, lambda x: (first_slot.get(x - 1, 0) + 1, PLUS)),
                Channel.from_map(k, size, lambda c: (decoder_map[c - 1] + 1, PLUS)),
            )
            best_m = max(best_m, codec.retained_mass())
        best[m] = best_m
        if m_min is None and best_m > threshold:
            m_min = m
    logger.debug(f"Exhaustive codec search N={n}: {searched} decoders, M_min={m_min}")
    return ExhaustiveResult(m_min, best, searched)


@dataclass(frozen=True)
class AdditivityResult:
    curve: RateCurve
    target_sum: float
    composite_entropy: float

    @property
    def entropy_additive(self) -> bool:
        return abs(self.curve.target - self.target_sum) <= settings.tolerance


def composite_source(p: Sequence[Number], q: Sequence[Number]) -> tuple[Fraction, ...]:
    """Flat weights of rho x sigma: 1/2 p_i q_j on each (i j)_s."""
    rho = State.from_distribution(as_distribution(p))
    sigma = State.from_distribution(as_distribution(q))
    flat = flatten(compose_states(rho, sigma))
    return tuple(flat[PureIndex((k,))] for k in range(1, flat.shape.size + 1))


def additivity_check(
    p: Sequence[Number],
    q: Sequence[Number],
    n_max: int,
    epsilon: Number,
    n_min: int = 1,
    map_fn: Callable = map,
) -> AdditivityResult:
    """Rates of the composite source against (H(p)+1)/2 + (H(q)+1)/2."""
    r = composite_source(p, q)
    (curve,) = info_content_estimate(r, [epsilon], n_max, n_min=n_min, map_fn=map_fn)
    target_sum = information_target(source_entropy(as_distribution(p))) + information_target(
        source_entropy(as_distribution(q))
    )
    return AdditivityResult(curve, target_sum, curve.entropy)

