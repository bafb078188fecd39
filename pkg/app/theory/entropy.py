"""Shannon entropy, the measurement/hybrid/preparation entropies and their regularizations.

In a simplicial theory every state has a unique decomposition into pure
states and every atomic effect is a multiple of a vertex effect, so all three
entropies reduce to the Shannon entropy of the simplex weights. The oracles
below search test families directly and are used to falsify that claim.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import entropy as scipy_entropy

from app.config.settings import settings
from app.theory.errors import (
    InvariantViolation,
    NotNormalizedError,
    OracleBoundError,
    ShapeMismatchError,
)
from app.theory.opt_core import Number, PureIndex, State, SystemShape, as_rational, compose_states, tensor_power
from app.theory.typical import as_distribution, message_distribution, message_spectrum, spectrum_entropy

logger = logging.getLogger(__name__)


def shannon(p: Iterable[Number]) -> float:
    """Base-2 Shannon entropy with 0 log 0 = 0.

    Raises:
        NotNormalizedError: If the entries are negative or do not sum to one.
    """
    probs = [as_rational(v) for v in p]
    if any(v < 0 for v in probs) or sum(probs) != 1:
        raise NotNormalizedError("Shannon entropy needs a normalized distribution")
    return float(scipy_entropy([float(v) for v in probs], base=2))


def _float_entropy(values: np.ndarray) -> float:
    values = values[values > 0]
    if values.size == 0:
        return 0.0
    return float(-(values * np.log2(values)).sum())


def canonical_decomposition(pairs: Iterable[tuple[PureIndex, Number]]) -> list[tuple[PureIndex, Fraction]]:
    """Merge repeated pure states of a decomposition and drop zero weights."""
    merged: dict[PureIndex, Fraction] = defaultdict(Fraction)
    for x, w in pairs:
        merged[x] += as_rational(w)
    return [(x, w) for x, w in merged.items() if w]


def _deterministic_weights(rho: State) -> list[Fraction]:
    if not rho.is_deterministic:
        raise NotNormalizedError(f"state has mass {rho.total()}, expected 1")
    return [w for _, w in rho.items()]


@dataclass(frozen=True)
class EntropyReport:
    h: float
    s1: float
    s2: float
    s3: float
    sreg_at_n: dict[int, float] = field(default_factory=dict)
    tolerance: float = 1e-9

    @property
    def monoentropic(self) -> bool:
        return max(abs(self.s1 - self.s3), abs(self.s2 - self.s3)) <= self.tolerance


def entropies_closed_form(rho: State, n_values: Sequence[int] = ()) -> EntropyReport:
    """S1 = S2 = S3 = H of the simplex weights; S_i(rho^N)/N = H + 1 - 1/N for single systems."""
    h = shannon(_deterministic_weights(rho))
    sreg = {n: h + 1 - 1 / n for n in n_values} if rho.shape.n == 1 else {}
    return EntropyReport(h=h, s1=h, s2=h, s3=h, sreg_at_n=sreg, tolerance=settings.tolerance)


def s3(rho: State) -> float:
    """Preparation entropy: H of the (unique) pure decomposition."""
    return shannon(w for _, w in canonical_decomposition(rho.items()))


@dataclass(frozen=True)
class OracleResult:
    best: float
    perfect_test: float
    tests_evaluated: int
    certified: bool = False


def _check_oracle_size(shape: SystemShape, size_bound: int | None) -> None:
    bound = settings.oracle_size_bound if size_bound is None else size_bound
    if shape.size > bound:
        raise OracleBoundError(f"shape size {shape.size} above oracle bound {bound}")


def s1_oracle(
    rho: State,
    search_budget: int = 100,
    seed: int | None = None,
    max_parts: int = 4,
    size_bound: int | None = None,
) -> OracleResult:
    """Minimize H(outcome) over atomic tests.

    An atomic test splits each vertex effect into parts c_{x,1..k}; the
    outcome (x, k) then has probability w_x c_{x,k}. The perfect test (no
    splitting) is always evaluated first.
    """
    _check_oracle_size(rho.shape, size_bound)
    w = np.array([float(v) for v in _deterministic_weights(rho)])
    rng = np.random.default_rng(settings.default_seed if seed is None else seed)
    perfect = _float_entropy(w)
    best = perfect
    for _ in range(search_budget):
        outcomes = []
        for wx in w:
            parts = rng.integers(1, max_parts + 1)
            split = rng.random(parts) + 1e-3
            outcomes.append(wx * split / split.sum())
        best = min(best, _float_entropy(np.concatenate(outcomes)))
    logger.debug(f"S1 oracle: {search_budget} random splits, best {best:.12g}")
    return OracleResult(best=best, perfect_test=perfect, tests_evaluated=search_budget + 1)


def mutual_information(joint: np.ndarray) -> float:
    """I(X:J) in bits for a joint probability table (rows X, columns J)."""
    px = joint.sum(axis=1)
    pj = joint.sum(axis=0)
    return _float_entropy(px) + _float_entropy(pj) - _float_entropy(joint.ravel())


def s2_oracle(
    rho: State,
    search_budget: int = 100,
    seed: int | None = None,
    max_outcomes: int = 4,
    size_bound: int | None = None,
) -> OracleResult:
    """Maximize I(decomposition index : outcome) over observation tests.

    Candidates are the perfect test plus random stochastic tests
    a_j(x) = T[x, j]; the constant (single-outcome) test gives zero.
    """
    _check_oracle_size(rho.shape, size_bound)
    w = np.array([float(v) for v in _deterministic_weights(rho)])
    rng = np.random.default_rng(settings.default_seed if seed is None else seed)
    perfect = mutual_information(np.diag(w))
    best = perfect
    for _ in range(search_budget):
        outcomes = int(rng.integers(1, max_outcomes + 1))
        test = rng.random((w.size, outcomes)) + 1e-3
        test /= test.sum(axis=1, keepdims=True)
        best = max(best, mutual_information(w[:, None] * test))
    logger.debug(f"S2 oracle: {search_budget} random tests, best {best:.12g}")
    return OracleResult(best=best, perfect_test=perfect, tests_evaluated=search_budget + 1)


def s_reg(
    rho: State | Sequence[Number],
    n: int,
    which: int = 1,
    enumerate_weights: bool = False,
    tolerance: float | None = None,
) -> float:
    """S_i(rho^N)/N computed from the message weights and checked against H + 1 - 1/N.

    S1, S2 and S3 coincide on a simplicial theory (each is the Shannon entropy
    of the canonical weights), so every ``which`` shares this computation and
    only labels the check.

    With ``enumerate_weights`` the weights are written out entry by entry
    (subject to the memory bound); otherwise the type spectrum is used.

    Raises:
        InvariantViolation: If the two paths disagree beyond the tolerance.
    """
    if which not in (1, 2, 3):
        raise ValueError(f"entropy index must be 1, 2 or 3, got {which}")
    if n < 1:
        raise ShapeMismatchError("N must be >= 1")
    tolerance = settings.tolerance if tolerance is None else tolerance
    probs = as_distribution(rho)
    closed = shannon(probs) + 1 - 1 / n
    if enumerate_weights:
        weights = np.array([float(v) for _, v in message_distribution(probs, n).items()])
        direct = _float_entropy(weights) / n
    else:
        direct = spectrum_entropy(message_spectrum(probs, n)) / n
    if abs(direct - closed) > tolerance:
        raise InvariantViolation(
            f"S_{which}(rho^{n})/{n}: direct {direct!r} vs closed form {closed!r}"
        )
    return direct


def s_reg_limit(rho: State | Sequence[Number]) -> float:
    """Regularized entropy H(p) + 1."""
    return shannon(as_distribution(rho)) + 1


@dataclass(frozen=True)
class SuperadditivityReport:
    single: float
    double: float
    doubling: tuple[tuple[int, float], ...]

    @property
    def strict(self) -> bool:
        return self.double > 2 * self.single

    @property
    def additivity_gap(self) -> float:
        """S(|i) x |j)) - S(|i)) - S(|j)); the pure factors have zero entropy."""
        return self.single

    @property
    def doubling_nondecreasing(self) -> bool:
        ratios = [r for _, r in self.doubling]
        return all(a <= b + settings.tolerance for a, b in zip(ratios, ratios[1:]))


def superadditivity_witness(
    i: PureIndex, j: PureIndex, a_shape: SystemShape, b_shape: SystemShape, depth: int = 2
) -> SuperadditivityReport:
    """Entropies of Sigma = |i) x |j) and of its doubling powers Sigma^(2^k), k <= depth."""
    sigma = compose_states(State.pure(a_shape, i), State.pure(b_shape, j))
    doubling = []
    power = sigma
    for k in range(depth + 1):
        if k:
            power = compose_states(power, power)
        doubling.append((k, s3(power) / 2**k))
    double = doubling[1][1] * 2 if depth >= 1 else s3(tensor_power(sigma, 2))
    return SuperadditivityReport(single=doubling[0][1], double=double, doubling=tuple(doubling))
