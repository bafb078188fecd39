"""Dilations, the mother dilation and the steering channel."""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from app.theory.channels import Channel, apply_with_ancilla
from app.theory.errors import InconsistentMarginalError, NotNormalizedError, ShapeMismatchError
from app.theory.opt_core import (
    MINUS,
    PLUS,
    PureIndex,
    State,
    SystemShape,
    bipartition,
    compose_states,
    flatten,
)

logger = logging.getLogger(__name__)


def marginalize(state: State, keep: str = "left", cut: int = 1) -> State:
    """Apply the deterministic effect to one side of the cut.

    Weights are summed over the discarded block's index and the relative sign.
    """
    if keep not in ("left", "right"):
        raise ValueError(f"keep must be 'left' or 'right', got {keep!r}")
    shape = state.shape
    kept_shape = shape.sub(0, cut) if keep == "left" else shape.sub(cut)
    out: dict[PureIndex, Fraction] = defaultdict(Fraction)
    for x, w in state.weights.items():
        left, right, _ = bipartition(x, cut)
        out[left if keep == "left" else right] += w
    return State(kept_shape, out)


@dataclass(frozen=True)
class Dilation:
    """Joint state on A x F whose A-marginal is ``marginal_target``.

    Both A and F are single factors; composite systems are flattened first.
    """

    joint: State
    marginal_target: State

    def __post_init__(self):
        if self.joint.shape.n != 2:
            raise ShapeMismatchError("a dilation joint must have exactly two factors")
        if self.marginal_target.shape != self.joint.shape.sub(0, 1):
            raise ShapeMismatchError("dilation target does not match the joint's first factor")
        if marginalize(self.joint, "left", 1) != self.marginal_target:
            raise InconsistentMarginalError("joint state does not marginalize to the target")

    @property
    def ancilla_size(self) -> int:
        return self.joint.shape.factors[1]


def _as_single(state: State) -> State:
    flat = flatten(state)
    if flat.shape.n != 1:
        raise ShapeMismatchError("dilations need a non-trivial system")
    return flat


def mother_dilation(state: State) -> State:
    """The diagonal dilation: weight p_i on (i i)_+ with an ancilla of the same size."""
    rho = _as_single(state)
    if not rho.is_deterministic:
        raise NotNormalizedError(f"mother dilation needs a deterministic state, got mass {rho.total()}")
    size = rho.shape.factors[0]
    shape = SystemShape((size, size))
    return State(shape, {PureIndex((x.locals[0],) * 2, (PLUS,)): w for x, w in rho.items()})


def steering_channel(state: State, dilation: Dilation | State) -> Channel:
    """Channel on the mother dilation's ancilla that prepares the given dilation.

    Rows are lambda^(i)_{j,s} = q_{ijs} / p_i; rows with p_i = 0 are a point
    mass on (1, +).

    Raises:
        InconsistentMarginalError: If the joint does not marginalize to ``state``.
    """
    rho = _as_single(state)
    joint = dilation.joint if isinstance(dilation, Dilation) else dilation
    if joint.shape.n != 2 or joint.shape.factors[0] != rho.shape.factors[0]:
        raise ShapeMismatchError("dilation must live on A x F with A the state's system")
    if marginalize(joint, "left", 1) != rho:
        raise InconsistentMarginalError("dilation does not marginalize to the given state")

    size, f_size = joint.shape.factors
    rows = []
    for i in range(1, size + 1):
        p_i = rho[PureIndex((i,))]
        if p_i == 0:
            rows.append({(1, PLUS): 1})
            continue
        rows.append(
            {
                (j, s): joint[PureIndex((i, j), (s,))] / p_i
                for j in range(1, f_size + 1)
                for s in (PLUS, MINUS)
            }
        )
    return Channel(size, f_size, rows)


def steer(state: State, channel: Channel) -> State:
    """(I_A x C) applied to the mother dilation of ``state``."""
    return apply_with_ancilla(channel, mother_dilation(state), target_cut=1, side="right")


def random_dilation(state: State, f_size: int, seed: int, denominator: int = 8) -> Dilation:
    """Dilation with random rational q_{ijs} whose rows sum to p_i (deterministic in seed)."""
    if f_size < 2:
        raise ShapeMismatchError("ancilla size must be >= 2")
    rho = _as_single(state)
    rng = np.random.default_rng(seed)
    size = rho.shape.factors[0]
    outcomes = [(j, s) for j in range(1, f_size + 1) for s in (PLUS, MINUS)]
    weights = {}
    for x, p in rho.items():
        draws = rng.integers(0, denominator + 1, size=len(outcomes))
        if draws.sum() == 0:
            draws[rng.integers(len(outcomes))] = 1
        total = int(draws.sum())
        for (j, s), d in zip(outcomes, draws):
            if d:
                weights[PureIndex((x.locals[0], j), (s,))] = p * Fraction(int(d), total)
    return Dilation(State(SystemShape((size, f_size)), weights), rho)


def product_dilation(state: State, f_size: int, j: int = 1) -> Dilation:
    """rho composed with the pure ancilla state |j)."""
    rho = _as_single(state)
    ancilla = State.pure(SystemShape.single(f_size), PureIndex((j,)))
    return Dilation(compose_states(rho, ancilla), rho)
