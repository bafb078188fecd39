"""Experiment service - runs one CLI pipeline, checks its invariants and writes reports."""

import logging
import math
import os
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from fractions import Fraction
from multiprocessing import Pool
from pathlib import Path
from typing import Callable, Iterator

import psutil
from pydantic import BaseModel

from app.config.settings import settings
from app.models.schemas import (
    AdditivityResponse,
    CodecResponse,
    Command,
    CounterexampleResponse,
    CounterexampleRow,
    DigitizerResponse,
    EntropyResponse,
    ExperimentConfig,
    RateRow,
    SteeringResponse,
)
from app.services import report_service
from app.theory.channels import Channel, asymptotic_rate, build_digitizer, compose_seq
from app.theory.compression import (
    additivity_check,
    build_codec,
    exact_rate,
    fom_dil_check,
    fom_tilde,
    info_content_estimate,
    information_target,
)
from app.theory.dilation import random_dilation, steer, steering_channel
from app.theory.entropy import (
    entropies_closed_form,
    s1_oracle,
    s2_oracle,
    s_reg,
    s_reg_limit,
    superadditivity_witness,
)
from app.theory.errors import InvariantViolation
from app.theory.opt_core import PureIndex, State, SystemShape
from app.theory.restricted import restricted_rate

logger = logging.getLogger(__name__)
process = psutil.Process(os.getpid())

# Explicit norm-path and dilation checks run only below this message size
NORM_PATH_SIZE = 64


@dataclass
class RunResult:
    command: str
    report: BaseModel | None = None
    rows: list[RateRow] = field(default_factory=list)
    files: list[Path] = field(default_factory=list)
    latency_ms: float = 0.0
    memory_mb: float = 0.0


@contextmanager
def sweep_mapper(jobs: int) -> Iterator[Callable]:
    """``map`` for one job, a worker pool's ordered ``map`` otherwise."""
    if jobs <= 1:
        yield map
        return
    with Pool(jobs) as pool:
        yield pool.map


@contextmanager
def memory_bound(bound_log2: int) -> Iterator[None]:
    """Apply a run's memory bound to every enumeration made inside the block."""
    previous = settings.memory_bound_log2
    settings.memory_bound_log2 = bound_log2
    try:
        yield
    finally:
        settings.memory_bound_log2 = previous


def run_rate(config: ExperimentConfig) -> RunResult:
    with sweep_mapper(config.jobs) as map_fn:
        curves = info_content_estimate(
            config.probabilities,
            config.epsilons,
            config.n_max,
            n_min=config.n_min,
            map_fn=map_fn,
        )
    for curve in curves:
        for n in sorted(curve.points)[1:]:
            if curve.points[n] < curve.points[n - 1]:
                raise InvariantViolation(f"M_min decreased from N={n - 1} to N={n}")
    result = RunResult("rate", rows=report_service.rate_rows(curves))
    if config.out:
        result.files.append(report_service.write_rate_csv(result.rows, config.out))
    return result


def run_codec(config: ExperimentConfig) -> RunResult:
    n = config.n or config.n_max
    probs = config.probabilities
    codec = build_codec(probs, n, float(Fraction(config.delta)))
    d_tilde = fom_tilde(probs, n, codec)
    if d_tilde != 2 * (1 - codec.typical.total_mass) and not codec.typical.is_empty:
        raise InvariantViolation(f"D~ = {d_tilde} differs from 2 P(non-typical)")

    norm_checked = codec.message_shape.size <= NORM_PATH_SIZE
    dilation_error = None
    if norm_checked:
        fom_tilde(probs, n, codec, path="both")
        check = fom_dil_check(probs, n, codec, samples=config.samples, seed=config.seed)
        if not check.within_bound:
            raise InvariantViolation(f"dilation error {check.max_error} above D~ {check.fom_tilde}")
        dilation_error = check.max_error

    report = CodecResponse(
        dist=config.dist,
        N=n,
        M=codec.m,
        delta=config.delta,
        rate=codec.m / n,
        target=information_target(codec.typical.entropy),
        typical_strings=codec.typical.cardinality,
        typical_mass=codec.typical.total_mass,
        fom_tilde=d_tilde,
        fom_tilde_float=float(d_tilde),
        exact_m_min={config_eps: exact_rate(probs, n, Fraction(config_eps)) for config_eps in config.eps},
        norm_path_checked=norm_checked,
        dilation_max_error=dilation_error,
        fallback_codeword=str(codec.fallback_codeword),
        fallback_string=str(codec.fallback_string),
    )
    return _with_report(RunResult("codec", report=report), config)


def run_entropy(config: ExperimentConfig) -> RunResult:
    rho = State.from_distribution(config.probabilities)
    closed = entropies_closed_form(rho, range(1, config.n_max + 1))
    oracle_1 = s1_oracle(rho, search_budget=config.samples, seed=config.seed)
    oracle_2 = s2_oracle(rho, search_budget=config.samples, seed=config.seed)
    if oracle_1.best < closed.h - closed.tolerance or oracle_2.best > closed.h + closed.tolerance:
        raise InvariantViolation("entropy oracle crossed the closed form")
    sreg = {n: s_reg(config.probabilities, n) for n in range(1, config.n_max + 1)}
    bit = SystemShape.single(2)
    witness = superadditivity_witness(PureIndex((1,)), PureIndex((1,)), bit, bit)
    if not witness.strict:
        raise InvariantViolation("superadditivity witness is not strict")
    report = EntropyResponse(
        dist=config.dist,
        H=closed.h,
        S1=closed.s1,
        S2=closed.s2,
        S3=closed.s3,
        S1_oracle=oracle_1.best,
        S2_oracle=oracle_2.best,
        oracle_tests=oracle_1.tests_evaluated + oracle_2.tests_evaluated,
        sreg_at_n=sreg,
        sreg_limit=s_reg_limit(config.probabilities),
        superadditivity_single=witness.single,
        superadditivity_double=witness.double,
        tolerance=closed.tolerance,
    )
    return _with_report(RunResult("entropy", report=report), config)


STEERING_ANCILLAS = (2, 3, 4)


def run_steer(config: ExperimentConfig) -> RunResult:
    rho = State.from_distribution(config.probabilities)
    reproduced = 0
    for k in range(config.samples):
        f_size = STEERING_ANCILLAS[k % len(STEERING_ANCILLAS)]
        dilation = random_dilation(rho, f_size, config.seed + k)
        if steer(rho, steering_channel(rho, dilation)) != dilation.joint:
            raise InvariantViolation(f"steering failed to reproduce dilation sample {k}")
        reproduced += 1
    report = SteeringResponse(
        dist=config.dist,
        samples=config.samples,
        ancilla_sizes=list(STEERING_ANCILLAS),
        reproduced=reproduced,
        seed=config.seed,
    )
    return _with_report(RunResult("steer", report=report), config)


def run_digitize(config: ExperimentConfig) -> RunResult:
    encoder, decoder, k = build_digitizer(config.a_size, config.b_size)
    exact = compose_seq(decoder, encoder) == Channel.identity(config.a_size)
    if not exact:
        raise InvariantViolation("digitizer round trip is not the identity")
    asymptotic = {k1: asymptotic_rate(config.a_size, config.b_size, k1) for k1 in range(1, config.n_max + 1)}
    report = DigitizerResponse(
        a_size=config.a_size,
        b_size=config.b_size,
        k=k,
        register_size=encoder.out_size,
        exact_round_trip=exact,
        asymptotic=asymptotic,
        log_ratio=math.log(2 * config.a_size, 2 * config.b_size),
    )
    return _with_report(RunResult("digitize", report=report), config)


def run_counterexample(config: ExperimentConfig) -> RunResult:
    rows = []
    threshold = entropy = None
    for eps in config.eps:
        for n in range(config.n_min, config.n_max + 1):
            result = restricted_rate(config.probabilities, n, Fraction(eps))
            threshold, entropy = result.threshold, result.entropy
            rows.append(
                CounterexampleRow(
                    N=n,
                    epsilon=eps,
                    M_min=result.m_min,
                    M_min_mixed=result.m_min_mixed,
                    best_retained=result.best_retained,
                )
            )
    report = CounterexampleResponse(dist=config.dist, threshold=threshold, entropy=entropy, rows=rows)
    return _with_report(RunResult("counterexample", report=report), config)


def run_additivity(config: ExperimentConfig) -> RunResult:
    if config.dist2 is None:
        raise ValueError("dist2: the additivity check needs a second distribution")
    eps = config.epsilons[0]
    with sweep_mapper(config.jobs) as map_fn:
        result = additivity_check(
            config.probabilities,
            [Fraction(v) for v in config.dist2],
            config.n_max,
            eps,
            n_min=config.n_min,
            map_fn=map_fn,
        )
    if not result.entropy_additive:
        raise InvariantViolation("composite entropy is not H(p) + H(q) + 1")
    rows = report_service.rate_rows([result.curve])
    report = AdditivityResponse(
        dist=config.dist,
        dist2=config.dist2,
        epsilon=config.eps[0],
        composite_entropy=result.composite_entropy,
        target_sum=result.target_sum,
        rows=rows,
        limsup=result.curve.limsup,
    )
    run = _with_report(RunResult("additivity", report=report, rows=rows), config)
    if config.out:
        run.files.append(report_service.write_rate_csv(rows, config.out))
    return run


def _with_report(result: RunResult, config: ExperimentConfig) -> RunResult:
    if config.report and result.report is not None:
        result.files.append(report_service.write_json(result.report, config.report))
    return result


PIPELINES: dict[str, Callable[[ExperimentConfig], RunResult]] = {
    "rate": run_rate,
    "codec": run_codec,
    "entropy": run_entropy,
    "steer": run_steer,
    "digitize": run_digitize,
    "counterexample": run_counterexample,
    "additivity": run_additivity,
}


def run(config: ExperimentConfig, command: Command) -> RunResult:
    """Execute one pipeline and record latency and process memory."""
    start_time = time.time()
    logger.info(f"Starting '{command}' run")
    try:
        with memory_bound(config.memory_bound_log2):
            result = PIPELINES[command](config)
    except InvariantViolation as e:
        logger.error(f"Invariant violated in '{command}': {e}")
        raise
    finally:
        latency_ms = (time.time() - start_time) * 1000
        memory_mb = process.memory_info().rss / (1024 * 1024)
        logger.info(f"'{command}' finished in {latency_ms:.1f} ms ({memory_mb:.1f} MB)")
    result.latency_ms = latency_ms
    result.memory_mb = memory_mb
    return result
