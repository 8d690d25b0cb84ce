"""Independent checks of the sequential engine.

Everything here recomputes quantities the engine produces incrementally,
using exhaustive enumeration or from-scratch refits, and is deliberately
slow. The engine must agree with these within tight tolerances; the checks
back both the unit tests and the `verify` CLI subcommand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .engine import (
    PolicyConfig,
    RoundRecord,
    SlrState,
    _estimation_povm,
    new_slr_state,
    next_measurement,
    numerator_log_term,
    predictable_estimate,
    slr_update,
)
from .errors import HorizonTooLarge
from .family import (
    DEFAULT_RESOLUTION,
    FamilyConfig,
    HypothesisSet,
    accumulate,
    build_grid,
    mle,
    parse_hypothesis_set,
)
from .measurements import HelstromSpec, helstrom_povm
from .quantum import (
    DensityMatrix,
    born_distribution,
    sample_outcome,
    tensor_power,
    trace_norm,
)

MAX_HORIZON = 3


class _HalfDraw:
    """Stand-in generator that fixes the aLHT block weight at 0.5."""

    def random(self) -> float:
        return 0.5


@dataclass(frozen=True)
class Branch:
    """One full transcript of the enumeration tree."""

    records: tuple
    probability: float
    log_slr: float


def enumerate_transcripts(
    policy: PolicyConfig,
    truth: DensityMatrix,
    cfg: FamilyConfig,
    null_set: HypothesisSet,
    alt_set: HypothesisSet,
    horizon: int,
    resolution: float = DEFAULT_RESOLUTION,
) -> list[Branch]:
    """All positive-probability transcripts up to the horizon.

    The policy is replayed deterministically (aLHT's random weight pinned
    to 0.5); every branch weight is the product of exact Born probabilities
    under `truth`. Branch probabilities sum to one at every horizon.
    """
    if not 1 <= horizon <= MAX_HORIZON:
        raise HorizonTooLarge(f"horizon must be in 1..{MAX_HORIZON}, got {horizon}")
    rng = _HalfDraw()
    powers: dict[int, DensityMatrix] = {}
    out: list[Branch] = []

    def walk(state: SlrState, prob: float, log_slr: float, depth: int):
        if depth == horizon:
            out.append(Branch(records=state.rounds, probability=prob, log_slr=log_slr))
            return
        povm, copies, desc = next_measurement(policy, state, cfg, rng)
        power = powers.get(copies)
        if power is None:
            power = tensor_power(truth, copies)
            powers[copies] = power
        dist = born_distribution(power, povm)
        w1 = predictable_estimate(
            state.alt_grid,
            cfg,
            bool(state.rounds),
            policy.initial_alt_angle,
            _estimation_povm(policy),
        ).omega
        for label, p in zip(dist.labels, dist.probs):
            if p == 0.0:
                continue
            term = numerator_log_term(cfg, w1, povm.element(label), copies)
            rec = RoundRecord(
                index=len(state.rounds) + 1,
                povm=povm,
                descriptor=desc,
                copies=copies,
                outcome=label,
                log_numerator_term=term,
            )
            child, log_next = slr_update(state, rec, cfg)
            walk(child, prob * float(p), log_next, depth + 1)

    walk(new_slr_state(null_set, alt_set, resolution), 1.0, 0.0, 0)
    return out


def eprocess_expectation(
    policy: PolicyConfig,
    truth: DensityMatrix,
    cfg: FamilyConfig,
    null_set: HypothesisSet,
    alt_set: HypothesisSet,
    horizon: int,
    use_mle_denominator: bool = False,
    resolution: float = DEFAULT_RESOLUTION,
) -> float:
    """Exact expectation of the likelihood-ratio process at the horizon.

    With the true-state denominator the process is a nonnegative
    supermartingale with unit initial value, so the expectation is exactly
    one whenever every enumerated outcome has positive probability: the
    per-branch ratio is prod(numerators)/prob and the weighted sum
    telescopes through POVM completeness. With use_mle_denominator the
    engine's own refined denominator replaces the true state and the
    expectation can only drop.
    """
    branches = enumerate_transcripts(
        policy, truth, cfg, null_set, alt_set, horizon, resolution
    )
    total = 0.0
    for br in branches:
        if use_mle_denominator:
            total += br.probability * math.exp(br.log_slr)
        else:
            total += math.exp(sum(r.log_numerator_term for r in br.records))
    return total


def recompute_slr(
    records: tuple,
    cfg: FamilyConfig,
    null_set: HypothesisSet,
    alt_set: HypothesisSet,
    resolution: float = DEFAULT_RESOLUTION,
    initial_alt_angle: float | None = None,
    estimation_povm: str = "computational",
) -> np.ndarray:
    """From-scratch log SLR at every prefix of a stored transcript.

    Every numerator estimate is refitted on its own prefix from an empty
    grid, and every denominator maximization reruns on its full prefix;
    nothing is reused across prefixes. The engine's incremental values must
    match this within 1e-9. estimation_povm names the single-copy
    measurement whose outcomes regularize the numerator estimates and must
    match the policy that produced the transcript.
    """
    est_povm = _estimation_povm(PolicyConfig(kind="aLHT+", estimation_povm=estimation_povm))
    logs = np.empty(len(records))
    for t in range(1, len(records) + 1):
        frozen = 0.0
        for i in range(t):
            galt = build_grid(alt_set, resolution)
            for r in records[:i]:
                galt = accumulate(galt, cfg, r.povm, r.copies, r.outcome)
            est = predictable_estimate(galt, cfg, i > 0, initial_alt_angle, est_povm)
            rec = records[i]
            frozen += numerator_log_term(
                cfg, est.omega, rec.povm.element(rec.outcome), rec.copies
            )
        gnull = build_grid(null_set, resolution)
        for r in records[:t]:
            gnull = accumulate(gnull, cfg, r.povm, r.copies, r.outcome)
        logs[t - 1] = frozen - mle(gnull, cfg, refine=True).loglik
    return logs


def helstrom_bound(
    null_state: DensityMatrix,
    alt_state: DensityMatrix,
    weight: float,
    copies: int = 1,
) -> float:
    """Minimum weighted error (1-w) alpha + w beta over all measurements."""
    p0 = tensor_power(null_state, copies).mat
    p1 = tensor_power(alt_state, copies).mat
    return 0.5 * (1.0 - trace_norm((1.0 - weight) * p0 - weight * p1))


def helstrom_error(
    null_state: DensityMatrix,
    alt_state: DensityMatrix,
    weight: float,
    copies: int = 1,
) -> float:
    """Weighted error the two-outcome eigenspace measurement realizes."""
    povm = helstrom_povm(
        HelstromSpec(null_state=null_state, alt_state=alt_state, weight=weight, copies=copies)
    )
    alpha = born_distribution(tensor_power(null_state, copies), povm).probs[1]
    beta = born_distribution(tensor_power(alt_state, copies), povm).probs[0]
    return (1.0 - weight) * alpha + weight * beta


def small_policy() -> tuple[FamilyConfig, PolicyConfig]:
    """A one-estimation-one-joint block policy small enough to enumerate."""
    return FamilyConfig(), PolicyConfig(kind="aLHT+", n_ic=1, n_joint=1)


def small_sets() -> tuple[HypothesisSet, HypothesisSet]:
    """Point null at 45 degrees against the rest of the upper arc."""
    return parse_hypothesis_set("{45}"), parse_hypothesis_set("(45,180]")


def sample_transcript(
    policy: PolicyConfig,
    truth: DensityMatrix,
    cfg: FamilyConfig,
    null_set: HypothesisSet,
    alt_set: HypothesisSet,
    n_rounds: int,
    rng: np.random.Generator,
    resolution: float = DEFAULT_RESOLUTION,
) -> tuple[tuple, np.ndarray]:
    """Sample a fixed-length transcript; return records and engine log SLRs.

    Unlike run_sequential_test this never stops early, which makes it the
    right generator for engine-versus-recomputation comparisons.
    """
    state = new_slr_state(null_set, alt_set, resolution)
    logs = np.empty(n_rounds)
    powers: dict[int, DensityMatrix] = {}
    for t in range(n_rounds):
        povm, copies, desc = next_measurement(policy, state, cfg, rng)
        power = powers.get(copies)
        if power is None:
            power = tensor_power(truth, copies)
            powers[copies] = power
        outcome = sample_outcome(born_distribution(power, povm), rng)
        est = predictable_estimate(
            state.alt_grid,
            cfg,
            bool(state.rounds),
            policy.initial_alt_angle,
            _estimation_povm(policy),
        )
        rec = RoundRecord(
            index=t + 1,
            povm=povm,
            descriptor=desc,
            copies=copies,
            outcome=outcome,
            log_numerator_term=numerator_log_term(
                cfg, est.omega, povm.element(outcome), copies
            ),
        )
        state, logs[t] = slr_update(state, rec, cfg)
    return state.rounds, logs
