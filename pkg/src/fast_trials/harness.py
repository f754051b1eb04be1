"""End-to-end replicate execution and operating-characteristic aggregation.

A replicate enrolls subjects sequentially under the currently active arms,
pauses at each interim trigger to apply the corresponding decision
(restricting or terminating domain-A allocation), finishes enrollment, and
runs the branch-appropriate final analysis. Every replicate owns a seed
derived injectively from (base_seed, scenario, cell, replicate index), so
grid runs are bitwise reproducible regardless of execution order or worker
count: workers only return integer tallies, which are folded in a fixed
chunk order.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .design import ScenarioConfig, SubjectData, validate_scenario
from .final_analysis import (
    FinalBranch,
    GatekeepingOutcome,
    analyze_terminated,
    build_final_model,
    gatekeep_both_retained,
    gatekeep_one_retained,
)
from .generation import ActiveArms, generate_block
from .interim import (
    AnalysisKind,
    AnalysisSchedule,
    FeasibilityDecision,
    RetentionDecision,
    arm_dropping_analysis,
    build_schedule,
    feasibility_analysis,
)

__all__ = [
    "TrialResult",
    "OperatingCharacteristics",
    "derive_seed",
    "derive_seeds_vector",
    "designed_correct_arms",
    "truly_effective_arms",
    "gating_violation",
    "run_replicate",
    "run_cell",
    "run_cell_detail",
    "run_grid",
    "run_grid_detail",
    "TRACE_FIELDS",
]

_MASK64 = (1 << 64) - 1
_SM_GAMMA = 0x9E3779B97F4A7C15
_SM_MIX1 = 0xBF58476D1CE4E5B9
_SM_MIX2 = 0x94D049BB133111EB
# Odd multipliers keep each stage input injective before the bijective mix.
_PART_MULT = (0xA24BAED4963EE407, 0x9FB21C651E98DF25, 0xD6E8FEB86659FD93, 0xC2B2AE3D27D4EB4F)


def _splitmix64(x: int) -> int:
    x = (x + _SM_GAMMA) & _MASK64
    x = ((x ^ (x >> 30)) * _SM_MIX1) & _MASK64
    x = ((x ^ (x >> 27)) * _SM_MIX2) & _MASK64
    return x ^ (x >> 31)


def derive_seed(base_seed: int, scenario_id: int, cell: tuple, replicate: int) -> int:
    """Deterministic 64-bit seed for one replicate.

    Each stage xors an odd-multiplied index part into the running state and
    applies a 64-bit bijective mix, so for any fixed prefix the map from
    any single index to the seed is exactly injective.
    """
    n_drop, n_feas = cell
    h = _splitmix64(int(base_seed) & _MASK64)
    for part, mult in zip((scenario_id, n_drop, n_feas, replicate), _PART_MULT):
        h = _splitmix64(h ^ ((int(part) * mult) & _MASK64))
    return h


def derive_seeds_vector(base_seed: int, scenario_id: int, cell: tuple, replicates: np.ndarray) -> np.ndarray:
    """Vectorized ``derive_seed`` over replicate indices (collision scans)."""
    n_drop, n_feas = cell
    h = _splitmix64(int(base_seed) & _MASK64)
    for part, mult in zip((scenario_id, n_drop, n_feas), _PART_MULT[:3]):
        h = _splitmix64(h ^ ((int(part) * mult) & _MASK64))
    with np.errstate(over="ignore"):
        x = np.asarray(replicates, dtype=np.uint64) * np.uint64(_PART_MULT[3])
        x ^= np.uint64(h)
        x += np.uint64(_SM_GAMMA)
        x = (x ^ (x >> np.uint64(30))) * np.uint64(_SM_MIX1)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(_SM_MIX2)
        return x ^ (x >> np.uint64(31))


# ---------------------------------------------------------------------------
# single replicate
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrialResult:
    """One replicate's full path through the design."""

    n_drop: int
    n_feas: int
    schedule: AnalysisSchedule
    retention: Optional[RetentionDecision]
    feasibility: Optional[FeasibilityDecision]
    branch: FinalBranch
    gatekeeping: GatekeepingOutcome
    n_clamped: int

    @property
    def successful_arms(self) -> frozenset:
        return self.gatekeeping.successful_arms

    @property
    def failed(self) -> bool:
        return self.gatekeeping.fit_failed


def _concat_blocks(blocks: list) -> SubjectData:
    if len(blocks) == 1:
        return blocks[0]
    return SubjectData(
        np.concatenate([b.arm_a for b in blocks]),
        np.concatenate([b.arm_b for b in blocks]),
        np.concatenate([b.y11 for b in blocks]),
        np.concatenate([b.y12 for b in blocks]),
        np.concatenate([b.y21 for b in blocks]),
    )


def run_replicate(
    config: ScenarioConfig, n_drop: int, n_feas: int, replicate_seed: int
) -> TrialResult:
    """Simulate one trial end to end, fully determined by the arguments."""
    if max(n_drop, n_feas) > config.n_total:
        raise ValueError(
            f"interim trigger exceeds n_total={config.n_total} (n_drop={n_drop}, n_feas={n_feas})"
        )
    rng = np.random.default_rng(int(replicate_seed) & _MASK64)
    schedule = build_schedule(n_drop, n_feas)
    active = ActiveArms()
    blocks: list[SubjectData] = []
    enrolled = 0
    n_clamped = 0
    retention: Optional[RetentionDecision] = None
    feasibility: Optional[FeasibilityDecision] = None

    for kind, trigger in (schedule.first, schedule.second):
        if active.domain_a is None:
            break  # domain terminated; the later trigger can never be reached
        if trigger > enrolled:
            block, clamped = generate_block(config, active, trigger - enrolled, rng)
            blocks.append(block)
            enrolled = trigger
            n_clamped += clamped
        snapshot = _concat_blocks(blocks)
        if kind is AnalysisKind.ARM_DROPPING:
            retention = arm_dropping_analysis(
                snapshot, config.alpha_drop, config.benefit_directions, config.default_retained_arm
            )
            active = ActiveArms(domain_a=frozenset({"A0"}) | retention.retained)
        else:
            feasibility = feasibility_analysis(
                snapshot, config.alpha_feas, config.benefit_directions[0]
            )
            if not feasibility.proceed:
                active = ActiveArms(domain_a=None)

    if config.n_total > enrolled:
        block, clamped = generate_block(config, active, config.n_total - enrolled, rng)
        blocks.append(block)
        n_clamped += clamped
    subjects = _concat_blocks(blocks)

    if feasibility is not None and not feasibility.proceed:
        branch = FinalBranch.DOMAIN_A_TERMINATED
        model = build_final_model(subjects, branch)
        outcome = analyze_terminated(model, config.alpha_final)
    elif retention is not None and len(retention.retained) == 1:
        branch = FinalBranch.ONE_ARM_RETAINED
        (retained_arm,) = retention.retained
        model = build_final_model(subjects, branch, retained_arm=retained_arm)
        outcome = gatekeep_one_retained(model, config.alpha_final)
    elif retention is not None:
        branch = FinalBranch.BOTH_ARMS_RETAINED
        model = build_final_model(subjects, branch)
        outcome = gatekeep_both_retained(model, config.alpha_final)
    else:  # triggers are validated <= n_total, so both analyses must have run
        raise RuntimeError("inconsistent trial path: no feasibility failure and no retention")

    return TrialResult(
        n_drop=int(n_drop),
        n_feas=int(n_feas),
        schedule=schedule,
        retention=retention,
        feasibility=feasibility,
        branch=branch,
        gatekeeping=outcome,
        n_clamped=n_clamped,
    )


# ---------------------------------------------------------------------------
# scenario-level truth
# ---------------------------------------------------------------------------

def _beneficial(effect: float, direction: str) -> bool:
    return effect > 0 if direction == "increase" else effect < 0


def designed_correct_arms(config: ScenarioConfig) -> frozenset:
    """The arm the dropping analysis should retain: arms with nonzero
    effects on both biomarkers in the benefit directions; the default arm
    when no arm (or every arm) qualifies."""
    d11, d12 = config.benefit_directions
    qualifying = set()
    for arm in ("A1", "A2"):
        e11, e12 = config.biomarker_effects[arm]
        if _beneficial(e11, d11) and _beneficial(e12, d12):
            qualifying.add(arm)
    if len(qualifying) in (0, 2):
        return frozenset([config.default_retained_arm])
    return frozenset(qualifying)


def truly_effective_arms(config: ScenarioConfig) -> frozenset:
    """Arms with a nonzero phase-3 risk difference."""
    return frozenset(a for a in ("A1", "A2", "B1") if config.phase3_effects[a] != 0.0)


_ANCESTORS_BY_BRANCH = {
    FinalBranch.BOTH_ARMS_RETAINED: {
        "H05": frozenset({"H01", "H02", "H03"}),
        "H06": frozenset({"H01", "H02", "H04"}),
        "H07": frozenset({"H01", "H03", "H04"}),
        "H02": frozenset({"H01"}),
        "H03": frozenset({"H01"}),
        "H04": frozenset({"H01"}),
    },
    FinalBranch.ONE_ARM_RETAINED: {
        "beta1": frozenset({"global"}),
        "beta2": frozenset({"global"}),
    },
    FinalBranch.DOMAIN_A_TERMINATED: {},  # single ungated test
}


def gating_violation(outcome: GatekeepingOutcome, branch: FinalBranch) -> bool:
    """Audit a gatekeeping outcome: some rejected node lacks a rejected
    ancestor intersection. Must never be true."""
    ancestors = _ANCESTORS_BY_BRANCH[FinalBranch(branch)]
    for node in outcome.rejected:
        if not ancestors.get(node, frozenset()) <= outcome.rejected:
            return True
    return False


# ---------------------------------------------------------------------------
# cell aggregation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OperatingCharacteristics:
    """Aggregated probabilities for one (n_drop, n_feas) grid cell.

    Retention probabilities are conditional on an arm-dropping decision
    having occurred; everything else is over effective (non-failed)
    replicates. ``power`` is the probability that every domain containing a
    truly effective arm ends with such an arm declared successful, and is
    reported as 0.0 when no arm is truly effective.
    """

    scenario_id: int
    n_drop: int
    n_feas: int
    order_first: str
    p_retain_correct: float
    p_retain_both: float
    p_proceed: float
    p_success: dict
    power: float
    fwer: float
    n_replicates_effective: int
    n_failed: int
    n_retention_decisions: int
    n_used_default: int
    branch_counts: dict
    n_gating_violations: int
    n_clamped: int


_TALLY_KEYS = (
    "n_reps",
    "n_failed",
    "n_retention",
    "n_retain_correct",
    "n_retain_both",
    "n_used_default",
    "n_proceed",
    "succ_A1",
    "succ_A2",
    "succ_A_pooled",
    "succ_B1",
    "succ_A1_B1",
    "succ_A2_B1",
    "n_power",
    "n_fwer",
    "n_gating_violations",
    "n_clamped",
    "branch_one",
    "branch_both",
    "branch_term",
)

TRACE_FIELDS = (
    "scenario_id",
    "n_drop",
    "n_feas",
    "replicate",
    "order_first",
    "retained",
    "used_default",
    "p_drop_y11",
    "p_drop_y12",
    "p_feasibility",
    "proceed",
    "branch",
    "hypothesis_p_values",
    "rejected",
    "successful_arms",
    "n_clamped",
    "fit_failed",
)


def _new_tally() -> dict:
    return {k: 0 for k in _TALLY_KEYS}


def _accumulate(tally: dict, result: TrialResult, correct: frozenset, effective: frozenset) -> None:
    tally["n_reps"] += 1
    tally["n_clamped"] += result.n_clamped
    if result.failed:
        tally["n_failed"] += 1
        return

    if result.retention is not None:
        tally["n_retention"] += 1
        tally["n_retain_correct"] += correct <= result.retention.retained
        tally["n_retain_both"] += len(result.retention.retained) == 2
        tally["n_used_default"] += result.retention.used_default
    if result.feasibility is not None:
        tally["n_proceed"] += result.feasibility.proceed

    tally["branch_one"] += result.branch is FinalBranch.ONE_ARM_RETAINED
    tally["branch_both"] += result.branch is FinalBranch.BOTH_ARMS_RETAINED
    tally["branch_term"] += result.branch is FinalBranch.DOMAIN_A_TERMINATED

    successful = result.successful_arms
    tally["succ_A1"] += "A1" in successful
    tally["succ_A2"] += "A2" in successful
    tally["succ_A_pooled"] += "A_pooled" in successful
    tally["succ_B1"] += "B1" in successful
    tally["succ_A1_B1"] += "A1" in successful and "B1" in successful
    tally["succ_A2_B1"] += "A2" in successful and "B1" in successful
    tally["n_gating_violations"] += gating_violation(result.gatekeeping, result.branch)

    # Domain-level success for power: the pooled declaration stands in for
    # the retained arm; a terminated domain A can never succeed.
    retained_arm = None
    if result.branch is FinalBranch.ONE_ARM_RETAINED:
        (retained_arm,) = result.retention.retained
    effective_a = effective & {"A1", "A2"}
    domain_a_ok = True
    if effective_a:
        if result.branch is FinalBranch.BOTH_ARMS_RETAINED:
            domain_a_ok = bool(successful & effective_a)
        elif result.branch is FinalBranch.ONE_ARM_RETAINED:
            domain_a_ok = "A_pooled" in successful and retained_arm in effective_a
        else:
            domain_a_ok = False
    domain_b_ok = "B1" in successful if "B1" in effective else True
    if effective:
        tally["n_power"] += domain_a_ok and domain_b_ok

    null_arms = {"A1", "A2", "B1"} - effective
    false_success = bool(successful & null_arms)
    if "A_pooled" in successful and retained_arm is not None and retained_arm in null_arms:
        false_success = True
    tally["n_fwer"] += false_success


def _trace_row(config: ScenarioConfig, replicate: int, result: TrialResult) -> dict:
    ret = result.retention
    feas = result.feasibility
    p_map = ";".join(f"{k}={v:.6g}" for k, v in sorted(result.gatekeeping.node_p_values.items()))
    return {
        "scenario_id": config.scenario_id,
        "n_drop": result.n_drop,
        "n_feas": result.n_feas,
        "replicate": replicate,
        "order_first": result.schedule.first[0].value,
        "retained": "|".join(sorted(ret.retained)) if ret else "",
        "used_default": int(ret.used_default) if ret else "",
        "p_drop_y11": f"{ret.test_y11.p_value:.6g}" if ret else "",
        "p_drop_y12": f"{ret.test_y12.p_value:.6g}" if ret else "",
        "p_feasibility": f"{feas.test.p_value:.6g}" if feas else "",
        "proceed": int(feas.proceed) if feas else "",
        "branch": result.branch.value,
        "hypothesis_p_values": p_map,
        "rejected": "|".join(sorted(result.gatekeeping.rejected)),
        "successful_arms": "|".join(sorted(result.successful_arms)),
        "n_clamped": result.n_clamped,
        "fit_failed": int(result.failed),
    }


def _run_chunk(args) -> tuple[dict, list]:
    config, n_drop, n_feas, start, stop, collect_traces = args
    correct = designed_correct_arms(config)
    effective = truly_effective_arms(config)
    tally = _new_tally()
    traces = []
    for rep in range(start, stop):
        seed = derive_seed(config.base_seed, config.scenario_id, (n_drop, n_feas), rep)
        result = run_replicate(config, n_drop, n_feas, seed)
        _accumulate(tally, result, correct, effective)
        if collect_traces:
            traces.append(_trace_row(config, rep, result))
    return tally, traces


def _merge(tallies) -> dict:
    merged = _new_tally()
    for t in tallies:
        for k in _TALLY_KEYS:
            merged[k] += t[k]
    return merged


def _characteristics(config: ScenarioConfig, n_drop: int, n_feas: int, tally: dict) -> OperatingCharacteristics:
    n_eff = tally["n_reps"] - tally["n_failed"]
    per_eff = lambda k: tally[k] / n_eff if n_eff else 0.0
    n_ret = tally["n_retention"]
    return OperatingCharacteristics(
        scenario_id=config.scenario_id,
        n_drop=int(n_drop),
        n_feas=int(n_feas),
        order_first=build_schedule(n_drop, n_feas).first[0].value,
        p_retain_correct=tally["n_retain_correct"] / n_ret if n_ret else 0.0,
        p_retain_both=tally["n_retain_both"] / n_ret if n_ret else 0.0,
        p_proceed=per_eff("n_proceed"),
        p_success={
            "A1": per_eff("succ_A1"),
            "A2": per_eff("succ_A2"),
            "A_pooled": per_eff("succ_A_pooled"),
            "B1": per_eff("succ_B1"),
            "A1:B1": per_eff("succ_A1_B1"),
            "A2:B1": per_eff("succ_A2_B1"),
        },
        power=per_eff("n_power"),
        fwer=per_eff("n_fwer"),
        n_replicates_effective=n_eff,
        n_failed=tally["n_failed"],
        n_retention_decisions=n_ret,
        n_used_default=tally["n_used_default"],
        branch_counts={
            "one_arm_retained": tally["branch_one"],
            "both_arms_retained": tally["branch_both"],
            "domain_a_terminated": tally["branch_term"],
        },
        n_gating_violations=tally["n_gating_violations"],
        n_clamped=tally["n_clamped"],
    )


_CHUNK_SIZE = 250  # replicates per worker task


def _execute(config, cells, threads, collect_traces, replicates=None):
    replicates = config.replicates if replicates is None else replicates
    if replicates < 1:
        raise ValueError(f"replicates must be >= 1, got {replicates}")
    n_chunks = (replicates + _CHUNK_SIZE - 1) // _CHUNK_SIZE
    tasks = [
        (config, n_drop, n_feas, start, min(start + _CHUNK_SIZE, replicates), collect_traces)
        for n_drop, n_feas in cells
        for start in range(0, replicates, _CHUNK_SIZE)
    ]
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            outputs = list(pool.map(_run_chunk, tasks, chunksize=1))
    else:
        outputs = [_run_chunk(t) for t in tasks]

    results = []
    traces: list[dict] = []
    for j, (n_drop, n_feas) in enumerate(cells):
        chunk_outputs = outputs[j * n_chunks : (j + 1) * n_chunks]
        tally = _merge(t for t, _ in chunk_outputs)
        results.append(_characteristics(config, n_drop, n_feas, tally))
        for _, rows in chunk_outputs:
            traces.extend(rows)
    return results, traces


def run_cell_detail(
    config: ScenarioConfig,
    n_drop: int,
    n_feas: int,
    threads: int = 1,
    collect_traces: bool = False,
    replicates: Optional[int] = None,
) -> tuple[OperatingCharacteristics, list]:
    """Run one grid cell; returns characteristics and (optionally) one
    trace row per replicate."""
    validate_scenario(config)
    results, traces = _execute(config, [(n_drop, n_feas)], threads, collect_traces, replicates)
    return results[0], traces


def run_cell(
    config: ScenarioConfig, n_drop: int, n_feas: int, threads: int = 1
) -> OperatingCharacteristics:
    """Operating characteristics of one (n_drop, n_feas) cell."""
    return run_cell_detail(config, n_drop, n_feas, threads=threads)[0]


def _sorted_cells(config: ScenarioConfig) -> list:
    return [(d, f) for d in sorted(config.n_drop_grid) for f in sorted(config.n_feas_grid)]


def run_grid_detail(
    config: ScenarioConfig, threads: int = 1, collect_traces: bool = False
) -> tuple[list, list]:
    """Run the full n_drop x n_feas Cartesian product, sorted by cell."""
    validate_scenario(config)
    return _execute(config, _sorted_cells(config), threads, collect_traces)


def run_grid(config: ScenarioConfig, threads: int = 1) -> list:
    """Operating characteristics for every cell of the timing grid."""
    return run_grid_detail(config, threads=threads)[0]
