"""Final-analysis branches: model construction, gating rule traces, and
calibration of the terminated-branch test."""

import numpy as np
import pytest

from fast_trials.design import ScenarioConfig, SubjectData
from fast_trials.final_analysis import (
    FinalBranch,
    analyze_terminated,
    build_final_model,
    gate_three_parameter,
    gate_two_parameter,
    gatekeep_both_retained,
    gatekeep_one_retained,
)
from fast_trials.generation import ActiveArms, generate_block
from fast_trials.oracles import oracle_gatekeeping_enumerate

_NODES = ("H01", "H02", "H03", "H04", "H05", "H06", "H07")


def _subjects(arm_a, arm_b, y21):
    n = len(arm_a)
    return SubjectData(arm_a, arm_b, np.zeros(n), np.zeros(n), y21)


# -- model construction -------------------------------------------------------

def test_pooled_indicator_is_or_of_arm_indicators():
    arm_a = np.array([0, 1, 2, 1, 0, 2, 2])
    arm_b = np.array([0, 1, 0, 1, 1, 0, 1])
    data = _subjects(arm_a, arm_b, np.zeros(7, dtype=int))
    model = build_final_model(data, FinalBranch.ONE_ARM_RETAINED, retained_arm="A2")
    pooled = model.subject_indicators[:, 0]
    np.testing.assert_array_equal(pooled, ((arm_a == 1) | (arm_a == 2)).astype(np.int8))
    assert model.spec.covariates == ("fluid_pooled", "b1")
    assert model.n_subjects == 7


def test_dropped_arm_subjects_stay_in_pool():
    # A1 dropped mid-stream: its early subjects still carry the pooled flag.
    arm_a = np.array([1] * 5 + [2] * 10 + [0] * 10)
    arm_b = np.zeros(25, dtype=int)
    model = build_final_model(
        _subjects(arm_a, arm_b, np.zeros(25, dtype=int)),
        FinalBranch.ONE_ARM_RETAINED,
        retained_arm="A2",
    )
    assert model.subject_indicators[:15, 0].sum() == 15


def test_terminated_model_uses_all_subjects():
    arm_a = np.array([0, 1, 2, -1, -1, -1])
    arm_b = np.array([0, 1, 0, 1, 0, 1])
    model = build_final_model(_subjects(arm_a, arm_b, np.zeros(6, dtype=int)), "domain_a_terminated")
    assert model.spec.covariates == ("b1",)
    assert model.spec.subject_filter == "all_subjects"
    assert model.n_subjects == 6
    np.testing.assert_array_equal(model.subject_indicators[:, 0], (arm_b == 1).astype(np.int8))


def test_both_retained_reference_coding():
    arm_a = np.array([0, 1, 2, 0])
    arm_b = np.array([0, 0, 1, 1])
    model = build_final_model(_subjects(arm_a, arm_b, np.zeros(4, dtype=int)), "both_arms_retained")
    assert model.spec.covariates == ("a1", "a2", "b1")
    np.testing.assert_array_equal(model.subject_indicators[0], [0, 0, 0])  # A0/B0 all-zero
    np.testing.assert_array_equal(model.subject_indicators[1], [1, 0, 0])
    np.testing.assert_array_equal(model.subject_indicators[2], [0, 1, 1])


def test_grouped_counts_conserve_subjects_and_events():
    rng = np.random.default_rng(55)
    arm_a = rng.integers(0, 3, 500)
    arm_b = rng.integers(0, 2, 500)
    y21 = rng.integers(0, 2, 500)
    model = build_final_model(_subjects(arm_a, arm_b, y21), "both_arms_retained")
    assert model.trials.sum() == 500
    assert model.events.sum() == y21.sum()


def test_one_arm_model_requires_retained_arm():
    data = _subjects(np.array([0, 1, 2]), np.array([0, 1, 0]), np.zeros(3, dtype=int))
    with pytest.raises(ValueError):
        build_final_model(data, FinalBranch.ONE_ARM_RETAINED)


# -- pure gating rules ---------------------------------------------------------

def test_two_parameter_gate_traces():
    assert gate_two_parameter({"global": 0.001, "beta1": 0.2, "beta2": 0.001}, 0.05) == {
        "global",
        "beta2",
    }
    assert gate_two_parameter({"global": 1.0, "beta1": 1.0, "beta2": 1.0}, 0.05) == frozenset()
    assert gate_two_parameter({"global": 0.2, "beta1": 0.001, "beta2": 0.001}, 0.05) == frozenset()


def test_three_parameter_gate_full_rejection():
    p = {node: 0.001 for node in _NODES}
    assert gate_three_parameter(p, 0.05) == set(_NODES)


def test_three_parameter_gate_blocked_pairs():
    # H04 holds: H06 and H07 stay blocked no matter their own p-values.
    p = {"H01": 0.001, "H02": 0.001, "H03": 0.001, "H04": 0.9, "H05": 0.001, "H06": 0.0, "H07": 0.0}
    rejected = gate_three_parameter(p, 0.05)
    assert "H05" in rejected
    assert "H06" not in rejected and "H07" not in rejected


def test_three_parameter_gate_root_closed():
    p = {node: 0.0 for node in _NODES}
    p["H01"] = 0.5
    assert gate_three_parameter(p, 0.05) == frozenset()


def test_gate_matches_oracle_on_random_vectors():
    rng = np.random.default_rng(616)
    for _ in range(500):
        p = {node: float(rng.choice([rng.random(), rng.random() * 0.1])) for node in _NODES}
        assert set(gate_three_parameter(p, 0.05)) == oracle_gatekeeping_enumerate(p, 0.05)


# -- end-to-end analyses -------------------------------------------------------

def _synthetic_cell_data(branch, rates, n_per_cell=400, seed=0):
    """Build subjects whose per-cell event rates are exactly ``rates``."""
    rng = np.random.default_rng(seed)
    arm_a, arm_b, y21 = [], [], []
    for (a, b), rate in rates.items():
        events = int(round(rate * n_per_cell))
        arm_a += [a] * n_per_cell
        arm_b += [b] * n_per_cell
        y21 += [1] * events + [0] * (n_per_cell - events)
    data = _subjects(np.array(arm_a), np.array(arm_b), np.array(y21))
    return build_final_model(
        data, branch, retained_arm="A2" if branch is FinalBranch.ONE_ARM_RETAINED else None
    )


def test_one_retained_b1_effect_only():
    # Fluid pool at control rate, B1 doubles the rate: only B1 succeeds.
    rates = {(0, 0): 0.2, (0, 1): 0.5, (1, 0): 0.2, (1, 1): 0.5, (2, 0): 0.2, (2, 1): 0.5}
    model = _synthetic_cell_data(FinalBranch.ONE_ARM_RETAINED, rates)
    outcome = gatekeep_one_retained(model, 0.05)
    assert not outcome.fit_failed
    assert outcome.successful_arms == frozenset({"B1"})
    assert outcome.node_p_values["global"] < 0.05 < outcome.node_p_values["beta1"]


def test_one_retained_flat_data_rejects_nothing():
    rates = {(a, b): 0.3 for a in (0, 1, 2) for b in (0, 1)}
    model = _synthetic_cell_data(FinalBranch.ONE_ARM_RETAINED, rates)
    outcome = gatekeep_one_retained(model, 0.05)
    assert outcome.rejected == frozenset()
    assert outcome.successful_arms == frozenset()
    assert min(outcome.node_p_values.values()) > 0.9


def test_both_retained_all_effects_succeed_everywhere():
    rates = {(0, 0): 0.2, (1, 0): 0.5, (2, 0): 0.5, (0, 1): 0.5, (1, 1): 0.8, (2, 1): 0.8}
    model = _synthetic_cell_data(FinalBranch.BOTH_ARMS_RETAINED, rates)
    outcome = gatekeep_both_retained(model, 0.05)
    assert outcome.successful_arms == frozenset({"A1", "A2", "B1"})
    assert outcome.rejected == frozenset(_NODES)


def test_terminated_branch_calibration_and_effect():
    cfg = ScenarioConfig()  # B1 null
    hits = 0
    n_rep = 400
    for rep in range(n_rep):
        block, _ = generate_block(cfg, ActiveArms(domain_a=None), 600, np.random.default_rng(rep))
        model = build_final_model(block, "domain_a_terminated")
        hits += analyze_terminated(model, 0.05).successful_arms == frozenset({"B1"})
    rate = hits / n_rep
    assert rate < 0.05 + 3.5 * np.sqrt(0.05 * 0.95 / n_rep)

    strong = ScenarioConfig(phase3_effects={"A1": 0.0, "A2": 0.0, "B1": 0.2})
    block, _ = generate_block(strong, ActiveArms(domain_a=None), 1000, np.random.default_rng(5150))
    outcome = analyze_terminated(build_final_model(block, "domain_a_terminated"), 0.05)
    assert outcome.successful_arms == frozenset({"B1"})


def test_all_zero_outcomes_flag_failure_without_crash():
    data = _subjects(np.array([-1] * 40), np.array([0, 1] * 20), np.zeros(40, dtype=int))
    outcome = analyze_terminated(build_final_model(data, "domain_a_terminated"), 0.05)
    assert outcome.fit_failed
    assert outcome.successful_arms == frozenset()


def test_branch_mismatch_raises():
    data = _subjects(np.array([0, 1, 2, 0]), np.array([0, 1, 0, 1]), np.array([0, 1, 0, 1]))
    model = build_final_model(data, "both_arms_retained")
    with pytest.raises(ValueError):
        gatekeep_one_retained(model, 0.05)
    with pytest.raises(ValueError):
        analyze_terminated(model, 0.05)
