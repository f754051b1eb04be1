"""Trial structure and scenario configuration.

The simulated trial has two treatment domains randomized factorially:
domain A compares two active arms (A1, A2) against control A0 and is
subject to the phase-2 interim machinery; domain B compares one active arm
(B1) against control B0 and is analyzed only at the end. Phase-2 decisions
use two continuous biomarkers (y11, y12); the phase-3 outcome (y21) is
binary. A ``ScenarioConfig`` pins every knob a simulation needs, and
``validate_scenario`` checks the whole document at once.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional

import numpy as np

__all__ = [
    "DOMAIN_A_ARMS",
    "DOMAIN_B_ARMS",
    "TREATMENT_ARMS_A",
    "ARM_A_CODE",
    "ARM_B_CODE",
    "ABSENT",
    "BenefitDirection",
    "OutcomeSpec",
    "DomainSpec",
    "DesignSpec",
    "default_design",
    "ScenarioConfig",
    "SubjectRecord",
    "SubjectData",
    "ScenarioValidationError",
    "scenario_issues",
    "validate_scenario",
    "scenario_to_dict",
    "scenario_from_dict",
    "load_scenarios",
]

DOMAIN_A_ARMS = ("A0", "A1", "A2")
DOMAIN_B_ARMS = ("B0", "B1")
TREATMENT_ARMS_A = ("A1", "A2")

ARM_A_CODE = {"A0": 0, "A1": 1, "A2": 2}
ARM_B_CODE = {"B0": 0, "B1": 1}
ABSENT = -1  # arm_a code for subjects enrolled after domain A termination


class BenefitDirection(str, Enum):
    INCREASE = "increase"
    DECREASE = "decrease"


@dataclass(frozen=True)
class OutcomeSpec:
    """One outcome of interest, indexed by trial phase."""

    phase: int
    index: int
    kind: str  # "continuous" | "binary"
    direction_of_benefit: BenefitDirection


@dataclass(frozen=True)
class DomainSpec:
    name: str
    arms: tuple[str, ...]  # first entry is the control arm


@dataclass(frozen=True)
class DesignSpec:
    """The factorial structure: domains with their arms, phase-2 biomarker
    outcomes, and the binary phase-3 outcome."""

    domains: tuple[DomainSpec, ...]
    phase2_outcomes: tuple[OutcomeSpec, ...]
    phase3_outcome: OutcomeSpec


def default_design(
    direction_y11: BenefitDirection = BenefitDirection.INCREASE,
    direction_y12: BenefitDirection = BenefitDirection.DECREASE,
) -> DesignSpec:
    """The 3x2 instance every decision engine in this package targets."""
    return DesignSpec(
        domains=(
            DomainSpec("A", DOMAIN_A_ARMS),
            DomainSpec("B", DOMAIN_B_ARMS),
        ),
        phase2_outcomes=(
            OutcomeSpec(1, 1, "continuous", direction_y11),
            OutcomeSpec(1, 2, "continuous", direction_y12),
        ),
        phase3_outcome=OutcomeSpec(2, 1, "binary", BenefitDirection.DECREASE),
    )


_DEFAULT_GRID = tuple(range(90, 301, 30))


@dataclass(frozen=True)
class ScenarioConfig:
    """Full specification of one simulation scenario.

    Biomarker effects are mean shifts relative to control (control fixed at
    zero); phase-3 effects are additive risk differences on the event
    probability. ``benefit_directions`` orients the phase-2 decision rules
    for (y11, y12): nominations go to the arm further in the benefit
    direction, and feasibility rejects when the pooled mean beats control
    in that direction.
    """

    scenario_id: int = 0
    biomarker_effects: dict = dataclasses.field(
        default_factory=lambda: {"A1": (0.0, 0.0), "A2": (0.0, 0.0)}
    )
    biomarker_sds: tuple = (10.0, 10.0)
    benefit_directions: tuple = ("increase", "decrease")
    phase3_effects: dict = dataclasses.field(
        default_factory=lambda: {"A1": 0.0, "A2": 0.0, "B1": 0.0}
    )
    control_event_rate: float = 0.40
    n_total: int = 1000
    n_drop_grid: tuple = _DEFAULT_GRID
    n_feas_grid: tuple = _DEFAULT_GRID
    alpha_drop: float = 0.05
    alpha_feas: float = 0.05
    alpha_final: float = 0.05
    default_retained_arm: str = "A2"
    replicates: int = 1000
    base_seed: int = 20230901

    def biomarker_effect(self, arm_a: Optional[str], outcome: int) -> float:
        """Mean shift of biomarker ``outcome`` (0 for y11, 1 for y12) for a
        domain-A assignment; control and absent assignments shift nothing."""
        if arm_a is None or arm_a == "A0":
            return 0.0
        return float(self.biomarker_effects[arm_a][outcome])

    def risk_difference(self, arm: Optional[str]) -> float:
        """Additive phase-3 risk difference for an arm; controls and absent
        assignments contribute zero."""
        if arm is None or arm in ("A0", "B0"):
            return 0.0
        return float(self.phase3_effects[arm])


@dataclass(frozen=True)
class SubjectRecord:
    """One virtual patient in enrollment order."""

    index: int
    arm_a: Optional[str]  # None once domain A has been terminated
    arm_b: str
    y11: float
    y12: float
    y21: int


class SubjectData:
    """Column-oriented subject store (enrollment order preserved).

    Analyses operate on the arrays; ``record``/iteration expose the same
    content as ``SubjectRecord`` values.
    """

    __slots__ = ("arm_a", "arm_b", "y11", "y12", "y21")

    def __init__(self, arm_a, arm_b, y11, y12, y21):
        self.arm_a = np.asarray(arm_a, dtype=np.int8)
        self.arm_b = np.asarray(arm_b, dtype=np.int8)
        self.y11 = np.asarray(y11, dtype=float)
        self.y12 = np.asarray(y12, dtype=float)
        self.y21 = np.asarray(y21, dtype=np.int8)
        n = len(self.arm_a)
        if not (len(self.arm_b) == len(self.y11) == len(self.y12) == len(self.y21) == n):
            raise ValueError("subject columns must have equal length")

    @classmethod
    def empty(cls) -> "SubjectData":
        return cls([], [], [], [], [])

    @classmethod
    def from_records(cls, records: Iterable[SubjectRecord]) -> "SubjectData":
        records = list(records)
        return cls(
            [ABSENT if r.arm_a is None else ARM_A_CODE[r.arm_a] for r in records],
            [ARM_B_CODE[r.arm_b] for r in records],
            [r.y11 for r in records],
            [r.y12 for r in records],
            [r.y21 for r in records],
        )

    def __len__(self) -> int:
        return len(self.arm_a)

    def head(self, n: int) -> "SubjectData":
        return SubjectData(self.arm_a[:n], self.arm_b[:n], self.y11[:n], self.y12[:n], self.y21[:n])

    def record(self, i: int) -> SubjectRecord:
        code = int(self.arm_a[i])
        return SubjectRecord(
            index=i,
            arm_a=None if code == ABSENT else DOMAIN_A_ARMS[code],
            arm_b=DOMAIN_B_ARMS[int(self.arm_b[i])],
            y11=float(self.y11[i]),
            y12=float(self.y12[i]),
            y21=int(self.y21[i]),
        )

    def __iter__(self):
        return (self.record(i) for i in range(len(self)))

    def n_with_domain_a(self) -> int:
        return int(np.count_nonzero(self.arm_a != ABSENT))


def as_subject_data(subjects) -> SubjectData:
    """Accept either a SubjectData or any iterable of SubjectRecord."""
    if isinstance(subjects, SubjectData):
        return subjects
    return SubjectData.from_records(subjects)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

class ScenarioValidationError(ValueError):
    """Carries every violation found in a scenario, not just the first."""

    def __init__(self, issues):
        self.issues = list(issues)
        super().__init__("invalid scenario:\n" + "\n".join(f"  - {i}" for i in self.issues))


def _check_grid(issues, name, grid, n_total):
    if len(grid) == 0:
        issues.append(f"{name}: grid must be nonempty")
        return
    for v in grid:
        if not (isinstance(v, (int, np.integer)) and not isinstance(v, bool)):
            issues.append(f"{name}: trigger {v!r} is not an integer")
            return
    if any(v < 1 for v in grid):
        issues.append(f"{name}: triggers must be >= 1 (got {tuple(grid)})")
    if isinstance(n_total, (int, np.integer)) and any(v > n_total for v in grid):
        issues.append(f"{name}: triggers must not exceed n_total={n_total} (got {tuple(grid)})")
    if len(set(grid)) != len(grid):
        issues.append(f"{name}: triggers must be distinct (got {tuple(grid)})")


def scenario_issues(config: ScenarioConfig) -> list[str]:
    """Every invariant violation in ``config``, with field paths."""
    issues: list[str] = []

    if set(config.biomarker_effects) != set(TREATMENT_ARMS_A):
        issues.append(
            f"biomarker_effects: keys must be exactly {set(TREATMENT_ARMS_A)}, "
            f"got {set(config.biomarker_effects)}"
        )
    else:
        for arm, pair in config.biomarker_effects.items():
            if len(tuple(pair)) != 2 or not all(np.isfinite(v) for v in pair):
                issues.append(f"biomarker_effects[{arm}]: needs two finite values, got {pair!r}")

    sds = tuple(config.biomarker_sds)
    if len(sds) != 2 or not all(np.isfinite(s) and s >= 0 for s in sds):
        issues.append(f"biomarker_sds: needs two nonnegative finite values, got {sds!r}")

    dirs = tuple(config.benefit_directions)
    if len(dirs) != 2 or not all(d in ("increase", "decrease") for d in dirs):
        issues.append(
            f"benefit_directions: needs two values from {{'increase','decrease'}}, got {dirs!r}"
        )

    if not 0.0 < config.control_event_rate < 1.0:
        issues.append(
            f"control_event_rate: must lie strictly in (0, 1), got {config.control_event_rate}"
        )

    if set(config.phase3_effects) != {"A1", "A2", "B1"}:
        issues.append(
            "phase3_effects: keys must be exactly {'A1', 'A2', 'B1'}, "
            f"got {set(config.phase3_effects)}"
        )
    elif 0.0 < config.control_event_rate < 1.0:
        for arm_a in (None, "A0", "A1", "A2"):
            for arm_b in ("B0", "B1"):
                p = (
                    config.control_event_rate
                    + config.risk_difference(arm_a)
                    + config.risk_difference(arm_b)
                )
                if not 0.0 < p < 1.0:
                    issues.append(
                        f"phase3_effects: event probability for arms ({arm_a or 'none'}, {arm_b}) "
                        f"is {p:.6g}, outside (0, 1)"
                    )

    if not (isinstance(config.n_total, (int, np.integer)) and config.n_total >= 1):
        issues.append(f"n_total: must be a positive integer, got {config.n_total!r}")

    _check_grid(issues, "n_drop_grid", tuple(config.n_drop_grid), config.n_total)
    _check_grid(issues, "n_feas_grid", tuple(config.n_feas_grid), config.n_total)

    for name in ("alpha_drop", "alpha_feas", "alpha_final"):
        a = getattr(config, name)
        if not 0.0 < a < 1.0:
            issues.append(f"{name}: must lie strictly in (0, 1), got {a}")

    if config.default_retained_arm not in TREATMENT_ARMS_A:
        issues.append(
            f"default_retained_arm: must be one of {TREATMENT_ARMS_A}, "
            f"got {config.default_retained_arm!r}"
        )

    if not (isinstance(config.replicates, (int, np.integer)) and config.replicates >= 1):
        issues.append(f"replicates: must be a positive integer, got {config.replicates!r}")

    if not (isinstance(config.scenario_id, (int, np.integer)) and config.scenario_id >= 0):
        issues.append(f"scenario_id: must be a nonnegative integer, got {config.scenario_id!r}")

    if not (isinstance(config.base_seed, (int, np.integer)) and 0 <= config.base_seed < 2**64):
        issues.append(f"base_seed: must be an integer in [0, 2^64), got {config.base_seed!r}")

    return issues


def validate_scenario(config: ScenarioConfig) -> ScenarioConfig:
    """Return the config unchanged if valid, else raise with every issue."""
    issues = scenario_issues(config)
    if issues:
        raise ScenarioValidationError(issues)
    return config


# ---------------------------------------------------------------------------
# serialization (strict JSON round-trip)
# ---------------------------------------------------------------------------

_FIELD_NAMES = tuple(f.name for f in dataclasses.fields(ScenarioConfig))


def scenario_to_dict(config: ScenarioConfig) -> dict:
    """Plain-JSON form of a config (tuples become lists)."""
    return {
        "scenario_id": int(config.scenario_id),
        "biomarker_effects": {
            arm: [float(v) for v in pair] for arm, pair in sorted(config.biomarker_effects.items())
        },
        "biomarker_sds": [float(s) for s in config.biomarker_sds],
        "benefit_directions": list(config.benefit_directions),
        "phase3_effects": {arm: float(v) for arm, v in sorted(config.phase3_effects.items())},
        "control_event_rate": float(config.control_event_rate),
        "n_total": int(config.n_total),
        "n_drop_grid": [int(v) for v in config.n_drop_grid],
        "n_feas_grid": [int(v) for v in config.n_feas_grid],
        "alpha_drop": float(config.alpha_drop),
        "alpha_feas": float(config.alpha_feas),
        "alpha_final": float(config.alpha_final),
        "default_retained_arm": config.default_retained_arm,
        "replicates": int(config.replicates),
        "base_seed": int(config.base_seed),
    }


def scenario_from_dict(doc: dict, strict: bool = True) -> ScenarioConfig:
    """Parse a scenario document; unknown keys are rejected in strict mode."""
    if not isinstance(doc, dict):
        raise ScenarioValidationError([f"scenario document must be an object, got {type(doc).__name__}"])
    unknown = set(doc) - set(_FIELD_NAMES)
    if strict and unknown:
        raise ScenarioValidationError([f"unknown key {k!r}" for k in sorted(unknown)])

    kwargs = {}
    if "biomarker_effects" in doc:
        kwargs["biomarker_effects"] = {
            str(arm): tuple(float(v) for v in pair) for arm, pair in doc["biomarker_effects"].items()
        }
    if "phase3_effects" in doc:
        kwargs["phase3_effects"] = {str(arm): float(v) for arm, v in doc["phase3_effects"].items()}
    for key in ("biomarker_sds", "benefit_directions", "n_drop_grid", "n_feas_grid"):
        if key in doc:
            kwargs[key] = tuple(doc[key])
    for key in (
        "scenario_id",
        "control_event_rate",
        "n_total",
        "alpha_drop",
        "alpha_feas",
        "alpha_final",
        "default_retained_arm",
        "replicates",
        "base_seed",
    ):
        if key in doc:
            kwargs[key] = doc[key]
    return ScenarioConfig(**kwargs)


def load_scenarios(path) -> list[ScenarioConfig]:
    """Load one scenario (top-level object) or several (top-level list)
    from a JSON file; every scenario is validated."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    docs = doc if isinstance(doc, list) else [doc]
    scenarios = [validate_scenario(scenario_from_dict(d)) for d in docs]
    ids = [s.scenario_id for s in scenarios]
    if len(set(ids)) != len(ids):
        raise ScenarioValidationError([f"scenario_id values must be distinct, got {ids}"])
    return scenarios
