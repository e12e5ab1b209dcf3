"""Generation protocols: conjugate-mismatch single-particle trials, entangled
pair trials with fixed or outcome-adapted analyzer angles, parametric detector
imperfections, and correlation / CHSH certification estimators.

Outcome conventions follow qcore: spin outcomes are indexed m = +j..-j, and
two-outcome sides code index 0 as bit 0, index 1 as bit 1. Ideal same-angle
measurements of the entangled pair land exclusively on the anti-diagonal
b = (dim - 1) - a.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .qcore import (
    Basis,
    JointState,
    OutcomeDistribution,
    RandomSource,
    StateVector,
    born_probabilities,
    joint_born_probabilities,
    sample_many,
    spin_dim,
    spin_rotation_basis,
)

__all__ = [
    "NO_CLICK",
    "DetectorModel",
    "IDEAL_DETECTOR",
    "TrialRecord",
    "ChshResult",
    "prepare_basis_state",
    "singlet_state",
    "apply_detector",
    "single_trial",
    "single_trials",
    "epr_joint_distribution",
    "epr_trial",
    "epr_trials",
    "alice_marginal_distribution",
    "bob_conditional_distribution",
    "adaptive_epr_trial",
    "adaptive_epr_trials",
    "correlation_estimate",
    "chsh_estimate",
    "chsh_certify",
    "run_blocked",
]

# Sentinel for lost events in outcome arrays; single-trial APIs map it to None.
NO_CLICK = -1


@dataclass(frozen=True)
class DetectorModel:
    """Parametric detector channel applied to an ideal outcome.

    The event is lost with probability `no_click_prob`; otherwise the detector
    reports `preferred_outcome` with probability `stick_prob` and the true
    outcome with the complementary probability.
    """

    stick_prob: float = 0.0
    preferred_outcome: int = 0
    no_click_prob: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.stick_prob <= 1.0:
            raise ValueError("DetectorModel: stick_prob must lie in [0, 1]")
        if not 0.0 <= self.no_click_prob < 1.0:
            raise ValueError("DetectorModel: no_click_prob must lie in [0, 1)")
        if self.preferred_outcome < 0:
            raise ValueError("DetectorModel: preferred_outcome must be a valid index")

    @property
    def is_ideal(self) -> bool:
        return self.stick_prob == 0.0 and self.no_click_prob == 0.0


IDEAL_DETECTOR = DetectorModel()


@dataclass(frozen=True)
class TrialRecord:
    """One entangled-pair trial; None outcomes mark no-click events."""

    trial_index: int
    a: int | None
    b: int | None
    theta_a: float
    theta_b: float

    @property
    def discarded(self) -> bool:
        return self.a is None or self.b is None


def prepare_basis_state(basis: Basis, index: int) -> StateVector:
    """Pure state equal to outcome `index` of the given basis."""
    return basis.column(index)


def singlet_state(j: float) -> JointState:
    """Total-spin-zero entangled state of two spin-j systems.

    Amplitude (-1)^(j-m) / sqrt(dim) on each |m, -m> pair and zero elsewhere.
    Rotation invariant, with perfectly anticorrelated outcomes whenever both
    sides measure along the same direction.
    """
    d = spin_dim(j)
    amps = np.zeros(d * d, dtype=np.complex128)
    for k in range(d):  # k indexes m = j - k; the partner of index k is d-1-k
        amps[k * d + (d - 1 - k)] = (-1) ** k / np.sqrt(d)
    return JointState(d, d, amps)


def _check_detector(det: DetectorModel, dim: int) -> None:
    if det.stick_prob > 0.0 and det.preferred_outcome >= dim:
        raise ValueError(
            f"DetectorModel: preferred outcome {det.preferred_outcome} outside dimension {dim}"
        )


def apply_detector(outcome: int, det: DetectorModel, rng: RandomSource) -> int | None:
    """Pass one outcome through the detector channel; None means no-click."""
    if outcome < 0:
        raise ValueError("apply_detector: outcome must be a valid index")
    if det.no_click_prob > 0.0 and rng.random() < det.no_click_prob:
        return None
    if det.stick_prob > 0.0 and rng.random() < det.stick_prob:
        return det.preferred_outcome
    return int(outcome)


def _detector_array(outcomes: np.ndarray, det: DetectorModel, rng: RandomSource) -> np.ndarray:
    """Vectorized detector channel; NO_CLICK marks lost events."""
    if det.is_ideal:
        return outcomes
    reported = outcomes
    if det.no_click_prob > 0.0:
        lost = rng.random(outcomes.size) < det.no_click_prob
    else:
        lost = None
    if det.stick_prob > 0.0:
        stick = rng.random(outcomes.size) < det.stick_prob
        reported = np.where(stick, np.int64(det.preferred_outcome), reported)
    if lost is not None:
        reported = np.where(lost, np.int64(NO_CLICK), reported)
    return reported


def single_trials(
    prep: StateVector,
    meas_basis: Basis,
    det: DetectorModel,
    count: int,
    rng: RandomSource,
) -> np.ndarray:
    """Measure `count` copies of `prep` in `meas_basis` through one detector.

    Returns reported outcome indices with NO_CLICK marking lost events.
    """
    _check_detector(det, meas_basis.dim)
    dist = born_probabilities(prep, meas_basis)
    return _detector_array(sample_many(dist, count, rng), det, rng)


def single_trial(
    prep: StateVector, meas_basis: Basis, det: DetectorModel, rng: RandomSource
) -> int | None:
    reported = single_trials(prep, meas_basis, det, 1, rng)[0]
    return None if reported == NO_CLICK else int(reported)


def epr_joint_distribution(j: float, theta_a: float, theta_b: float) -> OutcomeDistribution:
    """Joint outcome distribution of the spin-j entangled pair at two analyzer
    angles, flat-indexed a * dim + b."""
    return joint_born_probabilities(
        singlet_state(j),
        spin_rotation_basis(j, theta_a),
        spin_rotation_basis(j, theta_b),
    )


def epr_trials(
    j: float,
    theta_a: float,
    theta_b: float,
    det_a: DetectorModel,
    det_b: DetectorModel,
    count: int,
    rng: RandomSource,
) -> tuple[np.ndarray, np.ndarray]:
    """Sample `count` entangled-pair trials at fixed analyzer angles.

    Returns reported (a, b) outcome arrays with NO_CLICK marking lost events;
    coincidence gating (dropping trials lost on either side) is the caller's
    choice.
    """
    d = spin_dim(j)
    _check_detector(det_a, d)
    _check_detector(det_b, d)
    pairs = sample_many(epr_joint_distribution(j, theta_a, theta_b), count, rng)
    a = _detector_array(pairs // d, det_a, rng)
    b = _detector_array(pairs % d, det_b, rng)
    return a, b


def epr_trial(
    j: float,
    theta_a: float,
    theta_b: float,
    det_a: DetectorModel,
    det_b: DetectorModel,
    rng: RandomSource,
    trial_index: int = 0,
) -> TrialRecord:
    a, b = epr_trials(j, theta_a, theta_b, det_a, det_b, 1, rng)
    return TrialRecord(
        trial_index=trial_index,
        a=None if a[0] == NO_CLICK else int(a[0]),
        b=None if b[0] == NO_CLICK else int(b[0]),
        theta_a=float(theta_a),
        theta_b=float(theta_b),
    )


def alice_marginal_distribution(j: float, theta_a: float) -> OutcomeDistribution:
    """Outcome distribution on side A alone (independent of side B's basis)."""
    d = spin_dim(j)
    table = singlet_state(j).amps.reshape(d, d)
    rows = spin_rotation_basis(j, theta_a).matrix.conj().T @ table
    return OutcomeDistribution.from_weights(np.sum(np.abs(rows) ** 2, axis=1))


def bob_conditional_distribution(
    j: float, theta_a: float, a_outcome: int, theta_b: float
) -> OutcomeDistribution:
    """Side B's outcome distribution given side A's outcome and both angles."""
    d = spin_dim(j)
    if not 0 <= a_outcome < d:
        raise ValueError(f"bob_conditional_distribution: outcome {a_outcome} out of range")
    joint = epr_joint_distribution(j, theta_a, theta_b).probs.reshape(d, d)
    row = joint[a_outcome]
    total = row.sum()
    if total <= 0.0:
        raise ValueError(
            f"bob_conditional_distribution: outcome {a_outcome} has zero probability"
        )
    return OutcomeDistribution.from_weights(row / total)


def _validate_adaptation(adapt: dict, dim: int) -> dict[int, float]:
    mapping = {}
    for key in range(dim):
        if key not in adapt:
            raise ValueError(f"adaptation map: missing angle for outcome {key}")
        angle = float(adapt[key])
        if not np.isfinite(angle):
            raise ValueError(f"adaptation map: angle for outcome {key} must be finite")
        mapping[key] = angle
    return mapping


def adaptive_epr_trials(
    j: float,
    theta_a: float,
    adapt: dict,
    det_a: DetectorModel,
    det_b: DetectorModel,
    count: int,
    rng: RandomSource,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Entangled-pair trials where side B's angle depends on side A's outcome.

    Side A's outcomes are drawn from the marginal; side B's from the exact
    conditional at angle adapt[a]. Adaptation keys on side A's pre-detector
    outcome; detector channels act on the recorded values afterwards. Side B's
    draws are grouped by side A's outcome value, so stream consumption order
    differs from trial order but stays deterministic.

    Returns (a, b, theta_b_per_trial).
    """
    d = spin_dim(j)
    _check_detector(det_a, d)
    _check_detector(det_b, d)
    mapping = _validate_adaptation(adapt, d)
    a_true = sample_many(alice_marginal_distribution(j, theta_a), count, rng)
    b_true = np.empty(count, dtype=np.int64)
    theta_b = np.empty(count, dtype=np.float64)
    for a_val in range(d):
        idx = np.nonzero(a_true == a_val)[0]
        theta_b[idx] = mapping[a_val]
        if idx.size == 0:
            continue
        cond = bob_conditional_distribution(j, theta_a, a_val, mapping[a_val])
        b_true[idx] = sample_many(cond, idx.size, rng)
    a = _detector_array(a_true, det_a, rng)
    b = _detector_array(b_true, det_b, rng)
    return a, b, theta_b


def adaptive_epr_trial(
    j: float,
    theta_a: float,
    adapt: dict,
    det_a: DetectorModel,
    det_b: DetectorModel,
    rng: RandomSource,
    trial_index: int = 0,
) -> TrialRecord:
    a, b, theta_b = adaptive_epr_trials(j, theta_a, adapt, det_a, det_b, 1, rng)
    return TrialRecord(
        trial_index=trial_index,
        a=None if a[0] == NO_CLICK else int(a[0]),
        b=None if b[0] == NO_CLICK else int(b[0]),
        theta_a=float(theta_a),
        theta_b=float(theta_b[0]),
    )


def correlation_estimate(delta_theta: float, count: int, rng: RandomSource) -> float:
    """Empirical spin-1/2 pair correlation at relative analyzer angle
    `delta_theta` with ideal detectors.

    Outcome 0 maps to +1 and outcome 1 to -1 on each side; the estimate
    converges to -cos(delta_theta).
    """
    if count < 1:
        raise ValueError("correlation_estimate: need at least one trial")
    a, b = epr_trials(0.5, 0.0, delta_theta, IDEAL_DETECTOR, IDEAL_DETECTOR, count, rng)
    return float(np.mean((1 - 2 * a) * (1 - 2 * b)))


@dataclass(frozen=True)
class ChshTerm:
    theta_a: float
    theta_b: float
    sign: int
    correlation: float
    std_error: float
    n: int


@dataclass(frozen=True)
class ChshResult:
    """Four correlation estimates combined into the CHSH quantity
    S = E(a,b) - E(a,b') + E(a',b) + E(a',b')."""

    terms: tuple[ChshTerm, ...]
    s_value: float
    std_error: float

    @property
    def abs_s(self) -> float:
        return abs(self.s_value)


def chsh_certify(
    angles_a: tuple[float, float],
    angles_b: tuple[float, float],
    n_per_setting: int,
    rng: RandomSource,
) -> ChshResult:
    """Estimate the CHSH combination from four independent setting runs.

    Setting i uses rng.substream(i). Standard errors use the exact +/-1
    product variance 1 - E^2.
    """
    if n_per_setting < 1:
        raise ValueError("chsh_certify: need at least one trial per setting")
    alpha, alpha_p = angles_a
    beta, beta_p = angles_b
    layout = (
        (alpha, beta, +1),
        (alpha, beta_p, -1),
        (alpha_p, beta, +1),
        (alpha_p, beta_p, +1),
    )
    terms = []
    for i, (ta, tb, sign) in enumerate(layout):
        sub = rng.substream(i)
        a, b = epr_trials(0.5, ta, tb, IDEAL_DETECTOR, IDEAL_DETECTOR, n_per_setting, sub)
        e = float(np.mean((1 - 2 * a) * (1 - 2 * b)))
        se = float(np.sqrt(max(0.0, 1.0 - e * e) / n_per_setting))
        terms.append(ChshTerm(float(ta), float(tb), sign, e, se, n_per_setting))
    s = sum(t.sign * t.correlation for t in terms)
    se_s = float(np.sqrt(sum(t.std_error**2 for t in terms)))
    return ChshResult(tuple(terms), float(s), se_s)


def chsh_estimate(
    angles_a: tuple[float, float],
    angles_b: tuple[float, float],
    n_per_setting: int,
    rng: RandomSource,
) -> float:
    return chsh_certify(angles_a, angles_b, n_per_setting, rng).s_value


def run_blocked(master: RandomSource, total: int, block_size: int, workers: int, block_fn):
    """Run `block_fn(rng, count)` over fixed-size blocks of `total` trials.

    Block i covers trials [i * block_size, ...) and always uses
    master.substream(i), so the ordered list of results is independent of
    `workers` and bit-identical to sequential execution.
    """
    if total < 0:
        raise ValueError("run_blocked: total must be nonnegative")
    if block_size < 1:
        raise ValueError("run_blocked: block size must be >= 1")
    if workers < 1:
        raise ValueError("run_blocked: worker count must be >= 1")
    n_blocks = (total + block_size - 1) // block_size
    counts = [min(block_size, total - i * block_size) for i in range(n_blocks)]

    def job(i: int):
        return block_fn(master.substream(i), counts[i])

    if workers == 1 or n_blocks <= 1:
        return [job(i) for i in range(n_blocks)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(job, range(n_blocks)))
