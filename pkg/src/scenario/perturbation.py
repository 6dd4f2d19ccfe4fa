"""
scenario/perturbation.py

Synthetic distribution shift: test distributions at a requested phase KS
distance from the training distribution, integer apportionment of a pmf to
a vehicle total, and the (KS level x volume) experiment grid.

Two constructions are offered:

  concentrated  the lightest phase gains D and the heaviest phase loses D.
                Exactly two deviations, so the cumulative difference is 2D.
  spread        one phase gains exactly D; three more phases gain less than D
                and the four heaviest remaining phases give mass back. Many
                small deviations make the cumulative difference several times
                D at small D and saturate as donors run dry.
"""

import logging
from enum import Enum
from typing import List, Sequence

import numpy as np

from errors import Infeasible
from scenario.generator import generate_scenario
from scenario.models import DEFAULT_DURATION_S, Scenario
from shiftcore import NUM_PHASES, PhaseCounts, TrafficDistribution

logger = logging.getLogger(__name__)


class PerturbationMode(str, Enum):
    CONCENTRATED = "concentrated"
    SPREAD = "spread"


SPREAD_DONORS: int = 4
"""Number of heaviest non-receiving phases that give mass in spread mode."""

SPREAD_DONOR_SHARE = (0.5, 1.0)
"""Range of each donor's removal as a fraction of D."""

SPREAD_RECEIVER_SHARE = (0.3, 0.9)
"""Range of each secondary receiver's gain as a fraction of D; stays below D."""


# ---------------------------------------------------------------------------
# KS-targeted perturbation
# ---------------------------------------------------------------------------

def _concentrated(p: np.ndarray, target_d: float) -> np.ndarray:
    receiver = int(np.argmin(p))
    masked = p.copy()
    masked[receiver] = -np.inf
    donor = int(np.argmax(masked))

    if p[donor] < target_d:
        raise Infeasible(
            f"No phase has mass >= {target_d} to donate (largest other phase holds {p[donor]:.6f})"
        )
    if p[receiver] + target_d > 1.0:
        raise Infeasible(f"Receiving phase {receiver + 1} would exceed 1")

    q = p.copy()
    q[receiver] += target_d
    q[donor] -= target_d
    return q


def _spread(p: np.ndarray, target_d: float, rng: np.random.Generator) -> np.ndarray:
    # Draw the whole pattern before looking at D so one seed yields the same
    # pattern at every level of a sweep.
    order = rng.permutation(NUM_PHASES)
    donor_share = rng.uniform(*SPREAD_DONOR_SHARE, size=NUM_PHASES)
    receiver_share = rng.uniform(*SPREAD_RECEIVER_SHARE, size=NUM_PHASES)

    for receiver in order:
        if p[receiver] + target_d > 1.0:
            continue
        others = [int(i) for i in np.argsort(-p, kind="stable") if i != receiver]
        if sum(min(target_d, p[j]) for j in others) < target_d:
            continue

        donors = others[:SPREAD_DONORS]
        receivers = others[SPREAD_DONORS:]
        donor_cap = {j: min(donor_share[j] * target_d, p[j]) for j in donors}
        receiver_cap = {j: min(receiver_share[j] * target_d, 1.0 - p[j]) for j in receivers}

        if sum(donor_cap.values()) < target_d:
            logger.warning(
                f"Spread donors cannot cover D={target_d}; every other phase donates instead"
            )
            donor_cap = {j: min(target_d, p[j]) for j in others}
            receiver_cap = {}

        give = sum(donor_cap.values())
        take = sum(receiver_cap.values())
        if give >= target_d + take:
            alpha, beta = (target_d + take) / give, 1.0
        else:
            alpha, beta = 1.0, (give - target_d) / take
        alpha, beta = min(alpha, 1.0), min(beta, 1.0)

        q = p.copy()
        q[receiver] += target_d
        for j, cap in receiver_cap.items():
            q[j] += beta * cap
        for j, cap in donor_cap.items():
            q[j] = max(q[j] - alpha * cap, 0.0)
        return q

    raise Infeasible(f"No receiving phase can absorb D={target_d} with enough donor mass")


def perturb_to_ks(
    p_train: TrafficDistribution,
    target_d: float,
    mode: PerturbationMode = PerturbationMode.SPREAD,
    seed: int = 0,
) -> TrafficDistribution:
    """
    Return a distribution q with phase_ks_distance(p_train, q) == target_d.

    Raises
    ------
    Infeasible
        If the mass needed to realize target_d does not exist in p_train.
    """
    if not 0.0 <= target_d <= 1.0:
        raise ValueError(f"target_d must lie in [0, 1], got {target_d}")
    if target_d == 0.0:
        return p_train

    p = p_train.as_array()
    if PerturbationMode(mode) is PerturbationMode.CONCENTRATED:
        q = _concentrated(p, target_d)
    else:
        q = _spread(p, target_d, np.random.default_rng(seed))
    return TrafficDistribution.from_array(q)


# ---------------------------------------------------------------------------
# Integer apportionment
# ---------------------------------------------------------------------------

def scale_volume(p: TrafficDistribution, total: int) -> PhaseCounts:
    """
    Apportion `total` vehicles over the phases by the largest-remainder method.

    Every phase first receives floor(p(i) * total); the leftover vehicles go
    one each to the largest fractional remainders, ties to the lowest phase.
    The result always sums to `total`.
    """
    if total < 1:
        raise ValueError(f"total must be >= 1, got {total}")
    quotas = p.as_array() * total
    base = np.floor(quotas).astype(np.int64)
    leftover = int(total - base.sum())
    remainders = quotas - base
    for i in np.argsort(-remainders, kind="stable")[:leftover]:
        base[i] += 1
    return PhaseCounts(tuple(int(c) for c in base))


# ---------------------------------------------------------------------------
# Experiment grid
# ---------------------------------------------------------------------------

def cell_seed(seed: int, level_index: int, volume: int) -> int:
    """Deterministic per-cell seed derived from the grid seed."""
    return int(np.random.SeedSequence([seed, level_index, volume]).generate_state(1)[0])


def cell_label(target_d: float, volume: int) -> str:
    return f"ks={target_d:.3f}_vol={volume}"


def build_experiment_grid(
    p_train: TrafficDistribution,
    ks_levels: Sequence[float],
    volumes: Sequence[int],
    seed: int,
    mode: PerturbationMode = PerturbationMode.SPREAD,
    duration_s: float = DEFAULT_DURATION_S,
) -> List[Scenario]:
    """
    One scenario per (KS level, volume) pair, levels outer, volumes inner.

    All cells at a level share one perturbed distribution, so a level's
    curve differs only in volume.
    """
    if not ks_levels or not volumes:
        raise ValueError("ks_levels and volumes must both be non-empty")

    scenarios: List[Scenario] = []
    for level_index, target_d in enumerate(ks_levels):
        q = perturb_to_ks(p_train, target_d, mode=mode, seed=seed)
        for volume in volumes:
            scenarios.append(
                generate_scenario(
                    scale_volume(q, volume),
                    duration_s=duration_s,
                    seed=cell_seed(seed, level_index, volume),
                    label=cell_label(target_d, volume),
                    target_ks=float(target_d),
                )
            )

    logger.info(
        f"Built experiment grid: {len(ks_levels)} KS levels x {len(volumes)} volumes "
        f"= {len(scenarios)} scenarios (mode={PerturbationMode(mode).value})"
    )
    return scenarios
