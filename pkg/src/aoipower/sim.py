"""
Slot-level Monte Carlo simulation of the NACK-driven update process.

Every slot carries a fresh update. A slot in NACK state ``m`` transmits with
``P_m`` (``P_{M-1}`` beyond the tracked states) and succeeds iff the drawn
gain reaches the decoding threshold. A success ends a cycle of length
``Y = m + 1``; the age over a cycle is a trapezoid of area ``Y (2 + Y) / 2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .channel import ChannelModel, threshold_gain
from .core import ErrorProfile, PowerPolicy, cycle_length_distribution
from .errors import InsufficientCyclesError, NoCompleteCycleError

BATCHES = 20
CHUNK = 1 << 16


@dataclass(frozen=True, eq=False)
class SimConfig:
    policy: PowerPolicy
    model: ChannelModel
    rate: float = 1.0
    slots: int = 10**6
    seed: int = 0
    max_cycles: int | None = None
    """Stop early once this many cycles have completed."""

    def __post_init__(self):
        if self.slots < 1:
            raise ValueError("need at least one slot")
        if self.max_cycles is not None and self.max_cycles < 1:
            raise ValueError("max_cycles must be positive")


@dataclass(frozen=True, eq=False)
class SimReport:
    aoi: float
    cycles: int
    histogram: np.ndarray
    """``histogram[y]`` counts completed cycles of length ``y`` (index 0 unused)."""
    average_power: float
    ci_halfwidth: float
    std_error: float
    occupancy: np.ndarray
    """Slots spent in states ``0 .. M-1``; the last entry pools states ``>= M``."""
    slots: int
    seed: int

    @property
    def occupancy_freq(self) -> np.ndarray:
        return self.occupancy / self.slots


def _cycle_lengths(cfg: SimConfig):
    """Run the chain; return completed cycle lengths, the trailing partial
    cycle length and the number of slots consumed."""
    thr = threshold_gain(cfg.policy.powers, cfg.rate).tolist()
    silent = (cfg.policy.powers == 0).tolist()
    # None marks a silent state, which fails whatever the gain
    thr = [None if s else t for t, s in zip(thr, silent)]
    last = len(thr) - 1
    tail = thr[last]

    rng = np.random.default_rng(cfg.seed)
    lengths = []
    m = 0
    used = 0
    target = cfg.max_cycles
    while used < cfg.slots:
        n = min(CHUNK, cfg.slots - used)
        gains = cfg.model.sample(rng, n).tolist()
        for k, z in enumerate(gains):
            t = thr[m] if m < last else tail
            if t is not None and z >= t:
                lengths.append(m + 1)
                m = 0
                if target is not None and len(lengths) >= target:
                    return np.array(lengths, dtype=np.int64), 0, used + k + 1
            else:
                m += 1
        used += n
    return np.array(lengths, dtype=np.int64), m, used


def _batch_ratio(lengths):
    y = lengths.astype(float)
    batches = np.array_split(np.arange(y.size), BATCHES)
    ratios = [np.sum(y[b] * (2 + y[b]) / 2) / np.sum(y[b]) for b in batches]
    se = np.std(ratios, ddof=1) / np.sqrt(BATCHES)
    return se, stats.t.ppf(0.975, BATCHES - 1) * se


def simulate(cfg: SimConfig) -> SimReport:
    """Estimate average AoI, power and state occupancy from one trajectory.

    Only completed cycles enter the age estimate; the confidence half-width
    comes from batch means over ``BATCHES`` contiguous groups of cycles.
    """
    lengths, partial, slots = _cycle_lengths(cfg)
    if lengths.size == 0:
        raise NoCompleteCycleError(f"no successful update in {slots} slots")
    y = lengths.astype(float)
    aoi = float(np.sum(y * (2.0 + y) / 2.0) / np.sum(y))
    if lengths.size >= 2 * BATCHES:
        se, half = _batch_ratio(lengths)
    else:
        se = half = float("nan")

    M = cfg.policy.states
    hist = np.bincount(lengths)
    # a cycle of length y visits states 0 .. y-1 once each
    visits = np.zeros(max(hist.size, partial + 1) + 1, dtype=np.int64)
    np.add.at(visits, lengths, 1)
    visits[partial] += 1 if partial else 0
    at_least = np.cumsum(visits[::-1])[::-1]  # at_least[s] = #cycles with length >= s
    occ_all = at_least[1:]  # occupancy of state s = #(partial) cycles longer than s
    occupancy = np.zeros(M + 1, dtype=np.int64)
    k = min(M, occ_all.size)
    occupancy[:k] = occ_all[:k]
    occupancy[M] = occ_all[M:].sum() if occ_all.size > M else 0

    powers = cfg.policy.powers
    energy = float(np.dot(occupancy[:M], powers) + occupancy[M] * powers[-1])

    return SimReport(
        aoi=aoi,
        cycles=int(lengths.size),
        histogram=hist,
        average_power=energy / slots,
        ci_halfwidth=float(half),
        std_error=float(se),
        occupancy=occupancy,
        slots=slots,
        seed=cfg.seed,
    )


@dataclass(frozen=True)
class CycleFit:
    tv: float
    cycles: int
    threshold: float

    @property
    def passed(self) -> bool:
        return self.tv < self.threshold


def empirical_cycle_check(report: SimReport, profile: ErrorProfile,
                          threshold: float = 0.01, min_cycles: int = 1000) -> CycleFit:
    """Total-variation distance between simulated and analytic cycle laws."""
    if report.cycles < min_cycles:
        raise InsufficientCyclesError(f"{report.cycles} cycles < {min_cycles}")
    lengths = np.arange(1, report.histogram.size)
    emp = report.histogram[1:] / report.cycles
    ana = cycle_length_distribution(profile, lengths)
    # analytic mass beyond the longest observed cycle counts fully
    beyond = max(0.0, 1.0 - float(np.sum(ana)))
    tv = 0.5 * (float(np.sum(np.abs(emp - ana))) + beyond)
    return CycleFit(tv, report.cycles, threshold)
