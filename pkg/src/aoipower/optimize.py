"""
Power-policy search under an average power budget.

Two searches are provided: an exhaustive scan over on-off policies (each
solved for its on-level by bisection), and simulated annealing over the
failure-probability vector with Cauchy-distributed moves and ``T0 / n``
cooling.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelModel, power_for_failure_probability
from .core import (
    ErrorProfile,
    PolicyEvaluation,
    PowerPolicy,
    evaluate_policy,
    steady_state,
)
from .errors import AoIError, InfeasibleTauError, InvalidInitError

log = logging.getLogger(__name__)

FEASIBILITY_SLACK = 1e-9
MAX_DOUBLINGS = 60


@dataclass(frozen=True)
class AnnealingConfig:
    """Annealer settings.

    ``t0``/``t_min`` bound the ``T_n = t0 / n`` schedule, ``candidates`` is
    the number of proposals per stage and ``eps_lo``/``eps_hi`` clip every
    proposed failure probability.
    """

    t0: float = 1.0
    t_min: float = 1e-3
    candidates: int = 100
    eps_lo: float = 1e-9
    eps_hi: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not (self.t_min > 0 and self.t0 >= self.t_min):
            raise ValueError(f"need t0 >= t_min > 0, got t0={self.t0}, t_min={self.t_min}")
        if self.candidates < 1:
            raise ValueError("need at least one candidate per stage")
        if not 0 < self.eps_lo < self.eps_hi <= 1:
            raise ValueError("need 0 < eps_lo < eps_hi <= 1")

    def temperatures(self) -> list[float]:
        """Stage temperatures ``t0/n`` for every stage that runs."""
        out = []
        n = 1
        while self.t0 / n > self.t_min:
            out.append(self.t0 / n)
            n += 1
        return out


@dataclass(frozen=True)
class StageStats:
    stage: int
    temperature: float
    feasible: int
    accepted: int
    current_aoi: float
    best_aoi: float


@dataclass(frozen=True, eq=False)
class OptimizationResult:
    policy: PowerPolicy
    profile: ErrorProfile
    aoi: float
    average_power: float
    pbar: float
    feasible: int
    trace: list = field(default_factory=list)
    seed: int | None = None
    method: str = ""

    @property
    def steady(self):
        return steady_state(self.profile)


def _budget_gap(tau, p_on, states, model, rate, pbar):
    ev = evaluate_policy(PowerPolicy.onoff(tau, p_on, states), model, rate)
    return ev.power - pbar


def onoff_power_for_tau(tau: int, pbar: float, model: ChannelModel, rate: float,
                        states: int) -> PowerPolicy:
    """On-off policy silent for ``tau`` states whose average power meets ``pbar``.

    The on-level is bracketed by doubling from ``pbar`` and refined by
    bisection. The lower end of the final bracket is returned so the policy
    never exceeds the budget.
    """
    if not 0 <= tau < states:
        raise ValueError(f"tau must lie in [0, {states}), got {tau}")
    if not pbar > 0:
        raise ValueError("power budget must be positive")
    if tau == 0:
        return PowerPolicy.onoff(0, pbar, states)

    lo, hi = pbar, 2.0 * pbar
    for _ in range(MAX_DOUBLINGS):
        if _budget_gap(tau, hi, states, model, rate, pbar) > 0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise InfeasibleTauError(f"no on-level bracket for tau={tau} within {MAX_DOUBLINGS} doublings")

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _budget_gap(tau, mid, states, model, rate, pbar) > 0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-13 * hi:
            break
    return PowerPolicy.onoff(tau, lo, states)


def _result(ev: PolicyEvaluation, pbar, feasible, trace=None, seed=None, method=""):
    return OptimizationResult(ev.policy, ev.profile, ev.aoi, ev.power, pbar, feasible,
                              trace or [], seed, method)


def optimize_onoff(pbar: float, model: ChannelModel, rate: float, states: int,
                   tau_max: int | None = None) -> OptimizationResult:
    """Best on-off policy over ``tau = 0 .. tau_max`` (default ``states - 1``).

    The trace lists ``(tau, p_on, aoi)`` for every feasible ``tau``.
    """
    tau_max = states - 1 if tau_max is None else tau_max
    if not 0 <= tau_max < states:
        raise ValueError(f"tau_max must lie in [0, {states}), got {tau_max}")
    best = None
    trace = []
    for tau in range(tau_max + 1):
        try:
            ev = evaluate_policy(onoff_power_for_tau(tau, pbar, model, rate, states), model, rate)
        except AoIError as exc:
            log.debug("skipping tau=%d: %s", tau, exc)
            continue
        trace.append((tau, ev.policy.p_on, ev.aoi))
        if best is None or ev.aoi < best.aoi:
            best = ev
    if best is None:
        raise InfeasibleTauError("no feasible on-off policy")
    return _result(best, pbar, len(trace), trace, method="onoff")


def metropolis_accept(delta: float, temperature: float, s: float) -> bool:
    """Accept a move that changes the cost by ``delta`` given uniform draw ``s``."""
    if delta <= 0:
        return True
    return s < math.exp(-delta / temperature)


def _candidate(eps, model, rate, pbar):
    """Evaluate a proposed failure vector; ``None`` when infeasible."""
    powers = power_for_failure_probability(model, eps, rate)
    if not np.all(np.isfinite(powers)):
        return None
    policy = PowerPolicy(powers)
    try:
        ev = evaluate_policy(policy, model, rate)
    except AoIError:
        return None
    if not ev.power < pbar + FEASIBILITY_SLACK:
        return None
    return ev


def anneal(init: PowerPolicy, cfg: AnnealingConfig, pbar: float, model: ChannelModel,
           rate: float) -> OptimizationResult:
    """Simulated annealing over per-state failure probabilities.

    Each stage ``n`` runs at temperature ``T_n = t0 / n`` and draws
    ``cfg.candidates`` proposals ``eps' = clip(eps + T_n * x)`` with one
    standard Cauchy ``x`` per state. A proposal is mapped back to powers and
    kept only if its own stationary average power is under budget. Feasible
    proposals replace the current point with the Metropolis probability
    ``min(1, exp(-(aoi' - aoi) / T_n))``; the best feasible point ever seen
    is returned.
    """
    current = evaluate_policy(init, model, rate)
    if current.power > pbar + FEASIBILITY_SLACK:
        raise InvalidInitError(
            f"initial policy uses average power {current.power!r} > budget {pbar!r}"
        )
    rng = np.random.default_rng(cfg.seed)
    best = current
    eps = np.clip(np.array(current.profile.eps), cfg.eps_lo, cfg.eps_hi)
    cur_aoi = current.aoi
    M = init.states
    trace = []
    feasible_total = 0

    for n, temp in enumerate(cfg.temperatures(), start=1):
        steps = rng.standard_cauchy((cfg.candidates, M))
        draws = rng.random(cfg.candidates)
        feasible = accepted = 0
        for i in range(cfg.candidates):
            proposal = np.clip(eps + temp * steps[i], cfg.eps_lo, cfg.eps_hi)
            ev = _candidate(proposal, model, rate, pbar)
            if ev is None:
                continue
            feasible += 1
            if metropolis_accept(ev.aoi - cur_aoi, temp, draws[i]):
                accepted += 1
                cur_aoi = ev.aoi
                eps = proposal
                if ev.aoi <= best.aoi:
                    best = ev
        feasible_total += feasible
        trace.append(StageStats(n, temp, feasible, accepted, cur_aoi, best.aoi))
        log.debug("stage %d T=%.4g feasible=%d accepted=%d best=%.6f",
                  n, temp, feasible, accepted, best.aoi)

    return _result(best, pbar, feasible_total, trace, cfg.seed, "anneal")


def optimize_policy(pbar: float, model: ChannelModel, rate: float, states: int,
             cfg: AnnealingConfig | None = None, tau_max: int | None = None):
    """On-off scan followed by annealing from its winner.

    Returns ``(onoff_result, anneal_result)``.
    """
    cfg = cfg or AnnealingConfig()
    onoff = optimize_onoff(pbar, model, rate, states, tau_max)
    return onoff, anneal(onoff.policy, cfg, pbar, model, rate)


def verify_result(result: OptimizationResult, model: ChannelModel, rate: float) -> PolicyEvaluation:
    """Recompute a result's age and power from its powers alone."""
    return evaluate_policy(result.policy, model, rate)
