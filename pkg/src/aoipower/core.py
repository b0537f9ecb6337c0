"""
Analytical average-AoI engine for NACK-count power control.

The transmitter state is the number ``m`` of consecutive NACKs. State ``m``
moves to ``m + 1`` with probability ``eps[m]`` and back to 0 otherwise. Only
``M`` states are tracked explicitly; every state ``m >= M`` reuses the last
power and failure probability, so all infinite sums close with a geometric
tail of ratio ``eps[M-1]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .channel import ChannelModel, failure_probability
from .errors import DegenerateProfileError, DivergentSeriesError

XI_FLUSH = 1e-15


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PowerPolicy:
    """Per-state transmit powers ``P_0 .. P_{M-1}`` with a constant tail.

    ``tau`` and ``p_on`` are set only for on-off policies (silent for the
    first ``tau`` states, then constant ``p_on``).
    """

    powers: np.ndarray
    tau: int | None = None
    p_on: float | None = None

    def __post_init__(self):
        powers = _frozen(self.powers)
        if powers.size == 0:
            raise ValueError("policy needs at least one state")
        if not np.all(np.isfinite(powers)) or np.any(powers < 0):
            raise ValueError("powers must be finite and non-negative")
        object.__setattr__(self, "powers", powers)
        if self.tau is not None:
            if self.p_on is None or not 0 <= self.tau < powers.size:
                raise ValueError("on-off descriptor needs 0 <= tau < M and an on-level")
            expected = np.r_[np.zeros(self.tau), np.full(powers.size - self.tau, self.p_on)]
            if not np.array_equal(powers, expected):
                raise ValueError("on-off descriptor inconsistent with power vector")

    @classmethod
    def constant(cls, power: float, states: int) -> PowerPolicy:
        return cls(np.full(states, float(power)))

    @classmethod
    def onoff(cls, tau: int, p_on: float, states: int) -> PowerPolicy:
        if not 0 <= tau < states:
            raise ValueError(f"tau must lie in [0, {states}), got {tau}")
        powers = np.r_[np.zeros(tau), np.full(states - tau, float(p_on))]
        return cls(powers, tau=tau, p_on=float(p_on))

    @property
    def states(self) -> int:
        return self.powers.size

    def power(self, m: int) -> float:
        return float(self.powers[min(m, self.states - 1)])


@dataclass(frozen=True, eq=False)
class ErrorProfile:
    """Per-state failure probabilities with the constant-tail rule."""

    eps: np.ndarray

    def __post_init__(self):
        eps = _frozen(self.eps)
        if eps.size == 0:
            raise ValueError("profile needs at least one state")
        if np.any(~(eps >= 0)) or np.any(eps > 1):
            raise ValueError("failure probabilities must lie in [0, 1]")
        object.__setattr__(self, "eps", eps)

    @classmethod
    def constant(cls, p: float, states: int) -> ErrorProfile:
        return cls(np.full(states, float(p)))

    @property
    def states(self) -> int:
        return self.eps.size

    @property
    def tail_ratio(self) -> float:
        return float(self.eps[-1])

    @cached_property
    def xi(self) -> np.ndarray:
        """``xi[j] = prod_{m<j} eps[m]`` for ``j = 0 .. M`` (length M + 1)."""
        xi = np.empty(self.states + 1)
        xi[0] = 1.0
        np.cumprod(self.eps, out=xi[1:])
        # the analytic tail makes flushing harmless; products are non-increasing
        xi[xi < XI_FLUSH] = 0.0
        xi.setflags(write=False)
        return xi

    @property
    def converges(self) -> bool:
        return self.tail_ratio < 1.0 or self.xi[-1] == 0.0

    def series(self) -> tuple[float, float]:
        """Return ``(sum_j xi_j, sum_j j * xi_j)`` over all ``j >= 0``."""
        return self._sums

    @cached_property
    def _sums(self) -> tuple[float, float]:
        if np.all(self.eps == 1.0):
            raise DegenerateProfileError("every state fails surely; no return to state 0")
        if not self.converges:
            raise DivergentSeriesError("tail failure probability is 1; xi-series diverges")
        M = self.states
        head = self.xi[:M]
        xi_m = float(self.xi[M])
        s0 = head.tolist()
        s1 = (np.arange(M) * head).tolist()
        if xi_m > 0.0:
            r = self.tail_ratio
            s0.append(xi_m / (1.0 - r))
            s1.append(xi_m * (M + r / (1.0 - r)) / (1.0 - r))
        return math.fsum(s0), math.fsum(s1)


@dataclass(frozen=True, eq=False)
class SteadyState:
    """Stationary distribution over NACK states.

    ``pi`` covers the tracked states ``0 .. M-1``; ``tail_mass`` is the total
    probability of all states ``m >= M``.
    """

    pi: np.ndarray
    tail_mass: float = 0.0

    @property
    def states(self) -> int:
        return self.pi.size

    def lumped(self) -> np.ndarray:
        """Distribution with the tail folded into the last tracked state."""
        out = np.array(self.pi)
        out[-1] += self.tail_mass
        return out


def error_profile_from_policy(policy: PowerPolicy, model: ChannelModel, rate: float) -> ErrorProfile:
    return ErrorProfile(failure_probability(model, policy.powers, rate))


def transition_matrix(profile: ErrorProfile) -> np.ndarray:
    """Row-stochastic matrix of the chain truncated to ``M`` states.

    The last tracked state stands for every ``m >= M - 1``, so its failure
    branch is a self-loop.
    """
    M = profile.states
    eps = profile.eps
    A = np.zeros((M, M))
    A[:, 0] = 1.0 - eps
    rows = np.arange(M)
    A[rows, np.minimum(rows + 1, M - 1)] += eps
    return A


def steady_state(profile: ErrorProfile) -> SteadyState:
    s0, _ = profile.series()
    M = profile.states
    pi = profile.xi[:M] / s0
    xi_m = float(profile.xi[M])
    tail = xi_m / (1.0 - profile.tail_ratio) / s0 if xi_m > 0.0 else 0.0
    pi.setflags(write=False)
    return SteadyState(pi, tail)


def average_power(policy: PowerPolicy, ss: SteadyState) -> float:
    """Long-run average transmit power ``sum_m P_m pi_m`` including the tail."""
    if policy.states != ss.states:
        raise ValueError(f"policy has {policy.states} states, steady state has {ss.states}")
    terms = (policy.powers * ss.pi).tolist()
    terms.append(float(policy.powers[-1]) * ss.tail_mass)
    return math.fsum(terms)


def average_aoi(profile: ErrorProfile) -> float:
    """Closed-form average age in slots: ``3/2 + sum j xi_j / sum xi_j``."""
    s0, s1 = profile.series()
    return 1.5 + s1 / s0


def average_aoi_constant_power(p: float) -> float:
    """Average age when every slot fails independently with probability ``p``.

    Geometric cycles give ``sum xi = 1/(1-p)`` and ``sum j xi = p/(1-p)**2``.
    """
    if not 0.0 <= p < 1.0:
        raise DivergentSeriesError(f"need 0 <= p < 1, got {p}")
    return (3.0 - p) / (2.0 * (1.0 - p))


def cycle_length_distribution(profile: ErrorProfile, m):
    """``Pr{Y = m}``: ``m - 1`` failures followed by a success.

    Accepts a scalar or an array of cycle lengths ``m >= 1``.
    """
    mm = np.asarray(m)
    if np.any(mm < 1):
        raise ValueError("cycle length must be >= 1")
    j = mm.astype(np.int64) - 1
    M = profile.states
    r = profile.tail_ratio
    inside = j < M
    jj = np.minimum(j, M - 1)
    xi_head = profile.xi[jj]
    with np.errstate(under="ignore"):
        xi_tail = profile.xi[M] * np.power(r, np.maximum(j - M, 0))
    xi = np.where(inside, xi_head, xi_tail)
    eps = profile.eps[jj]
    prob = xi * (1.0 - eps)
    return prob if np.ndim(m) else float(prob)


@dataclass(frozen=True, eq=False)
class PolicyEvaluation:
    policy: PowerPolicy
    profile: ErrorProfile
    steady: SteadyState
    aoi: float
    power: float = field(default=math.nan)


def evaluate_policy(policy: PowerPolicy, model: ChannelModel, rate: float) -> PolicyEvaluation:
    """Profile, stationary law, average age and average power of a policy."""
    profile = error_profile_from_policy(policy, model, rate)
    ss = steady_state(profile)
    return PolicyEvaluation(policy, profile, ss, average_aoi(profile), average_power(policy, ss))
