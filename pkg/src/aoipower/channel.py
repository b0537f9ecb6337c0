"""
Block-fading channel models and the power <-> failure-probability mapping.

A packet of rate R sent with power P over a slot whose channel power gain is
z is decoded iff ``R <= log2(1 + P z)``, i.e. iff ``z >= (2**R - 1) / P``.
Gains are i.i.d. across slots, so the failure probability of a slot depends
only on the power used in it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidRateError, UnreachableEpsilonError

ArrayLike = float | np.ndarray


@dataclass(frozen=True)
class ChannelModel:
    """Distribution of the per-slot channel power gain.

    Parameters
    ----------
    name : str
        Short identifier, used in manifests.
    cdf : callable
        Vectorised ``gain -> Pr{z < gain}``.
    inverse_cdf : callable
        Vectorised quantile function on ``[0, 1)``.
    mean : float
        Mean gain, for sanity checks on sampled streams.
    """

    name: str
    cdf: Callable[[np.ndarray], np.ndarray]
    inverse_cdf: Callable[[np.ndarray], np.ndarray]
    mean: float

    def sample(self, rng: np.random.Generator, size=None):
        # inverse-CDF transform so one uniform stream drives every distribution
        return self.inverse_cdf(rng.random(size))


def _exp_cdf(x):
    x = np.asarray(x, dtype=float)
    return np.where(x > 0.0, -np.expm1(-np.maximum(x, 0.0)), 0.0)


def _exp_icdf(u):
    return -np.log1p(-np.asarray(u, dtype=float))


def rayleigh(mean: float = 1.0) -> ChannelModel:
    """Rayleigh fading: the power gain is exponential with the given mean."""
    if mean <= 0:
        raise ValueError(f"mean gain must be positive, got {mean}")
    if mean == 1.0:
        return ChannelModel("rayleigh", _exp_cdf, _exp_icdf, 1.0)
    return ChannelModel(
        f"rayleigh(mean={mean!r})",
        lambda x: _exp_cdf(np.asarray(x, dtype=float) / mean),
        lambda u: mean * _exp_icdf(u),
        mean,
    )


RAYLEIGH = rayleigh()

CHANNELS = {"rayleigh": RAYLEIGH}


def get_channel(name: str) -> ChannelModel:
    try:
        return CHANNELS[name]
    except KeyError:
        raise ValueError(f"unknown channel {name!r}; choose from {sorted(CHANNELS)}") from None


@dataclass(frozen=True)
class LinkConfig:
    """Link-level constants shared by the analysis, optimiser and simulator.

    ``rate`` is in bits per slot per unit bandwidth, ``pbar`` is the average
    power budget in watts and ``states`` the number of tracked NACK states.
    The slot duration is normalised to one.
    """

    rate: float = 1.0
    pbar: float = 1.0
    states: int = 300
    slot: float = 1.0

    def __post_init__(self):
        check_rate(self.rate)
        if not self.pbar > 0:
            raise ValueError(f"power budget must be positive, got {self.pbar}")
        if self.states < 1:
            raise ValueError(f"need at least one state, got {self.states}")
        if self.slot != 1.0:
            raise ValueError("slot duration is normalised to 1")


def check_rate(rate: float) -> None:
    if not rate > 0:
        raise InvalidRateError(f"rate must be positive, got {rate}")


def threshold_gain(power: ArrayLike, rate: float) -> ArrayLike:
    """Smallest gain that decodes a rate-R packet at this power (inf at P=0)."""
    check_rate(rate)
    p = np.asarray(power, dtype=float)
    with np.errstate(divide="ignore"):
        thr = np.where(p > 0, np.expm1(rate * np.log(2.0)) / np.where(p > 0, p, 1.0), np.inf)
    return thr if np.ndim(power) else float(thr)


def failure_probability(model: ChannelModel, power: ArrayLike, rate: float) -> ArrayLike:
    """Probability that a slot sent with ``power`` fails to decode.

    Zero power is mapped to exactly 1 rather than through the CDF limit, so
    silent states of on-off policies are exact.
    """
    check_rate(rate)
    p = np.asarray(power, dtype=float)
    if np.any(p < 0):
        raise ValueError("power must be non-negative")
    thr = threshold_gain(np.where(p > 0, p, 1.0), rate)
    eps = np.where(p > 0, np.clip(model.cdf(thr), 0.0, 1.0), 1.0)
    return eps if np.ndim(power) else float(eps)


def power_for_failure_probability(model: ChannelModel, eps: ArrayLike, rate: float) -> ArrayLike:
    """Inverse of :func:`failure_probability`; ``eps == 1`` maps to zero power."""
    check_rate(rate)
    e = np.asarray(eps, dtype=float)
    if np.any(~(e > 0)) or np.any(e > 1):
        raise UnreachableEpsilonError(
            "failure probability must lie in (0, 1]; zero failure needs unbounded power"
        )
    ones = e == 1.0
    gain = model.inverse_cdf(np.where(ones, 0.5, e))
    with np.errstate(divide="ignore"):
        power = np.where(ones, 0.0, np.expm1(rate * np.log(2.0)) / gain)
    return power if np.ndim(eps) else float(power)


def sample_gain(model: ChannelModel, rng: np.random.Generator, size=None):
    """Draw i.i.d. channel gains from a seeded generator."""
    return model.sample(rng, size)
