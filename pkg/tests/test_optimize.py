import math

import numpy as np
import pytest
from scipy.optimize import brentq

from aoipower import optimize as opt
from aoipower.channel import RAYLEIGH
from aoipower.core import PowerPolicy, evaluate_policy
from aoipower.errors import InfeasibleTauError, InvalidInitError
from aoipower.optimize import (
    AnnealingConfig,
    anneal,
    metropolis_accept,
    onoff_power_for_tau,
    optimize_onoff,
)

LOW_POWER = 10 ** -0.6

QUICK = AnnealingConfig(t0=1.0, t_min=0.05, candidates=40, seed=3)


def test_tau_zero_is_constant_budget():
    pol = onoff_power_for_tau(0, 0.7, RAYLEIGH, 1.0, 20)
    np.testing.assert_array_equal(pol.powers, 0.7)
    assert pol.tau == 0


def test_tau_one_matches_closed_form_root():
    # transmitting fraction (1/(1-e)) / (1 + 1/(1-e)) with e = 1 - exp(-1/P)
    def gap(p):
        e = 1 - math.exp(-1 / p)
        return p * (1 / (1 - e)) / (1 + 1 / (1 - e)) - LOW_POWER

    expected = brentq(gap, LOW_POWER, 100 * LOW_POWER, xtol=1e-15)
    pol = onoff_power_for_tau(1, LOW_POWER, RAYLEIGH, 1.0, 300)
    assert pol.p_on == pytest.approx(expected, rel=1e-9)


@pytest.mark.parametrize("tau", [0, 1, 3, 8, 20, 120])
def test_onoff_meets_budget(tau):
    pol = onoff_power_for_tau(tau, LOW_POWER, RAYLEIGH, 1.0, 300)
    ev = evaluate_policy(pol, RAYLEIGH, 1.0)
    assert abs(ev.power - LOW_POWER) <= 1e-6 * LOW_POWER
    assert ev.power <= LOW_POWER + 1e-12
    assert np.all(pol.powers[:tau] == 0)


def test_onoff_bracket_failure(monkeypatch):
    monkeypatch.setattr(opt, "MAX_DOUBLINGS", 1)
    with pytest.raises(InfeasibleTauError):
        onoff_power_for_tau(50, LOW_POWER, RAYLEIGH, 1.0, 300)


def test_onoff_rejects_bad_tau():
    with pytest.raises(ValueError):
        onoff_power_for_tau(5, 1.0, RAYLEIGH, 1.0, 5)
    with pytest.raises(ValueError):
        optimize_onoff(1.0, RAYLEIGH, 1.0, 5, tau_max=5)


def test_optimize_onoff_high_power_prefers_always_on():
    res = optimize_onoff(10.0, RAYLEIGH, 1.0, 300, tau_max=20)
    p = 1 - math.exp(-0.1)
    assert p == pytest.approx(0.0952, abs=1e-4)
    assert res.policy.tau == 0
    assert res.aoi == pytest.approx((3 - p) / (2 * (1 - p)), rel=1e-12)
    assert res.aoi == pytest.approx(1.6052, abs=1e-4)


def test_optimize_onoff_low_power_beats_constant():
    const = evaluate_policy(PowerPolicy.constant(LOW_POWER, 300), RAYLEIGH, 1.0).aoi
    res = optimize_onoff(LOW_POWER, RAYLEIGH, 1.0, 300, tau_max=30)
    assert res.aoi <= const
    assert res.aoi < 27.77
    assert res.policy.tau == 8
    assert res.average_power <= LOW_POWER + 1e-9
    taus = [t for t, _, _ in res.trace]
    assert taus == list(range(31))


def test_optimize_onoff_is_deterministic():
    a = optimize_onoff(0.5, RAYLEIGH, 1.0, 40)
    b = optimize_onoff(0.5, RAYLEIGH, 1.0, 40)
    assert a.aoi == b.aoi
    np.testing.assert_array_equal(a.policy.powers, b.policy.powers)


# -- annealing --------------------------------------------------------------

def test_schedule_length():
    assert len(AnnealingConfig().temperatures()) == 999
    assert AnnealingConfig(t0=1.0, t_min=0.4).temperatures() == [1.0, 0.5]
    assert AnnealingConfig(t0=0.2, t_min=0.2).temperatures() == []


def test_config_validation():
    with pytest.raises(ValueError):
        AnnealingConfig(t0=0.1, t_min=0.2)
    with pytest.raises(ValueError):
        AnnealingConfig(candidates=0)
    with pytest.raises(ValueError):
        AnnealingConfig(eps_lo=0.0)
    with pytest.raises(ValueError):
        AnnealingConfig(eps_lo=0.5, eps_hi=0.4)


def test_zero_stages_returns_init():
    init = onoff_power_for_tau(3, 0.5, RAYLEIGH, 1.0, 30)
    res = anneal(init, AnnealingConfig(t0=0.01, t_min=0.01), 0.5, RAYLEIGH, 1.0)
    assert res.policy is init
    assert res.aoi == evaluate_policy(init, RAYLEIGH, 1.0).aoi
    assert res.trace == [] and res.feasible == 0


def test_invalid_init():
    with pytest.raises(InvalidInitError):
        anneal(PowerPolicy.constant(1.0, 10), QUICK, 0.5, RAYLEIGH, 1.0)


@pytest.fixture(scope="module")
def quick_run():
    init = optimize_onoff(0.5, RAYLEIGH, 1.0, 30).policy
    return init, anneal(init, QUICK, 0.5, RAYLEIGH, 1.0)


def test_anneal_invariants(quick_run):
    init, res = quick_run
    init_aoi = evaluate_policy(init, RAYLEIGH, 1.0).aoi
    assert 1.5 <= res.aoi <= init_aoi
    assert res.average_power <= 0.5 + 1e-9
    # recomputed from the powers alone
    ev = evaluate_policy(res.policy, RAYLEIGH, 1.0)
    assert ev.power <= 0.5 + 1e-9
    assert ev.aoi == pytest.approx(res.aoi, abs=1e-12)
    assert res.feasible == sum(s.feasible for s in res.trace)
    assert len(res.trace) == len(QUICK.temperatures())


def test_best_is_non_increasing(quick_run):
    _, res = quick_run
    best = [s.best_aoi for s in res.trace]
    assert all(b <= a for a, b in zip(best, best[1:]))
    assert all(s.accepted <= s.feasible <= QUICK.candidates for s in res.trace)


def test_anneal_is_deterministic(quick_run):
    init, res = quick_run
    again = anneal(init, QUICK, 0.5, RAYLEIGH, 1.0)
    assert again.aoi == res.aoi
    assert again.policy.powers.tobytes() == res.policy.powers.tobytes()
    assert again.trace == res.trace


def test_different_seed_changes_trace(quick_run):
    init, res = quick_run
    other = anneal(init, AnnealingConfig(t0=1.0, t_min=0.05, candidates=40, seed=4), 0.5, RAYLEIGH, 1.0)
    assert other.trace != res.trace


def test_anneal_improves_slack_start():
    # start well inside the budget so improving moves exist
    init = PowerPolicy.constant(0.25, 10)
    res = anneal(init, AnnealingConfig(t0=1.0, t_min=0.02, candidates=50, seed=1), 0.5, RAYLEIGH, 1.0)
    assert res.aoi < evaluate_policy(init, RAYLEIGH, 1.0).aoi
    assert res.average_power < 0.5 + 1e-9


# -- acceptance rule --------------------------------------------------------

def test_improving_moves_always_accepted():
    rng = np.random.default_rng(0)
    for s in rng.random(1000):
        assert metropolis_accept(-abs(rng.normal()) - 1e-12, 1e-3, s)
        assert metropolis_accept(0.0, 1e-3, s)
    assert metropolis_accept(-1.0, 5.0, np.nextafter(1.0, 0.0))


def test_cold_acceptance_is_greedy():
    rng = np.random.default_rng(1)
    deltas = rng.uniform(1e-4, 1.0, 10_000)
    accepted = sum(metropolis_accept(d, 1e-6, s) for d, s in zip(deltas, rng.random(10_000)))
    assert accepted == 0


def test_hot_acceptance_rate():
    rng = np.random.default_rng(2)
    n = 20_000
    hits = sum(metropolis_accept(1.0, 1.0, s) for s in rng.random(n))
    p = math.exp(-1)
    assert abs(hits / n - p) < 4 * math.sqrt(p * (1 - p) / n)
