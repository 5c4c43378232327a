import json

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from fgavqe.encoding import EnergyTable, diagonal_energies, encode, ground_bitstrings
from fgavqe.instance import GenerationConfig, generate_instance
from fgavqe.optimizer import OptimizerConfig
from fgavqe.simulator import AnsatzSpec, fidelity, prepare_state, probabilities
from fgavqe.vqe import (
    CostSpec,
    SortedTable,
    cvar_exact,
    cvar_from_samples,
    default_max_evals,
    expectation,
    random_initial_params,
    run_vqe,
)


def oracle_cvar(probs, energies, xi):
    """Left-tail mean via the quantile integral (1/xi) * int_0^xi F^-1(u) du."""
    acc, mass = 0.0, 0.0
    for k in sorted(range(len(energies)), key=lambda k: (energies[k], k)):
        if mass >= xi:
            break
        take = min(probs[k], xi - mass)
        acc += take * energies[k]
        mass += take
    return acc / xi


@st.composite
def distributions(draw, max_states=32):
    n = draw(st.integers(1, max_states))
    w = np.array(draw(st.lists(st.floats(0, 1), min_size=n, max_size=n)))
    assume(w.sum() > 1e-3)
    e = np.array(draw(st.lists(st.integers(-20, 20), min_size=n, max_size=n)), dtype=float)
    return w / w.sum(), e


# --- sampled CVaR ---

def test_cvar_from_samples_examples():
    assert cvar_from_samples([4, 2, 1, 3], 0.5) == 1.5
    assert cvar_from_samples([4, 2, 1, 3], 1.0) == 2.5
    assert cvar_from_samples([4, 2, 1, 3], 0.01) == 1.0


def test_cvar_from_samples_errors():
    with pytest.raises(ValueError):
        cvar_from_samples([], 0.5)
    with pytest.raises(ValueError):
        cvar_from_samples([1.0], 0.0)
    with pytest.raises(ValueError):
        cvar_from_samples([1.0], 1.5)


def test_cvar_from_samples_exact_integer_count():
    # 0.1 * 30 is 3.0000000000000004 in floating point; the tail must still be 3 samples
    assert cvar_from_samples(list(range(30)), 0.1) == 1.0


# --- exact CVaR ---

def test_cvar_exact_examples():
    table = EnergyTable(np.array([0.0, 2.0]))
    p = np.array([0.5, 0.5])
    assert cvar_exact(p, table, 0.25) == 0.0
    assert cvar_exact(p, table, 0.75) == pytest.approx(2 / 3)
    assert cvar_exact(p, table, 1.0) == 1.0


def test_cvar_exact_validates():
    table = EnergyTable(np.array([0.0, 2.0]))
    with pytest.raises(ValueError):
        cvar_exact(np.array([0.5, 0.6]), table, 0.5)
    with pytest.raises(ValueError):
        cvar_exact(np.array([0.5, 0.5]), table, 0.0)


@given(distributions(), st.floats(0.001, 1.0))
def test_cvar_exact_matches_quantile_oracle(dist, xi):
    p, e = dist
    assert cvar_exact(p, EnergyTable(e), xi) == pytest.approx(oracle_cvar(p, e, xi), abs=1e-9)


@given(distributions())
def test_cvar_at_one_is_expectation(dist):
    p, e = dist
    t = EnergyTable(e)
    assert abs(cvar_exact(p, t, 1.0) - expectation(p, t)) <= 1e-12 * max(1.0, np.abs(e).max())


@given(distributions(), st.floats(0.001, 1.0))
def test_cvar_bounds(dist, xi):
    p, e = dist
    t = EnergyTable(e)
    c = cvar_exact(p, t, xi)
    support_min = e[p > 0].min()
    assert support_min - 1e-9 <= c <= expectation(p, t) + 1e-9


@given(distributions(), st.floats(0.001, 1.0), st.floats(-100, 100))
def test_cvar_shift_equivariance(dist, xi, c):
    p, e = dist
    assert cvar_exact(p, EnergyTable(e + c), xi) == pytest.approx(cvar_exact(p, EnergyTable(e), xi) + c, abs=1e-9)


@given(distributions())
def test_cvar_monotone_in_xi(dist):
    p, e = dist
    st_ = SortedTable(EnergyTable(e))
    vals = [st_.cvar(p, xi) for xi in np.linspace(0.01, 1.0, 100)]
    assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))


@given(st.lists(st.integers(-10, 10), min_size=1, max_size=40), st.data())
def test_sampled_cvar_monotone_in_xi(samples, data):
    xis = sorted(data.draw(st.lists(st.floats(0.001, 1.0), min_size=2, max_size=10)))
    vals = [cvar_from_samples(samples, xi) for xi in xis]
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


@given(st.integers(1, 4), st.lists(st.integers(0, 15), min_size=1, max_size=60), st.data())
def test_sampled_matches_exact_on_empirical_distribution(nq, shots, data):
    K = len(shots)
    k = data.draw(st.integers(1, K))
    xi = k / K
    rng = np.random.default_rng(K)
    energies = rng.integers(-5, 5, size=16).astype(float)
    shots = [s % 16 for s in shots]
    counts = np.bincount(shots, minlength=16) / K
    counts /= counts.sum()
    exact = cvar_exact(counts, EnergyTable(energies), xi)
    assert exact == pytest.approx(cvar_from_samples(energies[shots], xi), abs=1e-12)


def test_expectation_examples():
    t = EnergyTable(np.array([3.0, -1.0, 2.0, 0.0]))
    assert expectation(np.array([0, 1, 0, 0]), t) == -1.0
    assert expectation(np.full(4, 0.25), t) == 1.0


# --- initial parameters ---

def test_random_initial_params():
    spec = AnsatzSpec(4, 3)
    a = random_initial_params(spec, 5)
    assert a.shape == (12,)
    assert ((a >= 0) & (a < 2 * np.pi)).all()
    assert np.array_equal(a, random_initial_params(spec, 5))
    assert not np.array_equal(a, random_initial_params(spec, 6))


def test_cost_spec_validation():
    with pytest.raises(ValueError):
        CostSpec(xi=0.0)
    with pytest.raises(ValueError):
        CostSpec(mode="noisy")
    with pytest.raises(ValueError):
        CostSpec(mode="sampled", shots=0)


# --- VQE loop ---

def test_single_qubit_run_reaches_ground_state():
    table = EnergyTable(np.array([0.0, 10.0]))
    trace = run_vqe(table, {0}, AnsatzSpec(1, 1), CostSpec(xi=1.0), seed=3)
    assert trace.final_fidelity > 0.99
    assert trace.total_evals <= default_max_evals(1) == 50


def _small_problem():
    inst = generate_instance(GenerationConfig(3, 3), 2)
    table = diagonal_energies(encode(inst, "binary"))
    _, ground = ground_bitstrings(table)
    return table, ground


@pytest.mark.parametrize("mode", ["exact", "sampled"])
def test_run_is_deterministic(mode):
    table, ground = _small_problem()
    spec = AnsatzSpec(6, 2)
    a = run_vqe(table, ground, spec, CostSpec(0.1, mode, 256), seed=4)
    b = run_vqe(table, ground, spec, CostSpec(0.1, mode, 256), seed=4)
    assert a.to_csv() == b.to_csv()
    assert a.summary() == b.summary()
    assert np.array_equal(a.best_theta, b.best_theta)


def test_trace_consistency():
    table, ground = _small_problem()
    spec = AnsatzSpec(6, 3)
    trace = run_vqe(table, ground, spec, CostSpec(0.1), OptimizerConfig(max_evals=120), seed=1)
    assert trace.total_evals <= 120
    assert [r.index for r in trace.evals] == list(range(1, trace.total_evals + 1))
    fids = [r.fidelity for r in trace.evals]
    for t, k in trace.first_eval_to_threshold.items():
        hits = [i + 1 for i, f in enumerate(fids) if f >= t]
        assert k == (hits[0] if hits else None)
    k1, k10 = trace.first_eval_to_threshold[0.01], trace.first_eval_to_threshold[0.1]
    if k1 is not None and k10 is not None:
        assert k1 <= k10
    assert trace.best_cost == min(r.cost for r in trace.evals)
    assert trace.max_fidelity == max(fids)
    st_ = SortedTable(table)
    probs = probabilities(prepare_state(spec, trace.best_theta))
    assert st_.cvar(probs, 0.1) == trace.best_cost
    assert trace.final_fidelity == pytest.approx(fidelity(prepare_state(spec, trace.best_theta), ground))


def test_replay_reproduces_costs():
    table, ground = _small_problem()
    spec = AnsatzSpec(6, 1)
    trace = run_vqe(table, ground, spec, CostSpec(0.25), OptimizerConfig(max_evals=40), seed=8)
    theta0 = random_initial_params(spec, 8)
    probs = probabilities(prepare_state(spec, theta0))
    assert trace.evals[0].cost == cvar_exact(probs, table, 0.25)


def test_exports():
    table, ground = _small_problem()
    trace = run_vqe(table, ground, AnsatzSpec(6, 1), CostSpec(0.5), OptimizerConfig(max_evals=15), seed=0)
    lines = trace.to_csv().splitlines()
    assert lines[0] == "eval,cost,fidelity"
    assert len(lines) == 16
    s = json.loads(trace.to_json())
    assert s["total_evals"] == 15
    assert set(s["first_eval_to_threshold"]) == {"0.01", "0.1"}


def test_run_checks_sizes():
    with pytest.raises(ValueError):
        run_vqe(EnergyTable(np.zeros(4)), {0}, AnsatzSpec(3, 1), CostSpec())
    with pytest.raises(ValueError):
        run_vqe(EnergyTable(np.zeros(4)), set(), AnsatzSpec(2, 1), CostSpec())
