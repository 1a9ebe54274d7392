import json
import math

import numpy as np
import pytest

from shadowguard.ansatz import build_circuit, init_uniform, prepare_state
from shadowguard.hamiltonians import ObservableSum, PauliTerm, ising_chain
from shadowguard.shadows import (
    Mixture,
    ShadowSet,
    budget_gradient,
    budget_observables,
    budget_purity,
    collect_shadows,
    estimate_energy,
    estimate_observable,
    estimate_purity,
    estimate_purity_mom,
    estimate_renyi2,
    renyi2_from_purity,
    snapshot_values,
)
from shadowguard.simulator import (
    Statevector,
    basis_state,
    expectation,
    haar_random_state,
    purity_exact,
    reduced_density_matrix,
    zero_state,
)


def bell():
    return Statevector(np.array([1, 0, 0, 1]) / np.sqrt(2))


def pairwise_purity(shadows, qubits):
    """O(T^2) oracle: distinct-pair average of tr(rho_t rho_t') with dense reduced snapshots."""
    mats = [shadows.snapshot_matrix(t, qubits) for t in range(shadows.T)]
    total = sum(np.trace(a @ b).real for i, a in enumerate(mats) for j, b in enumerate(mats) if i != j)
    return total / (shadows.T * (shadows.T - 1))


def test_snapshot_matrix_has_unit_trace(rng):
    sh = collect_shadows(haar_random_state(3, rng), 20, rng)
    for t in range(20):
        assert np.trace(sh.snapshot_matrix(t)).real == pytest.approx(1.0)


def test_snapshot_mean_is_unbiased(rng):
    sh = collect_shadows(zero_state(1), 10_000, rng)
    mean = sum(sh.snapshot_matrix(t) for t in range(sh.T)) / sh.T
    assert np.allclose(np.diag(mean).real, [1, 0], atol=0.05)
    psi = haar_random_state(2, rng)
    sh = collect_shadows(psi, 20_000, rng)
    mean = sum(sh.snapshot_matrix(t) for t in range(sh.T)) / sh.T
    assert np.abs(mean - reduced_density_matrix(psi, (0, 1))).max() < 0.05


def test_basis_frequencies_and_determinism():
    sh = collect_shadows(zero_state(3), 10_000, np.random.default_rng(1))
    for q in range(3):
        assert np.all(np.abs(np.bincount(sh.bases[:, q], minlength=3) / sh.T - 1 / 3) < 0.02)
    again = collect_shadows(zero_state(3), 10_000, np.random.default_rng(1))
    assert np.array_equal(sh.bases, again.bases) and np.array_equal(sh.bits, again.bits)


def test_z_estimates():
    rng = np.random.default_rng(2)
    sh = collect_shadows(zero_state(2), 100_000, rng)
    vals = snapshot_values(sh, PauliTerm.from_string("Z0"))
    assert set(np.unique(vals)) <= {0.0, 3.0, -3.0}
    assert estimate_observable(sh, PauliTerm.from_string("Z0")) == pytest.approx(1.0, abs=0.02)
    assert estimate_observable(sh, PauliTerm.from_string("Z0 Z1")) == pytest.approx(1.0, abs=0.05)
    assert estimate_observable(sh, PauliTerm.from_string("Z0", 0.0)) == 0.0


def test_energy_examples():
    rng = np.random.default_rng(3)
    z_sum = ObservableSum(tuple(PauliTerm.from_string(f"Z{i}") for i in range(4)))
    sh = collect_shadows(zero_state(4), 100_000, rng)
    assert estimate_energy(sh, z_sum) == pytest.approx(4.0, abs=0.1)
    assert estimate_energy(sh, ObservableSum(())) == 0.0
    with pytest.raises(ValueError):
        estimate_energy(sh.subset(slice(0, 0)), z_sum)


@pytest.mark.parametrize("label", ["X0", "Y1", "Z2", "X0 Y2", "Y0 Y1 Z2", "X1 Z2"])
def test_unbiasedness_within_four_standard_errors(label):
    rng = np.random.default_rng(hash(label) % 2 ** 32)
    psi = haar_random_state(3, rng)
    term = PauliTerm.from_string(label)
    vals = snapshot_values(collect_shadows(psi, 100_000, rng), term)
    exact = expectation(psi, ObservableSum((term,)))
    assert abs(vals.mean() - exact) < 4 * vals.std(ddof=1) / np.sqrt(vals.size)


def test_estimator_reads_only_the_support(rng):
    sh = collect_shadows(haar_random_state(3, rng), 500, rng)
    bases = sh.bases.copy()
    bits = sh.bits.copy()
    bases[:, 2] = (bases[:, 2] + 1) % 3
    bits[:, 2] ^= 1
    other = ShadowSet(bases, bits)
    term = PauliTerm.from_string("X0 Y1")
    assert np.array_equal(snapshot_values(sh, term), snapshot_values(other, term))
    assert estimate_purity(sh, (0, 1)) == estimate_purity(other, (0, 1))


@pytest.mark.parametrize("qubits", [(0,), (1,), (0, 2), (0, 1, 2)])
def test_purity_matches_pairwise_oracle(qubits):
    rng = np.random.default_rng(len(qubits))
    sh = collect_shadows(haar_random_state(3, rng), 40, rng)
    assert estimate_purity(sh, qubits) == pytest.approx(pairwise_purity(sh, qubits), abs=1e-10)


def test_purity_uses_exactly_the_distinct_pairs():
    # T = 2: two ordered pairs, both equal tr(rho_0 rho_1)
    sh = ShadowSet(np.array([[2], [2]]), np.array([[0], [1]]))
    assert estimate_purity(sh, (0,)) == pytest.approx(-4.0)
    sh = ShadowSet(np.array([[0], [2]]), np.array([[0], [1]]))
    assert estimate_purity(sh, (0,)) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        estimate_purity(sh.subset(slice(0, 1)), (0,))


def test_purity_examples():
    rng = np.random.default_rng(5)
    assert estimate_purity(collect_shadows(zero_state(3), 10_000, rng), (0, 1)) == pytest.approx(1.0, abs=0.05)
    assert estimate_purity(collect_shadows(bell(), 10_000, rng), (0,)) == pytest.approx(0.5, abs=0.05)


def test_purity_failure_rate_at_budget():
    rng = np.random.default_rng(6)
    c = build_circuit(10, 60, rng)
    psi = prepare_state(c, init_uniform(c, rng))
    exact = purity_exact(psi, (0, 1))
    T = budget_purity(2, 0.1, 0.1, exact)
    failures = sum(abs(estimate_purity(collect_shadows(psi, T, rng), (0, 1)) - exact) > 0.1
                   for _ in range(200))
    assert failures / 200 <= 0.1


def test_renyi2():
    rng = np.random.default_rng(7)
    assert estimate_renyi2(collect_shadows(zero_state(2), 10_000, rng), (0, 1)) == pytest.approx(0.0, abs=0.1)
    assert estimate_renyi2(collect_shadows(bell(), 10_000, rng), (0,)) == pytest.approx(math.log(2), abs=0.1)
    assert renyi2_from_purity(1.3, 2) == (0.0, True)
    s2, clamped = renyi2_from_purity(0.1, 2)
    assert s2 == pytest.approx(2 * math.log(2)) and clamped
    assert renyi2_from_purity(0.5, 1) == (pytest.approx(math.log(2)), False)


def test_median_of_means():
    rng = np.random.default_rng(8)
    sh = collect_shadows(zero_state(3), 10_000, rng)
    assert estimate_purity_mom(sh, (0, 1), 1) == estimate_purity(sh, (0, 1))
    assert estimate_purity_mom(sh, (0, 1), 10) == pytest.approx(1.0, abs=0.1)
    with pytest.raises(ValueError):
        estimate_purity_mom(sh.subset(slice(0, 5)), (0,), 3)


def test_median_of_means_ignores_a_corrupted_batch():
    rng = np.random.default_rng(9)
    clean = collect_shadows(zero_state(2), 5000, rng)
    bases, bits = clean.bases.copy(), clean.bits.copy()
    # make the first of 5 batches all identical outcomes: its estimate becomes 25
    bases[:1000] = 2
    bits[:1000] = 0
    corrupted = ShadowSet(bases, bits)
    assert estimate_purity(corrupted.subset(slice(0, 1000)), (0, 1)) == pytest.approx(25.0)
    assert estimate_purity_mom(corrupted, (0, 1), 5) == pytest.approx(1.0, abs=0.15)


def test_budgets_are_formula_ceilings():
    assert budget_observables(2, 10, 0.1, 0.05) == math.ceil(64 * math.log(400) / 0.01)
    assert budget_observables(2, 10, 0.1, 0.05) == 38346
    assert budget_purity(2, 0.1, 0.1, 1.0) == 64_000
    assert budget_purity(2, 0.1, 0.1, 0.25) == 16_000
    assert budget_purity(2, 0.2, 0.1, 1.0) * 4 == budget_purity(2, 0.1, 0.1, 1.0)
    assert budget_gradient(2, 10, 0.1, 0.05) == math.ceil(64 * 100 * math.log(400) / 0.01)
    assert budget_gradient(2, 1, 0.1, 0.05) == budget_observables(2, 1, 0.1, 0.05)
    with pytest.raises(ValueError):
        budget_observables(2, 1, 0.1, 2.0)
    with pytest.raises(ValueError):
        budget_purity(2, 0.1, 0.1, 0.0)


def test_budget_log_linearity():
    k, eps, delta = 3, 0.2, 0.01
    raw = lambda L: 4 ** (k + 1) * math.log(2 * L / delta) / eps ** 2  # noqa: E731
    assert raw(20) - raw(10) == pytest.approx(4 ** (k + 1) * math.log(2) / eps ** 2)
    for L in (1, 7, 20):
        assert budget_observables(k, L, eps, delta) == math.ceil(raw(L))
        assert budget_gradient(k, L, eps, delta) == math.ceil(raw(L) * L ** 2)


def test_json_round_trip(rng):
    sh = collect_shadows(haar_random_state(3, rng), 50, rng, seed=42, metadata={"theta": [0.1]})
    back = ShadowSet.from_json(json.dumps(sh.to_json()))
    assert np.array_equal(back.bases, sh.bases) and np.array_equal(back.bits, sh.bits)
    assert back.seed == 42 and back.source == {"theta": [0.1]}


def test_computational_scheme():
    rng = np.random.default_rng(10)
    sh = collect_shadows(basis_state([1, 0, 1]), 100, rng, scheme="computational")
    assert np.all(sh.bases == 2)
    assert estimate_observable(sh, PauliTerm.from_string("Z0 Z1")) == -1.0
    with pytest.raises(ValueError):
        estimate_observable(sh, PauliTerm.from_string("X0"))
    with pytest.raises(ValueError):
        estimate_purity(sh, (0,))


def test_ising_mixture_variance():
    n, lam, J = 5, 0.3, 1.0
    mixture = Mixture((1 - lam, lam), (zero_state(n), basis_state([0, 1, 0, 1, 0])))
    h = ising_chain(n, J)
    from shadowguard.shadows import snapshot_energies

    sh = collect_shadows(mixture, 100_000, np.random.default_rng(11), scheme="computational")
    e = snapshot_energies(sh, h)
    assert set(np.unique(e)) == {-J * (n - 1), J * (n - 1)}
    assert e.mean() == pytest.approx(-J * (n - 1) * (1 - 2 * lam), abs=0.05)
    assert abs(e.var(ddof=1) / (4 * J ** 2 * (n - 1) ** 2 * lam * (1 - lam)) - 1) < 0.1
