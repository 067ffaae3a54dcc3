import itertools
import math

import numpy as np
import pytest

from multiree.optimizer import (
    OptimizerConfig,
    SeparableEnsemble,
    _cached_ree,
    _Objective,
    best_product_state,
    ensemble_to_state,
    pure_state_ree_oracle,
    random_separable_ensemble,
    regularized_density,
    relative_entropy_of_entanglement,
)
from multiree.states import (
    PureState,
    QuantumState,
    apply_local_unitaries,
    basis_state,
    binary_entropy,
    from_pure,
    haar_random_pure,
    haar_random_unitary,
    make_named_state,
    partial_trace,
    permute_parties,
    quantum_relative_entropy,
    random_mixed_state,
    tensor,
)

W_VALUE = 2 * math.log2(3) - 2


def ket(*amps):
    v = np.asarray(amps, dtype=complex)
    return v / np.linalg.norm(v)


# -- ensembles ---------------------------------------------------------------

def test_ensemble_single_term():
    e = SeparableEnsemble.from_terms((2, 2), [(1.0, (ket(1, 0), ket(1, 0)))])
    np.testing.assert_allclose(ensemble_to_state(e).matrix, np.diag([1, 0, 0, 0]))


def test_ensemble_mixture():
    e = SeparableEnsemble.from_terms((2, 2), [(0.5, (ket(1, 0), ket(1, 0))),
                                              (0.5, (ket(0, 1), ket(0, 1)))])
    np.testing.assert_allclose(ensemble_to_state(e).matrix, np.diag([0.5, 0, 0, 0.5]))
    assert len(e) == 2 and e.terms[1][0] == 0.5


def test_ensemble_validation():
    with pytest.raises(ValueError):
        SeparableEnsemble.from_terms((2, 2), [(0.7, (ket(1, 0), ket(1, 0)))])
    with pytest.raises(ValueError):
        SeparableEnsemble((2, 2), [1.0], (np.array([[1, 1]]), np.array([[1, 0]])))
    with pytest.raises(ValueError):
        SeparableEnsemble((2, 2), [1.5, -0.5], (np.eye(2), np.eye(2)))


# -- derivative oracle ----------------------------------------------------------

def test_log_derivative_matches_finite_differences(rng):
    sigma = random_mixed_state((2, 2), rng, 3)
    obj = _Objective(sigma.matrix, (2, 2), 1e-9)
    rho = random_mixed_state((2, 2), rng).matrix
    direction = random_mixed_state((2, 2), rng).matrix - rho
    mu, u, st = obj.decompose(rho)
    m = obj.log_derivative(mu, u, st)
    analytic = -(1 - obj.eps) * np.real(np.vdot(m, direction)) / math.log(2)
    h = 1e-6
    numeric = (obj.value(rho + h * direction) - obj.value(rho - h * direction)) / (2 * h)
    assert abs(analytic - numeric) < 1e-7 * max(1.0, abs(numeric))


def test_objective_matches_relative_entropy(rng):
    sigma = random_mixed_state((2, 3), rng)
    rho = random_mixed_state((2, 3), rng)
    obj = _Objective(sigma.matrix, (2, 3), 1e-9)
    floored = QuantumState((2, 3), (1 - 1e-9) * rho.matrix + 1e-9 * np.eye(6) / 6)
    assert abs(obj.value(rho.matrix) - quantum_relative_entropy(sigma, floored)) < 1e-10


def test_best_product_state_brute_force(rng):
    m = random_mixed_state((2, 2), rng).matrix
    m = m + m.conj().T - np.eye(4) * 0.3
    value, (a, b) = best_product_state(m, (2, 2), rng, 16)
    th, ph = np.meshgrid(np.linspace(0, np.pi, 300), np.linspace(0, 2 * np.pi, 300))
    grid = np.stack([np.cos(th / 2), np.exp(1j * ph) * np.sin(th / 2)], -1).reshape(-1, 2)
    eff = np.einsum("xa,abcd,xc->xbd", grid.conj(), m.reshape(2, 2, 2, 2), grid)
    brute = np.linalg.eigvalsh(eff)[:, -1].max()
    assert value >= brute - 1e-9
    phi = np.kron(a, b)
    assert abs(np.real(phi.conj() @ m @ phi) - value) < 1e-12


# -- examples -------------------------------------------------------------------

def test_product_state_is_zero(fast_cfg):
    psi = tensor(PureState((2,), ket(1, 2)), PureState((2,), ket(1j, 1)), PureState((2,), ket(3, -1)))
    assert relative_entropy_of_entanglement(psi, fast_cfg).value < 1e-6


def test_epr_is_one():
    result = relative_entropy_of_entanglement(make_named_state("epr"))
    assert abs(result.value - 1.0) < 1e-3
    assert abs(result.value - pure_state_ree_oracle(make_named_state("epr"), ((0,), (1,)))) < 1e-3


def test_epr_no_separable_state_beats_one(rng):
    sigma = from_pure(make_named_state("epr"))
    best = math.inf
    for _ in range(2000):
        e = random_separable_ensemble((2, 2), rng, int(rng.integers(4, 9)))
        best = min(best, quantum_relative_entropy(sigma, ensemble_to_state(e)))
    assert best >= 1.0 - 1e-9
    candidate = QuantumState((2, 2), np.diag([0.5, 0, 0, 0.5]))
    assert abs(quantum_relative_entropy(sigma, candidate) - 1.0) < 1e-12


def test_ghz_reaches_explicit_candidate():
    sigma = from_pure(make_named_state("ghz"))
    candidate = QuantumState((2, 2, 2), np.diag([0.5, 0, 0, 0, 0, 0, 0, 0.5]))
    reference = quantum_relative_entropy(sigma, candidate)
    assert abs(reference - 1.0) < 1e-12
    result = relative_entropy_of_entanglement(sigma)
    assert result.value <= reference + 1e-6
    assert abs(result.value - 1.0) < 1e-3


def test_w_state_value():
    result = relative_entropy_of_entanglement(make_named_state("w"))
    assert abs(result.value - W_VALUE) < 5e-3
    assert abs(W_VALUE - 1.1699) < 1e-4


def test_single_party_rejected():
    with pytest.raises(ValueError):
        relative_entropy_of_entanglement(QuantumState((4,), np.eye(4) / 4))


def test_pure_state_oracle():
    assert abs(pure_state_ree_oracle(make_named_state("epr"), ((0,), (1,))) - 1) < 1e-12
    assert pure_state_ree_oracle(basis_state((2, 2), (0, 1)), ((0,), (1,))) < 1e-12
    for alpha in (0.2, 0.6, 0.9):
        psi = make_named_state("ghz", (2, 2, 2), alpha)
        assert abs(pure_state_ree_oracle(psi, ((0,), (1, 2))) - binary_entropy(alpha ** 2)) < 1e-12
    with pytest.raises(ValueError):
        pure_state_ree_oracle(make_named_state("ghz"), ((0,), (1,)))
    with pytest.raises(ValueError):
        pure_state_ree_oracle(make_named_state("ghz"), ((0,), (1,), (2,)))


# -- invariants -------------------------------------------------------------------

def test_value_matches_regularized_closest_state(fast_cfg):
    for psi in (make_named_state("w"), haar_random_pure((2, 2), 4)):
        result = relative_entropy_of_entanglement(psi, fast_cfg)
        rho = regularized_density(result.closest, result.support_floor)
        assert abs(result.value - quantum_relative_entropy(from_pure(psi), rho)) < 1e-8
        assert result.gap_estimate >= 0


def test_more_restarts_never_worse():
    sigma = partial_trace(haar_random_pure((2, 2, 2), 8), {0, 1})
    values = [relative_entropy_of_entanglement(sigma, OptimizerConfig(restarts=r, seed=5)).value
              for r in (1, 2, 4)]
    assert values[0] >= values[1] >= values[2]


def test_deterministic_for_fixed_seed():
    sigma = from_pure(haar_random_pure((2, 2, 2), 2))
    cfg = OptimizerConfig(restarts=2, seed=9)
    first = relative_entropy_of_entanglement(sigma, cfg)
    _cached_ree.cache_clear()
    second = relative_entropy_of_entanglement(sigma, cfg)
    assert first is not second
    assert first.value == second.value
    np.testing.assert_array_equal(first.closest.weights, second.closest.weights)


def test_upper_bound_soundness(rng, fast_cfg):
    states = [from_pure(make_named_state("w")), from_pure(haar_random_pure((2, 2, 2), 1)),
              random_mixed_state((2, 2), rng, 2)]
    for sigma in states:
        result = relative_entropy_of_entanglement(sigma, fast_cfg)
        for _ in range(200):
            rho = ensemble_to_state(random_separable_ensemble(sigma.dims, rng, 2 * sigma.structure.dimension))
            assert result.value <= quantum_relative_entropy(sigma, rho) + 1e-6


def test_oracle_agreement_on_random_two_qubit_states(fast_cfg):
    for seed in range(50):
        psi = haar_random_pure((2, 2), 1000 + seed)
        value = relative_entropy_of_entanglement(psi, fast_cfg).value
        assert abs(value - pure_state_ree_oracle(psi, ((0,), (1,)))) < 5e-3


def test_oracle_agreement_qubit_qutrit(fast_cfg):
    for seed in range(5):
        psi = haar_random_pure((2, 3), seed)
        value = relative_entropy_of_entanglement(psi, fast_cfg).value
        assert abs(value - pure_state_ree_oracle(psi, ((0,), (1,)))) < 5e-3


def test_zero_on_random_separable_states(rng, fast_cfg):
    shapes = [(2, 2)] * 25 + [(2, 3)] * 15 + [(2, 2, 2)] * 10
    for dims in shapes:
        d = math.prod(dims)
        sigma = ensemble_to_state(random_separable_ensemble(dims, rng, int(rng.integers(2, d + 3))))
        assert relative_entropy_of_entanglement(sigma, fast_cfg).value < 5e-3


def test_party_permutation_invariance(fast_cfg):
    for psi in (haar_random_pure((2, 2, 2), 31), make_named_state("psi_eff", (2, 2, 2), 0.8, 0.6 / math.sqrt(2))):
        base = relative_entropy_of_entanglement(psi, fast_cfg).value
        for order in itertools.permutations(range(3)):
            value = relative_entropy_of_entanglement(permute_parties(psi, order), fast_cfg).value
            assert abs(value - base) < 5e-3


def test_local_unitary_invariance(rng, fast_cfg):
    for sigma in (from_pure(haar_random_pure((2, 2, 2), 17)), random_mixed_state((2, 2), rng, 2)):
        base = relative_entropy_of_entanglement(sigma, fast_cfg).value
        for _ in range(3):
            us = [haar_random_unitary(d, rng) for d in sigma.dims]
            value = relative_entropy_of_entanglement(apply_local_unitaries(sigma, us), fast_cfg).value
            assert abs(value - base) < 5e-3


def test_ghz_like_family_matches_binary_entropy(fast_cfg):
    for alpha in (0.3, 0.5, 0.8):
        psi = make_named_state("ghz", (2, 2, 2), alpha)
        assert abs(relative_entropy_of_entanglement(psi, fast_cfg).value - binary_entropy(alpha ** 2)) < 1e-4


def test_small_ensemble_warns():
    with pytest.warns(UserWarning):
        relative_entropy_of_entanglement(make_named_state("epr"), OptimizerConfig(restarts=1, ensemble_size=2))


def test_config_validation():
    with pytest.raises(ValueError):
        OptimizerConfig(value_tolerance=0)
    with pytest.raises(ValueError):
        OptimizerConfig(restarts=0)
    with pytest.raises(ValueError):
        OptimizerConfig(support_floor=0)
