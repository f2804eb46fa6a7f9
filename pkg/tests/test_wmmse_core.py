"""Alternating-solver building blocks: combiner, weight, Gram EVD, surrogate."""

import numpy as np
import pytest

from nfbeam.metrics import (
    PowerModel,
    StreamSelection,
    achievable_rate,
    hardware_power,
    interference_covariance,
    mse_matrix,
    network_objective,
)
from nfbeam.wmmse_core import (
    interference_gram_evd,
    solve_hermitian,
    surrogate_value,
    update_combiner,
    update_weight,
)


def random_problem(rng, k=2, m_r=2, m_t=6, streams=2, scale=1.0):
    channels = [
        scale * (rng.normal(size=(m_r, m_t)) + 1j * rng.normal(size=(m_r, m_t)))
        for _ in range(k)
    ]
    precoders = rng.normal(size=(k, m_t, streams)) + 1j * rng.normal(size=(k, m_t, streams))
    return channels, precoders


def combiner_weight_sweep(channels, precoders, sel, noise, mu):
    """One exact combiner + weight block update; returns (combiners, mses, weights)."""
    k = len(channels)
    combiners, mses, weights = [], [], []
    for u in range(k):
        z = update_combiner(channels[u], precoders, sel, noise, u)
        q = interference_covariance(channels[u], precoders, sel, noise, u)
        e = mse_matrix(z, channels[u], precoders[u], sel.flags[u], q)
        combiners.append(z)
        mses.append(e)
        weights.append(update_weight(e, mu))
    return np.asarray(combiners), np.asarray(mses), np.asarray(weights)


class TestSolveHermitian:
    def test_well_conditioned_exact(self):
        rng = np.random.default_rng(0)
        a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        a = a @ a.conj().T + np.eye(4)
        b = rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2))
        np.testing.assert_allclose(solve_hermitian(a, b), np.linalg.solve(a, b), rtol=1e-12)

    def test_singular_input_regularized(self):
        a = np.zeros((3, 3), dtype=complex)
        x = solve_hermitian(a, np.eye(3), ridge=1e-6)
        assert np.all(np.isfinite(x))
        np.testing.assert_allclose(x, 1e6 * np.eye(3), rtol=1e-6)

    def test_skew_part_discarded(self):
        herm = np.diag([2.0, 3.0]).astype(complex)
        skew = np.array([[0.0, 1.0], [-1.0, 0.0]])
        got = solve_hermitian(herm + skew, np.eye(2))
        np.testing.assert_allclose(got, np.diag([0.5, 1.0 / 3.0]), rtol=1e-12)


class TestUpdateCombiner:
    def test_scalar_closed_form(self):
        h = np.array([[2.0 + 0.0j]])
        w = np.array([[[1.0 + 0.0j]]])
        sel = StreamSelection(np.array([[1]]))
        z = update_combiner(h, w, sel, 1.0, 0)
        assert z[0, 0] == pytest.approx(2.0 / 5.0, rel=1e-12)

    def test_masked_stream_gets_zero_column(self):
        rng = np.random.default_rng(1)
        channels, precoders = random_problem(rng)
        sel = StreamSelection(np.array([[1, 0], [1, 1]]))
        z = update_combiner(channels[0], precoders, sel, 0.1, 0)
        np.testing.assert_allclose(z[:, 1], 0.0, atol=1e-14)
        assert np.linalg.norm(z[:, 0]) > 0.0

    def test_minimizes_error_trace(self):
        rng = np.random.default_rng(2)
        channels, precoders = random_problem(rng)
        sel = StreamSelection(np.ones((2, 2), dtype=int))
        noise = 0.3
        z = update_combiner(channels[0], precoders, sel, noise, 0)
        q = interference_covariance(channels[0], precoders, sel, noise, 0)
        best = np.trace(mse_matrix(z, channels[0], precoders[0], sel.flags[0], q)).real
        for _ in range(25):
            dz = 0.05 * (rng.normal(size=z.shape) + 1j * rng.normal(size=z.shape))
            other = np.trace(
                mse_matrix(z + dz, channels[0], precoders[0], sel.flags[0], q)
            ).real
            assert other >= best - 1e-12

    def test_rejects_non_positive_noise(self):
        rng = np.random.default_rng(3)
        channels, precoders = random_problem(rng)
        sel = StreamSelection(np.ones((2, 2), dtype=int))
        with pytest.raises(ValueError):
            update_combiner(channels[0], precoders, sel, -1.0, 0)


class TestUpdateWeight:
    def test_identity_error_scales_inverse(self):
        got = update_weight(np.eye(2, dtype=complex), 1.5)
        np.testing.assert_allclose(got, (2.0 / 3.0) * np.eye(2), rtol=1e-12)

    def test_inverts_general_error(self):
        rng = np.random.default_rng(4)
        a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        f = a @ a.conj().T + 0.1 * np.eye(3)
        got = update_weight(f, 2.0)
        np.testing.assert_allclose(got @ f, 0.5 * np.eye(3), atol=1e-10)
        np.testing.assert_allclose(got, got.conj().T, atol=1e-12)

    def test_rejects_non_positive_mu(self):
        with pytest.raises(ValueError):
            update_weight(np.eye(2), 0.0)


class TestGramEvd:
    def test_matches_direct_sum(self):
        rng = np.random.default_rng(5)
        channels, precoders = random_problem(rng)
        sel = StreamSelection(np.ones((2, 2), dtype=int))
        combiners, _, weights = combiner_weight_sweep(channels, precoders, sel, 0.2, 1.0)
        evd = interference_gram_evd(channels, combiners, weights)
        gram = np.zeros((6, 6), dtype=complex)
        for k in range(2):
            hz = channels[k].conj().T @ combiners[k]
            gram += hz @ weights[k] @ hz.conj().T
        rebuilt = evd.basis @ np.diag(evd.eigenvalues) @ evd.basis.conj().T
        np.testing.assert_allclose(rebuilt, 0.5 * (gram + gram.conj().T), atol=1e-10)

    def test_basis_unitary_eigenvalues_sorted(self):
        rng = np.random.default_rng(6)
        channels, precoders = random_problem(rng, k=3)
        sel = StreamSelection(np.ones((3, 2), dtype=int))
        combiners, _, weights = combiner_weight_sweep(channels, precoders, sel, 0.2, 1.0)
        evd = interference_gram_evd(channels, combiners, weights)
        np.testing.assert_allclose(
            evd.basis.conj().T @ evd.basis, np.eye(6), atol=1e-12
        )
        assert np.all(np.diff(evd.eigenvalues) <= 1e-12)
        assert np.all(evd.eigenvalues >= 0.0)

    def test_diagonal_case(self):
        channels = [np.eye(3, dtype=complex)]
        combiners = np.array([np.eye(3, dtype=complex)])
        weights = np.array([np.diag([1.0, 3.0, 2.0]).astype(complex)])
        evd = interference_gram_evd(channels, combiners, weights)
        np.testing.assert_allclose(evd.eigenvalues, [3.0, 2.0, 1.0], rtol=1e-12)


class TestSurrogate:
    def test_hand_computed_value(self):
        weights = np.array([np.diag([2.0, 1.0]).astype(complex)])
        mses = np.array([np.diag([0.5, 1.0]).astype(complex)])
        sel = StreamSelection(np.array([[1, 1]]))
        model = PowerModel(rf_chain_w=0.2, shifter_w=0.01)
        # bracket = ln 2 + mu*2 - mu*(2*0.5 + 1*1) = ln 2, so the rate term is 1 bit
        got = surrogate_value(weights, mses, sel, model, 8, 0.7, 1.0)
        want = 0.7 * 1.0 - 0.3 * hardware_power(sel, model, 8)
        assert got == pytest.approx(want, rel=1e-12)

    def test_equals_objective_at_combiner_weight_fixed_point(self):
        rng = np.random.default_rng(7)
        for _ in range(5):
            channels, precoders = random_problem(rng, k=2, m_r=2, m_t=6)
            sel = StreamSelection(np.ones((2, 2), dtype=int))
            noise = 0.15
            model = PowerModel()
            _, mses, weights = combiner_weight_sweep(channels, precoders, sel, noise, 1.0)
            got = surrogate_value(weights, mses, sel, model, 6, 0.7, 1.0)
            rates = achievable_rate(channels, precoders, sel, noise)
            want = network_objective(rates, hardware_power(sel, model, 6), 0.7)
            assert got == pytest.approx(want, rel=1e-9)

    def test_weight_update_is_block_maximizer(self):
        rng = np.random.default_rng(8)
        channels, precoders = random_problem(rng)
        sel = StreamSelection(np.ones((2, 2), dtype=int))
        model = PowerModel()
        mu = 1.3
        _, mses, weights = combiner_weight_sweep(channels, precoders, sel, 0.2, mu)
        best = surrogate_value(weights, mses, sel, model, 6, 0.8, mu)
        for _ in range(20):
            d = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
            d = 0.05 * (d + d.conj().T)
            bumped = weights.copy()
            bumped[0] = bumped[0] + d
            if np.linalg.eigvalsh(bumped[0]).min() <= 0:
                continue
            other = surrogate_value(bumped, mses, sel, model, 6, 0.8, mu)
            assert other <= best + 1e-12

    def test_lower_bounds_objective_for_any_weights(self):
        rng = np.random.default_rng(9)
        channels, precoders = random_problem(rng)
        sel = StreamSelection(np.ones((2, 2), dtype=int))
        noise = 0.2
        model = PowerModel()
        combiners, mses, _ = combiner_weight_sweep(channels, precoders, sel, noise, 1.0)
        rates = achievable_rate(channels, precoders, sel, noise)
        truth = network_objective(rates, hardware_power(sel, model, 6), 1.0)
        for _ in range(10):
            a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
            gamma = a @ a.conj().T + 0.05 * np.eye(2)
            weights = np.array([gamma, gamma])
            val = surrogate_value(weights, mses, sel, model, 6, 1.0, 1.0)
            assert val <= truth + 1e-9
