import numpy as np
import pytest
from numpy.linalg import matrix_power

from tlmor import (
    GradientTriple, ImpulseData, ReducedModel, SolveFailure, StateSpaceModel, adjoint_power_map,
    finite_gramians, gradient_data, gradient_model, impulse_response, objective_value,
    solve_stein, solve_sylvester,
)
from tlmor.gradients import gradient_data_naive, model_workspace

from conftest import random_model, random_rom, scaled

FD_STEP = 1e-6


def fd_gradient(data, rom, step=FD_STEP):
    """Central differences of the objective, entry by entry."""
    blocks = [np.array(X) for X in rom]
    grads = []
    for b in range(3):
        G = np.zeros_like(blocks[b])
        for idx in np.ndindex(G.shape):
            plus = [X.copy() for X in blocks]
            minus = [X.copy() for X in blocks]
            plus[b][idx] += step
            minus[b][idx] -= step
            G[idx] = (objective_value(data, ReducedModel(*plus))
                      - objective_value(data, ReducedModel(*minus))) / (2 * step)
        grads.append(G)
    return GradientTriple(*grads)


def assert_blockwise_close(g, ref, rel):
    for a, b in zip(g, ref):
        assert np.linalg.norm(a - b) <= rel * np.linalg.norm(b)


class TestGradientTriple:
    def test_norm(self):
        g = GradientTriple(np.full((2, 2), 1.0), np.full((2, 1), 2.0), np.full((1, 2), 2.0))
        assert g.norm == pytest.approx(np.sqrt(4 + 8 + 8), rel=1e-14)


class TestGradientData:
    def test_horizon_one(self, rng):
        h = rng.standard_normal((1, 2, 3))
        rom = random_rom(rng, 2, 3, 2)
        g = gradient_data(ImpulseData(h), rom)
        A, B, C = rom
        assert np.array_equal(g.dA, np.zeros((2, 2)))
        np.testing.assert_allclose(g.dC, 2 * (C @ B @ B.T - h[0] @ B.T), rtol=1e-13)
        np.testing.assert_allclose(g.dB, 2 * (C.T @ C @ B - C.T @ h[0]), rtol=1e-13)
        assert_blockwise_close(g.dB, fd_gradient(ImpulseData(h), rom).dB, 1e-6)

    def test_exact_match_is_stationary(self, rng):
        truth = random_model(rng, 3, 2, 2)
        data = impulse_response(truth, 10)
        g = gradient_data(data, ReducedModel.from_model(truth))
        scale = np.sum(data.samples**2)
        assert g.norm <= 1e-12 * scale

    def test_matches_finite_differences(self, rng):
        data = impulse_response(random_model(rng, 6, 2, 2, rho=0.9), 20)
        rom = random_rom(rng, 3, 2, 2, rho=0.8)
        assert_blockwise_close(gradient_data(data, rom), fd_gradient(data, rom), 1e-5)

    def test_unstable_rom_finite_differences(self, rng):
        data = ImpulseData(rng.standard_normal((15, 2, 1)))
        rom = random_rom(rng, 2, 1, 2, rho=1.15)
        assert_blockwise_close(gradient_data(data, rom), fd_gradient(data, rom), 1e-5)

    def test_matches_naive_double_sum(self, rng):
        for L in (1, 2, 3, 17, 40):
            data = ImpulseData(rng.standard_normal((L, 3, 2)))
            rom = random_rom(rng, 4, 2, 3, rho=0.95)
            g, ref = gradient_data(data, rom), gradient_data_naive(data, rom)
            for a, b in zip(g, ref):
                assert np.linalg.norm(a - b) <= 1e-11 * max(np.linalg.norm(b), 1e-300)

    def test_pure_function_of_data(self, rng):
        # two different systems with identical Markov parameters give identical gradients
        truth = random_model(rng, 4, 2, 2)
        T = rng.standard_normal((4, 4))
        Ti = np.linalg.inv(T)
        twin = StateSpaceModel(T @ truth.A @ Ti, T @ truth.B, truth.C @ Ti)
        rom = random_rom(rng, 2, 2, 2)
        g1 = gradient_data(impulse_response(truth, 12), rom)
        g2 = gradient_data(impulse_response(twin, 12), rom)
        for a, b in zip(g1, g2):
            np.testing.assert_allclose(a, b, rtol=1e-9)


class TestSolvers:
    def test_stein_zero(self, rng):
        X = rng.standard_normal((3, 3))
        rhs = X @ X.T
        np.testing.assert_allclose(solve_stein(np.zeros((3, 3)), rhs), rhs, rtol=1e-15)

    def test_stein_diagonal(self):
        a = np.array([0.5, -0.3, 0.9])
        P = solve_stein(np.diag(a), np.eye(3))
        np.testing.assert_allclose(P, np.diag(1 / (1 - a**2)), rtol=1e-13)

    def test_stein_series_oracle(self, rng):
        A = scaled(rng, 4, 0.8)
        X = rng.standard_normal((4, 2))
        rhs = X @ X.T
        P = solve_stein(A, rhs)
        K = int(np.ceil(np.log(1e-14) / np.log(0.8))) + 40
        series = sum(matrix_power(A, k) @ rhs @ matrix_power(A.T, k) for k in range(K))
        assert np.linalg.norm(A @ P @ A.T + rhs - P) <= 1e-10 * np.linalg.norm(P)
        np.testing.assert_allclose(P, series, rtol=1e-9, atol=1e-12 * np.abs(P).max())

    def test_stein_unstable(self):
        with pytest.raises(SolveFailure):
            solve_stein(np.diag([0.5, 1.2]), np.eye(2))

    def test_sylvester_zero(self, rng):
        rhs = rng.standard_normal((5, 2))
        np.testing.assert_allclose(solve_sylvester(np.zeros((5, 5)), scaled(rng, 2, 0.5), rhs),
                                   rhs, rtol=1e-15)

    def test_sylvester_scalar(self):
        a, ah, b, bh = 0.7, -0.6, 1.3, 0.4
        R = solve_sylvester([[a]], [[ah]], [[b * bh]])
        assert R[0, 0] == pytest.approx(b * bh / (1 - a * ah), rel=1e-14)

    def test_sylvester_series_oracle(self, rng):
        A, Ah = scaled(rng, 6, 0.9), scaled(rng, 3, 0.7)
        rhs = rng.standard_normal((6, 3))
        R = solve_sylvester(A, Ah, rhs)
        series = sum(matrix_power(A, k) @ rhs @ matrix_power(Ah.T, k) for k in range(200))
        assert np.linalg.norm(A @ R @ Ah.T + rhs - R) <= 1e-10 * np.linalg.norm(R)
        np.testing.assert_allclose(R, series, rtol=1e-9, atol=1e-12 * np.abs(R).max())

    def test_sylvester_unstable_pair(self):
        with pytest.raises(SolveFailure):
            solve_sylvester(np.diag([1.1]), np.diag([0.95]), np.ones((1, 1)))


class TestAdjointPowerMap:
    def test_horizon_one(self, rng):
        X = rng.standard_normal((3, 3))
        assert np.array_equal(adjoint_power_map(rng.standard_normal((3, 3)), X, 1), X)

    def test_identity(self, rng):
        X = rng.standard_normal((3, 3))
        np.testing.assert_allclose(adjoint_power_map(np.eye(3), X, 5), 5 * X, rtol=1e-15)

    def test_explicit_powers(self, rng):
        A, X = rng.standard_normal((3, 3)), rng.standard_normal((3, 3))
        ref = sum(matrix_power(A.T, j) @ X @ matrix_power(A.T, 6 - j) for j in range(7))
        np.testing.assert_allclose(adjoint_power_map(A, X, 7), ref, rtol=1e-12, atol=1e-12 * np.abs(ref).max())

    def test_adjoint_of_frechet_derivative(self, rng):
        for L in (1, 2, 5, 9):
            A = scaled(rng, 3, 0.9)
            M, dA = rng.standard_normal((3, 3)), rng.standard_normal((3, 3))
            frechet = sum(matrix_power(A, L - 1 - j) @ dA @ matrix_power(A, j) for j in range(L))
            lhs = np.sum(adjoint_power_map(A, M, L) * dA)
            rhs = np.trace(M.T @ frechet)
            assert lhs == pytest.approx(rhs, rel=1e-10)

    def test_frechet_by_finite_differences(self, rng):
        A, dA = scaled(rng, 3, 0.9), rng.standard_normal((3, 3))
        L, eps = 6, 1e-6
        num = (matrix_power(A + eps * dA, L) - matrix_power(A - eps * dA, L)) / (2 * eps)
        exact = sum(matrix_power(A, L - 1 - j) @ dA @ matrix_power(A, j) for j in range(L))
        np.testing.assert_allclose(num, exact, rtol=1e-6, atol=1e-8)


class TestGradientModel:
    def test_one_step_closed_form(self, rng):
        truth = random_model(rng, 4, 2, 3, rho=0.8)
        rom = ReducedModel(np.zeros((2, 2)), rng.standard_normal((2, 2)), rng.standard_normal((3, 2)))
        g, ws = gradient_model(truth, rom, 1, return_workspace=True)
        Bh = rom.B
        np.testing.assert_allclose(ws.P, Bh @ Bh.T, rtol=1e-14)
        np.testing.assert_allclose(adjoint_power_map(rom.A, ws.M, 1), ws.M)
        np.testing.assert_allclose(g.dC, 2 * (rom.C @ Bh @ Bh.T - truth.C @ truth.B @ Bh.T), rtol=1e-12)

    def test_workspace_residuals(self, rng):
        truth = random_model(rng, 6, 2, 2, rho=0.9)
        rom = random_rom(rng, 3, 2, 2, rho=0.8)
        ws = model_workspace(truth, rom, 10)
        Ah, Bh, _ = rom
        assert np.linalg.norm(ws.P - ws.P.T) <= 1e-12 * np.linalg.norm(ws.P)
        assert np.linalg.eigvalsh(ws.P).min() >= -1e-10 * np.linalg.norm(ws.P)
        assert np.linalg.norm(Ah @ ws.P @ Ah.T + Bh @ Bh.T - ws.P) <= 1e-10 * np.linalg.norm(ws.P)
        res = truth.A @ ws.R @ Ah.T + truth.B @ Bh.T - ws.R
        assert np.linalg.norm(res) <= 1e-10 * np.linalg.norm(ws.R)

    def test_finite_differences(self, rng):
        truth = random_model(rng, 5, 2, 2, rho=0.9)
        rom = random_rom(rng, 2, 2, 2, rho=0.8)
        data = impulse_response(truth, 10)
        assert_blockwise_close(gradient_model(truth, rom, 10), fd_gradient(data, rom), 1e-5)

    def test_matches_data_path(self, rng):
        truth = random_model(rng, 7, 2, 3, rho=0.95)
        rom = random_rom(rng, 3, 2, 3, rho=0.9)
        for L in (1, 2, 8, 33):
            gm = gradient_model(truth, rom, L)
            gd = gradient_data(impulse_response(truth, L), rom)
            assert (gd - gm).norm <= 1e-9 * (1 + gm.norm)

    def test_unstable_rom_rejected(self, rng):
        truth = random_model(rng, 4, 1, 1, rho=0.5)
        rom = random_rom(rng, 2, 1, 1, rho=1.01)
        with pytest.raises(SolveFailure):
            gradient_model(truth, rom, 5)

    def test_unstable_pair_rejected(self, rng):
        truth = random_model(rng, 4, 1, 1, rho=1.5)
        rom = random_rom(rng, 2, 1, 1, rho=0.8)
        with pytest.raises(SolveFailure):
            gradient_model(truth, rom, 5)
