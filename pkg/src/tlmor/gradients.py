"""Gradients of the time-limited h2 objective.

Two independent routes:

* :func:`gradient_data` needs only impulse data; this is the production
  path used by the optimizer and its cost does not depend on ``n``.
* :func:`gradient_model` needs the full system and solves a Stein and a
  Sylvester equation. It exists to cross-check the data path.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import SolveFailure
from .lti import ImpulseData, ReducedModel, StateSpaceModel, _check_compatible, spectral_radius
from .objective import input_blocks, output_blocks

#: Spectral radius products must stay below ``1 - STABILITY_MARGIN``.
STABILITY_MARGIN = 1e-8
RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class GradientTriple:
    dA: np.ndarray
    dB: np.ndarray
    dC: np.ndarray

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.dA**2) + np.sum(self.dB**2) + np.sum(self.dC**2)))

    def __iter__(self):
        return iter((self.dA, self.dB, self.dC))

    def __sub__(self, other: "GradientTriple") -> "GradientTriple":
        return GradientTriple(self.dA - other.dA, self.dB - other.dB, self.dC - other.dC)


@dataclass(frozen=True)
class ModelBasedWorkspace:
    """Intermediate quantities of the model-based gradient."""

    P: np.ndarray
    R: np.ndarray
    R_L: np.ndarray
    S_L: np.ndarray
    M: np.ndarray


def _data_gradient_arrays(h, A, B, C):
    """Gradient and squared error on raw arrays.

    Returns ``(dA, dB, dC, err2)`` where ``err2 = sum ||C A^k B - h[k]||^2``.
    """
    L = h.shape[0]
    V = input_blocks(A, B, L)       # A^k B
    W = output_blocks(A, C, L)      # (A^T)^k C^T
    P = np.einsum("kim,kjm->ij", V, V)
    Q = np.einsum("kip,kjp->ij", W, W)
    Z1 = np.einsum("kpm,kim->pi", h, V)
    Z2 = -np.einsum("kpm,kip->mi", h, W)

    E = np.einsum("pi,kim->kpm", C, V) - h
    err2 = float(np.sum(E**2))
    F = np.einsum("pi,kpm->kim", C, E)  # C^T E_k

    # dA = 2 sum_i G_i (A^i B)^T with G_{L-2} = F_{L-1}, G_i = F_{i+1} + A^T G_{i+1}
    dA = np.zeros_like(A)
    if L > 1:
        G = F[L - 1]
        dA = G @ V[L - 2].T
        for i in range(L - 3, -1, -1):
            G = F[i + 1] + A.T @ G
            dA = dA + G @ V[i].T
        dA = 2.0 * dA
    dB = 2.0 * (Q @ B + Z2.T)
    dC = 2.0 * (C @ P - Z1)
    return dA, dB, dC, err2


def gradient_data(data: ImpulseData, rom: ReducedModel) -> GradientTriple:
    """Gradient of the data-driven objective at ``rom``.

    ``dA`` is the double sum over Markov-parameter residuals evaluated
    with one backward recursion, ``O(L)`` block products in total.
    """
    _check_compatible(data, rom)
    dA, dB, dC, _ = _data_gradient_arrays(data.samples, rom.A, rom.B, rom.C)
    return GradientTriple(dA, dB, dC)


def gradient_data_naive(data: ImpulseData, rom: ReducedModel) -> GradientTriple:
    """Literal ``O(L^2)`` double sum for ``dA``; reference implementation."""
    _check_compatible(data, rom)
    A, B, C = rom
    h = data.samples
    L = data.L
    pw = [np.eye(rom.r)]
    for _ in range(L):
        pw.append(pw[-1] @ A)
    dA = np.zeros_like(A)
    for k in range(1, L):
        Ek = C @ pw[k] @ B - h[k]
        for i in range(k):
            dA += pw[k - 1 - i].T @ C.T @ Ek @ B.T @ pw[i].T
    P = sum(pw[k] @ B @ B.T @ pw[k].T for k in range(L))
    Q = sum(pw[k].T @ C.T @ C @ pw[k] for k in range(L))
    Z1 = sum(h[k] @ B.T @ pw[k].T for k in range(L))
    Z2 = -sum(h[k].T @ C @ pw[k] for k in range(L))
    return GradientTriple(2.0 * dA, 2.0 * (Q @ B + Z2.T), 2.0 * (C @ P - Z1))


def solve_stein(A_hat, rhs) -> np.ndarray:
    """Solve ``P = A P A^T + rhs`` by Kronecker vectorization.

    Raises
    ------
    SolveFailure
        ``A`` is not strictly stable, or the solution misses the residual
        tolerance.
    """
    A_hat = np.asarray(A_hat, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    rho = spectral_radius(A_hat)
    if not rho < 1.0 - STABILITY_MARGIN:
        raise SolveFailure(f"Stein equation needs rho(A) < 1, got {rho:.6g}")
    X = _kron_solve(A_hat, A_hat, rhs)
    if np.allclose(rhs, rhs.T, rtol=0, atol=1e-14 * max(np.abs(rhs).max(), 1.0)):
        X = 0.5 * (X + X.T)
    _check_residual(A_hat, A_hat, rhs, X, "Stein")
    return X


def solve_sylvester(A, A_hat, rhs) -> np.ndarray:
    """Solve ``R = A R A_hat^T + rhs`` (``R`` is ``n x r``).

    Dense Kronecker solve; intended for oracle use at modest ``n * r``.
    """
    A = np.asarray(A, dtype=float)
    A_hat = np.asarray(A_hat, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    rho = spectral_radius(A) * spectral_radius(A_hat)
    if not rho < 1.0 - STABILITY_MARGIN:
        raise SolveFailure(f"Sylvester equation needs rho(A) rho(A_hat) < 1, got {rho:.6g}")
    X = _kron_solve(A, A_hat, rhs)
    _check_residual(A, A_hat, rhs, X, "Sylvester")
    return X


def _kron_solve(A1, A2, rhs):
    # row-major vec: vec(A1 X A2^T) = kron(A1, A2) vec(X)
    N = A1.shape[0] * A2.shape[0]
    K = np.eye(N) - np.kron(A1, A2)
    try:
        x = np.linalg.solve(K, rhs.reshape(-1))
    except np.linalg.LinAlgError as exc:
        raise SolveFailure(f"singular vectorized system: {exc}") from exc
    return x.reshape(rhs.shape)


def _check_residual(A1, A2, rhs, X, what):
    res = np.linalg.norm(A1 @ X @ A2.T + rhs - X)
    scale = np.linalg.norm(X)
    if not res <= RESIDUAL_TOL * scale and res != 0.0:
        raise SolveFailure(f"{what} residual {res:.3e} exceeds {RESIDUAL_TOL:g} * {scale:.3e}")


def adjoint_power_map(A_hat, X, L: int) -> np.ndarray:
    """``sum_{j=0}^{L-1} (A^T)^j X (A^T)^(L-1-j)``.

    This is the adjoint of the Frechet derivative of ``A -> A^L``.
    Evaluated by the recursion ``T_1 = X``,
    ``T_{k+1} = A^T T_k + X (A^T)^k``.
    """
    if L < 1:
        raise ValueError(f"L must be positive, got {L}")
    At = np.asarray(A_hat, dtype=float).T
    X = np.asarray(X, dtype=float)
    T = X
    pw = np.eye(At.shape[0])
    for _ in range(1, L):
        pw = pw @ At
        T = At @ T + X @ pw
    return T


def model_workspace(truth: StateSpaceModel, rom: ReducedModel, L: int) -> ModelBasedWorkspace:
    if (truth.p, truth.m) != (rom.p, rom.m):
        raise ValueError("truth and ROM have different input/output dimensions")
    A, B, C = truth.A, truth.B, truth.C
    Ah, Bh, Ch = rom
    P = solve_stein(Ah, Bh @ Bh.T)
    R = solve_sylvester(A, Ah, B @ Bh.T)
    V = input_blocks(Ah, Bh, L)
    W = output_blocks(Ah, Ch, L)
    R_L = np.zeros((truth.n, rom.r))
    S_L = np.zeros((truth.n, rom.r))
    x = B
    y = C.T
    for k in range(L):
        R_L += x @ V[k].T
        S_L -= y @ W[k].T
        x = A @ x
        y = A.T @ y
    # y now holds (A^T)^L C^T
    AhLt = np.linalg.matrix_power(Ah.T, L)
    M = R.T @ y @ Ch - P @ AhLt @ Ch.T @ Ch
    return ModelBasedWorkspace(P=P, R=R, R_L=R_L, S_L=S_L, M=M)


def gradient_model(truth: StateSpaceModel, rom: ReducedModel, L: int,
                   return_workspace: bool = False):
    """Gradient of the time-limited objective from the full system.

    Requires ``rho(A_hat) < 1`` and ``rho(A) rho(A_hat) < 1`` so that the
    infinite-horizon ``P`` and ``R`` exist.

    The horizon-endpoint terms enter ``dA`` as ``2 <M^T, d(A_hat^L)>``,
    i.e. through ``adjoint_power_map(A_hat, M.T, L)``.

    Raises
    ------
    SolveFailure
        Spectral-radius precondition or residual check failed.
    """
    ws = model_workspace(truth, rom, L)
    A, B, C = truth.A, truth.B, truth.C
    Ah, Bh, Ch = rom
    W = output_blocks(Ah, Ch, L)
    V = input_blocks(Ah, Bh, L)
    Q_L = np.einsum("kip,kjp->ij", W, W)
    P_L = np.einsum("kim,kjm->ij", V, V)
    dA = 2.0 * (Q_L @ Ah @ ws.P + ws.S_L.T @ A @ ws.R + adjoint_power_map(Ah, ws.M.T, L))
    dB = 2.0 * (Q_L @ Bh + ws.S_L.T @ B)
    dC = 2.0 * (Ch @ P_L - C @ ws.R_L)
    g = GradientTriple(dA, dB, dC)
    if return_workspace:
        return g, ws
    return g
