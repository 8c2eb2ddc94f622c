"""Gradient descent with Armijo backtracking on the data-driven objective.

Also hosts the ERA initializer, since the optimizer is normally started
from an ERA realization of the same data.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import BacktrackExhausted, InfeasibleInit, RankDeficient
from .gradients import _data_gradient_arrays
from .lti import ImpulseData, ReducedModel, _check_compatible, spectral_radius, tl_h2_norm
from .objective import objective_arrays

TOL_REACHED = "tol-reached"
MAX_ITERS = "max-iters"
BACKTRACK_EXHAUSTED = "backtrack-exhausted"

#: Smallest admissible ``sigma_r / sigma_1`` in ERA.
ERA_RANK_TOL = 1e-12


@dataclass(frozen=True)
class OptimizerConfig:
    alpha_init: float = 1.0
    beta: float = 0.5
    c1: float = 1e-4
    tol: float = 1e-5
    max_iters: int = 5000
    max_backtracks: int = 60
    stability_checked: bool = False
    seed: int = 0

    def __post_init__(self):
        if not self.alpha_init > 0:
            raise ValueError(f"alpha_init must be positive, got {self.alpha_init}")
        if not 0 < self.beta < 1:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        if not 0 < self.c1 < 1:
            raise ValueError(f"c1 must lie in (0, 1), got {self.c1}")
        if not self.tol >= 0:
            raise ValueError(f"tol must be nonnegative, got {self.tol}")
        if self.max_iters < 1 or self.max_backtracks < 1:
            raise ValueError("max_iters and max_backtracks must be >= 1")


@dataclass(frozen=True)
class IterationRecord:
    """State of iterate ``iter`` and the step taken from it.

    ``step`` and ``backtracks`` describe the move to iterate ``iter + 1``;
    both are NaN / 0 on the final record.
    """

    iter: int
    objective: float
    rel_error: float
    grad_norm: float
    step: float
    backtracks: int
    spectral_radius: float
    wall_ms: float


@dataclass
class ConvergenceTrace:
    records: list[IterationRecord] = field(default_factory=list)
    reason: str = ""
    c1: float = 1e-4

    @property
    def n_steps(self) -> int:
        """Number of accepted descent steps."""
        return sum(1 for r in self.records if not math.isnan(r.step))

    @property
    def objectives(self) -> np.ndarray:
        return np.array([r.objective for r in self.records])

    @property
    def rel_errors(self) -> np.ndarray:
        return np.array([r.rel_error for r in self.records])

    def armijo_violations(self) -> list[int]:
        """Indices of accepted steps whose recorded values break Armijo."""
        bad = []
        for cur, nxt in zip(self.records, self.records[1:]):
            rhs = cur.objective - self.c1 * cur.step * cur.grad_norm**2
            if not nxt.objective <= rhs:
                bad.append(cur.iter)
        return bad

    def __len__(self) -> int:
        return len(self.records)

    def raise_for_reason(self) -> None:
        """Raise :class:`BacktrackExhausted` if the line search gave up."""
        if self.reason == BACKTRACK_EXHAUSTED:
            last = self.records[-1]
            raise BacktrackExhausted(
                f"no Armijo step after backtracking at iteration {last.iter} "
                f"(gradient norm {last.grad_norm:.3e})"
            )


def _hankel(h: np.ndarray, rows: int, cols: int, shift: int) -> np.ndarray:
    L, p, m = h.shape
    H = np.empty((rows * p, cols * m))
    for i in range(rows):
        for j in range(cols):
            H[i * p : (i + 1) * p, j * m : (j + 1) * m] = h[i + j + shift]
    return H


def era_init(data: ImpulseData, r: int) -> ReducedModel:
    """Eigensystem realization of order ``r`` from impulse data.

    The Hankel matrix uses ``q = L // 2`` block rows and
    ``s = L - 1 - q`` block columns so that both it and its one-step
    shift fit inside the data window.

    Raises
    ------
    RankDeficient
        ``sigma_r / sigma_1 <= 1e-12`` (including all-zero data).
    """
    L, p, m = data.samples.shape
    if L < 3:
        raise ValueError(f"ERA needs L >= 3, got {L}")
    q = L // 2
    s = L - 1 - q
    if not 1 <= r <= min(q * p, s * m):
        raise ValueError(f"order r={r} outside [1, {min(q * p, s * m)}] for L={L}")
    H0 = _hankel(data.samples, q, s, 0)
    H1 = _hankel(data.samples, q, s, 1)
    U, sv, Vt = np.linalg.svd(H0, full_matrices=False)
    if not (sv[0] > 0 and sv[r - 1] / sv[0] > ERA_RANK_TOL):
        raise RankDeficient(f"Hankel rank below {r} (singular values {sv[: r + 1]})")
    U, sv, Vt = U[:, :r], sv[:r], Vt[:r]
    isq = 1.0 / np.sqrt(sv)
    sq = np.sqrt(sv)
    A = (isq[:, None] * (U.T @ H1 @ Vt.T)) * isq[None, :]
    B = (sq[:, None] * Vt)[:, :m]
    C = (U * sq[None, :])[:p]
    return ReducedModel(A, B, C)


def random_init(data: ImpulseData, r: int, seed=None) -> ReducedModel:
    """Random stable starting point scaled to the data magnitude."""
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((r, r))
    A *= 0.5 / max(spectral_radius(A), 1e-12)
    scale = tl_h2_norm(data) / math.sqrt(data.L * data.p * data.m)
    g = math.sqrt(scale) if scale > 0 else 1.0
    B = g * rng.standard_normal((r, data.m))
    C = g * rng.standard_normal((data.p, r))
    return ReducedModel(A, B, C)


def minimize(data: ImpulseData, init: ReducedModel, cfg: OptimizerConfig | None = None):
    """Run the Armijo gradient method from ``init``.

    Returns ``(rom, trace)``. Each outer iteration computes the gradient
    at the current iterate, stops if its norm is below ``cfg.tol``, and
    otherwise backtracks from ``cfg.alpha_init`` until

        f(theta - alpha g) <= f(theta) - c1 * alpha * ||g||^2.

    Trial objectives use the C-form when ``p > m`` and the B-form
    otherwise. With ``cfg.stability_checked`` a trial is also rejected
    unless its state matrix has spectral radius below one.

    Running out of backtracks is not an exception: the current iterate is
    returned and ``trace.reason`` is ``"backtrack-exhausted"``.
    """
    cfg = cfg or OptimizerConfig()
    _check_compatible(data, init)
    if cfg.stability_checked:
        rho0 = init.spectral_radius
        if not rho0 < 1.0:
            raise InfeasibleInit(f"initial ROM has spectral radius {rho0:.6g} >= 1")

    h = data.samples
    nrm = tl_h2_norm(data)
    A, B, C = (np.array(X) for X in init)
    trace = ConvergenceTrace(c1=cfg.c1)

    f = objective_arrays(h, A, B, C)
    ell = 1
    t0 = time.perf_counter()
    with np.errstate(over="ignore", invalid="ignore"):
        while True:
            dA, dB, dC, err2 = _data_gradient_arrays(h, A, B, C)
            g2 = float(np.sum(dA**2) + np.sum(dB**2) + np.sum(dC**2))
            gnorm = math.sqrt(g2)
            rel = math.sqrt(err2) / nrm if nrm > 0 else math.nan
            rho = spectral_radius(A)

            def record(step=math.nan, backtracks=0):
                now = time.perf_counter()
                trace.records.append(IterationRecord(
                    iter=ell, objective=f, rel_error=rel, grad_norm=gnorm,
                    step=step, backtracks=backtracks, spectral_radius=rho,
                    wall_ms=1e3 * (now - t0),
                ))

            if gnorm < cfg.tol:
                trace.reason = TOL_REACHED
                record()
                break
            if ell > cfg.max_iters:
                trace.reason = MAX_ITERS
                record()
                break

            alpha = cfg.alpha_init
            accepted = None
            for nb in range(cfg.max_backtracks + 1):
                An, Bn, Cn = A - alpha * dA, B - alpha * dB, C - alpha * dC
                ok = not cfg.stability_checked or spectral_radius(An) < 1.0
                if ok:
                    fn = objective_arrays(h, An, Bn, Cn)
                    if fn <= f - cfg.c1 * alpha * g2:
                        accepted = nb
                        break
                alpha *= cfg.beta

            if accepted is None:
                trace.reason = BACKTRACK_EXHAUSTED
                record()
                break
            record(step=alpha, backtracks=accepted)
            t0 = time.perf_counter()
            A, B, C, f = An, Bn, Cn, fn
            ell += 1

    return ReducedModel(A, B, C), trace


def minimize_stability_checked(data: ImpulseData, init: ReducedModel,
                               cfg: OptimizerConfig | None = None):
    """:func:`minimize` restricted to iterates with ``rho(A_hat) < 1``.

    Raises
    ------
    InfeasibleInit
        ``init`` is not strictly stable.
    """
    cfg = cfg or OptimizerConfig()
    return minimize(data, init, replace(cfg, stability_checked=True))
