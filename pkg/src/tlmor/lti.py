"""Discrete-time LTI systems over a finite horizon.

Systems have no feedthrough term::

    x[k+1] = A x[k] + B u[k]
    y[k]   = C x[k]

with ``x[0] = 0``. Everything here works on the first ``L`` Markov
parameters ``h[k] = C A^k B``; stability of ``A`` is never required.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionError

#: Largest reduced order accepted by :class:`ReducedModel`.
MAX_REDUCED_ORDER = 64


def _frozen(x, name: str, ndim: int = 2) -> np.ndarray:
    arr = np.array(x, dtype=float, copy=True)
    if arr.ndim != ndim:
        raise DimensionError(f"{name} must be {ndim}-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


def _check_triple(A: np.ndarray, B: np.ndarray, C: np.ndarray) -> None:
    n = A.shape[0]
    if A.shape != (n, n):
        raise DimensionError(f"state matrix must be square, got {A.shape}")
    if n < 1:
        raise DimensionError("state dimension must be positive")
    if B.shape[0] != n or B.shape[1] < 1:
        raise DimensionError(f"input matrix shape {B.shape} incompatible with n={n}")
    if C.shape[1] != n or C.shape[0] < 1:
        raise DimensionError(f"output matrix shape {C.shape} incompatible with n={n}")


@dataclass(frozen=True, eq=False)
class StateSpaceModel:
    """Full-order system ``(A, B, C)``.

    Arrays are copied and made read-only on construction.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        for name in ("A", "B", "C"):
            object.__setattr__(self, name, _frozen(getattr(self, name), name))
        _check_triple(self.A, self.B, self.C)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]

    @property
    def spectral_radius(self) -> float:
        return spectral_radius(self.A)


@dataclass(frozen=True, eq=False)
class ReducedModel:
    """Reduced-order candidate ``(A_hat, B_hat, C_hat)`` of order ``r``.

    Any real triple of matching shapes is admissible; stability of
    ``A`` is checked only by the stability-constrained optimizer.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        for name in ("A", "B", "C"):
            object.__setattr__(self, name, _frozen(getattr(self, name), name))
        _check_triple(self.A, self.B, self.C)
        if self.r > MAX_REDUCED_ORDER:
            raise DimensionError(
                f"reduced order {self.r} exceeds cap {MAX_REDUCED_ORDER}"
            )

    @classmethod
    def from_model(cls, model: StateSpaceModel) -> "ReducedModel":
        """Copy of a full model used as a reduced candidate (r = n)."""
        return cls(model.A, model.B, model.C)

    @property
    def r(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]

    @property
    def spectral_radius(self) -> float:
        return spectral_radius(self.A)

    def __iter__(self):
        return iter((self.A, self.B, self.C))


@dataclass(frozen=True, eq=False)
class ImpulseData:
    """Length-``L`` sequence of ``p x m`` Markov parameters.

    ``samples`` is stored as a read-only ``(L, p, m)`` array.
    """

    samples: np.ndarray

    def __post_init__(self):
        s = _frozen(self.samples, "samples", ndim=3)
        if s.shape[0] < 1:
            raise DimensionError("impulse data needs at least one sample")
        if s.shape[1] < 1 or s.shape[2] < 1:
            raise DimensionError(f"empty sample blocks, shape {s.shape}")
        object.__setattr__(self, "samples", s)

    @property
    def L(self) -> int:
        return self.samples.shape[0]

    @property
    def p(self) -> int:
        return self.samples.shape[1]

    @property
    def m(self) -> int:
        return self.samples.shape[2]

    def __len__(self) -> int:
        return self.L

    def __getitem__(self, k):
        return self.samples[k]

    def truncate(self, L: int) -> "ImpulseData":
        if not 1 <= L <= self.L:
            raise ValueError(f"cannot truncate {self.L} samples to {L}")
        return ImpulseData(self.samples[:L])


def _check_compatible(data: ImpulseData, rom: ReducedModel) -> None:
    if (rom.p, rom.m) != (data.p, data.m):
        raise DimensionError(
            f"ROM is {rom.p}x{rom.m} but data samples are {data.p}x{data.m}"
        )


def markov_parameters(A: np.ndarray, B: np.ndarray, C: np.ndarray, L: int) -> np.ndarray:
    """``(L, p, m)`` array of ``C A^k B`` by forward recursion on ``A^k B``."""
    if L < 1:
        raise ValueError(f"horizon must be positive, got {L}")
    out = np.empty((L, C.shape[0], B.shape[1]))
    v = B
    for k in range(L):
        out[k] = C @ v
        v = A @ v
    return out


def impulse_response(model: StateSpaceModel | ReducedModel, L: int) -> ImpulseData:
    """First ``L`` Markov parameters of ``model``."""
    return ImpulseData(markov_parameters(model.A, model.B, model.C, L))


def _check_input(model, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.ndim == 1 and model.m == 1:
        u = u[:, None]
    if u.ndim != 2 or u.shape[1] != model.m:
        raise DimensionError(f"input must have shape (L, {model.m}), got {u.shape}")
    return u


def simulate(model: StateSpaceModel | ReducedModel, u) -> np.ndarray:
    """Zero-state response to the input sequence ``u`` of shape ``(L, m)``.

    Row ``k`` of the result is ``y[k+1]``, so that the ``L`` inputs
    ``u[0..L-1]`` map to the ``L`` outputs they influence. ``y[0]`` is
    zero for every input and is not returned.
    """
    u = _check_input(model, u)
    L = u.shape[0]
    y = np.empty((L, model.p))
    x = np.zeros(model.A.shape[0])
    for k in range(L):
        x = model.A @ x + model.B @ u[k]
        y[k] = model.C @ x
    return y


def simulate_convolution(data: ImpulseData, u) -> np.ndarray:
    """Same outputs as :func:`simulate`, from Markov parameters alone.

    ``y[k+1] = sum_{j<=k} h[j] u[k-j]``.
    """
    u = np.asarray(u, dtype=float)
    if u.ndim == 1 and data.m == 1:
        u = u[:, None]
    if u.ndim != 2 or u.shape[1] != data.m:
        raise DimensionError(f"input must have shape (L, {data.m}), got {u.shape}")
    L = u.shape[0]
    if L > data.L:
        raise DimensionError(f"need {L} Markov parameters, data has {data.L}")
    h = data.samples
    y = np.zeros((L, data.p))
    for k in range(L):
        # h[0..k] against u[k..0]
        y[k] = np.einsum("jpm,jm->p", h[: k + 1], u[k::-1])
    return y


def tl_h2_norm(data: ImpulseData) -> float:
    """Time-limited h2 norm: root sum of squared Frobenius norms."""
    return float(np.sqrt(np.sum(data.samples**2)))


def tl_h2_error_squared(data: ImpulseData, rom: ReducedModel) -> float:
    _check_compatible(data, rom)
    err = data.samples - markov_parameters(rom.A, rom.B, rom.C, data.L)
    return float(np.sum(err**2))


def tl_h2_error(data: ImpulseData, rom: ReducedModel) -> float:
    """Time-limited h2 distance between the data and the ROM response."""
    return float(np.sqrt(tl_h2_error_squared(data, rom)))


def relative_error(data: ImpulseData, rom: ReducedModel) -> float:
    """``tl_h2_error / tl_h2_norm``; the data norm must be nonzero."""
    nrm = tl_h2_norm(data)
    if nrm == 0.0:
        raise ValueError("relative error undefined for all-zero data")
    return tl_h2_error(data, rom) / nrm


def output_error_bound_check(model: StateSpaceModel, rom: ReducedModel, u, L: int | None = None):
    """Both sides of the output-error bound on a finite horizon.

    Returns ``(lhs, rhs)`` with ``lhs = max_k ||y_k - yhat_k||`` and
    ``rhs = ||H - Hhat||_{h2,L} * ||u||_{l2,L}``; ``lhs <= rhs`` holds
    for every input.
    """
    u = _check_input(model, u)
    if L is None:
        L = u.shape[0]
    u = u[:L]
    if u.shape[0] != L:
        raise DimensionError(f"input has {u.shape[0]} samples, horizon is {L}")
    dy = simulate(model, u) - simulate(rom, u)
    lhs = float(np.max(np.linalg.norm(dy, axis=1)))
    rhs = tl_h2_error(impulse_response(model, L), rom) * float(np.linalg.norm(u))
    return lhs, rhs


def spectral_radius(M) -> float:
    """Largest eigenvalue modulus of a square matrix."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"spectral radius needs a square matrix, got {M.shape}")
    if M.size == 0:
        return 0.0
    with np.errstate(all="ignore"):
        if not np.all(np.isfinite(M)):
            return float("inf")
        return float(np.max(np.abs(np.linalg.eigvals(M))))


def random_stable_system(n: int, m: int, p: int, rho_max: float = 0.99, seed=None) -> StateSpaceModel:
    """Random discrete-time system with ``spectral_radius(A) <= rho_max``.

    ``A`` is an orthogonal similarity of a block-diagonal matrix of
    scaled 2x2 rotations (plus one scalar block when ``n`` is odd).
    Block radii are drawn from ``rho_max * U[0.3, 1)``. ``B`` and ``C``
    have standard normal entries.
    """
    if not 0.0 < rho_max < 1.0:
        raise ValueError(f"rho_max must lie in (0, 1), got {rho_max}")
    if min(n, m, p) < 1:
        raise DimensionError("n, m, p must be positive")
    rng = np.random.default_rng(seed)
    D = np.zeros((n, n))
    for i in range(0, n - 1, 2):
        radius = rho_max * rng.uniform(0.3, 1.0)
        phi = rng.uniform(0.0, np.pi)
        c, s = np.cos(phi), np.sin(phi)
        D[i : i + 2, i : i + 2] = radius * np.array([[c, -s], [s, c]])
    if n % 2:
        D[-1, -1] = rho_max * rng.uniform(-1.0, 1.0)
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    Q = Q * np.sign(np.diag(R))
    A = Q @ D @ Q.T
    B = rng.standard_normal((n, m))
    C = rng.standard_normal((p, n))
    return StateSpaceModel(A, B, C)


def add_noise(data: ImpulseData, sigma: float, seed=None) -> ImpulseData:
    """Add i.i.d. ``N(0, sigma^2)`` noise to every Markov parameter entry.

    Draws come from :func:`numpy.random.default_rng` (PCG64) in
    row-major ``(k, i, j)`` order, so a longer horizon with the same
    seed extends the noise of a shorter one.
    """
    if sigma < 0:
        raise ValueError(f"sigma must be nonnegative, got {sigma}")
    if sigma == 0:
        return data
    rng = np.random.default_rng(seed)
    eta = rng.standard_normal(data.samples.shape)
    return ImpulseData(data.samples + sigma * eta)
