"""scikit-learn style front end.

:class:`TimeLimitedH2Reducer` fits a reduced model to impulse data and
then behaves like any other estimator: ``get_params``/``set_params``,
``clone``, ``predict`` (simulate the ROM) and ``score``.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .lti import ImpulseData, ReducedModel, impulse_response, relative_error, simulate
from .optimizer import OptimizerConfig, era_init, minimize, random_init


def check_impulse_data(X, min_length: int = 1) -> ImpulseData:
    """Coerce ``X`` to :class:`ImpulseData`.

    Accepts an ``ImpulseData`` instance, an ``(L, p, m)`` array, or a
    2-D ``(L, p)`` array which is read as a single-input response.
    """
    if isinstance(X, ImpulseData):
        data = X
    else:
        arr = np.asarray(X, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None, None]
        elif arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3:
            raise ValueError(f"impulse data must be (L, p, m), got shape {arr.shape}")
        data = ImpulseData(arr)
    if data.L < min_length:
        raise ValueError(f"need at least {min_length} samples, got {data.L}")
    return data


def check_input_sequence(U, m: int) -> np.ndarray:
    U = np.asarray(U, dtype=float)
    if U.ndim == 1:
        U = U[:, None]
    if U.ndim != 2 or U.shape[1] != m:
        raise ValueError(f"input sequence must have shape (L, {m}), got {U.shape}")
    if not np.all(np.isfinite(U)):
        raise ValueError("input sequence contains non-finite values")
    return U


class TimeLimitedH2Reducer(BaseEstimator):
    """Reduced-order model fitted by minimizing the time-limited h2 error.

    Parameters
    ----------
    order : int
        Reduced state dimension ``r``.
    init : {"era", "random"}
        Starting point. ``"random"`` draws from ``random_state``.
    alpha_init, beta, c1, tol, max_iters, max_backtracks
        Line-search and stopping parameters, see
        :class:`~tlmor.optimizer.OptimizerConfig`.
    stability_checked : bool
        Keep every iterate strictly stable.
    random_state : int or None

    Attributes
    ----------
    rom_ : ReducedModel
    init_rom_ : ReducedModel
    trace_ : ConvergenceTrace
    n_iter_ : int
        Accepted descent steps.
    """

    def __init__(self, order=2, init="era", alpha_init=1.0, beta=0.5, c1=1e-4,
                 tol=1e-5, max_iters=5000, max_backtracks=60,
                 stability_checked=False, random_state=None):
        self.order = order
        self.init = init
        self.alpha_init = alpha_init
        self.beta = beta
        self.c1 = c1
        self.tol = tol
        self.max_iters = max_iters
        self.max_backtracks = max_backtracks
        self.stability_checked = stability_checked
        self.random_state = random_state

    def _config(self) -> OptimizerConfig:
        return OptimizerConfig(
            alpha_init=self.alpha_init, beta=self.beta, c1=self.c1, tol=self.tol,
            max_iters=self.max_iters, max_backtracks=self.max_backtracks,
            stability_checked=self.stability_checked,
            seed=0 if self.random_state is None else int(self.random_state),
        )

    def fit(self, X, y=None):
        """Fit to impulse data ``X`` (``ImpulseData`` or ``(L, p, m)`` array)."""
        data = check_impulse_data(X)
        cfg = self._config()
        if isinstance(self.init, ReducedModel):
            init = self.init
        elif self.init == "era":
            init = era_init(data, self.order)
        elif self.init == "random":
            init = random_init(data, self.order, self.random_state)
        else:
            raise ValueError(f"init must be 'era', 'random' or a ReducedModel, got {self.init!r}")
        self.init_rom_ = init
        self.rom_, self.trace_ = minimize(data, init, cfg)
        self.n_iter_ = self.trace_.n_steps
        self.n_inputs_ = data.m
        self.n_outputs_ = data.p
        return self

    def predict(self, U):
        """Zero-state ROM output for input sequence ``U`` of shape ``(L, m)``."""
        check_is_fitted(self, "rom_")
        return simulate(self.rom_, check_input_sequence(U, self.n_inputs_))

    def impulse_response(self, L: int) -> ImpulseData:
        check_is_fitted(self, "rom_")
        return impulse_response(self.rom_, L)

    def score(self, X, y=None) -> float:
        """``1 - relative time-limited h2 error`` on impulse data ``X``."""
        check_is_fitted(self, "rom_")
        return 1.0 - relative_error(check_impulse_data(X), self.rom_)
