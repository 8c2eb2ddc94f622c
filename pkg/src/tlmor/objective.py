"""Data-driven time-limited h2 objective.

Only :class:`~tlmor.lti.ImpulseData` and :class:`~tlmor.lti.ReducedModel`
enter these functions; nothing here can see the full-order system.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lti import ImpulseData, ReducedModel, _check_compatible

FORMS = ("C-form", "B-form", "auto")


@dataclass(frozen=True)
class FiniteGramians:
    """Time-limited reachability (``P``) and observability (``Q``) sums."""

    P: np.ndarray
    Q: np.ndarray


@dataclass(frozen=True)
class DataCrossTerms:
    """``Z1`` (p x r) and ``Z2`` (m x r): data-side shadows of the cross Gramians."""

    Z1: np.ndarray
    Z2: np.ndarray


def input_blocks(A: np.ndarray, B: np.ndarray, L: int) -> np.ndarray:
    """``(L, r, m)`` stack of ``A^k B`` by forward recursion."""
    V = np.empty((L,) + B.shape)
    v = B
    for k in range(L):
        V[k] = v
        v = A @ v
    return V


def output_blocks(A: np.ndarray, C: np.ndarray, L: int) -> np.ndarray:
    """``(L, r, p)`` stack of ``(A^T)^k C^T``."""
    return input_blocks(A.T, C.T, L)


def _sym(X):
    return 0.5 * (X + X.T)


def _check_horizon(L):
    if L < 1:
        raise ValueError(f"horizon must be positive, got {L}")


def finite_gramians(rom: ReducedModel, L: int) -> FiniteGramians:
    _check_horizon(L)
    V = input_blocks(rom.A, rom.B, L)
    W = output_blocks(rom.A, rom.C, L)
    P = _sym(np.einsum("kim,kjm->ij", V, V))
    Q = _sym(np.einsum("kip,kjp->ij", W, W))
    return FiniteGramians(P, Q)


def data_cross_terms(data: ImpulseData, rom: ReducedModel) -> DataCrossTerms:
    """``Z1 = sum h[k] (A^k B)^T`` and ``Z2 = -sum h[k]^T C A^k``."""
    _check_compatible(data, rom)
    h = data.samples
    V = input_blocks(rom.A, rom.B, data.L)
    W = output_blocks(rom.A, rom.C, data.L)
    Z1 = np.einsum("kpm,kim->pi", h, V)
    Z2 = -np.einsum("kpm,kip->mi", h, W)
    return DataCrossTerms(Z1, Z2)


def resolve_form(form: str, p: int, m: int) -> str:
    if form not in FORMS:
        raise ValueError(f"form must be one of {FORMS}, got {form!r}")
    if form == "auto":
        return "C-form" if p > m else "B-form"
    return form


def _c_form(h, A, B, C):
    V = input_blocks(A, B, h.shape[0])
    P = np.einsum("kim,kjm->ij", V, V)
    Z1 = np.einsum("kpm,kim->pi", h, V)
    return np.sum((C @ P) * C) - 2.0 * np.sum(Z1 * C)


def _b_form(h, A, B, C):
    W = output_blocks(A, C, h.shape[0])
    Q = np.einsum("kip,kjp->ij", W, W)
    Z2 = -np.einsum("kpm,kip->mi", h, W)
    return np.sum(B * (Q @ B)) + 2.0 * np.sum(Z2.T * B)


def objective_arrays(h: np.ndarray, A, B, C, form: str = "auto") -> float:
    """Objective on raw arrays; used inside the line search."""
    L, p, m = h.shape
    if resolve_form(form, p, m) == "C-form":
        return float(_c_form(h, A, B, C))
    return float(_b_form(h, A, B, C))


def objective_value(data: ImpulseData, rom: ReducedModel, form: str = "auto") -> float:
    """Data-driven objective ``f = ||H - Hhat||^2 - ||H||^2``.

    Parameters
    ----------
    data : ImpulseData
    rom : ReducedModel
    form : {"C-form", "B-form", "auto"}
        ``C-form`` evaluates ``tr(C P C^T) - 2 tr(Z1 C^T)``, ``B-form``
        evaluates ``tr(B^T Q B) + 2 tr(Z2 B)``. ``auto`` picks ``C-form``
        only when ``p > m``; ``p == m`` resolves to ``B-form``.
    """
    _check_compatible(data, rom)
    return objective_arrays(data.samples, rom.A, rom.B, rom.C, form)
