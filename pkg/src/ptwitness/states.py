"""Builtin example states."""

from __future__ import annotations

import math
from typing import Sequence

from .errors import ContractError
from .fock import SparseState, phase_rotate

SQRT_HALF = math.sqrt(0.5)


def _amplitudes(c0: complex | None, c1: complex | None, c0sq: float | None) -> tuple[complex, complex]:
    if c0sq is not None:
        if c0 is not None or c1 is not None:
            raise ContractError("give either c0sq or c0/c1, not both")
        if not 0.0 <= c0sq <= 1.0:
            raise ContractError(f"c0sq must lie in [0, 1], got {c0sq}")
        return math.sqrt(c0sq), math.sqrt(1.0 - c0sq)
    return (SQRT_HALF if c0 is None else c0), (SQRT_HALF if c1 is None else c1)


def _finish(state: SparseState, phases: Sequence[float] | None) -> SparseState:
    return state if phases is None else phase_rotate(state, list(phases))


def _even(name: str, n: int) -> int:
    if n < 2 or n % 2:
        raise ContractError(f"{name} needs an even mode count n >= 2, got {n}")
    return n // 2


def noon(n: int, N: int, c0=None, c1=None, c0sq=None, phases=None) -> SparseState:
    """``c0 |N..N, 0..0> + c1 |0..0, N..N>`` over ``n`` modes split in halves."""
    h = _even("noon", n)
    if N < 1:
        raise ContractError("N must be a positive integer")
    a0, a1 = _amplitudes(c0, c1, c0sq)
    state = SparseState.from_kets([((N,) * h + (0,) * h, a0), ((0,) * h + (N,) * h, a1)])
    return _finish(state, phases)


def paper_psi(n: int, c0=None, c1=None, c0sq=None, phases=None) -> SparseState:
    """``c0 |0..0, 1..1> + c1 |2, 1..1, 0..0>``; the first mode of the second branch holds two photons."""
    h = _even("paper_psi", n)
    a0, a1 = _amplitudes(c0, c1, c0sq)
    first = (0,) * h + (1,) * h
    second = (2,) + (1,) * (h - 1) + (0,) * h
    return _finish(SparseState.from_kets([(first, a0), (second, a1)]), phases)


def fixed_excitation(i: int = 0, j: int = 0, m: int = 1, n: int = 1, phases=None) -> SparseState:
    """``(|i>|j+n> + |i+m>|j>)/sqrt(2)``."""
    if min(i, j) < 0 or min(m, n) < 1:
        raise ContractError("need i, j >= 0 and m, n >= 1")
    state = SparseState.from_kets([((i, j + n), SQRT_HALF), ((i + m, j), SQRT_HALF)])
    return _finish(state, phases)


def bell_like(c0=None, c1=None, c0sq=None, phases=None) -> SparseState:
    """``c0 |01> + c1 |10>``."""
    a0, a1 = _amplitudes(c0, c1, c0sq)
    return _finish(SparseState.from_kets([((0, 1), a0), ((1, 0), a1)]), phases)


BUILTINS = {
    "noon": noon,
    "paper_psi": paper_psi,
    "fixed_excitation": fixed_excitation,
    "bell_like": bell_like,
}
