"""Partial transposition at the level of moments.

For a normally ordered monomial the number-basis matrix elements of
``b^+p b^q`` are real, so transposing mode ``b`` maps it to ``b^+q b^p``
with the coefficient untouched.  Averages over ``rho^PT`` therefore reduce to
ordinary averages over ``rho`` of a relabelled polynomial, and no density
matrix is ever built.
"""

from __future__ import annotations

from typing import Iterable

from .algebra import OperatorPoly
from .errors import ContractError, DimensionError
from .fock import SparseState, expectation


class ModeSet(frozenset):
    """Non-empty set of transposed mode indices (0-based)."""

    def __new__(cls, modes: Iterable[int]):
        modes = frozenset(int(k) for k in modes)
        if not modes:
            raise ContractError("partial transposition needs at least one mode")
        if min(modes) < 0:
            raise DimensionError(f"negative mode index in {sorted(modes)}")
        return super().__new__(cls, modes)

    def check(self, mode_count: int) -> "ModeSet":
        if max(self) >= mode_count:
            raise DimensionError(f"transposed modes {sorted(self)} out of range for {mode_count} modes")
        return self


def pt_map(poly: OperatorPoly, modes: Iterable[int]) -> OperatorPoly:
    """Image of ``poly`` under transposition of ``modes``; an involution."""
    modes = ModeSet(modes).check(poly.mode_count)
    acc = {
        tuple((t, s) if k in modes else (s, t) for k, (s, t) in enumerate(powers)): coeff
        for powers, coeff in poly.terms.items()
    }
    return OperatorPoly(poly.mode_count, acc)


def pt_expectation(state: SparseState, poly: OperatorPoly, modes: Iterable[int]) -> complex:
    """``<poly>`` over the partially transposed state."""
    return expectation(state, pt_map(poly, modes))


def pt_variance(state: SparseState, poly: OperatorPoly, modes: Iterable[int]) -> float:
    """Variance of a Hermitian ``poly`` over ``rho^PT``.

    Unlike an ordinary variance the result can be negative; that alone
    certifies entanglement across the cut.
    """
    if not poly.is_hermitian():
        raise ContractError("pt_variance requires a Hermitian polynomial")
    mean = pt_expectation(state, poly, modes)
    second = pt_expectation(state, poly * poly, modes)
    return (second - mean * mean).real
