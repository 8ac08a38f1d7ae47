"""Separability and Bell-type inequalities evaluated on sparse pure states.

Every witness returns a :class:`WitnessReport`.  ``margin`` is the signed
slack of the inequality, oriented so that a negative margin always means the
inequality fails: ``lhs - rhs`` for inequalities of the form ``lhs >= rhs``
and ``rhs - lhs`` for the upper-bound forms (CFRD and its partition variants).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .algebra import (
    BosonMonomial,
    OperatorPoly,
    anticommutator,
    build_named,
    commutator,
    dagger,
    quadrature_p,
    quadrature_x,
    word_operators,
)
from .errors import CapacityError, ContractError, DimensionError
from .fock import SparseState, expectation, expectation_of_product, variance
from .oracle import is_npt
from .pt import ModeSet, pt_expectation

DEFAULT_TOL = 1e-9
ENUMERATION_CAP = 24
NEGATIVE_PT_VARIANCE = "negative PT variance"


@dataclass(frozen=True)
class WitnessReport:
    witness_name: str
    lhs: float
    rhs: float
    margin: float
    violated: bool
    params: Mapping[str, Any] = field(default_factory=dict)
    reason: str | None = None


def _report(name, lhs, rhs, params, *, upper=False, tol=DEFAULT_TOL, reason=None) -> WitnessReport:
    lhs, rhs = float(lhs), float(rhs)
    if not (math.isfinite(lhs) and math.isfinite(rhs)):
        raise ContractError(f"{name}: non-finite sides lhs={lhs}, rhs={rhs}")
    margin = rhs - lhs if upper else lhs - rhs
    eps = tol * max(1.0, abs(lhs), abs(rhs))
    return WitnessReport(name, lhs, rhs, margin, margin < -eps, dict(params), reason)


def _two_mode(state: SparseState, name: str) -> None:
    if state.mode_count != 2:
        raise DimensionError(f"{name} needs a two-mode state, got {state.mode_count} modes")


def _positive(name: str, **values: int) -> None:
    for key, v in values.items():
        if int(v) != v or v < 1:
            raise ContractError(f"{name}: {key} must be a positive integer, got {v}")


def _mean(state: SparseState, poly: OperatorPoly) -> float:
    return expectation(state, poly).real


# -- two-mode criteria ---------------------------------------------------------

def duan_epr(state: SparseState, r: float = 1.0, *, tol: float = DEFAULT_TOL) -> WitnessReport:
    """EPR-type sum of variances of ``u = r x_a + x_b/r``, ``v = r p_a - p_b/r``."""
    _two_mode(state, "duan_epr")
    if r == 0 or not math.isfinite(r):
        raise ContractError("duan_epr: r must be a nonzero real")
    u = quadrature_x(2, 0) * r + quadrature_x(2, 1) * (1.0 / r)
    v = quadrature_p(2, 0) * r - quadrature_p(2, 1) * (1.0 / r)
    lhs = variance(state, u) + variance(state, v)
    return _report("duan_epr", lhs, r * r + 1.0 / (r * r), {"r": r}, tol=tol)


def duan_epr_scan(state: SparseState, rs: Sequence[float] | None = None, *, tol: float = DEFAULT_TOL) -> WitnessReport:
    """Best (most negative margin) Duan report over ``r``; default 41 log-spaced points in [0.1, 10]."""
    grid = np.logspace(-1.0, 1.0, 41) if rs is None else rs
    reports = [duan_epr(state, float(r), tol=tol) for r in grid]
    return min(reports, key=lambda rep: rep.margin)


def hz_kvariance(state: SparseState, axis: str = "x", *, tol: float = DEFAULT_TOL) -> WitnessReport:
    _two_mode(state, "hz_kvariance")
    if axis not in ("x", "y"):
        raise ContractError(f"hz_kvariance: axis must be 'x' or 'y', got {axis!r}")
    lhs = variance(state, build_named(f"K_{axis}"))
    return _report("hz_kvariance", lhs, 0.25, {"axis": axis}, tol=tol)


def su2_hur(state: SparseState, *, tol: float = DEFAULT_TOL) -> WitnessReport:
    _two_mode(state, "su2_hur")
    vx = variance(state, build_named("K_x"))
    vy = variance(state, build_named("K_y"))
    diff = 2.0 * _mean(state, build_named("J_z"))
    return _report("su2_hur", (vx - 0.25) * (vy - 0.25), diff * diff / 16.0, {}, tol=tol)


def jykz(state: SparseState, *, tol: float = DEFAULT_TOL) -> WitnessReport:
    _two_mode(state, "jykz")
    lhs = (variance(state, build_named("J_y")) + 0.25) * variance(state, build_named("K_z"))
    jx = _mean(state, build_named("J_x"))
    return _report("jykz", lhs, 0.25 * jx * jx, {}, tol=tol)


def lh_hur(state: SparseState, m: int = 1, n: int = 1, *, tol: float = DEFAULT_TOL) -> WitnessReport:
    _two_mode(state, "lh_hur")
    _positive("lh_hur", m=m, n=n)
    n_mn = _mean(state, build_named("N_mn", m, n))
    hx = variance(state, build_named("H_x", m, n)) - n_mn
    hy = variance(state, build_named("H_y", m, n)) - n_mn
    lz = abs(expectation(state, build_named("L_z", m, n)))
    return _report("lh_hur", hx * hy, 0.25 * lz * lz, {"m": m, "n": n}, tol=tol)


def nplus(state: SparseState, m: int = 1, n: int = 1, *, tol: float = DEFAULT_TOL) -> WitnessReport:
    _two_mode(state, "nplus")
    _positive("nplus", m=m, n=n)
    n_mn = _mean(state, build_named("N_mn", m, n))
    lhs = (variance(state, build_named("L_y", m, n)) + n_mn) * variance(state, build_named("N_plus", m, n))
    lx = _mean(state, build_named("L_x", m, n))
    return _report("nplus", lhs, 0.25 * lx * lx, {"m": m, "n": n}, tol=tol)


def general_multimode(
    state: SparseState, word: BosonMonomial, modes: Iterable[int], *, tol: float = DEFAULT_TOL
) -> WitnessReport:
    """Uncertainty-relation condition built from an arbitrary normally ordered word."""
    if word.mode_count != state.mode_count:
        raise DimensionError(f"word has {word.mode_count} modes, state has {state.mode_count}")
    mode_set = ModeSet(modes).check(state.mode_count)
    ops = word_operators(word, frozenset(mode_set))
    big_n = _mean(state, ops.N)
    hx = variance(state, ops.H_x) - big_n
    hy = variance(state, ops.H_y) - big_n
    lz = abs(expectation(state, ops.L_z))
    params = {"word": str(word), "modes": tuple(sorted(mode_set))}
    return _report("general_multimode", hx * hy, 0.25 * lz * lz, params, tol=tol)


# -- CFRD family ---------------------------------------------------------------

ANNIHILATING = "annihilating"
CREATING = "creating"


@dataclass(frozen=True)
class ZFactor:
    """Local observable ``a^m e^{-i theta}`` (annihilating) or ``a^+m e^{i theta}`` (creating)."""

    kind: str
    power: int
    phase: float = 0.0

    def __post_init__(self):
        if self.kind not in (ANNIHILATING, CREATING):
            raise ContractError(f"Z kind must be {ANNIHILATING!r} or {CREATING!r}, got {self.kind!r}")
        if int(self.power) != self.power or self.power < 1:
            raise ContractError(f"Z power must be a positive integer, got {self.power}")

    @property
    def powers(self) -> tuple[int, int]:
        return (0, self.power) if self.kind == ANNIHILATING else (self.power, 0)

    @property
    def coeff(self) -> complex:
        sign = -1.0 if self.kind == ANNIHILATING else 1.0
        return cmath.exp(1j * sign * self.phase)

    def label(self) -> str:
        return f"{'a' if self.kind == ANNIHILATING else 'c'}{self.power}@{self.phase:.12g}"


@dataclass(frozen=True)
class ZSpec:
    factors: tuple[ZFactor, ...]

    def __post_init__(self):
        if not self.factors:
            raise ContractError("ZSpec needs at least one mode")

    @classmethod
    def split(
        cls,
        mode_count: int,
        annihilating: int | None = None,
        powers: int | Sequence[int] = 1,
        phases: float | Sequence[float] = 0.0,
    ) -> "ZSpec":
        """First ``annihilating`` modes (default half) get ``a^m``, the rest ``a^+m``."""
        j = mode_count // 2 if annihilating is None else int(annihilating)
        if not 0 <= j <= mode_count:
            raise ContractError(f"annihilating count {j} out of range for {mode_count} modes")
        pw = [powers] * mode_count if isinstance(powers, int) else list(powers)
        ph = [float(phases)] * mode_count if isinstance(phases, (int, float)) else [float(p) for p in phases]
        if len(pw) != mode_count or len(ph) != mode_count:
            raise DimensionError("powers/phases must have one entry per mode")
        return cls(tuple(ZFactor(ANNIHILATING if k < j else CREATING, pw[k], ph[k]) for k in range(mode_count)))

    @property
    def mode_count(self) -> int:
        return len(self.factors)

    def label(self) -> str:
        return "|".join(f.label() for f in self.factors)

    def product(self) -> OperatorPoly:
        """``prod_k Z_k`` as a single monomial."""
        coeff = 1.0 + 0j
        for f in self.factors:
            coeff *= f.coeff
        return OperatorPoly(self.mode_count, {tuple(f.powers for f in self.factors): coeff})

    def local(self, mode: int) -> OperatorPoly:
        powers = [(0, 0)] * self.mode_count
        powers[mode] = self.factors[mode].powers
        return OperatorPoly(self.mode_count, {tuple(powers): self.factors[mode].coeff})

    def normal_factor(self, mode: int) -> OperatorPoly:
        """``Z_k^+ Z_k``."""
        z = self.local(mode)
        return dagger(z) * z

    def antinormal_factor(self, mode: int) -> OperatorPoly:
        """``Z_k Z_k^+``."""
        z = self.local(mode)
        return z * dagger(z)


def _check_z(state: SparseState, z: ZSpec) -> None:
    if z.mode_count != state.mode_count:
        raise DimensionError(f"ZSpec has {z.mode_count} modes, state has {state.mode_count}")


@dataclass(frozen=True)
class Partition:
    """Split of the modes into normally ordered and antinormally ordered groups."""

    normal: frozenset[int]
    antinormal: frozenset[int]

    @classmethod
    def from_antinormal(cls, mode_count: int, antinormal: Iterable[int]) -> "Partition":
        a = frozenset(int(k) for k in antinormal)
        return cls(frozenset(range(mode_count)) - a, a).check(mode_count)

    def check(self, mode_count: int) -> "Partition":
        if self.normal & self.antinormal:
            raise ContractError(f"groups overlap on modes {sorted(self.normal & self.antinormal)}")
        if self.normal | self.antinormal != frozenset(range(mode_count)):
            raise DimensionError(f"partition does not cover modes 0..{mode_count - 1}")
        return self

    def label(self) -> str:
        return "N{" + ",".join(map(str, sorted(self.normal))) + "}A{" + ",".join(map(str, sorted(self.antinormal))) + "}"


def _lhs_cfrd(state: SparseState, z: ZSpec) -> float:
    return abs(expectation(state, z.product())) ** 2


def cfrd(state: SparseState, z: ZSpec, *, tol: float = DEFAULT_TOL) -> WitnessReport:
    """CFRD Bell inequality ``|<prod Z>|^2 <= 2^-n <prod (Z^+Z + ZZ^+)>``.

    The right side is the expectation of one n-fold operator product.  The
    product is applied factor by factor instead of being multiplied out into
    its ``2^n`` monomials, which gives the same number without the memory cost.
    """
    _check_z(state, z)
    n = z.mode_count
    if n > ENUMERATION_CAP:
        raise CapacityError(f"cfrd supports at most {ENUMERATION_CAP} modes, got {n}")
    factors = [z.normal_factor(k) + z.antinormal_factor(k) for k in range(n)]
    rhs = expectation_of_product(state, factors).real / 2.0 ** n
    return _report("cfrd", _lhs_cfrd(state, z), rhs, {"z": z.label()}, upper=True, tol=tol)


def cfrd_rhs_polynomial(z: ZSpec) -> OperatorPoly:
    """The fully multiplied-out CFRD right-hand operator; exponential in the mode count."""
    n = z.mode_count
    total = None
    for k in range(n):
        f = z.normal_factor(k) + z.antinormal_factor(k)
        total = f if total is None else total * f
    return total * (0.5 ** n)


def _diag_value(poly: OperatorPoly, mode: int, occ: int) -> float:
    """``<n|poly|n>`` for a single-mode diagonal polynomial acting on ``mode``."""
    total = 0j
    for powers, coeff in poly.terms.items():
        s, t = powers[mode]
        if s != t or any(p != (0, 0) for k, p in enumerate(powers) if k != mode):
            raise ContractError("partition factors must be diagonal in the number basis")
        if t <= occ:
            total += coeff * math.perm(occ, t)
    return total.real


def partition_values(state: SparseState, z: ZSpec) -> np.ndarray:
    """Value of every partition, indexed by the bitmask of the antinormal group."""
    _check_z(state, z)
    n = z.mode_count
    if n > ENUMERATION_CAP:
        raise CapacityError(f"partition enumeration capped at {ENUMERATION_CAP} modes, got {n}")
    normal = [z.normal_factor(k) for k in range(n)]
    anti = [z.antinormal_factor(k) for k in range(n)]
    total = np.zeros(1 << n)
    for ket, amp in state.terms.items():
        vals = np.array([abs(amp) ** 2])
        for k in range(n):
            vals = np.concatenate([vals * _diag_value(normal[k], k, ket[k]), vals * _diag_value(anti[k], k, ket[k])])
        total += vals
    return total


def min_partition(state: SparseState, z: ZSpec) -> tuple[Partition, float]:
    """Exhaustive minimum of ``<prod_N Z^+Z prod_A ZZ^+>`` over all ``2^n`` splits.

    Ties go to the smallest antinormal group, then to the lexicographically
    smallest sorted tuple of its modes.
    """
    values = partition_values(state, z)
    n = z.mode_count
    best = float(values.min())
    candidates = np.flatnonzero(values <= best + 1e-12 * max(1.0, abs(best)))
    counts = np.array([bin(int(c)).count("1") for c in candidates])
    smallest = candidates[counts == counts.min()]
    groups = [tuple(k for k in range(n) if (int(mask) >> k) & 1) for mask in smallest]
    chosen = min(groups)
    return Partition.from_antinormal(n, chosen), best


def sep_sum(state: SparseState, z: ZSpec, part: Partition, *, tol: float = DEFAULT_TOL) -> WitnessReport:
    """Sum-form separability condition ``|<prod Z>|^2 <= <prod_N Z^+Z prod_A ZZ^+>``."""
    _check_z(state, z)
    part.check(z.mode_count)
    factors = [z.antinormal_factor(k) if k in part.antinormal else z.normal_factor(k) for k in range(z.mode_count)]
    rhs = expectation_of_product(state, factors).real
    params = {"z": z.label(), "partition": part.label()}
    return _report("sep_sum", _lhs_cfrd(state, z), rhs, params, upper=True, tol=tol)


def hermitian_pair(z: ZSpec, part: Partition) -> tuple[OperatorPoly, OperatorPoly, OperatorPoly]:
    """``P = prod_N Z_k prod_A Z_k^{+*}`` and ``L1 = P + P^+``, ``L2 = i(P - P^+)``.

    ``Z^{+*}`` of a number-basis monomial keeps the phase and exchanges the
    creation and annihilation powers.
    """
    part.check(z.mode_count)
    coeff = 1.0 + 0j
    powers = []
    for k, f in enumerate(z.factors):
        coeff *= f.coeff
        s, t = f.powers
        powers.append((t, s) if k in part.antinormal else (s, t))
    p = OperatorPoly(z.mode_count, {tuple(powers): coeff})
    pd = dagger(p)
    return p, p + pd, (p - pd) * 1j


@dataclass(frozen=True)
class _PTMoments:
    v1: float
    v2: float
    comm: complex
    cov: float
    phase_term: float


def _pt_moments(state: SparseState, z: ZSpec, part: Partition) -> _PTMoments:
    p, l1, l2 = hermitian_pair(z, part)
    modes = part.antinormal

    def mean(poly: OperatorPoly) -> complex:
        return pt_expectation(state, poly, modes) if modes else expectation(state, poly)

    m1, m2 = mean(l1).real, mean(l2).real
    v1 = mean(l1 * l1).real - m1 * m1
    v2 = mean(l2 * l2).real - m2 * m2
    comm = mean(commutator(l1, l2))
    cov = mean(anticommutator(l1, l2)).real - 2.0 * m1 * m2
    mp = mean(p)
    phase_term = (mean(p * p) - mp * mp).real
    return _PTMoments(v1, v2, comm, cov, phase_term)


def _negative_variance(mom: _PTMoments, tol: float) -> bool:
    eps = tol * max(1.0, abs(mom.v1), abs(mom.v2))
    return mom.v1 < -eps or mom.v2 < -eps


def _pf_srur_params(z: ZSpec, part: Partition, mom: _PTMoments) -> dict:
    return {"z": z.label(), "partition": part.label(), "var1": mom.v1, "var2": mom.v2, "phase_term": mom.phase_term}


def sep_product(state: SparseState, z: ZSpec, part: Partition, *, tol: float = DEFAULT_TOL) -> WitnessReport:
    """Product-form uncertainty relation ``dL1 dL2 >= |<[L1, L2]>|/2`` under PT on the antinormal group.

    ``phase_term`` in the params is ``Re(<P^2> - <P>^2)`` under PT; the product
    form gains over the sum form only when it is nonzero.
    """
    _check_z(state, z)
    mom = _pt_moments(state, z, part)
    params = _pf_srur_params(z, part, mom)
    if _negative_variance(mom, tol):
        return _report("sep_product", min(mom.v1, mom.v2), 0.0, params, tol=tol, reason=NEGATIVE_PT_VARIANCE)
    lhs = math.sqrt(max(mom.v1, 0.0) * max(mom.v2, 0.0))
    return _report("sep_product", lhs, 0.5 * abs(mom.comm), params, tol=tol)


def sep_srur(state: SparseState, z: ZSpec, part: Partition, *, tol: float = DEFAULT_TOL) -> WitnessReport:
    """Schrodinger-Robertson relation under PT; adds the symmetrised covariance to the bound."""
    _check_z(state, z)
    mom = _pt_moments(state, z, part)
    params = _pf_srur_params(z, part, mom)
    if _negative_variance(mom, tol):
        return _report("sep_srur", min(mom.v1, mom.v2), 0.0, params, tol=tol, reason=NEGATIVE_PT_VARIANCE)
    rhs = 0.25 * abs(mom.comm) ** 2 + 0.25 * mom.cov ** 2
    return _report("sep_srur", mom.v1 * mom.v2, rhs, params, tol=tol)


def noon_phase_condition(c0: complex, c1: complex, thetas: Sequence[float]) -> float:
    """``Re{c0 c1* prod_{k<=n/2} exp(-2i(theta_k - theta_{k+n/2}))}`` for the N00N configuration."""
    n = len(thetas)
    if n % 2:
        raise ContractError("N00N phase condition needs an even number of modes")
    angle = sum(thetas[k] - thetas[k + n // 2] for k in range(n // 2))
    return (c0 * complex(c1).conjugate() * cmath.exp(-2j * angle)).real


# -- Peres-conjecture instance check ------------------------------------------

@dataclass(frozen=True)
class PeresReport:
    cfrd_violated: bool
    partition: Partition | None = None
    partition_value: float | None = None
    partition_nontrivial: bool | None = None
    sep_sum_violated: bool | None = None
    npt_confirmed: bool | None = None
    min_eig: float | None = None
    oracle_method: str | None = None

    @property
    def holds(self) -> bool:
        """CFRD violation implies the sum-form and NPT verdicts (vacuous otherwise)."""
        if not self.cfrd_violated:
            return True
        return bool(self.partition_nontrivial and self.sep_sum_violated and self.npt_confirmed is not False)


def peres_check(
    state: SparseState,
    z: ZSpec,
    *,
    tol: float = DEFAULT_TOL,
    oracle_method: str = "auto",
) -> PeresReport:
    """Follow a CFRD violation down to the sum-form condition and the NPT oracle.

    ``npt_confirmed`` is None when the oracle cannot be run within its caps.
    """
    bell = cfrd(state, z, tol=tol)
    if not bell.violated:
        return PeresReport(False)
    part, value = min_partition(state, z)
    nontrivial = bool(part.normal) and bool(part.antinormal)
    sep = sep_sum(state, z, part, tol=tol)
    npt = lam = method = None
    if part.antinormal:
        try:
            verdict = is_npt(state, part.antinormal, method=oracle_method)
            npt, lam, method = verdict.npt, verdict.min_eig, verdict.method
        except CapacityError:
            pass
    return PeresReport(True, part, value, nontrivial, sep.violated, npt, lam, method)
