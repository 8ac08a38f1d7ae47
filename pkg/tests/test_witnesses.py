import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import dense
from conftest import SQ, random_state, sparse_states
from ptwitness import (
    BosonMonomial,
    CapacityError,
    ContractError,
    DimensionError,
    Partition,
    SparseState,
    ZFactor,
    ZSpec,
    cfrd,
    duan_epr,
    expectation,
    general_multimode,
    hz_kvariance,
    jykz,
    lh_hur,
    min_partition,
    nplus,
    peres_check,
    sep_product,
    sep_srur,
    sep_sum,
    su2_hur,
    tensor,
)
from ptwitness.fock import phase_rotate
from ptwitness.oracle import is_npt
from ptwitness.states import noon
from ptwitness.witnesses import (
    ANNIHILATING,
    CREATING,
    NEGATIVE_PT_VARIANCE,
    cfrd_rhs_polynomial,
    duan_epr_scan,
    noon_phase_condition,
    partition_values,
)

PHI = SparseState.from_kets([((0, 0), SQ), ((1, 1), SQ)])


def two_mode_dense(state, cut=6):
    dims = (cut, cut)
    a, b = dense.annihilators(dims)
    return dense.vector(dict(state.terms), dims), a, b


def report_close(rep, lhs, rhs, tol=1e-10):
    assert rep.lhs == pytest.approx(lhs, abs=tol)
    assert rep.rhs == pytest.approx(rhs, abs=tol)


# -- report convention ---------------------------------------------------------

def test_violation_threshold_is_relative(bell):
    rep = jykz(bell)
    assert rep.margin == pytest.approx(-1 / 16)
    loose = jykz(bell, tol=1.0)
    assert not loose.violated


def test_saturation_is_not_violation():
    rep = hz_kvariance(SparseState.basis(0, 0), "x")
    assert rep.margin == pytest.approx(0, abs=1e-15) and not rep.violated


# -- two-mode witnesses --------------------------------------------------------

def _duan_dense(state, r):
    psi, a, b = two_mode_dense(state)
    xa, xb = (a + a.conj().T) / math.sqrt(2), (b + b.conj().T) / math.sqrt(2)
    pa, pb = 1j * (a.conj().T - a) / math.sqrt(2), 1j * (b.conj().T - b) / math.sqrt(2)
    u, v = r * xa + xb / r, r * pa - pb / r
    return dense.variance(psi, u) + dense.variance(psi, v)


def test_duan_examples():
    rep = duan_epr(SparseState.basis(0, 0))
    report_close(rep, 2, 2)
    assert not rep.violated
    rep = duan_epr(SparseState.basis(0, 1))
    report_close(rep, 4, 2)
    # the squeezing-like correlation needs the relative minus sign to lower u and v
    plus = SparseState.from_kets([((0, 0), 1.0), ((1, 1), 0.5)])
    minus = SparseState.from_kets([((0, 0), 1.0), ((1, 1), -0.5)])
    assert duan_epr(plus).lhs == pytest.approx(_duan_dense(plus, 1.0)) == pytest.approx(4.4)
    rep = duan_epr(minus)
    assert rep.lhs == pytest.approx(_duan_dense(minus, 1.0)) == pytest.approx(1.2)
    assert rep.violated and is_npt(minus, {1}).npt


def test_duan_r_dependence(rng):
    s = random_state(rng, 2, 3)
    for r in (0.3, 1.7):
        rep = duan_epr(s, r)
        assert rep.lhs == pytest.approx(_duan_dense(s, r), abs=1e-10)
        assert rep.rhs == pytest.approx(r * r + 1 / (r * r))
    with pytest.raises(ContractError):
        duan_epr(s, 0.0)
    with pytest.raises(DimensionError):
        duan_epr(SparseState.basis(0, 0, 0))


def test_duan_scan_picks_minimum():
    minus = SparseState.from_kets([((0, 0), 1.0), ((1, 1), -0.5)])
    best = duan_epr_scan(minus)
    grid = np.logspace(-1, 1, 41)
    assert best.margin == pytest.approx(min(duan_epr(minus, r).margin for r in grid))


def test_hz_kvariance_examples(bell):
    assert hz_kvariance(SparseState.basis(0, 0), "x").lhs == pytest.approx(0.25)
    assert hz_kvariance(PHI, "x").lhs == pytest.approx(0.5)
    rep = hz_kvariance(bell, "y")
    assert rep.lhs == pytest.approx(0.5) and rep.rhs == 0.25 and not rep.violated
    with pytest.raises(ContractError):
        hz_kvariance(bell, "z")


def _k_variances(state):
    psi, a, b = two_mode_dense(state)
    kx = (a.conj().T @ b.conj().T + a @ b) / 2
    ky = (a.conj().T @ b.conj().T - a @ b) / 2j
    return dense.variance(psi, kx), dense.variance(psi, ky), psi, a, b


def test_su2_hur_examples(bell):
    report_close(su2_hur(SparseState.basis(0, 0)), 0, 0)
    rep = su2_hur(SparseState.basis(0, 1))
    report_close(rep, 1 / 16, 1 / 16)
    assert not rep.violated
    report_close(su2_hur(bell), 1 / 16, 0)


def test_su2_hur_matches_dense(rng):
    for _ in range(5):
        s = random_state(rng, 2, 2)
        vx, vy, psi, a, b = _k_variances(s)
        diff = dense.expect(psi, a.conj().T @ a - b.conj().T @ b)
        report_close(su2_hur(s), (vx - 0.25) * (vy - 0.25), abs(diff) ** 2 / 16)


def _jykz_dense(state):
    psi, a, b = two_mode_dense(state)
    jx = (a.conj().T @ b + a @ b.conj().T) / 2
    jy = (a.conj().T @ b - a @ b.conj().T) / 2j
    kz = (a.conj().T @ a + b.conj().T @ b + np.eye(len(psi))) / 2
    lhs = (dense.variance(psi, jy) + 0.25) * dense.variance(psi, kz)
    return lhs, abs(dense.expect(psi, jx)) ** 2 / 4


def test_jykz_examples(bell):
    rep = jykz(bell)
    assert abs(rep.lhs) < 1e-12
    assert rep.rhs == pytest.approx(1 / 16, abs=1e-12)
    assert rep.violated
    report_close(jykz(SparseState.basis(0, 0)), 0, 0)
    fam = SparseState.from_kets([((0, 2), SQ), ((1, 1), SQ)])
    rep = jykz(fam)
    report_close(rep, *_jykz_dense(fam))
    assert rep.violated


def _lh_dense(state, m, n):
    psi, a, b = two_mode_dense(state, cut=3 + 2 * max(m, n))
    ad, bd = a.conj().T, b.conj().T
    mp = np.linalg.matrix_power
    word = mp(ad, m) @ mp(b, n)
    swapped = mp(ad, m) @ mp(bd, n)
    hx, hy = (swapped + swapped.conj().T) / 2, (swapped - swapped.conj().T) / 2j
    lz = (word @ word.conj().T - word.conj().T @ word) / 2
    nmn = (mp(a, m) @ mp(ad, m) - mp(ad, m) @ mp(a, m)) @ (mp(b, n) @ mp(bd, n) - mp(bd, n) @ mp(b, n)) / 4
    mean_n = dense.expect(psi, nmn).real
    lhs = (dense.variance(psi, hx) - mean_n) * (dense.variance(psi, hy) - mean_n)
    return lhs, abs(dense.expect(psi, lz)) ** 2 / 4


def test_lh_hur_examples(rng):
    for _ in range(5):
        s = random_state(rng, 2, 3)
        a, b = lh_hur(s, 1, 1), su2_hur(s)
        assert (a.lhs, a.rhs, a.violated) == pytest.approx((b.lhs, b.rhs, b.violated), abs=1e-12)
    assert not lh_hur(SparseState.basis(0, 0), 2, 1).violated
    s = SparseState.from_kets([((0, 2), SQ), ((2, 0), SQ)])
    report_close(lh_hur(s, 2, 2), *_lh_dense(s, 2, 2))
    with pytest.raises(ContractError):
        lh_hur(s, 0, 1)


def test_lh_hur_matches_dense_random(rng):
    for m, n in ((2, 1), (1, 3), (3, 2)):
        s = random_state(rng, 2, 3)
        report_close(lh_hur(s, m, n), *_lh_dense(s, m, n), tol=1e-8)


def test_nplus_examples(bell):
    rep = nplus(bell, 1, 1)
    assert abs(rep.lhs) < 1e-12 and rep.rhs == pytest.approx(1 / 16) and rep.violated
    fam = SparseState.from_kets([((0, 2), SQ), ((1, 0), SQ)])
    rep = nplus(fam, 1, 2)
    psi, a, b = two_mode_dense(fam)
    ad, bd = a.conj().T, b.conj().T
    word = ad @ b @ b
    lx, ly = (word + word.conj().T) / 2, (word - word.conj().T) / 2j
    nmn = (a @ ad - ad @ a) @ (b @ b @ bd @ bd - bd @ bd @ b @ b) / 4
    npl = (2 * ad @ a + bd @ b) / 4
    lhs = (dense.variance(psi, ly) + dense.expect(psi, nmn).real) * dense.variance(psi, npl)
    report_close(rep, lhs, abs(dense.expect(psi, lx)) ** 2 / 4)
    assert rep.violated
    rep = nplus(SparseState.basis(0, 1), 1, 1)
    assert rep.rhs == pytest.approx(0) and not rep.violated


def test_general_multimode_reduces_to_lh_hur(rng):
    s = random_state(rng, 2, 3)
    a = general_multimode(s, BosonMonomial(((2, 0), (0, 1))), {1})
    b = lh_hur(s, 2, 1)
    assert (a.lhs, a.rhs) == pytest.approx((b.lhs, b.rhs), abs=1e-12)


def test_general_multimode_ghz_dense():
    ghz = SparseState.from_kets([((0, 0, 0), SQ), ((1, 1, 1), SQ)])
    rep = general_multimode(ghz, BosonMonomial(((0, 1),) * 3), {2})
    dims = (4, 4, 4)
    a1, a2, a3 = dense.annihilators(dims)
    psi = dense.vector(dict(ghz.terms), dims)
    word = a1 @ a2 @ a3
    swapped = a1 @ a2 @ a3.conj().T
    hx, hy = (swapped + swapped.conj().T) / 2, (swapped - swapped.conj().T) / 2j
    lz = (word @ word.conj().T - word.conj().T @ word) / 2
    m1 = a1 @ a2
    m2 = a3.conj().T
    big_n = (m1 @ m1.conj().T - m1.conj().T @ m1) @ (m2 @ m2.conj().T - m2.conj().T @ m2) / 4
    mean_n = dense.expect(psi, big_n).real
    lhs = (dense.variance(psi, hx) - mean_n) * (dense.variance(psi, hy) - mean_n)
    report_close(rep, lhs, abs(dense.expect(psi, lz)) ** 2 / 4)
    assert not general_multimode(SparseState.basis(0, 0, 0), BosonMonomial(((1, 2), (0, 1), (2, 0))), {1}).violated


# -- CFRD family ---------------------------------------------------------------

def test_zspec_validation():
    with pytest.raises(ContractError):
        ZFactor("sideways", 1)
    with pytest.raises(ContractError):
        ZFactor(ANNIHILATING, 0)
    z = ZSpec.split(4, powers=[2, 1, 1, 1], phases=0.1)
    assert [f.kind for f in z.factors] == [ANNIHILATING, ANNIHILATING, CREATING, CREATING]
    with pytest.raises(DimensionError):
        cfrd(SparseState.basis(0, 0), z)


def test_partition_validation():
    with pytest.raises(ContractError):
        Partition(frozenset({0}), frozenset({0, 1})).check(2)
    with pytest.raises(DimensionError):
        Partition(frozenset({0}), frozenset()).check(2)


def test_cfrd_examples(bell):
    for n in (1, 2, 3):
        rep = cfrd(SparseState.basis(*[0] * n), ZSpec.split(n, annihilating=n))
        report_close(rep, 0, 0.5 ** n)
        assert not rep.violated
    z = ZSpec.split(2)
    rep = cfrd(bell, z)
    report_close(rep, 0.25, 0.75)
    assert not rep.violated
    rep = cfrd(noon(2, 2), ZSpec.split(2, powers=2))
    assert not rep.violated


def test_cfrd_rhs_dense_and_polynomial(rng):
    for _ in range(6):
        n = int(rng.integers(1, 4))
        s = random_state(rng, n, 2)
        z = ZSpec(tuple(ZFactor(str(rng.choice([ANNIHILATING, CREATING])), int(rng.integers(1, 3)),
                                float(rng.uniform(0, 6))) for _ in range(n)))
        rep = cfrd(s, z)
        assert rep.rhs == pytest.approx(expectation(s, cfrd_rhs_polynomial(z)).real, abs=1e-10)
        dims = (7,) * n
        psi = dense.vector(dict(s.terms), dims)
        ops = dense.annihilators(dims)
        total = np.eye(len(psi), dtype=complex)
        zprod = np.eye(len(psi), dtype=complex)
        for f, a in zip(z.factors, ops):
            zk = np.linalg.matrix_power(a if f.kind == ANNIHILATING else a.conj().T, f.power) * f.coeff
            total = total @ (zk.conj().T @ zk + zk @ zk.conj().T)
            zprod = zprod @ zk
        assert rep.rhs == pytest.approx(dense.expect(psi, total).real / 2 ** n, abs=1e-8)
        assert rep.lhs == pytest.approx(abs(dense.expect(psi, zprod)) ** 2, abs=1e-10)


def test_min_partition_examples():
    part, value = min_partition(SparseState.basis(0, 0, 0), ZSpec.split(3, annihilating=3))
    assert part.antinormal == frozenset() and value == 0
    part, value = min_partition(SparseState.basis(1), ZSpec.split(1, annihilating=1))
    assert part.normal == frozenset({0}) and value == pytest.approx(1)


def test_min_partition_noon_four_modes():
    state, z = noon(4, 1), ZSpec.split(4)
    part, value = min_partition(state, z)
    assert value == pytest.approx(0)
    half = Partition.from_antinormal(4, {2, 3})
    assert sep_sum(state, z, half).rhs == pytest.approx(0)
    # ties resolve to the smallest antinormal group
    assert len(part.antinormal) <= 2
    assert part.antinormal == frozenset({2})


def test_min_partition_matches_brute_force(rng):
    for _ in range(8):
        n = int(rng.integers(1, 5))
        s = random_state(rng, n, 2)
        z = ZSpec.split(n, annihilating=int(rng.integers(0, n + 1)), powers=1)
        vals = partition_values(s, z)
        for mask in range(2 ** n):
            part = Partition.from_antinormal(n, [k for k in range(n) if mask >> k & 1])
            assert vals[mask] == pytest.approx(sep_sum(s, z, part).rhs, abs=1e-10)
        assert min_partition(s, z)[1] == pytest.approx(vals.min())


def test_min_partition_cap():
    with pytest.raises(CapacityError):
        min_partition(SparseState.basis(*[0] * 25), ZSpec.split(25))


def test_sep_sum_examples(bell):
    z = ZSpec.split(2)
    part = Partition.from_antinormal(2, {1})
    rep = sep_sum(bell, z, part)
    report_close(rep, 0.25, 0)
    assert rep.violated
    rep = sep_sum(SparseState.basis(1, 0), z, part)
    report_close(rep, 0, 0)
    assert not rep.violated
    state, z4 = noon(4, 1), ZSpec.split(4)
    assert sep_sum(state, z4, min_partition(state, z4)[0]).violated


def test_pf_and_srur_noon():
    state = noon(2, 2)
    part = Partition.from_antinormal(2, {1})
    z = ZSpec.split(2, powers=1)
    assert noon_phase_condition(SQ, SQ, [0, 0]) != 0
    assert sep_product(state, z, part).violated
    z = ZSpec.split(2, powers=1, phases=[math.pi / 4, 0])
    assert abs(noon_phase_condition(SQ, SQ, [math.pi / 4, 0])) < 1e-12
    pf = sep_product(state, z, part)
    assert not pf.violated
    assert abs(pf.params["phase_term"]) < 1e-12
    assert sep_srur(state, z, part).violated


def test_pf_and_srur_vacuum():
    for z in (ZSpec.split(2), ZSpec.split(2, powers=2, phases=[0.4, 1.0])):
        for anti in ({0}, {1}, {0, 1}):
            part = Partition.from_antinormal(2, anti)
            assert not sep_product(SparseState.basis(0, 0), z, part).violated
            assert not sep_srur(SparseState.basis(0, 0), z, part).violated


def test_negative_pt_variance_short_circuit():
    # Z = a b on |00> + 0.1|22>: L2 = i(ab^+ - a^+b) has a negative PT variance.
    state = SparseState.from_kets([((0, 0), 1.0), ((2, 2), 0.1)])
    z = ZSpec.split(2, annihilating=2)
    part = Partition.from_antinormal(2, {1})
    for witness in (sep_product, sep_srur):
        rep = witness(state, z, part)
        assert rep.params["var2"] == pytest.approx(-0.27722772277, abs=1e-9)
        assert rep.violated and rep.reason == NEGATIVE_PT_VARIANCE
        assert rep.lhs == rep.params["var2"] and rep.rhs == 0
    assert is_npt(state, {1}).npt


def test_peres_examples(bell):
    prod = tensor(SparseState.basis(1), SparseState.basis(2))
    assert peres_check(prod, ZSpec.split(2)).holds
    rep = peres_check(bell, ZSpec.split(2))
    assert not rep.cfrd_violated and rep.holds
    assert is_npt(bell, {1}).min_eig == pytest.approx(-0.5)


# -- properties ----------------------------------------------------------------

zspecs3 = st.lists(
    st.tuples(st.sampled_from([ANNIHILATING, CREATING]), st.integers(1, 2), st.floats(0, 6.3)),
    min_size=3, max_size=3,
).map(lambda fs: ZSpec(tuple(ZFactor(*f) for f in fs)))


@given(sparse_states(3, max_occ=2), zspecs3)
def test_cfrd_rhs_dominates_min_partition(state, z):
    _, value = min_partition(state, z)
    assert cfrd(state, z).rhs >= value - 1e-10 * max(1.0, value)


@given(sparse_states(3, max_occ=2), zspecs3, st.lists(st.floats(-3, 3), min_size=3, max_size=3))
def test_srur_phase_invariance(state, z, phases):
    part, _ = min_partition(state, z)
    base = sep_srur(state, z, part)
    rotated = sep_srur(phase_rotate(state, phases), z, part)
    assert rotated.violated == base.violated or abs(base.margin) < 1e-8


@given(sparse_states(2))
def test_k_variances_never_both_below_quarter(state):
    assert not (hz_kvariance(state, "x").violated and hz_kvariance(state, "y").violated)


single = sparse_states(1, max_occ=3)


@given(single, single, st.integers(1, 2), st.integers(1, 2))
def test_two_mode_products_pass_every_witness(s1, s2, m, n):
    state = tensor(s1, s2)
    reports = [duan_epr(state, 0.7), hz_kvariance(state, "x"), hz_kvariance(state, "y"), su2_hur(state),
               jykz(state), lh_hur(state, m, n), nplus(state, m, n)]
    for rep in reports:
        assert not rep.violated, rep
