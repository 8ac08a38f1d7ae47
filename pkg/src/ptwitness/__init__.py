"""Partial-transpose entanglement witnesses and CFRD Bell tests for multimode bosonic states."""

from .algebra import BosonMonomial, OperatorPoly, build_named, commutator, dagger, normal_order_product
from .errors import CapacityError, ContractError, DegenerateStateError, DimensionError, PTWitnessError
from .fock import FockKet, SparseState, apply_monomial, expectation, inner, normalize, tensor, variance
from .pt import ModeSet, pt_expectation, pt_map, pt_variance
from .witnesses import (
    Partition,
    WitnessReport,
    ZFactor,
    ZSpec,
    cfrd,
    duan_epr,
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
)

__version__ = "0.1.0"
