"""Exact computations in the ring of degree-zero stable operations in p-local K-theory
and its discrete modules."""

from .arith import INF, RingConfig, Variant, gaussian_binomial, make_config, reduce_mod, vp
from .cofree import (
    UElement,
    alpha,
    beta,
    beta_preimage,
    gamma,
    gamma_preimage,
    lift_through_epi,
    p_reduce,
    verify_exact_sequence,
)
from .modules import (
    FpModule,
    annihilation_exponent,
    apply_operation,
    bousfield_check,
    hom_A,
    validate_module,
)
from .opring import (
    OperationPoly,
    PhiVector,
    adams_expansion,
    divide_phi,
    is_unit,
    multiply,
    phi_to_poly,
    poly_to_phi,
    solve_abcongs,
    structure_constant,
    theta_poly,
    verify_identity,
)

__version__ = "0.1.0"
