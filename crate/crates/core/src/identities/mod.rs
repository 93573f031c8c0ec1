//! Verification of the commutation identities and their supporting lemmas.

mod applications;
mod coefficients;
mod lemmas;
mod oracle;
mod residual;
mod theorem;

pub use applications::{
    lambda_adjoint_commutator, uncorrected_mu_gap, verify_mu_identity, verify_prop_0q,
    zeroth_order_checks, REFUTATION_MIN_REL,
};
pub use coefficients::{admissible, f_coeff, f_coeff_f64, factorial_ratio};
pub use lemmas::lemma_checks;
pub use oracle::{oracle_checks, DenseOracle};
pub use residual::{
    Check, Comparison, Expect, Expectation, IdentityResidual, Indices, Tolerance, TrialLabel,
    NORM_FLOOR,
};
pub use theorem::{
    check_primitive_germ, conjugated_star, dstar_lambda_commutator, l_pow_signed, lambda_d_parts,
    theorem_sides, verify_proof_displays, Mutation, TheoremTerms, PRIMITIVE_RTOL,
};
