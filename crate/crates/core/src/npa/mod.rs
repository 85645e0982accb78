//! NPA hierarchy: projector monomials, level-k moment structures and
//! membership in the relaxed sets Q̃_k.

mod membership;
mod moments;
mod monomial;

pub use membership::{membership_test, membership_test_with, Membership};
pub use moments::{MomentClass, MomentStructure};
pub use monomial::{
    canonicalize, generate_monomials, generate_monomials_with_cap, Level, Monomial, OperatorSymbol,
    Party, DEFAULT_BASIS_CAP,
};
