//! Entropy inequalities behind the decay rates of recombination:
//! Shearer-type bounds, the subadditivity constant κ(ν), and the sharp test
//! density that pins down the entropy-production rate from above.

pub mod kappa;
pub mod shearer;
pub mod sharp;

pub use kappa::{
    generalized_subadditivity, identical_copies_density, kappa_ratios, kappa_scan, kappa_scan_many, kappa_theoretical,
    subadditivity_ratio, KappaScan,
};
pub use shearer::{
    check_submodular, improved_shearer_check, naive_shearer_kappa, shearer_bound, shearer_coefficients,
    weighted_shearer_check, ShearerBound, ShearerCoefficients, SubmodularReport,
};
pub use sharp::{
    discrete_decay_check, sharp_test_closed_form, sharp_test_density, sharp_test_exhaustive, DecayCheck,
    SharpTestReport,
};
