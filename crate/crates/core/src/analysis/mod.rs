//! Code-level analyses: minimum determinant of codeword differences,
//! rank-deficiency witnesses, ergodic capacity, and generator orthogonality.

mod capacity;
mod diversity;
mod mindet;

pub use capacity::{
    code_capacity_integrand, compare_capacity, db_to_linear, ergodic_capacity,
    generator_gram_deviation, log2_det_spd, lossless_check, raw_capacity_integrand,
    CapacityComparison, CapacityEstimate, CapacityTarget,
};
pub use diversity::{diversity_search, DiversityReport, SearchPhase, DEFAULT_BUDGET};
pub use mindet::{
    min_determinant, DetConvention, Difference, MinDetReport, SearchMode, EXHAUSTIVE_LIMIT,
    SINGULAR_TOL,
};
