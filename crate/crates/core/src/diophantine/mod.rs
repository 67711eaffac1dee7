//! Rational approximation of quadratic irrationals.

mod cf;
mod dependence;
mod search;
mod surd;

pub use cf::{badness_profile, continued_fraction, convergents, periodicity, BadnessProfile, Expansion, Periodicity};
pub use dependence::{integer_dependence_search, rotation_root, Dependence, DependenceOutcome, RotationRoot};
pub use search::{
    bad_pair_constant, dirichlet_pair_search, records_csv, select_summable_lacunary, square_approximation_search,
    ApproximationRecord, BadPairEstimate, DirichletSearch, LacunarySelection, PrecisionPolicy, SquareApproximation,
};
pub(crate) use search::{inverse_root_sum, ratio_holds};
pub use surd::{nearest_integer_distance, Irrational};
