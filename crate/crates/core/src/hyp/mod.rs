//! Extra constants of motion built from hyperbolic pairs.

pub mod closed_form;
pub mod constant;
pub mod expansion;
pub mod pair;
pub mod tables;

pub use closed_form::ClosedForm;
pub use constant::{poly_constant, AngleCombo, ConstantEvaluator, ConstantParts, ConstantView, PolyConstant};
pub use pair::{hyp_mul, hyp_pow, HypPair};
pub use tables::{level_pairs, pair_radial_kepler, pairs_4d_example, pairs_oscillator3d, SeparableLayout};
