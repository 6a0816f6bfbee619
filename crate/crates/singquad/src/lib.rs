//! Quadrature for integrands with a single integrable point singularity
//! `|x - x0|^gamma l(|x - x0|, u) v(x)` on uniform Cartesian grids.
//!
//! Three rules are provided:
//!
//! * the punctured trapezoidal rule, which skips the lattice node nearest
//!   the singularity ([`lattice::punctured_trapezoid`]);
//! * the corrected trapezoidal rule, which adds weighted samples of the
//!   smooth factor on a small stencil around the singularity
//!   ([`rules::corrected_rule`]);
//! * the composite corrected rule for kernels whose modulation depends on
//!   the radius, built term by term from a radial expansion
//!   ([`rules::composite_rule`]).
//!
//! Correction weights are synthesized by [`weights::solve_weights`]: the
//! rule is forced to integrate windowed monomials exactly at a ladder of
//! spacings and the resulting weights are extrapolated to the zero-spacing
//! limit. Weight sets serialize to JSON ([`weights::write_weight_set`]) and
//! can be tabulated over the offset cube and interpolated
//! ([`weights::tabulate_weights`]).
//!
//! All numerics are generic over the scalar type through [`Real`]
//! (`f32` or `f64`); the `*64` aliases below fix the scalar used by the CLI
//! and the test suite.

// Guards written as `!(x > y)` are deliberate: they reject NaN along with
// the out-of-range values, which `x <= y` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cutoff;
pub mod error;
mod gauss;
pub mod grid;
pub mod kernel;
pub mod lattice;
mod linalg;
pub mod moments;
pub mod multi_index;
pub mod oracle;
mod real;
pub mod rules;
pub mod weights;

pub use cutoff::{default_cutoff, make_standard_cutoff, RadialCutoff};
pub use error::{Error, Result};
pub use grid::{split_singularity, GridContext};
pub use kernel::{SingularKernel, SmoothFactor};
pub use moments::{angular_rule, moment_integral, radial_moment, AngularRule};
pub use multi_index::{enumerate_multi_indices, pi_count, MultiIndex};
pub use oracle::{estimate_order, reference_integral, ReferenceValue};
pub use real::{norm2, norm_inf, CompensatedSum, Real};
pub use rules::{composite_rule, corrected_rule, SynthesizingProvider, WeightProvider};
pub use weights::{
    assemble_k, compute_r_beta, condition_estimate, extrapolate_ladder, interpolate_weights,
    solve_weights, synthesis_template, tabulate_weights, Provenance, Stencil, SynthesisParams,
    WeightSet, WeightTable,
};

/// Concrete double-precision aliases.
pub type GridContext64 = GridContext<f64>;
pub type SingularKernel64 = SingularKernel<f64>;
pub type SmoothFactor64 = SmoothFactor<f64>;
pub type RadialCutoff64 = RadialCutoff<f64>;
pub type AngularRule64 = AngularRule<f64>;
pub type WeightSet64 = WeightSet<f64>;
pub type WeightTable64 = WeightTable<f64>;
pub type SynthesisParams64 = SynthesisParams<f64>;
pub type ReferenceValue64 = ReferenceValue<f64>;
