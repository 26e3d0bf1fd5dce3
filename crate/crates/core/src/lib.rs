//! Information-complexity density estimation on finite sample spaces,
//! with a verification harness for its finite-sample guarantees.
//!
//! The crate models a finite family of candidate densities carrying a
//! strictly positive prior, and studies two estimators built from n
//! i.i.d. observations: penalized two-part-code model selection and the
//! tempered (γ-)Bayesian posterior. Everything a bound statement needs is
//! exactly computable here — divergences, resolvabilities, bracketing
//! radii, critical radii, hull divergences — so each inequality can be
//! checked end to end: exactly by dataset enumeration at tiny scale, by
//! seeded Monte Carlo otherwise.
//!
//! Modules:
//! - [`model`]: sample spaces, densities, families, posterior weights,
//!   datasets, deterministic sampling, convex duality.
//! - [`divergence`]: KL, ρ-, Rényi, and squared-Hellinger divergences.
//! - [`estimator`]: model selection, tempered posteriors, risks.
//! - [`complexity`]: resolvabilities, radii, bracketing, cover terms.
//! - [`hull`]: convex-hull divergence optimization, product spaces.
//! - [`bounds`]: right-hand sides and the verification engine.
//! - [`experiments`]: named reproducible experiments and sweeps.
//! - [`io`] / [`report`]: strict JSON inputs and byte-stable CSV output.

// Negated comparisons like `!(lambda > 1.0)` are used on purpose: they
// treat NaN parameters as domain violations, which `lambda <= 1.0` would
// silently let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod complexity;
pub mod divergence;
pub mod estimator;
pub mod experiments;
pub mod hull;
pub mod io;
pub mod math;
pub mod model;
pub mod report;
pub mod rng;
pub mod synth;

pub use bounds::{BoundId, BoundReport, BoundSpec, Verdict, VerifyMode};
pub use complexity::{CriticalRadius, FamilyCover};
pub use estimator::{DivergenceKind, FeasibleSet};
pub use model::{Dataset, Density, ModelFamily, PosteriorWeights, SampleSpace};
pub use rng::{CounterRng, RngSpec};
