//! Exact simulation and exhaustive enumeration for three-speed ballistic
//! annihilation with particles started at the integers.
//!
//! * [`kinematics`] resolves finite configurations exactly.
//! * [`renewal`] samples the offspring count of the embedded branching
//!   process on lazily revealed random configurations.
//! * [`enumeration`] builds exact count tables over the configurations in
//!   which the first `+1` particle is destroyed at a given distance.
//! * [`bounds`] turns those tables into lower bounds on the mean offspring
//!   count and locates the critical density they certify.
//! * [`montecarlo`] cross-checks the tables and estimates survival.
//!
//! Evaluation code is generic over [`Scalar`]; [`Real`] and [`Rational`]
//! are the two instantiations used in practice.

pub mod bounds;
pub mod enumeration;
pub mod kinematics;
pub mod montecarlo;
pub mod renewal;
pub mod scalar;

pub use scalar::Scalar;

/// Default floating-point scalar.
pub type Real = f64;

/// Exact scalar for rational `p`.
pub type Rational = num_rational::BigRational;

/// Bound curve sampled in double precision.
pub type RealBoundCurve = bounds::BoundCurve<Real>;

/// Bound curve with exact values.
pub type RationalBoundCurve = bounds::BoundCurve<Rational>;
