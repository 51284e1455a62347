//! Total-order HTN planning over an object-oriented world model. Plans are
//! split into per-agent streams and can be screened by social filters.
//!
//! The numeric core is generic over [`scalar::Scalar`]; the aliases below fix
//! it to exact rationals, which is what the text front-end produces.

pub mod domain;
pub mod dsl;
pub mod pipeline;
pub mod planner;
pub mod registry;
pub mod scalar;
pub mod social;
pub mod streams;
pub mod world;

pub use scalar::{Rational, Scalar};

pub type Registry = registry::Registry<Rational>;
pub type Plan = planner::Plan<Rational>;
pub type PlanStep = planner::PlanStep<Rational>;
pub type PlanResult = planner::PlanResult<Rational>;
pub type FilterConfig = social::FilterConfig<Rational>;
