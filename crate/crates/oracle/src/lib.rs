//! Reference implementations that share no code with `tdu-core`'s
//! algorithms, used by tests to cross-check it:
//!
//! * [`dl`]: a memoised recursive evaluator of the defeasible proof
//!   conditions, a random theory generator and a structural cycle check.
//! * [`groupby`]: a brute-force group-by over raw readings with its own
//!   calendar arithmetic.
//! * [`model`]: seeded random policy and data-item documents.

pub mod dl;
pub mod groupby;
pub mod model;
