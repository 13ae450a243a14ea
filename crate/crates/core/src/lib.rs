//! A sound-but-incomplete verifier for ATL* specifications over concurrent
//! game structures with imperfect information under perfect recall.
//!
//! The procedure enumerates perfect-information sub-models of the input,
//! decides sub-formulas with exactly one strategic operator on them, and then
//! settles the original formula by CTL* model checking of its universal and
//! existential translations, returning true, false or unknown.

pub mod ctlstar;
pub mod formula;
pub mod game;
pub mod icgs;
pub mod pipeline;
pub mod submodel;

#[cfg(test)]
pub(crate) mod testoracle;

pub use formula::{parse, Formula, ParseError};
pub use icgs::{AgentId, Icgs, ModelError, StateId};
pub use pipeline::{model_checking_procedure, Verdict, VerdictValue};
