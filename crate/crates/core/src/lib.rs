//! Promise graphs and the analyses built on them: binding and conditional
//! resolution, vocabulary translation, trust kinetics, channel simulation,
//! proxy-chain composition, and operator convergence.

pub mod commands;
pub mod composition;
pub mod convergence;
pub mod dynamics;
pub mod finding;
pub mod language;
pub mod model;
pub mod promise;
pub mod report;
pub mod trust;

pub use finding::{Finding, FindingCode, Severity};
pub use promise::{Body, Polarity, Promise, PromiseGraph};
