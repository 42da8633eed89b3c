//! Feature-model-driven generation.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`model`]: parse and analyze feature diagrams, count variants exactly.
//! 2. [`config`]: specialize a diagram decision by decision with propagation
//!    and explained conflicts.
//! 3. [`widget`]: derive the abstract dialog a specifier UI renders.
//! 4. [`frame`] and [`generator`]: assemble output files from frame/slot
//!    templates, emit the 0/1 XML specification, and fold edits of generated
//!    files back in.

pub mod config;
pub mod frame;
pub mod generator;
pub mod model;
pub mod widget;

pub use config::{ConfigError, Configuration, DecisionValue, FeatureState, FinalizePolicy, Status};
pub use model::{parse_model, FeatureDiagram, FeatureId};
