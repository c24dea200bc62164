//! Joint exponential-family regression of unit attributes and network
//! connections under local dependence.

pub mod bits;
pub mod error;
pub mod glm;
pub mod gof;
pub mod inference;
pub mod model;
pub mod optimizer;
pub mod oracle;
pub mod pseudolik;
pub mod sampler;
pub mod study;

pub use error::{Error, Result};
pub use model::*;
