pub mod certificate;
pub mod diffeo;
pub mod displacement;
pub mod error;
pub mod homeo;
pub mod hyperbolic;
pub mod norms;
pub mod presentation;
pub mod representation;
pub mod snf;
pub mod words;

pub use error::{LabError, Result};
