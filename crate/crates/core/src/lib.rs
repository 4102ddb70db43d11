//! Split-intersection Lasso selection followed by a bias-corrected MLE
//! for logistic regression, with normal-theory inference and a
//! Monte-Carlo harness.

pub mod bcmle;
pub mod data;
pub mod error;
pub mod glm;
pub mod inference;
pub mod io;
pub mod json;
pub mod lasso;
pub mod normal;
pub mod sila;
pub mod simulator;
pub mod stats;
pub mod stream;
pub mod studies;

pub use data::{build_dataset, Dataset, Submodel};
pub use error::{Error, Result};
pub use inference::{silab_fit, SilabResult};
pub use stream::RandomStream;
