//! Natural-gradient boosting of per-sample Normal distributions.
//!
//! Fits two sets of histogram regression trees per boosting iteration,
//! one for the location `mu` and one for the log standard deviation
//! `psi`, using the closed-form natural gradient of the Normal
//! negative log-likelihood. Alongside training and prediction the crate
//! provides point and distributional evaluation metrics, an
//! uncertainty-bucket calibration report, dual (expectation/variance)
//! feature importance, and seeded synthetic data generators for
//! end-to-end verification.
//!
//! # Example
//!
//! ```
//! use gaussboost::{BoostConfig, TreeConfig};
//! use gaussboost::boosting::train;
//! use gaussboost::synth;
//!
//! let data = synth::heteroscedastic_normal(400, 3, 42).unwrap();
//! let cfg = BoostConfig {
//!     iterations: 20,
//!     learning_rate: 0.3,
//!     tree: TreeConfig { max_depth: 3, min_samples_leaf: 10, min_gain: 0.0 },
//!     max_bins: 32,
//!     line_search_halvings: 20,
//! };
//! let out = train(&data.dataset().unwrap(), &cfg).unwrap();
//! let p = out.model.predict_row(data.row(0)).unwrap();
//! assert!(p.sigma() > 0.0);
//! ```

mod error;

pub mod binning;
pub mod boosting;
pub mod interpret;
pub mod metrics;
pub mod normal;
pub mod synth;
pub mod tree;

pub use binning::{bin_value, build_bins, BinnedDataset, Dataset};
pub use boosting::{load_model, save_model, BoostConfig, BoostModel, IterationRecord, TrainOutput};
pub use error::{Error, Result};
pub use metrics::{CalibrationReport, EvalInput};
pub use normal::{FisherMatrix, GradientPair, NormalParams};
pub use tree::{RegressionTree, TreeConfig};
