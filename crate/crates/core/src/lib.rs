//! Partial credit models and item-focussed trees for detecting differential
//! item functioning (DIF) in ordinal item responses.
//!
//! The crate is organised bottom-up:
//!
//! - [`pcm`]: category probabilities and adjacent-category logits of the
//!   partial credit model.
//! - [`data`], [`partition`]: response and covariate tables, node
//!   specifications and the per-item assignment of persons to leaves.
//! - [`fit`]: joint maximum-likelihood estimation of person and
//!   leaf-specific threshold parameters.
//! - [`tree`]: the item-focussed tree engine (split search, maximal-value
//!   permutation tests, Bonferroni-adjusted stopping).
//! - [`sim`]: data-generating processes for power studies and the TPR/FPR
//!   criteria.
//! - [`io`], [`report`], [`api`]: file ingestion, tree rendering and the
//!   high-level entry points used by the `pcmift` binary.
//!
//! Runnable walkthroughs of every capability live in the crate's
//! `examples/` directory.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod api;
pub mod data;
pub mod error;
pub mod fit;
pub mod io;
pub mod partition;
pub mod pcm;
pub mod report;
mod seed;
pub mod sim;
pub mod tree;

pub use data::{Covariate, CovariateKind, CovariateTable, ResponseMatrix};
pub use error::{Error, Result};
pub use fit::{fit_pcm, gradient, log_likelihood, refit_pcm, FitOptions, PcmFit, PcmParams};
pub use partition::{Branch, ItemPartition, Layout, NodeSpec, Side};
pub use pcm::{adjacent_logit, category_probabilities};
pub use tree::{grow_trees, GrowthResult, IftConfig, ItemTree};
