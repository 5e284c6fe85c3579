//! Complementary-label learning (CLL) toolkit.
//!
//! A learner in CLL only sees, for every instance, one class the instance does
//! *not* belong to. This crate covers the full desk-scale pipeline around that
//! setting:
//!
//! * [`data`]: IDX / CIFAR loaders and every on-disk artifact (label CSVs,
//!   `CLLEMB01` embeddings, configs, result tables).
//! * [`labelgen`]: transition matrices, long-tail subsampling and
//!   complementary-label sampling for the three imbalance setups.
//! * [`embed`]: PCA embeddings and seeded k-means clustering.
//! * [`augment`]: Mixup, Intra-Cluster Mixup (ICM), Multi Intra-Cluster Mixup
//!   (MICM) with inverse-distance label weights, oracle filters and noise ratio.
//! * [`losses`]: SCL-NL, SCL-EXP and forward-corrected cross-entropy over hard
//!   and soft complementary labels, with analytic logit gradients.
//! * [`model`]: a feed-forward softmax classifier, Adam/SGD, the training loop
//!   and checkpoints.
//! * [`diagnostics`]: complementary risks, the Mixup error decomposition and
//!   the gradient bias/variance protocol.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::too_many_arguments)]

pub mod augment;
pub mod data;
pub mod diagnostics;
pub mod embed;
pub mod error;
pub mod labelgen;
pub mod losses;
pub mod model;
pub mod rng;

pub use error::{Error, ErrorKind, Result};
