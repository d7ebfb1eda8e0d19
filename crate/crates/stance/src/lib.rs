//! Stance prediction from user histories.
//!
//! Histories run up to each user's first retweet of a stance-labeled account
//! ([`dataset`]). They are turned into aggregate behavior features or TF-IDF
//! bag-of-words vectors ([`features`]) and classified by logistic regression
//! ([`logistic`]) or a random forest ([`forest`]). [`eval`] provides stratified
//! cross-validation and feature importance.

pub mod dataset;
pub mod error;
pub mod eval;
pub mod features;
pub mod forest;
pub mod logistic;
pub mod model;
pub mod text;

pub use error::{Error, Result};
