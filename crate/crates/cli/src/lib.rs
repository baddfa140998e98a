//! Command-line verbs and the review service of `trajlab`.

pub mod commands;
pub mod service;
