//! Command line and HTTP service around the segmentation pipeline.

pub mod cli;
pub mod service;
