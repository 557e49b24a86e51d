#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod exactlin;
pub mod finalg;
pub mod dlie;
pub mod lierinehart;
pub mod report;
pub mod conncat;
pub mod corpus;

pub use error::{Error, Result};
