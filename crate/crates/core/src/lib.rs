//! Exact arithmetic for split Chevalley groups over truncated Witt rings,
//! local deformation conditions, module decomposition for finite subgroups,
//! and a synthetic Selmer engine for the lifting method.

pub mod chevgroup;
pub mod coeffring;
pub mod error;
pub mod field;
pub mod galoismod;
pub mod intlattice;
pub mod linalg;
pub mod localconds;
pub mod oddness;
pub mod poly;
pub mod ringmat;
pub mod rootdata;
pub mod selmer;

pub use error::{Error, Result};
