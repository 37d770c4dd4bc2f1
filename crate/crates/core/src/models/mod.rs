//! Concrete model families.

pub mod animal;
pub mod area;
pub mod contour;
pub mod loss;
pub mod pairwise;
pub mod toy;

pub use animal::{Grid, RandomClusterModel};
pub use area::AreaModel;
pub use contour::ContourModel;
pub use loss::LossModel;
pub use pairwise::PairwiseModel;
pub use toy::ToyModel;
