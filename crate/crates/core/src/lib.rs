pub mod canvas;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod font;
pub mod geometry;
pub mod image_annot;
pub mod modality;
pub mod raster;
pub mod refexpr;
pub mod table;
pub mod taskgen;
pub mod text;
pub mod trace;

pub use error::{Error, Result};
pub use geometry::{Point, Polygon, Rect, Rgb};
pub use modality::Modality;
