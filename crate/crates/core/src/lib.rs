//! Non-neural tooling for instance-segmentation datasets: cut-and-paste
//! synthesis, rotation expansion, GLMask image-mask assembly, label I/O,
//! pseudo-label handling and mask-IoU evaluation.

pub mod augmentation;
pub mod colorspace;
pub mod contour;
pub mod error;
pub mod eval;
pub mod instance;
pub mod labels_io;
pub mod mask;
pub mod pseudo;
pub mod raster;
pub mod rng;
pub mod synthesis;

pub use contour::{contours_to_mask, mask_to_contours, Point, Polygon};
pub use error::{Error, ErrorKind, Result};
pub use instance::{InstanceAnnotation, InstanceSet};
pub use mask::{mask_iou, BBox, BinaryMask};
pub use raster::Raster;
