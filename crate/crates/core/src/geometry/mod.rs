//! Points, convex bodies, constraint regions and brute-force grid oracles.

mod body;
pub mod grid;
pub mod polygon;
mod point;
pub mod qp;
mod region;

pub use body::{distance_to_body, project, support, ConvexBody, Halfspace, Hyperplane, Side};
pub use grid::{grid_path_connected, GridOracle};
pub use point::Point;
pub use polygon::ConvexPolygon;
pub use region::{
    distance_to_complement, distance_to_region, region_contains, AxisBox, Membership, Region,
    RegionShape, FEASIBLE_TOLERANCE,
};
