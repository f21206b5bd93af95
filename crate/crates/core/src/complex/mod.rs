//! The extended piece map on rectangles with infinite strips attached, the
//! gluing relation it induces on boundaries, and the resulting surface.

pub mod schema;
pub mod strips;
pub mod surface;

pub use schema::{
    classify_classes, enumerate_identifications, BoundaryDynamics, ClassCensus, IdentificationSchema, LinkType,
    PointKey, PointState,
};
pub use strips::{attach_strips, build_extended_map, ExtendedPieceMap, InfiniteStrip};
pub use surface::{assemble_surface, Connectivity, EndSign, SurfaceOptions, SurfaceReport};
