//! Exact computational topology for curves on surfaces of finite type:
//! normal-coordinate curve systems on canonical triangulations, complementary
//! region censuses, curve-graph edge predicates, one-switch train tracks,
//! mapping-class actions, and random-walk experiments.

pub mod arrangement;
pub mod bundle;
pub mod census;
pub mod curve;
pub mod error;
pub mod predicates;
pub mod surface;

pub use arrangement::{
    dehn_twist, embed_pair, intersection_number, isotopic, minimal_pair, Arrangement, PairGraph,
};
pub use bundle::{apply_dehn_twist, drawn_crossings, geometric_intersection, LITERAL_BUDGET};
pub use census::{stratum_signature, BoundaryWalk, Region, RegionCensus, RegionKind, Stratum};
pub use curve::{random_curve, NormalCurve, DEFAULT_TRACE_BUDGET};
pub use predicates::{
    adjacent, cg_distance_class, cg_witness, edge_verdict, pc_distance_class, CgDistance,
    EdgeRule, EdgeVerdict, PcDistance,
};
pub use error::{Error, Result};
pub use surface::{Surface, SideRef, Triangulation, TRIANGULATION_TAG};
