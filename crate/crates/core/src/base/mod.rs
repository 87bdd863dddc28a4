//! Normed-space geometry, function and set representations, the derived
//! constants, and the Lipschitz extension primitives.

pub mod constants;
pub mod field;
pub mod geometry;
pub mod lipschitz;
pub mod set;

pub use constants::{make_constants, Constants};
pub use field::{central_difference, ScalarField};
pub use geometry::{Norm, PointIndex, WorkingDomain};
pub use lipschitz::{
    dist_to_set, distance_field, estimate_lip, estimate_lip_values, mcshane_extend, McShane,
};
pub use set::{project_onto, ClosedSet, SetKind};
