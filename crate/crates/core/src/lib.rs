pub mod approx;
pub mod constraints;
pub mod czonotope;
pub mod ellipsoid;
pub mod error;
pub mod hull;
pub mod linalg;
pub mod polytope;
pub mod reach;
pub mod set;
pub mod solver;
pub mod tolerance;

pub use czonotope::{ConstrainedZonotope, DiffStrategy};
pub use ellipsoid::Ellipsoid;
pub use error::{Error, Result};
pub use polytope::{HRep, InteriorKind, Polytope};
pub use set::{Centering, CenteringKind, ConvexSet, Norm, Support};
pub use tolerance::Tolerance;
