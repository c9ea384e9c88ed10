//! Multi-patch isogeometric solver for coupled flexoelectric-piezoelectric
//! plane-strain problems with an interior-penalty DG coupling for weak C1
//! continuity across patch interfaces.

pub mod assembly;
pub mod error;
pub mod lattice;
pub mod material;
pub mod mesh;
pub mod nurbs;
pub mod patch;
pub mod quadrature;
pub mod scenario;
pub mod solve;
pub mod vtk;
pub mod spline;

pub use error::{FlexoError, Result};
