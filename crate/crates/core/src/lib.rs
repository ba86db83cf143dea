//! Mixed finite-element discretizations of the four-field double
//! porosity/permeability (DPP) Darcy model, together with the two
//! composable Schur-complement block preconditioners (scale-split and
//! field-split) and the Time-Accuracy-Size performance metrics used to
//! compare them.
//!
//! The crate is organised bottom-up:
//!
//! * [`mesh`]: structured TRI/QUAD/TET/HEX meshes of the unit square/cube.
//! * [`elements`]: reference elements, quadrature, Piola maps, DoF counts.
//! * [`problem`]: physical parameters and manufactured solutions.
//! * [`assembly`]: H(div), CG-VMS and DG-VMS block assembly.
//! * [`linalg`]: CSR kernels, GMRES, ILU(0), AMG, Schur products.
//! * [`blocksolve`]: PETSc-style fieldsplit configuration and solve driver.
//! * [`spectrum`]: L2 errors, DoA/DoS/DoE and scaling records.

// index loops mirror the element formulas; `!(x > 0)` deliberately rejects NaN
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod blocksolve;
pub mod elements;
mod error;
pub mod geometry;
pub mod linalg;
pub mod mesh;
pub mod problem;
pub mod spectrum;

pub use assembly::{BlockSystem, DiscreteSolution, Field, Formulation};
pub use blocksolve::{Method, SolveReport, SolverConfig};
pub use error::{Error, Result};
pub use linalg::CsrMatrix;
pub use mesh::{CellKind, Mesh};
pub use problem::{BoundarySpec, DppParameters, ManufacturedSolution};
pub use spectrum::SpectrumRecord;
