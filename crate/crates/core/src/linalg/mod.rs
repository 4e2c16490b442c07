//! Dense and iterative linear algebra used by the solvers.

mod expm;
mod gmres;
mod optimize;
mod sine;
mod tridiag;

pub use expm::expm;
pub use gmres::{gmres, GmresOptions, GmresOutcome};
pub use optimize::maximize_scalar;
pub use sine::{accumulate_along_axis, apply_along_axis, SineTransform};
pub use tridiag::{ComplexTridiagonal, TridiagonalFactor};
