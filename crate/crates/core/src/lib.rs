//! Numerics for the Sturm-Liouville problem `-y'' + q(x) y = mu y` on `[0, pi]` with
//! separated boundary conditions given by angles `alpha, beta` in `(0, pi)`.
//!
//! * [`forward`]: eigenvalues, characteristic function and norming constants.
//! * [`series`]: asymptotic decomposition of spectral data and the kernel `F(x, t)`.
//! * [`inverse`]: Gelfand-Levitan reconstruction of `q`, `alpha` and `beta`.
//! * [`validator`]: checks candidate data against the characterization conditions.

pub mod error;
pub mod forward;
pub mod grid;
pub mod inverse;
pub mod json;
pub mod kernel;
pub mod product;
pub mod series;
pub mod spectral;
pub mod validator;

pub use error::{Error, Result};
pub use grid::{integrate_trapezoid, uniform_grid, GridFunction, UniformGrid};
pub use spectral::{arccot, BoundaryAngles, NormingB, SpectralData, SpectralFile};
