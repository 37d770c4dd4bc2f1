//! Perfect sampler for interacting point processes.
//!
//! The library draws exact finite-window samples from infinite-volume
//! equilibrium laws of spatial birth-and-death dynamics.  The sampler works
//! backward from the observation window, collecting every cylinder of the
//! free (non-interacting) process that could influence the window through a
//! chain of incompatibilities, then resolves that finite ancestry forward
//! into an exact equilibrium configuration.
//!
//! Module map:
//! - [`stream`]: deterministic splittable random streams and variates
//! - [`geom`]: intervals, rectangles, disc overlap areas, strip quadrature
//! - [`model`]: individuals, configurations, windows, the model contract
//! - [`models`]: the concrete model families (toy tables, contours, bond
//!   animals, area interaction, pairwise interaction, loss network)
//! - [`clan`]: backward ancestry construction
//! - [`cleaner`]: forward resolution of a clan and window projection
//! - [`forward`]: finite-volume forward constructions and the
//!   regeneration-based stationary oracle
//! - [`diagnostics`]: subcriticality certification and bias accounting
//! - [`oracle`]: exact enumeration, exact sampling, and statistical tests
//! - [`io`]: run configuration, sample records, commands, SVG rendering

pub mod clan;
pub mod cleaner;
pub mod diagnostics;
pub mod forward;
pub mod geom;
pub mod io;
pub mod model;
pub mod models;
pub mod oracle;
pub mod stream;
