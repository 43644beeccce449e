//! Property testers for the discrete Fréchet distance.
//!
//! Given curves `P` and `Q` and a threshold `δ`, the testers decide with few
//! queries to the free space matrix whether `d_dF(P, Q) <= δ` or the pair is
//! far from it. Exact quadratic algorithms in [`reference`] serve as ground
//! truth; [`harness`] runs seeded experiments on certified instances.

pub mod freespace;
pub mod geometry;
pub mod harness;
pub mod io;
pub mod reference;
pub mod testers;

pub use freespace::{Axis, ExplicitMatrix, FreeSpaceOracle, OracleError, QueryOracle, ZeroList};
pub use geometry::{Curve, GeometryError, Point};
pub use harness::{Algorithm, HarnessError, InstanceRecipe, Params, TrialConfig, TrialReport};
pub use testers::{Answer, Diagnostics, TesterError, Verdict, Witness};
