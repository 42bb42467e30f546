//! Combinatorial calculus of semi-stable reduction for curves over a
//! complete discretely valued field with algebraically closed residue
//! field.
//!
//! Everything here is exact: rational exponents, continued fractions,
//! weighted dual graphs, and finite group actions on skeletons. There is
//! no floating point anywhere in the crate.
//!
//! The crate is organized around the objects it computes with:
//!
//! * [`exactmath`] — reduced rationals, Euclidean continued fractions,
//!   mediants, and unimodularity tests;
//! * [`annuli`] — fractional annuli on the analytic line: regularity,
//!   blowup resolution, and minimal subdivision into regular pieces;
//! * [`sncgraph`] — weighted dual graphs of snc models, their
//!   intersection-calculus validation, and the genus formula;
//! * [`triangulate`] — principalization, minimal strong triangulations
//!   in the tame case, the Saito degree, and tame base change;
//! * [`galois`] — finite group actions on semi-stable skeletons,
//!   quotients, splitting functions, nodes, and bending points;
//! * [`elliptic`] — the Kodaira dictionary relating reduction types,
//!   dual graphs, and the gluing exponent alpha.

pub mod annuli;
pub mod elliptic;
pub mod exactmath;
pub mod galois;
pub mod sncgraph;
pub mod triangulate;

pub use annuli::{BlowupDirection, BlowupStep, FormalFiberClass, FractionalAnnulus};
pub use exactmath::{ContinuedFraction, Rational};
pub use galois::{GaloisSkeleton, QuotientSkeleton};
pub use sncgraph::SncGraph;
pub use triangulate::{ComponentClass, SaitoReport};
