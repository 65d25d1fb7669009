//! Exact iterated rounding for survivable network design.
//!
//! The crate covers skew-supermodular requirement functions by graphs with
//! Jain's iterated rounding, reduces element- and hyperedge-connectivity
//! problems to that core, and re-checks the structure of every basic
//! feasible solution it produces (half-integrality of the largest
//! coordinate, laminar tight families, counting identities). All arithmetic
//! on costs and LP values is exact.

pub mod certify;
pub mod connectivity;
pub mod exactlp;
pub mod instances;
pub mod linalg;
pub mod oracle;
pub mod rational;
pub mod reductions;
pub mod requirements;
pub mod rounding;
pub mod vertex_set;

pub use instances::{EdgeId, Graph, Ground, Hypergraph, Instance, PairRequirements};
pub use rational::Rational;
pub use vertex_set::VertexSet;
