//! Constraint solving and clone analysis over free amalgamation classes of
//! symmetric binary structures, computed entirely at the level of orbits.

pub mod bipartite;
pub mod compose;
pub mod error;
pub mod identities;
pub mod instance_graph;
pub mod label;
pub mod obstruction;
pub mod oracle;
pub mod pp;
pub mod relation;
pub mod solver;
pub mod template;
pub mod uniformity;

pub use error::{AlgebraError, AnalysisError, IdentityError, SolverError, TemplateError};
pub use label::{Color, OrbitLabel};
pub use relation::{OrbitRelation, OrbitalSet};
pub use template::Template;
