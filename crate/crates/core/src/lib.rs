//! Online selection of agents under a matroid constraint intersected with a
//! conflict graph, driven by an ex-ante LP and per-atom threshold prices.

pub mod agentset;
pub mod conflict;
pub mod corpus;
pub mod error;
pub mod exante;
pub mod instance;
pub mod json;
pub mod lp;
pub mod matroid;
pub mod mixture;
pub mod oracle;
pub mod policy;
pub mod scalar;
pub mod sim;
pub mod xos;

pub use agentset::AgentSet;
pub use conflict::ConflictGraph;
pub use error::{Error, LpError, Result};
pub use exante::{solve_exante, ExAnteSolution};
pub use instance::{Instance, MatroidSpec};
pub use matroid::MatroidOracle;
pub use mixture::{decompose, verify_mixture, Mixture};
pub use policy::{PricePlan, RunTrace};
pub use scalar::Scalar;
pub use sim::Estimate;
pub use xos::{XosInstance, XosPlan, XosValuation};

pub type InstanceF64 = Instance<f64>;
pub type InstanceF32 = Instance<f32>;
pub type XosInstanceF64 = XosInstance<f64>;
pub type XosInstanceF32 = XosInstance<f32>;
