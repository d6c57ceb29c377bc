//! Storage of binary cycles in recurrent networks.
//!
//! A cycle Σ is an `N×p` matrix of ±1 entries whose columns are visited in order.
//! The crate decides whether Σ is admissible (some `J` satisfies `JΣ = ΣP`), builds
//! the pseudoinverse connectivity, classifies the cycle, extracts the network graph,
//! and simulates graded-response and spiking networks built from it.

pub mod admit;
pub mod binmat;
pub mod cli;
pub mod hopfield_sim;
pub mod learn;
pub mod spectra;
pub mod spiking_sim;
pub mod topo;
