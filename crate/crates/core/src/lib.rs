pub mod error;
pub mod graph;
pub mod harness;
pub mod kernels;
pub mod learn;
pub mod manifold;
pub mod spectral;
