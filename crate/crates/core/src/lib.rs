pub mod adversaries;
pub mod analysis;
pub mod bits;
pub mod codes;
pub mod galois;
pub mod protocols;
pub mod qchannel;
pub mod rng;
