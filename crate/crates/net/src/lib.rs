//! Wire codec, transport, proxy and command line for qid-core sessions.
//!
//! The QUBITS frame carries the simulator's hidden qubit state (value,
//! basis and multipulse flag) in clear. Only the simulator's own roles read
//! it through their sanctioned channel APIs; it is not a physical encoding.

pub mod cli;
pub mod config;
pub mod frame;
pub mod proxy;
pub mod transport;
