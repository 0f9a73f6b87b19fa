//! Minimum-cost repair of failed nodes in multi-hop distributed storage.
//!
//! A repair is planned by enumerating the cut constraints of the repair's
//! information flow graph and solving the resulting LP exactly over the
//! rationals. The optimal subgraph is then executed with random linear
//! network coding over a prime field, which keeps every `k` nodes able to
//! rebuild the file across any number of repair stages.

pub mod bounds;
pub mod coder;
pub mod combinatorics;
pub mod error;
pub mod exact;
pub mod fixtures;
pub mod flowgraph;
pub mod gf;
pub mod lp;
pub mod netmodel;
pub mod par;
pub mod ratio;
pub mod report;

pub use error::{Error, Result};
pub use netmodel::{NetworkSpec, NodeId};
pub use par::Exec;
pub use ratio::Rational;
