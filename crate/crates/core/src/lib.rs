//! Collaborative regenerating codes under selfish and polluting nodes.
//!
//! * [`galois`]: GF(2^m) arithmetic, matrices, Reed-Solomon codes.
//! * [`capacity`]: exact min-cut capacities and MSR/MBR operating points.
//! * [`tradeoff`]: worst-case capacities and storage/bandwidth curves.
//! * [`exactcode`]: the exact Reed-Solomon based collaborative repair code.
//! * [`scenarios`]: cost tables and multi-generation adversarial simulation.

pub mod capacity;
pub mod exactcode;
pub mod galois;
pub mod scenarios;
pub mod tradeoff;
