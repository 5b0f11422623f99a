//! Threshold secret custody over prime fields.
//!
//! The library splits a secret into the roots of a monic polynomial over
//! Z_p, maps those roots through a Vandermonde evaluation into per-holder
//! shares, and moves the shares to their holders through two
//! non-colluding third parties using one-time-pad layering. A companion
//! exponentiation-lock transport (`piggy_bank`) lets a holder pass values
//! through an untrusted channel with tamper evidence, and `qutrit` carries
//! the same 2-of-3 threshold idea over three-level quantum states.

pub mod adversary;
pub mod dual_ttp;
pub mod field;
pub mod partition;
pub mod piggy_bank;
pub mod qutrit;
pub mod rng;
pub mod share_file;
pub mod transcript;
