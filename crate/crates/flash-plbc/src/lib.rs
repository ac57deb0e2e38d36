//! Defect-masking error correction for SLC NAND flash.
//!
//! A wordline that is about to be programmed can be read first: cells whose
//! threshold voltage already sits above the read level will report "1" no
//! matter what is written, so they behave as stuck-at-1 defects. An
//! `[n, k, l]` partitioned BCH code spends `l` redundant bits on masking
//! those known-bad positions (choosing a codeword that agrees with them) and
//! `r = n - k - l` bits on ordinary random-error correction.
//!
//! The crate has three layers:
//!
//! * [`gf2`], [`bch`], [`pbch`] - bit-packed GF(2) linear algebra, GF(2^m)
//!   field/polynomial machinery, and the partitioned codec built on them.
//! * [`channel`] - a three-wordline SLC flash model: normal erase
//!   distribution, ISPP programming, inter-cell interference from
//!   neighboring cells, and noisy reads.
//! * [`experiments`], [`limits`] - Monte Carlo sweeps over redundancy
//!   allocations and channel parameters, plus closed-form capacity limits
//!   the measurements are compared against.

pub mod bch;
pub mod channel;
pub mod experiments;
pub mod gf2;
pub mod limits;
pub mod pbch;
