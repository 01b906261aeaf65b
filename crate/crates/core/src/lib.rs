//! Elastic block ciphers of arbitrary level.
//!
//! Given a fixed-length block cipher E0 on `L` bits whose rounds end in a key
//! XOR, [`engine`] builds the level-n elastic extension E_n, which enciphers
//! any length between `2^(n-1) L` and `2^n L`. Around it sit the analysis
//! tools: [`cycle`] finds the cycle length of a round function,
//! [`diffusion`] measures bit influence and flip statistics, and
//! [`reduction`] turns a round-key recovery attack on a reduced E_n into a
//! cycle-key recovery for E_(n-1).
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;

pub mod bits;
pub mod cipher;
pub mod cycle;
pub mod diffusion;
pub mod engine;
pub mod error;
pub mod keystream;
pub mod reduction;

pub use bits::BitString;
pub use cipher::{sp16, sp8, BaseCipher, CipherSpec, RoundFunction, ToyCipher};
pub use engine::{decrypt, encrypt, ElasticCipher, ElasticParams};
pub use error::{Error, Result};
pub use keystream::{ExpandedKey, KeyLayout, MasterKey};
