//! Block-scrambling image encryption for encryption-then-compression (EtC)
//! pipelines with JPEG.
//!
//! Besides the ciphers themselves the crate carries the tooling to evaluate
//! them: key-space arithmetic, PSNR, a JPEG harness with an emulator for the
//! recompression social networks apply, and a jigsaw-puzzle solver that
//! attacks encrypted images.

pub mod analysis;
pub mod attack;
pub mod cipher;
pub mod error;
pub mod jpeg;
pub mod keys;
pub mod pixel;

pub use error::{Error, Result};
pub use pixel::Image;
