//! Deterministic numerical kernels: unitary DFT, a time-domain circular
//! convolution oracle, CSCG sampling, adaptive quadrature and the special
//! functions used by the outage analysis.

mod dft;
pub mod quadrature;
mod random;
mod special;

pub use dft::{circular_convolve, dft, idft, ComplexBlock, DftPlan};
pub use random::{sample_cscg, sample_cscg_into, stream_rng, SimRng, StreamKey};
pub use special::{bessel_k, ln_bessel_k, ln_gamma, lower_incomplete_gamma, q_function, regularized_lower_gamma};
