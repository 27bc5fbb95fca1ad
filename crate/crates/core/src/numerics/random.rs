//! Seeded random streams.
//!
//! Every Monte Carlo realization owns a ChaCha8 generator seeded from the
//! master seed (via `SeedableRng::seed_from_u64`) and positioned on a
//! 64-bit ChaCha stream that packs `(experiment, point, index)` as
//! `experiment << 48 | point << 32 | index`. Distinct keys therefore never
//! share keystream, and a realization's draws do not depend on which worker
//! thread runs it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};
use crate::scalar::{Cx, Real};

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub experiment: u16,
    pub point: u16,
    pub index: u32,
}

impl StreamKey {
    pub fn new(experiment: u16, point: u16, index: u32) -> Self {
        Self { experiment, point, index }
    }

    pub fn stream_id(self) -> u64 {
        (u64::from(self.experiment) << 48) | (u64::from(self.point) << 32) | u64::from(self.index)
    }
}

pub fn stream_rng(master_seed: u64, key: StreamKey) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(key.stream_id());
    rng
}

/// `n` i.i.d. CN(0, variance) samples.
pub fn sample_cscg<T: Real, R: rand::Rng + ?Sized>(n: usize, variance: T, rng: &mut R) -> Result<Vec<Cx<T>>> {
    let mut out = vec![Cx::new(T::zero(), T::zero()); n];
    sample_cscg_into(&mut out, variance, rng)?;
    Ok(out)
}

/// Overwrites `out` with CN(0, variance) samples.
pub fn sample_cscg_into<T: Real, R: rand::Rng + ?Sized>(out: &mut [Cx<T>], variance: T, rng: &mut R) -> Result<()> {
    if !(variance >= T::zero()) {
        return invalid(format!("CSCG variance must be >= 0, got {variance}"));
    }
    let scale = (variance.as_f64() / 2.0).sqrt();
    for v in out.iter_mut() {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        *v = Cx::new(T::lit(re * scale), T::lit(im * scale));
    }
    Ok(())
}
