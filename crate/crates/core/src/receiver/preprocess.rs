use crate::error::{invalid, Result};
use crate::numerics::DftPlan;
use crate::scalar::{Cx, Real};

/// Length-N block after overlap-add, with its per-sample noise weights.
#[derive(Debug, Clone, PartialEq)]
pub struct OlaBlock<T: Real> {
    pub y: Vec<Cx<T>>,
    pub noise_profile: Vec<T>,
}

/// `[2; L_g - 1]` followed by `[1; N - L_g + 1]`.
pub fn ola_noise_profile<T: Real>(block_len: usize, taps: usize) -> Result<Vec<T>> {
    if taps == 0 || taps > block_len {
        return invalid(format!("need 1 <= L_g <= N, got L_g = {taps}, N = {block_len}"));
    }
    let mut alpha = vec![T::one(); block_len];
    for a in alpha.iter_mut().take(taps - 1) {
        *a = T::lit(2.0);
    }
    Ok(alpha)
}

/// SNR loss `N / (N + L_g - 1)` from folding the guard tail.
pub fn snr_loss<T: Real>(block_len: usize, taps: usize) -> T {
    T::from_usize_lossy(block_len) / T::from_usize_lossy(block_len + taps - 1)
}

/// Mean of the received samples over the averaging window.
pub fn estimate_direct_mean<T: Real>(samples: &[Cx<T>]) -> Result<Cx<T>> {
    if samples.is_empty() {
        return invalid("cannot average an empty stream");
    }
    let sum = samples.iter().fold(Cx::new(T::zero(), T::zero()), |acc, &z| acc + z);
    Ok(sum / T::from_usize_lossy(samples.len()))
}

pub fn suppress_direct<T: Real>(z: &[Cx<T>], z_bar: Cx<T>) -> Vec<Cx<T>> {
    z.iter().map(|&v| v - z_bar).collect()
}

/// Folds samples `N .. N + L_g - 2` onto samples `0 .. L_g - 2`.
pub fn overlap_add<T: Real>(z_hat: &[Cx<T>], block_len: usize, taps: usize) -> Result<OlaBlock<T>> {
    if z_hat.len() < block_len {
        return invalid(format!("block of {} samples is shorter than N = {block_len}", z_hat.len()));
    }
    let zp_len = z_hat.len() - block_len;
    if taps == 0 || taps - 1 > zp_len {
        return invalid(format!("L_g - 1 = {} exceeds the guard length {zp_len}", taps.saturating_sub(1)));
    }
    let mut y = z_hat[..block_len].to_vec();
    for i in 0..taps - 1 {
        y[i] = y[i] + z_hat[block_len + i];
    }
    Ok(OlaBlock { y, noise_profile: ola_noise_profile(block_len, taps)? })
}

/// `W (y - sqrt(p_t) dh alpha) / sqrt(p_t)`.
pub fn to_frequency_domain<T: Real>(
    plan: &DftPlan<T>,
    block: &OlaBlock<T>,
    delta_hd: Cx<T>,
    tx_power: T,
) -> Result<Vec<Cx<T>>> {
    if !(tx_power > T::zero()) {
        return invalid(format!("transmit power must be positive, got {tx_power}"));
    }
    if block.y.len() != plan.len() {
        return invalid(format!("block length {} does not match DFT size {}", block.y.len(), plan.len()));
    }
    let amp = tx_power.sqrt();
    let residual = delta_hd * amp;
    let inv = amp.recip();
    let mut out: Vec<Cx<T>> =
        block.y.iter().zip(&block.noise_profile).map(|(&y, &a)| (y - residual * a) * inv).collect();
    plan.forward_in_place(&mut out);
    Ok(out)
}
