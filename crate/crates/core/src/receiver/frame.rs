use super::equalizer::{channel_gains, EqualizerKind};
use super::estimation::{ChannelEstimate, LsEstimator};
use super::preprocess::{
    estimate_direct_mean, ola_noise_profile, overlap_add, snr_loss, suppress_direct, to_frequency_domain, OlaBlock,
};
use crate::channel::ChannelRealization;
use crate::error::{invalid, Result};
use crate::numerics::DftPlan;
use crate::scalar::{Cx, Real};
use crate::waveform::{demodulate, generate_pilot_block, CddConfig, ModulationAlphabet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsiMode {
    /// Equalize with the true CIR and the true residual direct link.
    Perfect,
    /// Equalize with the LS estimate from the pilot pair.
    Estimated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverConfig<T: Real> {
    pub cdd: CddConfig,
    pub zp_len: usize,
    pub taps: usize,
    pub alphabet: ModulationAlphabet<T>,
    pub pilot_root: usize,
    pub equalizer: EqualizerKind,
    pub csi: CsiMode,
    /// Blocks averaged for the direct-link mean; `None` uses the whole frame.
    pub mean_window: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameDecision<T: Real> {
    /// Detected payload bits of every data block, in order.
    pub bits: Vec<u8>,
    /// Predicted post-equalization SNR of each data block.
    pub predicted_snr: Vec<T>,
    pub estimate: Option<ChannelEstimate<T>>,
}

/// Frame-level receiver holding only immutable, precomputed state, so one
/// instance can be shared across worker threads.
#[derive(Debug, Clone)]
pub struct FrameReceiver<T: Real> {
    config: ReceiverConfig<T>,
    plan: DftPlan<T>,
    estimator: LsEstimator<T>,
}

impl<T: Real> FrameReceiver<T> {
    pub fn new(config: ReceiverConfig<T>) -> Result<Self> {
        let n = config.cdd.block_len;
        if config.taps == 0 || config.taps - 1 > config.zp_len {
            return invalid("guard interval shorter than L_g - 1");
        }
        if config.mean_window == Some(0) {
            return invalid("direct-link averaging window must cover at least one block");
        }
        let alpha = ola_noise_profile(n, config.taps)?;
        let pilot = generate_pilot_block(n, &config.alphabet, config.pilot_root)?;
        let estimator = LsEstimator::new(&pilot, config.cdd, config.taps, &alpha)?;
        Ok(Self { plan: DftPlan::new(n)?, estimator, config })
    }

    pub fn config(&self) -> &ReceiverConfig<T> {
        &self.config
    }

    pub fn estimator(&self) -> &LsEstimator<T> {
        &self.estimator
    }

    pub fn plan(&self) -> &DftPlan<T> {
        &self.plan
    }

    /// Splits the stream into blocks, removes the direct-link mean and folds
    /// each block with OLA. Also returns the mean itself.
    pub fn preprocess(&self, rx: &[Cx<T>]) -> Result<(Cx<T>, Vec<OlaBlock<T>>)> {
        let n = self.config.cdd.block_len;
        let nc = n + self.config.zp_len;
        if rx.is_empty() || !rx.len().is_multiple_of(nc) {
            return invalid(format!("stream of {} samples is not a whole number of {nc}-sample blocks", rx.len()));
        }
        let window = self.config.mean_window.map_or(rx.len(), |w| (w * nc).min(rx.len()));
        let z_bar = estimate_direct_mean(&rx[..window])?;
        let blocks = rx
            .chunks(nc)
            .map(|blk| overlap_add(&suppress_direct(blk, z_bar), n, self.config.taps))
            .collect::<Result<Vec<_>>>()?;
        Ok((z_bar, blocks))
    }

    pub fn detect(
        &self,
        rx: &[Cx<T>],
        channel: &ChannelRealization<T>,
        tx_power: T,
        noise_var: T,
    ) -> Result<FrameDecision<T>> {
        if !(tx_power > T::zero()) || !(noise_var > T::zero()) {
            return invalid("transmit power and noise variance must be positive");
        }
        let (z_bar, blocks) = self.preprocess(rx)?;
        if blocks.len() < 3 {
            return invalid("frame needs two pilot blocks and at least one data block");
        }
        let (h_eq, delta_hd, estimate) = match self.config.csi {
            CsiMode::Perfect => (channel.equivalent.clone(), channel.direct - z_bar / tx_power.sqrt(), None),
            CsiMode::Estimated => {
                let est = self.estimator.estimate(&blocks[0], &blocks[1], tx_power)?;
                (est.h_eq_est.clone(), est.delta_hd_est, Some(est))
            }
        };
        let lambda = channel_gains(&self.plan, &h_eq)?;
        let gamma_bar = tx_power * snr_loss::<T>(self.config.cdd.block_len, self.config.taps) / noise_var;
        let mut bits = Vec::new();
        let mut predicted_snr = Vec::with_capacity(blocks.len() - 2);
        for blk in &blocks[2..] {
            let y = to_frequency_domain(&self.plan, blk, delta_hd, tx_power)?;
            let out = self.config.equalizer.equalize(&self.plan, &y, &lambda, gamma_bar, &self.config.alphabet)?;
            bits.extend(demodulate(&out.hard_symbols, &self.config.alphabet));
            predicted_snr.push(out.predicted_snr);
        }
        Ok(FrameDecision { bits, predicted_snr, estimate })
    }
}
