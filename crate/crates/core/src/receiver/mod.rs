//! Reader-side processing: direct-carrier removal, overlap-add, pilot-based
//! LS estimation and frequency-domain equalization.

mod equalizer;
mod estimation;
mod frame;
mod preprocess;

pub use equalizer::{
    bi_gdfe, bi_gdfe_sinr, bi_gdfe_step, channel_gains, decision_correlation, equalize_mmse, equalize_zf,
    mmse_output_snr, zf_output_snr, EqualizerKind, EqualizerOutput,
};
pub use estimation::{ls_estimate, ChannelEstimate, LsEstimator};
pub use frame::{CsiMode, FrameDecision, FrameReceiver, ReceiverConfig};
pub use preprocess::{
    estimate_direct_mean, ola_noise_profile, overlap_add, snr_loss, suppress_direct, to_frequency_domain, OlaBlock,
};
