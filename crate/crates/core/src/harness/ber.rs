use rand::Rng;
use rayon::prelude::*;

use super::config::{csi_name, EqualizerChoice, RegimeChoice, SystemConfig};
use super::result::{proportion_ci, SweepResult, SweepRow};
use crate::analysis::{mfb_snr, theoretical_ber};
use crate::channel::{propagate, sample_channels};
use crate::error::Result;
use crate::numerics::{stream_rng, StreamKey};
use crate::receiver::{CsiMode, FrameReceiver};
use crate::waveform::build_frame;

pub const EXPERIMENT_BER: u16 = 1;

/// Aggregated outcome of one receiver path at one SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveStats {
    pub equalizer: EqualizerChoice,
    pub csi: CsiMode,
    pub bit_errors: u64,
    pub bits: u64,
    /// Mean over realizations of `Q(sqrt(predicted SNR))`.
    pub theory_mean: f64,
    pub theory_se: f64,
    /// Standard error of the per-realization difference between the
    /// simulated and the predicted BER.
    pub gap_se: f64,
}

impl CurveStats {
    pub fn ber(&self) -> f64 {
        if self.bits == 0 {
            f64::NAN
        } else {
            self.bit_errors as f64 / self.bits as f64
        }
    }

    pub fn simulated(&self) -> bool {
        self.equalizer != EqualizerChoice::Mfb
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerPoint {
    pub snr_db: f64,
    pub tx_power: f64,
    pub curves: Vec<CurveStats>,
}

impl BerPoint {
    pub fn curve(&self, equalizer: EqualizerChoice, csi: CsiMode) -> Option<&CurveStats> {
        self.curves.iter().find(|c| c.equalizer == equalizer && c.csi == csi)
    }
}

/// Receiver paths of a sweep; the bound is evaluated once, with perfect CSI.
pub fn receiver_paths(config: &SystemConfig) -> Vec<(EqualizerChoice, CsiMode)> {
    let mut out = Vec::new();
    for &eq in &config.equalizers {
        if eq == EqualizerChoice::Mfb {
            out.push((eq, CsiMode::Perfect));
        } else {
            out.extend(config.csi.iter().map(|&c| (eq, c)));
        }
    }
    out
}

struct Outcome {
    errors: Vec<u64>,
    predicted: Vec<f64>,
}

fn random_bits<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<u8> {
    let mut bits = Vec::with_capacity(n);
    while bits.len() < n {
        let word: u64 = rng.random();
        bits.extend((0..64).map(|i| ((word >> i) & 1) as u8).take(n - bits.len()));
    }
    bits
}

/// Full Monte Carlo BER sweep with per-path statistics.
pub fn ber_sweep_detailed(config: &SystemConfig, snr_grid_db: &[f64]) -> Result<Vec<BerPoint>> {
    config.validate()?;
    if snr_grid_db.len() > u16::MAX as usize {
        return crate::error::invalid("too many SNR points");
    }
    let paths = receiver_paths(config);
    let receivers = paths
        .iter()
        .map(|&(eq, csi)| match eq {
            EqualizerChoice::Mfb => Ok(None),
            _ => FrameReceiver::new(config.receiver_config(eq, csi)?).map(Some),
        })
        .collect::<Result<Vec<_>>>()?;
    let model = config.channel_model()?;
    let spec = config.frame_spec()?;
    let n_bits = spec.bits_per_block() * config.data_blocks;
    let delta_gamma = config.delta_gamma();
    let sigma2 = config.noise_var;

    let mut points = Vec::with_capacity(snr_grid_db.len());
    for (pi, &snr_db) in snr_grid_db.iter().enumerate() {
        let pt = config.tx_power(snr_db)?;
        let outcomes: Vec<Outcome> = (0..config.realizations)
            .into_par_iter()
            .map(|r| {
                let mut rng = stream_rng(config.master_seed, StreamKey::new(EXPERIMENT_BER, pi as u16, r as u32));
                let ch = sample_channels(&model, &mut rng)?;
                let payload = random_bits(n_bits, &mut rng);
                let frame = build_frame(&payload, &spec)?;
                let rx = propagate(&frame, &ch, config.zp_len, pt, sigma2, &mut rng)?;
                let mut errors = Vec::with_capacity(paths.len());
                let mut predicted = Vec::with_capacity(paths.len());
                for receiver in &receivers {
                    match receiver {
                        None => {
                            errors.push(0);
                            predicted.push(theoretical_ber(mfb_snr(&ch, pt, sigma2, delta_gamma)?)?);
                        }
                        Some(rxr) => {
                            let dec = rxr.detect(&rx, &ch, pt, sigma2)?;
                            errors.push(dec.bits.iter().zip(&payload).filter(|(a, b)| a != b).count() as u64);
                            let q =
                                dec.predicted_snr.iter().map(|&g| theoretical_ber(g.max(0.0))).sum::<Result<f64>>()?;
                            predicted.push(q / dec.predicted_snr.len() as f64);
                        }
                    }
                }
                Ok(Outcome { errors, predicted })
            })
            .collect::<Result<Vec<_>>>()?;

        let n = outcomes.len() as f64;
        let curves = paths
            .iter()
            .enumerate()
            .map(|(k, &(equalizer, csi))| {
                let bit_errors: u64 = outcomes.iter().map(|o| o.errors[k]).sum();
                let (mut s, mut s2, mut d, mut d2) = (0.0, 0.0, 0.0, 0.0);
                for o in &outcomes {
                    let q = o.predicted[k];
                    let gap = o.errors[k] as f64 / n_bits as f64 - q;
                    s += q;
                    s2 += q * q;
                    d += gap;
                    d2 += gap * gap;
                }
                let se = |sum: f64, sq: f64| {
                    if n < 2.0 {
                        0.0
                    } else {
                        ((sq - sum * sum / n).max(0.0) / (n - 1.0) / n).sqrt()
                    }
                };
                let simulated = equalizer != EqualizerChoice::Mfb;
                CurveStats {
                    equalizer,
                    csi,
                    bit_errors,
                    bits: if simulated { n_bits as u64 * outcomes.len() as u64 } else { 0 },
                    theory_mean: s / n,
                    theory_se: se(s, s2),
                    gap_se: if simulated { se(d, d2) } else { 0.0 },
                }
            })
            .collect();
        points.push(BerPoint { snr_db, tx_power: pt, curves });
    }
    Ok(points)
}

pub(crate) fn meta_row(experiment: &str, config: &SystemConfig, key: &str, value: f64) -> SweepRow {
    SweepRow {
        experiment_id: experiment.to_string(),
        scheme: String::new(),
        equalizer: String::new(),
        csi: String::new(),
        antennas: config.antennas,
        taps: config.taps,
        snr_db: None,
        metric: format!("meta.{key}"),
        value,
        ci_halfwidth: None,
        n_realizations: config.realizations as u64,
        seed: config.master_seed,
    }
}

pub(crate) fn config_meta(experiment: &str, config: &SystemConfig, grid: &[f64]) -> Vec<SweepRow> {
    let mut rows = vec![
        ("N", config.block_len as f64),
        ("N_zp", config.zp_len as f64),
        ("N_p", config.pilot_blocks as f64),
        ("D", config.delay() as f64),
        ("sigma2", config.noise_var),
        ("bits_per_symbol", config.modulation_bits as f64),
        ("R", config.rate),
        ("bi_gdfe_iters", config.bi_gdfe_iters as f64),
        ("data_blocks", config.data_blocks as f64),
        ("mean_window_blocks", config.mean_window_blocks.unwrap_or(0) as f64),
        ("regime_los", f64::from(u8::from(config.regime == RegimeChoice::Los))),
        ("theta", config.aoa),
        ("r", config.spacing),
    ];
    if let (Some(first), Some(last)) = (grid.first(), grid.last()) {
        rows.push(("snr_start_db", *first));
        rows.push(("snr_stop_db", *last));
        rows.push(("snr_points", grid.len() as f64));
    }
    rows.into_iter().map(|(k, v)| meta_row(experiment, config, k, v)).collect()
}

pub fn run_ber_sweep(config: &SystemConfig, snr_grid_db: &[f64]) -> Result<SweepResult> {
    let points = ber_sweep_detailed(config, snr_grid_db)?;
    let mut out = SweepResult { rows: config_meta("ber", config, snr_grid_db) };
    for p in &points {
        for c in &p.curves {
            let row = |metric: &str, value: f64, ci: f64| SweepRow {
                experiment_id: "ber".into(),
                scheme: "proposed".into(),
                equalizer: c.equalizer.name().into(),
                csi: csi_name(c.csi).into(),
                antennas: config.antennas,
                taps: config.taps,
                snr_db: Some(p.snr_db),
                metric: metric.into(),
                value,
                ci_halfwidth: Some(ci),
                n_realizations: config.realizations as u64,
                seed: config.master_seed,
            };
            if c.simulated() {
                out.push(row("ber", c.ber(), proportion_ci(c.ber(), c.bits)));
            }
            out.push(row("ber_theory", c.theory_mean, 1.96 * c.theory_se));
        }
    }
    Ok(out)
}
