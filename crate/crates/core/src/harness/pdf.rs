use rayon::prelude::*;

use super::ber::{config_meta, meta_row};
use super::config::SystemConfig;
use super::result::{SweepResult, SweepRow};
use crate::analysis::{gk_pdf, gk_sum_params, GkParams};
use crate::channel::{sample_link_energies, ChannelModel, ChannelRegime, LinkGains};
use crate::error::{invalid, Result};
use crate::numerics::{stream_rng, StreamKey};

pub const EXPERIMENT_PDF: u16 = 3;
pub const DEFAULT_BINS: usize = 80;

/// Histogram of the cascaded gain `sum_m |f_m|^2 ||g_m||^2` with unit
/// large-scale gains, next to the moment-matched density.
#[derive(Debug, Clone, PartialEq)]
pub struct PdfHistogram {
    pub centers: Vec<f64>,
    pub bin_width: f64,
    pub empirical: Vec<f64>,
    pub theory: Vec<f64>,
    pub sample_mean: f64,
    pub sample_variance: f64,
    pub params: GkParams<f64>,
    pub draws: usize,
}

impl PdfHistogram {
    /// Largest absolute gap between the histogram and the density.
    pub fn sup_distance(&self) -> f64 {
        self.empirical.iter().zip(&self.theory).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

pub fn pdf_histogram_detailed(config: &SystemConfig, n_draws: usize, bins: usize) -> Result<PdfHistogram> {
    if n_draws < 10_000 {
        return invalid(format!("need at least 10^4 draws, got {n_draws}"));
    }
    if bins == 0 {
        return invalid("need at least one bin");
    }
    config.cdd()?;
    let model = ChannelModel {
        antennas: config.antennas,
        taps: config.taps,
        block_len: config.block_len,
        delay_step: config.delay(),
        gains: LinkGains::unit(),
        regime: ChannelRegime::GeneralRayleigh,
    };
    let params = gk_sum_params(config.antennas, config.taps, 1.0f64)?;
    let upper = params.mean() + 8.0 * params.variance().sqrt();
    let width = upper / bins as f64;
    let draws: Vec<f64> = (0..n_draws)
        .into_par_iter()
        .map_init(Vec::new, |buf, i| {
            let mut rng = stream_rng(config.master_seed, StreamKey::new(EXPERIMENT_PDF, 0, i as u32));
            sample_link_energies(&model, &mut rng, buf)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut counts = vec![0u64; bins];
    for &x in &draws {
        let b = (x / width) as usize;
        if b < bins {
            counts[b] += 1;
        }
    }
    let n = n_draws as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let var = draws.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    let centers: Vec<f64> = (0..bins).map(|b| (b as f64 + 0.5) * width).collect();
    let theory = centers.iter().map(|&x| gk_pdf(x, params)).collect::<Result<Vec<_>>>()?;
    Ok(PdfHistogram {
        empirical: counts.iter().map(|&c| c as f64 / (n * width)).collect(),
        centers,
        bin_width: width,
        theory,
        sample_mean: mean,
        sample_variance: var,
        params,
        draws: n_draws,
    })
}

/// Histogram rows reuse the `snr_db` column for the gain-axis bin center.
pub fn run_pdf_histogram(config: &SystemConfig, n_draws: usize) -> Result<SweepResult> {
    let h = pdf_histogram_detailed(config, n_draws, DEFAULT_BINS)?;
    let mut out = SweepResult { rows: config_meta("pdf", config, &[]) };
    for (k, v) in [
        ("bin_width", h.bin_width),
        ("snr_db_column_is_gain", 1.0),
        ("gk_k", h.params.k),
        ("gk_m", h.params.m),
        ("gk_omega", h.params.omega),
        ("gk_variance", h.params.variance()),
        ("sample_mean", h.sample_mean),
        ("sample_variance", h.sample_variance),
        ("sup_distance", h.sup_distance()),
        ("draws", n_draws as f64),
    ] {
        out.push(meta_row("pdf", config, k, v));
    }
    for (i, &x) in h.centers.iter().enumerate() {
        for (metric, value) in [("pdf_empirical", h.empirical[i]), ("pdf_theory", h.theory[i])] {
            out.push(SweepRow {
                experiment_id: "pdf".into(),
                scheme: "proposed".into(),
                equalizer: String::new(),
                csi: String::new(),
                antennas: config.antennas,
                taps: config.taps,
                snr_db: Some(x),
                metric: metric.into(),
                value,
                ci_halfwidth: None,
                n_realizations: n_draws as u64,
                seed: config.master_seed,
            });
        }
    }
    Ok(out)
}
