use rayon::prelude::*;

use super::ber::config_meta;
use super::config::{OutageEstimator, RegimeChoice, SystemConfig};
use super::result::{proportion_ci, SweepResult, SweepRow};
use crate::analysis::{exponential_sum_cdf, gk_sum_params, outage_general, outage_special, OutageQuery};
use crate::channel::sample_link_energies;
use crate::error::{invalid, Result};
use crate::numerics::{stream_rng, StreamKey};

pub const EXPERIMENT_OUTAGE: u16 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct OutagePoint {
    pub snr_db: f64,
    pub tx_power: f64,
    /// Realizations in outage and total realizations.
    pub plain: Option<(u64, u64)>,
    /// Conditional estimate and its standard error.
    pub conditional: Option<(f64, f64)>,
    pub analytical: f64,
}

impl OutagePoint {
    pub fn plain_probability(&self) -> Option<f64> {
        self.plain.map(|(k, n)| k as f64 / n as f64)
    }
}

pub fn outage_query(config: &SystemConfig, tx_power: f64) -> Result<OutageQuery<f64>> {
    OutageQuery::new(tx_power, config.noise_var, config.rate, config.delta_gamma())
}

/// Closed form for the configured regime: the generalized-K expression
/// (moment matched when `M > 1`) or the incomplete-gamma form under a
/// line-of-sight forward link.
pub fn analytical_outage(config: &SystemConfig, tx_power: f64) -> Result<f64> {
    let q = outage_query(config, tx_power)?;
    let g = config.gains()?;
    match config.regime {
        RegimeChoice::General => outage_general(&q, gk_sum_params(config.antennas, config.taps, g.cascaded())?),
        RegimeChoice::Los => outage_special(&q, config.antennas, config.taps, g.forward, g.backward),
    }
}

/// `P(sum_m w_m |f_m|^2 < threshold)` with `|f_m|^2 ~ Exp(1)`.
pub fn conditional_outage(weights: &[f64], threshold: f64) -> Result<f64> {
    if let [w] = weights {
        if !(*w > 0.0) {
            return invalid("weight must be positive");
        }
        return Ok(-(-threshold / w).exp_m1());
    }
    exponential_sum_cdf(weights, threshold)
}

pub fn outage_sweep_detailed(config: &SystemConfig, snr_grid_db: &[f64]) -> Result<Vec<OutagePoint>> {
    config.validate()?;
    let model = config.channel_model()?;
    let beta1 = model.gains.forward;
    let (want_plain, want_cond) = match config.outage_estimator {
        OutageEstimator::Plain => (true, false),
        OutageEstimator::Conditional => (false, true),
        OutageEstimator::Both => (true, true),
    };
    let mut points = Vec::with_capacity(snr_grid_db.len());
    for (pi, &snr_db) in snr_grid_db.iter().enumerate() {
        let pt = config.tx_power(snr_db)?;
        let threshold = outage_query(config, pt)?.gain_threshold();
        let draws: Vec<(bool, f64)> = (0..config.realizations)
            .into_par_iter()
            .map_init(Vec::new, |buf, r| {
                let mut rng = stream_rng(config.master_seed, StreamKey::new(EXPERIMENT_OUTAGE, pi as u16, r as u32));
                let energy = sample_link_energies(&model, &mut rng, buf)?;
                let hit = energy < threshold;
                let cond = if !want_cond {
                    0.0
                } else if config.regime == RegimeChoice::Los {
                    f64::from(u8::from(hit))
                } else {
                    let w: Vec<f64> = buf.iter().map(|&e| beta1 * e).collect();
                    conditional_outage(&w, threshold)?
                };
                Ok((hit, cond))
            })
            .collect::<Result<Vec<_>>>()?;
        let n = draws.len() as f64;
        let plain = want_plain.then(|| (draws.iter().filter(|d| d.0).count() as u64, draws.len() as u64));
        let conditional = want_cond.then(|| {
            let (s, s2) = draws.iter().fold((0.0, 0.0), |(a, b), d| (a + d.1, b + d.1 * d.1));
            let var = if n > 1.0 { (s2 - s * s / n).max(0.0) / (n - 1.0) } else { 0.0 };
            (s / n, (var / n).sqrt())
        });
        points.push(OutagePoint {
            snr_db,
            tx_power: pt,
            plain,
            conditional,
            analytical: analytical_outage(config, pt)?,
        });
    }
    Ok(points)
}

pub fn run_outage_sweep(config: &SystemConfig, snr_grid_db: &[f64]) -> Result<SweepResult> {
    let points = outage_sweep_detailed(config, snr_grid_db)?;
    let mut out = SweepResult { rows: config_meta("outage", config, snr_grid_db) };
    for p in &points {
        let row = |metric: &str, value: f64, ci: Option<f64>| SweepRow {
            experiment_id: "outage".into(),
            scheme: "proposed".into(),
            equalizer: "MFB".into(),
            csi: "perfect".into(),
            antennas: config.antennas,
            taps: config.taps,
            snr_db: Some(p.snr_db),
            metric: metric.into(),
            value,
            ci_halfwidth: ci,
            n_realizations: config.realizations as u64,
            seed: config.master_seed,
        };
        if let Some((k, n)) = p.plain {
            let v = k as f64 / n as f64;
            out.push(row("outage_mc", v, Some(proportion_ci(v, n))));
        }
        if let Some((v, se)) = p.conditional {
            out.push(row("outage_cmc", v, Some(1.96 * se)));
        }
        out.push(row("outage_theory", p.analytical, None));
    }
    Ok(out)
}
