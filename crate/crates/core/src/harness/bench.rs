use rayon::prelude::*;

use super::ber::config_meta;
use super::config::SystemConfig;
use super::result::{SweepResult, SweepRow};
use crate::analysis::theoretical_ber;
use crate::benchmarks::{conditional_benchmark_ber, SchemeTag};
use crate::channel::sample_channels;
use crate::error::{Error, Result};
use crate::numerics::{stream_rng, DftPlan, StreamKey};
use crate::receiver::{channel_gains, mmse_output_snr};
use crate::scalar::Cx;

pub const EXPERIMENT_BENCH: u16 = 4;

/// Mean BER and its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerEstimate {
    pub mean: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchPoint {
    pub snr_db: f64,
    pub tx_power: f64,
    /// Cyclic delay diversity with MMSE equalization, perfect CSI.
    pub proposed: BerEstimate,
    pub schemes: Vec<(SchemeTag, BerEstimate)>,
}

impl BenchPoint {
    pub fn scheme(&self, tag: SchemeTag) -> Option<BerEstimate> {
        self.schemes.iter().find(|s| s.0 == tag).map(|s| s.1)
    }
}

fn estimate(values: impl Iterator<Item = f64>) -> BerEstimate {
    let (mut n, mut s, mut s2) = (0.0, 0.0, 0.0);
    for v in values {
        n += 1.0;
        s += v;
        s2 += v * v;
    }
    let var = if n > 1.0 { (s2 - s * s / n).max(0.0) / (n - 1.0) } else { 0.0 };
    BerEstimate { mean: s / n, se: (var / n).sqrt() }
}

/// Semi-analytical comparison over a flat backward link. Every realization
/// feeds all schemes: the proposed scheme contributes `Q(sqrt(gamma_MMSE))`
/// and each benchmark its BER averaged in closed form over the forward link.
pub fn bench_compare_detailed(config: &SystemConfig, snr_grid_db: &[f64]) -> Result<Vec<BenchPoint>> {
    config.validate()?;
    if config.taps != 1 {
        return Err(Error::Unsupported(format!("benchmark comparison needs L_g = 1, got {}", config.taps)));
    }
    let tags: Vec<SchemeTag> = SchemeTag::ALL
        .into_iter()
        .filter(|&t| t != SchemeTag::AlamoutiGrouped || config.antennas.is_multiple_of(2))
        .collect();
    let model = config.channel_model()?;
    let plan = DftPlan::new(config.block_len)?;
    let delta_gamma = config.delta_gamma();
    let mut points = Vec::with_capacity(snr_grid_db.len());
    for (pi, &snr_db) in snr_grid_db.iter().enumerate() {
        let pt = config.tx_power(snr_db)?;
        let gamma_bar = pt * delta_gamma / config.noise_var;
        let rows: Vec<Vec<f64>> = (0..config.realizations)
            .into_par_iter()
            .map(|r| {
                let mut rng = stream_rng(config.master_seed, StreamKey::new(EXPERIMENT_BENCH, pi as u16, r as u32));
                let ch = sample_channels(&model, &mut rng)?;
                let lambda = channel_gains(&plan, &ch.equivalent)?;
                let mut vals = vec![theoretical_ber(mmse_output_snr(&lambda, gamma_bar).max(0.0))?];
                let g: Vec<Cx<f64>> = ch.backward.iter().map(|g| g[0]).collect();
                for &tag in &tags {
                    vals.push(conditional_benchmark_ber(tag, &g, model.gains.forward, pt, config.noise_var)?);
                }
                Ok(vals)
            })
            .collect::<Result<Vec<_>>>()?;
        points.push(BenchPoint {
            snr_db,
            tx_power: pt,
            proposed: estimate(rows.iter().map(|v| v[0])),
            schemes: tags.iter().enumerate().map(|(k, &t)| (t, estimate(rows.iter().map(|v| v[k + 1])))).collect(),
        });
    }
    Ok(points)
}

/// Whether the proposed scheme beats every benchmark at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderingVerdict {
    pub snr_db: f64,
    pub proposed: f64,
    pub benchmarks: Vec<(SchemeTag, f64)>,
    pub passed: bool,
}

impl OrderingVerdict {
    pub fn from_point(p: &BenchPoint) -> Self {
        let benchmarks: Vec<(SchemeTag, f64)> = p.schemes.iter().map(|(t, e)| (*t, e.mean)).collect();
        let passed = benchmarks.iter().all(|&(_, b)| p.proposed.mean < b);
        Self { snr_db: p.snr_db, proposed: p.proposed.mean, benchmarks, passed }
    }
}

pub fn run_bench_compare(config: &SystemConfig, snr_grid_db: &[f64]) -> Result<SweepResult> {
    let points = bench_compare_detailed(config, snr_grid_db)?;
    Ok(bench_rows(config, snr_grid_db, &points))
}

/// CSV rows for already computed comparison points.
pub fn bench_rows(config: &SystemConfig, snr_grid_db: &[f64], points: &[BenchPoint]) -> SweepResult {
    let mut out = SweepResult { rows: config_meta("bench", config, snr_grid_db) };
    for p in points {
        let mut push = |scheme: &str, equalizer: &str, e: BerEstimate| {
            out.push(SweepRow {
                experiment_id: "bench".into(),
                scheme: scheme.into(),
                equalizer: equalizer.into(),
                csi: "perfect".into(),
                antennas: config.antennas,
                taps: config.taps,
                snr_db: Some(p.snr_db),
                metric: "ber_semi_analytic".into(),
                value: e.mean,
                ci_halfwidth: Some(1.96 * e.se),
                n_realizations: config.realizations as u64,
                seed: config.master_seed,
            })
        };
        push("proposed", "MMSE", p.proposed);
        for &(tag, e) in &p.schemes {
            push(tag.name(), "ML", e);
        }
    }
    out
}
