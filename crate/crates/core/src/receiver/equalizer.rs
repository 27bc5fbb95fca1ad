use crate::error::{invalid, Error, Result};
use crate::numerics::{q_function, DftPlan};
use crate::scalar::{Cx, Real};
use crate::waveform::{hard_decisions, ModulationAlphabet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EqualizerKind {
    Zf,
    Mmse,
    BiGdfe { max_iters: usize },
}

impl EqualizerKind {
    pub const DEFAULT_GDFE_ITERS: usize = 4;

    pub fn equalize<T: Real>(
        self,
        plan: &DftPlan<T>,
        y_freq: &[Cx<T>],
        lambda: &[Cx<T>],
        gamma_bar: T,
        alphabet: &ModulationAlphabet<T>,
    ) -> Result<EqualizerOutput<T>> {
        match self {
            Self::Zf => equalize_zf(plan, y_freq, lambda, gamma_bar, alphabet),
            Self::Mmse => equalize_mmse(plan, y_freq, lambda, gamma_bar, alphabet),
            Self::BiGdfe { max_iters } => bi_gdfe(plan, y_freq, lambda, gamma_bar, max_iters, alphabet),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EqualizerOutput<T: Real> {
    pub soft_symbols: Vec<Cx<T>>,
    pub hard_symbols: Vec<Cx<T>>,
    /// Post-equalization SNR (linear).
    pub predicted_snr: T,
    pub iterations_used: usize,
}

/// Per-bin gains `lambda = sqrt(N) W h_eq`.
pub fn channel_gains<T: Real>(plan: &DftPlan<T>, h_eq: &[Cx<T>]) -> Result<Vec<Cx<T>>> {
    if h_eq.len() != plan.len() {
        return invalid(format!("CIR length {} does not match DFT size {}", h_eq.len(), plan.len()));
    }
    let scale = T::from_usize_lossy(plan.len()).sqrt();
    let mut out = plan.forward(h_eq);
    for v in out.iter_mut() {
        *v = *v * scale;
    }
    Ok(out)
}

fn check_lengths<T: Real>(plan: &DftPlan<T>, y: &[Cx<T>], lambda: &[Cx<T>]) -> Result<()> {
    if y.len() != plan.len() || lambda.len() != plan.len() {
        return invalid(format!(
            "observation ({}) and gains ({}) must both have length {}",
            y.len(),
            lambda.len(),
            plan.len()
        ));
    }
    Ok(())
}

fn check_gamma<T: Real>(gamma_bar: T) -> Result<()> {
    if !(gamma_bar > T::zero()) || !gamma_bar.is_finite() {
        return invalid(format!("average SNR must be positive and finite, got {gamma_bar}"));
    }
    Ok(())
}

fn singular_bin<T: Real>(lambda: &[Cx<T>]) -> Option<(usize, T)> {
    let peak = lambda.iter().map(|v| v.norm()).fold(T::zero(), T::max);
    let floor = T::lit(1e-12) * peak;
    lambda.iter().enumerate().map(|(i, v)| (i, v.norm())).find(|&(_, mag)| !(mag > floor))
}

/// `gamma_bar N / sum |lambda_n|^-2`.
pub fn zf_output_snr<T: Real>(lambda: &[Cx<T>], gamma_bar: T) -> Result<T> {
    if let Some((bin, mag)) = singular_bin(lambda) {
        return Err(Error::SingularChannel { bin, magnitude: mag.as_f64() });
    }
    let inv: T = lambda.iter().map(|v| v.norm_sqr().recip()).sum();
    Ok(gamma_bar * T::from_usize_lossy(lambda.len()) / inv)
}

/// `(mean 1 / (1 + gamma_bar |lambda_n|^2))^-1 - 1`.
pub fn mmse_output_snr<T: Real>(lambda: &[Cx<T>], gamma_bar: T) -> T {
    let mean = lambda.iter().map(|v| (T::one() + gamma_bar * v.norm_sqr()).recip()).sum::<T>()
        / T::from_usize_lossy(lambda.len());
    mean.recip() - T::one()
}

pub fn equalize_zf<T: Real>(
    plan: &DftPlan<T>,
    y_freq: &[Cx<T>],
    lambda: &[Cx<T>],
    gamma_bar: T,
    alphabet: &ModulationAlphabet<T>,
) -> Result<EqualizerOutput<T>> {
    check_lengths(plan, y_freq, lambda)?;
    check_gamma(gamma_bar)?;
    let predicted_snr = zf_output_snr(lambda, gamma_bar)?;
    let mut soft: Vec<Cx<T>> = y_freq.iter().zip(lambda).map(|(y, l)| y / l).collect();
    plan.inverse_in_place(&mut soft);
    Ok(EqualizerOutput {
        hard_symbols: hard_decisions(&soft, alphabet),
        soft_symbols: soft,
        predicted_snr,
        iterations_used: 1,
    })
}

pub fn equalize_mmse<T: Real>(
    plan: &DftPlan<T>,
    y_freq: &[Cx<T>],
    lambda: &[Cx<T>],
    gamma_bar: T,
    alphabet: &ModulationAlphabet<T>,
) -> Result<EqualizerOutput<T>> {
    check_lengths(plan, y_freq, lambda)?;
    check_gamma(gamma_bar)?;
    let (soft, _) = gdfe_pass(plan, y_freq, lambda, gamma_bar, T::zero(), None);
    Ok(EqualizerOutput {
        hard_symbols: hard_decisions(&soft, alphabet),
        soft_symbols: soft,
        predicted_snr: mmse_output_snr(lambda, gamma_bar),
        iterations_used: 1,
    })
}

fn feedforward<T: Real>(lambda: Cx<T>, gamma_bar: T, rho: T) -> Cx<T> {
    lambda / ((T::one() - rho * rho) * lambda.norm_sqr() + gamma_bar.recip())
}

/// Post-FFE SINR for decision correlation `rho`:
/// `alpha^2 / ((1 - rho^2) mean|f* lambda - alpha|^2 + mean|f|^2 / gamma_bar)`.
pub fn bi_gdfe_sinr<T: Real>(lambda: &[Cx<T>], gamma_bar: T, rho: T) -> T {
    let n = T::from_usize_lossy(lambda.len());
    let gains: Vec<(T, T)> = lambda
        .iter()
        .map(|&l| {
            let f = feedforward(l, gamma_bar, rho);
            ((f.conj() * l).re, f.norm_sqr())
        })
        .collect();
    let alpha = gains.iter().map(|g| g.0).sum::<T>() / n;
    let isi = gains.iter().map(|g| (g.0 - alpha) * (g.0 - alpha)).sum::<T>() / n;
    let noise = gains.iter().map(|g| g.1).sum::<T>() / n / gamma_bar;
    alpha * alpha / ((T::one() - rho * rho) * isi + noise)
}

/// Correlation between decisions and symbols implied by `sinr` for Gray
/// QPSK, clipped to `[0, 0.9999]`.
pub fn decision_correlation<T: Real>(sinr: T) -> T {
    let rho = T::one() - T::lit(2.0) * q_function(sinr.max(T::zero()).sqrt());
    rho.max(T::zero()).min(T::lit(0.9999))
}

fn gdfe_pass<T: Real>(
    plan: &DftPlan<T>,
    y_freq: &[Cx<T>],
    lambda: &[Cx<T>],
    gamma_bar: T,
    rho: T,
    previous: Option<&[Cx<T>]>,
) -> (Vec<Cx<T>>, T) {
    let f: Vec<Cx<T>> = lambda.iter().map(|&l| feedforward(l, gamma_bar, rho)).collect();
    let mut soft: Vec<Cx<T>> = f.iter().zip(y_freq).map(|(f, y)| f.conj() * y).collect();
    let sinr = bi_gdfe_sinr(lambda, gamma_bar, rho);
    if let Some(prev) = previous.filter(|_| rho > T::zero()) {
        let n = T::from_usize_lossy(lambda.len());
        let alpha = f.iter().zip(lambda).map(|(f, l)| (f.conj() * l).re).sum::<T>() / n;
        let fed = plan.forward(prev);
        for ((s, d), (f, l)) in soft.iter_mut().zip(&fed).zip(f.iter().zip(lambda)) {
            *s = *s + (Cx::new(alpha, T::zero()) - f.conj() * l) * d * rho;
        }
    }
    plan.inverse_in_place(&mut soft);
    (soft, sinr)
}

/// One BI-GDFE iteration with decision correlation `rho` and feedback of
/// `previous` decisions. Returns the soft estimate and its predicted SINR.
pub fn bi_gdfe_step<T: Real>(
    plan: &DftPlan<T>,
    y_freq: &[Cx<T>],
    lambda: &[Cx<T>],
    gamma_bar: T,
    rho: T,
    previous: Option<&[Cx<T>]>,
) -> Result<(Vec<Cx<T>>, T)> {
    check_lengths(plan, y_freq, lambda)?;
    check_gamma(gamma_bar)?;
    if !(T::zero()..=T::one()).contains(&rho) {
        return invalid(format!("decision correlation must lie in [0, 1], got {rho}"));
    }
    if previous.is_some_and(|p| p.len() != plan.len()) {
        return invalid("previous decisions must have length N");
    }
    Ok(gdfe_pass(plan, y_freq, lambda, gamma_bar, rho, previous))
}

/// Block-iterative generalized DFE: frequency-domain feedforward with
/// time-domain feedback of regenerated ISI from the last hard decisions.
pub fn bi_gdfe<T: Real>(
    plan: &DftPlan<T>,
    y_freq: &[Cx<T>],
    lambda: &[Cx<T>],
    gamma_bar: T,
    max_iters: usize,
    alphabet: &ModulationAlphabet<T>,
) -> Result<EqualizerOutput<T>> {
    if max_iters == 0 {
        return invalid("BI-GDFE needs at least one iteration");
    }
    check_lengths(plan, y_freq, lambda)?;
    check_gamma(gamma_bar)?;
    let mut rho = T::zero();
    let mut previous: Option<Vec<Cx<T>>> = None;
    let mut out = None;
    for iter in 1..=max_iters {
        let (soft, sinr) = gdfe_pass(plan, y_freq, lambda, gamma_bar, rho, previous.as_deref());
        let hard = hard_decisions(&soft, alphabet);
        let settled = previous.as_ref() == Some(&hard);
        out = Some(EqualizerOutput {
            soft_symbols: soft,
            hard_symbols: hard.clone(),
            predicted_snr: sinr,
            iterations_used: iter,
        });
        if settled {
            break;
        }
        rho = decision_correlation(sinr);
        previous = Some(hard);
    }
    Ok(out.expect("at least one iteration"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{sample_cscg, stream_rng, StreamKey};
    use crate::waveform::modulate;

    type C = Cx<f64>;

    fn toy() -> Vec<C> {
        vec![C::new(1.0, 0.0), C::new(0.0, 0.5)]
    }

    #[test]
    fn two_bin_output_snrs() {
        assert!((zf_output_snr(&toy(), 10.0).unwrap() - 4.0).abs() < 1e-12);
        let want: f64 = 1.0 / (0.5 * (1.0 / 11.0 + 1.0 / 3.5)) - 1.0;
        assert!((mmse_output_snr(&toy(), 10.0) - want).abs() < 1e-12);
        assert!((want - 125.0 / 29.0).abs() < 1e-12);
    }

    #[test]
    fn flat_channel_snrs_collapse() {
        let lam = vec![C::new(0.6, -0.8) * 1.5; 8];
        let g = 7.0;
        assert!((zf_output_snr(&lam, g).unwrap() - g * 2.25).abs() < 1e-12);
        assert!((mmse_output_snr(&lam, g) - g * 2.25).abs() < 1e-12);
    }

    #[test]
    fn sinr_endpoints() {
        let mut rng = stream_rng(21, StreamKey::new(0, 0, 0));
        let lam: Vec<C> = sample_cscg(64, 1.0, &mut rng).unwrap();
        let g: f64 = 3.0;
        let mmse = mmse_output_snr(&lam, g);
        assert!((bi_gdfe_sinr(&lam, g, 0.0) / mmse - 1.0).abs() < 1e-12);
        let mfb = g * lam.iter().map(|v| v.norm_sqr()).sum::<f64>() / 64.0;
        assert!((bi_gdfe_sinr(&lam, g, 1.0) / mfb - 1.0).abs() < 1e-12);
        assert!(mmse >= zf_output_snr(&lam, g).unwrap());
    }

    #[test]
    fn singular_bin_rejected_by_zf() {
        let plan = DftPlan::new(2).unwrap();
        let lam = vec![C::new(1.0, 0.0), C::new(1e-13, 0.0)];
        let y = vec![C::default(); 2];
        let err = equalize_zf(&plan, &y, &lam, 1.0, &ModulationAlphabet::qpsk()).unwrap_err();
        assert!(matches!(err, Error::SingularChannel { bin: 1, .. }));
    }

    fn noiseless_case(seed: u64) -> (DftPlan<f64>, Vec<C>, Vec<C>, Vec<C>) {
        let mut rng = stream_rng(seed, StreamKey::new(0, 0, 0));
        let n = 32;
        let plan = DftPlan::new(n).unwrap();
        let lam = sample_cscg(n, 1.0, &mut rng).unwrap();
        let bits: Vec<u8> = (0..2 * n).map(|i| ((i * 13 + seed as usize) % 5 % 2) as u8).collect();
        let c = modulate(&bits, &ModulationAlphabet::qpsk()).unwrap();
        let wc = plan.forward(&c);
        let y: Vec<C> = wc.iter().zip(&lam).map(|(a, l)| a * l).collect();
        (plan, lam, y, c)
    }

    #[test]
    fn noiseless_recovery_every_equalizer() {
        let qpsk = ModulationAlphabet::qpsk();
        for seed in 0..5 {
            let (plan, lam, y, c) = noiseless_case(seed);
            for kind in [EqualizerKind::Zf, EqualizerKind::Mmse, EqualizerKind::BiGdfe { max_iters: 4 }] {
                let out = kind.equalize(&plan, &y, &lam, 1e6, &qpsk).unwrap();
                assert_eq!(out.hard_symbols, c, "{kind:?}");
            }
            let zf = equalize_zf(&plan, &y, &lam, 1.0, &qpsk).unwrap();
            for (s, t) in zf.soft_symbols.iter().zip(&c) {
                assert!((s - t).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn single_iteration_matches_mmse() {
        let qpsk = ModulationAlphabet::qpsk();
        let mut rng = stream_rng(22, StreamKey::new(0, 0, 0));
        for _ in 0..20 {
            let (plan, lam, mut y, _) = noiseless_case(3);
            let u = sample_cscg(y.len(), 0.5, &mut rng).unwrap();
            y.iter_mut().zip(&u).for_each(|(a, b)| *a += b);
            let m = equalize_mmse(&plan, &y, &lam, 2.0, &qpsk).unwrap();
            let g = bi_gdfe(&plan, &y, &lam, 2.0, 1, &qpsk).unwrap();
            assert_eq!(m.hard_symbols, g.hard_symbols);
            assert_eq!(g.iterations_used, 1);
        }
    }

    #[test]
    fn genie_feedback_reaches_matched_filter_bound() {
        let (plan, lam, y, c) = noiseless_case(9);
        let g = 4.0;
        let (soft, sinr) = bi_gdfe_step(&plan, &y, &lam, g, 1.0, Some(&c)).unwrap();
        let mean_gain = lam.iter().map(|v| v.norm_sqr()).sum::<f64>() / lam.len() as f64;
        let mfb = g * mean_gain;
        assert!((sinr / mfb - 1.0).abs() < 1e-6);
        // No noise: the output is the scaled symbol with all ISI removed.
        for (s, t) in soft.iter().zip(&c) {
            assert!((s - t * mfb).norm() < 1e-9 * mfb);
        }
    }

    #[test]
    fn correlation_clipped() {
        assert_eq!(decision_correlation(0.0), 0.0);
        assert_eq!(decision_correlation(1e6), 0.9999);
        let mid = decision_correlation(4.0f64);
        assert!((mid - (1.0 - 2.0 * q_function(2.0))).abs() < 1e-15);
    }
}
