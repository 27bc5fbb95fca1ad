//! Closed-form and semi-analytical performance measures: generalized-K
//! statistics, outage probability, matched-filter bound and diversity
//! slopes.

use crate::channel::ChannelRealization;
use crate::error::{invalid, Result};
use crate::numerics::quadrature::{integrate, Tolerance};
use crate::numerics::{ln_bessel_k, ln_gamma, q_function, regularized_lower_gamma};
use crate::scalar::Real;

/// Generalized-K law of the product of two independent gamma variates,
/// with shapes `k`, `m` and mean `omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GkParams<T> {
    pub k: T,
    pub m: T,
    pub omega: T,
}

impl<T: Real> GkParams<T> {
    pub fn new(k: T, m: T, omega: T) -> Result<Self> {
        if !(k > T::zero() && m > T::zero() && omega > T::zero())
            || !(k.is_finite() && m.is_finite() && omega.is_finite())
        {
            return invalid(format!(
                "generalized-K parameters must be positive, got k = {k}, m = {m}, omega = {omega}"
            ));
        }
        Ok(Self { k, m, omega })
    }

    pub fn mean(&self) -> T {
        self.omega
    }

    /// `omega^2 (k + m + 1) / (k m)`.
    pub fn variance(&self) -> T {
        self.omega * self.omega * (self.k + self.m + T::one()) / (self.k * self.m)
    }
}

pub fn gk_pdf<T: Real>(x: T, params: GkParams<T>) -> Result<T> {
    if !(x > T::zero()) || !x.is_finite() {
        return invalid(format!("density argument must be positive and finite, got {x}"));
    }
    let GkParams { k, m, omega } = params;
    let half = T::lit(0.5) * (k + m);
    let a2 = k * m / omega;
    let bessel = ln_bessel_k(k - m, T::lit(2.0) * (a2 * x).sqrt())?;
    let ln = T::LN_2() - ln_gamma(k) - ln_gamma(m) + half * a2.ln() + (half - T::one()) * x.ln() + bessel;
    Ok(ln.exp())
}

/// CDF by adaptive quadrature of the density after `x = t^2`.
pub fn gk_cdf<T: Real>(x: T, params: GkParams<T>) -> Result<T> {
    if !(x >= T::zero()) {
        return invalid(format!("CDF argument must be non-negative, got {x}"));
    }
    if x == T::zero() {
        return Ok(T::zero());
    }
    if x.is_infinite() {
        return Ok(T::one());
    }
    let tol = Tolerance::new(1e-12, 1e-9);
    let mut failure = None;
    let integrand = |t: T| {
        if t <= T::zero() {
            return T::zero();
        }
        match gk_pdf(t * t, params) {
            Ok(p) => T::lit(2.0) * t * p,
            Err(e) => {
                failure.get_or_insert(e);
                T::zero()
            }
        }
    };
    let est = integrate(integrand, T::zero(), x.sqrt(), tol)?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(est.value.max(T::zero()).min(T::one()))
}

/// Moment-matched generalized-K approximation of the sum of `antennas`
/// i.i.d. per-antenna gains with `k_1 = L_g`, `m_1 = 1`, `omega_1 = beta_1 beta_2`.
pub fn gk_sum_params<T: Real>(antennas: usize, taps: usize, beta_product: T) -> Result<GkParams<T>> {
    if antennas == 0 || taps == 0 {
        return invalid("antenna and tap counts must be positive");
    }
    let mm = T::from_usize_lossy(antennas);
    let k1 = T::from_usize_lossy(taps);
    let m1 = T::one();
    let eps = (mm - T::one()) * (T::lit(-0.127) - T::lit(0.95) * k1 - T::lit(0.0058) * m1)
        / (T::one() + T::lit(0.00124) * k1 + T::lit(0.98) * m1);
    let k = mm * k1 + eps;
    if !(k > T::zero()) {
        return invalid(format!("moment matching gives non-positive shape {k} for M = {antennas}, L_g = {taps}"));
    }
    GkParams::new(k, mm * m1, mm * beta_product)
}

/// Inputs of an outage evaluation at one transmit power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageQuery<T> {
    pub tx_power: T,
    pub noise_var: T,
    /// Target rate in bit/s/Hz.
    pub rate: T,
    /// SNR loss `N / (N + L_g - 1)`.
    pub delta_gamma: T,
}

impl<T: Real> OutageQuery<T> {
    pub fn new(tx_power: T, noise_var: T, rate: T, delta_gamma: T) -> Result<Self> {
        if !(tx_power > T::zero() && noise_var > T::zero() && rate >= T::zero() && delta_gamma > T::zero()) {
            return invalid("outage query needs positive power, noise and SNR loss and a non-negative rate");
        }
        Ok(Self { tx_power, noise_var, rate, delta_gamma })
    }

    /// `2^R - 1`.
    pub fn gamma_th(&self) -> T {
        self.rate.exp2() - T::one()
    }

    /// `a_1 = sigma^2 gamma_th / delta_gamma`.
    pub fn a1(&self) -> T {
        self.noise_var * self.gamma_th() / self.delta_gamma
    }

    /// Largest cascaded gain `||h||^2` that is still in outage.
    pub fn gain_threshold(&self) -> T {
        self.a1() / self.tx_power
    }
}

pub fn outage_general<T: Real>(query: &OutageQuery<T>, params: GkParams<T>) -> Result<T> {
    gk_cdf(query.gain_threshold(), params)
}

/// Exact outage with a deterministic forward link:
/// `P(M L_g, a_1 L_g / (p_t beta_1 beta_2))`.
pub fn outage_special<T: Real>(query: &OutageQuery<T>, antennas: usize, taps: usize, beta1: T, beta2: T) -> Result<T> {
    if antennas == 0 || taps == 0 {
        return invalid("antenna and tap counts must be positive");
    }
    if !(beta1 > T::zero() && beta2 > T::zero()) {
        return invalid("large-scale gains must be positive");
    }
    let shape = T::from_usize_lossy(antennas * taps);
    let x = query.gain_threshold() * T::from_usize_lossy(taps) / (beta1 * beta2);
    regularized_lower_gamma(shape, x)
}

/// Matched-filter-bound SNR `p_t delta_gamma ||h||^2 / sigma^2`.
pub fn mfb_snr<T: Real>(channel: &ChannelRealization<T>, tx_power: T, noise_var: T, delta_gamma: T) -> Result<T> {
    if !(noise_var > T::zero()) {
        return invalid(format!("noise variance must be positive, got {noise_var}"));
    }
    Ok(tx_power * delta_gamma * channel.cascaded_energy() / noise_var)
}

/// Gray QPSK bit error probability `Q(sqrt(gamma))`.
pub fn theoretical_ber<T: Real>(gamma: T) -> Result<T> {
    if !(gamma >= T::zero()) {
        return invalid(format!("SNR must be non-negative, got {gamma}"));
    }
    Ok(q_function(gamma.sqrt()))
}

/// Least-squares slope of `-log10 P` against `log10 p_t`.
pub fn diversity_slope<T: Real>(points: &[(T, T)]) -> Result<T> {
    if points.len() < 2 {
        return invalid("slope fit needs at least two points");
    }
    if points.windows(2).any(|w| !(w[1].0 > w[0].0)) || !(points[0].0 > T::zero()) {
        return invalid("transmit powers must be positive and strictly increasing");
    }
    if let Some(&(_, p)) = points.iter().find(|&&(_, p)| !(p > T::zero())) {
        return invalid(format!("outage probabilities must be positive, got {p}"));
    }
    let n = T::from_usize_lossy(points.len());
    let xs: Vec<T> = points.iter().map(|p| p.0.log10()).collect();
    let ys: Vec<T> = points.iter().map(|p| -p.1.log10()).collect();
    let mx = xs.iter().copied().sum::<T>() / n;
    let my = ys.iter().copied().sum::<T>() / n;
    let sxy: T = xs.iter().zip(&ys).map(|(&x, &y)| (x - mx) * (y - my)).sum();
    let sxx: T = xs.iter().map(|&x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

/// `P(sum_i w_i E_i <= t)` for independent unit exponentials `E_i` and
/// positive weights `w_i`, by the positive-term gamma-mixture series.
///
/// Every term is non-negative, so the result keeps full relative accuracy
/// deep in the lower tail where the alternating partial-fraction form
/// cancels catastrophically.
pub fn exponential_sum_cdf<T: Real>(weights: &[T], t: T) -> Result<T> {
    if weights.is_empty() || weights.iter().any(|&w| !(w > T::zero()) || !w.is_finite()) {
        return invalid("weights must be positive and finite");
    }
    if !(t >= T::zero()) {
        return invalid(format!("threshold must be non-negative, got {t}"));
    }
    if t == T::zero() {
        return Ok(T::zero());
    }
    let w_min = weights.iter().copied().fold(T::infinity(), T::min);
    let rho = T::from_usize_lossy(weights.len());
    let ratios: Vec<T> = weights.iter().map(|&w| T::one() - w_min / w).collect();
    let ln_c: T = weights.iter().map(|&w| (w_min / w).ln()).sum();
    let c = ln_c.exp();
    let x = t / w_min;
    let mut gamma = Vec::new();
    let mut delta = vec![T::one()];
    let mut powers = ratios.clone();
    let mut total = c * regularized_lower_gamma(rho, x)?;
    let mut mass = c;
    let tiny = T::lit(1e-13);
    for k in 1..100_000usize {
        let kk = T::from_usize_lossy(k);
        gamma.push(powers.iter().copied().sum::<T>() / kk);
        for (p, &r) in powers.iter_mut().zip(&ratios) {
            *p = *p * r;
        }
        let next = (1..=k).map(|i| T::from_usize_lossy(i) * gamma[i - 1] * delta[k - i]).sum::<T>() / kk;
        delta.push(next);
        let weight = c * next;
        let term = weight * regularized_lower_gamma(rho + kk, x)?;
        total = total + term;
        mass = mass + weight;
        // The mixture weights sum to one and P(rho + k, x) decreases in k,
        // so the remaining tail is below (1 - mass) P(rho + k, x).
        let remaining = (T::one() - mass).max(T::zero()) * regularized_lower_gamma(rho + kk, x)?;
        if remaining <= tiny * total || mass >= T::one() - T::epsilon() {
            return Ok(total.min(T::one()));
        }
    }
    Err(crate::Error::Convergence("exponential-sum series did not converge".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_channels, ChannelModel, ChannelRegime, LinkGains};
    use crate::numerics::{bessel_k, stream_rng, StreamKey};
    use crate::scalar::norm_sqr;
    use rand_distr::{Distribution, Gamma};

    fn moment(params: GkParams<f64>, power: i32) -> f64 {
        // x = t^2 on [0, sqrt(upper)]; the tail beyond is negligible.
        let upper = params.omega * 400.0;
        integrate(
            |t: f64| if t <= 0.0 { 0.0 } else { 2.0 * t * t.powi(2 * power) * gk_pdf(t * t, params).unwrap() },
            0.0,
            upper.sqrt(),
            Tolerance::new(0.0, 1e-11),
        )
        .unwrap()
        .value
    }

    #[test]
    fn gk_normalization_mean_variance() {
        for (k, m, om) in [(4.0, 1.0, 1.0), (10.056, 4.0, 4.0), (1.0, 1.0, 2.5), (16.0, 1.0, 0.3), (2.5, 3.0, 1.0)] {
            let p = GkParams::new(k, m, om).unwrap();
            let z = moment(p, 0);
            let mean = moment(p, 1);
            let second = moment(p, 2);
            assert!((z - 1.0).abs() < 1e-6, "{k} {m}: {z}");
            assert!((mean / om - 1.0).abs() < 1e-5);
            let var = second - mean * mean;
            assert!((var / p.variance() - 1.0).abs() < 1e-5, "{var} vs {}", p.variance());
        }
    }

    #[test]
    fn single_antenna_pdf_matches_product_form() {
        // k = L_g, m = 1 with omega = beta_1 beta_2 written out directly.
        let (l, b) = (4.0f64, 0.7);
        let p = GkParams::new(l, 1.0, b).unwrap();
        for x in [0.01f64, 0.3, 1.0, 2.4] {
            let a = l / b;
            let direct = 2.0 / ln_gamma(l).exp()
                * a.powf((l + 1.0) / 2.0)
                * x.powf((l + 1.0) / 2.0 - 1.0)
                * bessel_k(l - 1.0, 2.0 * (a * x).sqrt()).unwrap();
            assert!((gk_pdf(x, p).unwrap() / direct - 1.0).abs() < 1e-12);
        }
        assert!(gk_pdf(0.0, p).is_err());
    }

    #[test]
    fn cdf_closed_form_unit_shapes() {
        let p = GkParams::new(1.0f64, 1.0, 1.0).unwrap();
        assert!((gk_cdf(1.0, p).unwrap() - 0.720_268_236_366_955_2).abs() < 1e-9);
        for x in [1e-6f64, 0.05, 0.5, 3.0] {
            let want = 1.0 - 2.0 * x.sqrt() * bessel_k(1.0, 2.0 * x.sqrt()).unwrap();
            assert!((gk_cdf(x, p).unwrap() - want).abs() < 1e-9 * want.max(1e-3));
        }
        assert_eq!(gk_cdf(0.0, p).unwrap(), 0.0);
        assert!(gk_cdf(-1.0, p).is_err());
    }

    #[test]
    fn cdf_monotone_and_saturates() {
        let p = GkParams::new(10.056f64, 4.0, 4.0).unwrap();
        let mut last = 0.0;
        for i in 1..40 {
            let x = 4.0 * 10f64.powf(-4.0 + i as f64 * 0.15);
            let c = gk_cdf(x, p).unwrap();
            assert!((0.0..=1.0).contains(&c) && c >= last);
            last = c;
        }
        assert!(gk_cdf(4e3, p).unwrap() >= 0.9999);
    }

    #[test]
    fn cdf_matches_sampled_products() {
        let (k, m, om) = (4.0, 2.0, 1.5);
        let p = GkParams::new(k, m, om).unwrap();
        let gk = Gamma::new(k, 1.0 / k).unwrap();
        let gm = Gamma::new(m, om / m).unwrap();
        let mut rng = stream_rng(31, StreamKey::new(0, 0, 0));
        let n = 1_000_000;
        let mut v: Vec<f64> = (0..n).map(|_| gk.sample(&mut rng) * gm.sample(&mut rng)).collect();
        v.sort_by(f64::total_cmp);
        let mut ks = 0.0f64;
        for q in 1..200 {
            let idx = q * n / 200;
            let f = gk_cdf(v[idx], p).unwrap();
            ks = ks.max((f - idx as f64 / n as f64).abs());
        }
        assert!(ks < 0.003, "KS {ks}");
    }

    #[test]
    fn sum_params_moment_matching() {
        let one = gk_sum_params(1, 4, 2.0).unwrap();
        assert_eq!((one.k, one.m, one.omega), (4.0, 1.0, 2.0));
        let four = gk_sum_params(4, 4, 1.0f64).unwrap();
        let eps: f64 = 3.0 * (-0.127 - 0.95 * 4.0 - 0.0058) / (1.0 + 0.00124 * 4.0 + 0.98);
        assert!((eps + 5.944).abs() < 1e-3);
        assert!((four.k - 10.056).abs() < 1e-3);
        assert_eq!((four.m, four.omega), (4.0, 4.0));
        let vars: Vec<f64> = [1, 2, 4, 16].iter().map(|&l| gk_sum_params(4, l, 1.0).unwrap().variance()).collect();
        assert!(vars.windows(2).all(|w| w[1] < w[0]), "{vars:?}");
    }

    #[test]
    fn outage_queries() {
        let q = OutageQuery::new(1.0f64, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(q.gamma_th(), 1.0);
        let p = GkParams::new(1.0, 1.0, 1.0).unwrap();
        assert!((outage_general(&q, p).unwrap() - 0.720_268_236_366_955_2).abs() < 1e-9);
        let q2 = OutageQuery::new(0.5f64, 1.0, 2.0, 0.9).unwrap();
        assert_eq!(q2.gamma_th(), 3.0);
        let special = outage_special(&q2, 1, 1, 1.0, 1.0).unwrap();
        assert!((special - (1.0 - (-q2.gain_threshold()).exp())).abs() < 1e-14);
        // Scaling p_t and sigma^2 together leaves the outage unchanged.
        let a = OutageQuery::new(3.0f64, 2.0, 2.0, 0.9).unwrap();
        let b = OutageQuery::new(3e5, 2e5, 2.0, 0.9).unwrap();
        let p = gk_sum_params(4, 4, 1.0).unwrap();
        assert!((outage_general(&a, p).unwrap() / outage_general(&b, p).unwrap() - 1.0).abs() < 1e-9);
        let mut last = 1.0;
        for i in 0..10 {
            let q = OutageQuery::new(10f64.powi(i) * 0.1, 1.0, 2.0, 0.9).unwrap();
            let v = outage_general(&q, p).unwrap();
            assert!(v < last);
            last = v;
        }
    }

    #[test]
    fn lemma_slopes() {
        for (k, m) in [(4.0, 1.0), (10.06, 4.0)] {
            let p = GkParams::new(k, m, 1.0).unwrap();
            let pts: Vec<(f64, f64)> = (0..=8)
                .map(|i| {
                    let pt = 10f64.powf(4.0 + i as f64 * 0.25);
                    let q = OutageQuery::new(pt, 1.0, 1.0, 1.0).unwrap();
                    (pt, outage_general(&q, p).unwrap())
                })
                .collect();
            let s = diversity_slope(&pts).unwrap();
            assert!((s - m).abs() < 0.1, "k {k}: slope {s}");
        }
        let pts: Vec<(f64, f64)> = (0..=8)
            .map(|i| {
                let pt = 10f64.powf(4.0 + i as f64 * 0.25);
                let q = OutageQuery::new(pt, 1.0, 2.0, 1.0).unwrap();
                (pt, outage_special(&q, 2, 2, 1.0, 1.0).unwrap())
            })
            .collect();
        let s = diversity_slope(&pts).unwrap();
        assert!((3.7..=4.3).contains(&s));
        let pts: Vec<(f64, f64)> = (0..=8)
            .map(|i| {
                let pt = 10f64.powf(4.0 + i as f64 * 0.25);
                let q = OutageQuery::new(pt, 1.0, 2.0, 1.0).unwrap();
                (pt, outage_special(&q, 4, 2, 1.0, 1.0).unwrap())
            })
            .collect();
        assert!((diversity_slope(&pts).unwrap() - 8.0).abs() < 0.1);
    }

    #[test]
    fn slope_power_laws() {
        for d in [1, 4] {
            let pts: Vec<(f64, f64)> = (1..6).map(|i| (10f64.powi(i), 0.3 / 10f64.powi(i * d))).collect();
            assert!((diversity_slope(&pts).unwrap() - d as f64).abs() < 1e-6);
        }
        assert!(diversity_slope(&[(1.0, 0.1), (2.0, 0.0)]).is_err());
        assert!(diversity_slope(&[(1.0, 0.1)]).is_err());
    }

    #[test]
    fn ber_of_snr() {
        assert_eq!(theoretical_ber(0.0f64).unwrap(), 0.5);
        assert!((theoretical_ber(9.0f64).unwrap() / 1.349_898_031_630_094_6e-3 - 1.0).abs() < 1e-10);
        let mut last = 0.5;
        for i in 1..50 {
            let b = theoretical_ber(i as f64 * 0.5).unwrap();
            assert!(b < last);
            last = b;
        }
    }

    #[test]
    fn mfb_examples_and_angle_invariance() {
        use crate::scalar::Cx;
        let unit = ChannelRealization::from_links(
            Cx::new(0.0, 0.0),
            vec![Cx::new(1.0, 0.0)],
            vec![vec![Cx::new(1.0, 0.0)]],
            4,
            4,
        )
        .unwrap();
        assert_eq!(mfb_snr(&unit, 10.0, 1.0, 1.0).unwrap(), 10.0);
        let zero = ChannelRealization::from_links(
            Cx::new(0.0, 0.0),
            vec![Cx::new(0.0, 0.0)],
            vec![vec![Cx::new(1.0, 0.0)]],
            4,
            4,
        )
        .unwrap();
        assert_eq!(mfb_snr(&zero, 10.0, 1.0, 1.0).unwrap(), 0.0);
        // Same backward draws under two angles give the same SNR.
        let model = |aoa: f64| ChannelModel {
            antennas: 4,
            taps: 2,
            block_len: 16,
            delay_step: 4,
            gains: LinkGains::unit(),
            regime: ChannelRegime::LosForward { aoa, spacing: 0.5 },
        };
        for i in 0..20 {
            let mut r1 = stream_rng(32, StreamKey::new(0, 0, i));
            let mut r2 = stream_rng(32, StreamKey::new(0, 0, i));
            let a = sample_channels(&model(0.1), &mut r1).unwrap();
            let b = sample_channels(&model(1.3), &mut r2).unwrap();
            let (ga, gb) = (mfb_snr(&a, 2.0, 0.5, 0.9).unwrap(), mfb_snr(&b, 2.0, 0.5, 0.9).unwrap());
            assert!((ga / gb - 1.0).abs() < 1e-12);
            let he = 2.0 * 0.9 * norm_sqr(&a.equivalent) / 0.5;
            assert!((ga / he - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn exponential_sum_reference_values() {
        // Equal weights reduce to a gamma CDF.
        let v = exponential_sum_cdf(&[2.0f64; 3], 1.5).unwrap();
        assert!((v - regularized_lower_gamma(3.0, 0.75).unwrap()).abs() < 1e-14);
        // Two distinct weights: 1 - (a e^{-t/a} - b e^{-t/b}) / (a - b).
        let (a, b, t) = (1.0f64, 3.0f64, 2.0f64);
        let want = 1.0 - (a * (-t / a).exp() - b * (-t / b).exp()) / (a - b);
        assert!((exponential_sum_cdf(&[a, b], t).unwrap() - want).abs() < 1e-12);
        // Deep tail keeps relative accuracy: leading term t^n / (n! prod w).
        let w = [0.5f64, 1.0, 2.0, 4.0];
        let t: f64 = 1e-4;
        let lead = t.powi(4) / (24.0 * w.iter().product::<f64>());
        let got = exponential_sum_cdf(&w, t).unwrap();
        assert!((got / lead - 1.0).abs() < 1e-3, "{got} vs {lead}");
        assert!(exponential_sum_cdf(&[1.0, 0.0], 1.0).is_err());
    }
}
