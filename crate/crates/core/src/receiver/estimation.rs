use nalgebra::DMatrix;
use num_complex::Complex;

use super::preprocess::OlaBlock;
use crate::channel::equivalent_cir;
use crate::error::{invalid, Error, Result};
use crate::scalar::{Cx, Real};
use crate::waveform::CddConfig;

/// LS estimate of the cascaded channel and the residual direct link.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate<T: Real> {
    pub h_eq_est: Vec<Cx<T>>,
    pub delta_hd_est: Cx<T>,
    /// Antenna-major `M * L_g` taps.
    pub per_antenna_taps: Vec<Cx<T>>,
}

/// Least-squares estimator for a fixed pilot and delay layout.
///
/// With pilots `[c, -c]` the channel and residual-interference unknowns
/// decouple, so the channel part reduces to the projection
/// `(A^H A)^-1 A^H (y0 - y1) / 2` with `A = C_p M_1`, precomputed here.
#[derive(Debug, Clone)]
pub struct LsEstimator<T: Real> {
    cdd: CddConfig,
    taps: usize,
    projection: Vec<Cx<T>>,
    alpha: Vec<T>,
    alpha_energy: T,
    gram_inv_trace: T,
}

impl<T: Real> LsEstimator<T> {
    pub fn new(pilot: &[Cx<T>], cdd: CddConfig, taps: usize, alpha: &[T]) -> Result<Self> {
        let n = cdd.block_len;
        if pilot.len() != n || alpha.len() != n {
            return invalid(format!("pilot and noise profile must have length N = {n}"));
        }
        let cols = cdd.antennas * taps;
        let p64: Vec<Complex<f64>> = pilot.iter().map(|c| Complex::new(c.re.as_f64(), c.im.as_f64())).collect();
        let a = DMatrix::from_fn(n, cols, |i, j| {
            let shift = cdd.delay(j / taps) + j % taps;
            p64[(i + n - shift % n) % n]
        });
        let gram = a.adjoint() * &a;
        let chol = gram.cholesky().ok_or(Error::SingularEstimation)?;
        let pivots: Vec<f64> = (0..cols).map(|k| chol.l_dirty()[(k, k)].re).collect();
        let largest = pivots.iter().cloned().fold(0.0, f64::max);
        if pivots.iter().any(|&d| !(d > 1e-6 * largest)) {
            return Err(Error::SingularEstimation);
        }
        let inv = chol.inverse();
        let gram_inv_trace: f64 = (0..cols).map(|k| inv[(k, k)].re).sum();
        if !gram_inv_trace.is_finite() || gram_inv_trace <= 0.0 {
            return Err(Error::SingularEstimation);
        }
        let proj = inv * a.adjoint() * Complex::new(0.5, 0.0);
        let mut projection = Vec::with_capacity(cols * n);
        for r in 0..cols {
            for c in 0..n {
                let v = proj[(r, c)];
                projection.push(Cx::new(T::lit(v.re), T::lit(v.im)));
            }
        }
        Ok(Self {
            cdd,
            taps,
            projection,
            alpha: alpha.to_vec(),
            alpha_energy: alpha.iter().map(|&v| v * v).sum(),
            gram_inv_trace: T::lit(gram_inv_trace),
        })
    }

    pub fn estimate(&self, y0: &OlaBlock<T>, y1: &OlaBlock<T>, tx_power: T) -> Result<ChannelEstimate<T>> {
        let n = self.cdd.block_len;
        if y0.y.len() != n || y1.y.len() != n {
            return invalid(format!("pilot observations must have length N = {n}"));
        }
        if !(tx_power > T::zero()) {
            return invalid("transmit power must be positive");
        }
        let inv_amp = tx_power.sqrt().recip();
        let diff: Vec<Cx<T>> = y0.y.iter().zip(&y1.y).map(|(a, b)| a - b).collect();
        let per_antenna_taps: Vec<Cx<T>> = self
            .projection
            .chunks(n)
            .map(|row| row.iter().zip(&diff).fold(Cx::new(T::zero(), T::zero()), |acc, (p, d)| acc + p * d) * inv_amp)
            .collect();
        let dh =
            y0.y.iter()
                .zip(&y1.y)
                .zip(&self.alpha)
                .fold(Cx::new(T::zero(), T::zero()), |acc, ((a, b), &w)| acc + (a + b) * w);
        let delta_hd_est = dh * inv_amp / (T::lit(2.0) * self.alpha_energy);
        let grouped: Vec<Vec<Cx<T>>> = per_antenna_taps.chunks(self.taps).map(<[_]>::to_vec).collect();
        let h_eq_est = equivalent_cir(&grouped, self.cdd.delay_step, n)?;
        Ok(ChannelEstimate { h_eq_est, delta_hd_est, per_antenna_taps })
    }

    /// `E||h_eq - h_eq_est||^2` under white noise: `sigma^2 tr((A^H A)^-1) / (2 p_t)`.
    pub fn predicted_channel_mse(&self, noise_var: T, tx_power: T) -> T {
        noise_var * self.gram_inv_trace / (T::lit(2.0) * tx_power)
    }

    /// `E|dh - dh_est|^2 = sigma^2 / (2 p_t ||alpha||^2)`.
    pub fn predicted_interference_mse(&self, noise_var: T, tx_power: T) -> T {
        noise_var / (T::lit(2.0) * tx_power * self.alpha_energy)
    }
}

/// One-shot estimate; builds the estimator for this pilot on the fly.
pub fn ls_estimate<T: Real>(
    y_pilot: [&OlaBlock<T>; 2],
    pilot: &[Cx<T>],
    cdd: CddConfig,
    taps: usize,
    tx_power: T,
) -> Result<ChannelEstimate<T>> {
    let est = LsEstimator::new(pilot, cdd, taps, &y_pilot[0].noise_profile)?;
    est.estimate(y_pilot[0], y_pilot[1], tx_power)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{circular_convolve, sample_cscg, stream_rng, StreamKey};
    use crate::receiver::ola_noise_profile;
    use crate::waveform::{generate_pilot_block, ModulationAlphabet};

    type C = Cx<f64>;

    fn observe(
        pilot: &[C],
        h_eq: &[C],
        dh: C,
        pt: f64,
        alpha: &[f64],
        noise: Option<(&[C], &[C])>,
    ) -> [OlaBlock<f64>; 2] {
        let conv = circular_convolve(h_eq, pilot).unwrap();
        let amp = pt.sqrt();
        let mk = |sign: f64, u: Option<&[C]>| OlaBlock {
            y: (0..pilot.len())
                .map(|i| conv[i] * amp * sign + dh * amp * alpha[i] + u.map_or(C::default(), |u| u[i]))
                .collect(),
            noise_profile: alpha.to_vec(),
        };
        [mk(1.0, noise.map(|n| n.0)), mk(-1.0, noise.map(|n| n.1))]
    }

    #[test]
    fn noiseless_recovery_is_exact() {
        let mut rng = stream_rng(11, StreamKey::new(0, 0, 0));
        let (n, m, l) = (128, 16, 4);
        let cdd = CddConfig::new(m, n / m, n, l).unwrap();
        let pilot = generate_pilot_block(n, &ModulationAlphabet::qpsk(), 1).unwrap();
        let alpha = ola_noise_profile(n, l).unwrap();
        let taps: Vec<Vec<C>> = (0..m).map(|_| sample_cscg(l, 1.0, &mut rng).unwrap()).collect();
        let h_eq = equivalent_cir(&taps, n / m, n).unwrap();
        let dh = C::new(0.03, -0.02);
        let obs = observe(&pilot, &h_eq, dh, 3.0, &alpha, None);
        let est = ls_estimate([&obs[0], &obs[1]], &pilot, cdd, l, 3.0).unwrap();
        for (a, b) in est.h_eq_est.iter().zip(&h_eq) {
            assert!((a - b).norm() < 1e-10);
        }
        assert!((est.delta_hd_est - dh).norm() < 1e-10);
        let flat: Vec<C> = taps.concat();
        assert_eq!(est.per_antenna_taps.len(), flat.len());
        for (a, b) in est.per_antenna_taps.iter().zip(&flat) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn degenerate_pilot_is_singular() {
        let cdd = CddConfig::new(2, 4, 8, 2).unwrap();
        let alpha = ola_noise_profile::<f64>(8, 2).unwrap();
        let pilot = vec![C::new(1.0, 0.0); 8];
        assert!(matches!(LsEstimator::new(&pilot, cdd, 2, &alpha), Err(Error::SingularEstimation)));
    }

    #[test]
    fn quantized_pilot_trace() {
        let (n, m, l) = (128, 16, 4);
        let cdd = CddConfig::new(m, n / m, n, l).unwrap();
        let pilot = generate_pilot_block(n, &ModulationAlphabet::qpsk(), 1).unwrap();
        let alpha = ola_noise_profile(n, l).unwrap();
        let est = LsEstimator::new(&pilot, cdd, l, &alpha).unwrap();
        // Ratio to the orthogonal-pilot value M L_g / (2N); reference from
        // an independent dense inverse.
        let white = (m * l) as f64 / (2.0 * n as f64);
        let ratio = est.predicted_channel_mse(1.0, 1.0) / white;
        assert!((ratio - 1.327_319_587_628_866).abs() < 1e-9, "ratio {ratio}");
    }
}
