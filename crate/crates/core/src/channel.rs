//! Channel generation and received-signal synthesis.
//!
//! Forward links (emitter to device) and the direct link are flat; the
//! backward links (device to reader) have `L_g` equal-power Rayleigh taps.
//! Each device antenna sees the pinhole product `h_m(l) = f_m g_m(l)`.

use rand::Rng;

use crate::error::{invalid, Result};
use crate::numerics::{sample_cscg, sample_cscg_into};
use crate::scalar::{norm_sqr, Cx, Real};
use crate::waveform::{CddConfig, Frame};

/// Large-scale gain `10^-3 d^-v` (linear).
pub fn pathloss<T: Real>(distance: T, exponent: T) -> Result<T> {
    if !(distance > T::zero()) {
        return invalid(format!("distance must be positive, got {distance}"));
    }
    Ok(T::lit(1e-3) * distance.powf(-exponent))
}

/// Link distances (m) and path-loss exponents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LargeScaleModel<T> {
    pub direct_distance: T,
    pub forward_distance: T,
    pub backward_distance: T,
    pub direct_exponent: T,
    pub forward_exponent: T,
    pub backward_exponent: T,
}

impl<T: Real> LargeScaleModel<T> {
    pub fn new(distances: [T; 3], exponents: [T; 3]) -> Result<Self> {
        if distances.iter().any(|&d| !(d > T::zero())) {
            return invalid("link distances must be positive");
        }
        if exponents.iter().any(|&v| !(v >= T::zero())) {
            return invalid("path-loss exponents must be non-negative");
        }
        Ok(Self {
            direct_distance: distances[0],
            forward_distance: distances[1],
            backward_distance: distances[2],
            direct_exponent: exponents[0],
            forward_exponent: exponents[1],
            backward_exponent: exponents[2],
        })
    }

    /// Direct, forward and backward gains `(beta_d, beta_1, beta_2)`.
    pub fn gains(&self) -> Result<LinkGains<T>> {
        Ok(LinkGains {
            direct: pathloss(self.direct_distance, self.direct_exponent)?,
            forward: pathloss(self.forward_distance, self.forward_exponent)?,
            backward: pathloss(self.backward_distance, self.backward_exponent)?,
        })
    }
}

impl LargeScaleModel<f64> {
    /// 100 m / 10 m / 100 m with exponents 3 / 2 / 2.
    pub fn reference() -> Self {
        Self::new([100.0, 10.0, 100.0], [3.0, 2.0, 2.0]).expect("valid geometry")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGains<T> {
    pub direct: T,
    pub forward: T,
    pub backward: T,
}

impl<T: Real> LinkGains<T> {
    pub fn unit() -> Self {
        Self { direct: T::one(), forward: T::one(), backward: T::one() }
    }

    /// `beta_1 beta_2`, the mean cascaded gain per antenna.
    pub fn cascaded(&self) -> T {
        self.forward * self.backward
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelRegime<T> {
    /// Rayleigh forward and backward links.
    GeneralRayleigh,
    /// Deterministic line-of-sight forward link onto a uniform linear array.
    LosForward {
        /// Angle of arrival in radians.
        aoa: T,
        /// Antenna spacing over wavelength.
        spacing: T,
    },
}

impl<T: Real> ChannelRegime<T> {
    pub fn los_default() -> Self {
        Self::LosForward { aoa: T::zero(), spacing: T::lit(0.5) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel<T> {
    pub antennas: usize,
    pub taps: usize,
    pub block_len: usize,
    pub delay_step: usize,
    pub gains: LinkGains<T>,
    pub regime: ChannelRegime<T>,
}

impl<T: Real> ChannelModel<T> {
    pub fn cdd(&self) -> Result<CddConfig> {
        CddConfig::new(self.antennas, self.delay_step, self.block_len, self.taps)
    }

    pub fn validate(&self) -> Result<()> {
        self.cdd()?;
        if !(self.gains.direct >= T::zero() && self.gains.forward > T::zero() && self.gains.backward > T::zero()) {
            return invalid("large-scale gains must be positive");
        }
        if let ChannelRegime::LosForward { spacing, aoa } = self.regime {
            if !(spacing > T::zero()) || !aoa.is_finite() {
                return invalid("line-of-sight regime needs a positive spacing and finite angle");
            }
        }
        Ok(())
    }
}

/// One block-fading draw.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization<T: Real> {
    pub direct: Cx<T>,
    pub forward: Vec<Cx<T>>,
    pub backward: Vec<Vec<Cx<T>>>,
    /// Cascaded CIRs `h_m(l) = f_m g_m(l)`.
    pub cascaded: Vec<Vec<Cx<T>>>,
    /// Length-N equivalent CIR after cyclic delay placement.
    pub equivalent: Vec<Cx<T>>,
    pub delay_step: usize,
}

impl<T: Real> ChannelRealization<T> {
    /// Builds the derived CIRs from raw link coefficients.
    pub fn from_links(
        direct: Cx<T>,
        forward: Vec<Cx<T>>,
        backward: Vec<Vec<Cx<T>>>,
        delay_step: usize,
        block_len: usize,
    ) -> Result<Self> {
        if forward.len() != backward.len() || forward.is_empty() {
            return invalid("forward and backward links must cover the same non-empty antenna set");
        }
        let taps = backward[0].len();
        if taps == 0 || backward.iter().any(|g| g.len() != taps) {
            return invalid("every backward link needs the same positive tap count");
        }
        let cascaded: Vec<Vec<Cx<T>>> =
            forward.iter().zip(&backward).map(|(&f, g)| g.iter().map(|&gl| f * gl).collect()).collect();
        let equivalent = equivalent_cir(&cascaded, delay_step, block_len)?;
        Ok(Self { direct, forward, backward, cascaded, equivalent, delay_step })
    }

    pub fn antennas(&self) -> usize {
        self.forward.len()
    }

    pub fn taps(&self) -> usize {
        self.backward[0].len()
    }

    /// `||h||^2 = sum_m |f_m|^2 ||g_m||^2`.
    pub fn cascaded_energy(&self) -> T {
        self.cascaded.iter().map(|h| norm_sqr(h)).sum()
    }
}

pub fn sample_channels<T: Real, R: Rng + ?Sized>(
    model: &ChannelModel<T>,
    rng: &mut R,
) -> Result<ChannelRealization<T>> {
    model.validate()?;
    let (m, l) = (model.antennas, model.taps);
    let direct = sample_cscg(1, model.gains.direct, rng)?[0];
    let forward = match model.regime {
        ChannelRegime::GeneralRayleigh => sample_cscg(m, model.gains.forward, rng)?,
        ChannelRegime::LosForward { aoa, spacing } => {
            let amp = model.gains.forward.sqrt();
            let step = -T::lit(2.0) * T::PI() * spacing * aoa.sin();
            (0..m).map(|i| Cx::from_polar(amp, step * T::from_usize_lossy(i))).collect()
        }
    };
    let tap_var = model.gains.backward / T::from_usize_lossy(l);
    let mut backward = vec![vec![Cx::new(T::zero(), T::zero()); l]; m];
    for g in backward.iter_mut() {
        sample_cscg_into(g, tap_var, rng)?;
    }
    ChannelRealization::from_links(direct, forward, backward, model.delay_step, model.block_len)
}

/// Cascaded energy `||h||^2` and per-antenna backward energies
/// `||g_m||^2` of one draw, consuming the generator exactly like
/// [`sample_channels`] so both paths see the same realization.
pub fn sample_link_energies<T: Real, R: Rng + ?Sized>(
    model: &ChannelModel<T>,
    rng: &mut R,
    backward_energy: &mut Vec<T>,
) -> Result<T> {
    model.validate()?;
    let (m, l) = (model.antennas, model.taps);
    let mut scratch = [Cx::new(T::zero(), T::zero())];
    sample_cscg_into(&mut scratch, model.gains.direct, rng)?;
    let mut forward = vec![Cx::new(T::zero(), T::zero()); m];
    match model.regime {
        ChannelRegime::GeneralRayleigh => sample_cscg_into(&mut forward, model.gains.forward, rng)?,
        ChannelRegime::LosForward { .. } => {
            forward.iter_mut().for_each(|f| *f = Cx::new(model.gains.forward.sqrt(), T::zero()))
        }
    }
    let tap_var = model.gains.backward / T::from_usize_lossy(l);
    let mut g = vec![Cx::new(T::zero(), T::zero()); l];
    backward_energy.clear();
    let mut total = T::zero();
    for f in &forward {
        sample_cscg_into(&mut g, tap_var, rng)?;
        let e = norm_sqr(&g);
        backward_energy.push(e);
        total = total + f.norm_sqr() * e;
    }
    Ok(total)
}

/// Places antenna `m`'s taps at offset `m * D` in a length-N CIR.
pub fn equivalent_cir<T: Real>(cascaded: &[Vec<Cx<T>>], delay_step: usize, block_len: usize) -> Result<Vec<Cx<T>>> {
    let m = cascaded.len();
    if m == 0 {
        return invalid("need at least one antenna");
    }
    let taps = cascaded[0].len();
    if cascaded.iter().any(|h| h.len() != taps) {
        return invalid("cascaded CIRs must share one tap count");
    }
    let max_step = block_len / m;
    let step_ok = if m == 1 { taps <= block_len } else { taps <= delay_step && delay_step <= max_step };
    if !step_ok {
        return invalid(format!("delay step {delay_step} violates L_g = {taps} <= D <= floor(N/M) = {max_step}"));
    }
    let mut out = vec![Cx::new(T::zero(), T::zero()); block_len];
    for (i, h) in cascaded.iter().enumerate() {
        out[i * delay_step..i * delay_step + taps].copy_from_slice(h);
    }
    Ok(out)
}

/// Received samples for a whole frame: per block, the truncated linear
/// convolution of every antenna's padded, cyclically delayed block with its
/// cascaded CIR, plus the direct carrier and AWGN.
pub fn propagate<T: Real, R: Rng + ?Sized>(
    frame: &Frame<T>,
    channel: &ChannelRealization<T>,
    zp_len: usize,
    tx_power: T,
    noise_var: T,
    rng: &mut R,
) -> Result<Vec<Cx<T>>> {
    let taps = channel.taps();
    if zp_len <= taps {
        return invalid(format!("zero padding {zp_len} must exceed the tap count {taps}"));
    }
    if !(tx_power >= T::zero()) {
        return invalid("transmit power must be non-negative");
    }
    let n = channel.equivalent.len();
    let nc = n + zp_len;
    let amp = tx_power.sqrt();
    let direct = channel.direct * amp;
    let mut out = Vec::with_capacity(frame.block_count() * nc);
    let mut noise = vec![Cx::new(T::zero(), T::zero()); nc];
    for block in frame.blocks() {
        if block.len() != n {
            return invalid(format!("block of {} symbols on a length-{n} channel", block.len()));
        }
        let mut rx = vec![Cx::new(T::zero(), T::zero()); nc];
        for (m, h) in channel.cascaded.iter().enumerate() {
            let d = m * channel.delay_step;
            // Transmitted sample j < N of antenna m is block[(j - d) mod N].
            for (l, &hl) in h.iter().enumerate() {
                for j in 0..n {
                    rx[j + l] = rx[j + l] + hl * block[(j + n - d % n) % n];
                }
            }
        }
        sample_cscg_into(&mut noise, noise_var, rng)?;
        out.extend(rx.iter().zip(&noise).map(|(&s, &u)| s * amp + direct + u));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{stream_rng, StreamKey};
    use crate::waveform::{build_frame, FrameSpec, ModulationAlphabet};

    type C = Cx<f64>;

    fn model(m: usize, l: usize, regime: ChannelRegime<f64>) -> ChannelModel<f64> {
        ChannelModel {
            antennas: m,
            taps: l,
            block_len: 128,
            delay_step: 128 / m,
            gains: LinkGains { direct: 2.0, forward: 1e-5, backward: 1e-7 },
            regime,
        }
    }

    #[test]
    fn pathloss_reference_links() {
        assert!((pathloss::<f64>(10.0, 2.0).unwrap() - 1e-5).abs() < 1e-20);
        assert!((pathloss::<f64>(100.0, 2.0).unwrap() - 1e-7).abs() < 1e-22);
        assert_eq!(pathloss::<f64>(1.0, 3.7).unwrap(), 1e-3);
        assert!(pathloss(0.0, 2.0).is_err());
        let g = LargeScaleModel::reference().gains().unwrap();
        assert!((g.direct - 1e-9).abs() < 1e-24);
    }

    #[test]
    fn equivalent_cir_layouts() {
        let a = C::new(1.0, 0.0);
        let b = C::new(2.0, 0.0);
        let c = C::new(0.0, 3.0);
        let d = C::new(-1.0, 1.0);
        let z = C::default();
        assert_eq!(equivalent_cir(&[vec![a, b]], 1, 4).unwrap(), vec![a, b, z, z]);
        assert_eq!(equivalent_cir(&[vec![a, b], vec![c, d]], 4, 8).unwrap(), vec![a, b, z, z, c, d, z, z]);
        assert!(equivalent_cir(&[vec![a, b], vec![c, d]], 1, 8).is_err());
        assert!(equivalent_cir(&[vec![a, b], vec![c, d]], 5, 8).is_err());
    }

    #[test]
    fn realization_invariants() {
        let mut rng = stream_rng(4, StreamKey::new(0, 0, 0));
        for regime in [ChannelRegime::GeneralRayleigh, ChannelRegime::los_default()] {
            let ch = sample_channels(&model(16, 4, regime), &mut rng).unwrap();
            for m in 0..16 {
                for l in 0..4 {
                    assert_eq!(ch.cascaded[m][l], ch.forward[m] * ch.backward[m][l]);
                }
            }
            let he = norm_sqr(&ch.equivalent);
            assert!((he - ch.cascaded_energy()).abs() <= 1e-12 * he);
        }
    }

    #[test]
    fn energy_sampler_tracks_full_sampler() {
        for regime in [ChannelRegime::GeneralRayleigh, ChannelRegime::los_default()] {
            let mdl = model(4, 3, regime);
            let mut buf = Vec::new();
            for i in 0..20 {
                let mut a = stream_rng(8, StreamKey::new(0, 0, i));
                let mut b = stream_rng(8, StreamKey::new(0, 0, i));
                let ch = sample_channels(&mdl, &mut a).unwrap();
                let e = sample_link_energies(&mdl, &mut b, &mut buf).unwrap();
                assert!((e / ch.cascaded_energy() - 1.0).abs() < 1e-12);
                for (m, g) in ch.backward.iter().enumerate() {
                    assert!((buf[m] / norm_sqr(g) - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn invalid_model_rejected() {
        let mut rng = stream_rng(4, StreamKey::new(0, 0, 0));
        let mut bad = model(16, 4, ChannelRegime::GeneralRayleigh);
        bad.delay_step = 3;
        assert!(sample_channels(&bad, &mut rng).is_err());
    }

    #[test]
    fn rayleigh_moments() {
        let mut rng = stream_rng(5, StreamKey::new(0, 0, 0));
        let mdl = model(2, 4, ChannelRegime::GeneralRayleigh);
        let draws = 100_000;
        let (mut f2, mut g2, mut total) = (0.0f64, 0.0f64, 0.0f64);
        for _ in 0..draws {
            let ch = sample_channels(&mdl, &mut rng).unwrap();
            f2 += ch.forward[0].norm_sqr();
            g2 += norm_sqr(&ch.backward[0]);
            total += ch.cascaded_energy();
        }
        let n = draws as f64;
        assert!((f2 / n / 1e-5 - 1.0).abs() < 0.02);
        assert!((g2 / n / 1e-7 - 1.0).abs() < 0.02);
        assert!((total / n / (2.0 * 1e-12) - 1.0).abs() < 0.02);
    }

    #[test]
    fn los_forward_has_constant_power() {
        let mut rng = stream_rng(6, StreamKey::new(0, 0, 0));
        for aoa in [0.0, 0.4, 1.2, -2.0] {
            let ch = sample_channels(&model(8, 2, ChannelRegime::LosForward { aoa, spacing: 0.5 }), &mut rng).unwrap();
            assert!(ch.forward.iter().all(|f| (f.norm_sqr() / 1e-5 - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn los_gain_distribution_independent_of_angle() {
        let draw = |aoa: f64| -> Vec<f64> {
            let mut rng = stream_rng(7, StreamKey::new(1, (aoa * 100.0) as u16, 0));
            let mdl = model(4, 2, ChannelRegime::LosForward { aoa, spacing: 0.5 });
            let mut v: Vec<f64> =
                (0..100_000).map(|_| sample_channels(&mdl, &mut rng).unwrap().cascaded_energy()).collect();
            v.sort_by(f64::total_cmp);
            v
        };
        let a = draw(0.0);
        let b = draw(std::f64::consts::FRAC_PI_3);
        // Two-sample KS statistic on equal-size sorted samples.
        let (mut i, mut j, mut ks) = (0usize, 0usize, 0.0f64);
        let n = a.len() as f64;
        while i < a.len() && j < b.len() {
            if a[i] <= b[j] {
                i += 1;
            } else {
                j += 1;
            }
            ks = ks.max((i as f64 / n - j as f64 / n).abs());
        }
        assert!(ks <= 0.01, "KS = {ks}");
    }

    fn frame_of(blocks: Vec<Vec<C>>) -> Frame<f64> {
        Frame {
            pilot_blocks: [vec![C::default(); blocks[0].len()], vec![C::default(); blocks[0].len()]],
            data_blocks: blocks,
            payload_bits: vec![],
        }
    }

    #[test]
    fn propagate_hand_convolution() {
        let ch = ChannelRealization::from_links(
            C::default(),
            vec![C::new(1.0, 0.0)],
            vec![vec![C::new(1.0, 0.0), C::new(0.5, 0.0)]],
            2,
            4,
        )
        .unwrap();
        let block: Vec<C> = [1.0, -1.0, 1.0, -1.0].iter().map(|&v| C::new(v, 0.0)).collect();
        let mut rng = stream_rng(1, StreamKey::new(0, 0, 0));
        let pt = 4.0;
        let rx = propagate(&frame_of(vec![block]), &ch, 3, pt, 0.0, &mut rng).unwrap();
        let want = [1.0, -0.5, 0.5, -0.5, -0.5, 0.0, 0.0];
        let data = &rx[2 * 7..];
        for (got, w) in data.iter().zip(want) {
            assert!((got - C::new(2.0 * w, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn propagate_direct_only_and_support() {
        let mut rng = stream_rng(2, StreamKey::new(0, 0, 0));
        let mdl = ChannelModel {
            antennas: 4,
            taps: 3,
            block_len: 32,
            delay_step: 8,
            gains: LinkGains::unit(),
            regime: ChannelRegime::GeneralRayleigh,
        };
        let ch = sample_channels(&mdl, &mut rng).unwrap();
        let zeros = frame_of(vec![vec![C::default(); 32]; 2]);
        let rx = propagate(&zeros, &ch, 6, 9.0, 0.0, &mut rng).unwrap();
        assert!(rx.iter().all(|v| (v - ch.direct * 3.0).norm() < 1e-15));

        let spec = FrameSpec { block_len: 32, zp_len: 6, alphabet: ModulationAlphabet::qpsk(), pilot_root: 1 };
        let bits: Vec<u8> = (0..128).map(|i| (i * 7 % 3 % 2) as u8).collect();
        let frame = build_frame(&bits, &spec).unwrap();
        let rx = propagate(&frame, &ch, 6, 1.0, 0.0, &mut rng).unwrap();
        for blk in rx.chunks(38) {
            // Beyond index N + L_g - 2 only the direct term remains.
            for v in &blk[32 + 3 - 1..] {
                assert!((v - ch.direct).norm() < 1e-15);
            }
        }
        assert!(propagate(&frame, &ch, 3, 1.0, 0.0, &mut rng).is_err());
    }
}
