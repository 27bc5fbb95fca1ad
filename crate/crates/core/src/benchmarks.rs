//! CSI-free baseline schemes for flat backward links: grouped Alamouti,
//! random beamforming and direct backscattering, with ML detection.

use rand::Rng;

use crate::channel::ChannelRealization;
use crate::error::{invalid, Error, Result};
use crate::numerics::quadrature::{integrate, Tolerance};
use crate::scalar::{Cx, Real};
use crate::waveform::ModulationAlphabet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeTag {
    AlamoutiGrouped,
    RandomBeamforming,
    DirectBackscatter,
}

impl SchemeTag {
    pub const ALL: [SchemeTag; 3] = [Self::AlamoutiGrouped, Self::RandomBeamforming, Self::DirectBackscatter];

    pub fn name(self) -> &'static str {
        match self {
            Self::AlamoutiGrouped => "alamouti",
            Self::RandomBeamforming => "random",
            Self::DirectBackscatter => "direct",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkScheme<T: Real> {
    pub tag: SchemeTag,
    /// Unit-modulus reflection weights, one per antenna.
    pub beam_weights: Vec<Cx<T>>,
}

impl<T: Real> BenchmarkScheme<T> {
    pub fn direct(antennas: usize) -> Result<Self> {
        if antennas == 0 {
            return invalid("need at least one antenna");
        }
        Ok(Self { tag: SchemeTag::DirectBackscatter, beam_weights: vec![Cx::new(T::one(), T::zero()); antennas] })
    }

    /// Antennas `0..M/2` form the first group, `M/2..M` the second.
    pub fn alamouti(antennas: usize) -> Result<Self> {
        if antennas == 0 || !antennas.is_multiple_of(2) {
            return invalid(format!("grouped Alamouti needs an even antenna count, got {antennas}"));
        }
        Ok(Self { tag: SchemeTag::AlamoutiGrouped, beam_weights: vec![Cx::new(T::one(), T::zero()); antennas] })
    }

    /// Phases uniform on `[0, 2 pi)`.
    pub fn random<R: Rng + ?Sized>(antennas: usize, rng: &mut R) -> Result<Self> {
        if antennas == 0 {
            return invalid("need at least one antenna");
        }
        let beam_weights = (0..antennas)
            .map(|_| Cx::from_polar(T::one(), T::lit(rng.random::<f64>() * std::f64::consts::TAU)))
            .collect();
        Ok(Self { tag: SchemeTag::RandomBeamforming, beam_weights })
    }

    pub fn new<R: Rng + ?Sized>(tag: SchemeTag, antennas: usize, rng: &mut R) -> Result<Self> {
        match tag {
            SchemeTag::AlamoutiGrouped => Self::alamouti(antennas),
            SchemeTag::RandomBeamforming => Self::random(antennas, rng),
            SchemeTag::DirectBackscatter => Self::direct(antennas),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EffectiveChannel<T> {
    Scalar(Cx<T>),
    Pair(Cx<T>, Cx<T>),
}

pub fn effective_scalar_channel<T: Real>(
    scheme: &BenchmarkScheme<T>,
    channel: &ChannelRealization<T>,
) -> Result<EffectiveChannel<T>> {
    if channel.taps() != 1 {
        return Err(Error::Unsupported(format!(
            "benchmark schemes need a flat backward link, got L_g = {}",
            channel.taps()
        )));
    }
    let m = channel.antennas();
    if scheme.beam_weights.len() != m {
        return invalid(format!("scheme has {} weights for {m} antennas", scheme.beam_weights.len()));
    }
    let zero = Cx::new(T::zero(), T::zero());
    let taps = channel.cascaded.iter().map(|h| h[0]);
    match scheme.tag {
        SchemeTag::AlamoutiGrouped => {
            if !m.is_multiple_of(2) {
                return invalid("grouped Alamouti needs an even antenna count");
            }
            let (mut h1, mut h2) = (zero, zero);
            for (i, h) in taps.enumerate() {
                if i < m / 2 {
                    h1 = h1 + h;
                } else {
                    h2 = h2 + h;
                }
            }
            Ok(EffectiveChannel::Pair(h1, h2))
        }
        _ => Ok(EffectiveChannel::Scalar(taps.zip(&scheme.beam_weights).fold(zero, |acc, (h, w)| acc + w * h))),
    }
}

/// Received pair for symbols `(s1, s2)` over two slots:
/// `r1 = sqrt(p)(h1 s1 + h2 s2) + n1`, `r2 = sqrt(p)(-h1 s2* + h2 s1*) + n2`.
pub fn alamouti_received<T: Real>(symbols: [Cx<T>; 2], h: [Cx<T>; 2], tx_power: T, noise: [Cx<T>; 2]) -> [Cx<T>; 2] {
    let amp = tx_power.sqrt();
    let [s1, s2] = symbols;
    let [h1, h2] = h;
    [(h1 * s1 + h2 * s2) * amp + noise[0], (-h1 * s2.conj() + h2 * s1.conj()) * amp + noise[1]]
}

/// Alamouti combining followed by nearest-point decisions. Returns the
/// normalized soft estimates and the decided symbols.
pub fn alamouti_detect<T: Real>(
    rx: [Cx<T>; 2],
    h: [Cx<T>; 2],
    tx_power: T,
    alphabet: &ModulationAlphabet<T>,
) -> ([Cx<T>; 2], [Cx<T>; 2]) {
    let [r1, r2] = rx;
    let [h1, h2] = h;
    let gain = (h1.norm_sqr() + h2.norm_sqr()) * tx_power.sqrt();
    let s1 = h1.conj() * r1 + h2 * r2.conj();
    let s2 = h2.conj() * r1 - h1 * r2.conj();
    let soft = if gain > T::zero() { [s1 / gain, s2 / gain] } else { [s1, s2] };
    let pts = alphabet.points();
    (soft, [pts[alphabet.decide(soft[0])], pts[alphabet.decide(soft[1])]])
}

/// Per-symbol matched filter and nearest-point decision on a flat channel.
pub fn scalar_ml_detect<T: Real>(rx: &[Cx<T>], h_eff: Cx<T>, alphabet: &ModulationAlphabet<T>) -> Vec<Cx<T>> {
    let pts = alphabet.points();
    rx.iter().map(|&r| pts[alphabet.decide(h_eff.conj() * r)]).collect()
}

/// `p_t |h|^2 / sigma^2` for a scalar channel, `p_t (|h1|^2 + |h2|^2) / sigma^2` for a pair.
pub fn post_detection_snr<T: Real>(channel: EffectiveChannel<T>, tx_power: T, noise_var: T) -> T {
    let gain = match channel {
        EffectiveChannel::Scalar(h) => h.norm_sqr(),
        EffectiveChannel::Pair(h1, h2) => h1.norm_sqr() + h2.norm_sqr(),
    };
    tx_power * gain / noise_var
}

/// Gray QPSK BER averaged over one Rayleigh branch with mean SNR `mean_snr`:
/// `(1 - sqrt(g / (2 + g))) / 2`.
pub fn rayleigh_ber<T: Real>(mean_snr: T) -> Result<T> {
    if !(mean_snr >= T::zero()) {
        return invalid(format!("mean SNR must be non-negative, got {mean_snr}"));
    }
    // 1 - sqrt(g/(2+g)) = 2 / ((2+g)(1 + sqrt(g/(2+g)))) avoids cancellation.
    let two = T::lit(2.0);
    let r = (mean_snr / (two + mean_snr)).sqrt();
    Ok(T::one() / ((two + mean_snr) * (T::one() + r)))
}

/// Gray QPSK BER with maximal-ratio combining of independent Rayleigh
/// branches, from the Craig form of the Q-function:
/// `(1/pi) int_0^{pi/2} prod_i (1 + g_i / (2 sin^2 t))^-1 dt`.
pub fn rayleigh_diversity_ber<T: Real>(mean_snrs: &[T]) -> Result<T> {
    if mean_snrs.is_empty() || mean_snrs.iter().any(|&g| !(g >= T::zero())) {
        return invalid("need at least one non-negative branch SNR");
    }
    if mean_snrs.len() == 1 {
        return rayleigh_ber(mean_snrs[0]);
    }
    let f = |t: T| {
        let s2 = t.sin().powi(2);
        mean_snrs.iter().fold(T::one(), |acc, &g| acc * s2 / (s2 + g * T::lit(0.5)))
    };
    let est = integrate(f, T::zero(), T::FRAC_PI_2(), Tolerance::new(0.0, 1e-10))?;
    Ok(est.value / T::PI())
}

/// BER of a benchmark scheme given the backward links, averaged in closed
/// form over the Rayleigh forward link. Given `g`, the effective channel of
/// a group is `CN(0, beta_1 sum |g_m|^2)` whatever the unit-modulus weights.
pub fn conditional_benchmark_ber<T: Real>(
    tag: SchemeTag,
    backward_taps: &[Cx<T>],
    beta1: T,
    tx_power: T,
    noise_var: T,
) -> Result<T> {
    if backward_taps.is_empty() {
        return invalid("need at least one antenna");
    }
    let scale = beta1 * tx_power / noise_var;
    let energy = |g: &[Cx<T>]| g.iter().map(|v| v.norm_sqr()).sum::<T>() * scale;
    match tag {
        SchemeTag::AlamoutiGrouped => {
            let m = backward_taps.len();
            if !m.is_multiple_of(2) {
                return invalid("grouped Alamouti needs an even antenna count");
            }
            rayleigh_diversity_ber(&[energy(&backward_taps[..m / 2]), energy(&backward_taps[m / 2..])])
        }
        _ => rayleigh_ber(energy(backward_taps)),
    }
}
