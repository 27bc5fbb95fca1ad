//! Backscatter-device transmit chain: PSK mapping, quantized Zadoff-Chu
//! pilots, per-antenna cyclic delays and zero padding.

use crate::error::{invalid, Result};
use crate::scalar::{Cx, Real};

/// `exp(j pi num / den)` built from a first-quadrant evaluation plus exact
/// sign flips, so mirror-image points are exact negatives/conjugates of each
/// other and decision ties stay ties.
fn unit_phasor<T: Real>(num: i64, den: i64) -> Cx<T> {
    let period = 2 * den;
    let mut k = num.rem_euclid(period);
    if k > den {
        k -= period;
    }
    let negative = k < 0;
    let mut k = k.abs();
    let mirror = 2 * k > den;
    if mirror {
        k = den - k;
    }
    // Fold the first quadrant onto [0, pi/4] as well.
    let (mut re, mut im) = if 4 * k == den {
        (T::FRAC_1_SQRT_2(), T::FRAC_1_SQRT_2())
    } else if 4 * k > den {
        let angle = T::PI() * T::lit((den - 2 * k) as f64) / T::lit((2 * den) as f64);
        (angle.sin(), angle.cos())
    } else {
        let angle = T::PI() * T::lit(k as f64) / T::lit(den as f64);
        (angle.cos(), angle.sin())
    };
    if mirror {
        re = -re;
    }
    if negative {
        im = -im;
    }
    Cx::new(re, im)
}

/// Gray-labelled PSK constellation.
///
/// Position `p` sits at phase `pi (2p + o) / order`, where `o = 1` for
/// order >= 4 (QPSK lands on the diagonals) and `o = 0` for BPSK. Position
/// `p` carries label `p ^ (p >> 1)`; labels are read MSB first from the bit
/// stream. For QPSK this gives 00 -> (1+j)/sqrt2, 01 -> (-1+j)/sqrt2,
/// 11 -> (-1-j)/sqrt2, 10 -> (1-j)/sqrt2.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationAlphabet<T: Real> {
    bits_per_symbol: usize,
    /// Indexed by label.
    points: Vec<Cx<T>>,
}

impl<T: Real> ModulationAlphabet<T> {
    pub fn psk(bits_per_symbol: usize) -> Result<Self> {
        if !(1..=8).contains(&bits_per_symbol) {
            return invalid(format!("PSK needs 1..=8 bits per symbol, got {bits_per_symbol}"));
        }
        let order = 1usize << bits_per_symbol;
        let mut points = vec![Cx::new(T::zero(), T::zero()); order];
        for p in 0..order {
            points[p ^ (p >> 1)] = unit_phasor(Self::position_phase(order, p), order as i64);
        }
        Ok(Self { bits_per_symbol, points })
    }

    pub fn bpsk() -> Self {
        Self::psk(1).expect("valid order")
    }

    pub fn qpsk() -> Self {
        Self::psk(2).expect("valid order")
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[Cx<T>] {
        &self.points
    }

    /// Phase of position `p` in units of `pi / order`.
    fn position_phase(order: usize, p: usize) -> i64 {
        let offset = if order >= 4 { 1 } else { 0 };
        (2 * p + offset) as i64
    }

    fn label_of_position(p: usize) -> usize {
        p ^ (p >> 1)
    }

    /// Label of the point nearest to `z` (lowest label on ties).
    pub fn decide(&self, z: Cx<T>) -> usize {
        // For unit-modulus points, minimum distance == maximum correlation.
        let mut best = 0;
        let mut best_score = T::neg_infinity();
        for (label, p) in self.points.iter().enumerate() {
            let score = z.re * p.re + z.im * p.im;
            if score > best_score {
                best = label;
                best_score = score;
            }
        }
        best
    }

    /// Quantizes `exp(j pi phase_num / phase_den)` to the nearest point by
    /// exact integer phase arithmetic. Ties go to the point with the smaller
    /// phase measured in (-pi, pi].
    fn quantize_phase(&self, phase_num: i64, phase_den: i64) -> usize {
        let order = self.order() as i64;
        // Common unit: pi / (phase_den * order).
        let period = 2 * phase_den * order;
        let target = (phase_num * order).rem_euclid(period);
        let signed = |v: i64| {
            let v = v.rem_euclid(period);
            if v > period / 2 {
                v - period
            } else {
                v
            }
        };
        let mut best: Option<(i64, i64, usize)> = None;
        for p in 0..self.order() {
            let phase = Self::position_phase(self.order(), p) * phase_den;
            let diff = signed(phase - target).abs();
            let key = (diff, signed(phase), Self::label_of_position(p));
            if best.is_none_or(|b| (key.0, key.1) < (b.0, b.1)) {
                best = Some(key);
            }
        }
        best.expect("non-empty alphabet").2
    }
}

pub fn modulate<T: Real>(bits: &[u8], alphabet: &ModulationAlphabet<T>) -> Result<Vec<Cx<T>>> {
    let k = alphabet.bits_per_symbol();
    if !bits.len().is_multiple_of(k) {
        return invalid(format!("{} bits do not split into {k}-bit symbols", bits.len()));
    }
    bits.chunks(k)
        .map(|chunk| {
            let mut label = 0usize;
            for &b in chunk {
                if b > 1 {
                    return invalid(format!("bit values must be 0 or 1, got {b}"));
                }
                label = (label << 1) | usize::from(b);
            }
            Ok(alphabet.points[label])
        })
        .collect()
}

/// Hard minimum-distance decisions mapped back to bits.
pub fn demodulate<T: Real>(symbols: &[Cx<T>], alphabet: &ModulationAlphabet<T>) -> Vec<u8> {
    let k = alphabet.bits_per_symbol();
    let mut bits = Vec::with_capacity(symbols.len() * k);
    for &z in symbols {
        let label = alphabet.decide(z);
        bits.extend((0..k).rev().map(|i| ((label >> i) & 1) as u8));
    }
    bits
}

/// Nearest constellation point for every soft symbol.
pub fn hard_decisions<T: Real>(symbols: &[Cx<T>], alphabet: &ModulationAlphabet<T>) -> Vec<Cx<T>> {
    symbols.iter().map(|&z| alphabet.points[alphabet.decide(z)]).collect()
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Length-`n` Zadoff-Chu sequence with root `root`, each element quantized
/// to the nearest alphabet point.
///
/// Even `n` uses `exp(-j pi u k^2 / n)`, odd `n` uses
/// `exp(-j pi u k (k+1) / n)`.
pub fn generate_pilot_block<T: Real>(n: usize, alphabet: &ModulationAlphabet<T>, root: usize) -> Result<Vec<Cx<T>>> {
    if n == 0 {
        return invalid("pilot block length must be at least 1");
    }
    if root == 0 || gcd(root, n) != 1 {
        return invalid(format!("Zadoff-Chu root {root} must be coprime with {n}"));
    }
    let period = 2 * n as u128;
    Ok((0..n)
        .map(|k| {
            let k = k as u128;
            let quad = if n.is_multiple_of(2) { k * k } else { k * (k + 1) };
            let num = (root as u128 * quad) % period;
            let label = alphabet.quantize_phase(-(num as i64), n as i64);
            alphabet.points[label]
        })
        .collect())
}

/// Unquantized Zadoff-Chu sequence (same convention as
/// [`generate_pilot_block`]).
pub fn zadoff_chu<T: Real>(n: usize, root: usize) -> Vec<Cx<T>> {
    let period = 2 * n as u128;
    (0..n)
        .map(|k| {
            let k = k as u128;
            let quad = if n.is_multiple_of(2) { k * k } else { k * (k + 1) };
            let num = (root as u128 * quad) % period;
            unit_phasor(-(num as i64), n as i64)
        })
        .collect()
}

/// Applies `T^d`: output element `i` is input element `(i - d) mod N`.
pub fn cyclic_shift<T: Real>(block: &[Cx<T>], d: usize) -> Vec<Cx<T>> {
    let n = block.len();
    if n == 0 {
        return Vec::new();
    }
    let d = d % n;
    let mut out = Vec::with_capacity(n);
    out.extend_from_slice(&block[n - d..]);
    out.extend_from_slice(&block[..n - d]);
    out
}

pub fn zero_pad<T: Real>(block: &[Cx<T>], zp_len: usize) -> Vec<Cx<T>> {
    let mut out = Vec::with_capacity(block.len() + zp_len);
    out.extend_from_slice(block);
    out.resize(block.len() + zp_len, Cx::new(T::zero(), T::zero()));
    out
}

/// Cyclic delay diversity layout: antenna `m` (0-based) delays each block
/// cyclically by `m * delay_step` samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CddConfig {
    pub antennas: usize,
    pub delay_step: usize,
    pub block_len: usize,
}

impl CddConfig {
    /// Checks `L_g <= D <= floor(N / M)` and `N >= M L_g`.
    pub fn new(antennas: usize, delay_step: usize, block_len: usize, taps: usize) -> Result<Self> {
        if antennas == 0 || taps == 0 || block_len == 0 {
            return invalid("antennas, taps and block length must be positive");
        }
        if block_len < antennas * taps {
            return invalid(format!("block length {block_len} is shorter than M * L_g = {}", antennas * taps));
        }
        let max_step = block_len / antennas;
        if delay_step < taps || delay_step > max_step {
            return invalid(format!("cyclic delay step {delay_step} outside [{taps}, {max_step}]"));
        }
        Ok(Self { antennas, delay_step, block_len })
    }

    pub fn delay(&self, antenna: usize) -> usize {
        antenna * self.delay_step
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameSpec<T: Real> {
    pub block_len: usize,
    pub zp_len: usize,
    pub alphabet: ModulationAlphabet<T>,
    pub pilot_root: usize,
}

impl<T: Real> FrameSpec<T> {
    pub fn bits_per_block(&self) -> usize {
        self.block_len * self.alphabet.bits_per_symbol()
    }

    pub fn pilot(&self) -> Result<Vec<Cx<T>>> {
        generate_pilot_block(self.block_len, &self.alphabet, self.pilot_root)
    }
}

/// Two anti-symmetric pilot blocks followed by the data blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame<T: Real> {
    pub pilot_blocks: [Vec<Cx<T>>; 2],
    pub data_blocks: Vec<Vec<Cx<T>>>,
    pub payload_bits: Vec<u8>,
}

impl<T: Real> Frame<T> {
    /// Pilots first, then data, in air order.
    pub fn blocks(&self) -> impl Iterator<Item = &[Cx<T>]> {
        self.pilot_blocks.iter().chain(self.data_blocks.iter()).map(Vec::as_slice)
    }

    pub fn block_count(&self) -> usize {
        2 + self.data_blocks.len()
    }

    /// On-air sample stream of one antenna: every block cyclically delayed
    /// by that antenna's delay, then zero padded.
    pub fn antenna_stream(&self, cdd: &CddConfig, antenna: usize, zp_len: usize) -> Vec<Cx<T>> {
        let d = cdd.delay(antenna);
        self.blocks().flat_map(|b| zero_pad(&cyclic_shift(b, d), zp_len)).collect()
    }
}

pub fn build_frame<T: Real>(payload_bits: &[u8], spec: &FrameSpec<T>) -> Result<Frame<T>> {
    let per_block = spec.bits_per_block();
    if per_block == 0 || !payload_bits.len().is_multiple_of(per_block) {
        return invalid(format!(
            "payload of {} bits is not a whole number of {per_block}-bit blocks",
            payload_bits.len()
        ));
    }
    let pilot = spec.pilot()?;
    let negated = pilot.iter().map(|&c| -c).collect();
    let data_blocks =
        payload_bits.chunks(per_block).map(|chunk| modulate(chunk, &spec.alphabet)).collect::<Result<Vec<_>>>()?;
    Ok(Frame { pilot_blocks: [pilot, negated], data_blocks, payload_bits: payload_bits.to_vec() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{stream_rng, StreamKey};
    use crate::scalar::norm_sqr;
    use proptest::prelude::*;
    use rand::Rng;

    type C = Cx<f64>;
    const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn qpsk() -> ModulationAlphabet<f64> {
        ModulationAlphabet::qpsk()
    }

    #[test]
    fn qpsk_gray_table() {
        let syms = modulate(&[0, 0, 0, 1, 1, 1, 1, 0], &qpsk()).unwrap();
        let want = [C::new(S, S), C::new(-S, S), C::new(-S, -S), C::new(S, -S)];
        for (a, b) in syms.iter().zip(&want) {
            assert!((a - b).norm() < 1e-15);
        }
        assert!(modulate::<f64>(&[], &qpsk()).unwrap().is_empty());
        assert!(modulate(&[0, 1, 1], &qpsk()).is_err());
        assert!(syms.iter().all(|c| (c.norm() - 1.0).abs() < 1e-15));
    }

    #[test]
    fn noiseless_round_trip() {
        let mut rng = stream_rng(1, StreamKey::new(0, 0, 0));
        let bits: Vec<u8> = (0..10_000).map(|_| rng.random_range(0..2)).collect();
        for k in [1, 2, 3] {
            let a = ModulationAlphabet::<f64>::psk(k).unwrap();
            let n = bits.len() / k * k;
            assert_eq!(demodulate(&modulate(&bits[..n], &a).unwrap(), &a), &bits[..n]);
        }
    }

    #[test]
    fn boundary_tie_takes_lowest_label() {
        assert_eq!(demodulate(&[C::new(1.0, 0.0)], &qpsk()), vec![0, 0]);
        assert_eq!(demodulate(&[C::new(0.0, 1.0)], &qpsk()), vec![0, 0]);
        assert_eq!(demodulate(&[C::new(-1.0, 0.0)], &qpsk()), vec![0, 1]);
        assert_eq!(demodulate(&[C::new(0.0, 0.0)], &qpsk()), vec![0, 0]);
    }

    #[test]
    fn pilot_symbols_belong_to_alphabet() {
        let a = qpsk();
        for n in [4usize, 7, 64, 128] {
            let p = generate_pilot_block(n, &a, 1).unwrap();
            assert_eq!(p.len(), n);
            assert!(p.iter().all(|c| a.points().contains(c)));
        }
        assert!(generate_pilot_block(128, &a, 2).is_err());
        assert!(generate_pilot_block(0, &a, 1).is_err());
    }

    #[test]
    fn pilot_n4_quantization() {
        // ZC phases 0, -pi/4, -pi, -9pi/4; ties go to the smaller phase.
        let p = generate_pilot_block(4, &qpsk(), 1).unwrap();
        let want = [C::new(S, -S), C::new(S, -S), C::new(-S, -S), C::new(S, -S)];
        assert_eq!(p, want);
        assert!(p.iter().all(|c| (c.norm() - 1.0).abs() < 1e-15));
        let zc: Vec<C> = zadoff_chu(4, 1);
        assert!((zc[1] - C::from_polar(1.0, -std::f64::consts::FRAC_PI_4)).norm() < 1e-15);
    }

    #[test]
    fn pilot_autocorrelation_n128() {
        let p = generate_pilot_block(128, &qpsk(), 1).unwrap();
        let n = p.len();
        let worst =
            (1..n).map(|lag| (0..n).map(|i| p[i] * p[(i + lag) % n].conj()).sum::<C>().norm()).fold(0.0, f64::max);
        // Achieved peak sidelobe for u = 1 is exactly N / 4 = 32.
        assert!(worst <= 0.5 * n as f64, "worst sidelobe {worst}");
        assert!((worst - 32.0).abs() < 1e-9, "worst sidelobe {worst}");
    }

    #[test]
    fn cyclic_shift_cases() {
        let x: Vec<C> = (0..4).map(|i| C::new(i as f64, 0.0)).collect();
        assert_eq!(cyclic_shift(&x, 0), x);
        assert_eq!(cyclic_shift(&x, 4), x);
        assert_eq!(cyclic_shift(&x, 1), vec![x[3], x[0], x[1], x[2]]);
    }

    #[test]
    fn zero_pad_cases() {
        let x = vec![C::new(1.0, 1.0), C::new(-2.0, 0.5)];
        let y = zero_pad(&x, 2);
        assert_eq!(y, vec![x[0], x[1], C::default(), C::default()]);
        assert_eq!(norm_sqr(&y), norm_sqr(&x));
        assert_eq!(zero_pad(&vec![C::new(1.0, 0.0); 128], 16).len(), 144);
    }

    #[test]
    fn cdd_constraints() {
        assert!(CddConfig::new(16, 8, 128, 4).is_ok());
        assert!(CddConfig::new(16, 3, 128, 4).is_err());
        assert!(CddConfig::new(16, 9, 128, 4).is_err());
        assert!(CddConfig::new(40, 4, 128, 4).is_err());
        assert_eq!(CddConfig::new(4, 32, 128, 1).unwrap().delay(3), 96);
    }

    fn spec() -> FrameSpec<f64> {
        FrameSpec { block_len: 128, zp_len: 16, alphabet: qpsk(), pilot_root: 1 }
    }

    #[test]
    fn frame_layout() {
        let f = build_frame(&[], &spec()).unwrap();
        assert_eq!(f.block_count(), 2);
        assert!(f.pilot_blocks[0].iter().zip(&f.pilot_blocks[1]).all(|(a, b)| a + b == C::default()));
        assert!(build_frame(&[0u8; 255], &spec()).is_err());

        let mut rng = stream_rng(2, StreamKey::new(0, 0, 0));
        let bits: Vec<u8> = (0..3 * 256).map(|_| rng.random_range(0..2)).collect();
        let f = build_frame(&bits, &spec()).unwrap();
        assert_eq!(f.data_blocks.len(), 3);
        let cdd = CddConfig::new(16, 8, 128, 4).unwrap();
        for m in [0, 5, 15] {
            let s = f.antenna_stream(&cdd, m, 16);
            assert_eq!(s.len(), 5 * 144);
            for (i, v) in s.iter().enumerate() {
                if i % 144 >= 128 {
                    assert_eq!(*v, C::default());
                } else {
                    assert!((v.norm() - 1.0).abs() < 1e-15);
                }
            }
        }
        assert_eq!(build_frame(&bits, &spec()).unwrap(), f);
    }

    proptest! {
        #[test]
        fn shift_inverse_and_norm(vals in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..40), d in 0usize..100) {
            let x: Vec<C> = vals.into_iter().map(|(a, b)| C::new(a, b)).collect();
            let n = x.len();
            let y = cyclic_shift(&x, d);
            prop_assert_eq!(cyclic_shift(&y, n - d % n), x.clone());
            prop_assert!((norm_sqr(&y) - norm_sqr(&x)).abs() <= 1e-12 * norm_sqr(&x).max(1.0));
            let mut a: Vec<_> = x.iter().map(|c| (c.re.to_bits(), c.im.to_bits())).collect();
            let mut b: Vec<_> = y.iter().map(|c| (c.re.to_bits(), c.im.to_bits())).collect();
            a.sort(); b.sort();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn decisions_scale_invariant(re in -3.0f64..3.0, im in -3.0f64..3.0, scale in 0.01f64..100.0) {
            let a = qpsk();
            let z = C::new(re, im);
            prop_assume!(re.abs() > 1e-9 && im.abs() > 1e-9);
            prop_assert_eq!(a.decide(z), a.decide(z * scale));
        }
    }
}
