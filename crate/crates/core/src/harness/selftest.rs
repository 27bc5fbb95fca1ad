use super::ber::ber_sweep_detailed;
use super::config::{EqualizerChoice, SystemConfig};
use crate::analysis::{gk_sum_params, theoretical_ber};
use crate::numerics::{dft, idft, regularized_lower_gamma};
use crate::receiver::{overlap_add, zf_output_snr, CsiMode};
use crate::scalar::Cx;
use crate::waveform::{demodulate, modulate, ModulationAlphabet};

#[derive(Debug, Clone, PartialEq)]
pub struct SelfCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: impl Into<String>) -> SelfCheck {
    SelfCheck { name, passed, detail: detail.into() }
}

/// Fast closed-form and noiseless checks; every entry must pass.
pub fn selftest() -> Vec<SelfCheck> {
    let mut out = Vec::new();

    let x: Vec<Cx<f64>> = (0..16).map(|i| Cx::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
    let err = dft(&x)
        .and_then(|y| idft(&y))
        .map(|z| z.iter().zip(&x).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
        .unwrap_or(f64::INFINITY);
    out.push(check("dft round trip", err < 1e-12, format!("max error {err:e}")));

    let blk: Vec<Cx<f64>> = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 0.0].iter().map(|&v| Cx::new(v, 0.0)).collect();
    let ola = overlap_add(&blk, 4, 3).map(|o| o.y.iter().map(|v| v.re).collect::<Vec<_>>());
    out.push(check("overlap-add fold", ola.as_deref() == Ok(&[6.0, 8.0, 3.0, 4.0][..]), format!("{ola:?}")));

    let qpsk = ModulationAlphabet::<f64>::qpsk();
    let bits: Vec<u8> = (0..64).map(|i| ((i * 5 + 1) % 3 % 2) as u8).collect();
    let back = modulate(&bits, &qpsk).map(|s| demodulate(&s, &qpsk));
    out.push(check("QPSK bit round trip", back.as_ref() == Ok(&bits), ""));

    let g = regularized_lower_gamma(1.0f64, 0.7).unwrap_or(f64::NAN);
    let want = -(-0.7f64).exp_m1();
    out.push(check("gamma(1, x) closed form", (g - want).abs() < 1e-12, format!("{g} vs {want}")));

    let q0 = theoretical_ber(0.0f64).unwrap_or(f64::NAN);
    out.push(check("Q(0) = 1/2", q0 == 0.5, format!("{q0}")));

    let zf = zf_output_snr(&[Cx::new(1.0f64, 0.0), Cx::new(0.5, 0.0)], 10.0).unwrap_or(f64::NAN);
    out.push(check("two-bin ZF SNR", (zf - 4.0).abs() < 1e-12, format!("{zf}")));

    let p = gk_sum_params(1, 4, 2.0f64);
    out.push(check(
        "single-antenna generalized-K parameters",
        p.as_ref().map(|p| (p.k, p.m, p.omega)).ok() == Some((4.0, 1.0, 2.0)),
        format!("{p:?}"),
    ));

    let cfg = SystemConfig {
        antennas: 4,
        realizations: 4,
        data_blocks: 2,
        equalizers: vec![EqualizerChoice::Zf, EqualizerChoice::Mmse, EqualizerChoice::BiGdfe],
        csi: vec![CsiMode::Perfect, CsiMode::Estimated],
        ..SystemConfig::default()
    };
    let e2e = ber_sweep_detailed(&cfg, &[200.0]).map(|pts| pts[0].curves.iter().map(|c| c.bit_errors).sum::<u64>());
    out.push(check("noiseless end-to-end", e2e == Ok(0), format!("{e2e:?} bit errors")));
    out
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_checks_pass() {
        for c in super::selftest() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
