use std::fmt;
use std::str::FromStr;

use crate::channel::{ChannelModel, ChannelRegime, LargeScaleModel, LinkGains};
use crate::error::{invalid, Error, Result};
use crate::receiver::{snr_loss, CsiMode, EqualizerKind, ReceiverConfig};
use crate::waveform::{CddConfig, FrameSpec, ModulationAlphabet};

/// Receiver path evaluated in a BER sweep. `Mfb` is the matched-filter
/// bound, reported analytically per realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EqualizerChoice {
    Zf,
    Mmse,
    BiGdfe,
    Mfb,
}

impl EqualizerChoice {
    pub fn name(self) -> &'static str {
        match self {
            Self::Zf => "ZF",
            Self::Mmse => "MMSE",
            Self::BiGdfe => "BIGDFE",
            Self::Mfb => "MFB",
        }
    }
}

impl fmt::Display for EqualizerChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EqualizerChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_uppercase().as_str() {
            "ZF" => Ok(Self::Zf),
            "MMSE" => Ok(Self::Mmse),
            "BIGDFE" | "BI-GDFE" => Ok(Self::BiGdfe),
            "MFB" => Ok(Self::Mfb),
            other => Err(format!("unknown equalizer `{other}` (expected ZF, MMSE, BIGDFE or MFB)")),
        }
    }
}

pub fn csi_name(csi: CsiMode) -> &'static str {
    match csi {
        CsiMode::Perfect => "perfect",
        CsiMode::Estimated => "estimated",
    }
}

pub fn parse_csi(s: &str) -> std::result::Result<CsiMode, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "perfect" => Ok(CsiMode::Perfect),
        "estimated" => Ok(CsiMode::Estimated),
        other => Err(format!("unknown CSI mode `{other}` (expected perfect or estimated)")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeChoice {
    General,
    Los,
}

impl FromStr for RegimeChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "general" => Ok(Self::General),
            "los" => Ok(Self::Los),
            other => Err(format!("unknown regime `{other}` (expected general or los)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutageEstimator {
    /// Fraction of realizations in outage.
    Plain,
    /// Average of the outage probability conditioned on the backward links.
    Conditional,
    Both,
}

impl FromStr for OutageEstimator {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "plain" | "mc" => Ok(Self::Plain),
            "conditional" => Ok(Self::Conditional),
            "both" => Ok(Self::Both),
            other => Err(format!("unknown outage estimator `{other}` (expected plain, conditional or both)")),
        }
    }
}

/// Everything a sweep needs. Defaults reproduce the reference setup.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub block_len: usize,
    pub zp_len: usize,
    pub pilot_blocks: usize,
    pub noise_var: f64,
    pub modulation_bits: usize,
    pub antennas: usize,
    /// Cyclic delay step; `None` means `floor(N / M)`.
    pub delay_step: Option<usize>,
    pub taps: usize,
    pub geometry: LargeScaleModel<f64>,
    pub regime: RegimeChoice,
    pub aoa: f64,
    pub spacing: f64,
    pub equalizers: Vec<EqualizerChoice>,
    pub csi: Vec<CsiMode>,
    pub rate: f64,
    pub bi_gdfe_iters: usize,
    /// Direct-link averaging window in blocks; `None` means the whole frame.
    pub mean_window_blocks: Option<usize>,
    pub realizations: usize,
    pub master_seed: u64,
    pub data_blocks: usize,
    pub pilot_root: usize,
    pub outage_estimator: OutageEstimator,
}

pub const DEFAULT_SEED: u64 = 20_240_601;

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            block_len: 128,
            zp_len: 16,
            pilot_blocks: 2,
            noise_var: 1e-13,
            modulation_bits: 2,
            antennas: 16,
            delay_step: None,
            taps: 4,
            geometry: LargeScaleModel::reference(),
            regime: RegimeChoice::General,
            aoa: 0.0,
            spacing: 0.5,
            equalizers: vec![EqualizerChoice::Zf, EqualizerChoice::Mmse, EqualizerChoice::BiGdfe, EqualizerChoice::Mfb],
            csi: vec![CsiMode::Perfect, CsiMode::Estimated],
            rate: 2.0,
            bi_gdfe_iters: EqualizerKind::DEFAULT_GDFE_ITERS,
            mean_window_blocks: None,
            realizations: 100_000,
            master_seed: DEFAULT_SEED,
            data_blocks: 8,
            pilot_root: 1,
            outage_estimator: OutageEstimator::Plain,
        }
    }
}

fn parse_list<T>(
    value: &str,
    item: impl Fn(&str) -> std::result::Result<T, String>,
) -> std::result::Result<Vec<T>, String> {
    let items = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(item)
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if items.is_empty() {
        return Err("empty list".into());
    }
    Ok(items)
}

fn parse_num<T: FromStr>(value: &str) -> std::result::Result<T, String> {
    value.trim().parse().map_err(|_| format!("cannot parse `{value}` as a number"))
}

impl SystemConfig {
    /// Parses `key = value` lines on top of the defaults. `#` starts a
    /// comment; blank lines are ignored.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_kv_str(text)?;
        Ok(cfg)
    }

    /// Like [`SystemConfig::from_kv_str`], on top of the current values.
    pub fn apply_kv_str(&mut self, text: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                line: idx + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            self.set(key.trim(), value.trim()).map_err(|message| Error::Config { line: idx + 1, message })?;
        }
        Ok(())
    }

    /// Sets one field by its config-file key.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        match key {
            "N" => self.block_len = parse_num(value)?,
            "N_zp" => self.zp_len = parse_num(value)?,
            "N_p" => self.pilot_blocks = parse_num(value)?,
            "sigma2" => self.noise_var = parse_num(value)?,
            "modulation" => {
                self.modulation_bits = match value.trim().to_ascii_uppercase().as_str() {
                    "BPSK" => 1,
                    "QPSK" => 2,
                    "8PSK" => 3,
                    "16PSK" => 4,
                    other => return Err(format!("unknown modulation `{other}`")),
                }
            }
            "M" => self.antennas = parse_num(value)?,
            "D" => {
                self.delay_step = match value.trim() {
                    "auto" => None,
                    v => Some(parse_num(v)?),
                }
            }
            "L_g" => self.taps = parse_num(value)?,
            "d_d" => self.geometry.direct_distance = parse_num(value)?,
            "d_f" => self.geometry.forward_distance = parse_num(value)?,
            "d_g" => self.geometry.backward_distance = parse_num(value)?,
            "v_d" => self.geometry.direct_exponent = parse_num(value)?,
            "v_f" => self.geometry.forward_exponent = parse_num(value)?,
            "v_g" => self.geometry.backward_exponent = parse_num(value)?,
            "regime" => self.regime = value.parse()?,
            "theta" => self.aoa = parse_num(value)?,
            "r" => self.spacing = parse_num(value)?,
            "equalizer" => self.equalizers = parse_list(value, str::parse)?,
            "csi" => self.csi = parse_list(value, parse_csi)?,
            "R" => self.rate = parse_num(value)?,
            "bi_gdfe_iters" => self.bi_gdfe_iters = parse_num(value)?,
            "mean_window_blocks" => {
                self.mean_window_blocks = match value.trim() {
                    "frame" | "0" => None,
                    v => Some(parse_num(v)?),
                }
            }
            "realizations" => self.realizations = parse_num(value)?,
            "master_seed" => self.master_seed = parse_num(value)?,
            "data_blocks" => self.data_blocks = parse_num(value)?,
            "pilot_root" => self.pilot_root = parse_num(value)?,
            "outage_estimator" => self.outage_estimator = value.parse()?,
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    pub fn delay(&self) -> usize {
        self.delay_step.unwrap_or(self.block_len / self.antennas.max(1))
    }

    pub fn cdd(&self) -> Result<CddConfig> {
        CddConfig::new(self.antennas, self.delay(), self.block_len, self.taps)
    }

    /// Checks every structural invariant before any work is done.
    pub fn validate(&self) -> Result<()> {
        self.cdd()?;
        if self.zp_len <= self.taps {
            return invalid(format!("N_zp = {} must exceed L_g = {}", self.zp_len, self.taps));
        }
        if self.pilot_blocks != 2 {
            return invalid(format!("exactly two pilot blocks are supported, got N_p = {}", self.pilot_blocks));
        }
        if !(self.noise_var > 0.0) || !self.noise_var.is_finite() {
            return invalid("sigma2 must be positive");
        }
        if self.realizations == 0 || self.realizations > u32::MAX as usize {
            return invalid("realizations must be in 1..=2^32-1");
        }
        if self.data_blocks == 0 {
            return invalid("need at least one data block");
        }
        if self.bi_gdfe_iters == 0 {
            return invalid("bi_gdfe_iters must be at least 1");
        }
        if self.mean_window_blocks == Some(0) {
            return invalid("mean_window_blocks must be positive");
        }
        if !(self.rate >= 0.0) || !self.rate.is_finite() {
            return invalid("target rate must be non-negative");
        }
        if self.equalizers.is_empty() || self.csi.is_empty() {
            return invalid("need at least one equalizer and one CSI mode");
        }
        ModulationAlphabet::<f64>::psk(self.modulation_bits)?;
        LargeScaleModel::new(
            [self.geometry.direct_distance, self.geometry.forward_distance, self.geometry.backward_distance],
            [self.geometry.direct_exponent, self.geometry.forward_exponent, self.geometry.backward_exponent],
        )?;
        self.channel_model()?.validate()
    }

    pub fn alphabet(&self) -> Result<ModulationAlphabet<f64>> {
        ModulationAlphabet::psk(self.modulation_bits)
    }

    pub fn gains(&self) -> Result<LinkGains<f64>> {
        self.geometry.gains()
    }

    pub fn regime(&self) -> ChannelRegime<f64> {
        match self.regime {
            RegimeChoice::General => ChannelRegime::GeneralRayleigh,
            RegimeChoice::Los => ChannelRegime::LosForward { aoa: self.aoa, spacing: self.spacing },
        }
    }

    pub fn channel_model(&self) -> Result<ChannelModel<f64>> {
        Ok(ChannelModel {
            antennas: self.antennas,
            taps: self.taps,
            block_len: self.block_len,
            delay_step: self.delay(),
            gains: self.gains()?,
            regime: self.regime(),
        })
    }

    pub fn frame_spec(&self) -> Result<FrameSpec<f64>> {
        Ok(FrameSpec {
            block_len: self.block_len,
            zp_len: self.zp_len,
            alphabet: self.alphabet()?,
            pilot_root: self.pilot_root,
        })
    }

    pub fn receiver_config(&self, equalizer: EqualizerChoice, csi: CsiMode) -> Result<ReceiverConfig<f64>> {
        let equalizer = match equalizer {
            EqualizerChoice::Zf => EqualizerKind::Zf,
            EqualizerChoice::Mmse => EqualizerKind::Mmse,
            EqualizerChoice::BiGdfe => EqualizerKind::BiGdfe { max_iters: self.bi_gdfe_iters },
            EqualizerChoice::Mfb => return invalid("the matched-filter bound has no receiver"),
        };
        Ok(ReceiverConfig {
            cdd: self.cdd()?,
            zp_len: self.zp_len,
            taps: self.taps,
            alphabet: self.alphabet()?,
            pilot_root: self.pilot_root,
            equalizer,
            csi,
            mean_window: self.mean_window_blocks,
        })
    }

    /// `p_t = snr sigma^2 / (beta_1 beta_2)` for an average SNR in dB.
    pub fn tx_power(&self, snr_db: f64) -> Result<f64> {
        let gains = self.gains()?;
        Ok(10f64.powf(snr_db / 10.0) * self.noise_var / gains.cascaded())
    }

    pub fn delta_gamma(&self) -> f64 {
        snr_loss(self.block_len, self.taps)
    }
}

/// Parses `start:step:stop` (inclusive) or a single value into a grid in dB.
pub fn parse_snr_grid(spec: &str) -> std::result::Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
    let nums = parts
        .iter()
        .map(|p| p.parse::<f64>().map_err(|_| format!("cannot parse `{p}` in SNR grid `{spec}`")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    match nums.as_slice() {
        [v] => Ok(vec![*v]),
        [start, step, stop] => {
            if !(*step > 0.0) || stop < start {
                return Err(format!("SNR grid `{spec}` needs a positive step and stop >= start"));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            if count > u16::MAX as usize {
                return Err("SNR grid has too many points".into());
            }
            Ok((0..count).map(|i| start + step * i as f64).collect())
        }
        _ => Err(format!("SNR grid `{spec}` must be `value` or `start:step:stop`")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = SystemConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.delay(), 8);
        let g = cfg.gains().unwrap();
        assert!((g.cascaded() - 1e-12).abs() < 1e-27);
        // 0 dB average SNR puts p_t at sigma^2 / (beta_1 beta_2) = 0.1 W.
        assert!((cfg.tx_power(0.0).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn parses_key_values() {
        let text = "# reference\nM = 4\nL_g=2 # taps\nequalizer = zf, MMSE\ncsi = perfect\nsigma2 = 1e-12\nregime = los\ntheta = 0.3\nD = 16\nmean_window_blocks = 3\n";
        let cfg = SystemConfig::from_kv_str(text).unwrap();
        assert_eq!(cfg.antennas, 4);
        assert_eq!(cfg.taps, 2);
        assert_eq!(cfg.equalizers, vec![EqualizerChoice::Zf, EqualizerChoice::Mmse]);
        assert_eq!(cfg.csi, vec![CsiMode::Perfect]);
        assert_eq!(cfg.noise_var, 1e-12);
        assert_eq!(cfg.regime, RegimeChoice::Los);
        assert_eq!(cfg.delay(), 16);
        assert_eq!(cfg.mean_window_blocks, Some(3));
        cfg.validate().unwrap();
    }

    #[test]
    fn reports_bad_lines() {
        match SystemConfig::from_kv_str("M = 4\nbogus = 1\n") {
            Err(Error::Config { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(SystemConfig::from_kv_str("M 4"), Err(Error::Config { line: 1, .. })));
        assert!(matches!(SystemConfig::from_kv_str("M = four"), Err(Error::Config { .. })));
    }

    #[test]
    fn rejects_invalid_structure() {
        let mut cfg = SystemConfig { zp_len: 4, ..SystemConfig::default() };
        assert!(cfg.validate().is_err());
        cfg = SystemConfig { antennas: 64, ..SystemConfig::default() };
        assert!(cfg.validate().is_err());
        cfg = SystemConfig { delay_step: Some(3), ..SystemConfig::default() };
        assert!(cfg.validate().is_err());
        cfg = SystemConfig { pilot_blocks: 3, ..SystemConfig::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn snr_grids() {
        assert_eq!(parse_snr_grid("0:5:40").unwrap(), vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0]);
        assert_eq!(parse_snr_grid("20").unwrap(), vec![20.0]);
        assert_eq!(parse_snr_grid("-10:2.5:-5").unwrap(), vec![-10.0, -7.5, -5.0]);
        assert!(parse_snr_grid("0:0:4").is_err());
        assert!(parse_snr_grid("a:1:2").is_err());
    }
}
