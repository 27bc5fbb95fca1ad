use std::io::Write;

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 12] = [
    "experiment_id",
    "scheme",
    "equalizer",
    "csi",
    "M",
    "L_g",
    "snr_db",
    "metric_name",
    "value",
    "ci_halfwidth",
    "n_realizations",
    "seed",
];

/// One CSV row. Metadata rows carry a `meta.` metric name and leave the
/// SNR and interval columns empty.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub experiment_id: String,
    pub scheme: String,
    pub equalizer: String,
    pub csi: String,
    pub antennas: usize,
    pub taps: usize,
    pub snr_db: Option<f64>,
    pub metric: String,
    pub value: f64,
    pub ci_halfwidth: Option<f64>,
    pub n_realizations: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

/// Normal-approximation 95% half-width of a proportion over `n` trials.
pub fn proportion_ci(value: f64, n: u64) -> f64 {
    if n == 0 {
        return f64::NAN;
    }
    1.96 * (value * (1.0 - value) / n as f64).max(0.0).sqrt()
}

impl SweepResult {
    pub fn push(&mut self, row: SweepRow) {
        self.rows.push(row);
    }

    /// `(snr_db, value)` pairs of one curve, in row order.
    pub fn curve(&self, metric: &str, scheme: &str, equalizer: &str, csi: &str) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.metric == metric && r.scheme == scheme && r.equalizer == equalizer && r.csi == csi)
            .filter_map(|r| r.snr_db.map(|s| (s, r.value)))
            .collect()
    }

    pub fn find(&self, metric: &str, scheme: &str, equalizer: &str, csi: &str, snr_db: f64) -> Option<&SweepRow> {
        self.rows.iter().find(|r| {
            r.metric == metric
                && r.scheme == scheme
                && r.equalizer == equalizer
                && r.csi == csi
                && r.snr_db == Some(snr_db)
        })
    }

    pub fn meta(&self, key: &str) -> Option<f64> {
        let name = format!("meta.{key}");
        self.rows.iter().find(|r| r.metric == name).map(|r| r.value)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.experiment_id.clone(),
                r.scheme.clone(),
                r.equalizer.clone(),
                r.csi.clone(),
                r.antennas.to_string(),
                r.taps.to_string(),
                r.snr_db.map(|v| v.to_string()).unwrap_or_default(),
                r.metric.clone(),
                format!("{:e}", r.value),
                r.ci_halfwidth.map(|v| format!("{v:e}")).unwrap_or_default(),
                r.n_realizations.to_string(),
                r.seed.to_string(),
            ])?;
        }
        w.flush()
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV is UTF-8")
    }

    /// Parses a CSV written by [`SweepResult::write_csv`].
    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self> {
        let bad = |m: String| Error::InvalidArgument(format!("malformed sweep CSV: {m}"));
        let mut rdr = csv::Reader::from_reader(input);
        let header = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
        if header.iter().ne(CSV_HEADER) {
            return Err(bad("unexpected header".into()));
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let num = |i: usize| rec[i].parse::<f64>().map_err(|e| bad(format!("column {}: {e}", CSV_HEADER[i])));
            let opt = |i: usize| if rec[i].is_empty() { Ok(None) } else { num(i).map(Some) };
            let int = |i: usize| rec[i].parse::<u64>().map_err(|e| bad(format!("column {}: {e}", CSV_HEADER[i])));
            rows.push(SweepRow {
                experiment_id: rec[0].to_string(),
                scheme: rec[1].to_string(),
                equalizer: rec[2].to_string(),
                csi: rec[3].to_string(),
                antennas: int(4)? as usize,
                taps: int(5)? as usize,
                snr_db: opt(6)?,
                metric: rec[7].to_string(),
                value: num(8)?,
                ci_halfwidth: opt(9)?,
                n_realizations: int(10)?,
                seed: int(11)?,
            });
        }
        Ok(Self { rows })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let mut res = SweepResult::default();
        res.push(SweepRow {
            experiment_id: "ber".into(),
            scheme: "proposed".into(),
            equalizer: "MMSE".into(),
            csi: "perfect".into(),
            antennas: 16,
            taps: 4,
            snr_db: Some(-2.5),
            metric: "ber".into(),
            value: 1.234_567_890_123e-4,
            ci_halfwidth: Some(proportion_ci(1.234_567_890_123e-4, 1_000_000)),
            n_realizations: 1000,
            seed: 7,
        });
        res.push(SweepRow {
            experiment_id: "ber".into(),
            scheme: String::new(),
            equalizer: String::new(),
            csi: String::new(),
            antennas: 16,
            taps: 4,
            snr_db: None,
            metric: "meta.bi_gdfe_iters".into(),
            value: 4.0,
            ci_halfwidth: None,
            n_realizations: 1000,
            seed: 7,
        });
        let text = res.to_csv_string();
        assert!(text.starts_with(
            "experiment_id,scheme,equalizer,csi,M,L_g,snr_db,metric_name,value,ci_halfwidth,n_realizations,seed\n"
        ));
        assert!(text.contains("1.234567890123e-4"));
        let back = SweepResult::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back, res);
        assert_eq!(back.meta("bi_gdfe_iters"), Some(4.0));
    }

    #[test]
    fn proportion_interval() {
        assert_eq!(proportion_ci(0.0, 10), 0.0);
        assert!((proportion_ci(0.5, 100) - 0.098).abs() < 1e-12);
    }
}
