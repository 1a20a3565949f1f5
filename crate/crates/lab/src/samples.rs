//! Synthetic homodyne samples on disk: a one-column CSV of outcomes with a JSON
//! sidecar describing how they were drawn.

use std::path::{Path, PathBuf};

use optomech::config::{render_config, Config};
use optomech::inference::{homodyne_pdf, sample_homodyne_stream, Setting};
use optomech::{Disorder, Error, Evaluation, Result};
use serde::{Deserialize, Serialize};

use crate::{code_version, io_error};

/// Everything needed to interpret a sample file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub model: String,
    pub setting: Setting,
    pub n: usize,
    pub seed: u64,
    pub stream: u64,
    /// Disorder the sample was drawn at.
    pub truth: Disorder,
    /// Full configuration, rendered back to INI.
    pub config: String,
    pub code_version: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub meta: SampleMeta,
    pub k: Vec<f64>,
}

/// Draws `n` homodyne outcomes at the configuration's disorder and detection
/// setting. The same (seed, stream) always gives the same outcomes.
pub fn generate(config: &Config, n: usize, seed: u64, stream: u64) -> Result<Sample> {
    if n == 0 {
        return Err(Error::Config { line: 0, key: "N".into(), reason: "sample size must be positive".into() });
    }
    let p = &config.params;
    let setting = Setting { theta: p.lo_phase, eta: p.detector_efficiency, filter_freq: p.filter_freq };
    let eval = Evaluation::new(p, &config.disorder)?;
    let sigma = eval.output(setting.filter_freq)?.output.sigma;
    let law = homodyne_pdf(&sigma, setting.theta, setting.eta)?;
    let k = sample_homodyne_stream(&law, n, seed, stream)?;
    let meta = SampleMeta {
        model: p.model.name().into(),
        setting,
        n,
        seed,
        stream,
        truth: config.disorder,
        config: render_config(p, &config.disorder),
        code_version: code_version(),
    };
    Ok(Sample { meta, k })
}

/// Sidecar path: `<file>.json` next to the CSV.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    let mut name = csv.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

pub fn write(sample: &Sample, csv: &Path) -> Result<PathBuf> {
    let mut w = csv::Writer::from_path(csv).map_err(|e| io_error(csv, e))?;
    w.write_record(["k"]).map_err(|e| io_error(csv, e))?;
    for k in &sample.k {
        w.write_record([format!("{k:.16e}")]).map_err(|e| io_error(csv, e))?;
    }
    w.flush().map_err(|e| io_error(csv, e))?;
    let side = sidecar_path(csv);
    let text = serde_json::to_string_pretty(&sample.meta).map_err(|e| Error::Input(e.to_string()))?;
    std::fs::write(&side, text + "\n").map_err(|e| io_error(&side, e))?;
    Ok(side)
}

/// Reads a sample CSV and its sidecar. Missing files, malformed values, empty
/// samples and a size that disagrees with the sidecar are input errors.
pub fn read(csv: &Path) -> Result<Sample> {
    let mut r = csv::Reader::from_path(csv).map_err(|e| io_error(csv, e))?;
    let header = r.headers().map_err(|e| io_error(csv, e))?.clone();
    if header.len() != 1 || header.get(0).map(str::trim) != Some("k") {
        return Err(io_error(csv, format!("expected a single column `k`, found header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut k = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| io_error(csv, e))?;
        let field = rec.get(0).unwrap_or("").trim();
        let v = field.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| io_error(csv, format!("row {}: `{field}` is not a finite number", i + 1)))?;
        k.push(v);
    }
    if k.is_empty() {
        return Err(io_error(csv, "sample is empty"));
    }
    let side = sidecar_path(csv);
    let text = std::fs::read_to_string(&side).map_err(|e| io_error(&side, e))?;
    let meta: SampleMeta = serde_json::from_str(&text).map_err(|e| io_error(&side, e))?;
    if meta.n != k.len() {
        return Err(io_error(csv, format!("sidecar records {} outcomes, file has {}", meta.n, k.len())));
    }
    Ok(Sample { meta, k })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_keeps_the_extension() {
        assert_eq!(sidecar_path(Path::new("out/a.csv")), PathBuf::from("out/a.csv.json"));
    }
}
