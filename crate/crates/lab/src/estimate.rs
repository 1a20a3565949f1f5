//! Disorder estimation from sample files.

use nalgebra::{Matrix2, SymmetricEigen};
use optomech::config::{parse_config, Config};
use optomech::inference::{cfim, mle_multi_setting, mle_solution_set, MleOptions, Setting, SettingData};
use optomech::{Error, Evaluation, ModelPipeline, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::code_version;
use crate::samples::Sample;

/// χ²₂ quantile for a 95% confidence region.
pub const CHI2_95: f64 = 5.991_464_547_107_979;

/// Parameters that may legitimately differ between a sample and the model
/// config, because they describe the detection setting of each sample.
const PER_SAMPLE_KEYS: [&str; 3] = ["lo_phase", "filter_freq", "detector_efficiency"];

/// Rejects samples drawn from a different system than `config` describes.
pub fn check_metadata(config: &Config, sample: &Sample, name: &str) -> Result<()> {
    let meta = &sample.meta;
    let theirs = parse_config(&meta.config).map_err(|e| Error::Input(format!("{name}: embedded config is invalid: {e}")))?;
    let as_map = |c: &Config| match serde_json::to_value(&c.params) {
        Ok(Value::Object(m)) => m,
        _ => unreachable!("parameters serialize to an object"),
    };
    let (ours, theirs) = (as_map(config), as_map(&theirs));
    let mut differ: Vec<String> =
        ours.iter().filter(|(k, v)| !PER_SAMPLE_KEYS.contains(&k.as_str()) && theirs.get(*k) != Some(v)).map(|(k, _)| k.clone()).collect();
    if meta.model != config.params.model.name() && !differ.contains(&"model".to_string()) {
        differ.insert(0, "model".into());
    }
    let s = meta.setting;
    if s.theta != theirs["lo_phase"] || s.eta != theirs["detector_efficiency"] || s.filter_freq != theirs["filter_freq"] {
        differ.push("setting".into());
    }
    if differ.is_empty() {
        Ok(())
    } else {
        Err(Error::Input(format!("{name}: sample metadata disagrees with the config in {}", differ.join(", "))))
    }
}

/// Data of one detection setting, pooled over files.
#[derive(Clone, Debug, Serialize)]
pub struct SettingGroup {
    pub data: SettingData,
    pub files: Vec<String>,
}

/// Pools samples taken at identical settings by adding their sizes and Σk².
pub fn group_settings(samples: &[(String, Sample)]) -> Result<Vec<SettingGroup>> {
    let mut groups: Vec<SettingGroup> = Vec::new();
    for (name, s) in samples {
        let d = SettingData::from_sample(s.meta.setting, &s.k)?;
        match groups.iter_mut().find(|g| g.data.setting == d.setting) {
            Some(g) => {
                g.data.n += d.n;
                g.data.statistic += d.statistic;
                g.files.push(name.clone());
            }
            None => groups.push(SettingGroup { data: d, files: vec![name.clone()] }),
        }
    }
    Ok(groups)
}

/// Semi-axes (major first, m) and major-axis angle (rad, from the δq₁ axis) of
/// the region xᵀC⁻¹x ≤ χ².
pub fn confidence_ellipse(covariance: &Matrix2<f64>, chi2: f64) -> ([f64; 2], f64) {
    let eig = SymmetricEigen::new(*covariance);
    let (major, minor) = if eig.eigenvalues[0] >= eig.eigenvalues[1] { (0, 1) } else { (1, 0) };
    let v = eig.eigenvectors.column(major);
    let mut angle = v[1].atan2(v[0]);
    // Fold into (−π/2, π/2]; the axis has no direction.
    if angle > std::f64::consts::FRAC_PI_2 {
        angle -= std::f64::consts::PI;
    } else if angle <= -std::f64::consts::FRAC_PI_2 {
        angle += std::f64::consts::PI;
    }
    let axis = |i: usize| (chi2 * eig.eigenvalues[i].max(0.0)).sqrt();
    ([axis(major), axis(minor)], angle)
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Runs the estimator appropriate to the number of distinct settings and
/// returns the JSON report. The config's disorder serves as the reference
/// point that fixes grid widths and the Fisher information scale.
pub fn estimate(config: &Config, samples: &[(String, Sample)]) -> Result<Value> {
    if samples.is_empty() {
        return Err(Error::Input("no sample files given".into()));
    }
    for (name, s) in samples {
        check_metadata(config, s, name)?;
    }
    let groups = group_settings(samples)?;
    let p = &config.params;
    let model = ModelPipeline::new(p.clone())?;
    let reference = config.disorder;
    let settings: Vec<Value> = groups.iter().map(|g| json!({ "setting": g.data.setting, "n": g.data.n, "statistic": g.data.statistic, "files": g.files })).collect();
    let mut report = json!({
        "model": p.model.name(),
        "reference": reference,
        "settings": settings,
        "code_version": code_version(),
    });
    if groups.len() == 1 {
        let data = groups[0].data;
        let Setting { theta, eta, filter_freq } = data.setting;
        let o = Evaluation::new(p, &reference)?.output(filter_freq)?;
        let f = cfim(&o.output.sigma, &o.d_sigma_si(), theta, eta)? * data.n as f64;
        let bound = p.disorder_bound;
        let width = |i: usize| {
            let w = 1.0 / f[(i, i)].sqrt();
            if w.is_finite() { w.min(bound) } else { bound }
        };
        let axis = |c: f64, half: f64, n| linspace((c - half).max(-bound), (c + half).min(bound), n);
        let (w1, w2) = (width(0), width(1));
        let set = mle_solution_set(&data, &model, &axis(reference.dq1, 8.0 * w1, 17), &axis(reference.dq2, 16.0 * w2, 33))?;
        let curve: Vec<[f64; 2]> = set.pairs().into_iter().map(|(a, b)| [a, b]).collect();
        report["estimator"] = json!("solution_set");
        report["identifiability"] = json!("under-identified");
        report["note"] = json!("one detection setting constrains a single combination of the disorders; the estimate is a curve");
        report["grid_widths"] = json!([w1, w2]);
        report["target_variance"] = json!(set.target_variance);
        report["variance_range"] = json!(set.variance_range);
        report["curve"] = json!(curve);
        report["vertical_lines"] = json!(set.vertical_lines);
        report["diagnostic"] = json!(set.diagnostic);
    } else {
        let data: Vec<SettingData> = groups.iter().map(|g| g.data).collect();
        let est = mle_multi_setting(&data, &model, &MleOptions { reference, ..MleOptions::default() })?;
        let c = est.covariance_bound;
        let (semi_axes, angle) = confidence_ellipse(&Matrix2::new(c[0][0], c[0][1], c[1][0], c[1][1]), CHI2_95);
        report["estimator"] = json!("multi_setting");
        report["identifiability"] = json!("identified");
        report["estimate"] = json!(est.estimate);
        report["log_likelihood"] = json!(est.log_likelihood);
        report["hessian"] = json!(est.hessian);
        report["hessian_negative_definite"] = json!(est.hessian_negative_definite);
        report["newton_decrement"] = json!(est.newton_decrement);
        report["stalled"] = json!(est.stalled);
        report["joint_fisher"] = json!(est.joint_fisher);
        report["covariance_bound"] = json!(est.covariance_bound);
        report["ellipse"] = json!({
            "confidence": 0.95,
            "chi2": CHI2_95,
            "center": est.estimate,
            "semi_axes": semi_axes,
            "angle": angle,
        });
        report["residuals"] = json!(est.residuals);
        report["iterations"] = json!(est.iterations);
    }
    Ok(report)
}
