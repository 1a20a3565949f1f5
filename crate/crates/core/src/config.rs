//! INI configuration: `[system]`, `[detection]` and `[disorder]` sections in SI units.

use std::collections::{HashMap, HashSet};

use ini::Ini;

use crate::error::{Error, Result};
use crate::physics::{mode_index_for, Disorder, Model, OutputMode, SystemParams};

/// A parsed configuration file.
#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub params: SystemParams,
    pub disorder: Disorder,
}

const SYSTEM_KEYS: &[&str] = &[
    "model",
    "cavity_length",
    "membrane_mass",
    "mech_freq",
    "mech_damping",
    "cavity_decay",
    "cavity_decay_1",
    "cavity_decay_2",
    "cavity_decay_3",
    "coupling",
    "single_photon_coupling",
    "hopping",
    "reflectivity",
    "calibration_reflectivity",
    "temperature",
    "laser_power",
    "laser_wavelength",
    "mode_index",
    "detuning",
    "tr_detuning_tracks_disorder",
    "cc_rest_phase",
];
const DETECTION_KEYS: &[&str] = &["detection_window", "filter_freq", "detector_efficiency", "lo_phase", "output_mode"];
const DISORDER_KEYS: &[&str] = &["dq1", "dq2", "disorder_bound"];

/// Keys that have no defensible default and must always be given.
pub const REQUIRED_KEYS: &[(&str, &str)] =
    &[("system", "model"), ("system", "cavity_length"), ("system", "detuning")];

/// Extra sections a caller may allow (for example `[sweep]`); their keys are not checked.
pub fn parse_config(text: &str) -> Result<Config> {
    parse_config_with(text, &[])
}

pub fn parse_config_with(text: &str, extra_sections: &[&str]) -> Result<Config> {
    let lines = LineIndex::new(text);
    let ini = Ini::load_from_str(text).map_err(|e| Error::Config {
        line: e.line,
        key: String::new(),
        reason: e.msg.to_string(),
    })?;

    let known: HashMap<&str, &[&str]> =
        [("system", SYSTEM_KEYS), ("detection", DETECTION_KEYS), ("disorder", DISORDER_KEYS)].into_iter().collect();
    for (section, props) in ini.iter() {
        let Some(section) = section else {
            if let Some((k, _)) = props.iter().next() {
                return Err(lines.error("", k, "key outside of any section"));
            }
            continue;
        };
        if extra_sections.contains(&section) {
            continue;
        }
        let Some(allowed) = known.get(section) else {
            return Err(Error::Config { line: lines.section_line(section), key: String::new(), reason: format!("unknown section [{section}]") });
        };
        for (k, _) in props.iter() {
            if !allowed.contains(&k) {
                return Err(lines.error(section, k, "unknown key"));
            }
        }
    }
    for (section, key) in REQUIRED_KEYS {
        if ini.section(Some(*section)).and_then(|s| s.get(*key)).is_none() {
            return Err(Error::Config { line: 0, key: (*key).into(), reason: format!("missing required key in [{section}]") });
        }
    }
    let sys = ini.section(Some("system"));
    let has_wavelength = sys.is_some_and(|s| s.contains_key("laser_wavelength"));
    let has_index = sys.is_some_and(|s| s.contains_key("mode_index"));
    if !has_wavelength && !has_index {
        return Err(Error::Config {
            line: 0,
            key: "laser_wavelength".into(),
            reason: "missing required key in [system] (or give mode_index)".into(),
        });
    }

    let get = |section: &str, key: &str| -> Option<(&str, usize)> {
        ini.section(Some(section)).and_then(|s| s.get(key)).map(|v| (v, lines.key_line(section, key)))
    };
    let num = |section: &str, key: &str| -> Result<Option<f64>> {
        match get(section, key) {
            None => Ok(None),
            Some((v, line)) => parse_f64(v).map(Some).ok_or_else(|| Error::Config {
                line,
                key: key.into(),
                reason: format!("expected a number, got `{v}`"),
            }),
        }
    };

    let model = match get("system", "model") {
        Some((v, line)) => match v.trim().to_ascii_lowercase().as_str() {
            "cc" | "coupled_cavities" => Model::CoupledCavities,
            "tr" | "transmissive" => Model::Transmissive,
            other => return Err(Error::Config { line, key: "model".into(), reason: format!("expected `cc` or `tr`, got `{other}`") }),
        },
        None => unreachable!("checked above"),
    };
    let mut p = SystemParams::measured_profile(model);

    if let Some(v) = num("system", "cavity_length")? {
        p.cavity_length = v;
        p.disorder_bound = v / 10.0;
    }
    if let Some(v) = num("system", "membrane_mass")? {
        p.membrane_mass = v;
    }
    if let Some(v) = num("system", "mech_freq")? {
        p.mech_freq = v;
    }
    if let Some(v) = num("system", "mech_damping")? {
        p.mech_damping = v;
    }
    if let Some(k) = num("system", "cavity_decay")? {
        p.cavity_decays = [k, k / 100.0, k];
        p.detection_window = 1.0 / k;
    }
    for (j, key) in ["cavity_decay_1", "cavity_decay_2", "cavity_decay_3"].into_iter().enumerate() {
        if let Some(k) = num("system", key)? {
            p.cavity_decays[j] = k;
        }
    }
    match (num("system", "coupling")?, num("system", "single_photon_coupling")?) {
        (Some(_), Some(_)) => {
            return Err(lines.error("system", "single_photon_coupling", "give either coupling or single_photon_coupling, not both"));
        }
        (Some(g), None) => p.coupling = g,
        (None, Some(g0)) => p.coupling = g0 / p.units().x_zpf,
        // Keep the profile's single-photon rate when mass or frequency change.
        (None, None) => {
            let profile = SystemParams::measured_profile(model);
            p.coupling = profile.coupling * profile.units().x_zpf / p.units().x_zpf;
        }
    }
    if let Some(v) = num("system", "hopping")? {
        p.hopping = v;
    }
    if let Some(v) = num("system", "reflectivity")? {
        p.reflectivity = v;
        p.calibration_reflectivity = v;
    }
    if let Some(v) = num("system", "calibration_reflectivity")? {
        p.calibration_reflectivity = v;
    }
    if let Some(v) = num("system", "temperature")? {
        p.temperature = v;
    }
    if let Some(v) = num("system", "laser_power")? {
        p.laser_power = v;
    }
    if let Some((v, line)) = get("system", "mode_index") {
        p.mode_index = v.trim().parse::<u64>().map_err(|_| Error::Config {
            line,
            key: "mode_index".into(),
            reason: format!("expected a positive integer, got `{v}`"),
        })?;
    } else if let Some(lambda) = num("system", "laser_wavelength")? {
        if !(lambda > 0.0) {
            return Err(lines.error("system", "laser_wavelength", "must be positive"));
        }
        p.mode_index = mode_index_for(p.cavity_length, lambda);
    }
    if let Some(v) = num("system", "detuning")? {
        p.detuning = v;
    }
    if let Some((v, line)) = get("system", "tr_detuning_tracks_disorder") {
        p.tr_detuning_tracks_disorder = parse_bool(v).ok_or_else(|| Error::Config {
            line,
            key: "tr_detuning_tracks_disorder".into(),
            reason: format!("expected true/false, got `{v}`"),
        })?;
    }
    if let Some(v) = num("system", "cc_rest_phase")? {
        p.cc_rest_phase = v;
    }

    if let Some(v) = num("detection", "detection_window")? {
        p.detection_window = v;
    }
    if let Some(v) = num("detection", "filter_freq")? {
        p.filter_freq = v;
    }
    if let Some(v) = num("detection", "detector_efficiency")? {
        p.detector_efficiency = v;
    }
    if let Some(v) = num("detection", "lo_phase")? {
        p.lo_phase = v;
    }
    if let Some((v, line)) = get("detection", "output_mode") {
        p.output_mode = match v.trim() {
            "verbatim" => OutputMode::Verbatim,
            "vacuum_consistent" => OutputMode::VacuumConsistent,
            other => {
                return Err(Error::Config {
                    line,
                    key: "output_mode".into(),
                    reason: format!("expected `verbatim` or `vacuum_consistent`, got `{other}`"),
                })
            }
        };
    }

    let mut disorder = Disorder::ZERO;
    if let Some(v) = num("disorder", "dq1")? {
        disorder.dq1 = v;
    }
    if let Some(v) = num("disorder", "dq2")? {
        disorder.dq2 = v;
    }
    if let Some(v) = num("disorder", "disorder_bound")? {
        p.disorder_bound = v;
    }

    p.validate().map_err(|e| match e {
        Error::Param { name, reason } => {
            let line = lines.any_key_line(name);
            Error::Config { line, key: name.into(), reason }
        }
        other => other,
    })?;
    disorder.validate(p.disorder_bound).map_err(|e| Error::Config {
        line: lines.key_line("disorder", "dq1"),
        key: "dq1/dq2".into(),
        reason: e.to_string(),
    })?;
    Ok(Config { params: p, disorder })
}

/// Reads and parses a configuration file.
pub fn load_config(path: &std::path::Path) -> Result<Config> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config { line: 0, key: String::new(), reason: format!("cannot read {}: {e}", path.display()) })?;
    parse_config(&text)
}

/// Renders a configuration back to INI text that [`parse_config`] accepts.
pub fn render_config(params: &SystemParams, disorder: &Disorder) -> String {
    let mut s = String::new();
    s.push_str("[system]\n");
    s.push_str(&format!("model = {}\n", params.model.name()));
    for (k, v) in [
        ("cavity_length", params.cavity_length),
        ("membrane_mass", params.membrane_mass),
        ("mech_freq", params.mech_freq),
        ("mech_damping", params.mech_damping),
        ("cavity_decay_1", params.cavity_decays[0]),
        ("cavity_decay_2", params.cavity_decays[1]),
        ("cavity_decay_3", params.cavity_decays[2]),
        ("coupling", params.coupling),
        ("hopping", params.hopping),
        ("reflectivity", params.reflectivity),
        ("calibration_reflectivity", params.calibration_reflectivity),
        ("temperature", params.temperature),
        ("laser_power", params.laser_power),
        ("detuning", params.detuning),
        ("cc_rest_phase", params.cc_rest_phase),
    ] {
        s.push_str(&format!("{k} = {v:e}\n"));
    }
    s.push_str(&format!("mode_index = {}\n", params.mode_index));
    s.push_str(&format!("tr_detuning_tracks_disorder = {}\n", params.tr_detuning_tracks_disorder));
    s.push_str("\n[detection]\n");
    for (k, v) in [
        ("detection_window", params.detection_window),
        ("filter_freq", params.filter_freq),
        ("detector_efficiency", params.detector_efficiency),
        ("lo_phase", params.lo_phase),
    ] {
        s.push_str(&format!("{k} = {v:e}\n"));
    }
    s.push_str(&format!("output_mode = {}\n", params.output_mode.name()));
    s.push_str("\n[disorder]\n");
    s.push_str(&format!("dq1 = {:e}\ndq2 = {:e}\ndisorder_bound = {:e}\n", disorder.dq1, disorder.dq2, params.disorder_bound));
    s
}

fn parse_f64(v: &str) -> Option<f64> {
    let v = v.trim();
    // Allow `2pi*83e3` style multiples of 2π for angular quantities.
    if let Some(rest) = v.strip_prefix("2pi*") {
        return rest.trim().parse::<f64>().ok().map(|x| 2.0 * std::f64::consts::PI * x);
    }
    match v {
        "pi" => Some(std::f64::consts::PI),
        "pi/2" => Some(std::f64::consts::FRAC_PI_2),
        _ => v.parse::<f64>().ok().filter(|x| x.is_finite()),
    }
}

fn parse_bool(v: &str) -> Option<bool> {
    match v.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Some(true),
        "false" | "no" | "0" | "off" => Some(false),
        _ => None,
    }
}

/// Maps (section, key) pairs back to 1-based source lines for diagnostics.
struct LineIndex {
    keys: HashMap<(String, String), usize>,
    sections: HashMap<String, usize>,
}

impl LineIndex {
    fn new(text: &str) -> Self {
        let mut keys = HashMap::new();
        let mut sections = HashMap::new();
        let mut current = String::new();
        let mut seen = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.starts_with('[') && line.ends_with(']') {
                current = line[1..line.len() - 1].trim().to_string();
                sections.entry(current.clone()).or_insert(i + 1);
            } else if let Some((k, _)) = line.split_once('=') {
                let k = k.trim().to_string();
                if seen.insert((current.clone(), k.clone())) {
                    keys.insert((current.clone(), k), i + 1);
                }
            }
        }
        LineIndex { keys, sections }
    }

    fn key_line(&self, section: &str, key: &str) -> usize {
        self.keys.get(&(section.to_string(), key.to_string())).copied().unwrap_or(0)
    }

    fn any_key_line(&self, key: &str) -> usize {
        self.keys.iter().filter(|((_, k), _)| k == key).map(|(_, &l)| l).min().unwrap_or(0)
    }

    fn section_line(&self, section: &str) -> usize {
        self.sections.get(section).copied().unwrap_or(0)
    }

    fn error(&self, section: &str, key: &str, reason: &str) -> Error {
        Error::Config { line: self.key_line(section, key), key: key.into(), reason: reason.into() }
    }
}
