//! One-dimensional parameter sweeps over a fixed configuration.
//!
//! A sweep file is an ordinary configuration with an extra `[sweep]` section:
//!
//! ```ini
//! [sweep]
//! variable = omega_l        ; omega_l (units of ω_m), theta, dq1, dq2, temperature, reflectivity, efficiency
//! start = -2
//! stop = 2
//! points = 201
//! spacing = linear          ; or log
//! outputs = h, f, d, h_inv, f_pinv, nbar, omega_c, stability
//! ```

use std::str::FromStr;

use ini::Ini;
use optomech::config::{parse_config_with, Config};
use optomech::inference::InfoMatrices;
use optomech::models::{cc::cc_frequency_shifts, tr::tr_frequency_shift};
use optomech::{Disorder, Error, Evaluation, Model, Result, SystemParams};
use rayon::prelude::*;
use serde::Serialize;

use crate::table::{Cell, Table};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Variable {
    /// Filter centre frequency in units of ω_m.
    OmegaL,
    Theta,
    Dq1,
    Dq2,
    Temperature,
    Reflectivity,
    Efficiency,
}

impl Variable {
    pub fn column(self) -> &'static str {
        match self {
            Variable::OmegaL => "omega_l_over_omega_m",
            Variable::Theta => "theta",
            Variable::Dq1 => "dq1",
            Variable::Dq2 => "dq2",
            Variable::Temperature => "temperature",
            Variable::Reflectivity => "reflectivity",
            Variable::Efficiency => "eta",
        }
    }

    /// Variables that leave the cavity state unchanged, so one evaluation
    /// serves the whole sweep.
    fn detection_only(self) -> bool {
        matches!(self, Variable::OmegaL | Variable::Theta | Variable::Efficiency)
    }
}

impl FromStr for Variable {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "omega_l" | "filter_freq" => Variable::OmegaL,
            "theta" | "lo_phase" => Variable::Theta,
            "dq1" => Variable::Dq1,
            "dq2" => Variable::Dq2,
            "temperature" | "t" => Variable::Temperature,
            "reflectivity" | "r" => Variable::Reflectivity,
            "efficiency" | "eta" => Variable::Efficiency,
            other => return Err(format!("unknown sweep variable `{other}`")),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Output {
    H,
    F,
    D,
    HInv,
    FPinv,
    Nbar,
    OmegaC,
    Stability,
}

impl FromStr for Output {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "h" => Output::H,
            "f" => Output::F,
            "d" => Output::D,
            "h_inv" => Output::HInv,
            "f_pinv" => Output::FPinv,
            "nbar" => Output::Nbar,
            "omega_c" => Output::OmegaC,
            "stability" => Output::Stability,
            other => return Err(format!("unknown output `{other}`")),
        })
    }
}

impl Output {
    pub const ALL: [Output; 8] =
        [Output::H, Output::F, Output::D, Output::HInv, Output::FPinv, Output::Nbar, Output::OmegaC, Output::Stability];

    fn columns(self) -> &'static [&'static str] {
        match self {
            Output::H => &["h_11", "h_12", "h_22"],
            Output::F => &["f_11", "f_12", "f_22"],
            Output::D => &["d"],
            Output::HInv => &["h_inv_11", "h_inv_12", "h_inv_22", "rank_h"],
            Output::FPinv => &["f_pinv_11", "f_pinv_22", "f_single_11", "f_single_22", "rank_f"],
            Output::Nbar => &["nbar"],
            Output::OmegaC => &["omega_c_shift"],
            // Always present.
            Output::Stability => &[],
        }
    }
}

/// A validated one-dimensional sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSpec {
    pub params: SystemParams,
    pub disorder: Disorder,
    pub variable: Variable,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub spacing: Spacing,
    pub outputs: Vec<Output>,
}

fn config_error(key: &str, reason: impl Into<String>) -> Error {
    Error::Config { line: 0, key: key.into(), reason: reason.into() }
}

impl SweepSpec {
    pub fn new(config: &Config, variable: Variable, start: f64, stop: f64, points: usize, spacing: Spacing) -> Result<Self> {
        let spec = SweepSpec {
            params: config.params.clone(),
            disorder: config.disorder,
            variable,
            start,
            stop,
            points,
            spacing,
            outputs: Output::ALL.to_vec(),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Parses a configuration with a `[sweep]` section.
    pub fn parse(text: &str) -> Result<Self> {
        let config = parse_config_with(text, &["sweep"])?;
        let ini = Ini::load_from_str(text).map_err(|e| config_error("", e.to_string()))?;
        let sec = ini.section(Some("sweep")).ok_or_else(|| config_error("sweep", "missing [sweep] section"))?;
        for (k, _) in sec.iter() {
            if !["variable", "start", "stop", "points", "spacing", "outputs"].contains(&k) {
                return Err(config_error(k, "unknown key in [sweep]"));
            }
        }
        let get = |k: &str| sec.get(k).ok_or_else(|| config_error(k, "missing required key in [sweep]"));
        let num = |k: &str| -> Result<f64> {
            let v = get(k)?;
            v.trim().parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| config_error(k, format!("expected a number, got `{v}`")))
        };
        let variable = get("variable")?.parse::<Variable>().map_err(|e| config_error("variable", e))?;
        let points_text = get("points")?;
        let points = points_text.trim().parse::<usize>().map_err(|_| config_error("points", format!("expected an integer, got `{points_text}`")))?;
        let spacing = match sec.get("spacing").map(|s| s.trim().to_ascii_lowercase()) {
            None => Spacing::Linear,
            Some(s) if s == "linear" => Spacing::Linear,
            Some(s) if s == "log" => Spacing::Log,
            Some(s) => return Err(config_error("spacing", format!("expected `linear` or `log`, got `{s}`"))),
        };
        let outputs = match sec.get("outputs") {
            None => Output::ALL.to_vec(),
            Some(list) => list
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.parse::<Output>().map_err(|e| config_error("outputs", e)))
                .collect::<Result<Vec<_>>>()?,
        };
        let spec = SweepSpec { params: config.params, disorder: config.disorder, variable, start: num("start")?, stop: num("stop")?, points, spacing, outputs };
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config_error("", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn grid(&self) -> Vec<f64> {
        let n = self.points;
        (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                match self.spacing {
                    Spacing::Linear => {
                        // Symmetric grids hit zero exactly.
                        if 2 * i + 1 == n && self.start == -self.stop {
                            0.0
                        } else {
                            self.start + (self.stop - self.start) * t
                        }
                    }
                    Spacing::Log => (self.start.ln() + (self.stop.ln() - self.start.ln()) * t).exp(),
                }
            })
            .collect()
    }

    /// Parameters, disorder, LO phase and efficiency at one grid value.
    pub fn point(&self, value: f64) -> (SystemParams, Disorder, f64, f64) {
        let mut p = self.params.clone();
        let mut d = self.disorder;
        match self.variable {
            Variable::OmegaL => p.filter_freq = value * p.mech_freq,
            Variable::Theta => p.lo_phase = value,
            Variable::Dq1 => d.dq1 = value,
            Variable::Dq2 => d.dq2 = value,
            Variable::Temperature => p.temperature = value,
            Variable::Reflectivity => p.reflectivity = value,
            Variable::Efficiency => p.detector_efficiency = value,
        }
        let (theta, eta) = (p.lo_phase, p.detector_efficiency);
        (p, d, theta, eta)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points < 2 {
            return Err(config_error("points", format!("need at least 2 points, got {}", self.points)));
        }
        if self.spacing == Spacing::Log && !(self.start > 0.0 && self.stop > 0.0) {
            return Err(config_error("spacing", "log spacing needs positive start and stop"));
        }
        for v in self.grid() {
            let (p, d, _, _) = self.point(v);
            p.validate().map_err(|e| config_error(self.variable.column(), format!("value {v:e} is outside the valid range: {e}")))?;
            d.validate(p.disorder_bound).map_err(|e| config_error(self.variable.column(), format!("value {v:e}: {e}")))?;
        }
        Ok(())
    }

    pub fn columns(&self) -> Vec<String> {
        let mut c = vec!["index".to_string(), self.variable.column().to_string()];
        if self.variable == Variable::OmegaL {
            c.push("filter_freq".into());
        }
        c.extend(["stable", "max_real", "output_mode", "psd_ok"].map(String::from));
        for o in Output::ALL {
            if self.outputs.contains(&o) {
                c.extend(o.columns().iter().map(|s| s.to_string()));
            }
        }
        c
    }
}

/// Everything computed at one grid point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointResult {
    pub value: f64,
    pub stable: bool,
    /// Largest real part of the dynamical matrix eigenvalues.
    pub max_real: f64,
    pub info: Option<InfoMatrices>,
    pub nbar: Option<f64>,
    /// Mode-frequency shift from nπc/L (rad/s); the detected cavity for CC.
    pub omega_c_shift: f64,
}

fn omega_c_shift(p: &SystemParams, d: &Disorder) -> f64 {
    match p.model {
        Model::Transmissive => tr_frequency_shift(p, d, p.reflectivity),
        Model::CoupledCavities => cc_frequency_shifts(p, d)[2],
    }
}

fn at_point(e: Error, index: usize, column: &str, value: f64) -> Error {
    let place = format!("grid point {index} ({column} = {value:e})");
    match e {
        Error::Solver { what, residual } => Error::Solver { what: format!("{place}: {what}"), residual },
        Error::Bistable { roots } => Error::Solver { what: format!("{place}: bistable steady state with roots {roots:?}"), residual: f64::NAN },
        other => Error::Domain(format!("{place}: {other}")),
    }
}

fn evaluate(spec: &SweepSpec, value: f64, shared: Option<&std::result::Result<Evaluation, f64>>) -> Result<PointResult> {
    let (p, d, theta, eta) = spec.point(value);
    let fresh;
    let eval = match shared {
        Some(e) => e,
        None => {
            fresh = cavity(&p, &d)?;
            &fresh
        }
    };
    let omega_c_shift = omega_c_shift(&p, &d);
    match eval {
        Err(max_real) => Ok(PointResult { value, stable: false, max_real: *max_real, info: None, nbar: None, omega_c_shift }),
        Ok(e) => {
            let info = e.output(p.filter_freq)?.info(theta, eta)?;
            Ok(PointResult {
                value,
                stable: true,
                max_real: e.max_real(),
                info: Some(info),
                nbar: Some(e.cavity.steady.output_photon_number()),
                omega_c_shift,
            })
        }
    }
}

/// Cavity evaluation, with instability as `Err(max_real)` rather than an error.
fn cavity(p: &SystemParams, d: &Disorder) -> Result<std::result::Result<Evaluation, f64>> {
    match Evaluation::new(p, d) {
        Ok(e) => Ok(Ok(e)),
        Err(Error::Unstable { max_real, .. }) => Ok(Err(max_real)),
        Err(e) => Err(e),
    }
}

/// Evaluates every grid point. Points run in parallel and are returned in grid
/// order; the first failing point in grid order aborts the sweep. With
/// `strict`, a point violating H ⪰ F also aborts.
pub fn run_points(spec: &SweepSpec, strict: bool) -> Result<Vec<PointResult>> {
    spec.validate()?;
    let grid = spec.grid();
    let column = spec.variable.column();
    let shared = if spec.variable.detection_only() {
        let (p, d, _, _) = spec.point(grid[0]);
        Some(cavity(&p, &d).map_err(|e| at_point(e, 0, column, grid[0]))?)
    } else {
        None
    };
    let results: Vec<Result<PointResult>> =
        grid.par_iter().enumerate().map(|(i, &v)| evaluate(spec, v, shared.as_ref()).map_err(|e| at_point(e, i, column, v))).collect();
    let mut out = Vec::with_capacity(results.len());
    for (i, r) in results.into_iter().enumerate() {
        let r = r?;
        if strict {
            if let Some(info) = &r.info {
                if !info.psd_ok() {
                    return Err(Error::Domain(format!(
                        "grid point {i} ({column} = {:e}): H − F has eigenvalue {:e} below −1e-8·‖H‖",
                        r.value, info.psd_margin
                    )));
                }
            }
        }
        out.push(r);
    }
    Ok(out)
}

/// Runs the sweep and lays the results out as a table.
pub fn run_sweep(spec: &SweepSpec, strict: bool) -> Result<Table> {
    let points = run_points(spec, strict)?;
    let mut table = Table::new(spec.columns());
    for (i, r) in points.iter().enumerate() {
        table.rows.push(row(spec, i, r));
    }
    Ok(table)
}

fn row(spec: &SweepSpec, index: usize, r: &PointResult) -> Vec<Cell> {
    let mut cells = vec![Cell::Int(index as i64), Cell::Float(r.value)];
    if spec.variable == Variable::OmegaL {
        cells.push(Cell::Float(r.value * spec.params.mech_freq));
    }
    cells.push(Cell::Bool(r.stable));
    cells.push(Cell::Float(r.max_real));
    cells.push(Cell::Text(spec.params.output_mode.name().into()));
    cells.push(r.info.as_ref().map_or(Cell::Empty, |i| Cell::Bool(i.psd_ok())));
    let info = r.info.as_ref();
    let f = |get: &dyn Fn(&InfoMatrices) -> f64| info.map_or(Cell::Empty, |i| Cell::Float(get(i)));
    let n = |get: &dyn Fn(&InfoMatrices) -> usize| info.map_or(Cell::Empty, |i| Cell::Int(get(i) as i64));
    for o in Output::ALL {
        if !spec.outputs.contains(&o) {
            continue;
        }
        match o {
            Output::H => cells.extend([f(&|i| i.h[(0, 0)]), f(&|i| i.h[(0, 1)]), f(&|i| i.h[(1, 1)])]),
            Output::F => cells.extend([f(&|i| i.f[(0, 0)]), f(&|i| i.f[(0, 1)]), f(&|i| i.f[(1, 1)])]),
            Output::D => cells.push(f(&|i| i.d)),
            Output::HInv => cells.extend([f(&|i| i.h_inv[(0, 0)]), f(&|i| i.h_inv[(0, 1)]), f(&|i| i.h_inv[(1, 1)]), n(&|i| i.rank_h)]),
            Output::FPinv => cells.extend([
                f(&|i| i.f_pinv[(0, 0)]),
                f(&|i| i.f_pinv[(1, 1)]),
                f(&|i| i.f_single[0]),
                f(&|i| i.f_single[1]),
                n(&|i| i.rank_f),
            ]),
            Output::Nbar => cells.push(r.nbar.into()),
            Output::OmegaC => cells.push(Cell::Float(r.omega_c_shift)),
            Output::Stability => {}
        }
    }
    cells
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "[system]\nmodel = tr\ncavity_length = 0.09\nlaser_wavelength = 1064e-9\ndetuning = 0\n[disorder]\ndq1 = 5e-7\n";

    fn spec(sweep: &str) -> Result<SweepSpec> {
        SweepSpec::parse(&format!("{BASE}[sweep]\n{sweep}"))
    }

    #[test]
    fn symmetric_linear_grid_contains_zero() {
        let s = spec("variable = omega_l\nstart = -2\nstop = 2\npoints = 5\n").unwrap();
        assert_eq!(s.grid(), vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
    }

    #[test]
    fn log_grid_hits_endpoints() {
        let s = spec("variable = temperature\nstart = 1\nstop = 1000\npoints = 4\nspacing = log\n").unwrap();
        let g = s.grid();
        assert!((g[0] - 1.0).abs() < 1e-12 && (g[3] - 1000.0).abs() < 1e-9 && (g[1] - 10.0).abs() < 1e-9);
    }

    #[test]
    fn invalid_specs_are_config_errors() {
        for bad in [
            "variable = omega_l\nstart = 0\nstop = 1\npoints = 1\n",
            "variable = colour\nstart = 0\nstop = 1\npoints = 3\n",
            "variable = temperature\nstart = 0\nstop = 10\npoints = 3\nspacing = log\n",
            "variable = efficiency\nstart = 0.5\nstop = 1.5\npoints = 3\n",
            "variable = reflectivity\nstart = 0.5\nstop = 1.0\npoints = 3\n",
            "variable = dq1\nstart = 0\nstop = 1\npoints = 3\n",
            "variable = theta\nstart = 0\npoints = 3\n",
            "variable = theta\nstart = 0\nstop = 1\npoints = 3\noutputs = h, colour\n",
        ] {
            assert!(matches!(spec(bad), Err(Error::Config { .. })), "{bad}");
        }
    }

    #[test]
    fn theta_sweep_rows_follow_requested_outputs() {
        let s = spec("variable = theta\nstart = 0\nstop = 3\npoints = 4\noutputs = d, nbar\n").unwrap();
        let t = run_sweep(&s, false).unwrap();
        assert_eq!(t.columns, vec!["index", "theta", "stable", "max_real", "output_mode", "psd_ok", "d", "nbar"]);
        assert_eq!(t.rows.len(), 4);
        assert!(t.rows.iter().all(|r| r[2] == Cell::Bool(true)));
        let nbar = t.floats("nbar").unwrap();
        assert!(nbar.iter().all(|&n| n == nbar[0] && n > 0.0));
    }

    #[test]
    fn order_of_evaluation_does_not_matter() {
        let s = spec("variable = dq1\nstart = 0\nstop = 1e-6\npoints = 6\noutputs = d, h_inv\n").unwrap();
        let a = run_sweep(&s, false).unwrap();
        let mut rev = s.clone();
        (rev.start, rev.stop) = (s.stop, s.start);
        let mut b = run_sweep(&rev, false).unwrap();
        b.rows.reverse();
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert_eq!(ra[1..], rb[1..]);
        }
    }
}
