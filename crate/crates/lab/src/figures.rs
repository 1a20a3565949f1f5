//! Figure data: each figure is a fixed sweep over a user configuration, written
//! as CSV plus a JSON manifest.

use std::path::{Path, PathBuf};

use optomech::config::Config;
use optomech::{Error, Model, Result};
use serde_json::json;

use crate::sweep::{run_sweep, Output, Spacing, SweepSpec, Variable};
use crate::table::{Cell, Table};
use crate::{code_version, io_error};

pub const FIGURE_IDS: [&str; 10] = ["fig2a", "fig2b", "fig3a", "fig3b", "fig4a", "fig4b", "fig5a", "fig5b", "fig6a", "fig6b"];

/// Fixed grid and columns of one figure.
#[derive(Clone, Debug, PartialEq)]
pub struct FigureDef {
    pub id: &'static str,
    pub model: Model,
    pub variable: Variable,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub spacing: Spacing,
    pub outputs: Vec<Output>,
    /// Plotted columns after the abscissa.
    pub curves: Vec<&'static str>,
}

pub fn figure_def(id: &str) -> Result<FigureDef> {
    use Output::*;
    let (cc, tr) = (Model::CoupledCavities, Model::Transmissive);
    let omega = |id, model, outputs: Vec<Output>, curves| FigureDef {
        id,
        model,
        variable: Variable::OmegaL,
        start: -2.0,
        stop: 2.0,
        points: 201,
        spacing: Spacing::Linear,
        outputs,
        curves,
    };
    let bounds = vec!["h_inv_11", "h_inv_22", "f_pinv_11", "f_pinv_22", "f_single_11", "f_single_22"];
    let temperature = |id, model| FigureDef {
        id,
        model,
        variable: Variable::Temperature,
        start: 1.0,
        stop: 1000.0,
        points: 60,
        spacing: Spacing::Log,
        outputs: vec![D, HInv, FPinv],
        curves: vec!["h_inv_11", "h_inv_12", "h_inv_22", "d", "f_pinv_11", "f_pinv_22"],
    };
    let disorder = |id, outputs, curves| FigureDef {
        id,
        model: tr,
        variable: Variable::Dq1,
        start: 0.0,
        stop: 2e-6,
        points: 401,
        spacing: Spacing::Linear,
        outputs,
        curves,
    };
    let reflectivity = |id, outputs, curves| FigureDef {
        id,
        model: tr,
        variable: Variable::Reflectivity,
        start: 0.01,
        stop: 0.99,
        points: 60,
        spacing: Spacing::Log,
        outputs,
        curves,
    };
    Ok(match id {
        "fig2a" => omega("fig2a", cc, vec![HInv, FPinv], bounds),
        "fig2b" => omega("fig2b", tr, vec![HInv, FPinv], bounds),
        "fig3a" => omega("fig3a", cc, vec![H, F, D], vec!["d"]),
        "fig3b" => omega("fig3b", tr, vec![H, F, D], vec!["d"]),
        "fig4a" => disorder("fig4a", vec![D, HInv, OmegaC], vec!["d", "omega_c_shift", "h_inv_11", "h_inv_22"]),
        "fig4b" => disorder("fig4b", vec![OmegaC], vec!["omega_c", "omega_c_shift", "omega_c_bare"]),
        "fig5a" => temperature("fig5a", cc),
        "fig5b" => temperature("fig5b", tr),
        "fig6a" => reflectivity("fig6a", vec![HInv, Nbar], vec!["h_inv_11", "h_inv_22", "nbar"]),
        "fig6b" => reflectivity("fig6b", vec![Nbar], vec!["nbar"]),
        other => {
            return Err(Error::Config {
                line: 0,
                key: "figure".into(),
                reason: format!("unknown figure `{other}`; expected one of {}", FIGURE_IDS.join(", ")),
            })
        }
    })
}

impl FigureDef {
    pub fn spec(&self, config: &Config) -> Result<SweepSpec> {
        if config.params.model != self.model {
            return Err(Error::Config {
                line: 0,
                key: "model".into(),
                reason: format!("{} needs model = {}, the config has {}", self.id, self.model.name(), config.params.model.name()),
            });
        }
        let mut spec = SweepSpec::new(config, self.variable, self.start, self.stop, self.points, self.spacing)?;
        spec.outputs = self.outputs.clone();
        Ok(spec)
    }
}

/// Computes the figure table and its manifest.
pub fn reproduce_figure(id: &str, config: &Config) -> Result<(Table, serde_json::Value)> {
    let def = figure_def(id)?;
    let spec = def.spec(config)?;
    let mut table = run_sweep(&spec, false)?;
    if def.curves.contains(&"omega_c") {
        add_mode_frequencies(&mut table, config);
    }
    let p = &config.params;
    let manifest = json!({
        "id": def.id,
        "model": def.model.name(),
        "variable": spec.variable.column(),
        "grid": { "start": spec.start, "stop": spec.stop, "points": spec.points, "spacing": spec.spacing },
        "abscissa": spec.variable.column(),
        "curves": def.curves,
        "columns": table.columns,
        "rows": table.rows.len(),
        "params": p,
        "disorder": config.disorder,
        "lo_phase": p.lo_phase,
        "detector_efficiency": p.detector_efficiency,
        "output_mode": p.output_mode.name(),
        "seed": null,
        "code_version": code_version(),
    });
    Ok((table, manifest))
}

/// Appends absolute and bare (nπc/L) mode frequencies to a table with an
/// `omega_c_shift` column.
fn add_mode_frequencies(table: &mut Table, config: &Config) {
    let p = &config.params;
    let bare = p.cavity_freq();
    let shifts = table.floats("omega_c_shift").expect("omega_c_shift column");
    table.columns.push("omega_c".into());
    table.columns.push("omega_c_bare".into());
    for (row, shift) in table.rows.iter_mut().zip(shifts) {
        row.push(Cell::Float(bare + shift));
        row.push(Cell::Float(bare));
    }
}

/// Writes `<id>.csv` and `<id>.json` into `out_dir`.
pub fn write_figure(id: &str, config: &Config, out_dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let (table, mut manifest) = reproduce_figure(id, config)?;
    std::fs::create_dir_all(out_dir).map_err(|e| io_error(out_dir, e))?;
    let csv = out_dir.join(format!("{id}.csv"));
    let json_path = out_dir.join(format!("{id}.json"));
    table.save(&csv)?;
    manifest["csv"] = json!(format!("{id}.csv"));
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Input(e.to_string()))?;
    std::fs::write(&json_path, text + "\n").map_err(|e| io_error(&json_path, e))?;
    Ok((csv, json_path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_id_resolves() {
        for id in FIGURE_IDS {
            let def = figure_def(id).unwrap();
            assert_eq!(def.id, id);
            assert!(def.points >= 2);
        }
        assert!(matches!(figure_def("fig7"), Err(Error::Config { .. })));
    }

    #[test]
    fn part_letters_pick_the_model() {
        assert_eq!(figure_def("fig2a").unwrap().model, Model::CoupledCavities);
        assert_eq!(figure_def("fig3b").unwrap().model, Model::Transmissive);
        assert_eq!(figure_def("fig6a").unwrap().model, Model::Transmissive);
    }
}
