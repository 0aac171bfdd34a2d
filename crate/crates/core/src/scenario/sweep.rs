use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use super::config::{ControllerKind, ScenarioConfig, SizePreset};
use super::run::{run_scenario, write_run_outputs, RunOutput};
use crate::metrics::{MetricsError, ResiliencyReport};
use crate::plant::HouseModel;

pub const DEFAULT_HORIZONS_H: [f64; 5] = [1.0, 3.0, 6.0, 12.0, 24.0];
pub const DEFAULT_BUDGETS_H: [f64; 6] = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];

/// One configured point of a sweep.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub sweep: &'static str,
    pub size: String,
    pub horizon_h: f64,
    pub fast_charge_h: f64,
    pub house: String,
    pub cfg: ScenarioConfig,
}

impl SweepCell {
    fn from_cfg(sweep: &'static str, cfg: ScenarioConfig) -> Self {
        let horizon = match cfg.controller {
            ControllerKind::Mpc => cfg.mpc.n_steps as f64 * cfg.dt_hours,
            ControllerKind::RuleBased => cfg.rule_based.n_steps as f64 * cfg.dt_hours,
            ControllerKind::Baseline => 0.0,
        };
        Self {
            sweep,
            size: cfg
                .size
                .map(|s| s.label().to_string())
                .unwrap_or_else(|| "custom".into()),
            horizon_h: horizon,
            fast_charge_h: cfg.rule_based.fast_charge_budget_hours,
            house: cfg.house.label().to_string(),
            cfg,
        }
    }

    /// Directory-safe identifier.
    pub fn id(&self) -> String {
        format!(
            "{}_{}_{}_h{}_fc{}_{}",
            self.sweep, self.size, self.cfg.controller, self.horizon_h, self.fast_charge_h, self.house
        )
    }
}

/// Outcome of one cell; failed cells keep their row with the error text.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub cell: SweepCell,
    pub result: Result<ResiliencyReport, String>,
}

pub fn size_cells(base: &ScenarioConfig, presets: &[SizePreset], controllers: &[ControllerKind]) -> Vec<SweepCell> {
    presets
        .iter()
        .flat_map(|&p| {
            controllers.iter().map(move |&c| {
                let cfg = ScenarioConfig {
                    size: Some(p),
                    controller: c,
                    ..base.clone()
                };
                SweepCell::from_cfg("size", cfg)
            })
        })
        .collect()
}

/// Horizons that are not a whole number of steps are rounded to the nearest
/// step count (at least one).
pub fn horizon_cells(base: &ScenarioConfig, horizons_h: &[f64], controllers: &[ControllerKind]) -> Vec<SweepCell> {
    horizons_h
        .iter()
        .flat_map(|&h| {
            controllers.iter().map(move |&c| {
                let n = ((h / base.dt_hours).round() as usize).max(1);
                let cfg = ScenarioConfig {
                    controller: c,
                    ..base.clone().with_horizon_steps(n)
                };
                SweepCell::from_cfg("horizon", cfg)
            })
        })
        .collect()
}

pub fn fast_charge_cells(base: &ScenarioConfig, budgets_h: &[f64]) -> Vec<SweepCell> {
    budgets_h
        .iter()
        .map(|&b| {
            let mut cfg = ScenarioConfig {
                controller: ControllerKind::RuleBased,
                ..base.clone()
            };
            cfg.rule_based.fast_charge_budget_hours = b;
            SweepCell::from_cfg("fast_charge", cfg)
        })
        .collect()
}

pub fn house_cells(base: &ScenarioConfig, models: &[HouseModel], controllers: &[ControllerKind]) -> Vec<SweepCell> {
    models
        .iter()
        .flat_map(|m| {
            controllers.iter().map(move |&c| {
                let cfg = ScenarioConfig {
                    controller: c,
                    house: m.clone(),
                    ..base.clone()
                };
                SweepCell::from_cfg("house", cfg)
            })
        })
        .collect()
}

/// Runs every cell (in parallel) and returns rows in cell order. With
/// `out_dir`, each cell writes its own outputs into `<out_dir>/<cell id>/`.
pub fn run_cells(cells: Vec<SweepCell>, out_dir: Option<&Path>) -> Vec<SweepRow> {
    cells
        .into_par_iter()
        .map(|cell| {
            let result = run_scenario(&cell.cfg)
                .map_err(|e| e.to_string())
                .and_then(|out: RunOutput| {
                    if let Some(dir) = out_dir {
                        write_run_outputs(&out, &dir.join(cell.id()), cell.cfg.trace_timing)
                            .map_err(|e| e.to_string())?;
                    }
                    Ok(out.report)
                });
            SweepRow { cell, result }
        })
        .collect()
}

pub fn sweep_sizes(base: &ScenarioConfig, presets: &[SizePreset], controllers: &[ControllerKind]) -> Vec<SweepRow> {
    run_cells(size_cells(base, presets, controllers), None)
}

pub fn sweep_horizon(base: &ScenarioConfig, horizons_h: &[f64], controllers: &[ControllerKind]) -> Vec<SweepRow> {
    run_cells(horizon_cells(base, horizons_h, controllers), None)
}

pub fn sweep_fast_charge(base: &ScenarioConfig, budgets_h: &[f64]) -> Vec<SweepRow> {
    run_cells(fast_charge_cells(base, budgets_h), None)
}

pub fn compare_house_models(base: &ScenarioConfig, models: &[HouseModel]) -> Vec<SweepRow> {
    run_cells(house_cells(base, models, &[base.controller]), None)
}

pub const SWEEP_PARAM_COLUMNS: [&str; 6] = ["sweep", "size", "controller", "horizon_h", "fast_charge_h", "house"];

/// One row per cell; failed cells have empty metric columns and an `error`.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = SWEEP_PARAM_COLUMNS.to_vec();
    header.extend(ResiliencyReport::CSV_HEADER.iter().skip(1));
    header.push("error");
    w.write_record(&header)?;
    for r in rows {
        let c = &r.cell;
        let mut rec = vec![
            c.sweep.to_string(),
            c.size.clone(),
            c.cfg.controller.to_string(),
            c.horizon_h.to_string(),
            c.fast_charge_h.to_string(),
            c.house.clone(),
        ];
        match &r.result {
            Ok(rep) => {
                rec.extend(rep.csv_fields().into_iter().skip(1));
                rec.push(String::new());
            }
            Err(e) => {
                rec.extend(std::iter::repeat_n(
                    String::new(),
                    ResiliencyReport::CSV_HEADER.len() - 1,
                ));
                rec.push(e.clone());
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> ScenarioConfig {
        ScenarioConfig {
            duration_days: 1.0 / 12.0,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn size_product_count() {
        let cells = size_cells(&quick(), &SizePreset::ALL, &ControllerKind::ALL);
        assert_eq!(cells.len(), 18);
        assert_eq!(cells[0].size, "A");
        assert_eq!(cells[17].size, "F");
    }

    #[test]
    fn horizon_steps_rounded() {
        let cells = horizon_cells(&quick(), &DEFAULT_HORIZONS_H, &[ControllerKind::RuleBased]);
        let n: Vec<usize> = cells.iter().map(|c| c.cfg.rule_based.n_steps).collect();
        assert_eq!(n, [6, 18, 36, 72, 144]);
    }

    #[test]
    fn failed_cells_are_kept() {
        let mut bad = quick();
        bad.initial_t_fr = f64::NAN;
        let mut cells = fast_charge_cells(&quick(), &[1.0, 2.0]);
        cells.extend(fast_charge_cells(&bad, &[3.0]));
        let rows = run_cells(cells, None);
        assert_eq!(rows.len(), 3);
        assert!(rows[0].result.is_ok() && rows[1].result.is_ok());
        assert!(rows[2].result.is_err());
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.lines().last().unwrap().contains("initial_t_fr"));
    }
}
