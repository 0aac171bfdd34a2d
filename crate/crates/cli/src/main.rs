mod args;
mod validate;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use pvguard_core::plant::HouseModel;
use pvguard_core::scenario::{
    build_secondary_profile, fast_charge_cells, horizon_cells, house_cells, run_cells, run_with_inputs, size_cells,
    write_gnuplot, write_run_outputs, write_sweep_csv, RunOptions, ScenarioConfig, SweepCell, SweepRow,
    DEFAULT_BUDGETS_H, DEFAULT_HORIZONS_H,
};
use pvguard_core::weather::{build_historical_profile, parse_weather_csv, synthetic, CsvSchema};

use args::{parse_controllers, parse_hours, parse_sizes, ScenarioArgs};

#[derive(Debug, Parser)]
#[command(
    name = "pvguard",
    version,
    about = "Off-grid PV + battery home energy management under outages"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one closed-loop scenario.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Write every MPC problem as an LP file into this directory.
        #[arg(long, value_name = "DIR")]
        dump_lp: Option<PathBuf>,
        /// Also write `trace.dat` for plotting.
        #[arg(long)]
        gnuplot: bool,
    },
    /// PRM/SRM over system sizes A-F.
    SweepSizes {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value = "A,B,C,D,E,F")]
        sizes: String,
        #[arg(long, default_value = "mpc,baseline,rule_based")]
        controllers: String,
        /// Keep each cell's trace and report under `<out>/cells/`.
        #[arg(long)]
        cell_outputs: bool,
    },
    /// PRM/SRM and solver statistics over planning horizons.
    SweepHorizon {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Horizons in hours.
        #[arg(long, default_value = "1,3,6,12,24")]
        horizons: String,
        #[arg(long, default_value = "mpc,rule_based")]
        controllers: String,
        #[arg(long)]
        cell_outputs: bool,
    },
    /// Rule-Based PRM/SRM over daily fast-charge allowances.
    SweepFastcharge {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Allowances in hours per day.
        #[arg(long, default_value = "1,2,3,4,5,6")]
        budgets: String,
        #[arg(long)]
        cell_outputs: bool,
    },
    /// Trace-driven vs first-order RC house model.
    CompareHouseModels {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        cell_outputs: bool,
    },
    /// Check the embedded solver against enumeration and LP duality.
    ValidateSolver {
        #[arg(long, default_value_t = 500)]
        milp_instances: usize,
        #[arg(long, default_value_t = 200)]
        lp_instances: usize,
        #[arg(long, default_value_t = 10)]
        max_binaries: usize,
        #[arg(long, default_value_t = 20)]
        max_continuous: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Generate input profiles.
    GenProfile {
        #[command(subcommand)]
        what: GenProfile,
    },
}

#[derive(Debug, Subcommand)]
enum GenProfile {
    /// Desired secondary-load energy per step, as `ts,e_s_wh`.
    Secondary {
        #[arg(long, default_value_t = 7.0)]
        days: f64,
        #[arg(long, default_value_t = 10.0)]
        dt_minutes: f64,
        /// Defaults to the synthetic scenario start.
        #[arg(long)]
        start: Option<String>,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Day-of-year temperature profiles (`day_NNN.csv`) from a weather CSV,
    /// or the synthetic diurnal shape when no input is given.
    Historical {
        #[arg(long, value_name = "FILE")]
        from: Option<PathBuf>,
        #[arg(long)]
        nsrdb: bool,
        #[arg(long, default_value_t = 10.0)]
        dt_minutes: f64,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// The bundled storm-week weather as a `ts,ghi,temp` CSV.
    SyntheticWeather {
        #[arg(long, default_value_t = 8.0)]
        days: f64,
        #[arg(long, default_value_t = 10)]
        cadence_minutes: u32,
        #[arg(long)]
        start: Option<String>,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            Box::new(BufWriter::new(
                File::create(p).with_context(|| format!("creating {}", p.display()))?,
            ))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn start_or_default(s: &Option<String>) -> Result<chrono::NaiveDateTime> {
    match s {
        Some(s) => pvguard_core::weather::parse_timestamp(s).with_context(|| format!("unrecognised start time `{s}`")),
        None => Ok(synthetic::default_start()),
    }
}

fn cmd_run(cfg: &ScenarioConfig, dump_lp: Option<PathBuf>, gnuplot: bool) -> Result<()> {
    let inputs = cfg.resolve_inputs()?;
    let out = run_with_inputs(cfg, &inputs, &RunOptions { dump_lp })?;
    if let Some(dir) = &cfg.output_dir {
        write_run_outputs(&out, dir, cfg.trace_timing)?;
        std::fs::write(dir.join("config.toml"), cfg.to_toml()?)
            .with_context(|| format!("writing {}", dir.display()))?;
        if gnuplot {
            write_gnuplot(&out.trace, &dir.join("trace.dat"))?;
        }
    } else if gnuplot {
        bail!("--gnuplot needs --out");
    }
    print!("{}", out.report.to_key_value());
    Ok(())
}

fn print_rows(rows: &[SweepRow]) {
    for r in rows {
        let c = &r.cell;
        match &r.result {
            Ok(rep) => println!(
                "{:<11} size={:<6} controller={:<10} horizon_h={:<5} fast_charge_h={:<4} house={:<16} prm={:.3} srm={} success={:.1}%",
                c.sweep,
                c.size,
                c.cfg.controller,
                c.horizon_h,
                c.fast_charge_h,
                c.house,
                rep.prm,
                rep.srm.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into()),
                rep.solver_success_pct
            ),
            Err(e) => println!("{:<11} size={:<6} controller={:<10} FAILED: {e}", c.sweep, c.size, c.cfg.controller),
        }
    }
}

fn cmd_sweep(cfg: &ScenarioConfig, name: &str, cells: Vec<SweepCell>, cell_outputs: bool) -> Result<()> {
    let cell_dir = cfg
        .output_dir
        .as_ref()
        .filter(|_| cell_outputs)
        .map(|d| d.join("cells"));
    let rows = run_cells(cells, cell_dir.as_deref());
    print_rows(&rows);
    if let Some(dir) = &cfg.output_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(format!("sweep_{name}.csv"));
        write_sweep_csv(&rows, output(Some(&path))?)?;
    }
    let failed = rows.iter().filter(|r| r.result.is_err()).count();
    if failed > 0 {
        eprintln!("{failed} of {} cells failed", rows.len());
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            scenario,
            dump_lp,
            gnuplot,
        } => cmd_run(&scenario.to_config()?, dump_lp, gnuplot),
        Command::SweepSizes {
            scenario,
            sizes,
            controllers,
            cell_outputs,
        } => {
            let cfg = scenario.to_config()?;
            let cells = size_cells(&cfg, &parse_sizes(&sizes)?, &parse_controllers(&controllers)?);
            cmd_sweep(&cfg, "sizes", cells, cell_outputs)
        }
        Command::SweepHorizon {
            scenario,
            horizons,
            controllers,
            cell_outputs,
        } => {
            let cfg = scenario.to_config()?;
            let h = parse_hours(&horizons)?;
            let h = if h.is_empty() { DEFAULT_HORIZONS_H.to_vec() } else { h };
            let cells = horizon_cells(&cfg, &h, &parse_controllers(&controllers)?);
            cmd_sweep(&cfg, "horizon", cells, cell_outputs)
        }
        Command::SweepFastcharge {
            scenario,
            budgets,
            cell_outputs,
        } => {
            let cfg = scenario.to_config()?;
            let b = parse_hours(&budgets)?;
            let b = if b.is_empty() { DEFAULT_BUDGETS_H.to_vec() } else { b };
            cmd_sweep(&cfg, "fastcharge", fast_charge_cells(&cfg, &b), cell_outputs)
        }
        Command::CompareHouseModels { scenario, cell_outputs } => {
            let cfg = scenario.to_config()?;
            let models = [HouseModel::TraceDriven, scenario.rc_model()];
            cmd_sweep(
                &cfg,
                "house",
                house_cells(&cfg, &models, &[cfg.controller]),
                cell_outputs,
            )
        }
        Command::ValidateSolver {
            milp_instances,
            lp_instances,
            max_binaries,
            max_continuous,
            seed,
        } => {
            let s = validate::run(seed, milp_instances, lp_instances, max_binaries, max_continuous);
            for f in s.failures.iter().take(20) {
                eprintln!("{f}");
            }
            println!("milp_enumeration={}/{}", s.milp_pass, s.milp_total);
            println!("lp_duality={}/{}", s.lp_pass, s.lp_total);
            println!("seconds={:.3}", s.seconds);
            if !s.ok() {
                bail!("solver validation failed");
            }
            Ok(())
        }
        Command::GenProfile { what } => gen_profile(what),
    }
}

fn gen_profile(what: GenProfile) -> Result<()> {
    match what {
        GenProfile::Secondary {
            days,
            dt_minutes,
            start,
            out,
        } => {
            let dt = dt_minutes / 60.0;
            let n = (days * 24.0 / dt).round() as usize;
            let start = start_or_default(&start)?;
            let sys = pvguard_core::plant::SystemConfig::default();
            let p = build_secondary_profile(start, n, dt, &sys);
            let mut w = output(out.as_deref())?;
            writeln!(w, "ts,e_s_wh")?;
            let step = chrono::Duration::milliseconds((dt * 3.6e6).round() as i64);
            for (k, v) in p.iter().enumerate() {
                writeln!(w, "{},{v}", (start + step * k as i32).format("%Y-%m-%dT%H:%M"))?;
            }
            w.flush()?;
        }
        GenProfile::Historical {
            from,
            nsrdb,
            dt_minutes,
            out,
        } => {
            let dt = dt_minutes / 60.0;
            let profiles = match from {
                Some(p) => {
                    let schema = if nsrdb {
                        CsvSchema::nsrdb()
                    } else {
                        CsvSchema::default()
                    };
                    let f = File::open(&p).with_context(|| format!("opening {}", p.display()))?;
                    let recs = parse_weather_csv(f, &schema).with_context(|| format!("reading {}", p.display()))?;
                    build_historical_profile(&recs, dt)?
                }
                None => synthetic::historical_profiles(dt)?,
            };
            profiles.write_dir(&out)?;
            println!("wrote {} day profiles to {}", profiles.days.len(), out.display());
        }
        GenProfile::SyntheticWeather {
            days,
            cadence_minutes,
            start,
            out,
        } => {
            if cadence_minutes == 0 {
                bail!("--cadence-minutes must be positive");
            }
            let recs = synthetic::records(start_or_default(&start)?, days * 24.0, cadence_minutes);
            let mut w = output(out.as_deref())?;
            writeln!(w, "ts,ghi,temp")?;
            for r in recs {
                writeln!(
                    w,
                    "{},{},{}",
                    r.timestamp.format("%Y-%m-%dT%H:%M"),
                    r.ghi,
                    r.ambient_temp
                )?;
            }
            w.flush()?;
        }
    }
    Ok(())
}
