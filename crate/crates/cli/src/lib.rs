//! Command-line front end for the reflow simulator.
//!
//! Each subcommand resolves a [`RunConfig`] (defaults, then the optional TOML
//! file, then flags), validates it, runs one computation and writes its output.
//! No output carries timestamps, so repeated runs are byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use reflow_core::config::RunConfig;
use reflow_core::limits::LimitKind;
use reflow_core::optimizer::{
    feasible_speed_interval, minimize_area, most_symmetric, AreaDomain, OptimizationResult,
    SpeedSweepResult,
};
use reflow_core::{
    build_profile, calibrate_q, check_limits, compute_metrics, fit_blend_weight, load_trace_csv,
    simulate, write_trace_csv_to, LimitVerdict, ParameterRanges, ProcessParameters, TraceMetrics,
    WeldingModel,
};

#[derive(Debug, Parser)]
#[command(
    name = "reflow",
    version,
    about = "Reflow oven thermal profile simulator and optimizer"
)]
pub struct Cli {
    /// TOML run configuration; every key is optional.
    #[arg(long, short, global = true)]
    pub config: Option<PathBuf>,

    #[command(flatten)]
    pub overrides: Overrides,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dump the ambient field as `position_cm,temp_c`.
    Field,
    /// Simulate one scenario; writes the trace CSV and reports limits.
    Simulate,
    /// Fit the welding coefficient (and optionally the blend weight) to a
    /// measured trace.
    Calibrate,
    /// Check a trace CSV against the process limits.
    Check,
    /// Belt speeds that satisfy every limit at the configured setpoints.
    OptimizeSpeed,
    /// Feasible setting with the smallest reflow area.
    OptimizeArea,
    /// Feasible setting with the most symmetric reflow section.
    OptimizeSymmetry,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DomainArg {
    Position,
    Time,
}

/// One flag per configuration key; a flag wins over the file.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    #[arg(long, global = true)]
    pub tt1: Option<f64>,
    #[arg(long, global = true)]
    pub tt2: Option<f64>,
    #[arg(long, global = true)]
    pub tt3: Option<f64>,
    #[arg(long, global = true)]
    pub tt4: Option<f64>,
    #[arg(long, global = true)]
    pub tt5: Option<f64>,
    /// cm/min
    #[arg(long, global = true)]
    pub belt_speed: Option<f64>,
    /// Welding coefficient (1/s).
    #[arg(long, global = true)]
    pub q: Option<f64>,
    /// Linear weight of the cooling blend.
    #[arg(long, global = true)]
    pub p: Option<f64>,
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    #[arg(long, global = true)]
    pub dt_out: Option<f64>,
    #[arg(long, global = true)]
    pub dx: Option<f64>,
    #[arg(long, global = true)]
    pub enforce_ranges: Option<bool>,
    #[arg(long, global = true)]
    pub temp_step: Option<f64>,
    #[arg(long, global = true)]
    pub speed_step: Option<f64>,
    #[arg(long, global = true)]
    pub speed_sweep_step: Option<f64>,
    /// Comma-separated welding coefficients.
    #[arg(long, global = true, value_delimiter = ',')]
    pub q_candidates: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub refine_rounds: Option<usize>,
    #[arg(long, global = true)]
    pub fit_p: Option<bool>,
    /// Comma-separated blend weights.
    #[arg(long, global = true, value_delimiter = ',')]
    pub p_candidates: Option<Vec<f64>>,
    #[arg(long, global = true, value_enum)]
    pub area_domain: Option<DomainArg>,
    #[arg(long, global = true)]
    pub refine: Option<bool>,
    /// Sweep worker threads; 0 uses every core.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Measured trace (calibrate) or trace to check (check).
    #[arg(long, global = true)]
    pub measured: Option<PathBuf>,
    /// Main output file; standard output when absent.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Per-candidate CSV for sweeps.
    #[arg(long, global = true)]
    pub candidates: Option<PathBuf>,
    /// Limit verdict CSV.
    #[arg(long, global = true)]
    pub verdict: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        fn set<T: Clone>(slot: &mut T, v: &Option<T>) {
            if let Some(v) = v {
                *slot = v.clone();
            }
        }
        set(&mut cfg.process.tt1, &self.tt1);
        set(&mut cfg.process.tt2, &self.tt2);
        set(&mut cfg.process.tt3, &self.tt3);
        set(&mut cfg.process.tt4, &self.tt4);
        set(&mut cfg.process.tt5, &self.tt5);
        set(&mut cfg.process.belt_speed, &self.belt_speed);
        set(&mut cfg.model.q, &self.q);
        set(&mut cfg.model.p, &self.p);
        set(&mut cfg.grid.dt, &self.dt);
        set(&mut cfg.grid.dt_out, &self.dt_out);
        set(&mut cfg.field.dx, &self.dx);
        set(&mut cfg.enforce_ranges, &self.enforce_ranges);
        set(&mut cfg.ranges.temp_step, &self.temp_step);
        set(&mut cfg.ranges.speed_step, &self.speed_step);
        set(&mut cfg.ranges.speed_sweep_step, &self.speed_sweep_step);
        set(&mut cfg.calibration.q_candidates, &self.q_candidates);
        set(&mut cfg.calibration.refine_rounds, &self.refine_rounds);
        set(&mut cfg.calibration.fit_p, &self.fit_p);
        set(&mut cfg.calibration.p_candidates, &self.p_candidates);
        if let Some(d) = self.area_domain {
            cfg.optimize.area_domain = match d {
                DomainArg::Position => AreaDomain::Position,
                DomainArg::Time => AreaDomain::Time,
            };
        }
        set(&mut cfg.optimize.refine, &self.refine);
        set(&mut cfg.optimize.workers, &self.workers);
        if self.measured.is_some() {
            cfg.paths.measured = self.measured.clone();
        }
        if self.output.is_some() {
            cfg.paths.output = self.output.clone();
        }
        if self.candidates.is_some() {
            cfg.paths.candidates = self.candidates.clone();
        }
        if self.verdict.is_some() {
            cfg.paths.verdict = self.verdict.clone();
        }
    }
}

/// Defaults, then the config file, then flags; validated.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cli.overrides.apply(&mut cfg);
    if matches!(
        cli.command,
        Command::OptimizeArea | Command::OptimizeSymmetry
    ) {
        // Joint sweeps take every setpoint from `ranges`, never from `process`.
        cfg.enforce_ranges = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let cfg = resolve_config(cli)?;
    match cli.command {
        Command::Field => cmd_field(&cfg, stdout),
        Command::Simulate => cmd_simulate(&cfg, stdout, stderr),
        Command::Calibrate => cmd_calibrate(&cfg, stdout),
        Command::Check => cmd_check(&cfg, stdout),
        Command::OptimizeSpeed => cmd_optimize_speed(&cfg, stdout),
        Command::OptimizeArea => cmd_optimize_joint(&cfg, false, stdout),
        Command::OptimizeSymmetry => cmd_optimize_joint(&cfg, true, stdout),
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// Sends `contents` to the configured output file, or to `stdout`.
fn emit(path: Option<&Path>, contents: &str, stdout: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => write_file(p, contents.as_bytes()),
        None => stdout
            .write_all(contents.as_bytes())
            .context("writing standard output"),
    }
}

fn position_decimals(dx: f64) -> usize {
    (1..=6)
        .find(|&d| {
            let scaled = dx * 10f64.powi(d as i32);
            (scaled - scaled.round()).abs() < 1e-6
        })
        .unwrap_or(6)
}

/// The ambient field sampled every `dx` from 0 to the furnace end inclusive.
pub fn field_csv(cfg: &RunConfig) -> Result<String> {
    let layout = cfg.layout();
    let profile = build_profile(&layout, &cfg.process, cfg.model.p)?;
    let length = layout.total_length_cm();
    let dx = cfg.field.dx;
    let digits = position_decimals(dx);
    let n = (length / dx + 1e-9).floor() as usize;
    let mut xs: Vec<f64> = (0..=n).map(|i| (i as f64 * dx).min(length)).collect();
    if length - xs[n] > 1e-9 {
        xs.push(length);
    }
    let mut out = String::from("position_cm,temp_c\n");
    for x in xs {
        let t = profile.eval(x)?;
        writeln!(out, "{x:.digits$},{t:.4}").unwrap();
    }
    Ok(out)
}

fn cmd_field(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    emit(cfg.paths.output.as_deref(), &field_csv(cfg)?, stdout)
}

fn scenario_header(cfg: &RunConfig) -> String {
    let p = &cfg.process;
    format!(
        "# setpoints: tt1={:.1} tt2={:.1} tt3={:.1} tt4={:.1} tt5={:.1} °C, belt speed {:.1} cm/min\n\
         # model: q={:.5} 1/s, p={:.2}; grid: dt={} s, dt_out={} s\n",
        p.tt1, p.tt2, p.tt3, p.tt4, p.tt5, p.belt_speed, cfg.model.q, cfg.model.p, cfg.grid.dt,
        cfg.grid.dt_out
    )
}

fn metrics_text(m: &TraceMetrics) -> String {
    let rise = m
        .rise_time_150_190
        .map(|r| format!("{r:.4} s"))
        .unwrap_or_else(|| "not reached".into());
    format!(
        "max slope          {:.4} °C/s\n\
         min slope          {:.4} °C/s\n\
         rise 150->190 °C   {rise}\n\
         time above 217 °C  {:.4} s\n\
         peak               {:.4} °C at t = {:.1} s\n",
        m.max_slope, m.min_slope, m.duration_above_217, m.peak_temp, m.peak_time
    )
}

fn verdict_report(cfg: &RunConfig, m: &TraceMetrics, v: &LimitVerdict) -> String {
    format!("{}{}\n{v}\n", scenario_header(cfg), metrics_text(m))
}

fn cmd_simulate(cfg: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let layout = cfg.layout();
    let profile = build_profile(&layout, &cfg.process, cfg.model.p)?;
    let trace = simulate(
        &profile,
        &cfg.process,
        cfg.welding_model()?,
        cfg.simulation_grid()?,
    )?;
    let metrics = compute_metrics(&trace)?;
    let verdict = check_limits(&metrics, &cfg.limits);

    let mut csv = Vec::new();
    write_trace_csv_to(&trace, &mut csv)?;
    let report = verdict_report(cfg, &metrics, &verdict);
    match cfg.paths.output.as_deref() {
        Some(path) => {
            write_file(path, &csv)?;
            stdout.write_all(report.as_bytes())?;
        }
        None => {
            stdout.write_all(&csv)?;
            stderr.write_all(report.as_bytes())?;
        }
    }
    if let Some(path) = cfg.paths.verdict.as_deref() {
        write_file(path, verdict.to_csv().as_bytes())?;
    }
    Ok(())
}

fn measured_path(cfg: &RunConfig) -> Result<&Path> {
    match cfg.paths.measured.as_deref() {
        Some(p) => Ok(p),
        None => bail!("no measured trace given (use --measured or paths.measured)"),
    }
}

fn cmd_check(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let path = measured_path(cfg)?;
    let trace = load_trace_csv(path, Some(cfg.process.belt_speed))?;
    let metrics = compute_metrics(&trace)?;
    let verdict = check_limits(&metrics, &cfg.limits);
    let report = format!("{}\n{verdict}\n", metrics_text(&metrics));
    emit(cfg.paths.output.as_deref(), &report, stdout)?;
    if let Some(path) = cfg.paths.verdict.as_deref() {
        write_file(path, verdict.to_csv().as_bytes())?;
    }
    Ok(())
}

/// Per-candidate table followed by the selected coefficient.
pub fn calibration_report(cfg: &RunConfig) -> Result<String> {
    let path = measured_path(cfg)?;
    let measured = load_trace_csv(path, Some(cfg.process.belt_speed))?;
    let layout = cfg.layout();
    let result = calibrate_q(
        &measured,
        &layout,
        &cfg.process,
        cfg.model.p,
        &cfg.calibration.q_candidates,
        &cfg.calibration_options()?,
    )?;

    let mut out = scenario_header(cfg);
    writeln!(
        out,
        "# discrepancy: mean squared error over measured time stamps (°C²); ties -> smaller q"
    )?;
    writeln!(out, "q,discrepancy,pearson")?;
    for c in &result.candidates {
        writeln!(out, "{:.5},{:.6},{:.6}", c.q, c.discrepancy, c.pearson)?;
    }
    for (i, round) in result.refinements.iter().enumerate() {
        let local = round
            .iter()
            .min_by(|a, b| {
                a.discrepancy
                    .total_cmp(&b.discrepancy)
                    .then(a.q.total_cmp(&b.q))
            })
            .expect("non-empty round");
        writeln!(
            out,
            "# refinement {}: {} points, local best q={:.6} discrepancy={:.6}",
            i + 1,
            round.len(),
            local.q,
            local.discrepancy
        )?;
    }
    let best = result.best();
    writeln!(
        out,
        "best_q = {:.5} (discrepancy {:.6}, pearson {:.6})",
        best.q, best.discrepancy, best.pearson
    )?;

    if cfg.calibration.fit_p {
        let fit = fit_blend_weight(
            &measured,
            &layout,
            &cfg.process,
            WeldingModel::new(result.best_q)?,
            cfg.simulation_grid()?,
            &cfg.calibration.p_candidates,
        )?;
        writeln!(out, "p,discrepancy")?;
        for (p, d) in &fit.candidates {
            writeln!(out, "{p:.3},{d:.6}")?;
        }
        writeln!(out, "best_p = {:.3}", fit.best_p)?;
    }
    Ok(out)
}

fn cmd_calibrate(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let report = calibration_report(cfg)?;
    emit(cfg.paths.output.as_deref(), &report, stdout)
}

fn compress_speeds(speeds: &[f64], step: f64) -> String {
    let mut runs: Vec<(f64, f64)> = Vec::new();
    for &v in speeds {
        match runs.last_mut() {
            Some((_, hi)) if (v - *hi - step).abs() < 1e-6 => *hi = v,
            _ => runs.push((v, v)),
        }
    }
    runs.iter()
        .map(|(a, b)| {
            if a == b {
                format!("{a:.1}")
            } else {
                format!("{a:.1}-{b:.1}")
            }
        })
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn speed_report(cfg: &RunConfig, res: &SpeedSweepResult) -> String {
    let mut out = scenario_header(cfg);
    let _ = writeln!(
        out,
        "# objective: largest belt speed meeting every process limit\n\
         # grid: v in [{:.1}, {:.1}] cm/min, step {} cm/min, {} speeds",
        res.speed_range.lo,
        res.speed_range.hi,
        res.step,
        res.points.len()
    );
    let mut fails = [0usize; 5];
    for p in &res.points {
        for f in &p.failed {
            let i = LimitKind::ALL.iter().position(|k| k == f).unwrap();
            fails[i] += 1;
        }
    }
    let _ = writeln!(out, "failures per limit:");
    for (k, n) in LimitKind::ALL.iter().zip(fails) {
        let _ = writeln!(out, "  {:<16} {n}", k.name());
    }
    if res.feasible_speeds.is_empty() {
        let _ = writeln!(out, "feasible speeds: none");
    } else {
        let _ = writeln!(
            out,
            "feasible speeds: {}",
            compress_speeds(&res.feasible_speeds, res.step)
        );
    }
    let _ = writeln!(
        out,
        "max feasible speed: {}",
        res.max_feasible
            .map(|v| format!("{v:.1} cm/min"))
            .unwrap_or_else(|| "none".into())
    );
    out
}

pub fn speed_csv(res: &SpeedSweepResult) -> String {
    let mut out = String::from("v,feasible,max_slope,min_slope,rise_150_190,time_above_217,peak\n");
    for p in &res.points {
        let m = &p.metrics;
        let rise = m
            .rise_time_150_190
            .map(|r| format!("{r:.4}"))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{:.4},{},{:.4},{:.4},{rise},{:.4},{:.4}",
            p.belt_speed, p.pass, m.max_slope, m.min_slope, m.duration_above_217, m.peak_temp
        );
    }
    out
}

fn cmd_optimize_speed(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let res = feasible_speed_interval(
        &cfg.layout(),
        &cfg.process,
        cfg.model.p,
        cfg.welding_model()?,
        cfg.ranges.belt_speed,
        cfg.ranges.speed_sweep_step,
        &cfg.sweep_options()?,
    )?;
    emit(
        cfg.paths.output.as_deref(),
        &speed_report(cfg, &res),
        stdout,
    )?;
    if let Some(path) = cfg.paths.candidates.as_deref() {
        write_file(path, speed_csv(&res).as_bytes())?;
    }
    Ok(())
}

fn grid_spec(r: &ParameterRanges) -> String {
    let iv = |i: reflow_core::Interval| format!("[{:.1}, {:.1}]", i.lo, i.hi);
    format!(
        "# grid: tt1 {} tt2 {} tt3 {} tt4 {} step {} °C; tt5 {:.1} °C; v {} step {} cm/min",
        iv(r.tt1),
        iv(r.tt2),
        iv(r.tt3),
        iv(r.tt4),
        r.temp_step,
        r.tt5.lo,
        iv(r.belt_speed),
        r.speed_step
    )
}

fn params_text(p: &ProcessParameters) -> String {
    format!(
        "tt1={:.1} tt2={:.1} tt3={:.1} tt4={:.1} v={:.1} cm/min",
        p.tt1, p.tt2, p.tt3, p.tt4, p.belt_speed
    )
}

pub fn joint_report(cfg: &RunConfig, res: &OptimizationResult) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# objective: {} (area domain: {}, {})",
        res.objective.describe(),
        res.area_domain,
        res.area_domain.unit()
    );
    let _ = writeln!(out, "# tie-break: {}", res.objective.tie_break());
    let _ = writeln!(out, "{}", grid_spec(&res.ranges));
    let _ = writeln!(
        out,
        "# refinement: {}",
        if res.refined {
            "±1 step around the incumbent at 1/5 step"
        } else {
            "off"
        }
    );
    let _ = writeln!(
        out,
        "# model: q={:.5} 1/s, p={:.2}; grid: dt={} s, dt_out={} s",
        cfg.model.q, cfg.model.p, cfg.grid.dt, cfg.grid.dt_out
    );
    let feasible = res.candidates.iter().filter(|c| c.feasible).count();
    let _ = writeln!(
        out,
        "candidates evaluated: {}, feasible: {feasible}",
        res.candidates_evaluated
    );
    match &res.best {
        None => {
            let _ = writeln!(out, "best: none");
        }
        Some(b) => {
            let _ = writeln!(out, "best: {}", params_text(&b.params));
            let _ = writeln!(out, "area = {:.4} {}", b.area, res.area_domain.unit());
            let _ = writeln!(
                out,
                "symmetry = {}",
                b.symmetry
                    .map(|s| format!("{s:.4} °C²"))
                    .unwrap_or_else(|| "undefined".into())
            );
            out.push_str(&metrics_text(&b.metrics));
            let _ = writeln!(out, "{}", check_limits(&b.metrics, &cfg.limits));
        }
    }
    out
}

pub fn candidates_csv(res: &OptimizationResult) -> String {
    let mut out = String::from("tt1,tt2,tt3,tt4,v,feasible,peak,area,symmetry\n");
    for c in &res.candidates {
        let p = &c.params;
        let sym = c.symmetry.map(|s| format!("{s:.4}")).unwrap_or_default();
        let _ = writeln!(
            out,
            "{:.4},{:.4},{:.4},{:.4},{:.4},{},{:.4},{:.4},{sym}",
            p.tt1, p.tt2, p.tt3, p.tt4, p.belt_speed, c.feasible, c.metrics.peak_temp, c.area
        );
    }
    out
}

fn cmd_optimize_joint(cfg: &RunConfig, symmetric: bool, stdout: &mut dyn Write) -> Result<()> {
    let layout = cfg.layout();
    let model = cfg.welding_model()?;
    let opts = cfg.sweep_options()?;
    let res = if symmetric {
        most_symmetric(&layout, &cfg.ranges, cfg.model.p, model, &opts)?
    } else {
        minimize_area(&layout, &cfg.ranges, cfg.model.p, model, &opts)?
    };
    emit(
        cfg.paths.output.as_deref(),
        &joint_report(cfg, &res),
        stdout,
    )?;
    if let Some(path) = cfg.paths.candidates.as_deref() {
        write_file(path, candidates_csv(&res).as_bytes())?;
    }
    Ok(())
}
