//! Command-line front end: `coeffs`, `run`, `sweep` and `field`.
//!
//! Every command reads a TOML config (or a manifest written by an earlier run), writes its data
//! files and a `manifest.json` into `--out`, and exits with 0 (ok), 1 (validation),
//! 2 (instability or divergence) or 3 (budget exceeded).

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::amplitude::{
    averaged_closed_form, averaged_coeffs, burgers_homog_coeffs, homog_coeffs_limit, homog_coeffs_model, AmplitudeCoeffs, Truncation,
};
use crate::config::{FieldSource, Manifest, RunConfig};
use crate::direct::{reconstruct_field, run_direct_stiff, uniform_grid, DirectSettings, FastModes};
use crate::error::{Error, Result};
use crate::harness::{convergence_sweep, trajectory_compare, SweepOptions, Trajectory};
use crate::hmm::hmm_macro_run_advective;
use crate::output::{fmt_num, CsvTable};
use crate::sde::RngFactory;
use crate::spectral::{build_truncated_system, Basis, ModelKind, Scaling};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "HMM_SPDE_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "hmm-spde", version, about = "Multiscale solver for SPDE amplitude equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Worker threads (default: $HMM_SPDE_WORKERS, else all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Amplitude coefficients for the configured truncations and the limit.
    Coeffs(Common),
    /// One coupled trajectory (diffusive) or the averaged comparison (advective).
    Run(Common),
    /// Convergence table over the configured p range.
    Sweep(Common),
    /// Space-time field reconstructed from a trajectory.
    Field(Common),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Coeffs(_) => "coeffs",
            Command::Run(_) => "run",
            Command::Sweep(_) => "sweep",
            Command::Field(_) => "field",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Coeffs(c) | Command::Run(c) | Command::Sweep(c) | Command::Field(c) => c,
        }
    }
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long, required_unless_present = "manifest", conflicts_with = "manifest")]
    pub config: Option<PathBuf>,
    /// Manifest of an earlier run; reproduces its outputs.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Overrides the top-level seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `hmm.p`.
    #[arg(long)]
    pub p: Option<u32>,
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn worker_count(flag: Option<usize>) -> Result<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("{WORKERS_ENV}: expected a positive integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

/// Loads the configuration, applies overrides and runs the command on a bounded thread pool.
pub fn execute(cli: &Cli) -> Result<()> {
    let common = cli.command.common();
    let mut config = load_config(common, cli.command.name())?;
    if let Some(s) = common.seed {
        config.seed = s;
    }
    if let Some(p) = common.p {
        config.hmm.p = p;
        config = RunConfig::from_toml(&config.to_toml())?;
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = worker_count(cli.workers)? {
        if n == 0 {
            return Err(Error::Config("--workers must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    std::fs::create_dir_all(&common.out)?;
    let manifest = Manifest::new(cli.command.name(), &config);
    pool.install(|| {
        let result = match &cli.command {
            Command::Coeffs(_) => cmd_coeffs(&config, &manifest, &common.out),
            Command::Run(_) => cmd_run(&config, &manifest, &common.out),
            Command::Sweep(_) => cmd_sweep(&config, &manifest, &common.out),
            Command::Field(_) => cmd_field(&config, &manifest, &common.out),
        };
        std::fs::write(common.out.join("manifest.json"), manifest.to_json())?;
        result
    })
}

fn load_config(common: &Common, command: &str) -> Result<RunConfig> {
    if let Some(path) = &common.manifest {
        let m = Manifest::from_json(&read(path)?)?;
        if m.command != command {
            return Err(Error::Config(format!("manifest was written by `{}`, not `{command}`", m.command)));
        }
        return Ok(m.config);
    }
    let path = common.config.as_ref().expect("clap requires --config or --manifest");
    RunConfig::from_toml(&read(path)?).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn uses_pair_series(config: &RunConfig) -> bool {
    config.model.model == ModelKind::Burgers && config.model.basis == Basis::Sine
}

/// Sine-basis Burgers rows use the pair series, whose index `M` counts modes `2..=M+1`;
/// other models use the general series over `M` fast modes.
pub fn coefficient_rows(config: &RunConfig) -> Result<Vec<(String, AmplitudeCoeffs)>> {
    let model = config.model_spec()?;
    let mut rows = Vec::new();
    for &m in &config.harness.m_list {
        let c = if uses_pair_series(config) {
            burgers_homog_coeffs(&config.model.q.rule()?, config.model.nu, Truncation::Modes(m))?
        } else {
            homog_coeffs_model(&model, m)?
        };
        rows.push((m.to_string(), c));
    }
    rows.push(("inf".into(), homog_coeffs_limit(&model)?));
    Ok(rows)
}

fn cmd_coeffs(config: &RunConfig, manifest: &Manifest, out: &Path) -> Result<()> {
    let rows = coefficient_rows(config)?;
    let mut table = CsvTable::new(&["M", "A", "B", "C", "D", "tail_bound"]).with_comment(manifest.comment());
    for (m, c) in &rows {
        table.push(vec![m.clone(), fmt_num(c.a), fmt_num(c.b), fmt_num(c.c), fmt_num(c.d), fmt_num(c.tail_bound)]);
    }
    table.write(&out.join("coeffs.csv"))?;
    print!("{}", table.render());
    let summary = json!({
        "model_hash": manifest.model_hash,
        "seed": manifest.seed,
        "series": if uses_pair_series(config) { "pair" } else { "general" },
        "rows": rows.iter().map(|(m, c)| json!({
            "M": m, "A": c.a, "B": c.b, "C": c.c, "D": c.d, "tail_bound": c.tail_bound,
        })).collect::<Vec<_>>(),
    });
    std::fs::write(out.join("coeffs.json"), serde_json::to_string_pretty(&summary).expect("json") + "\n")?;
    Ok(())
}

/// Diffusive: HMM, truncated and limit amplitude SDEs on one path.
/// Advective: HMM against the closed-form averaged solution (`nan` past blow-up).
pub fn run_trajectory(config: &RunConfig) -> Result<Trajectory> {
    let model = config.model_spec()?;
    let m = config.model.m;
    let params = config.hmm_params();
    let system = build_truncated_system(&model, m)?;
    params.validate(&system)?;
    match config.hmm.scaling {
        Scaling::Diffusive => trajectory_compare(&model, m, &params, config.seed, config.hmm.x0),
        Scaling::Advective => {
            let run = hmm_macro_run_advective(&system, &params, RngFactory::new(config.seed), config.hmm.x0)?;
            let avg = averaged_coeffs(&model, m)?;
            let times = run.times();
            let x_inf = times
                .iter()
                .map(|&t| match averaged_closed_form(&avg, config.hmm.x0, t) {
                    Ok(v) => Ok(v),
                    Err(Error::BlowUp { .. }) => Ok(f64::NAN),
                    Err(e) => Err(e),
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Trajectory {
                times,
                x_hmm: Some(run.states),
                x_hom: None,
                x_inf: Some(x_inf),
                notes: Vec::new(),
            })
        }
    }
}

fn cmd_run(config: &RunConfig, manifest: &Manifest, out: &Path) -> Result<()> {
    let traj = run_trajectory(config)?;
    traj.to_csv().with_comment(manifest.comment()).write(&out.join("trajectory.csv"))?;
    report_notes(&traj)
}

fn report_notes(traj: &Trajectory) -> Result<()> {
    for n in &traj.notes {
        eprintln!("warning: {n}");
    }
    if traj.notes.is_empty() {
        Ok(())
    } else {
        Err(Error::Diverged { stage: "trajectory", step: 0 })
    }
}

/// Options of the configured sweep; seeds run from the top-level seed upwards.
pub fn sweep_options(config: &RunConfig) -> (Vec<u32>, Vec<u64>, SweepOptions) {
    let h = &config.harness;
    let ps = (h.p_min..=h.p_max).collect();
    let seeds = (0..h.seeds as u64).map(|i| config.seed.wrapping_add(i)).collect();
    let opts = SweepOptions {
        x0: config.hmm.x0,
        dt_macro: config.hmm.dt_macro,
        n_macro: config.n_macro(),
        k: config.hmm.k.unwrap_or(1),
        h_scale: h.h_scale,
        point: h.limit_point.into(),
        row_cap: Duration::from_secs_f64(h.row_cap_s.max(0.0)),
    };
    (ps, seeds, opts)
}

fn cmd_sweep(config: &RunConfig, manifest: &Manifest, out: &Path) -> Result<()> {
    if config.hmm.scaling != Scaling::Diffusive {
        return Err(Error::Config("sweep: hmm.scaling must be \"diffusive\"".into()));
    }
    let model = config.model_spec()?;
    let (ps, seeds, opts) = sweep_options(config);
    let table = convergence_sweep(&model, config.model.m, &ps, &seeds, &opts)?;
    let csv = table.to_csv().with_comment(manifest.comment());
    csv.write(&out.join("sweep.csv"))?;
    print!("{}", csv.render());
    Ok(())
}

fn cmd_field(config: &RunConfig, manifest: &Manifest, out: &Path) -> Result<()> {
    let model = config.model_spec()?;
    let grid = uniform_grid(config.harness.grid);
    let field = match config.harness.field_source {
        FieldSource::Direct => {
            let system = build_truncated_system(&model, config.model.m)?;
            let eps = config.epsilon();
            let settings = DirectSettings {
                epsilon: eps,
                dt_micro: eps * eps / 64.0,
                t_end: config.hmm.t,
                dt_out: config.hmm.dt_macro,
                x0: config.hmm.x0,
                budget: crate::direct::DEFAULT_BUDGET,
            };
            let run = run_direct_stiff(&system, &settings, RngFactory::new(config.seed), 0)?;
            let fast = config.harness.include_fast.then_some(FastModes {
                modes: system.fast_modes(),
                values: &run.fast,
            });
            reconstruct_field(&run.times, &run.slow, fast, model.basis(), &grid)?
        }
        source => {
            let traj = run_trajectory(config)?;
            let series = match source {
                FieldSource::Hmm => &traj.x_hmm,
                FieldSource::Hom => &traj.x_hom,
                _ => &traj.x_inf,
            };
            let Some(series) = series else {
                report_notes(&traj)?;
                return Err(Error::Config(format!("field: series {source:?} is not produced for this scaling")));
            };
            reconstruct_field(&traj.times, series, None, model.basis(), &grid)?
        }
    };
    field.to_csv().with_comment(manifest.comment()).write(&out.join("field.csv"))?;
    Ok(())
}
