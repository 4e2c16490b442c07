//! The `spinrelax` command line: `run`, `table` and `validate` on scenario
//! files.
//!
//! Exit status is 0 on success, 2 for configuration errors, 3 when at least
//! one sweep point failed (its row carries the error) and 4 for I/O errors.

pub mod config;
pub mod output;
pub mod run;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use log::info;

pub use config::{ConfigError, Mode, ScenarioConfig, Units};
pub use run::{perturbation_table, run_config, Cell, Table};

use crate::serf::SlowDownConvention;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "spinrelax",
    version,
    about = "Spin relaxation in field gradients with depolarizing walls"
)]
pub struct Cli {
    /// Worker threads for sweep points (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,

    /// `literal-q` or `scaled-q`, and/or `rate` or `angular`; comma separated
    /// or repeated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub convention: Vec<String>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the scenario and write CSV, plots and a manifest.
    Run { config: PathBuf },
    /// Write the second-order rate table for the scenario's parameters.
    Table { config: PathBuf },
    /// Parse and validate the scenario without running it.
    Validate { config: PathBuf },
}

fn parse_conventions(values: &[String]) -> Result<(Option<SlowDownConvention>, Option<Units>), String> {
    let (mut conv, mut units) = (None, None);
    for v in values {
        match v.trim() {
            "literal-q" => conv = Some(SlowDownConvention::LiteralQ),
            "scaled-q" => conv = Some(SlowDownConvention::ScaledQ),
            "rate" => units = Some(Units::Rate),
            "angular" => units = Some(Units::Angular),
            other => {
                return Err(format!(
                    "unknown convention `{other}` (literal-q, scaled-q, rate, angular)"
                ))
            }
        }
    }
    Ok((conv, units))
}

struct Prepared {
    config: ScenarioConfig,
    out_dir: PathBuf,
    stem: String,
}

fn prepare(cli: &Cli, path: &Path) -> Result<Prepared, i32> {
    let (conv, units) = parse_conventions(&cli.convention).map_err(|m| {
        eprintln!("error: {m}");
        EXIT_CONFIG
    })?;
    let config = ScenarioConfig::load(path).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_CONFIG
    })?;
    let mut config = config.resolve(conv, units);
    let out_dir = cli
        .out_dir
        .clone()
        .or_else(|| config.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let stem = config.output.stem.clone().unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().trim_end_matches(".manifest").to_string())
            .unwrap_or_else(|| "spinrelax".into())
    });
    config.output.stem = Some(stem.clone());
    Ok(Prepared { config, out_dir, stem })
}

fn io_fail(what: &Path, e: std::io::Error) -> i32 {
    eprintln!("error: {}: {e}", what.display());
    EXIT_IO
}

fn plot_name(stem: &str, plot: &config::PlotConfig) -> String {
    plot.file
        .clone()
        .unwrap_or_else(|| format!("{stem}_{}_vs_{}.svg", plot.y, plot.x))
}

fn run(cli: &Cli, path: &Path) -> i32 {
    let p = match prepare(cli, path) {
        Ok(p) => p,
        Err(code) => return code,
    };
    if let Err(e) = std::fs::create_dir_all(&p.out_dir) {
        return io_fail(&p.out_dir, e);
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        builder = builder.num_threads(n.max(1));
    }
    let pool = match builder.build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return EXIT_IO;
        }
    };
    info!("running {} ({} mode)", path.display(), p.config.mode.as_str());
    let start = Instant::now();
    let table = pool.install(|| run_config(&p.config));
    let wall = start.elapsed().as_secs_f64();

    let csv_path = p.out_dir.join(format!("{}.csv", p.stem));
    if let Err(e) = output::write_csv(&csv_path, &table) {
        return io_fail(&csv_path, e);
    }
    for plot in &p.config.output.plot {
        let svg = p.out_dir.join(plot_name(&p.stem, plot));
        if let Err(e) = output::write_plot(&svg, &table, plot) {
            return io_fail(&svg, e);
        }
    }
    let manifest = p.out_dir.join(format!("{}.manifest.toml", p.stem));
    if let Err(e) = output::write_manifest(&manifest, &p.config, wall) {
        return io_fail(&manifest, e);
    }
    for note in &table.notes {
        if note.starts_with("error") || note.starts_with("warning") {
            eprintln!("{note}");
        } else {
            println!("{note}");
        }
    }
    println!(
        "wrote {} ({} rows, {:.2} s)",
        csv_path.display(),
        table.rows.len(),
        wall
    );
    if table.failures > 0 {
        eprintln!("{} point(s) failed", table.failures);
        EXIT_SOLVER
    } else {
        EXIT_OK
    }
}

fn table(cli: &Cli, path: &Path) -> i32 {
    let p = match prepare(cli, path) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let t = match perturbation_table(&p.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_SOLVER;
        }
    };
    if let Err(e) = std::fs::create_dir_all(&p.out_dir) {
        return io_fail(&p.out_dir, e);
    }
    let csv_path = p.out_dir.join(format!("{}_table.csv", p.stem));
    if let Err(e) = output::write_csv(&csv_path, &t) {
        return io_fail(&csv_path, e);
    }
    println!("{}", t.columns.join(","));
    for row in &t.rows {
        println!("{}", row.iter().map(|c| c.render()).collect::<Vec<_>>().join(","));
    }
    if t.failures > 0 {
        EXIT_SOLVER
    } else {
        EXIT_OK
    }
}

fn validate(cli: &Cli, path: &Path) -> i32 {
    match prepare(cli, path) {
        Ok(p) => {
            println!(
                "{}: ok ({} mode, {} point(s))",
                path.display(),
                p.config.mode.as_str(),
                p.config.sweep_points().len()
            );
            EXIT_OK
        }
        Err(code) => code,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match &cli.command {
        Command::Run { config } => run(&cli, config),
        Command::Table { config } => table(&cli, config),
        Command::Validate { config } => validate(&cli, config),
    }
}
