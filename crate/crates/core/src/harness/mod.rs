//! Reproducible experiments that write CSV artifacts.
//!
//! Every experiment is a list of independent tasks (one per arm and run)
//! executed on a rayon pool and merged in task order by a single writer, so
//! output bytes do not depend on the worker count. Run `r` of an arm labelled
//! `L` draws from `rng::run_seed(base_seed, L, r)`.
//!
//! CSV floats are written with 17 significant digits. Each output directory
//! also gets a `manifest.txt` with the normalised config, seed, crate
//! version, wall time and the column schema of every file written.

mod config;
mod converge;
mod mountain;
mod theory;
mod toy;

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

pub use config::{
    AgentSection, ConvergeSection, ExperimentConfig, ExperimentKind, MountainCarSection, SimpleMdpSection,
    SweepSection, TheorySection, STEP_SIZE_GRID,
};
pub use converge::{converge_mdp, run_convergence, run_convergence_study, ConvergenceStudy, ConvergenceSummary};
pub use mountain::{run_mountain_car, run_mountain_car_experiment, McArmResult, McCell, MountainCarResults};
pub use theory::{run_theory_grid, theory_rows, TheoryRow, THEORY_HEADER};
pub use toy::{
    optimal_egreedy_left_prob, run_simple_mdp, run_simple_mdp_experiment, run_sweep, EpisodeSummary, RunRecord,
    SimpleMdpResults, SweepCell,
};

use crate::error::{Error, Result};

/// Tasks are executed in chunks of this many so that per-run results can be
/// merged and dropped instead of held all at once.
const CHUNK: usize = 256;

/// 17 significant digits, scientific notation.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Runs `f` over `tasks` on `workers` threads (0 = available parallelism)
/// and hands results to `sink` in task order.
pub(crate) fn run_tasks<T, R, F, S>(tasks: &[T], workers: usize, f: F, mut sink: S) -> Result<()>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync,
    S: FnMut(&T, R) -> Result<()>,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    for chunk in tasks.chunks(CHUNK) {
        let results: Vec<Result<R>> = pool.install(|| chunk.par_iter().map(&f).collect());
        for (task, result) in chunk.iter().zip(results) {
            sink(task, result?)?;
        }
    }
    Ok(())
}

/// Buffered CSV file writer.
pub(crate) struct CsvFile {
    path: PathBuf,
    out: BufWriter<fs::File>,
}

impl CsvFile {
    pub(crate) fn create(path: PathBuf, header: &str) -> Result<Self> {
        let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut csv = CsvFile {
            path,
            out: BufWriter::new(file),
        };
        csv.row(header)?;
        Ok(csv)
    }

    pub(crate) fn row(&mut self, line: &str) -> Result<()> {
        writeln!(self.out, "{line}").map_err(|e| Error::io(&self.path, e))
    }

    pub(crate) fn finish(mut self) -> Result<PathBuf> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))?;
        Ok(self.path)
    }
}

/// Files written by one experiment, with their column lists.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Artifacts {
    pub files: Vec<(PathBuf, String)>,
}

impl Artifacts {
    pub(crate) fn add(&mut self, path: PathBuf, header: &str) {
        self.files.push((path, header.to_string()));
    }
}

/// The output directory must already exist.
pub fn check_output_dir(dir: &Path) -> Result<()> {
    if dir.is_dir() {
        Ok(())
    } else {
        Err(Error::Io {
            path: dir.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "output directory does not exist"),
        })
    }
}

/// Runs the configured experiment into `out` and writes the manifest.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<Artifacts> {
    cfg.validate()?;
    check_output_dir(out)?;
    let start = Instant::now();
    let artifacts = match cfg.kind {
        ExperimentKind::TheoryGrid => run_theory_grid(cfg, out)?,
        ExperimentKind::SimpleMdp => run_simple_mdp_experiment(cfg, out)?,
        ExperimentKind::MountainCar => run_mountain_car_experiment(cfg, out)?,
        ExperimentKind::Converge => run_convergence_study(cfg, out)?,
        ExperimentKind::Sweep => run_sweep(cfg, out)?,
    };
    write_manifest(cfg, out, &artifacts, start.elapsed().as_secs_f64())?;
    Ok(artifacts)
}

fn write_manifest(cfg: &ExperimentConfig, out: &Path, artifacts: &Artifacts, wall_seconds: f64) -> Result<()> {
    let mut text = String::new();
    let _ = writeln!(text, "version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(text, "kind = {}", cfg.kind.as_str());
    let _ = writeln!(text, "base_seed = {}", cfg.base_seed);
    let _ = writeln!(text, "seed_rule = run_seed(base_seed, label, run)");
    let _ = writeln!(text, "wall_seconds = {wall_seconds:.3}");
    for (path, header) in &artifacts.files {
        let name = path.strip_prefix(out).unwrap_or(path);
        let _ = writeln!(text, "schema {} = {}", name.display(), header);
    }
    text.push_str("\n# config\n");
    text.push_str(&cfg.to_text());
    let path = out.join("manifest.txt");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}
