//! Experiment configuration files.
//!
//! Flat, sectioned `key = value` text:
//!
//! ```text
//! # comments start with '#'
//! [experiment]
//! kind = simple-mdp
//! runs = 500
//! base_seed = 42
//!
//! [agent]
//! arms = q, double_q, maxmin:8
//!
//! [simple_mdp]
//! mu = 0.1, -0.1
//! ```
//!
//! Lists are comma separated. Unknown sections or keys are errors. Every
//! key has a default; [`ExperimentConfig::to_text`] writes the full,
//! normalised form, which parses back to the same config.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::agents::Variant;
use crate::error::{Error, Result};
use crate::generalized_q::GFunction;

/// The Mountain Car step-size grid.
pub const STEP_SIZE_GRID: [f64; 5] = [0.005, 0.01, 0.02, 0.04, 0.08];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    TheoryGrid,
    SimpleMdp,
    MountainCar,
    Converge,
    Sweep,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::TheoryGrid,
        ExperimentKind::SimpleMdp,
        ExperimentKind::MountainCar,
        ExperimentKind::Converge,
        ExperimentKind::Sweep,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::TheoryGrid => "theory-grid",
            ExperimentKind::SimpleMdp => "simple-mdp",
            ExperimentKind::MountainCar => "mountain-car",
            ExperimentKind::Converge => "converge",
            ExperimentKind::Sweep => "sweep",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Ok(match key.as_str() {
            "theory-grid" | "theory" => ExperimentKind::TheoryGrid,
            "simple-mdp" | "mdp" => ExperimentKind::SimpleMdp,
            "mountain-car" => ExperimentKind::MountainCar,
            "converge" => ExperimentKind::Converge,
            "sweep" => ExperimentKind::Sweep,
            _ => return Err(Error::Config(format!("unknown experiment kind `{s}`"))),
        })
    }
}

/// Learner settings shared by every arm.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentSection {
    pub arms: Vec<Variant>,
    pub alpha: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    pub updates_per_step: usize,
    /// Standard deviation of the Gaussian table initialisation.
    pub init_std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimpleMdpSection {
    pub mu: Vec<f64>,
    pub branch_count: usize,
    pub episodes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MountainCarSection {
    /// Reward variances.
    pub sigma2: Vec<f64>,
    pub step_sizes: Vec<f64>,
    pub episodes: usize,
    pub step_cap: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheorySection {
    pub m_max: usize,
    pub n_max: usize,
    pub gamma: f64,
    pub tau: f64,
    /// Monte Carlo samples per cell; 0 skips the oracle columns.
    pub mc_samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergeSection {
    pub g: Vec<GFunction>,
    /// Optional spec file; otherwise a random MDP is generated.
    pub mdp_file: Option<PathBuf>,
    pub states: usize,
    pub actions: usize,
    pub branching: usize,
    pub gamma: f64,
    pub mdp_seed: u64,
    pub rho: f64,
    pub updates: usize,
    pub tolerance: f64,
    pub assumption_trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSection {
    /// Maxmin estimator counts crossed with `simple_mdp.mu`.
    pub n_values: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub runs: usize,
    pub base_seed: u64,
    pub output: Option<PathBuf>,
    /// 0 means available parallelism.
    pub workers: usize,
    /// Write one CSV row per (arm, run, episode).
    pub long_rows: bool,
    pub agent: AgentSection,
    pub simple_mdp: SimpleMdpSection,
    pub mountain_car: MountainCarSection,
    pub theory: TheorySection,
    pub converge: ConvergeSection,
    pub sweep: SweepSection,
}

impl ExperimentConfig {
    /// Defaults for `kind`.
    pub fn new(kind: ExperimentKind) -> Self {
        let mountain = kind == ExperimentKind::MountainCar;
        let arms = if mountain {
            vec![
                Variant::Q,
                Variant::DoubleQ,
                Variant::AveragedQ(2),
                Variant::MaxminQ(2),
                Variant::MaxminQ(4),
                Variant::MaxminQ(6),
                Variant::MaxminQ(8),
            ]
        } else {
            vec![Variant::Q, Variant::DoubleQ, Variant::MaxminQ(8)]
        };
        ExperimentConfig {
            kind,
            runs: match kind {
                ExperimentKind::MountainCar => 20,
                ExperimentKind::Converge => 10,
                ExperimentKind::TheoryGrid => 1,
                ExperimentKind::SimpleMdp | ExperimentKind::Sweep => 500,
            },
            base_seed: 0,
            output: None,
            workers: 0,
            long_rows: true,
            agent: AgentSection {
                arms,
                alpha: 0.01,
                epsilon: 0.1,
                gamma: 1.0,
                buffer_capacity: 100,
                batch_size: 1,
                updates_per_step: 1,
                init_std: 0.01,
            },
            simple_mdp: SimpleMdpSection {
                mu: if kind == ExperimentKind::Sweep {
                    vec![0.1, -0.1]
                } else {
                    vec![0.1]
                },
                branch_count: 8,
                episodes: 2000,
            },
            mountain_car: MountainCarSection {
                sigma2: vec![0.0, 1.0, 10.0, 50.0],
                step_sizes: STEP_SIZE_GRID.to_vec(),
                episodes: 1000,
                step_cap: 5000,
            },
            theory: TheorySection {
                m_max: 8,
                n_max: 8,
                gamma: 1.0,
                tau: 1.0,
                mc_samples: 0,
            },
            converge: ConvergeSection {
                g: GFunction::CATALOG.to_vec(),
                mdp_file: None,
                states: 5,
                actions: 3,
                branching: 3,
                gamma: 0.9,
                mdp_seed: 2024,
                rho: 0.8,
                updates: 200_000,
                tolerance: 0.05,
                assumption_trials: 10_000,
            },
            sweep: SweepSection {
                n_values: vec![1, 2, 4, 6, 8],
            },
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parses config text; `origin` names the source in error messages.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let entries = tokenize(text, origin)?;
        let kind_entry = entries
            .iter()
            .find(|e| e.section == "experiment" && e.key == "kind")
            .ok_or_else(|| Error::Config(format!("{origin}: missing `kind` in [experiment]")))?;
        let kind = kind_entry
            .value
            .parse()
            .map_err(|e: Error| kind_entry.error(origin, e.to_string()))?;
        let mut cfg = ExperimentConfig::new(kind);
        for e in &entries {
            cfg.apply(e).map_err(|msg| e.error(origin, msg))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, e: &Entry) -> std::result::Result<(), String> {
        let v = e.value.as_str();
        match (e.section.as_str(), e.key.as_str()) {
            ("experiment", "kind") => {}
            ("experiment", "runs") => self.runs = num(v)?,
            ("experiment", "base_seed") => self.base_seed = num(v)?,
            ("experiment", "output") => self.output = Some(PathBuf::from(v)),
            ("experiment", "workers") => self.workers = num(v)?,
            ("experiment", "long_rows") => self.long_rows = boolean(v)?,
            ("agent", "arms") => self.agent.arms = list(v)?,
            ("agent", "alpha") => self.agent.alpha = num(v)?,
            ("agent", "epsilon") => self.agent.epsilon = num(v)?,
            ("agent", "gamma") => self.agent.gamma = num(v)?,
            ("agent", "buffer_capacity") => self.agent.buffer_capacity = num(v)?,
            ("agent", "batch_size") => self.agent.batch_size = num(v)?,
            ("agent", "updates_per_step") => self.agent.updates_per_step = num(v)?,
            ("agent", "init_std") => self.agent.init_std = num(v)?,
            ("simple_mdp", "mu") => self.simple_mdp.mu = list(v)?,
            ("simple_mdp", "branch_count") => self.simple_mdp.branch_count = num(v)?,
            ("simple_mdp", "episodes") => self.simple_mdp.episodes = num(v)?,
            ("mountain_car", "sigma2") => self.mountain_car.sigma2 = list(v)?,
            ("mountain_car", "step_sizes") => self.mountain_car.step_sizes = list(v)?,
            ("mountain_car", "episodes") => self.mountain_car.episodes = num(v)?,
            ("mountain_car", "step_cap") => self.mountain_car.step_cap = num(v)?,
            ("theory", "m_max") => self.theory.m_max = num(v)?,
            ("theory", "n_max") => self.theory.n_max = num(v)?,
            ("theory", "gamma") => self.theory.gamma = num(v)?,
            ("theory", "tau") => self.theory.tau = num(v)?,
            ("theory", "mc_samples") => self.theory.mc_samples = num(v)?,
            ("converge", "g") => self.converge.g = list(v)?,
            ("converge", "mdp_file") => self.converge.mdp_file = Some(PathBuf::from(v)),
            ("converge", "states") => self.converge.states = num(v)?,
            ("converge", "actions") => self.converge.actions = num(v)?,
            ("converge", "branching") => self.converge.branching = num(v)?,
            ("converge", "gamma") => self.converge.gamma = num(v)?,
            ("converge", "mdp_seed") => self.converge.mdp_seed = num(v)?,
            ("converge", "rho") => self.converge.rho = num(v)?,
            ("converge", "updates") => self.converge.updates = num(v)?,
            ("converge", "tolerance") => self.converge.tolerance = num(v)?,
            ("converge", "assumption_trials") => self.converge.assumption_trials = num(v)?,
            ("sweep", "n_values") => self.sweep.n_values = list(v)?,
            (section, key) => return Err(format!("unknown key `{key}` in [{section}]")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.runs == 0 {
            return bad("runs must be at least 1".into());
        }
        let labels: Vec<String> = self.agent.arms.iter().map(Variant::to_string).collect();
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return bad(format!("arm `{l}` listed twice"));
            }
        }
        let needs_arms = matches!(self.kind, ExperimentKind::SimpleMdp | ExperimentKind::MountainCar);
        if needs_arms && self.agent.arms.is_empty() {
            return bad("no agent arms".into());
        }
        if self.kind == ExperimentKind::MountainCar {
            if let Some(v) = self.agent.arms.iter().find(|v| matches!(v, Variant::EnsembleQ(_))) {
                return bad(format!("arm `{v}` is not part of the Mountain Car study"));
            }
            if self.mountain_car.sigma2.is_empty() || self.mountain_car.step_sizes.is_empty() {
                return bad("mountain_car needs at least one sigma2 and one step size".into());
            }
            if self.mountain_car.sigma2.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
                return bad("sigma2 values must be finite and non-negative".into());
            }
        }
        if matches!(self.kind, ExperimentKind::SimpleMdp | ExperimentKind::Sweep) {
            if self.simple_mdp.mu.is_empty() {
                return bad("simple_mdp needs at least one mu".into());
            }
            if self.simple_mdp.mu.contains(&0.0) {
                return bad("mu = 0 has no unique optimal action".into());
            }
        }
        if self.kind == ExperimentKind::Sweep && self.sweep.n_values.contains(&0) {
            return bad("sweep n_values must be positive".into());
        }
        if self.kind == ExperimentKind::Converge && self.converge.g.is_empty() {
            return bad("converge needs at least one G function".into());
        }
        let episodes = [self.simple_mdp.episodes, self.mountain_car.episodes];
        if episodes.contains(&0) {
            return bad("episodes must be at least 1".into());
        }
        let agent = crate::agents::AgentConfig {
            variant: Variant::Q,
            alpha: self.agent.alpha,
            epsilon: self.agent.epsilon,
            gamma: self.agent.gamma,
            buffer_capacity: self.agent.buffer_capacity,
            batch_size: self.agent.batch_size,
            updates_per_step: self.agent.updates_per_step,
        };
        agent.validate()?;
        for &alpha in &self.mountain_car.step_sizes {
            crate::agents::AgentConfig { alpha, ..agent }.validate()?;
        }
        Ok(())
    }

    /// Full normalised text; parses back to `self`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let join = |xs: &[String]| xs.join(", ");
        let fmt_list = |xs: &[f64]| join(&xs.iter().map(|x| x.to_string()).collect::<Vec<_>>());
        let mut section = |name: &str, items: Vec<(&str, String)>| {
            let _ = writeln!(out, "[{name}]");
            for (k, v) in items {
                let _ = writeln!(out, "{k} = {v}");
            }
            out.push('\n');
        };
        let mut experiment = vec![
            ("kind", self.kind.as_str().to_string()),
            ("runs", self.runs.to_string()),
            ("base_seed", self.base_seed.to_string()),
            ("workers", self.workers.to_string()),
            ("long_rows", self.long_rows.to_string()),
        ];
        if let Some(p) = &self.output {
            experiment.push(("output", p.display().to_string()));
        }
        section("experiment", experiment);
        let a = &self.agent;
        section(
            "agent",
            vec![
                ("arms", join(&a.arms.iter().map(Variant::to_string).collect::<Vec<_>>())),
                ("alpha", a.alpha.to_string()),
                ("epsilon", a.epsilon.to_string()),
                ("gamma", a.gamma.to_string()),
                ("buffer_capacity", a.buffer_capacity.to_string()),
                ("batch_size", a.batch_size.to_string()),
                ("updates_per_step", a.updates_per_step.to_string()),
                ("init_std", a.init_std.to_string()),
            ],
        );
        let s = &self.simple_mdp;
        section(
            "simple_mdp",
            vec![
                ("mu", fmt_list(&s.mu)),
                ("branch_count", s.branch_count.to_string()),
                ("episodes", s.episodes.to_string()),
            ],
        );
        let m = &self.mountain_car;
        section(
            "mountain_car",
            vec![
                ("sigma2", fmt_list(&m.sigma2)),
                ("step_sizes", fmt_list(&m.step_sizes)),
                ("episodes", m.episodes.to_string()),
                ("step_cap", m.step_cap.to_string()),
            ],
        );
        let t = &self.theory;
        section(
            "theory",
            vec![
                ("m_max", t.m_max.to_string()),
                ("n_max", t.n_max.to_string()),
                ("gamma", t.gamma.to_string()),
                ("tau", t.tau.to_string()),
                ("mc_samples", t.mc_samples.to_string()),
            ],
        );
        let c = &self.converge;
        let mut converge = vec![
            ("g", join(&c.g.iter().map(|g| g.name().to_string()).collect::<Vec<_>>())),
            ("states", c.states.to_string()),
            ("actions", c.actions.to_string()),
            ("branching", c.branching.to_string()),
            ("gamma", c.gamma.to_string()),
            ("mdp_seed", c.mdp_seed.to_string()),
            ("rho", c.rho.to_string()),
            ("updates", c.updates.to_string()),
            ("tolerance", c.tolerance.to_string()),
            ("assumption_trials", c.assumption_trials.to_string()),
        ];
        if let Some(p) = &c.mdp_file {
            converge.push(("mdp_file", p.display().to_string()));
        }
        section("converge", converge);
        section(
            "sweep",
            vec![(
                "n_values",
                join(&self.sweep.n_values.iter().map(usize::to_string).collect::<Vec<_>>()),
            )],
        );
        out.truncate(out.trim_end().len());
        out.push('\n');
        out
    }
}

struct Entry {
    section: String,
    key: String,
    value: String,
    line: usize,
}

impl Entry {
    fn error(&self, origin: &str, message: impl Into<String>) -> Error {
        Error::Parse {
            path: origin.to_string(),
            line: self.line,
            message: message.into(),
        }
    }
}

fn tokenize(text: &str, origin: &str) -> Result<Vec<Entry>> {
    const SECTIONS: [&str; 7] = [
        "experiment",
        "agent",
        "simple_mdp",
        "mountain_car",
        "theory",
        "converge",
        "sweep",
    ];
    let mut section: Option<String> = None;
    let mut entries: Vec<Entry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |message: String| Error::Parse {
            path: origin.to_string(),
            line,
            message,
        };
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| err(format!("unterminated section header `{content}`")))?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(err(format!("unknown section [{name}]")));
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, got `{content}`")))?;
        let section = section
            .clone()
            .ok_or_else(|| err("key outside of any [section]".into()))?;
        let key = key.trim().to_string();
        if entries.iter().any(|e| e.section == section && e.key == key) {
            return Err(err(format!("duplicate key `{key}` in [{section}]")));
        }
        entries.push(Entry {
            section,
            key,
            value: value.trim().to_string(),
            line,
        });
    }
    Ok(entries)
}

fn num<T: FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("cannot parse `{v}`"))
}

fn boolean(v: &str) -> std::result::Result<bool, String> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected true or false, got `{v}`")),
    }
}

fn list<T: FromStr>(v: &str) -> std::result::Result<Vec<T>, String> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| format!("cannot parse list item `{s}`")))
        .collect()
}
