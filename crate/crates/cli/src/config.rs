//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use semilinear::driver::RunConfig;
use semilinear::newton::{StepRule, StepSizeStrategy};
use semilinear::{InitialGuess, Mesh, Problem, SpikeTrain};

use crate::CliError;

const KEYS: &[&str] = &[
    "problem",
    "epsilon",
    "alpha",
    "beta",
    "strategy",
    "tau",
    "gamma",
    "theta",
    "theta_mark",
    "mesh_n",
    "initial_guess",
    "guess_value",
    "spike_count",
    "spike_half_width",
    "stop_tolerance",
    "max_dof",
    "max_iterations",
    "records_csv",
    "summary_json",
    "solution_dump",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    LinearReaction,
    Fisher,
    GinzburgLandau,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::LinearReaction => "linear_reaction",
            ProblemKind::Fisher => "fisher",
            ProblemKind::GinzburgLandau => "ginzburg_landau",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub problem: ProblemKind,
    pub epsilon: f64,
    pub alpha: f64,
    pub beta: f64,
    pub strategy: StepRule,
    pub tau: f64,
    pub gamma: f64,
    pub theta: f64,
    pub theta_mark: f64,
    /// Subintervals per side of the initial uniform mesh.
    pub mesh_n: usize,
    pub initial_guess: InitialGuess,
    pub stop_tolerance: f64,
    pub max_dof: usize,
    pub max_iterations: usize,
    pub records_csv: PathBuf,
    pub summary_json: PathBuf,
    pub solution_dump: Option<PathBuf>,
}

fn config_error(key: &str, message: impl Into<String>) -> CliError {
    CliError::Config { key: key.to_string(), message: message.into() }
}

struct Entries {
    map: BTreeMap<String, String>,
}

impl Entries {
    fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    fn required(&self, key: &str) -> Result<&str, CliError> {
        self.raw(key).ok_or_else(|| config_error(key, "missing required key"))
    }

    fn number<T: std::str::FromStr>(&self, key: &str, default: Option<T>) -> Result<T, CliError> {
        match (self.raw(key), default) {
            (Some(v), _) => v.parse().map_err(|_| config_error(key, format!("cannot parse {v:?} as a number"))),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(config_error(key, "missing required key")),
        }
    }
}

impl CliConfig {
    /// Parses configuration text. Relative paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<CliConfig, CliError> {
        let mut map = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                config_error(line, format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(config_error(key, "unknown key"));
            }
            if map.insert(key.to_string(), value.to_string()).is_some() {
                return Err(config_error(key, "duplicate key"));
            }
        }
        let e = Entries { map };

        let problem = match e.required("problem")? {
            "linear_reaction" => ProblemKind::LinearReaction,
            "fisher" => ProblemKind::Fisher,
            "ginzburg_landau" => ProblemKind::GinzburgLandau,
            other => return Err(config_error("problem", format!("unknown problem {other:?}"))),
        };
        for key in ["alpha", "beta"] {
            if problem != ProblemKind::Fisher && e.raw(key).is_some() {
                return Err(config_error(key, "only valid for the fisher problem"));
            }
        }
        let strategy = match e.required("strategy")? {
            "simple" => StepRule::Simple,
            "improved" => StepRule::Improved,
            other => return Err(config_error("strategy", format!("unknown strategy {other:?}"))),
        };
        let initial_guess = match e.required("initial_guess")? {
            "spike" => InitialGuess::Spike(SpikeTrain::evenly(
                e.number("spike_count", Some(3))?,
                e.number("spike_half_width", Some(0.2))?,
            )),
            "sign_x2" => InitialGuess::SignX2,
            "const" => InitialGuess::Const(e.number("guess_value", None)?),
            other => return Err(config_error("initial_guess", format!("unknown initial guess {other:?}"))),
        };
        let path = |key: &str| -> Result<Option<PathBuf>, CliError> {
            Ok(e.raw(key).map(|v| base.join(v)))
        };
        let config = CliConfig {
            problem,
            epsilon: e.number("epsilon", None)?,
            alpha: e.number("alpha", Some(0.0))?,
            beta: e.number("beta", Some(0.0))?,
            strategy,
            tau: e.number("tau", None)?,
            gamma: e.number("gamma", Some(0.5))?,
            theta: e.number("theta", None)?,
            theta_mark: e.number("theta_mark", Some(0.5))?,
            mesh_n: e.number("mesh_n", None)?,
            initial_guess,
            stop_tolerance: e.number("stop_tolerance", None)?,
            max_dof: e.number("max_dof", None)?,
            max_iterations: e.number("max_iterations", None)?,
            records_csv: path("records_csv")?.ok_or_else(|| config_error("records_csv", "missing required key"))?,
            summary_json: path("summary_json")?.ok_or_else(|| config_error("summary_json", "missing required key"))?,
            solution_dump: path("solution_dump")?,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<CliConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
        let base = path.parent().unwrap_or(Path::new("."));
        CliConfig::parse(&text, base)
    }

    fn validate(&self) -> Result<(), CliError> {
        self.problem()?;
        self.step_strategy()?;
        self.run_config()?;
        if self.mesh_n == 0 {
            return Err(config_error("mesh_n", "must be at least 1"));
        }
        if let InitialGuess::Spike(train) = &self.initial_guess {
            if !(train.half_width > 0.0) {
                return Err(config_error("spike_half_width", "must be positive"));
            }
        }
        match (&self.initial_guess, self.problem) {
            (InitialGuess::Spike(_), ProblemKind::GinzburgLandau) => {
                Err(config_error("initial_guess", "spike needs a one-dimensional problem"))
            }
            (InitialGuess::SignX2, ProblemKind::LinearReaction | ProblemKind::Fisher) => {
                Err(config_error("initial_guess", "sign_x2 needs a two-dimensional problem"))
            }
            _ => Ok(()),
        }
    }

    pub fn problem(&self) -> Result<Problem, CliError> {
        let built = match self.problem {
            ProblemKind::LinearReaction => Problem::linear_reaction(self.epsilon),
            ProblemKind::Fisher => Problem::fisher(self.epsilon, self.alpha, self.beta),
            ProblemKind::GinzburgLandau => Problem::ginzburg_landau(self.epsilon),
        };
        built.map_err(|e| config_error("epsilon", e.to_string()))
    }

    pub fn step_strategy(&self) -> Result<StepSizeStrategy, CliError> {
        StepSizeStrategy::new(self.strategy, self.tau, self.gamma).map_err(|e| {
            let key = if self.tau > 0.0 && self.tau.is_finite() { "gamma" } else { "tau" };
            config_error(key, e.to_string())
        })
    }

    pub fn run_config(&self) -> Result<RunConfig, CliError> {
        let config = RunConfig {
            theta: self.theta,
            theta_mark: self.theta_mark,
            stop_tolerance: self.stop_tolerance,
            max_dof: self.max_dof,
            max_iterations: self.max_iterations,
            ..RunConfig::new(self.step_strategy()?)
        };
        if let Err(e) = config.validate() {
            let msg = e.to_string();
            let key = ["theta_mark", "theta", "stop_tolerance", "max_dof", "max_iterations"]
                .into_iter()
                .find(|k| msg.contains(k))
                .unwrap_or("theta");
            return Err(config_error(key, msg));
        }
        Ok(config)
    }

    pub fn initial_mesh(&self) -> Result<Mesh, CliError> {
        let problem = self.problem()?;
        problem.domain().uniform_mesh(self.mesh_n).map_err(|e| config_error("mesh_n", e.to_string()))
    }
}
