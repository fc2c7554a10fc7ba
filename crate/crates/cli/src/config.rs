use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use bclab_core::{Alpha, ModelParams, SequenceSpec};
use clap::{Args, ValueEnum};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    PhaseDiagram,
    Magnetize,
    FiniteSize,
    Mc,
    SequenceRun,
    MdpCheck,
    WeakLimit,
    Conjectures,
}

impl CommandName {
    pub fn as_str(self) -> &'static str {
        match self {
            CommandName::PhaseDiagram => "phase-diagram",
            CommandName::Magnetize => "magnetize",
            CommandName::FiniteSize => "finite-size",
            CommandName::Mc => "mc",
            CommandName::SequenceRun => "sequence-run",
            CommandName::MdpCheck => "mdp-check",
            CommandName::WeakLimit => "weak-limit",
            CommandName::Conjectures => "conjectures",
        }
    }

    /// (required, optional) keys.
    fn keys(self) -> (&'static [&'static str], &'static [&'static str]) {
        match self {
            CommandName::PhaseDiagram => (&["beta_min", "beta_max", "points", "output_path"], &[]),
            CommandName::Magnetize => (&["params"], &["output_path"]),
            CommandName::FiniteSize => (&["params", "n_list", "output_path"], &[]),
            CommandName::Mc => (
                &["params", "n_list", "sweeps", "seed", "output_path"],
                &["burn_in"],
            ),
            CommandName::SequenceRun => (
                &["spec", "n_list", "output_path"],
                &["alpha", "estimator", "sweeps", "burn_in", "seed"],
            ),
            CommandName::MdpCheck => (&["spec", "n_list", "a", "output_path"], &["alpha"]),
            CommandName::WeakLimit => (&["spec", "n_list", "output_path"], &["alpha"]),
            CommandName::Conjectures => (&["h_list", "output_path"], &[]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorName {
    Exact,
    Mc,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsDoc {
    pub beta: f64,
    pub kappa: f64,
}

/// JSON experiment configuration; every key mirrors a command-line flag.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Option<CommandName>,
    pub spec: Option<serde_json::Value>,
    pub params: Option<ParamsDoc>,
    pub n_list: Option<Vec<u64>>,
    pub alpha: Option<Alpha>,
    pub output_path: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub beta_min: Option<f64>,
    pub beta_max: Option<f64>,
    pub points: Option<usize>,
    pub a: Option<f64>,
    pub sweeps: Option<usize>,
    pub burn_in: Option<usize>,
    pub h_list: Option<Vec<f64>>,
    pub estimator: Option<EstimatorName>,
}

/// Flags shared by every subcommand.
#[derive(Debug, Default, Clone, Args)]
pub struct Flags {
    /// JSON experiment configuration; flags take precedence over its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Sequence specification file (JSON).
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub kappa: Option<f64>,
    /// Comma-separated, strictly increasing list of n.
    #[arg(long = "n", value_delimiter = ',')]
    pub n_list: Option<Vec<u64>>,
    /// Speed exponent; a rational such as `1/2` is compared exactly.
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(short = 'o', long = "output")]
    pub output_path: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (falls back to BCLAB_THREADS, then all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub beta_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub beta_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    /// Tail threshold for moderate-deviation estimates.
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    #[arg(long)]
    pub sweeps: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    /// Comma-separated, strictly decreasing step sizes.
    #[arg(long = "h", value_delimiter = ',')]
    pub h_list: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub estimator: Option<EstimatorName>,
}

/// Fully merged settings for one command.
#[derive(Debug, Default)]
pub struct Settings {
    pub spec: Option<SequenceSpec>,
    pub params: Option<ModelParams>,
    pub n_list: Option<Vec<u64>>,
    pub output_path: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub beta_min: Option<f64>,
    pub beta_max: Option<f64>,
    pub points: Option<usize>,
    pub a: Option<f64>,
    pub sweeps: Option<usize>,
    pub burn_in: Option<usize>,
    pub h_list: Option<Vec<f64>>,
    pub estimator: Option<EstimatorName>,
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("config: cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("config: invalid {}", path.display()))
}

fn parse_spec(value: serde_json::Value, alpha: Option<Alpha>) -> Result<SequenceSpec> {
    let spec: SequenceSpec =
        serde_json::from_value(value).map_err(|e| anyhow::anyhow!("spec: {e}"))?;
    match alpha {
        Some(a) => spec.with_alpha(a).context("alpha"),
        None => Ok(spec),
    }
}

impl Settings {
    pub fn resolve(command: CommandName, flags: Flags) -> Result<Self> {
        let cfg = match &flags.config {
            Some(p) => load_config(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(c) = cfg.command {
            if c != command {
                bail!(
                    "command: config is for `{}` but `{}` was invoked",
                    c.as_str(),
                    command.as_str()
                );
            }
        }
        let mut present = BTreeSet::new();
        let mut mark = |key: &'static str, is: bool| {
            if is {
                present.insert(key);
            }
        };
        mark("spec", flags.spec.is_some() || cfg.spec.is_some());
        let has_beta = flags.beta.is_some() || cfg.params.is_some();
        let has_kappa = flags.kappa.is_some() || cfg.params.is_some();
        if has_beta != has_kappa {
            bail!("params: both beta and kappa are required");
        }
        mark("params", has_beta);
        mark("n_list", flags.n_list.is_some() || cfg.n_list.is_some());
        mark("alpha", flags.alpha.is_some() || cfg.alpha.is_some());
        mark("output_path", flags.output_path.is_some() || cfg.output_path.is_some());
        mark("seed", flags.seed.is_some() || cfg.seed.is_some());
        mark("beta_min", flags.beta_min.is_some() || cfg.beta_min.is_some());
        mark("beta_max", flags.beta_max.is_some() || cfg.beta_max.is_some());
        mark("points", flags.points.is_some() || cfg.points.is_some());
        mark("a", flags.a.is_some() || cfg.a.is_some());
        mark("sweeps", flags.sweeps.is_some() || cfg.sweeps.is_some());
        mark("burn_in", flags.burn_in.is_some() || cfg.burn_in.is_some());
        mark("h_list", flags.h_list.is_some() || cfg.h_list.is_some());
        mark("estimator", flags.estimator.is_some() || cfg.estimator.is_some());

        let (required, optional) = command.keys();
        for key in required {
            if !present.contains(key) {
                bail!("{key}: required by `{}`", command.as_str());
            }
        }
        for key in &present {
            if !required.contains(key) && !optional.contains(key) {
                bail!("{key}: not accepted by `{}`", command.as_str());
            }
        }

        let alpha = match flags.alpha {
            Some(s) => Some(s.parse::<Alpha>().context("alpha")?),
            None => cfg.alpha,
        };
        let spec = match (flags.spec, cfg.spec) {
            (Some(path), _) => {
                let text = std::fs::read_to_string(&path)
                    .with_context(|| format!("spec: cannot read {}", path.display()))?;
                let value: serde_json::Value =
                    serde_json::from_str(&text).map_err(|e| anyhow::anyhow!("spec: {e}"))?;
                Some(parse_spec(value, alpha)?)
            }
            (None, Some(v)) => Some(parse_spec(v, alpha)?),
            (None, None) => None,
        };
        let params = if has_beta {
            let beta = flags.beta.or(cfg.params.map(|p| p.beta)).expect("checked");
            let kappa = flags.kappa.or(cfg.params.map(|p| p.kappa)).expect("checked");
            Some(ModelParams::new(beta, kappa).context("params")?)
        } else {
            None
        };
        let n_list = flags.n_list.or(cfg.n_list);
        if let Some(ns) = &n_list {
            if ns.is_empty() {
                bail!("n_list: must not be empty");
            }
            if ns.contains(&0) {
                bail!("n_list: entries must be >= 1");
            }
            if ns.windows(2).any(|w| w[1] <= w[0]) {
                bail!("n_list: must be strictly increasing");
            }
        }
        let threads = flags.threads.or(cfg.threads);
        if threads == Some(0) {
            bail!("threads: must be >= 1");
        }
        let points = flags.points.or(cfg.points);
        if points.is_some_and(|p| p < 2) {
            bail!("points: must be >= 2");
        }
        Ok(Settings {
            spec,
            params,
            n_list,
            output_path: flags.output_path.or(cfg.output_path),
            seed: flags.seed.or(cfg.seed),
            threads,
            beta_min: flags.beta_min.or(cfg.beta_min),
            beta_max: flags.beta_max.or(cfg.beta_max),
            points,
            a: flags.a.or(cfg.a),
            sweeps: flags.sweeps.or(cfg.sweeps),
            burn_in: flags.burn_in.or(cfg.burn_in),
            h_list: flags.h_list.or(cfg.h_list),
            estimator: flags.estimator.or(cfg.estimator),
        })
    }
}

/// Value of a key that [`Settings::resolve`] has already checked is present.
pub fn req<T>(v: Option<T>, key: &str) -> Result<T> {
    v.ok_or_else(|| anyhow::anyhow!("{key}: missing"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn required_and_rejected_keys() {
        let flags = Flags {
            beta: Some(1.0),
            kappa: Some(1.5),
            ..Default::default()
        };
        assert!(Settings::resolve(CommandName::Magnetize, flags.clone()).is_ok());
        let err = Settings::resolve(CommandName::FiniteSize, flags.clone()).unwrap_err();
        assert!(err.to_string().contains("n_list"));
        let extra = Flags {
            seed: Some(3),
            ..flags
        };
        let err = Settings::resolve(CommandName::Magnetize, extra).unwrap_err();
        assert!(err.to_string().starts_with("seed"));
    }

    #[test]
    fn n_list_must_increase() {
        let flags = Flags {
            beta: Some(1.0),
            kappa: Some(1.5),
            n_list: Some(vec![10, 10]),
            output_path: Some("x.csv".into()),
            ..Default::default()
        };
        let err = Settings::resolve(CommandName::FiniteSize, flags).unwrap_err();
        assert!(err.to_string().contains("strictly increasing"));
    }

    #[test]
    fn config_keys_are_strict() {
        let cfg: std::result::Result<ExperimentConfig, _> =
            serde_json::from_str(r#"{"command":"magnetize","bogus":1}"#);
        assert!(cfg.is_err());
        let cfg: ExperimentConfig = serde_json::from_str(
            r#"{"command":"sequence-run","spec":{"kind":"seq1","alpha":0.3,"beta":1.0,"b":0,"k":1.0},
                "n_list":[10,20],"output_path":"r.csv","alpha":"1/2"}"#,
        )
        .unwrap();
        assert_eq!(cfg.command, Some(CommandName::SequenceRun));
    }
}
