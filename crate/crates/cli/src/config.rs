//! Run configuration: JSON file mirroring the library's alignment
//! configuration, with every field overridable by a CLI flag of the same
//! name. Flags win over the file; the file wins over built-in defaults.

use crate::error::{io_error, validation, Result};
use hawkes_align::align::{AlignmentConfig, SgdConfig};
use hawkes_align::ot::TransportConfig;
use hawkes_align::AlignmentConfigF64;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::PathBuf;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub outer_rounds: Option<usize>,
    pub hp_steps: Option<usize>,
    pub learning_rate: Option<f64>,
    pub sgd: Option<SgdFile>,
    pub seed: Option<u64>,
    pub warm_start: Option<bool>,
    pub smoothing: Option<f64>,
    pub freeze_infectivity: Option<bool>,
    pub beta: Option<f64>,
    pub transport: Option<TransportFile>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SgdFile {
    pub enabled: bool,
    pub batch_size: Option<usize>,
    pub history_window: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransportFile {
    pub tau: Option<f64>,
    pub outer_max_iters: Option<usize>,
    pub outer_tol: Option<f64>,
    pub sinkhorn_max_iters: Option<usize>,
    pub sinkhorn_tol: Option<f64>,
}

/// Flags shared by `align` and `bench`; names mirror the config file.
#[derive(Debug, Clone, clap::Args)]
pub struct ConfigFlags {
    /// JSON config file; individual flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Weight of the relational term (0 = features only, 1 = structure only).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Regularizer weight; defaults to 0.01 x total event count.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Proximal weight; defaults to 0.1 x mean initial fused cost.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Alternating rounds.
    #[arg(long)]
    pub outer_rounds: Option<usize>,
    /// Gradient steps per round.
    #[arg(long)]
    pub hp_steps: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Master seed for every stochastic component.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Warm-start each round's transport solve from the previous plan.
    #[arg(long)]
    pub warm_start: Option<bool>,
    /// Additive smoothing of the empirical marginals.
    #[arg(long)]
    pub smoothing: Option<f64>,
    /// Hold infectivity matrices fixed during fitting.
    #[arg(long)]
    pub freeze_infectivity: Option<bool>,
    /// Exponential kernel decay rate.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Enable mini-batch gradients.
    #[arg(long)]
    pub sgd_enabled: Option<bool>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub history_window: Option<usize>,
    /// Transport solver iteration cap.
    #[arg(long)]
    pub outer_max_iters: Option<usize>,
    #[arg(long)]
    pub outer_tol: Option<f64>,
    #[arg(long)]
    pub sinkhorn_max_iters: Option<usize>,
    #[arg(long)]
    pub sinkhorn_tol: Option<f64>,
}

/// Serializable snapshot of a fully resolved configuration (recorded in
/// run manifests).
#[derive(Debug, Serialize)]
pub struct ConfigSnapshot {
    pub alpha: f64,
    pub gamma: Option<f64>,
    pub outer_rounds: usize,
    pub hp_steps: usize,
    pub learning_rate: f64,
    pub sgd: SgdSnapshot,
    pub seed: u64,
    pub warm_start: bool,
    pub smoothing: f64,
    pub freeze_infectivity: bool,
    pub beta: f64,
    pub transport: TransportSnapshot,
}

#[derive(Debug, Serialize)]
pub struct SgdSnapshot {
    pub enabled: bool,
    pub batch_size: usize,
    pub history_window: usize,
}

#[derive(Debug, Serialize)]
pub struct TransportSnapshot {
    pub tau: Option<f64>,
    pub outer_max_iters: usize,
    pub outer_tol: f64,
    pub sinkhorn_max_iters: usize,
    pub sinkhorn_tol: f64,
}

pub fn snapshot(config: &AlignmentConfigF64) -> ConfigSnapshot {
    let sgd_defaults = SgdConfig::default();
    ConfigSnapshot {
        alpha: config.alpha,
        gamma: config.gamma,
        outer_rounds: config.outer_rounds,
        hp_steps: config.hp_steps,
        learning_rate: config.learning_rate,
        sgd: SgdSnapshot {
            enabled: config.sgd.is_some(),
            batch_size: config
                .sgd
                .as_ref()
                .map(|s| s.batch_size)
                .unwrap_or(sgd_defaults.batch_size),
            history_window: config
                .sgd
                .as_ref()
                .map(|s| s.history_window)
                .unwrap_or(sgd_defaults.history_window),
        },
        seed: config.seed,
        warm_start: config.warm_start,
        smoothing: config.smoothing,
        freeze_infectivity: config.freeze_infectivity,
        beta: config.beta,
        transport: TransportSnapshot {
            tau: config.transport.tau,
            outer_max_iters: config.transport.outer_max_iters,
            outer_tol: config.transport.outer_tol,
            sinkhorn_max_iters: config.transport.sinkhorn_max_iters,
            sinkhorn_tol: config.transport.sinkhorn_tol,
        },
    }
}

impl ConfigFlags {
    /// Defaults, overlaid with the config file (if any), overlaid with the
    /// flags.
    pub fn resolve(&self) -> Result<AlignmentConfigF64> {
        let file: ConfigFile = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
                serde_json::from_str(&text)
                    .map_err(|e| validation(format!("{}: {e}", path.display())))?
            }
            None => ConfigFile::default(),
        };

        let mut cfg = AlignmentConfig::<f64>::default();
        apply_file(&mut cfg, &file);
        self.apply_flags(&mut cfg);
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply_flags(&self, cfg: &mut AlignmentConfigF64) {
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = self.gamma {
            cfg.gamma = Some(v);
        }
        if let Some(v) = self.outer_rounds {
            cfg.outer_rounds = v;
        }
        if let Some(v) = self.hp_steps {
            cfg.hp_steps = v;
        }
        if let Some(v) = self.learning_rate {
            cfg.learning_rate = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.warm_start {
            cfg.warm_start = v;
        }
        if let Some(v) = self.smoothing {
            cfg.smoothing = v;
        }
        if let Some(v) = self.freeze_infectivity {
            cfg.freeze_infectivity = v;
        }
        if let Some(v) = self.beta {
            cfg.beta = v;
        }
        match self.sgd_enabled {
            Some(true) => {
                let mut sgd = cfg.sgd.clone().unwrap_or_default();
                if let Some(b) = self.batch_size {
                    sgd.batch_size = b;
                }
                if let Some(k) = self.history_window {
                    sgd.history_window = k;
                }
                cfg.sgd = Some(sgd);
            }
            Some(false) => cfg.sgd = None,
            None => {
                if let Some(sgd) = cfg.sgd.as_mut() {
                    if let Some(b) = self.batch_size {
                        sgd.batch_size = b;
                    }
                    if let Some(k) = self.history_window {
                        sgd.history_window = k;
                    }
                }
            }
        }
        if let Some(v) = self.tau {
            cfg.transport.tau = Some(v);
        }
        if let Some(v) = self.outer_max_iters {
            cfg.transport.outer_max_iters = v;
        }
        if let Some(v) = self.outer_tol {
            cfg.transport.outer_tol = v;
        }
        if let Some(v) = self.sinkhorn_max_iters {
            cfg.transport.sinkhorn_max_iters = v;
        }
        if let Some(v) = self.sinkhorn_tol {
            cfg.transport.sinkhorn_tol = v;
        }
    }
}

fn apply_file(cfg: &mut AlignmentConfigF64, file: &ConfigFile) {
    if let Some(v) = file.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = file.gamma {
        cfg.gamma = Some(v);
    }
    if let Some(v) = file.outer_rounds {
        cfg.outer_rounds = v;
    }
    if let Some(v) = file.hp_steps {
        cfg.hp_steps = v;
    }
    if let Some(v) = file.learning_rate {
        cfg.learning_rate = v;
    }
    if let Some(v) = file.seed {
        cfg.seed = v;
    }
    if let Some(v) = file.warm_start {
        cfg.warm_start = v;
    }
    if let Some(v) = file.smoothing {
        cfg.smoothing = v;
    }
    if let Some(v) = file.freeze_infectivity {
        cfg.freeze_infectivity = v;
    }
    if let Some(v) = file.beta {
        cfg.beta = v;
    }
    if let Some(sgd) = &file.sgd {
        if sgd.enabled {
            let defaults = SgdConfig::default();
            cfg.sgd = Some(SgdConfig {
                batch_size: sgd.batch_size.unwrap_or(defaults.batch_size),
                history_window: sgd.history_window.unwrap_or(defaults.history_window),
            });
        } else {
            cfg.sgd = None;
        }
    }
    if let Some(t) = &file.transport {
        let defaults = TransportConfig::<f64>::default();
        cfg.transport = TransportConfig {
            tau: t.tau,
            outer_max_iters: t.outer_max_iters.unwrap_or(defaults.outer_max_iters),
            outer_tol: t.outer_tol.unwrap_or(defaults.outer_tol),
            sinkhorn_max_iters: t.sinkhorn_max_iters.unwrap_or(defaults.sinkhorn_max_iters),
            sinkhorn_tol: t.sinkhorn_tol.unwrap_or(defaults.sinkhorn_tol),
        };
    }
}
