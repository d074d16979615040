use std::fs;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use doe_core::envelope::{EnvelopePolicy, Mode, Policies, PolicyPair};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Anrc,
    Prc,
    BandedPrc,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Anrc => Mode::Anrc,
            ModeArg::Prc => Mode::Prc,
            ModeArg::BandedPrc => Mode::BandedPrc,
        }
    }
}

/// Global policy flags, or a JSON policy file with per-bus overrides.
#[derive(Args, Debug, Clone)]
pub struct PolicyArgs {
    /// JSON file with `default` and `overrides`; replaces all other policy flags
    #[arg(long, value_name = "FILE")]
    pub policies: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "anrc")]
    pub p_mode: ModeArg,
    #[arg(long, value_enum, default_value = "prc")]
    pub q_mode: ModeArg,
    #[arg(long, default_value_t = 0.92)]
    pub u_min: f64,
    #[arg(long, default_value_t = 1.08)]
    pub u_max: f64,
    #[arg(long, default_value_t = 0.04)]
    pub delta_perm: f64,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    pub p_min: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub p_max: f64,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    pub q_min: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub q_max: f64,
}

impl PolicyArgs {
    pub fn resolve(&self) -> CliResult<Policies> {
        let policies = match &self.policies {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
            }
            None => {
                let policy = |mode: ModeArg, x_min, x_max| EnvelopePolicy {
                    u_min: self.u_min,
                    u_max: self.u_max,
                    delta_perm: self.delta_perm,
                    x_min,
                    x_max,
                    mode: mode.into(),
                };
                Policies::uniform(PolicyPair {
                    p: policy(self.p_mode, self.p_min, self.p_max),
                    q: policy(self.q_mode, self.q_min, self.q_max),
                })
            }
        };
        policies.validate().map_err(CliError::input)?;
        Ok(policies)
    }
}
