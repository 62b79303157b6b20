use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analytic::static_optimal_unchecked;
use crate::channel::Environment;
use crate::error::{OsaError, Result};
use crate::ssp::{evaluate_path, heuristic_policy, solve_dynamic_optimal, PolicyPath};

/// The four policy families compared throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    MaxTp,
    StaticOpt,
    DynamicOpt,
    Heuristic,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [
        PolicyKind::DynamicOpt,
        PolicyKind::Heuristic,
        PolicyKind::StaticOpt,
        PolicyKind::MaxTp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::MaxTp => "max-tp",
            PolicyKind::StaticOpt => "static-opt",
            PolicyKind::DynamicOpt => "dynamic-opt",
            PolicyKind::Heuristic => "heuristic",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = OsaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "max-tp" => Ok(PolicyKind::MaxTp),
            "static-opt" => Ok(PolicyKind::StaticOpt),
            "dynamic-opt" => Ok(PolicyKind::DynamicOpt),
            "heuristic" => Ok(PolicyKind::Heuristic),
            _ => Err(OsaError::InvalidConfig(format!("unknown policy `{s}`"))),
        }
    }
}

/// The path `kind` follows for a `file_bits` file when `env` is taken at
/// face value, with its expected transfer time under `env`.
pub fn plan(env: &Environment, kind: PolicyKind, file_bits: u64) -> Result<(PolicyPath, f64)> {
    if file_bits == 0 {
        return Err(OsaError::EmptyFile);
    }
    match kind {
        PolicyKind::MaxTp => {
            let path = PolicyPath::constant(env, env.max_tp_channel(), file_bits)?;
            let t = evaluate_path(env, &path)?;
            Ok((path, t))
        }
        PolicyKind::StaticOpt => {
            let (id, _) = static_optimal_unchecked(env, file_bits);
            let path = PolicyPath::constant(env, id, file_bits)?;
            let t = evaluate_path(env, &path)?;
            Ok((path, t))
        }
        PolicyKind::DynamicOpt => {
            let sol = solve_dynamic_optimal(env, file_bits)?;
            Ok((sol.path, sol.value))
        }
        PolicyKind::Heuristic => heuristic_policy(env, file_bits),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::tests::toy;
    use crate::channel::ChannelId;

    #[test]
    fn names_round_trip() {
        for k in PolicyKind::ALL {
            assert_eq!(k.name().parse::<PolicyKind>().unwrap(), k);
        }
        assert_eq!(
            "dynamic_opt".parse::<PolicyKind>().unwrap(),
            PolicyKind::DynamicOpt
        );
        assert!("greedy".parse::<PolicyKind>().is_err());
    }

    #[test]
    fn toy_plans() {
        let env = toy();
        let (p, _) = plan(&env, PolicyKind::MaxTp, 5).unwrap();
        assert_eq!(p.choices(), &[ChannelId(1), ChannelId(1)]);
        let (p, _) = plan(&env, PolicyKind::StaticOpt, 5).unwrap();
        assert_eq!(p.choices(), &[ChannelId(2); 5]);
        let (_, dyn_t) = plan(&env, PolicyKind::DynamicOpt, 5).unwrap();
        let (_, heu_t) = plan(&env, PolicyKind::Heuristic, 5).unwrap();
        assert!((dyn_t - heu_t).abs() < 1e-12);
    }
}
