//! One handle over both environments, built from a serializable spec.

use alloc::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::gp::{GpEnv, GpError, RuleConfig};
use crate::nav::{generate_route, GenError, InvariantError, NavConfig, NavEnv, RouteGenConfig};
use crate::revision::{Environment, Snapshot, StepError, StepOutcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "env", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvSpec {
    Gp {
        #[serde(default)]
        rule: RuleConfig,
    },
    Nav {
        #[serde(default)]
        nav: NavConfig,
        #[serde(default)]
        routes: RouteGenConfig,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EnvError {
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error(transparent)]
    Route(#[from] GenError),
    #[error(transparent)]
    Invariant(#[from] InvariantError),
}

impl EnvSpec {
    pub fn gp_in_distribution() -> Self {
        EnvSpec::Gp { rule: RuleConfig::in_distribution() }
    }

    pub fn gp_out_of_distribution() -> Self {
        EnvSpec::Gp { rule: RuleConfig::out_of_distribution() }
    }

    pub fn nav_in_distribution() -> Self {
        EnvSpec::Nav { nav: NavConfig::in_distribution(), routes: RouteGenConfig::default() }
    }

    pub fn nav_out_of_distribution() -> Self {
        EnvSpec::Nav { nav: NavConfig::out_of_distribution(), routes: RouteGenConfig::default() }
    }

    /// Sets the verification budget: GP turns per episode, Nav attempts per scene.
    pub fn with_verification(mut self, iterations: usize) -> Self {
        let iterations = iterations.max(1);
        match &mut self {
            EnvSpec::Gp { rule } => rule.max_steps = iterations,
            EnvSpec::Nav { nav, .. } => nav.max_attempts = iterations,
        }
        self
    }

    pub fn is_gp(&self) -> bool {
        matches!(self, EnvSpec::Gp { .. })
    }

    /// A fresh episode; the seed picks the hand or the route.
    pub fn make(&self, seed: u64) -> Result<AnyEnv, EnvError> {
        Ok(match self {
            EnvSpec::Gp { rule } => AnyEnv::Gp(GpEnv::reset(*rule, seed)?),
            EnvSpec::Nav { nav, routes } => {
                let route = generate_route(seed, routes)?;
                AnyEnv::Nav(NavEnv::new(Arc::new(route), *nav)?)
            }
        })
    }
}

#[derive(Debug, Clone)]
pub enum AnyEnv {
    Gp(GpEnv),
    Nav(NavEnv),
}

impl AnyEnv {
    pub fn expert_response(&self) -> alloc::string::String {
        match self {
            AnyEnv::Gp(e) => e.expert_response(),
            AnyEnv::Nav(e) => e.expert_response(),
        }
    }
}

impl Environment for AnyEnv {
    fn context(&self) -> &str {
        match self {
            AnyEnv::Gp(e) => e.context(),
            AnyEnv::Nav(e) => e.context(),
        }
    }

    fn step(&mut self, output: &str) -> Result<StepOutcome, StepError> {
        match self {
            AnyEnv::Gp(e) => e.step(output),
            AnyEnv::Nav(e) => e.step(output),
        }
    }

    fn is_done(&self) -> bool {
        match self {
            AnyEnv::Gp(e) => e.is_done(),
            AnyEnv::Nav(e) => e.is_done(),
        }
    }

    fn snapshot(&self) -> Snapshot {
        match self {
            AnyEnv::Gp(e) => e.snapshot(),
            AnyEnv::Nav(e) => e.snapshot(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verification_budget_applies_per_env() {
        let EnvSpec::Gp { rule } = EnvSpec::gp_in_distribution().with_verification(3) else { panic!() };
        assert_eq!(rule.max_steps, 3);
        let EnvSpec::Nav { nav, .. } = EnvSpec::nav_out_of_distribution().with_verification(10) else { panic!() };
        assert_eq!(nav.max_attempts, 10);
    }

    #[test]
    fn make_is_deterministic() {
        for spec in [EnvSpec::gp_in_distribution(), EnvSpec::nav_in_distribution()] {
            assert_eq!(spec.make(7).unwrap().context(), spec.make(7).unwrap().context());
        }
    }
}
