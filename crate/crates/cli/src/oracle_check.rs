//! Engine versus exact enumeration on small instances.

use clusterflow_core::graph::Graph;
use clusterflow_core::oracle::{compare_engine_oracle, ratio_to_f64, ToAmount};
use clusterflow_core::{Exact, Field, Magnitude, Resource, ValueMode};
use serde::{Deserialize, Serialize};

use crate::run::{with_initial_field, FieldTask};
use crate::{CliError, ConfigError, RunConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    /// Final configuration, one decimal (or `inf`) per vertex.
    pub config: Vec<String>,
    /// Exact probability as `num/den` (or an integer).
    pub exact: String,
    pub exact_value: f64,
    pub count: u64,
    pub frequency: f64,
    pub abs_diff: f64,
}

/// JSON report of an oracle check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub pass: bool,
    pub tolerance: f64,
    pub horizon: usize,
    pub trials: u64,
    pub seed: u64,
    pub max_abs_diff: f64,
    pub chi_square: f64,
    pub degrees_of_freedom: usize,
    pub unexpected: u64,
    pub outcomes: Vec<OutcomeRecord>,
}

struct Check {
    horizon: usize,
    trials: u64,
    tolerance: f64,
}

impl FieldTask for Check {
    type Output = Result<OracleCheck, CliError>;

    fn run<V: Resource + ToAmount>(self, config: &RunConfig, graph: &Graph, field: Field<V>) -> Self::Output {
        let exact: Field<Exact> = Field::new(
            field
                .values
                .iter()
                .map(|v| match v.magnitude() {
                    Magnitude::Int(i) => Ok(Exact::new(i).unwrap_or(Exact::INFINITE)),
                    Magnitude::Infinite => Ok(Exact::INFINITE),
                    Magnitude::Float(_) => {
                        Err(ConfigError::invalid("init.mode", "oracle checks need exact mode"))
                    }
                })
                .collect::<Result<_, _>>()?,
        );
        let report = compare_engine_oracle(graph, &exact, self.horizon, self.trials, config.run.seed)?;
        Ok(OracleCheck {
            pass: report.passes(self.tolerance),
            tolerance: self.tolerance,
            horizon: report.horizon,
            trials: report.trials,
            seed: report.seed,
            max_abs_diff: report.max_abs_diff,
            chi_square: report.chi_square,
            degrees_of_freedom: report.degrees_of_freedom,
            unexpected: report.unexpected,
            outcomes: report
                .outcomes
                .iter()
                .map(|o| OutcomeRecord {
                    config: o.config.iter().map(ToString::to_string).collect(),
                    exact: o.exact.to_string(),
                    exact_value: ratio_to_f64(&o.exact),
                    count: o.count,
                    frequency: o.frequency,
                    abs_diff: o.abs_diff,
                })
                .collect(),
        })
    }
}

/// The `oracle-check` subcommand. `tolerance` overrides `oracle.tolerance`.
pub fn oracle_check(config: &RunConfig, tolerance: Option<f64>) -> Result<OracleCheck, CliError> {
    let section = config
        .oracle
        .as_ref()
        .ok_or_else(|| ConfigError::invalid("oracle.horizon", "oracle checks need an [oracle] section"))?;
    if config.mode()? != ValueMode::Exact {
        return Err(ConfigError::invalid("init.mode", "oracle checks need exact mode").into());
    }
    let tolerance = tolerance.unwrap_or(section.tolerance);
    if tolerance.is_nan() || tolerance < 0.0 {
        return Err(ConfigError::invalid("oracle.tolerance", "must be nonnegative").into());
    }
    with_initial_field(
        config,
        Check {
            horizon: section.horizon,
            trials: section.trials,
            tolerance,
        },
    )?
}
