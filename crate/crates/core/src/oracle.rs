//! Brute-force reference for the engine.
//!
//! Everything here is a literal, unoptimized reading of the model in exact
//! rational arithmetic: argmax sets are computed by scanning the closed
//! neighborhood, and `C_{n+1}(y)` by scanning every vertex for those that
//! chose `y`. Outcome distributions over tie-breaks are enumerated exactly,
//! so tolerance only enters when Monte Carlo frequencies are compared
//! against them.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::engine::{self, EngineError, TargetMap};
use crate::graph::Graph;
use crate::init::Field;
use crate::rng;
use crate::value::{Exact, Real, Resource};

pub const MAX_VERTICES: usize = 16;
pub const MAX_HORIZON: usize = 6;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("vertex {vertex} has a tie but no designated choice")]
    MissingChoice { vertex: usize },
    #[error("choice {choice} for vertex {vertex} is not in its argmax set")]
    InvalidChoice { vertex: usize, choice: usize },
    #[error("instance with {vertices} vertices and horizon {horizon} exceeds the enumeration guard ({MAX_VERTICES} vertices, horizon {MAX_HORIZON})")]
    TooLarge { vertices: usize, horizon: usize },
    #[error("field has {field} values but the graph has {graph} vertices")]
    ShapeMismatch { field: usize, graph: usize },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Exact resource amount.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Amount {
    Finite(BigRational),
    Infinite,
}

impl Amount {
    pub fn zero() -> Self {
        Amount::Finite(BigRational::zero())
    }

    pub fn from_integer(v: u128) -> Self {
        Amount::Finite(BigRational::from_integer(BigInt::from(v)))
    }

    fn is_positive(&self) -> bool {
        match self {
            Amount::Finite(r) => r > &BigRational::zero(),
            Amount::Infinite => true,
        }
    }

    fn add(&self, other: &Amount) -> Amount {
        match (self, other) {
            (Amount::Finite(a), Amount::Finite(b)) => Amount::Finite(a + b),
            _ => Amount::Infinite,
        }
    }
}

impl fmt::Display for Amount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Amount::Finite(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Amount::Finite(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Amount::Infinite => f.write_str("inf"),
        }
    }
}

/// Exact conversion of engine values.
pub trait ToAmount {
    fn to_amount(self) -> Amount;
}

impl ToAmount for Exact {
    fn to_amount(self) -> Amount {
        match self.get() {
            Some(v) => Amount::from_integer(v),
            None => Amount::Infinite,
        }
    }
}

impl ToAmount for Real {
    fn to_amount(self) -> Amount {
        if self.is_infinite() {
            Amount::Infinite
        } else {
            Amount::Finite(BigRational::from_float(self.get()).expect("finite value"))
        }
    }
}

pub fn to_amounts<V: Resource + ToAmount>(field: &Field<V>) -> Vec<Amount> {
    field.values.iter().map(|&v| v.to_amount()).collect()
}

/// Designated targets for tied vertices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TieChoices(BTreeMap<usize, usize>);

impl TieChoices {
    pub fn new() -> Self {
        TieChoices::default()
    }

    pub fn set(&mut self, vertex: usize, target: usize) -> &mut Self {
        self.0.insert(vertex, target);
        self
    }

    /// The realized choices of every tied vertex in an engine target map.
    pub fn from_targets(targets: &TargetMap) -> Self {
        let mut choices = TieChoices::new();
        for x in 0..targets.len() {
            if targets.tie_size(x) > 1 {
                choices.set(x, targets.target(x));
            }
        }
        choices
    }
}

/// `{y in G_x : C(y) = max_{z in G_x} C(z)}` in neighborhood order.
pub fn argmax_set(values: &[Amount], g: &Graph, x: usize) -> Vec<usize> {
    let nbhd: Vec<usize> = g.neighborhood(x).iter().map(|&y| y as usize).collect();
    let top = nbhd.iter().map(|&y| &values[y]).max().expect("x is in G_x");
    nbhd.iter().copied().filter(|&y| &values[y] == top).collect()
}

fn naive_targets(values: &[Amount], g: &Graph, choices: &TieChoices) -> Result<Vec<usize>, OracleError> {
    (0..values.len())
        .map(|x| {
            if !values[x].is_positive() {
                return Ok(x);
            }
            let best = argmax_set(values, g, x);
            match (best.len(), choices.0.get(&x)) {
                (1, None) => Ok(best[0]),
                (_, Some(&c)) if best.contains(&c) => Ok(c),
                (_, Some(&c)) => Err(OracleError::InvalidChoice { vertex: x, choice: c }),
                (_, None) => Err(OracleError::MissingChoice { vertex: x }),
            }
        })
        .collect()
}

/// Literal one-step update with the given tie choices.
pub fn naive_step(values: &[Amount], g: &Graph, choices: &TieChoices) -> Result<Vec<Amount>, OracleError> {
    if values.len() != g.vertex_count() {
        return Err(OracleError::ShapeMismatch {
            field: values.len(),
            graph: g.vertex_count(),
        });
    }
    let target = naive_targets(values, g, choices)?;
    Ok((0..values.len())
        .map(|y| {
            (0..values.len())
                .filter(|&x| target[x] == y)
                .fold(Amount::zero(), |acc, x| acc.add(&values[x]))
        })
        .collect())
}

/// Exact law of the configuration after `horizon` steps.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeDistribution {
    pub horizon: usize,
    /// Distinct configurations with their probabilities, sorted by
    /// configuration.
    pub outcomes: Vec<(Vec<Amount>, BigRational)>,
}

impl OutcomeDistribution {
    pub fn probability_of(&self, config: &[Amount]) -> BigRational {
        self.outcomes
            .iter()
            .find(|(c, _)| c.as_slice() == config)
            .map(|(_, p)| p.clone())
            .unwrap_or_else(BigRational::zero)
    }

    pub fn total(&self) -> BigRational {
        self.outcomes
            .iter()
            .fold(BigRational::zero(), |acc, (_, p)| acc + p)
    }
}

/// Branches over every joint tie-break assignment, each with probability
/// `prod 1 / tie_size`, for `horizon` steps.
pub fn enumerate_outcomes(field: &Field<Exact>, g: &Graph, horizon: usize) -> Result<OutcomeDistribution, OracleError> {
    let n = g.vertex_count();
    if n > MAX_VERTICES || horizon > MAX_HORIZON {
        return Err(OracleError::TooLarge {
            vertices: n,
            horizon,
        });
    }
    if field.values.len() != n {
        return Err(OracleError::ShapeMismatch {
            field: field.values.len(),
            graph: n,
        });
    }
    let mut dist: BTreeMap<Vec<Amount>, BigRational> = BTreeMap::new();
    dist.insert(to_amounts(field), BigRational::one());
    for _ in 0..horizon {
        let mut next: BTreeMap<Vec<Amount>, BigRational> = BTreeMap::new();
        for (config, p) in &dist {
            let tied: Vec<(usize, Vec<usize>)> = (0..n)
                .filter(|&x| config[x].is_positive())
                .map(|x| (x, argmax_set(config, g, x)))
                .filter(|(_, set)| set.len() > 1)
                .collect();
            let branches: usize = tied.iter().map(|(_, s)| s.len()).product();
            let weight = p / BigRational::from_integer(BigInt::from(branches));
            // Mixed-radix counter over the joint choices.
            let mut digits = vec![0usize; tied.len()];
            loop {
                let mut choices = TieChoices::new();
                for ((x, set), &d) in tied.iter().zip(&digits) {
                    choices.set(*x, set[d]);
                }
                let out = naive_step(config, g, &choices)?;
                *next.entry(out).or_insert_with(BigRational::zero) += &weight;
                let mut i = 0;
                while i < digits.len() {
                    digits[i] += 1;
                    if digits[i] < tied[i].1.len() {
                        break;
                    }
                    digits[i] = 0;
                    i += 1;
                }
                if i == digits.len() {
                    break;
                }
            }
        }
        dist = next;
    }
    Ok(OutcomeDistribution {
        horizon,
        outcomes: dist.into_iter().collect(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeComparison {
    pub config: Vec<Amount>,
    pub exact: BigRational,
    pub count: u64,
    pub frequency: f64,
    pub abs_diff: f64,
}

/// Monte Carlo frequencies of the engine against the exact distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleReport {
    pub horizon: usize,
    pub trials: u64,
    pub seed: u64,
    /// Every configuration in the exact support, then any observed outside
    /// it (exact probability 0).
    pub outcomes: Vec<OutcomeComparison>,
    pub max_abs_diff: f64,
    /// Pearson statistic over the exact support.
    pub chi_square: f64,
    pub degrees_of_freedom: usize,
    /// Trials that ended outside the exact support.
    pub unexpected: u64,
}

impl OracleReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.unexpected == 0 && self.max_abs_diff <= tolerance
    }
}

pub fn ratio_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

/// Runs the engine `trials` times for `horizon` steps, trial `t` with seed
/// `derive_seed(seed, t)`, and compares outcome frequencies with
/// [`enumerate_outcomes`].
pub fn compare_engine_oracle(
    g: &Graph,
    field0: &Field<Exact>,
    horizon: usize,
    trials: u64,
    seed: u64,
) -> Result<OracleReport, OracleError> {
    let exact = enumerate_outcomes(field0, g, horizon)?;
    let finals = (0..trials)
        .into_par_iter()
        .map(|t| {
            let trial_seed = rng::derive_seed(seed, t);
            let mut f = field0.clone();
            for _ in 0..horizon {
                f = engine::transition(&f, g, trial_seed)?.0;
            }
            Ok(to_amounts(&f))
        })
        .collect::<Result<Vec<_>, EngineError>>()?;
    let mut tally: BTreeMap<Vec<Amount>, u64> = BTreeMap::new();
    for config in finals {
        *tally.entry(config).or_insert(0) += 1;
    }
    let denom = trials.max(1) as f64;
    let mut outcomes = Vec::new();
    let mut chi_square = 0.0;
    for (config, p) in &exact.outcomes {
        let count = tally.remove(config).unwrap_or(0);
        let expected = ratio_to_f64(p);
        let frequency = count as f64 / denom;
        let e = expected * trials as f64;
        if e > 0.0 {
            chi_square += (count as f64 - e).powi(2) / e;
        }
        outcomes.push(OutcomeComparison {
            config: config.clone(),
            exact: p.clone(),
            count,
            frequency,
            abs_diff: (frequency - expected).abs(),
        });
    }
    let mut unexpected = 0;
    for (config, count) in tally {
        unexpected += count;
        let frequency = count as f64 / denom;
        outcomes.push(OutcomeComparison {
            config,
            exact: BigRational::zero(),
            count,
            frequency,
            abs_diff: frequency,
        });
    }
    let max_abs_diff = outcomes.iter().map(|o| o.abs_diff).fold(0.0, f64::max);
    Ok(OracleReport {
        horizon,
        trials,
        seed,
        degrees_of_freedom: exact.outcomes.len().saturating_sub(1),
        outcomes,
        max_abs_diff,
        chi_square,
        unexpected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_torus;

    fn ints(levels: &[u128]) -> Vec<Amount> {
        levels.iter().map(|&v| Amount::from_integer(v)).collect()
    }

    fn exact_field(levels: &[u64]) -> Field<Exact> {
        Field::new(levels.iter().map(|&v| Exact::from_u64(v)).collect())
    }

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn naive_step_examples() {
        let c5 = build_torus(1, &[5]).unwrap();
        assert_eq!(
            naive_step(&ints(&[1, 3, 2, 0, 0]), &c5, &TieChoices::new()).unwrap(),
            ints(&[0, 6, 0, 0, 0])
        );
        let c3 = build_torus(1, &[3]).unwrap();
        let mut swap = TieChoices::new();
        swap.set(0, 1).set(1, 0);
        assert_eq!(naive_step(&ints(&[2, 2, 0]), &c3, &swap).unwrap(), ints(&[2, 2, 0]));
        assert_eq!(naive_step(&ints(&[0, 0, 0]), &c3, &TieChoices::new()).unwrap(), ints(&[0, 0, 0]));
    }

    #[test]
    fn naive_step_validates_choices() {
        let c3 = build_torus(1, &[3]).unwrap();
        assert_eq!(
            naive_step(&ints(&[2, 2, 0]), &c3, &TieChoices::new()),
            Err(OracleError::MissingChoice { vertex: 0 })
        );
        let mut bad = TieChoices::new();
        bad.set(0, 2).set(1, 0);
        assert_eq!(
            naive_step(&ints(&[2, 2, 0]), &c3, &bad),
            Err(OracleError::InvalidChoice { vertex: 0, choice: 2 })
        );
    }

    #[test]
    fn enumeration_of_the_tied_pair() {
        let c3 = build_torus(1, &[3]).unwrap();
        let f = exact_field(&[2, 2, 0]);
        let one = enumerate_outcomes(&f, &c3, 1).unwrap();
        assert_eq!(one.outcomes.len(), 3);
        assert_eq!(one.probability_of(&ints(&[4, 0, 0])), ratio(1, 4));
        assert_eq!(one.probability_of(&ints(&[0, 4, 0])), ratio(1, 4));
        assert_eq!(one.probability_of(&ints(&[2, 2, 0])), ratio(1, 2));
        let two = enumerate_outcomes(&f, &c3, 2).unwrap();
        assert_eq!(two.probability_of(&ints(&[4, 0, 0])), ratio(3, 8));
        assert_eq!(two.probability_of(&ints(&[0, 4, 0])), ratio(3, 8));
        assert_eq!(two.probability_of(&ints(&[2, 2, 0])), ratio(1, 4));
        assert!(two.total().is_one());
    }

    #[test]
    fn tie_free_enumeration_is_deterministic() {
        let c5 = build_torus(1, &[5]).unwrap();
        let d = enumerate_outcomes(&exact_field(&[1, 3, 2, 0, 0]), &c5, 4).unwrap();
        assert_eq!(d.outcomes.len(), 1);
        assert_eq!(d.outcomes[0].0, ints(&[0, 6, 0, 0, 0]));
        assert!(d.outcomes[0].1.is_one());
    }

    #[test]
    fn guards() {
        let big = build_torus(1, &[17]).unwrap();
        assert!(matches!(
            enumerate_outcomes(&exact_field(&[1; 17]), &big, 1),
            Err(OracleError::TooLarge { .. })
        ));
        let c3 = build_torus(1, &[3]).unwrap();
        assert!(matches!(
            enumerate_outcomes(&exact_field(&[1, 1, 1]), &c3, 7),
            Err(OracleError::TooLarge { .. })
        ));
    }

    #[test]
    fn monte_carlo_against_exact() {
        let c3 = build_torus(1, &[3]).unwrap();
        let report = compare_engine_oracle(&c3, &exact_field(&[2, 2, 0]), 1, 20_000, 7).unwrap();
        assert_eq!(report.unexpected, 0);
        assert!(report.passes(0.02), "{report:?}");
        assert!(!report.passes(0.0));
        let c5 = build_torus(1, &[5]).unwrap();
        let report = compare_engine_oracle(&c5, &exact_field(&[1, 3, 2, 0, 0]), 2, 100, 7).unwrap();
        assert_eq!(report.max_abs_diff, 0.0);
        assert_eq!(report.outcomes.len(), 1);
        assert!(report.passes(0.0));
    }

    #[test]
    fn amounts_print() {
        assert_eq!(Amount::from_integer(6).to_string(), "6");
        assert_eq!(Amount::Finite(ratio(1, 2)).to_string(), "1/2");
        assert_eq!(Amount::Infinite.to_string(), "inf");
        assert!(Amount::Infinite > Amount::from_integer(u128::MAX));
    }
}
