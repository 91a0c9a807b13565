//! Initial resource fields.
//!
//! I.i.d. laws draw each vertex from its own keyed stream, so a field is a
//! pure function of `(spec, seed, graph)` and parallel sampling matches the
//! sequential order. Periodic patterns get a uniform cyclic shift when
//! asked, which makes their law translation invariant.
//!
//! Levels are written as `f64`; `f64::INFINITY` is the infinite resource.
//! The geometric law counts failures before the first success, so its
//! support starts at 0.

use rand::Rng;
use rand_distr::{Distribution, Exp, Geometric, Pareto, Uniform};
use rayon::prelude::*;
use thiserror::Error;

use crate::graph::Graph;
use crate::rng;
use crate::value::{Resource, ValueMode};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InitError {
    #[error("invalid parameter {param}: {reason}")]
    InvalidParameter { param: &'static str, reason: String },
    #[error("law {law} produces non-integer values and cannot be sampled in exact mode")]
    NotIntegral { law: &'static str },
    #[error("spec is in {spec} mode but the field was requested in {requested} mode")]
    ModeMismatch {
        spec: ValueMode,
        requested: ValueMode,
    },
    #[error("pattern period {period} along axis {axis} does not divide length {length}")]
    PeriodMismatch {
        axis: usize,
        period: usize,
        length: usize,
    },
    #[error("pattern shape {shape:?} does not match {values} values on a {d}-dimensional torus")]
    PatternShape {
        shape: Vec<usize>,
        values: usize,
        d: usize,
    },
    #[error("periodic patterns require a torus graph")]
    NotTorus,
    #[error("field has {got} values but the graph has {expected} vertices")]
    LengthMismatch { expected: usize, got: usize },
}

/// Single-vertex law or periodic pattern.
#[derive(Clone, Debug, PartialEq)]
pub enum Law {
    Constant { value: f64 },
    UniformReal { a: f64, b: f64 },
    Exponential { rate: f64 },
    Pareto { shape: f64, scale: f64 },
    /// `v1` with probability `p`, otherwise `v2`.
    TwoPoint { v1: f64, p: f64, v2: f64 },
    UniformInt { a: u64, b: u64 },
    Geometric { p: f64 },
    /// Row-major pattern of the given shape, tiled over the torus.
    Pattern {
        values: Vec<f64>,
        shape: Vec<usize>,
        random_shift: bool,
    },
}

impl Law {
    pub fn name(&self) -> &'static str {
        match self {
            Law::Constant { .. } => "constant",
            Law::UniformReal { .. } => "uniform_real",
            Law::Exponential { .. } => "exponential",
            Law::Pareto { .. } => "pareto",
            Law::TwoPoint { .. } => "two_point",
            Law::UniformInt { .. } => "uniform_int",
            Law::Geometric { .. } => "geometric",
            Law::Pattern { .. } => "pattern",
        }
    }

    fn is_integral(&self) -> bool {
        let integral = |v: f64| v == f64::INFINITY || (v >= 0.0 && v.fract() == 0.0);
        match self {
            Law::Constant { value } => integral(*value),
            Law::TwoPoint { v1, v2, .. } => integral(*v1) && integral(*v2),
            Law::UniformInt { .. } | Law::Geometric { .. } => true,
            Law::Pattern { values, .. } => values.iter().all(|&v| integral(v)),
            Law::UniformReal { .. } | Law::Exponential { .. } | Law::Pareto { .. } => false,
        }
    }

    /// Exact for integer-valued laws, real otherwise.
    pub fn default_mode(&self) -> ValueMode {
        if self.is_integral() {
            ValueMode::Exact
        } else {
            ValueMode::Real
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistributionSpec {
    pub law: Law,
    pub mode: ValueMode,
}

fn invalid(param: &'static str, reason: impl Into<String>) -> InitError {
    InitError::InvalidParameter {
        param,
        reason: reason.into(),
    }
}

fn check_level(param: &'static str, v: f64) -> Result<(), InitError> {
    if v.is_nan() || v < 0.0 {
        Err(invalid(param, format!("{v} is not a nonnegative level")))
    } else {
        Ok(())
    }
}

fn check_finite_positive(param: &'static str, v: f64) -> Result<(), InitError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(param, format!("{v} must be finite and positive")))
    }
}

fn check_probability(param: &'static str, p: f64) -> Result<(), InitError> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(invalid(param, format!("{p} must lie strictly between 0 and 1")))
    }
}

impl DistributionSpec {
    /// Spec in the law's default mode.
    pub fn new(law: Law) -> Self {
        let mode = law.default_mode();
        DistributionSpec { law, mode }
    }

    pub fn with_mode(law: Law, mode: ValueMode) -> Self {
        DistributionSpec { law, mode }
    }

    pub fn validate(&self) -> Result<(), InitError> {
        match &self.law {
            Law::Constant { value } => check_level("value", *value)?,
            Law::UniformReal { a, b } => {
                if !(a.is_finite() && b.is_finite()) {
                    return Err(invalid("a", "bounds must be finite"));
                }
                check_level("a", *a)?;
                if a > b {
                    return Err(invalid("b", format!("{b} is below a = {a}")));
                }
            }
            Law::Exponential { rate } => check_finite_positive("rate", *rate)?,
            Law::Pareto { shape, scale } => {
                check_finite_positive("shape", *shape)?;
                check_finite_positive("scale", *scale)?;
            }
            Law::TwoPoint { v1, p, v2 } => {
                check_level("v1", *v1)?;
                check_level("v2", *v2)?;
                check_probability("p", *p)?;
            }
            Law::UniformInt { a, b } => {
                if a > b {
                    return Err(invalid("b", format!("{b} is below a = {a}")));
                }
            }
            Law::Geometric { p } => check_probability("p", *p)?,
            Law::Pattern { values, shape, .. } => {
                if values.is_empty() {
                    return Err(invalid("values", "pattern is empty"));
                }
                for &v in values {
                    check_level("values", v)?;
                }
                if shape.contains(&0) || shape.iter().product::<usize>() != values.len() {
                    return Err(InitError::PatternShape {
                        shape: shape.clone(),
                        values: values.len(),
                        d: shape.len(),
                    });
                }
            }
        }
        if self.mode == ValueMode::Exact && !self.law.is_integral() {
            return Err(InitError::NotIntegral {
                law: self.law.name(),
            });
        }
        Ok(())
    }
}

/// Configuration `C_n` with its step index.
#[derive(Clone, Debug, PartialEq)]
pub struct Field<V> {
    pub values: Vec<V>,
    pub step: u64,
}

impl<V: Resource> Field<V> {
    /// A step-0 field.
    pub fn new(values: Vec<V>) -> Self {
        Field { values, step: 0 }
    }

    /// Step-0 field from levels; `None` if a level is invalid in this mode.
    pub fn from_levels(levels: &[f64]) -> Option<Self> {
        levels
            .iter()
            .map(|&l| V::from_level(l))
            .collect::<Option<Vec<_>>>()
            .map(Field::new)
    }

    pub fn mode(&self) -> ValueMode {
        V::MODE
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_graph(&self, g: &Graph) -> Result<(), InitError> {
        if self.values.len() == g.vertex_count() {
            Ok(())
        } else {
            Err(InitError::LengthMismatch {
                expected: g.vertex_count(),
                got: self.values.len(),
            })
        }
    }
}

enum Draw {
    Count(u64),
    Level(f64),
}

fn draw_one<R: Rng>(law: &Law, rng: &mut R) -> Draw {
    match law {
        Law::Constant { value } => Draw::Level(*value),
        Law::UniformReal { a, b } => {
            if a == b {
                Draw::Level(*a)
            } else {
                Draw::Level(Uniform::new(*a, *b).expect("validated bounds").sample(rng))
            }
        }
        Law::Exponential { rate } => Draw::Level(Exp::new(*rate).expect("validated rate").sample(rng)),
        Law::Pareto { shape, scale } => Draw::Level(
            Pareto::new(*scale, *shape)
                .expect("validated parameters")
                .sample(rng),
        ),
        Law::TwoPoint { v1, p, v2 } => Draw::Level(if rng.random_bool(*p) { *v1 } else { *v2 }),
        Law::UniformInt { a, b } => Draw::Count(rng.random_range(*a..=*b)),
        Law::Geometric { p } => Draw::Count(Geometric::new(*p).expect("validated p").sample(rng)),
        Law::Pattern { .. } => unreachable!("patterns are tiled, not drawn per vertex"),
    }
}

/// Samples `C_0` from `spec`, i.i.d. across vertices (or as a tiled pattern).
pub fn sample_field<V: Resource>(
    g: &Graph,
    spec: &DistributionSpec,
    seed: u64,
) -> Result<Field<V>, InitError> {
    spec.validate()?;
    if spec.mode != V::MODE {
        return Err(InitError::ModeMismatch {
            spec: spec.mode,
            requested: V::MODE,
        });
    }
    if let Law::Pattern {
        values,
        shape,
        random_shift,
    } = &spec.law
    {
        return pattern_field(g, values, shape, *random_shift, seed);
    }
    let values = (0..g.vertex_count())
        .into_par_iter()
        .with_min_len(4096)
        .map(|v| {
            let mut rng = rng::vertex_stream(seed, v as u64);
            match draw_one(&spec.law, &mut rng) {
                Draw::Count(c) => V::from_count(c),
                Draw::Level(l) => V::from_level(l).expect("validated level"),
            }
        })
        .collect();
    Ok(Field::new(values))
}

/// Tiles a row-major pattern of shape `shape` over a torus. With
/// `random_shift`, one uniform shift per axis is drawn from `seed`.
///
/// A one-dimensional pattern may be given with an empty shape.
pub fn pattern_field<V: Resource>(
    g: &Graph,
    values: &[f64],
    shape: &[usize],
    random_shift: bool,
    seed: u64,
) -> Result<Field<V>, InitError> {
    if !g.is_torus() {
        return Err(InitError::NotTorus);
    }
    let d = g.dimension();
    let shape: Vec<usize> = if shape.is_empty() && d == 1 {
        vec![values.len()]
    } else {
        shape.to_vec()
    };
    if shape.len() != d || shape.contains(&0) || shape.iter().product::<usize>() != values.len() {
        return Err(InitError::PatternShape {
            shape,
            values: values.len(),
            d,
        });
    }
    for (axis, (&period, &length)) in shape.iter().zip(g.lengths()).enumerate() {
        if length % period != 0 {
            return Err(InitError::PeriodMismatch {
                axis,
                period,
                length,
            });
        }
    }
    let tile = values
        .iter()
        .map(|&v| V::from_level(v).ok_or_else(|| invalid("values", format!("{v} is not valid in {} mode", V::MODE))))
        .collect::<Result<Vec<V>, _>>()?;
    let shifts: Vec<usize> = if random_shift {
        let mut rng = rng::global_stream(seed);
        shape.iter().map(|&p| rng.random_range(0..p)).collect()
    } else {
        vec![0; d]
    };
    let out = (0..g.vertex_count())
        .map(|x| {
            let (_, coords) = g.coordinates(x);
            let index = coords
                .iter()
                .zip(&shape)
                .zip(&shifts)
                .fold(0, |acc, ((&c, &p), &s)| acc * p + (c + s) % p);
            tile[index]
        })
        .collect();
    Ok(Field::new(out))
}
