//! The synchronous dynamics.
//!
//! One step reads only the step-`n` field. A targets pass picks `a_n(x)` for
//! every vertex, then a gather pass builds `C_{n+1}(y)` by scanning `G_y` for
//! the vertices that chose `y`. Both passes are data-parallel over vertices
//! and write disjoint outputs, and tie-breaks are keyed by
//! `(seed, step, vertex)`, so results are independent of thread count.

use std::collections::VecDeque;
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::cluster::ClusterState;
use crate::graph::Graph;
use crate::init::Field;
use crate::rng;
use crate::stats::{RunResult, TimeSeriesRow};
use crate::value::Resource;

const PAR_MIN_LEN: usize = 2048;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("field has {field} values but the graph has {graph} vertices")]
    ShapeMismatch { field: usize, graph: usize },
    #[error("exact arithmetic overflow at vertex {vertex} during step {step}")]
    Overflow { step: u64, vertex: usize },
    #[error("target {target} of vertex {vertex} is outside its closed neighborhood")]
    InvalidTarget { vertex: usize, target: usize },
    #[error("total mass overflows at step {step}")]
    TotalOverflow { step: u64 },
}

/// Per-vertex target `a_n(x)` and the size of the argmax set it was drawn
/// from (1 without a tie or when `C_n(x) = 0`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TargetMap {
    target: Vec<u32>,
    tie_size: Vec<u32>,
}

impl TargetMap {
    pub fn from_parts(target: Vec<u32>, tie_size: Vec<u32>) -> Self {
        assert_eq!(target.len(), tie_size.len());
        TargetMap { target, tie_size }
    }

    pub fn len(&self) -> usize {
        self.target.len()
    }

    pub fn is_empty(&self) -> bool {
        self.target.is_empty()
    }

    #[inline]
    pub fn target(&self, x: usize) -> usize {
        self.target[x] as usize
    }

    #[inline]
    pub fn tie_size(&self, x: usize) -> u32 {
        self.tie_size[x]
    }

    pub fn targets(&self) -> &[u32] {
        &self.target
    }

    pub fn tie_sizes(&self) -> &[u32] {
        &self.tie_size
    }

    /// Number of `x` with `a_n(x) != x`.
    pub fn movers(&self) -> usize {
        self.target
            .iter()
            .enumerate()
            .filter(|&(x, &t)| t as usize != x)
            .count()
    }

    /// Number of vertices whose choice was a tie.
    pub fn ties(&self) -> usize {
        self.tie_size.iter().filter(|&&s| s > 1).count()
    }
}

/// Per-vertex event at one step.
///
/// With `R = {z : a_n(z) = x}`: `A` when `C_n(x) = 0`; otherwise `B` when
/// `R = {x}`, `C` when `R` is a single other vertex, `D` when `|R| > 1` and
/// `E` when `R` is empty.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventTag {
    A,
    B,
    C,
    D,
    E,
}

impl EventTag {
    pub const ALL: [EventTag; 5] = [EventTag::A, EventTag::B, EventTag::C, EventTag::D, EventTag::E];

    pub fn index(self) -> usize {
        self as usize
    }

    #[inline]
    fn from_sources(positive: bool, sources: usize, self_source: bool) -> EventTag {
        if !positive {
            EventTag::A
        } else {
            match sources {
                0 => EventTag::E,
                1 if self_source => EventTag::B,
                1 => EventTag::C,
                _ => EventTag::D,
            }
        }
    }
}

impl fmt::Display for EventTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let letter = ["A", "B", "C", "D", "E"][self.index()];
        f.write_str(letter)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EventCounts([usize; 5]);

impl EventCounts {
    pub fn tally(events: &[EventTag]) -> Self {
        let mut counts = [0; 5];
        for e in events {
            counts[e.index()] += 1;
        }
        EventCounts(counts)
    }

    pub fn get(&self, tag: EventTag) -> usize {
        self.0[tag.index()]
    }

    pub fn as_array(&self) -> [usize; 5] {
        self.0
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }
}

/// Everything decided at one step.
#[derive(Clone, Debug)]
pub struct StepReport<V> {
    pub step: u64,
    pub targets: TargetMap,
    pub events: Vec<EventTag>,
    pub counts: EventCounts,
    pub ties: usize,
    pub movers: usize,
    pub mass_before: V,
    pub mass_after: V,
}

fn check_shape<V>(field: &Field<V>, g: &Graph) -> Result<(), EngineError> {
    if field.values.len() == g.vertex_count() {
        Ok(())
    } else {
        Err(EngineError::ShapeMismatch {
            field: field.values.len(),
            graph: g.vertex_count(),
        })
    }
}

#[inline]
fn choose_target<V: Resource>(values: &[V], nbhd: &[u32], x: usize, seed: u64, step: u64) -> (u32, u32) {
    let own = values[x];
    if !own.is_positive() {
        return (x as u32, 1);
    }
    let mut best = own;
    let mut arg = x as u32;
    let mut count = 0u32;
    for &y in nbhd {
        let v = values[y as usize];
        if v > best {
            best = v;
            arg = y;
            count = 1;
        } else if v == best {
            count += 1;
        }
    }
    if count == 1 {
        return (arg, 1);
    }
    let pick = rng::below(rng::tie_bits(seed, step, x as u64), count);
    let chosen = nbhd
        .iter()
        .copied()
        .filter(|&y| values[y as usize] == best)
        .nth(pick as usize)
        .expect("pick is below the tie count");
    (chosen, count)
}

/// Computes `a_n` for the field's step `n`. Ties are broken uniformly from
/// the stream keyed by `(seed, n, x)`.
pub fn targets<V: Resource>(field: &Field<V>, g: &Graph, seed: u64) -> Result<TargetMap, EngineError> {
    check_shape(field, g)?;
    let values = &field.values;
    let step = field.step;
    let (target, tie_size): (Vec<u32>, Vec<u32>) = (0..values.len())
        .into_par_iter()
        .with_min_len(PAR_MIN_LEN)
        .map(|x| choose_target(values, g.neighborhood(x), x, seed, step))
        .unzip();
    Ok(TargetMap { target, tie_size })
}

/// Event tag per vertex for the given field and targets.
pub fn classify<V: Resource>(field: &Field<V>, targets: &TargetMap, g: &Graph) -> Vec<EventTag> {
    (0..field.values.len())
        .into_par_iter()
        .with_min_len(PAR_MIN_LEN)
        .map(|x| {
            let mut sources = 0;
            let mut self_source = false;
            for &z in g.neighborhood(x) {
                if targets.target(z as usize) == x {
                    sources += 1;
                    self_source |= z as usize == x;
                }
            }
            EventTag::from_sources(field.values[x].is_positive(), sources, self_source)
        })
        .collect()
}

/// Gather pass: next values and events in one sweep.
fn gather<V: Resource>(
    field: &Field<V>,
    targets: &TargetMap,
    g: &Graph,
) -> Result<(Vec<V>, Vec<EventTag>), EngineError> {
    let values = &field.values;
    let step = field.step;
    (0..values.len())
        .into_par_iter()
        .with_min_len(PAR_MIN_LEN)
        .map(|y| {
            let mut sum = V::ZERO;
            let mut sources = 0;
            let mut self_source = false;
            for &x in g.neighborhood(y) {
                let x = x as usize;
                if targets.target(x) == y {
                    sources += 1;
                    self_source |= x == y;
                    sum = sum
                        .checked_add(values[x])
                        .ok_or(EngineError::Overflow { step, vertex: y })?;
                }
            }
            Ok((sum, EventTag::from_sources(values[y].is_positive(), sources, self_source)))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(|pairs| pairs.into_iter().unzip())
}

/// One step of the dynamics without touching cluster bookkeeping.
pub fn transition<V: Resource>(
    field: &Field<V>,
    g: &Graph,
    seed: u64,
) -> Result<(Field<V>, StepReport<V>), EngineError> {
    let targets = targets(field, g, seed)?;
    apply(field, g, targets)
}

/// Applies a given target map, e.g. one with injected tie choices. Targets
/// must lie in the closed neighborhood; argmax membership is not checked.
pub fn apply<V: Resource>(
    field: &Field<V>,
    g: &Graph,
    targets: TargetMap,
) -> Result<(Field<V>, StepReport<V>), EngineError> {
    check_shape(field, g)?;
    if targets.len() != g.vertex_count() {
        return Err(EngineError::ShapeMismatch {
            field: targets.len(),
            graph: g.vertex_count(),
        });
    }
    for x in 0..targets.len() {
        let a = targets.target(x);
        if !g.neighborhood(x).contains(&(a as u32)) {
            return Err(EngineError::InvalidTarget { vertex: x, target: a });
        }
    }
    let (values, events) = gather(field, &targets, g)?;
    let step = field.step;
    let mass_before = V::total(&field.values).ok_or(EngineError::TotalOverflow { step })?;
    let mass_after = V::total(&values).ok_or(EngineError::TotalOverflow { step: step + 1 })?;
    let report = StepReport {
        step,
        counts: EventCounts::tally(&events),
        ties: targets.ties(),
        movers: targets.movers(),
        targets,
        events,
        mass_before,
        mass_after,
    };
    Ok((
        Field {
            values,
            step: step + 1,
        },
        report,
    ))
}

/// One step: returns `C_{n+1}` and the step report, and moves `clusters`
/// from step `n` to `n + 1`.
pub fn step<V: Resource>(
    field: &Field<V>,
    clusters: &mut ClusterState,
    g: &Graph,
    seed: u64,
) -> Result<(Field<V>, StepReport<V>), EngineError> {
    let (next, report) = transition(field, g, seed)?;
    clusters.advance(&report.targets, field.step);
    Ok((next, report))
}

/// True iff no two adjacent vertices both hold positive resource, i.e.
/// every active vertex strictly dominates its neighborhood. Such states are
/// fixed points of every tie-break realization.
pub fn is_absorbed<V: Resource>(field: &Field<V>, g: &Graph) -> bool {
    let values = &field.values;
    (0..values.len())
        .into_par_iter()
        .with_min_len(PAR_MIN_LEN)
        .all(|x| {
            !values[x].is_positive()
                || g
                    .neighborhood(x)
                    .iter()
                    .all(|&y| y as usize == x || !values[y as usize].is_positive())
        })
}

/// Threshold pair for the joint counter `P(0 < gap < delta, |S| <= k)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JointThreshold {
    pub delta: f64,
    pub k: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub max_steps: u64,
    pub seed: u64,
    /// Record a time-series row every this many steps (and always at the
    /// final step).
    pub record_every: u64,
    pub moment_alpha: f64,
    pub joint_thresholds: Vec<JointThreshold>,
    /// Trailing window of event tags kept for vertex typing.
    pub type_window: usize,
    /// When false, keep stepping an absorbed (fixed) state until `max_steps`.
    pub stop_at_absorption: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            max_steps: 100_000,
            seed: 0,
            record_every: 1,
            moment_alpha: 2.0,
            joint_thresholds: Vec::new(),
            type_window: 16,
            stop_at_absorption: true,
        }
    }
}

/// State handed to observers once per step, before the step is applied.
pub struct StepView<'a, V> {
    pub graph: &'a Graph,
    pub field: &'a Field<V>,
    pub clusters: &'a ClusterState,
    pub report: &'a StepReport<V>,
    /// `C_{n+1}`, or `None` at the final step of the run.
    pub next: Option<&'a Field<V>>,
    pub absorbed: bool,
}

pub trait Observer<V> {
    fn observe(&mut self, view: &StepView<'_, V>);
}

impl<V, F: FnMut(&StepView<'_, V>)> Observer<V> for F {
    fn observe(&mut self, view: &StepView<'_, V>) {
        self(view)
    }
}

/// Iterates until the field is absorbed or `max_steps` transitions have been
/// applied. Not absorbing is a reported outcome, not an error.
///
/// `absorption_step` is the first absorbed step, also when the run is told
/// to continue past it.
pub fn run<V: Resource>(
    g: &Graph,
    field0: Field<V>,
    opts: &RunOptions,
    observers: &mut [&mut dyn Observer<V>],
) -> Result<RunResult<V>, EngineError> {
    check_shape(&field0, g)?;
    let n_vertices = g.vertex_count();
    let start = field0.step;
    let record_every = opts.record_every.max(1);
    let mut clusters = ClusterState::new(n_vertices);
    let mut rows = Vec::new();
    let mut d_events = vec![0u32; n_vertices];
    let mut e_events = vec![0u32; n_vertices];
    let mut tie_events = vec![0u32; n_vertices];
    let mut window: VecDeque<Vec<EventTag>> = VecDeque::with_capacity(opts.type_window + 1);
    let initial = field0.clone();
    let mut field = field0;
    let mut absorption_step = None;
    let absorbed = loop {
        let absorbed = is_absorbed(&field, g);
        if absorbed && absorption_step.is_none() {
            absorption_step = Some(field.step);
        }
        let terminal = (absorbed && opts.stop_at_absorption) || field.step - start >= opts.max_steps;
        let (next, report) = transition(&field, g, opts.seed)?;
        for x in 0..n_vertices {
            match report.events[x] {
                EventTag::D => d_events[x] += 1,
                EventTag::E => e_events[x] += 1,
                _ => {}
            }
            if report.targets.tie_size(x) > 1 {
                tie_events[x] += 1;
            }
        }
        if opts.type_window > 0 {
            if window.len() == opts.type_window {
                window.pop_front();
            }
            window.push_back(report.events.clone());
        }
        let view = StepView {
            graph: g,
            field: &field,
            clusters: &clusters,
            report: &report,
            next: if terminal { None } else { Some(&next) },
            absorbed,
        };
        if (field.step - start).is_multiple_of(record_every) || terminal {
            rows.push(TimeSeriesRow::capture(&view, opts));
        }
        for obs in observers.iter_mut() {
            obs.observe(&view);
        }
        if terminal {
            break absorbed;
        }
        clusters.advance(&report.targets, field.step);
        field = next;
    };
    Ok(RunResult {
        rows,
        absorbed,
        absorption_step,
        steps_taken: field.step - start,
        last_move: clusters.last_moves(),
        initial_field: initial,
        final_field: field,
        clusters,
        d_events,
        e_events,
        tie_events,
        recent_events: window.into_iter().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_torus;
    use crate::value::Exact;
    use EventTag::*;

    fn exact(levels: &[u64]) -> Field<Exact> {
        Field::new(levels.iter().map(|&v| Exact::from_u64(v)).collect())
    }

    fn levels(f: &Field<Exact>) -> Vec<u128> {
        f.values.iter().map(|v| v.get().unwrap()).collect()
    }

    #[test]
    fn cycle_five_targets() {
        let g = build_torus(1, &[5]).unwrap();
        let t = targets(&exact(&[1, 3, 2, 0, 0]), &g, 0).unwrap();
        assert_eq!(t.targets(), &[1, 1, 1, 3, 4]);
        assert!(t.tie_sizes().iter().all(|&s| s == 1));
        assert_eq!(t.movers(), 2);
    }

    #[test]
    fn cycle_five_step_merges() {
        let g = build_torus(1, &[5]).unwrap();
        let mut clusters = ClusterState::new(5);
        let (next, report) = step(&exact(&[1, 3, 2, 0, 0]), &mut clusters, &g, 0).unwrap();
        assert_eq!(levels(&next), vec![0, 6, 0, 0, 0]);
        assert_eq!(next.step, 1);
        assert_eq!(report.events, vec![E, D, E, A, A]);
        assert_eq!(clusters.members_at(1), vec![0, 1, 2]);
        assert_eq!(report.mass_before, report.mass_after);
        assert!(is_absorbed(&next, &g));
        let (again, report) = step(&next, &mut clusters, &g, 0).unwrap();
        assert_eq!(levels(&again), vec![0, 6, 0, 0, 0]);
        assert_eq!(report.events, vec![A, B, A, A, A]);
    }

    #[test]
    fn ties_record_their_size() {
        let g = build_torus(1, &[3]).unwrap();
        let t = targets(&exact(&[2, 2, 0]), &g, 5).unwrap();
        assert_eq!(t.tie_sizes(), &[2, 2, 1]);
        assert_eq!(t.target(2), 2);
        assert!(t.target(0) <= 1 && t.target(1) <= 1);
    }

    #[test]
    fn swap_is_classified_as_c_events() {
        let g = build_torus(1, &[3]).unwrap();
        let t = TargetMap::from_parts(vec![1, 0, 2], vec![2, 2, 1]);
        assert_eq!(classify(&exact(&[2, 2, 0]), &t, &g), vec![C, C, A]);
    }

    #[test]
    fn constant_field_ties_everywhere() {
        let g = build_torus(2, &[6, 6]).unwrap();
        let t = targets(&exact(&[4; 36]), &g, 1).unwrap();
        assert!(t.tie_sizes().iter().all(|&s| s == 5));
        for x in 0..36 {
            assert!(g.neighborhood(x).contains(&(t.target(x) as u32)));
        }
    }

    #[test]
    fn absorption_criterion() {
        let c5 = build_torus(1, &[5]).unwrap();
        let c3 = build_torus(1, &[3]).unwrap();
        let c4 = build_torus(1, &[4]).unwrap();
        assert!(is_absorbed(&exact(&[0, 6, 0, 0, 0]), &c5));
        assert!(!is_absorbed(&exact(&[2, 2, 0]), &c3));
        assert!(is_absorbed(&exact(&[1, 0, 1, 0]), &c4));
        assert!(!is_absorbed(&exact(&[3, 1, 0, 0]), &c4));
    }

    #[test]
    fn overflow_aborts_the_step() {
        let g = build_torus(1, &[3]).unwrap();
        let big = Exact::new(u128::MAX - 1).unwrap();
        let f = Field::new(vec![big, Exact::from_u64(5), Exact::ZERO]);
        assert!(matches!(
            transition(&f, &g, 0),
            Err(EngineError::Overflow { vertex: 0, .. }) | Err(EngineError::TotalOverflow { .. })
        ));
    }

    #[test]
    fn infinite_vertices_dominate() {
        let g = build_torus(1, &[4]).unwrap();
        let f = Field::new(vec![Exact::INFINITE, Exact::from_u64(7), Exact::ZERO, Exact::from_u64(1)]);
        let t = targets(&f, &g, 0).unwrap();
        assert_eq!(t.targets(), &[0, 0, 2, 0]);
        let (next, _) = transition(&f, &g, 0).unwrap();
        assert!(next.values[0].is_infinite());
        assert!(is_absorbed(&next, &g));
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let g = build_torus(1, &[4]).unwrap();
        assert!(matches!(
            targets(&exact(&[1, 2]), &g, 0),
            Err(EngineError::ShapeMismatch { field: 2, graph: 4 })
        ));
    }

    #[test]
    fn apply_uses_injected_targets() {
        let g = build_torus(1, &[3]).unwrap();
        let f = exact(&[2, 2, 0]);
        let injected = TargetMap::from_parts(vec![1, 1, 2], vec![2, 2, 1]);
        let (next, report) = apply(&f, &g, injected).unwrap();
        assert_eq!(next, Field { values: exact(&[0, 4, 0]).values, step: 1 });
        assert_eq!(report.events, vec![E, D, A]);
        let outside = TargetMap::from_parts(vec![0, 1, 2, 0, 4], vec![1; 5]);
        let g5 = build_torus(1, &[5]).unwrap();
        assert_eq!(
            apply(&exact(&[1; 5]), &g5, outside).unwrap_err(),
            EngineError::InvalidTarget { vertex: 3, target: 0 }
        );
    }
}
