//! Estimators and exact identities over step data and finished runs.
//!
//! Population statistics are spatial averages over the whole graph; on a
//! torus they stand in for probabilities at a fixed vertex.

use std::collections::BTreeMap;

use crate::cluster::ClusterState;
use crate::engine::{EventTag, RunOptions, StepReport, StepView, TargetMap};
use crate::graph::Graph;
use crate::init::Field;
use crate::value::{Magnitude, Resource};

/// One time-series sample.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeriesRow {
    pub step: u64,
    pub activity: f64,
    pub ties: usize,
    pub counts: [usize; 5],
    pub max_gap: Magnitude,
    pub mean_gap: f64,
    pub active_count: usize,
    pub max_cluster: u32,
    pub moment_alpha: f64,
    /// One entry per configured `(delta, k)` pair, in configuration order.
    pub joint_gap: Vec<f64>,
    pub total_mass: Magnitude,
}

impl TimeSeriesRow {
    pub fn capture<V: Resource>(view: &StepView<'_, V>, opts: &RunOptions) -> Self {
        let n = view.graph.vertex_count();
        let values = &view.field.values;
        let targets = &view.report.targets;
        let mut max_gap = V::ZERO;
        let mut gap_sum = 0.0;
        let mut active = 0usize;
        let mut joint = vec![0usize; opts.joint_thresholds.len()];
        for x in 0..n {
            let own = values[x];
            if !own.is_positive() {
                continue;
            }
            active += 1;
            let gap = values[targets.target(x)].excess_over(own);
            if gap > max_gap {
                max_gap = gap;
            }
            let gap = gap.to_f64();
            gap_sum += gap;
            if gap > 0.0 {
                let size = view.clusters.size_at(x);
                for (slot, t) in joint.iter_mut().zip(&opts.joint_thresholds) {
                    if gap < t.delta && size <= t.k {
                        *slot += 1;
                    }
                }
            }
        }
        TimeSeriesRow {
            step: view.field.step,
            activity: activity(view.report),
            ties: view.report.ties,
            counts: view.report.counts.as_array(),
            max_gap: max_gap.magnitude(),
            mean_gap: if active == 0 { 0.0 } else { gap_sum / active as f64 },
            active_count: active,
            max_cluster: view.clusters.max_size(),
            moment_alpha: cluster_moment(view.clusters, opts.moment_alpha),
            joint_gap: joint.into_iter().map(|c| c as f64 / n as f64).collect(),
            total_mass: view.report.mass_before.magnitude(),
        }
    }
}

/// Outcome of [`crate::engine::run`].
#[derive(Clone, Debug)]
pub struct RunResult<V> {
    pub rows: Vec<TimeSeriesRow>,
    pub absorbed: bool,
    pub absorption_step: Option<u64>,
    pub steps_taken: u64,
    pub initial_field: Field<V>,
    pub final_field: Field<V>,
    pub clusters: ClusterState,
    /// Per origin: last step `m` with `L_{m+1}(v) != L_m(v)`.
    pub last_move: Vec<Option<u64>>,
    pub d_events: Vec<u32>,
    pub e_events: Vec<u32>,
    pub tie_events: Vec<u32>,
    /// Event tags of the trailing steps, oldest first.
    pub recent_events: Vec<Vec<EventTag>>,
}

/// Fraction of vertices with `a_n(x) != x`.
pub fn activity<V>(report: &StepReport<V>) -> f64 {
    let n = report.targets.len();
    if n == 0 {
        0.0
    } else {
        report.movers as f64 / n as f64
    }
}

/// In-degree `|E_n(x)|` of every vertex, tallied from the targets.
pub fn in_degrees(targets: &TargetMap) -> Vec<u32> {
    let mut degree = vec![0u32; targets.len()];
    for &t in targets.targets() {
        degree[t as usize] += 1;
    }
    degree
}

/// `sum_x |E_n(x)|`; always the vertex count.
pub fn in_degree_total(targets: &TargetMap) -> u64 {
    in_degrees(targets).iter().map(|&d| u64::from(d)).sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapStats<V> {
    pub max: V,
    pub mean: f64,
    pub active_count: usize,
}

/// Statistics of `C'_n(x) - C_n(x)` over active vertices, computed from
/// neighborhood maxima. An all-zero field reports zeros.
pub fn gap_stats<V: Resource>(field: &Field<V>, g: &Graph) -> GapStats<V> {
    let mut max = V::ZERO;
    let mut sum = 0.0;
    let mut active = 0;
    for (x, &own) in field.values.iter().enumerate() {
        if !own.is_positive() {
            continue;
        }
        active += 1;
        let mut top = own;
        for &y in g.neighborhood(x) {
            let v = field.values[y as usize];
            if v > top {
                top = v;
            }
        }
        let gap = top.excess_over(own);
        if gap > max {
            max = gap;
        }
        sum += gap.to_f64();
    }
    GapStats {
        max,
        mean: if active == 0 { 0.0 } else { sum / active as f64 },
        active_count: active,
    }
}

/// Cluster size -> number of occupied locations.
pub fn cluster_histogram(clusters: &ClusterState) -> BTreeMap<u32, usize> {
    clusters.histogram()
}

/// `sum_x |S_n(x)|^alpha / V`. Exactly 1 for `alpha = 1`.
pub fn cluster_moment(clusters: &ClusterState, alpha: f64) -> f64 {
    let n = clusters.vertex_count() as f64;
    if alpha == 1.0 {
        return clusters.total_members() as f64 / n;
    }
    let sum: f64 = if alpha.fract() == 0.0 && alpha <= i32::MAX as f64 {
        let k = alpha as i32;
        clusters.occupied_sizes().map(|s| f64::from(s).powi(k)).sum()
    } else {
        clusters.occupied_sizes().map(|s| f64::from(s).powf(alpha)).sum()
    };
    sum / n
}

/// Fraction of vertices covered by joint events `0 < gap < delta` with
/// `|S_n(x)| <= k`.
pub fn joint_gap_fraction<V: Resource>(
    field: &Field<V>,
    g: &Graph,
    clusters: &ClusterState,
    delta: f64,
    k: u32,
) -> f64 {
    let hits = (0..field.values.len())
        .filter(|&x| {
            let own = field.values[x];
            if !own.is_positive() {
                return false;
            }
            let top = g
                .neighborhood(x)
                .iter()
                .map(|&y| field.values[y as usize])
                .fold(own, |a, b| if b > a { b } else { a });
            let gap = top.excess_over(own).to_f64();
            gap > 0.0 && gap < delta && clusters.size_at(x) <= k
        })
        .count();
    hits as f64 / field.values.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MovingMass {
    /// Fraction of origins that still move after step `n`.
    pub origins: f64,
    /// Same, weighted by initial resource.
    pub mass: f64,
    /// Set when the run did not absorb, so the values are lower bounds.
    pub lower_bound: bool,
}

/// Fraction of origins `v` with `last_move(v) > n`, plus the mass-weighted
/// variant `sum C_0(v) 1[last_move(v) > n] / sum C_0(v)`.
pub fn moving_mass_fraction<V: Resource>(run: &RunResult<V>, n: u64) -> MovingMass {
    let count = run.last_move.len();
    let mut movers = 0usize;
    let mut moving_mass = 0.0;
    let mut total_mass = 0.0;
    for (v, last) in run.last_move.iter().enumerate() {
        let mass = run.initial_field.values[v].to_f64();
        total_mass += mass;
        if matches!(last, Some(m) if *m > n) {
            movers += 1;
            moving_mass += mass;
        }
    }
    MovingMass {
        origins: if count == 0 { 0.0 } else { movers as f64 / count as f64 },
        mass: if total_mass > 0.0 { moving_mass / total_mass } else { 0.0 },
        lower_bound: !run.absorbed,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VertexType {
    A,
    B,
    C,
    Undetermined,
}

/// Final vertex typing. Absorbed runs type each vertex by its final value;
/// otherwise a vertex gets the type of the tag holding a strict majority of
/// the trailing window, and `Undetermined` when no A, B or C tag does.
pub fn vertex_type<V: Resource>(run: &RunResult<V>) -> Vec<VertexType> {
    if run.absorbed {
        return run
            .final_field
            .values
            .iter()
            .map(|v| if v.is_positive() { VertexType::B } else { VertexType::A })
            .collect();
    }
    let n = run.final_field.values.len();
    let window = run.recent_events.len();
    (0..n)
        .map(|x| {
            let mut counts = [0usize; 5];
            for events in &run.recent_events {
                counts[events[x].index()] += 1;
            }
            let majority = |tag: EventTag| 2 * counts[tag.index()] > window;
            if majority(EventTag::A) {
                VertexType::A
            } else if majority(EventTag::B) {
                VertexType::B
            } else if majority(EventTag::C) {
                VertexType::C
            } else {
                VertexType::Undetermined
            }
        })
        .collect()
}
