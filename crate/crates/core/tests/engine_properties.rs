use clusterflow_core::engine::{self, EventTag, RunOptions, StepView};
use clusterflow_core::graph::{build_layered, build_torus, EdgeTemplate, Graph};
use clusterflow_core::oracle::{self, TieChoices};
use clusterflow_core::stats;
use clusterflow_core::{ClusterState, Exact, Field, Real, Resource};
use proptest::prelude::*;

fn graph_for(kind: u8, a: usize, b: usize) -> Graph {
    match kind % 3 {
        0 => build_torus(1, &[a + 1]).unwrap(),
        1 => build_torus(2, &[a.min(4), b.min(4)]).unwrap(),
        _ => build_layered(
            2,
            1,
            &[a + 1],
            &[
                EdgeTemplate::new(0, 0, [1]),
                EdgeTemplate::new(1, 1, [1]),
                EdgeTemplate::new(0, 1, [0]),
            ],
        )
        .unwrap(),
    }
}

fn instance() -> impl Strategy<Value = (Graph, Vec<u64>, u64)> {
    (0u8..3, 2usize..7, 2usize..5, any::<u64>()).prop_flat_map(|(kind, a, b, seed)| {
        let g = graph_for(kind, a, b);
        let n = g.vertex_count();
        (Just(g), prop::collection::vec(0u64..4, n), Just(seed))
    })
}

fn exact(levels: &[u64]) -> Field<Exact> {
    Field::new(levels.iter().map(|&v| Exact::from_u64(v)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn one_step_laws((g, levels, seed) in instance()) {
        let field = exact(&levels);
        let mut clusters = ClusterState::new(g.vertex_count());
        let (next, report) = engine::step(&field, &mut clusters, &g, seed).unwrap();
        prop_assert_eq!(report.mass_before, report.mass_after);
        prop_assert_eq!(stats::in_degree_total(&report.targets), g.vertex_count() as u64);
        prop_assert_eq!(clusters.total_members(), g.vertex_count() as u64);
        prop_assert_eq!(report.counts.total(), g.vertex_count());
        prop_assert_eq!(stats::cluster_moment(&clusters, 1.0), 1.0);
        for x in 0..g.vertex_count() {
            let a = report.targets.target(x);
            prop_assert!(g.neighborhood(x).contains(&(a as u32)));
            prop_assert!(report.targets.tie_size(x) as usize <= g.neighborhood(x).len());
            prop_assert!(field.values[a] >= field.values[x]);
            if !field.values[x].is_positive() {
                prop_assert_eq!(a, x);
                prop_assert!(!next.values[x].is_positive());
            }
            if next.values[x] > field.values[x] {
                prop_assert_eq!(report.events[x], EventTag::D);
            }
            // Clusters follow the targets.
            prop_assert_eq!(clusters.location_of(x), a);
        }
        let naive = oracle::naive_step(
            &oracle::to_amounts(&field),
            &g,
            &TieChoices::from_targets(&report.targets),
        ).unwrap();
        prop_assert_eq!(naive, oracle::to_amounts(&next));
    }

    #[test]
    fn absorbed_states_are_fixed((g, levels, seed) in instance()) {
        let result = engine::run(&g, exact(&levels), &RunOptions { seed, ..RunOptions::default() }, &mut []).unwrap();
        prop_assert!(result.absorbed);
        let last = &result.final_field;
        for s in 0..5 {
            let (again, report) = engine::transition(last, &g, seed.wrapping_add(s)).unwrap();
            prop_assert_eq!(&again.values, &last.values);
            prop_assert_eq!(report.movers, 0);
            prop_assert_eq!(report.ties, 0);
        }
        prop_assert!(result.e_events.iter().all(|&e| e <= 1));
        let moving = stats::moving_mass_fraction(&result, result.absorption_step.unwrap());
        prop_assert_eq!(moving.origins, 0.0);
        for (v, m) in result.last_move.iter().enumerate() {
            if let Some(m) = m {
                prop_assert!(*m < result.absorption_step.unwrap(), "origin {v}");
            }
        }
    }

    #[test]
    fn real_mode_conserves_mass(
        levels in prop::collection::vec(0.0f64..10.0, 36),
        seed in any::<u64>(),
    ) {
        let g = build_torus(2, &[6, 6]).unwrap();
        let field: Field<Real> = Field::new(levels.iter().map(|&v| Real::new(v).unwrap()).collect());
        let mut check = |view: &StepView<'_, Real>| {
            let before = view.report.mass_before.get();
            let after = view.report.mass_after.get();
            assert!((after - before).abs() <= 1e-9 * before.max(f64::MIN_POSITIVE));
        };
        engine::run(&g, field, &RunOptions { seed, ..RunOptions::default() }, &mut [&mut check]).unwrap();
    }
}

#[test]
fn zero_vertices_stay_zero_and_e_events_happen_once() {
    let g = build_torus(2, &[12, 12]).unwrap();
    for seed in 0..10 {
        let levels: Vec<u64> = (0..144u64).map(|i| clusterflow_core::rng::mix64(i ^ seed) % 3).collect();
        let mut zero_since: Vec<Option<u64>> = vec![None; 144];
        let mut observer = |view: &StepView<'_, Exact>| {
            for (x, z) in zero_since.iter_mut().enumerate() {
                let zero = !view.field.values[x].is_positive();
                if z.is_some() {
                    assert!(zero, "vertex {x} revived at step {}", view.field.step);
                } else if zero {
                    *z = Some(view.field.step);
                }
            }
        };
        let result = engine::run(&g, exact(&levels), &RunOptions { seed, ..RunOptions::default() }, &mut [&mut observer]).unwrap();
        assert!(result.absorbed);
        assert!(result.e_events.iter().all(|&e| e <= 1));
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let g = build_torus(2, &[48, 48]).unwrap();
    let spec = clusterflow_core::DistributionSpec::new(clusterflow_core::Law::Geometric { p: 0.5 });
    let run_with = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let f: Field<Exact> = clusterflow_core::sample_field(&g, &spec, 3).unwrap();
            let r = engine::run(&g, f, &RunOptions { seed: 3, ..RunOptions::default() }, &mut []).unwrap();
            (r.final_field.values, r.rows, r.last_move)
        })
    };
    let one = run_with(1);
    let eight = run_with(8);
    assert_eq!(one.0, eight.0);
    assert_eq!(one.1, eight.1);
    assert_eq!(one.2, eight.2);
}
