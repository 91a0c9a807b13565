//! Statistical checks of the randomized kernel against independently
//! derived values.

use clusterflow_core::engine::{self, RunOptions};
use clusterflow_core::graph::build_torus;
use clusterflow_core::stats;
use clusterflow_core::{rng, DistributionSpec, Exact, Field, Law};

fn exact(levels: &[u64]) -> Field<Exact> {
    Field::new(levels.iter().map(|&v| Exact::from_u64(v)).collect())
}

/// Exact expectation of the moving-origin fraction on the 3-cycle started
/// from (2,2,0), by enumerating tie-break outcomes layer by layer to
/// `depth`, merging identical states. On the 3-cycle every closed
/// neighborhood is the whole vertex set.
fn moving_fraction_by_enumeration(n: u64, depth: u64) -> f64 {
    use std::collections::BTreeMap;
    // (values, locations, moved-after-n flags) -> probability
    type State = ([u64; 3], [usize; 3], [bool; 3]);
    let mut layer: BTreeMap<State, f64> = BTreeMap::new();
    layer.insert(([2, 2, 0], [0, 1, 2], [false; 3]), 1.0);
    let mut expectation = 0.0;
    for step in 0..depth {
        let mut next: BTreeMap<State, f64> = BTreeMap::new();
        for ((values, loc, flags), prob) in layer {
            let positives = (0..3).filter(|&x| values[x] > 0).count();
            if positives < 2 {
                let moving = flags.iter().filter(|&&f| f).count();
                expectation += prob * moving as f64 / 3.0;
                continue;
            }
            let top = *values.iter().max().unwrap();
            let maximizers: Vec<usize> = (0..3).filter(|&y| values[y] == top).collect();
            // Each positive vertex picks among the maximizers independently.
            let mut choices: Vec<Vec<usize>> = vec![vec![]];
            for (x, &level) in values.iter().enumerate() {
                let options = if level > 0 { maximizers.clone() } else { vec![x] };
                choices = choices
                    .into_iter()
                    .flat_map(|c| {
                        options.iter().map(move |&o| {
                            let mut c = c.clone();
                            c.push(o);
                            c
                        })
                    })
                    .collect();
            }
            let weight = prob / choices.len() as f64;
            for a in choices {
                let mut moved_values = [0u64; 3];
                for x in 0..3 {
                    moved_values[a[x]] += values[x];
                }
                let mut moved_loc = loc;
                let mut moved_flags = flags;
                for v in 0..3 {
                    let to = a[loc[v]];
                    if to != loc[v] && step > n {
                        moved_flags[v] = true;
                    }
                    moved_loc[v] = to;
                }
                *next.entry((moved_values, moved_loc, moved_flags)).or_insert(0.0) += weight;
            }
        }
        layer = next;
    }
    let leftover: f64 = layer.values().sum();
    assert!(leftover < 1e-9);
    expectation
}

#[test]
fn enumeration_agrees_with_closed_form() {
    for n in 0..5 {
        let exact = moving_fraction_by_enumeration(n, 40);
        // Final transition moves one origin; earlier non-absorbing steps either
        // swap (both move) or stay (neither moves) with equal odds.
        let closed = (2.0 / 9.0) * 0.5f64.powi(n as i32);
        assert!((exact - closed).abs() < 1e-9, "n={n}: {exact} vs {closed}");
    }
}

#[test]
fn tied_pair_absorbs_geometrically_and_moving_mass_matches() {
    let g = build_torus(1, &[3]).unwrap();
    let trials = 40_000u64;
    let mut total_steps = 0u64;
    let mut survival = [0u64; 4];
    let mut moving = [0.0f64; 4];
    for t in 0..trials {
        let opts = RunOptions { seed: rng::derive_seed(1, t), ..RunOptions::default() };
        let result = engine::run(&g, exact(&[2, 2, 0]), &opts, &mut []).unwrap();
        let absorbed_at = result.absorption_step.unwrap();
        total_steps += absorbed_at;
        for k in 0..4 {
            if absorbed_at > k as u64 {
                survival[k] += 1;
            }
            moving[k] += stats::moving_mass_fraction(&result, k as u64).origins;
        }
    }
    let mean = total_steps as f64 / trials as f64;
    // Var T = 2 for a geometric(1/2) on {1,2,...}.
    let se = (2.0 / trials as f64).sqrt();
    assert!((mean - 2.0).abs() < 4.0 * se, "mean absorption {mean}");
    for k in 0..4 {
        let p = 0.5f64.powi(k as i32);
        let freq = survival[k] as f64 / trials as f64;
        let sd = (p * (1.0 - p) / trials as f64).sqrt().max(1e-12);
        assert!((freq - p).abs() <= 4.0 * sd + 1e-12, "P(T>{k}) = {freq}");
        let expect = moving_fraction_by_enumeration(k as u64, 40);
        let got = moving[k] / trials as f64;
        // Per-run fraction lies in [0, 2/3]; crude bound on its sd.
        assert!((got - expect).abs() < 4.0 * (1.0 / 3.0) / (trials as f64).sqrt(), "k={k}: {got} vs {expect}");
    }
}

#[test]
fn constant_field_activity_is_four_fifths() {
    // Every vertex picks uniformly from its 5-point neighborhood, self w.p. 1/5.
    let g = build_torus(2, &[16, 16]).unwrap();
    let seeds = 60;
    let mut acc = 0.0;
    for seed in 0..seeds {
        let report = engine::transition(&exact(&[1; 256]), &g, seed).unwrap().1;
        acc += stats::activity(&report);
    }
    let mean = acc / seeds as f64;
    let sigma = (0.8f64 * 0.2 / (256.0 * seeds as f64)).sqrt();
    assert!((mean - 0.8).abs() < 3.0 * sigma, "activity {mean}");
}

#[test]
fn shifted_fields_share_one_point_statistics() {
    // Cyclic exchangeability in law: mean level at vertex 0 and vertex 7
    // agree over many seeds.
    let g = build_torus(1, &[16]).unwrap();
    let spec = DistributionSpec::new(Law::UniformInt { a: 0, b: 9 });
    let seeds = 4000;
    let (mut at0, mut at7) = (0.0, 0.0);
    for seed in 0..seeds {
        let f: Field<Exact> = clusterflow_core::sample_field(&g, &spec, seed).unwrap();
        at0 += f.values[0].get().unwrap() as f64;
        at7 += f.values[7].get().unwrap() as f64;
    }
    let sd = (99.0 / 12.0 * 2.0 / seeds as f64).sqrt();
    assert!(((at0 - at7) / seeds as f64).abs() < 4.0 * sd);
    assert!((at0 / seeds as f64 - 4.5).abs() < 4.0 * (99.0f64 / 12.0 / seeds as f64).sqrt());
}
