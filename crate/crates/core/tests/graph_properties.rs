use std::collections::BTreeSet;

use clusterflow_core::graph::{Boundary, EdgeTemplate, Graph};
use proptest::prelude::*;

fn assert_well_formed(g: &Graph) {
    for x in 0..g.vertex_count() {
        let nbhd = g.neighborhood(x);
        assert_eq!(nbhd[0] as usize, x, "self first in G_{x}");
        let unique: BTreeSet<u32> = nbhd.iter().copied().collect();
        assert_eq!(unique.len(), nbhd.len(), "duplicates in G_{x}");
        for &y in nbhd {
            assert!(
                g.neighborhood(y as usize).contains(&(x as u32)),
                "{y} in G_{x} but not vice versa"
            );
        }
        assert!(nbhd.len() - 1 <= g.max_degree());
    }
}

fn offsets_from(g: &Graph, x: usize) -> BTreeSet<Vec<usize>> {
    let lengths = g.lengths().to_vec();
    let (layer, base) = g.coordinates(x);
    g.neighborhood(x)
        .iter()
        .map(|&y| {
            let (other_layer, c) = g.coordinates(y as usize);
            let mut key = vec![other_layer];
            key.extend(
                c.iter()
                    .zip(&base)
                    .zip(&lengths)
                    .map(|((&a, &b), &l)| (a + l - b) % l),
            );
            key.push(layer);
            key
        })
        .collect()
}

fn lengths_strategy() -> impl Strategy<Value = Vec<usize>> {
    (1usize..=3).prop_flat_map(|d| prop::collection::vec(2usize..=6, d))
}

proptest! {
    #[test]
    fn tori_are_symmetric_and_translation_invariant(lengths in lengths_strategy()) {
        let g = Graph::torus(lengths.len(), &lengths, Boundary::Periodic).unwrap();
        assert_well_formed(&g);
        let pattern = offsets_from(&g, 0);
        for x in 1..g.vertex_count() {
            prop_assert_eq!(&offsets_from(&g, x), &pattern);
        }
        let total: usize = (0..g.vertex_count()).map(|x| g.neighborhood(x).len()).sum();
        if lengths.iter().all(|&l| l >= 3) {
            prop_assert_eq!(total, g.vertex_count() * (2 * lengths.len() + 1));
        } else {
            prop_assert!(total < g.vertex_count() * (2 * lengths.len() + 1));
        }
    }

    #[test]
    fn free_boxes_are_symmetric(lengths in lengths_strategy()) {
        let g = Graph::torus(lengths.len(), &lengths, Boundary::Free).unwrap();
        assert_well_formed(&g);
    }

    #[test]
    fn layered_graphs_are_symmetric_and_periodic(
        layers in 1usize..=3,
        length in 3usize..=6,
        raw in prop::collection::vec((0usize..3, 0usize..3, -2i64..=2), 1..5),
    ) {
        let templates: Vec<EdgeTemplate> = raw
            .into_iter()
            .map(|(a, b, o)| EdgeTemplate::new(a % layers, b % layers, [o]))
            .filter(|t| !(t.from_layer == t.to_layer && t.offset[0].rem_euclid(length as i64) == 0))
            .collect();
        let g = Graph::layered(layers, 1, &[length], &templates, Boundary::Periodic).unwrap();
        assert_well_formed(&g);
        // (j, x) -> (j, x + y) is an automorphism: per-layer offset patterns match.
        for layer in 0..layers {
            let pattern = offsets_from(&g, g.vertex_at(layer, &[0]));
            for x in 1..length {
                prop_assert_eq!(&offsets_from(&g, g.vertex_at(layer, &[x])), &pattern);
            }
        }
    }
}
