//! Cluster genealogy: which origins' resources sit together, and where.
//!
//! Every origin `v` starts as a singleton cluster at `L_0(v) = v`. A step
//! moves the cluster at `x` to `a_n(x)`; clusters landing on the same vertex
//! merge and never split. Origins with zero resource keep their singleton
//! cluster in place forever, since no positive resource can land on a zero
//! vertex.
//!
//! Last-move times are kept lazily. Each root stores the last step its
//! cluster moved; a non-root stores the step at which it was attached. When
//! clusters merge, the one that stayed put (at most one) survives as root,
//! so every attached subtree has a stamp no smaller than anything its new
//! root recorded before. The last move of an origin is then the maximum
//! stamp on its path to the root.

use std::collections::BTreeMap;

use crate::engine::TargetMap;
use crate::graph::NO_VERTEX;

#[derive(Clone, Debug)]
pub struct ClusterState {
    parent: Vec<u32>,
    /// Member count, valid at roots.
    size: Vec<u32>,
    /// Current location, valid at roots.
    location: Vec<u32>,
    /// Location -> root, or `NO_VERTEX` when unoccupied.
    occupant: Vec<u32>,
    /// Move stamp: 0 for never, otherwise step + 1.
    stamp: Vec<u64>,
    scratch: Vec<u32>,
}

impl ClusterState {
    /// All singletons in place.
    pub fn new(vertex_count: usize) -> Self {
        let ids: Vec<u32> = (0..vertex_count as u32).collect();
        ClusterState {
            parent: ids.clone(),
            size: vec![1; vertex_count],
            location: ids.clone(),
            occupant: ids,
            stamp: vec![0; vertex_count],
            scratch: vec![NO_VERTEX; vertex_count],
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.parent.len()
    }

    /// Relocates every cluster along `targets` and merges collisions.
    /// `step` is the index `n` of the transition `n -> n + 1`.
    pub fn advance(&mut self, targets: &TargetMap, step: u64) {
        let n = self.vertex_count();
        debug_assert_eq!(targets.len(), n);
        let next = &mut self.scratch;
        next.fill(NO_VERTEX);
        for x in 0..n {
            let root = self.occupant[x];
            if root == NO_VERTEX {
                continue;
            }
            let y = targets.target(x);
            if y != x {
                self.stamp[root as usize] = step + 1;
            }
            let held = next[y];
            if held == NO_VERTEX {
                next[y] = root;
                self.location[root as usize] = y as u32;
                continue;
            }
            // The cluster already at y stays only if y targets itself.
            let (survivor, absorbed) = if y == x { (root, held) } else { (held, root) };
            self.parent[absorbed as usize] = survivor;
            self.size[survivor as usize] += self.size[absorbed as usize];
            self.location[survivor as usize] = y as u32;
            next[y] = survivor;
        }
        std::mem::swap(&mut self.occupant, &mut self.scratch);
    }

    /// Root of `v`'s cluster, compressing the path.
    pub fn find(&mut self, v: usize) -> usize {
        let mut root = v;
        while self.parent[root] as usize != root {
            root = self.parent[root] as usize;
        }
        // Fold path stamps top-down so each node keeps the max below the root.
        let mut path = Vec::new();
        let mut node = v;
        while node != root {
            path.push(node);
            node = self.parent[node] as usize;
        }
        let mut acc = 0;
        for &node in path.iter().rev() {
            acc = acc.max(self.stamp[node]);
            self.stamp[node] = acc;
            self.parent[node] = root as u32;
        }
        root
    }

    fn find_readonly(&self, mut v: usize) -> (usize, u64) {
        let mut best = 0;
        while self.parent[v] as usize != v {
            best = best.max(self.stamp[v]);
            v = self.parent[v] as usize;
        }
        (v, best)
    }

    /// `L_n(v)`.
    pub fn location_of(&self, v: usize) -> usize {
        let (root, _) = self.find_readonly(v);
        self.location[root] as usize
    }

    /// `|S_n(x)|`, zero for an unoccupied location.
    #[inline]
    pub fn size_at(&self, x: usize) -> u32 {
        match self.occupant[x] {
            NO_VERTEX => 0,
            root => self.size[root as usize],
        }
    }

    pub fn is_occupied(&self, x: usize) -> bool {
        self.occupant[x] != NO_VERTEX
    }

    pub fn occupied_count(&self) -> usize {
        self.occupant.iter().filter(|&&r| r != NO_VERTEX).count()
    }

    /// Members of the cluster at `x` (sorted), empty if unoccupied.
    pub fn members_at(&self, x: usize) -> Vec<usize> {
        let root = self.occupant[x];
        if root == NO_VERTEX {
            return Vec::new();
        }
        (0..self.vertex_count())
            .filter(|&v| self.find_readonly(v).0 == root as usize)
            .collect()
    }

    /// Last step `m` with `L_{m+1}(v) != L_m(v)`, per origin.
    pub fn last_moves(&self) -> Vec<Option<u64>> {
        (0..self.vertex_count())
            .map(|v| {
                let (root, path) = self.find_readonly(v);
                let stamp = path.max(self.stamp[root]);
                stamp.checked_sub(1)
            })
            .collect()
    }

    /// Iterator over `|S_n(x)|` for occupied locations.
    pub fn occupied_sizes(&self) -> impl Iterator<Item = u32> + '_ {
        self.occupant
            .iter()
            .filter(|&&r| r != NO_VERTEX)
            .map(|&r| self.size[r as usize])
    }

    /// Size -> number of occupied locations with that cluster size.
    pub fn histogram(&self) -> BTreeMap<u32, usize> {
        let mut hist = BTreeMap::new();
        for s in self.occupied_sizes() {
            *hist.entry(s).or_insert(0) += 1;
        }
        hist
    }

    /// `sum_x |S_n(x)|`; equals the vertex count.
    pub fn total_members(&self) -> u64 {
        self.occupied_sizes().map(u64::from).sum()
    }

    pub fn max_size(&self) -> u32 {
        self.occupied_sizes().max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn targets(t: &[u32]) -> TargetMap {
        TargetMap::from_parts(t.to_vec(), vec![1; t.len()])
    }

    #[test]
    fn cycle_five_merge() {
        let mut c = ClusterState::new(5);
        c.advance(&targets(&[1, 1, 1, 3, 4]), 0);
        assert_eq!(c.size_at(1), 3);
        assert_eq!(c.members_at(1), vec![0, 1, 2]);
        assert!(!c.is_occupied(0) && !c.is_occupied(2));
        assert_eq!(c.histogram(), BTreeMap::from([(1, 2), (3, 1)]));
        assert_eq!(c.total_members(), 5);
        // Origin 1 never left vertex 1.
        assert_eq!(c.last_moves(), vec![Some(0), None, Some(0), None, None]);
        for v in 0..3 {
            assert_eq!(c.location_of(v), 1);
        }
    }

    #[test]
    fn swap_moves_both_and_merge_keeps_history() {
        let mut c = ClusterState::new(3);
        c.advance(&targets(&[1, 0, 2]), 0);
        assert_eq!(c.location_of(0), 1);
        assert_eq!(c.location_of(1), 0);
        assert_eq!(c.last_moves(), vec![Some(0), Some(0), None]);
        // Cluster at 1 (origin 0) stays, cluster at 0 (origin 1) joins it.
        c.advance(&targets(&[1, 1, 2]), 1);
        assert_eq!(c.last_moves(), vec![Some(0), Some(1), None]);
        assert_eq!(c.size_at(1), 2);
        // The merged cluster moves: everyone gets the new stamp.
        c.advance(&targets(&[0, 2, 2]), 2);
        assert_eq!(c.location_of(0), 2);
        assert_eq!(c.size_at(2), 3);
        let _ = c.find(1);
        assert_eq!(c.last_moves(), vec![Some(2), Some(2), None]);
    }
}
