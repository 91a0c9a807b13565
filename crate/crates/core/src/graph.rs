//! Finite graphs for the dynamics: d-dimensional tori and layered periodic
//! graphs `[J] x (Z/L)^d`.
//!
//! Vertices are indexed row-major over `(layer, x_0, ..., x_{d-1})`, with the
//! last coordinate varying fastest:
//!
//! ```text
//! id = ((layer * L_0 + x_0) * L_1 + x_1) * ... + x_{d-1}
//! ```
//!
//! Each closed neighborhood lists the vertex itself first, followed by its
//! neighbors in construction order with duplicates removed. On an axis of
//! length 2 the `+1` and `-1` neighbors coincide and appear once.
//!
//! Layers are numbered from 0. With [`Boundary::Free`] the graph is a box:
//! neighbors that would wrap around are dropped, which breaks vertex
//! transitivity near the faces.

use thiserror::Error;

/// Sentinel vertex id; never a valid vertex.
pub const NO_VERTEX: u32 = u32::MAX;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("expected {expected} lengths for dimension {expected}, got {got}")]
    LengthCount { expected: usize, got: usize },
    #[error("axis {axis} has length {length}; every length must be at least 2")]
    LengthTooSmall { axis: usize, length: usize },
    #[error("vertex count overflows the 32-bit vertex index")]
    TooManyVertices,
    #[error("layer count must be at least 1")]
    NoLayers,
    #[error("template {template} references layer {layer}, but there are only {layers} layers")]
    LayerOutOfRange {
        template: usize,
        layer: usize,
        layers: usize,
    },
    #[error("template {template} has an offset of dimension {got}, expected {expected}")]
    OffsetDimension {
        template: usize,
        expected: usize,
        got: usize,
    },
    #[error("template {template} is a self-loop; self-membership is implicit")]
    SelfLoop { template: usize },
    #[error("vertex {vertex} is out of range for a graph with {count} vertices")]
    VertexOutOfRange { vertex: usize, count: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Boundary {
    #[default]
    Periodic,
    Free,
}

/// Edge generator for a layered graph: connects `(from_layer, x)` to
/// `(to_layer, x + offset)` for every lattice point `x`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EdgeTemplate {
    pub from_layer: usize,
    pub to_layer: usize,
    pub offset: Vec<i64>,
}

impl EdgeTemplate {
    pub fn new(from_layer: usize, to_layer: usize, offset: impl Into<Vec<i64>>) -> Self {
        EdgeTemplate {
            from_layer,
            to_layer,
            offset: offset.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GraphKind {
    Torus {
        lengths: Vec<usize>,
    },
    Layered {
        layers: usize,
        lengths: Vec<usize>,
        templates: Vec<EdgeTemplate>,
    },
}

/// Immutable graph with closed neighborhoods stored in compressed rows.
#[derive(Clone, Debug)]
pub struct Graph {
    kind: GraphKind,
    boundary: Boundary,
    vertex_count: usize,
    row_start: Vec<u32>,
    members: Vec<u32>,
    max_degree: usize,
}

/// Builds the torus `(Z/L_0) x ... x (Z/L_{d-1})`.
pub fn build_torus(d: usize, lengths: &[usize]) -> Result<Graph, GraphError> {
    Graph::torus(d, lengths, Boundary::Periodic)
}

/// Builds a layered periodic graph from edge templates.
pub fn build_layered(
    layers: usize,
    d: usize,
    lengths: &[usize],
    templates: &[EdgeTemplate],
) -> Result<Graph, GraphError> {
    Graph::layered(layers, d, lengths, templates, Boundary::Periodic)
}

fn check_lengths(d: usize, lengths: &[usize]) -> Result<usize, GraphError> {
    if d == 0 {
        return Err(GraphError::ZeroDimension);
    }
    if lengths.len() != d {
        return Err(GraphError::LengthCount {
            expected: d,
            got: lengths.len(),
        });
    }
    let mut cells: usize = 1;
    for (axis, &length) in lengths.iter().enumerate() {
        if length < 2 {
            return Err(GraphError::LengthTooSmall { axis, length });
        }
        cells = cells
            .checked_mul(length)
            .ok_or(GraphError::TooManyVertices)?;
    }
    Ok(cells)
}

/// Moves `coords` by `delta` along the lattice; `None` if a free boundary
/// cuts the edge.
fn shift(
    coords: &[usize],
    delta: &[i64],
    lengths: &[usize],
    boundary: Boundary,
    out: &mut [usize],
) -> bool {
    for axis in 0..coords.len() {
        let length = lengths[axis] as i64;
        let moved = coords[axis] as i64 + delta[axis];
        out[axis] = match boundary {
            Boundary::Periodic => moved.rem_euclid(length) as usize,
            Boundary::Free => {
                if moved < 0 || moved >= length {
                    return false;
                }
                moved as usize
            }
        };
    }
    true
}

impl Graph {
    pub fn torus(d: usize, lengths: &[usize], boundary: Boundary) -> Result<Graph, GraphError> {
        let cells = check_lengths(d, lengths)?;
        let mut deltas = Vec::with_capacity(2 * d);
        for axis in 0..d {
            for sign in [1i64, -1] {
                let mut delta = vec![0i64; d];
                delta[axis] = sign;
                deltas.push((0usize, delta));
            }
        }
        let kind = GraphKind::Torus {
            lengths: lengths.to_vec(),
        };
        Graph::assemble(kind, boundary, 1, cells, |layer| {
            debug_assert_eq!(layer, 0);
            deltas.clone()
        })
    }

    pub fn layered(
        layers: usize,
        d: usize,
        lengths: &[usize],
        templates: &[EdgeTemplate],
        boundary: Boundary,
    ) -> Result<Graph, GraphError> {
        let cells = check_lengths(d, lengths)?;
        if layers == 0 {
            return Err(GraphError::NoLayers);
        }
        for (i, t) in templates.iter().enumerate() {
            for layer in [t.from_layer, t.to_layer] {
                if layer >= layers {
                    return Err(GraphError::LayerOutOfRange {
                        template: i,
                        layer,
                        layers,
                    });
                }
            }
            if t.offset.len() != d {
                return Err(GraphError::OffsetDimension {
                    template: i,
                    expected: d,
                    got: t.offset.len(),
                });
            }
            let trivial = match boundary {
                Boundary::Periodic => t
                    .offset
                    .iter()
                    .zip(lengths)
                    .all(|(&o, &l)| o.rem_euclid(l as i64) == 0),
                Boundary::Free => t.offset.iter().all(|&o| o == 0),
            };
            if t.from_layer == t.to_layer && trivial {
                return Err(GraphError::SelfLoop { template: i });
            }
        }
        let kind = GraphKind::Layered {
            layers,
            lengths: lengths.to_vec(),
            templates: templates.to_vec(),
        };
        Graph::assemble(kind, boundary, layers, cells, |layer| {
            let mut deltas = Vec::new();
            for t in templates {
                if t.from_layer == layer {
                    deltas.push((t.to_layer, t.offset.clone()));
                }
                if t.to_layer == layer {
                    deltas.push((t.from_layer, t.offset.iter().map(|o| -o).collect()));
                }
            }
            deltas
        })
    }

    /// Shared construction: `deltas(layer)` lists `(target layer, offset)`
    /// pairs; self-membership is added first.
    fn assemble(
        kind: GraphKind,
        boundary: Boundary,
        layers: usize,
        cells: usize,
        deltas: impl Fn(usize) -> Vec<(usize, Vec<i64>)>,
    ) -> Result<Graph, GraphError> {
        let vertex_count = cells
            .checked_mul(layers)
            .filter(|&n| n < NO_VERTEX as usize)
            .ok_or(GraphError::TooManyVertices)?;
        let lengths = match &kind {
            GraphKind::Torus { lengths } | GraphKind::Layered { lengths, .. } => lengths.clone(),
        };
        let d = lengths.len();
        let mut row_start = Vec::with_capacity(vertex_count + 1);
        let mut members = Vec::with_capacity(vertex_count * 5);
        row_start.push(0u32);
        let mut max_degree = 0;
        let mut coords = vec![0usize; d];
        let mut moved = vec![0usize; d];
        for layer in 0..layers {
            let layer_deltas = deltas(layer);
            for cell in 0..cells {
                unravel(cell, &lengths, &mut coords);
                let this = (layer * cells + cell) as u32;
                let start = members.len();
                members.push(this);
                for (to_layer, delta) in &layer_deltas {
                    if !shift(&coords, delta, &lengths, boundary, &mut moved) {
                        continue;
                    }
                    let other = (to_layer * cells + ravel(&moved, &lengths)) as u32;
                    if !members[start..].contains(&other) {
                        members.push(other);
                    }
                }
                max_degree = max_degree.max(members.len() - start - 1);
                row_start.push(members.len() as u32);
            }
        }
        Ok(Graph {
            kind,
            boundary,
            vertex_count,
            row_start,
            members,
            max_degree,
        })
    }

    pub fn kind(&self) -> &GraphKind {
        &self.kind
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn is_torus(&self) -> bool {
        matches!(self.kind, GraphKind::Torus { .. })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn dimension(&self) -> usize {
        self.lengths().len()
    }

    pub fn lengths(&self) -> &[usize] {
        match &self.kind {
            GraphKind::Torus { lengths } | GraphKind::Layered { lengths, .. } => lengths,
        }
    }

    pub fn layers(&self) -> usize {
        match &self.kind {
            GraphKind::Torus { .. } => 1,
            GraphKind::Layered { layers, .. } => *layers,
        }
    }

    /// Largest `|G_x| - 1`.
    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Checked access to `G_x`.
    pub fn closed_neighborhood(&self, x: usize) -> Result<&[u32], GraphError> {
        if x >= self.vertex_count {
            return Err(GraphError::VertexOutOfRange {
                vertex: x,
                count: self.vertex_count,
            });
        }
        Ok(self.neighborhood(x))
    }

    /// `G_x` without the range check. Panics if `x` is out of range.
    #[inline]
    pub fn neighborhood(&self, x: usize) -> &[u32] {
        let lo = self.row_start[x] as usize;
        let hi = self.row_start[x + 1] as usize;
        &self.members[lo..hi]
    }

    /// Splits a vertex id into its layer and lattice coordinates.
    pub fn coordinates(&self, x: usize) -> (usize, Vec<usize>) {
        let lengths = self.lengths();
        let cells: usize = lengths.iter().product();
        let mut coords = vec![0; lengths.len()];
        unravel(x % cells, lengths, &mut coords);
        (x / cells, coords)
    }

    /// Inverse of [`Graph::coordinates`]; coordinates are reduced modulo the
    /// lengths.
    pub fn vertex_at(&self, layer: usize, coords: &[usize]) -> usize {
        let lengths = self.lengths();
        let cells: usize = lengths.iter().product();
        let reduced: Vec<usize> = coords.iter().zip(lengths).map(|(c, l)| c % l).collect();
        layer * cells + ravel(&reduced, lengths)
    }
}

fn ravel(coords: &[usize], lengths: &[usize]) -> usize {
    coords
        .iter()
        .zip(lengths)
        .fold(0, |acc, (&c, &l)| acc * l + c)
}

fn unravel(mut index: usize, lengths: &[usize], out: &mut [usize]) {
    for axis in (0..lengths.len()).rev() {
        out[axis] = index % lengths[axis];
        index /= lengths[axis];
    }
}
