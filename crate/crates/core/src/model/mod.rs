//! Graphs, placements and frameworks.
//!
//! Each unordered edge `{v, w}` is stored as `(v, w)` with `v` declared before
//! `w`. Every operator row for the edge is built from `p_v - p_w` under this
//! orientation.

pub mod json;

use std::collections::HashMap;

use crate::norms::{EdgeGeometry, NormError, NormSpec};
use crate::numeric::{Rational, Scalar};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("vertex {name:?} is declared twice")]
    DuplicateVertex { index: usize, name: String },
    #[error("edge {edge} names undeclared vertex {name:?}")]
    UnknownVertex {
        edge: usize,
        end: usize,
        name: String,
    },
    #[error("edge {edge} is a loop at {name:?}")]
    Loop { edge: usize, name: String },
    #[error("edge {edge} duplicates edge {first}")]
    DuplicateEdge { edge: usize, first: usize },
    #[error("vertex {name:?} has no coordinates")]
    MissingCoordinates { name: String },
    #[error("{got} coordinate vectors for {expected} vertices")]
    ExtraCoordinates { expected: usize, got: usize },
    #[error("coordinates of {name:?} have dimension {got}, expected {expected}")]
    CoordinateDimension {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error(transparent)]
    Norm(#[from] NormError),
}

/// Finite simple graph with named vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    vertices: Vec<String>,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new<S: AsRef<str>>(vertices: &[S], edges: &[(S, S)]) -> Result<Self, ModelError> {
        let mut index: HashMap<&str, usize> = HashMap::new();
        for (i, v) in vertices.iter().enumerate() {
            if index.insert(v.as_ref(), i).is_some() {
                return Err(ModelError::DuplicateVertex {
                    index: i,
                    name: v.as_ref().to_string(),
                });
            }
        }
        let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
        let mut out = Vec::with_capacity(edges.len());
        for (e, (a, b)) in edges.iter().enumerate() {
            let lookup = |end: usize, name: &S| {
                index
                    .get(name.as_ref())
                    .copied()
                    .ok_or_else(|| ModelError::UnknownVertex {
                        edge: e,
                        end,
                        name: name.as_ref().to_string(),
                    })
            };
            let (i, j) = (lookup(0, a)?, lookup(1, b)?);
            if i == j {
                return Err(ModelError::Loop {
                    edge: e,
                    name: a.as_ref().to_string(),
                });
            }
            let key = (i.min(j), i.max(j));
            if let Some(&first) = seen.get(&key) {
                return Err(ModelError::DuplicateEdge { edge: e, first });
            }
            seen.insert(key, e);
            out.push(key);
        }
        Ok(Graph {
            vertices: vertices.iter().map(|v| v.as_ref().to_string()).collect(),
            edges: out,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_names(&self) -> &[String] {
        &self.vertices
    }

    pub fn vertex_index(&self, name: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v == name)
    }

    /// Oriented edges `(v, w)` with `v < w`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_names(&self, e: usize) -> (&str, &str) {
        let (v, w) = self.edges[e];
        (&self.vertices[v], &self.vertices[w])
    }

    pub fn edge_label(&self, e: usize) -> String {
        let (v, w) = self.edge_names(e);
        format!("{v}-{w}")
    }
}

/// Placement-level differentiability summary.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Classification {
    pub well_positioned: bool,
    pub second_order_well_positioned: bool,
    /// Edges at which the rigidity map is not differentiable.
    pub badly_positioned_edges: Vec<usize>,
}

/// Graph, placement and norm, with the per-edge norm geometry computed on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Framework<T> {
    graph: Graph,
    placement: Vec<Vec<T>>,
    norm: NormSpec<T>,
    geometry: Vec<EdgeGeometry<T>>,
}

impl<T: Scalar> Framework<T> {
    /// `placement[i]` holds the coordinates of vertex `i`.
    pub fn new(
        graph: Graph,
        placement: Vec<Vec<T>>,
        norm: NormSpec<T>,
    ) -> Result<Self, ModelError> {
        if placement.len() < graph.vertex_count() {
            let name = graph.vertices[placement.len()].clone();
            return Err(ModelError::MissingCoordinates { name });
        }
        if placement.len() > graph.vertex_count() {
            return Err(ModelError::ExtraCoordinates {
                expected: graph.vertex_count(),
                got: placement.len(),
            });
        }
        for (i, p) in placement.iter().enumerate() {
            if p.len() != norm.dim() {
                return Err(ModelError::CoordinateDimension {
                    name: graph.vertices[i].clone(),
                    expected: norm.dim(),
                    got: p.len(),
                });
            }
        }
        let geometry = graph
            .edges
            .iter()
            .map(|&(v, w)| norm.classify_edge_vector(&difference(&placement[v], &placement[w])))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Framework {
            graph,
            placement,
            norm,
            geometry,
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn placement(&self) -> &[Vec<T>] {
        &self.placement
    }

    pub fn norm(&self) -> &NormSpec<T> {
        &self.norm
    }

    pub fn dim(&self) -> usize {
        self.norm.dim()
    }

    /// Length `d|V|` of a velocity vector.
    pub fn coord_count(&self) -> usize {
        self.dim() * self.graph.vertex_count()
    }

    pub fn geometry(&self) -> &[EdgeGeometry<T>] {
        &self.geometry
    }

    /// `p_v - p_w` for oriented edge `e = (v, w)`.
    pub fn edge_vector(&self, e: usize) -> Vec<T> {
        let (v, w) = self.graph.edges[e];
        difference(&self.placement[v], &self.placement[w])
    }

    /// `u_v - u_w` for a velocity vector `u` of length `d|V|`.
    pub fn edge_difference(&self, e: usize, u: &[T]) -> Vec<T> {
        let d = self.dim();
        let (v, w) = self.graph.edges[e];
        difference(&u[v * d..(v + 1) * d], &u[w * d..(w + 1) * d])
    }

    pub fn rigidity_map(&self) -> Vec<T> {
        (0..self.graph.edge_count())
            .map(|e| {
                self.norm
                    .evaluate(&self.edge_vector(e))
                    .expect("dimension checked")
            })
            .collect()
    }

    pub fn classify(&self) -> Classification {
        let badly: Vec<usize> = (0..self.geometry.len())
            .filter(|&e| !self.geometry[e].is_differentiable())
            .collect();
        let well = badly.is_empty();
        Classification {
            well_positioned: well,
            second_order_well_positioned: well
                && self.geometry.iter().all(|g| g.is_twice_differentiable()),
            badly_positioned_edges: badly,
        }
    }

    /// Same graph and norm with every vertex shifted by `shift`.
    pub fn translated(&self, shift: &[T]) -> Result<Self, ModelError> {
        let placement = self
            .placement
            .iter()
            .map(|p| {
                p.iter()
                    .zip(shift)
                    .map(|(a, b)| a.clone() + b.clone())
                    .collect()
            })
            .collect();
        Framework::new(self.graph.clone(), placement, self.norm.clone())
    }
}

pub(crate) fn difference<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.clone() - y.clone())
        .collect()
}

/// A framework in whichever scalar mode was selected for it.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyFramework {
    Exact(Framework<Rational>),
    Float(Framework<f64>),
}

impl AnyFramework {
    pub fn mode(&self) -> crate::numeric::Mode {
        match self {
            AnyFramework::Exact(_) => crate::numeric::Mode::Exact,
            AnyFramework::Float(_) => crate::numeric::Mode::Float,
        }
    }

    pub fn graph(&self) -> &Graph {
        match self {
            AnyFramework::Exact(f) => f.graph(),
            AnyFramework::Float(f) => f.graph(),
        }
    }
}
