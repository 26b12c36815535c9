//! Named fixtures and parametric families of frameworks.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::firstorder::{is_infinitesimally_rigid, stress_space};
use crate::model::{AnyFramework, Framework, Graph, ModelError};
use crate::norms::{NormError, NormSpec};
use crate::numeric::{Rational, Scalar, DEFAULT_RANK_TOL};

/// Attempts made by [`gen_random_placement`] before giving up.
pub const MAX_PLACEMENT_ATTEMPTS: u64 = 100;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GenError {
    #[error("unknown fixture {0:?}")]
    UnknownFixture(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("augmentation precondition failed: {0}")]
    Precondition(String),
    #[error("no well-positioned placement after {0} attempts")]
    NoPlacement(u64),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Norm(#[from] NormError),
}

pub const FIXTURE_NAMES: [&str; 7] = [
    "linf_single_bar",
    "linf_seven_vertex",
    "linf_k4_square",
    "lp_k4_square",
    "euclid_braced_square_midpoints",
    "flexible_grid_fig5i",
    "stable_grid_fig5ii",
];

/// `p` is used by the parametric fixtures (`lp_k4_square` and the grids).
pub fn gen_fixture(name: &str, p: f64) -> Result<AnyFramework, GenError> {
    Ok(match name {
        "linf_single_bar" => AnyFramework::Exact(linf_single_bar()),
        "linf_seven_vertex" => AnyFramework::Exact(linf_seven_vertex()),
        "linf_k4_square" => AnyFramework::Exact(linf_k4_square()),
        "lp_k4_square" => AnyFramework::Float(lp_k4_square(p)?),
        "euclid_braced_square_midpoints" => AnyFramework::Float(euclid_braced_square_midpoints()),
        "flexible_grid_fig5i" => AnyFramework::Float(flexible_grid_fig5i(p)?),
        "stable_grid_fig5ii" => AnyFramework::Float(stable_grid_fig5ii(p)?),
        other => return Err(GenError::UnknownFixture(other.to_string())),
    })
}

fn q(n: i64, d: i64) -> Rational {
    Rational::from_ratio(n, d)
}

fn build<T: Scalar>(
    names: &[&str],
    edges: &[(&str, &str)],
    placement: Vec<Vec<T>>,
    norm: NormSpec<T>,
) -> Framework<T> {
    let g = Graph::new(names, edges).expect("fixture graph is simple");
    Framework::new(g, placement, norm).expect("fixture placement matches")
}

/// One bar from `(0,0)` to `(1,1)` in the `l_inf` plane.
pub fn linf_single_bar() -> Framework<Rational> {
    build(
        &["a", "b"],
        &[("a", "b")],
        vec![vec![q(0, 1), q(0, 1)], vec![q(1, 1), q(1, 1)]],
        NormSpec::linf(2).expect("valid"),
    )
}

/// Seven vertices, twelve edges, `v5` and `v6` placed at the same point.
pub fn linf_seven_vertex() -> Framework<Rational> {
    build(
        &["v1", "v2", "v3", "v4", "v5", "v6", "v7"],
        &[
            ("v5", "v7"),
            ("v6", "v7"),
            ("v1", "v2"),
            ("v1", "v3"),
            ("v1", "v4"),
            ("v2", "v3"),
            ("v2", "v4"),
            ("v3", "v4"),
            ("v1", "v5"),
            ("v2", "v6"),
            ("v3", "v6"),
            ("v4", "v5"),
        ],
        vec![
            vec![q(0, 1), q(0, 1)],
            vec![q(1, 1), q(0, 1)],
            vec![q(9, 10), q(1, 1)],
            vec![q(-1, 10), q(1, 1)],
            vec![q(1, 2), q(6, 5)],
            vec![q(1, 2), q(6, 5)],
            vec![q(13, 10), q(2, 1)],
        ],
        NormSpec::linf(2).expect("valid"),
    )
}

const K4_EDGES_BY_INDEX: [(&str, &str); 6] = [
    ("v1", "v2"),
    ("v1", "v3"),
    ("v1", "v4"),
    ("v2", "v3"),
    ("v2", "v4"),
    ("v3", "v4"),
];

/// `K4` on `(+-1, +-1)` in the `l_inf` plane.
pub fn linf_k4_square() -> Framework<Rational> {
    build(
        &["v1", "v2", "v3", "v4"],
        &K4_EDGES_BY_INDEX,
        vec![
            vec![q(-1, 1), q(-1, 1)],
            vec![q(1, 1), q(-1, 1)],
            vec![q(-1, 1), q(1, 1)],
            vec![q(1, 1), q(1, 1)],
        ],
        NormSpec::linf(2).expect("valid"),
    )
}

/// `K4` on the unit square in the `l_p` plane; sides first, then diagonals.
pub fn lp_k4_square(p: f64) -> Result<Framework<f64>, GenError> {
    Ok(build(
        &["v1", "v2", "v3", "v4"],
        &[
            ("v1", "v2"),
            ("v1", "v3"),
            ("v2", "v4"),
            ("v3", "v4"),
            ("v1", "v4"),
            ("v2", "v3"),
        ],
        vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
        ],
        NormSpec::lp(2, p)?,
    ))
}

/// Unit square with both diagonals and midpoints on two sides, Euclidean plane.
pub fn euclid_braced_square_midpoints() -> Framework<f64> {
    build(
        &["1", "2", "2a", "3", "3a", "4"],
        &[
            ("1", "2"),
            ("1", "3"),
            ("2", "2a"),
            ("2a", "3"),
            ("2", "4"),
            ("3", "3a"),
            ("3a", "4"),
            ("4", "1"),
        ],
        vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![1.0, 0.5],
            vec![1.0, 1.0],
            vec![0.5, 1.0],
            vec![0.0, 1.0],
        ],
        NormSpec::euclidean(2).expect("valid"),
    )
}

/// `m x n` unit grid with doubly-braced cells `(i, j)`, `1 <= i < m`, `1 <= j < n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub m: usize,
    pub n: usize,
    pub braces: Vec<(usize, usize)>,
    pub p: f64,
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), GenError> {
        if self.m < 1 || self.n < 1 {
            return Err(GenError::InvalidGrid("m and n must be positive".into()));
        }
        let mut seen = BTreeSet::new();
        for &(i, j) in &self.braces {
            if !(1 <= i && i < self.m && 1 <= j && j < self.n) {
                return Err(GenError::InvalidGrid(format!(
                    "brace cell ({i},{j}) outside 1..{} x 1..{}",
                    self.m, self.n
                )));
            }
            if !seen.insert((i, j)) {
                return Err(GenError::InvalidGrid(format!(
                    "brace cell ({i},{j}) repeated"
                )));
            }
        }
        Ok(())
    }

    /// Every column index `1..m` and row index `1..n` has a braced cell.
    pub fn covers_all_rows_and_columns(&self) -> bool {
        (1..self.m).all(|i| self.braces.iter().any(|b| b.0 == i))
            && (1..self.n).all(|j| self.braces.iter().any(|b| b.1 == j))
    }
}

/// Parses `"1,3;2,2;3,1"`.
pub fn parse_braces(text: &str) -> Result<Vec<(usize, usize)>, GenError> {
    text.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|cell| {
            let (i, j) = cell
                .split_once(',')
                .ok_or_else(|| GenError::InvalidGrid(format!("brace {cell:?} is not \"i,j\"")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| GenError::InvalidGrid(format!("brace {cell:?} is not \"i,j\"")))
            };
            Ok((parse(i)?, parse(j)?))
        })
        .collect()
}

fn grid_name(i: usize, j: usize) -> String {
    format!("{i},{j}")
}

/// Vertices `"i,j"` at `(i, j)`, listed row by row; edges horizontal, vertical, then braces.
pub fn gen_grid(spec: &GridSpec) -> Result<Framework<f64>, GenError> {
    spec.validate()?;
    let norm = NormSpec::lp(2, spec.p)?;
    let mut names = Vec::new();
    let mut placement = Vec::new();
    for j in 1..=spec.n {
        for i in 1..=spec.m {
            names.push(grid_name(i, j));
            placement.push(vec![i as f64, j as f64]);
        }
    }
    let mut edges = Vec::new();
    for j in 1..=spec.n {
        for i in 1..spec.m {
            edges.push((grid_name(i, j), grid_name(i + 1, j)));
        }
    }
    for i in 1..=spec.m {
        for j in 1..spec.n {
            edges.push((grid_name(i, j), grid_name(i, j + 1)));
        }
    }
    for &(i, j) in &spec.braces {
        edges.push((grid_name(i, j), grid_name(i + 1, j + 1)));
        edges.push((grid_name(i + 1, j), grid_name(i, j + 1)));
    }
    let graph = Graph::new(&names, &edges)?;
    Ok(Framework::new(graph, placement, norm)?)
}

pub fn flexible_grid_fig5i(p: f64) -> Result<Framework<f64>, GenError> {
    gen_grid(&GridSpec {
        m: 4,
        n: 4,
        braces: vec![(1, 1), (3, 1), (1, 3), (3, 3)],
        p,
    })
}

pub fn stable_grid_fig5ii(p: f64) -> Result<Framework<f64>, GenError> {
    gen_grid(&GridSpec {
        m: 4,
        n: 4,
        braces: vec![(1, 3), (2, 2), (3, 1)],
        p,
    })
}

/// Adds `v0` at `(1-t) p_v1 + t p_v2` joined to `v1` and `v2`.
///
/// The base must be infinitesimally rigid, carry no nonzero stress, and place
/// all vertices at distinct points.
pub fn gen_colinear_augmentation(
    base: &Framework<f64>,
    v1: &str,
    v2: &str,
    t: f64,
) -> Result<Framework<f64>, GenError> {
    let g = base.graph();
    let i1 = g
        .vertex_index(v1)
        .ok_or_else(|| GenError::Precondition(format!("no vertex {v1:?}")))?;
    let i2 = g
        .vertex_index(v2)
        .ok_or_else(|| GenError::Precondition(format!("no vertex {v2:?}")))?;
    if i1 == i2 {
        return Err(GenError::Precondition("v1 and v2 must differ".into()));
    }
    if !(t > 0.0 && t < 1.0) {
        return Err(GenError::Precondition(format!("t = {t} is not in (0, 1)")));
    }
    if g.vertex_index("v0").is_some() {
        return Err(GenError::Precondition(
            "base already has a vertex named \"v0\"".into(),
        ));
    }
    let pts = base.placement();
    for a in 0..pts.len() {
        for b in (a + 1)..pts.len() {
            if pts[a] == pts[b] {
                return Err(GenError::Precondition(format!(
                    "vertices {:?} and {:?} coincide",
                    g.vertex_names()[a],
                    g.vertex_names()[b]
                )));
            }
        }
    }
    if !is_infinitesimally_rigid(base, DEFAULT_RANK_TOL).rigid {
        return Err(GenError::Precondition(
            "base is not infinitesimally rigid".into(),
        ));
    }
    match stress_space(base, DEFAULT_RANK_TOL) {
        Some(s) if s.basis.dim() == 0 => {}
        Some(s) => {
            return Err(GenError::Precondition(format!(
                "base has a {}-dimensional stress space",
                s.basis.dim()
            )))
        }
        None => return Err(GenError::Precondition("base is not well-positioned".into())),
    }

    let mut names: Vec<String> = g.vertex_names().to_vec();
    names.push("v0".into());
    let mut edges: Vec<(String, String)> = (0..g.edge_count())
        .map(|e| {
            let (a, b) = g.edge_names(e);
            (a.to_string(), b.to_string())
        })
        .collect();
    edges.push(("v0".into(), v1.to_string()));
    edges.push(("v0".into(), v2.to_string()));
    let mut placement = pts.to_vec();
    placement.push(
        pts[i1]
            .iter()
            .zip(&pts[i2])
            .map(|(a, b)| (1.0 - t) * a + t * b)
            .collect(),
    );
    let graph = Graph::new(&names, &edges)?;
    Ok(Framework::new(graph, placement, base.norm().clone())?)
}

/// Complete graph on `v1..vn`.
pub fn complete_graph(n: usize) -> Graph {
    let names: Vec<String> = (1..=n).map(|i| format!("v{i}")).collect();
    let mut edges = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            edges.push((names[a].clone(), names[b].clone()));
        }
    }
    Graph::new(&names, &edges).expect("complete graph is simple")
}

/// Coordinates uniform in `[-1, 1]`; exact mode draws from the lattice `k / 1024`.
pub fn random_coordinates<T: Scalar>(
    rng: &mut ChaCha8Rng,
    count: usize,
    dim: usize,
) -> Vec<Vec<T>> {
    (0..count)
        .map(|_| {
            (0..dim)
                .map(|_| match T::MODE {
                    crate::numeric::Mode::Exact => {
                        T::from_ratio(rng.random_range(-1024..=1024), 1024)
                    }
                    crate::numeric::Mode::Float => T::from_f64(rng.random_range(-1.0..=1.0)),
                })
                .collect()
        })
        .collect()
}

/// Seeded uniform placement, retried with `seed + 1, seed + 2, ...` until well-positioned.
pub fn gen_random_placement<T: Scalar>(
    graph: &Graph,
    norm: &NormSpec<T>,
    seed: u64,
) -> Result<Framework<T>, GenError> {
    for attempt in 0..MAX_PLACEMENT_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt));
        let placement = random_coordinates(&mut rng, graph.vertex_count(), norm.dim());
        let fw = Framework::new(graph.clone(), placement, norm.clone())?;
        if fw.classify().well_positioned {
            return Ok(fw);
        }
    }
    Err(GenError::NoPlacement(MAX_PLACEMENT_ATTEMPTS))
}

/// Every pair of points at least [`MIN_SEPARATION`] apart in each coordinate,
/// except the pair `v1`, `v2` in `y` when axis-aligned.
fn well_separated(pts: &[Vec<f64>], axis_aligned: bool) -> bool {
    (0..pts.len()).all(|a| {
        ((a + 1)..pts.len()).all(|b| {
            (0..2).all(|k| {
                (axis_aligned && a == 0 && b == 1 && k == 1)
                    || (pts[a][k] - pts[b][k]).abs() >= MIN_SEPARATION
            })
        })
    })
}

/// Minimal coordinate gap between base vertices of [`colinear_base`].
pub const MIN_SEPARATION: f64 = 0.1;

/// A seeded `K4` in the `l_p` plane meeting the augmentation preconditions.
/// With `axis_aligned`, `v2` is moved to the height of `v1`.
pub fn colinear_base(p: f64, seed: u64, axis_aligned: bool) -> Result<Framework<f64>, GenError> {
    let norm = NormSpec::lp(2, p)?;
    let graph = complete_graph(4);
    for attempt in 0..MAX_PLACEMENT_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt));
        let mut placement: Vec<Vec<f64>> = random_coordinates(&mut rng, 4, 2);
        if axis_aligned {
            placement[1][1] = placement[0][1];
        }
        if !well_separated(&placement, axis_aligned) {
            continue;
        }
        let fw = Framework::new(graph.clone(), placement, norm.clone())?;
        let ok = fw.classify().second_order_well_positioned
            && is_infinitesimally_rigid(&fw, DEFAULT_RANK_TOL).rigid
            && stress_space(&fw, DEFAULT_RANK_TOL).is_some_and(|s| s.basis.dim() == 0);
        if ok {
            return Ok(fw);
        }
    }
    Err(GenError::NoPlacement(MAX_PLACEMENT_ATTEMPTS))
}

/// The augmentation of [`colinear_base`] on `v1`, `v2`: `t = 1/2` when axis-aligned, `1/3` otherwise.
pub fn colinear_augmentation(
    p: f64,
    seed: u64,
    axis_aligned: bool,
) -> Result<Framework<f64>, GenError> {
    let base = colinear_base(p, seed, axis_aligned)?;
    let t = if axis_aligned { 0.5 } else { 1.0 / 3.0 };
    gen_colinear_augmentation(&base, "v1", "v2", t)
}
