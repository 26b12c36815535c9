//! First-order analysis: trivial flexes, flexes, stresses, and strong
//! infinitesimal rigidity under the product subdifferential model.
//!
//! The set of generalized rigidity operators is modelled as the product over
//! edges of the norm subdifferentials at the edge vectors. A row for edge
//! `(v, w)` with functional `f` has `f` in the `v` block and `-f` in the `w`
//! block.

use std::collections::BTreeMap;

use crate::model::Framework;
use crate::norms::{EdgeGeometry, NormKind};
use crate::numeric::{
    dot, independent_rows, null_space, rank, solve_square, Matrix, Mode, NumericError, Scalar,
    SubspaceBasis,
};

/// Refuse strong searches with more assignments than this.
pub const MAX_ASSIGNMENTS: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FirstOrderError {
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("strong search needs {0} assignments, above the limit of {MAX_ASSIGNMENTS}")]
    TooManyAssignments(u128),
    #[error("weights for edge {edge}: {reason}")]
    InvalidWeights { edge: usize, reason: String },
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

/// Row of length `d|V|` carrying `f` on the `v` block and `-f` on the `w` block.
pub fn edge_row<T: Scalar>(fw: &Framework<T>, e: usize, f: &[T]) -> Vec<T> {
    let d = fw.dim();
    let (v, w) = fw.graph().edges()[e];
    let mut row = vec![T::zero(); fw.coord_count()];
    for k in 0..d {
        row[v * d + k] = f[k].clone();
        row[w * d + k] = -f[k].clone();
    }
    row
}

/// The rigidity operator `|E| x d|V|`; `None` unless the framework is well-positioned.
pub fn rigidity_operator<T: Scalar>(fw: &Framework<T>) -> Option<Matrix<T>> {
    let rows = (0..fw.graph().edge_count())
        .map(|e| fw.geometry()[e].gradient().map(|g| edge_row(fw, e, g)))
        .collect::<Option<Vec<_>>>()?;
    Some(Matrix::from_rows(&rows, fw.coord_count()).expect("rows have d|V| entries"))
}

/// Rows of `x^(p-1)` (`x` for Euclidean); `None` unless every edge is smooth.
pub fn power_operator<T: Scalar>(fw: &Framework<T>) -> Option<Matrix<T>> {
    let rows = (0..fw.graph().edge_count())
        .map(|e| match &fw.geometry()[e] {
            EdgeGeometry::Smooth(s) => s.power_gradient.as_ref().map(|g| edge_row(fw, e, g)),
            _ => None,
        })
        .collect::<Option<Vec<_>>>()?;
    Some(Matrix::from_rows(&rows, fw.coord_count()).expect("rows have d|V| entries"))
}

/// Stacked rows whose common kernel is the flex space.
pub fn flex_matrix<T: Scalar>(fw: &Framework<T>) -> Matrix<T> {
    let d = fw.dim();
    let mut rows = Vec::new();
    for (e, g) in fw.geometry().iter().enumerate() {
        match g {
            EdgeGeometry::Smooth(s) => rows.push(edge_row(fw, e, &s.gradient)),
            EdgeGeometry::PolyhedralActive { rows: fs, .. } => {
                rows.extend(fs.iter().map(|f| edge_row(fw, e, f)))
            }
            EdgeGeometry::ZeroLength => {
                for k in 0..d {
                    let unit: Vec<T> = (0..d)
                        .map(|j| if j == k { T::one() } else { T::zero() })
                        .collect();
                    rows.push(edge_row(fw, e, &unit));
                }
            }
        }
    }
    Matrix::from_rows(&rows, fw.coord_count()).expect("rows have d|V| entries")
}

/// Translations, plus rotations `u_v = S p_v` for the Euclidean norm; rank-reduced.
pub fn trivial_space<T: Scalar>(fw: &Framework<T>, tol: f64) -> SubspaceBasis<T> {
    let d = fw.dim();
    let n = fw.graph().vertex_count();
    let mut gens: Vec<Vec<T>> = Vec::new();
    for k in 0..d {
        let mut u = vec![T::zero(); d * n];
        for v in 0..n {
            u[v * d + k] = T::one();
        }
        gens.push(u);
    }
    if matches!(fw.norm().kind(), NormKind::Euclidean) {
        for i in 0..d {
            for j in (i + 1)..d {
                let mut u = vec![T::zero(); d * n];
                for (v, p) in fw.placement().iter().enumerate() {
                    u[v * d + i] = p[j].clone();
                    u[v * d + j] = -p[i].clone();
                }
                gens.push(u);
            }
        }
    }
    if gens.is_empty() || d * n == 0 {
        return SubspaceBasis::empty(d * n);
    }
    let m = Matrix::from_rows(&gens, d * n).expect("generators have d|V| entries");
    let keep = independent_rows(&m, tol);
    SubspaceBasis {
        ambient_dim: d * n,
        basis: m.select_rows(&keep).transpose(),
    }
}

pub fn flex_space<T: Scalar>(fw: &Framework<T>, tol: f64) -> SubspaceBasis<T> {
    null_space(&flex_matrix(fw), tol)
}

/// Basis of the flexes orthogonal to every trivial flex.
pub fn nontrivial_flexes<T: Scalar>(
    fw: &Framework<T>,
    trivial: &SubspaceBasis<T>,
    tol: f64,
) -> SubspaceBasis<T> {
    let stacked = flex_matrix(fw)
        .vstack(&trivial.basis.transpose())
        .expect("both have d|V| columns");
    null_space(&stacked, tol)
}

/// Whether `u` lies in the span of `basis`.
pub fn in_span<T: Scalar>(basis: &SubspaceBasis<T>, u: &[T], tol: f64) -> bool {
    let r = rank(&basis.basis.transpose(), tol);
    let mut rows = basis.basis.transpose();
    rows.push_row(u.to_vec()).expect("ambient length");
    rank(&rows, tol) == r
}

/// Representative of `u + T(p)` vanishing on a fixed set of pinned coordinates.
///
/// Pinned coordinates are chosen greedily so that the trivial basis restricted
/// to them is invertible.
pub fn pin<T: Scalar>(trivial: &SubspaceBasis<T>, u: &[T], tol: f64) -> Vec<T> {
    let t = trivial.dim();
    if t == 0 {
        return u.to_vec();
    }
    let pinned = independent_rows(&trivial.basis, tol);
    if pinned.len() != t {
        return u.to_vec();
    }
    let tp = trivial.basis.select_rows(&pinned);
    let up: Vec<T> = pinned.iter().map(|&i| u[i].clone()).collect();
    let Some(c) = solve_square(&tp, &up, tol) else {
        return u.to_vec();
    };
    let shift = trivial.basis.mul_vec(&c).expect("coefficient length");
    let mut out: Vec<T> = u
        .iter()
        .zip(&shift)
        .map(|(a, b)| a.clone() - b.clone())
        .collect();
    for &i in &pinned {
        out[i] = T::zero();
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfinitesimalVerdict<T> {
    pub rigid: bool,
    pub flex_dim: usize,
    pub trivial_dim: usize,
    /// Rank of the stacked flex matrix.
    pub rank: usize,
    /// Nontrivial flexes orthogonal to `T(p)`.
    pub nontrivial: SubspaceBasis<T>,
    pub trivial: SubspaceBasis<T>,
    /// A flex outside `T(p)` when flexible.
    pub witness: Option<Vec<T>>,
}

pub fn is_infinitesimally_rigid<T: Scalar>(fw: &Framework<T>, tol: f64) -> InfinitesimalVerdict<T> {
    let m = flex_matrix(fw);
    let r = rank(&m, tol);
    let flex_dim = fw.coord_count() - r;
    let trivial = trivial_space(fw, tol);
    let nontrivial = nontrivial_flexes(fw, &trivial, tol);
    let witness = (nontrivial.dim() > 0).then(|| nontrivial.vector(0));
    InfinitesimalVerdict {
        rigid: flex_dim == trivial.dim(),
        flex_dim,
        trivial_dim: trivial.dim(),
        rank: r,
        nontrivial,
        trivial,
        witness,
    }
}

/// `u` is a flex iff the one-sided derivative along `+-(u_v - u_w)` vanishes on every edge.
pub fn certify_flex<T: Scalar>(fw: &Framework<T>, u: &[T], tol: f64) -> bool {
    if u.len() != fw.coord_count() {
        return false;
    }
    let scale = T::from_f64(
        u.iter()
            .map(|x| x.to_f64().abs())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE),
    );
    (0..fw.graph().edge_count()).all(|e| {
        let x = fw.edge_vector(e);
        let du = fw.edge_difference(e, u);
        let neg: Vec<T> = du.iter().map(|v| -v.clone()).collect();
        [du, neg].iter().all(|dir| {
            fw.norm()
                .one_sided_directional(&x, dir)
                .map(|v| v.is_negligible(&scale, tol))
                .unwrap_or(false)
        })
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StressSpace<T> {
    /// Stresses for the norm-gradient rows.
    pub basis: SubspaceBasis<T>,
    /// Stresses for the `x^(p-1)` rows (smooth norms only).
    pub power_basis: Option<SubspaceBasis<T>>,
}

/// `None` when the framework is not well-positioned.
///
/// The power basis is the gradient basis rescaled per edge by `1 / |x_e|^(p-1)`;
/// the gradient rows are the better conditioned of the two.
pub fn stress_space<T: Scalar>(fw: &Framework<T>, tol: f64) -> Option<StressSpace<T>> {
    let r = rigidity_operator(fw)?;
    let basis = null_space(&r.transpose(), tol);
    let power_basis = power_operator(fw).map(|_| {
        let ratios: Vec<T> = fw
            .geometry()
            .iter()
            .map(|g| match g {
                EdgeGeometry::Smooth(s) => {
                    let pg = s.power_gradient.as_ref().expect("power operator exists");
                    let k = (0..s.gradient.len())
                        .max_by(|&i, &j| {
                            s.gradient[i]
                                .to_f64()
                                .abs()
                                .total_cmp(&s.gradient[j].to_f64().abs())
                        })
                        .expect("nonempty");
                    pg[k].clone() / s.gradient[k].clone()
                }
                _ => unreachable!("power operator requires smooth edges"),
            })
            .collect();
        let cols: Vec<Vec<T>> = basis
            .vectors()
            .into_iter()
            .map(|a| {
                a.into_iter()
                    .zip(&ratios)
                    .map(|(x, r)| x / r.clone())
                    .collect()
            })
            .collect();
        SubspaceBasis::from_columns(basis.ambient_dim, &cols).expect("edge-length columns")
    });
    Some(StressSpace { basis, power_basis })
}

/// `|E| >= d|V| - dim T(p)`, necessary for strong rigidity.
pub fn edge_count_bound_check<T: Scalar>(fw: &Framework<T>, tol: f64) -> bool {
    let t = trivial_space(fw, tol).dim();
    fw.graph().edge_count() + t >= fw.coord_count()
}

/// One edge of a strong-flex assignment: indices into that edge's active set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct EdgeChoice {
    pub edge: usize,
    /// Functional required to be `<= 0` on `u_v - u_w`.
    pub minus: usize,
    /// Functional required to be `>= 0` on `u_v - u_w`.
    pub plus: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrongWitness<T> {
    /// Orthogonal to `T(p)`.
    pub u: Vec<T>,
    pub assignment: Vec<EdgeChoice>,
    /// Per multi-active edge, convex weights over its active set killing `u`.
    pub weights: BTreeMap<usize, Vec<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrongVerdict<T> {
    pub strongly_rigid: bool,
    pub witness: Option<StrongWitness<T>>,
    pub assignments_checked: usize,
    pub edge_count_bound: bool,
}

/// Decides whether some member of the product model has a kernel vector outside `T(p)`.
pub fn strong_flex_search<T: Scalar>(
    fw: &Framework<T>,
    tol: f64,
) -> Result<StrongVerdict<T>, FirstOrderError> {
    let trivial = trivial_space(fw, tol);
    let mut equalities = trivial.basis.transpose();
    let mut multi: Vec<(usize, &Vec<Vec<T>>)> = Vec::new();
    for (e, g) in fw.geometry().iter().enumerate() {
        match g {
            EdgeGeometry::Smooth(s) => equalities.push_row(edge_row(fw, e, &s.gradient))?,
            EdgeGeometry::PolyhedralActive { rows, .. } if rows.len() == 1 => {
                equalities.push_row(edge_row(fw, e, &rows[0]))?
            }
            EdgeGeometry::PolyhedralActive { rows, .. } => multi.push((e, rows)),
            EdgeGeometry::ZeroLength => {}
        }
    }
    let edge_count_bound = edge_count_bound_check(fw, tol);

    if multi.is_empty() {
        let ns = null_space(&equalities, tol);
        let witness = (ns.dim() > 0).then(|| StrongWitness {
            u: ns.vector(0),
            assignment: Vec::new(),
            weights: BTreeMap::new(),
        });
        return Ok(StrongVerdict {
            strongly_rigid: witness.is_none(),
            witness,
            assignments_checked: 1,
            edge_count_bound,
        });
    }
    if T::MODE != Mode::Exact {
        return Err(FirstOrderError::Unsupported(
            "strong infinitesimal rigidity with several active functionals on an edge needs exact mode".into(),
        ));
    }
    let total: u128 = multi
        .iter()
        .map(|(_, rows)| (rows.len() as u128).pow(2))
        .try_fold(1u128, |acc, k| acc.checked_mul(k))
        .unwrap_or(u128::MAX);
    if total > MAX_ASSIGNMENTS {
        return Err(FirstOrderError::TooManyAssignments(total));
    }

    // Mixed-radix counter; the last edge varies fastest, giving lexicographic order.
    let radices: Vec<usize> = multi
        .iter()
        .map(|(_, rows)| rows.len() * rows.len())
        .collect();
    let mut digits = vec![0usize; multi.len()];
    let mut checked = 0usize;
    loop {
        checked += 1;
        let mut ineq = Matrix::<T>::zeros(0, fw.coord_count());
        let mut eq = equalities.clone();
        let mut assignment = Vec::with_capacity(multi.len());
        for (k, &(e, rows)) in multi.iter().enumerate() {
            let (minus, plus) = (digits[k] / rows.len(), digits[k] % rows.len());
            assignment.push(EdgeChoice {
                edge: e,
                minus,
                plus,
            });
            if minus == plus {
                eq.push_row(edge_row(fw, e, &rows[minus]))?;
            } else {
                let neg: Vec<T> = rows[minus].iter().map(|v| -v.clone()).collect();
                ineq.push_row(edge_row(fw, e, &neg))?;
                ineq.push_row(edge_row(fw, e, &rows[plus]))?;
            }
        }
        if let Some(u) = T::lp_feasible_nonzero(&ineq, &eq)? {
            let weights = multi
                .iter()
                .zip(&assignment)
                .map(|(&(e, rows), c)| (e, killing_weights(fw, e, rows, c, &u)))
                .collect();
            return Ok(StrongVerdict {
                strongly_rigid: false,
                witness: Some(StrongWitness {
                    u,
                    assignment,
                    weights,
                }),
                assignments_checked: checked,
                edge_count_bound,
            });
        }
        let mut k = multi.len();
        loop {
            if k == 0 {
                return Ok(StrongVerdict {
                    strongly_rigid: true,
                    witness: None,
                    assignments_checked: checked,
                    edge_count_bound,
                });
            }
            k -= 1;
            digits[k] += 1;
            if digits[k] < radices[k] {
                break;
            }
            digits[k] = 0;
        }
    }
}

/// Weights on `rows[minus]`, `rows[plus]` whose combination vanishes on `u_v - u_w`.
fn killing_weights<T: Scalar>(
    fw: &Framework<T>,
    e: usize,
    rows: &[Vec<T>],
    choice: &EdgeChoice,
    u: &[T],
) -> Vec<T> {
    let du = fw.edge_difference(e, u);
    let a = dot(&rows[choice.minus], &du);
    let b = dot(&rows[choice.plus], &du);
    let mut w = vec![T::zero(); rows.len()];
    if a == b {
        w[choice.minus] = T::one();
    } else {
        let span = b.clone() - a.clone();
        w[choice.minus] = w[choice.minus].clone() + b / span.clone();
        w[choice.plus] = w[choice.plus].clone() + (-a) / span;
    }
    w
}

/// Checks a strong-flex witness directly: `u` outside `T(p)`, smooth rows vanish,
/// and every multi-active edge has `0` between the least and greatest active value.
pub fn certify_strong_witness<T: Scalar>(fw: &Framework<T>, u: &[T], tol: f64) -> bool {
    if u.len() != fw.coord_count() {
        return false;
    }
    let trivial = trivial_space(fw, tol);
    if in_span(&trivial, u, tol) {
        return false;
    }
    let scale = T::from_f64(u.iter().map(|x| x.to_f64().abs()).fold(0.0, f64::max));
    fw.geometry().iter().enumerate().all(|(e, g)| {
        let du = fw.edge_difference(e, u);
        match g {
            EdgeGeometry::Smooth(s) => dot(&s.gradient, &du).is_negligible(&scale, tol),
            EdgeGeometry::PolyhedralActive { rows, .. } => {
                let vals: Vec<T> = rows.iter().map(|f| dot(f, &du)).collect();
                let lo = vals
                    .iter()
                    .cloned()
                    .fold(vals[0].clone(), |m, v| if v < m { v } else { m });
                let hi = vals
                    .iter()
                    .cloned()
                    .fold(vals[0].clone(), |m, v| if v > m { v } else { m });
                let lo_ok = !lo.is_positive() || lo.is_negligible(&scale, tol);
                let hi_ok = !hi.is_negative() || hi.is_negligible(&scale, tol);
                lo_ok && hi_ok
            }
            EdgeGeometry::ZeroLength => true,
        }
    })
}

/// Member of the product model: smooth rows fixed, convex combinations of the
/// active rows on multi-active edges, zero rows on zero-length edges.
pub fn generalized_operator_at<T: Scalar>(
    fw: &Framework<T>,
    weights: &BTreeMap<usize, Vec<T>>,
) -> Result<Matrix<T>, FirstOrderError> {
    let d = fw.dim();
    for &e in weights.keys() {
        match fw.geometry().get(e) {
            Some(EdgeGeometry::PolyhedralActive { rows, .. }) if rows.len() > 1 => {}
            _ => {
                return Err(FirstOrderError::InvalidWeights {
                    edge: e,
                    reason: "edge does not have several active functionals".into(),
                })
            }
        }
    }
    let mut out = Vec::with_capacity(fw.graph().edge_count());
    for (e, g) in fw.geometry().iter().enumerate() {
        let row = match g {
            EdgeGeometry::Smooth(s) => edge_row(fw, e, &s.gradient),
            EdgeGeometry::PolyhedralActive { rows, .. } if rows.len() == 1 => {
                edge_row(fw, e, &rows[0])
            }
            EdgeGeometry::PolyhedralActive { rows, .. } => {
                let w = weights
                    .get(&e)
                    .ok_or_else(|| FirstOrderError::InvalidWeights {
                        edge: e,
                        reason: "missing".into(),
                    })?;
                if w.len() != rows.len() {
                    return Err(FirstOrderError::InvalidWeights {
                        edge: e,
                        reason: format!(
                            "{} weights for {} active functionals",
                            w.len(),
                            rows.len()
                        ),
                    });
                }
                if w.iter().any(|x| x.is_negative()) {
                    return Err(FirstOrderError::InvalidWeights {
                        edge: e,
                        reason: "negative weight".into(),
                    });
                }
                let sum = w.iter().cloned().fold(T::zero(), |a, b| a + b);
                if !(sum.clone() - T::one()).is_negligible(&T::one(), 1e-12) {
                    return Err(FirstOrderError::InvalidWeights {
                        edge: e,
                        reason: format!("weights sum to {}", sum.to_f64()),
                    });
                }
                let f: Vec<T> = (0..d)
                    .map(|k| {
                        rows.iter()
                            .zip(w)
                            .fold(T::zero(), |acc, (r, x)| acc + r[k].clone() * x.clone())
                    })
                    .collect();
                edge_row(fw, e, &f)
            }
            EdgeGeometry::ZeroLength => vec![T::zero(); fw.coord_count()],
        };
        out.push(row);
    }
    Ok(Matrix::from_rows(&out, fw.coord_count())?)
}

/// Weights exhibiting `m` as a member of the product model (exact mode), or `None`.
///
/// On zero-length edges the row functional must lie in the dual unit ball,
/// the convex hull of the closed functional list.
pub fn product_family_member<T: Scalar>(
    fw: &Framework<T>,
    m: &Matrix<T>,
) -> Result<Option<BTreeMap<usize, Vec<T>>>, FirstOrderError> {
    let n_e = fw.graph().edge_count();
    if m.rows() != n_e || m.cols() != fw.coord_count() {
        return Err(NumericError::Shape(format!(
            "{}x{} matrix for {} edges and {} coordinates",
            m.rows(),
            m.cols(),
            n_e,
            fw.coord_count()
        ))
        .into());
    }
    let d = fw.dim();
    let mut weights = BTreeMap::new();
    for e in 0..n_e {
        let (v, _) = fw.graph().edges()[e];
        let f: Vec<T> = m.row(e)[v * d..(v + 1) * d].to_vec();
        if m.row(e) != edge_row(fw, e, &f).as_slice() {
            return Ok(None);
        }
        match &fw.geometry()[e] {
            EdgeGeometry::Smooth(s) => {
                if f != s.gradient {
                    return Ok(None);
                }
            }
            EdgeGeometry::PolyhedralActive { rows, .. } if rows.len() == 1 => {
                if f != rows[0] {
                    return Ok(None);
                }
            }
            EdgeGeometry::PolyhedralActive { rows, .. } => match T::convex_weights(rows, &f)? {
                Some(w) => {
                    weights.insert(e, w);
                }
                None => return Ok(None),
            },
            EdgeGeometry::ZeroLength => {
                if T::convex_weights(fw.norm().functionals(), &f)?.is_none() {
                    return Ok(None);
                }
            }
        }
    }
    Ok(Some(weights))
}
