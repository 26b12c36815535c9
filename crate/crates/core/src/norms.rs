//! Norm evaluation and the local differential structure of a norm at an edge vector.
//!
//! Three families are supported: Euclidean, `l_p` for finite `p > 1`, and
//! polyhedral norms `|x| = max_i |f_i(x)|`. The `l_1` and `l_inf` norms are
//! polyhedral and must be built with [`NormSpec::l1`] and [`NormSpec::linf`].

use crate::numeric::{dot, rank, Matrix, Mode, Scalar, DEFAULT_RANK_TOL};

/// Relative tie tolerance for active functionals in float mode.
pub const ACTIVE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NormError {
    #[error("vector has dimension {got}, norm has dimension {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("p must be finite and greater than 1, got {0}")]
    InvalidP(f64),
    #[error("a polyhedral norm needs at least one functional")]
    NoFunctionals,
    #[error("functional {index} has length {got}, expected {expected}")]
    FunctionalLength {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("functionals span a {rank}-dimensional space, not {dim}: not a norm")]
    NotSpanning { rank: usize, dim: usize },
    #[error("the {0} norm cannot be evaluated in exact mode")]
    ExactUnsupported(&'static str),
    #[error("dimension must be at least 1")]
    ZeroDimension,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NormKind<T> {
    Euclidean,
    Lp(f64),
    /// Functionals closed under negation: the supplied list, then any missing negations.
    Polyhedral(Vec<Vec<T>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormSpec<T> {
    dim: usize,
    kind: NormKind<T>,
    /// Number of functionals supplied before the negation closure.
    supplied: usize,
}

impl<T: Scalar> NormSpec<T> {
    pub fn euclidean(dim: usize) -> Result<Self, NormError> {
        if dim == 0 {
            return Err(NormError::ZeroDimension);
        }
        if T::MODE == Mode::Exact {
            return Err(NormError::ExactUnsupported("Euclidean"));
        }
        Ok(NormSpec {
            dim,
            kind: NormKind::Euclidean,
            supplied: 0,
        })
    }

    /// `p = 2` gives the Euclidean norm.
    pub fn lp(dim: usize, p: f64) -> Result<Self, NormError> {
        if !(p.is_finite() && p > 1.0) {
            return Err(NormError::InvalidP(p));
        }
        if p == 2.0 {
            return Self::euclidean(dim);
        }
        if dim == 0 {
            return Err(NormError::ZeroDimension);
        }
        if T::MODE == Mode::Exact {
            return Err(NormError::ExactUnsupported("l_p"));
        }
        Ok(NormSpec {
            dim,
            kind: NormKind::Lp(p),
            supplied: 0,
        })
    }

    pub fn polyhedral(dim: usize, functionals: Vec<Vec<T>>) -> Result<Self, NormError> {
        if dim == 0 {
            return Err(NormError::ZeroDimension);
        }
        if functionals.is_empty() {
            return Err(NormError::NoFunctionals);
        }
        for (index, f) in functionals.iter().enumerate() {
            if f.len() != dim {
                return Err(NormError::FunctionalLength {
                    index,
                    expected: dim,
                    got: f.len(),
                });
            }
        }
        let mut closed: Vec<Vec<T>> = Vec::with_capacity(2 * functionals.len());
        for f in &functionals {
            if !closed.contains(f) {
                closed.push(f.clone());
            }
        }
        let supplied = closed.len();
        for i in 0..supplied {
            let neg: Vec<T> = closed[i].iter().map(|v| -v.clone()).collect();
            if !closed.contains(&neg) {
                closed.push(neg);
            }
        }
        let m = Matrix::from_rows(&closed, dim).expect("lengths checked");
        let r = rank(&m, DEFAULT_RANK_TOL);
        if r != dim {
            return Err(NormError::NotSpanning { rank: r, dim });
        }
        Ok(NormSpec {
            dim,
            kind: NormKind::Polyhedral(closed),
            supplied,
        })
    }

    /// `max_i |x_i|`.
    pub fn linf(dim: usize) -> Result<Self, NormError> {
        let fs = (0..dim).map(|i| unit::<T>(dim, i)).collect();
        Self::polyhedral(dim, fs)
    }

    /// `sum_i |x_i|`, as the maximum over all sign vectors.
    pub fn l1(dim: usize) -> Result<Self, NormError> {
        let fs = (0..1usize << dim.saturating_sub(1))
            .map(|mask| {
                (0..dim)
                    .map(|i| {
                        if i > 0 && mask & (1 << (i - 1)) != 0 {
                            -T::one()
                        } else {
                            T::one()
                        }
                    })
                    .collect()
            })
            .collect();
        Self::polyhedral(dim, fs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &NormKind<T> {
        &self.kind
    }

    pub fn is_polyhedral(&self) -> bool {
        matches!(self.kind, NormKind::Polyhedral(_))
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(self.kind, NormKind::Euclidean)
    }

    /// The functionals as supplied (deduplicated, before closure).
    pub fn supplied_functionals(&self) -> &[Vec<T>] {
        match &self.kind {
            NormKind::Polyhedral(fs) => &fs[..self.supplied],
            _ => &[],
        }
    }

    /// The functional list after closing under negation.
    pub fn functionals(&self) -> &[Vec<T>] {
        match &self.kind {
            NormKind::Polyhedral(fs) => fs,
            _ => &[],
        }
    }

    fn check(&self, x: &[T]) -> Result<(), NormError> {
        if x.len() != self.dim {
            return Err(NormError::Dimension {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &[T]) -> Result<T, NormError> {
        self.check(x)?;
        Ok(match &self.kind {
            NormKind::Euclidean => {
                T::from_f64(x.iter().map(|v| v.to_f64().powi(2)).sum::<f64>().sqrt())
            }
            NormKind::Lp(p) => T::from_f64(lp_norm(&to_f64(x), *p)),
            NormKind::Polyhedral(fs) => {
                fs.iter()
                    .map(|f| dot(f, x))
                    .fold(T::zero(), |m, v| if v > m { v } else { m })
            }
        })
    }

    /// Indices (into [`functionals`](Self::functionals)) of the functionals attaining the norm at `x != 0`.
    pub fn active_indices(&self, x: &[T]) -> Result<Vec<usize>, NormError> {
        let norm = self.evaluate(x)?;
        let fs = self.functionals();
        Ok((0..fs.len())
            .filter(|&i| {
                let gap = norm.clone() - dot(&fs[i], x);
                gap.is_negligible(&norm, ACTIVE_TOL)
            })
            .collect())
    }

    pub fn classify_edge_vector(&self, x: &[T]) -> Result<EdgeGeometry<T>, NormError> {
        self.check(x)?;
        if x.iter().all(|v| v.is_zero()) {
            return Ok(EdgeGeometry::ZeroLength);
        }
        Ok(match &self.kind {
            NormKind::Polyhedral(fs) => {
                let active = self.active_indices(x)?;
                let rows = active.iter().map(|&i| fs[i].clone()).collect();
                EdgeGeometry::PolyhedralActive { active, rows }
            }
            NormKind::Euclidean => EdgeGeometry::Smooth(euclidean_smooth(&to_f64(x)).map_scalar()),
            NormKind::Lp(p) => EdgeGeometry::Smooth(lp_smooth(&to_f64(x), *p).map_scalar()),
        })
    }

    /// `lim_{t->0+} (|x + t u| - |x|) / t`, the maximum of `F(u)` over the subdifferential at `x`.
    pub fn one_sided_directional(&self, x: &[T], u: &[T]) -> Result<T, NormError> {
        self.check(u)?;
        let g = self.classify_edge_vector(x)?;
        Ok(match g {
            EdgeGeometry::ZeroLength => self.evaluate(u)?,
            other => other.directional(u).expect("nonzero edge vector"),
        })
    }
}

fn unit<T: Scalar>(dim: usize, i: usize) -> Vec<T> {
    (0..dim)
        .map(|j| if i == j { T::one() } else { T::zero() })
        .collect()
}

fn to_f64<T: Scalar>(x: &[T]) -> Vec<f64> {
    x.iter().map(|v| v.to_f64()).collect()
}

pub fn lp_norm(x: &[f64], p: f64) -> f64 {
    let m = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m == 0.0 {
        return 0.0;
    }
    m * x
        .iter()
        .map(|v| (v.abs() / m).powf(p))
        .sum::<f64>()
        .powf(1.0 / p)
}

/// `sgn(x_i) |x_i|^q` coordinatewise.
pub fn signed_power(x: &[f64], q: f64) -> Vec<f64> {
    x.iter().map(|v| v.signum() * v.abs().powf(q)).collect()
}

/// Local structure of the norm at one edge vector.
#[derive(Debug, Clone, PartialEq)]
pub enum EdgeGeometry<T> {
    Smooth(SmoothEdge<T>),
    /// Active signed functionals; `active` indexes the closed functional list.
    PolyhedralActive {
        active: Vec<usize>,
        rows: Vec<Vec<T>>,
    },
    ZeroLength,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothEdge<T> {
    /// Norm gradient `phi_x`.
    pub gradient: Vec<T>,
    /// Norm Hessian `Delta_x`.
    pub hessian: Option<Matrix<T>>,
    /// `x^(p-1)`; `x` itself for the Euclidean norm.
    pub power_gradient: Option<Vec<T>>,
    /// Diagonal of `Delta^(p-2)_x`; all ones for the Euclidean norm.
    pub power_hessian: Option<Vec<T>>,
}

impl SmoothEdge<f64> {
    fn map_scalar<T: Scalar>(self) -> SmoothEdge<T> {
        let v = |x: Vec<f64>| x.into_iter().map(T::from_f64).collect::<Vec<T>>();
        SmoothEdge {
            gradient: v(self.gradient),
            hessian: self.hessian.map(|h| h.map(|x| T::from_f64(*x))),
            power_gradient: self.power_gradient.map(v),
            power_hessian: self.power_hessian.map(v),
        }
    }
}

fn euclidean_smooth(x: &[f64]) -> SmoothEdge<f64> {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let d = x.len();
    let hat: Vec<f64> = x.iter().map(|v| v / n).collect();
    let hessian = Matrix::from_fn(d, d, |i, j| {
        ((if i == j { 1.0 } else { 0.0 }) - hat[i] * hat[j]) / n
    });
    SmoothEdge {
        gradient: hat,
        hessian: Some(hessian),
        power_gradient: Some(x.to_vec()),
        power_hessian: Some(vec![1.0; d]),
    }
}

fn lp_smooth(x: &[f64], p: f64) -> SmoothEdge<f64> {
    let n = lp_norm(x, p);
    let d = x.len();
    let w = signed_power(x, p - 1.0);
    let np1 = n.powf(p - 1.0);
    let gradient: Vec<f64> = w.iter().map(|v| v / np1).collect();
    let twice = p >= 2.0 || x.iter().all(|v| *v != 0.0);
    let (hessian, power_hessian) = if twice {
        let diag: Vec<f64> = x.iter().map(|v| v.abs().powf(p - 2.0)).collect();
        let n2 = n.powf(2.0 * p - 1.0);
        let h = Matrix::from_fn(d, d, |i, j| {
            let di = if i == j { diag[i] / np1 } else { 0.0 };
            (p - 1.0) * (di - w[i] * w[j] / n2)
        });
        (Some(h), Some(diag))
    } else {
        (None, None)
    };
    SmoothEdge {
        gradient,
        hessian,
        power_gradient: Some(w),
        power_hessian,
    }
}

impl<T: Scalar> EdgeGeometry<T> {
    pub fn is_zero_length(&self) -> bool {
        matches!(self, EdgeGeometry::ZeroLength)
    }

    /// Differentiable: smooth, or exactly one active functional.
    pub fn is_differentiable(&self) -> bool {
        match self {
            EdgeGeometry::Smooth(_) => true,
            EdgeGeometry::PolyhedralActive { rows, .. } => rows.len() == 1,
            EdgeGeometry::ZeroLength => false,
        }
    }

    /// Twice differentiable. A single active functional means the norm is locally linear.
    pub fn is_twice_differentiable(&self) -> bool {
        match self {
            EdgeGeometry::Smooth(s) => s.hessian.is_some(),
            EdgeGeometry::PolyhedralActive { rows, .. } => rows.len() == 1,
            EdgeGeometry::ZeroLength => false,
        }
    }

    /// Derivative row when differentiable.
    pub fn gradient(&self) -> Option<&[T]> {
        match self {
            EdgeGeometry::Smooth(s) => Some(&s.gradient),
            EdgeGeometry::PolyhedralActive { rows, .. } if rows.len() == 1 => Some(&rows[0]),
            _ => None,
        }
    }

    /// One-sided directional derivative along `u`; `None` for zero-length edges,
    /// where it depends on the norm of `u` rather than on this structure.
    pub fn directional(&self, u: &[T]) -> Option<T> {
        match self {
            EdgeGeometry::Smooth(s) => Some(dot(&s.gradient, u)),
            EdgeGeometry::PolyhedralActive { rows, .. } => rows
                .iter()
                .map(|f| dot(f, u))
                .reduce(|a, b| if b > a { b } else { a }),
            EdgeGeometry::ZeroLength => None,
        }
    }
}
