//! Second-order analysis for smooth norms (`l_p`, Euclidean) in float mode.
//!
//! Everything is expressed in the power formulation: for an edge vector `x`
//! with exponent `p` (2 for Euclidean), the rows are `x^(p-1)`, the diagonal
//! `D = Delta^(p-2)_x`, and a second-order flex `(u, u')` satisfies
//!
//! ```text
//! (p-1) du^T D du + x^(p-1) . du' = 0     for every edge, du = u_v - u_w.
//! ```
//!
//! With `U` an orthonormal basis of the flexes orthogonal to `T(p)` and
//! `a^1..a^s` a basis of power stresses, the restricted forms are
//! `Q_i = sum_e a^i_e B_e^T D_e B_e` with `B_e = U_v - U_w`. A flex `U c`
//! extends to a second-order flex iff `Q_i(c) = 0` for all `i`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::firstorder::{edge_row, in_span, nontrivial_flexes, pin, stress_space, trivial_space};
use crate::model::Framework;
use crate::norms::{EdgeGeometry, NormKind};
use crate::numeric::{
    dot, jacobi_svd, norm2, orthonormal_columns, sym_eigen, Matrix, NumericError,
};

/// Relative threshold for definiteness decisions.
pub const PD_TOL: f64 = 1e-8;
/// Absolute residual bound for certified witnesses (after scaling `|u|_inf = 1`).
pub const RESIDUAL_TOL: f64 = 1e-8;

const ASCENT_STARTS: usize = 20;
const ASCENT_STEPS: usize = 400;
const ZERO_SEARCH_STARTS: usize = 100;
const ZERO_SEARCH_STEPS: usize = 200;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SecondOrderError {
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Yes,
    No,
    Undetermined,
}

/// A velocity `u` outside `T(p)` and an acceleration `u'`.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderWitness {
    pub u: Vec<f64>,
    pub u_prime: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedForms {
    /// Exponent of the power formulation; 2 for Euclidean.
    pub p: f64,
    /// Columns: orthonormal basis of the flexes orthogonal to `T(p)`.
    pub flex_coords: Matrix<f64>,
    /// Basis of power stresses, one vector per form.
    pub stresses: Vec<Vec<f64>>,
    pub forms: Vec<Matrix<f64>>,
    /// Decisions compare eigenvalues against `PD_TOL * scale`.
    pub scale: f64,
}

impl RestrictedForms {
    pub fn flex_dim(&self) -> usize {
        self.flex_coords.cols()
    }

    pub fn stress_dim(&self) -> usize {
        self.stresses.len()
    }

    pub fn threshold(&self) -> f64 {
        PD_TOL * self.scale
    }

    /// `sum_i x_i Q_i`.
    pub fn combination(&self, x: &[f64]) -> Matrix<f64> {
        let f = self.flex_dim();
        Matrix::from_fn(f, f, |i, j| {
            self.forms.iter().zip(x).map(|(q, xi)| xi * q[(i, j)]).sum()
        })
    }

    /// `sum_i x_i a^i`.
    pub fn stress_combination(&self, x: &[f64]) -> Vec<f64> {
        let n = self.stresses.first().map_or(0, |a| a.len());
        (0..n)
            .map(|e| self.stresses.iter().zip(x).map(|(a, xi)| xi * a[e]).sum())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrestressResult {
    pub decision: Decision,
    /// Power stress, normalised to `max |a_e| = 1`, on yes.
    pub stress: Option<Vec<f64>>,
    /// Least eigenvalue of the form of the reported stress, or best found.
    pub min_eigenvalue: Option<f64>,
    pub method: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderResult {
    pub decision: Decision,
    pub witness: Option<SecondOrderWitness>,
    pub method: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderAnalysis {
    pub forms: RestrictedForms,
    pub prestress: PrestressResult,
    pub second_order: SecondOrderResult,
}

fn power_exponent(fw: &Framework<f64>) -> Result<f64, SecondOrderError> {
    match fw.norm().kind() {
        NormKind::Euclidean => Ok(2.0),
        NormKind::Lp(p) => Ok(*p),
        NormKind::Polyhedral(_) => Err(SecondOrderError::NotApplicable(
            "polyhedral norms reduce to first-order analysis".into(),
        )),
    }
}

type EdgeData<'a> = Vec<(&'a [f64], &'a [f64])>;

/// Per-edge `(x^(p-1), diag Delta^(p-2))`.
fn edge_data(fw: &Framework<f64>) -> Result<EdgeData<'_>, SecondOrderError> {
    fw.geometry()
        .iter()
        .enumerate()
        .map(|(e, g)| match g {
            EdgeGeometry::Smooth(s) => match (&s.power_gradient, &s.power_hessian) {
                (Some(r), Some(d)) => Ok((r.as_slice(), d.as_slice())),
                _ => Err(SecondOrderError::NotApplicable(format!(
                    "the norm is not twice differentiable at edge {}",
                    fw.graph().edge_label(e)
                ))),
            },
            _ => Err(SecondOrderError::NotApplicable(format!(
                "edge {} is not a smooth point of the norm",
                fw.graph().edge_label(e)
            ))),
        })
        .collect()
}

fn quad_diag(d: &[f64], x: &[f64]) -> f64 {
    d.iter().zip(x).map(|(di, xi)| di * xi * xi).sum()
}

/// The power forms restricted to the flexes orthogonal to `T(p)`.
pub fn restricted_forms(
    fw: &Framework<f64>,
    tol: f64,
) -> Result<RestrictedForms, SecondOrderError> {
    let p = power_exponent(fw)?;
    let data = edge_data(fw)?;
    let trivial = trivial_space(fw, tol);
    let nontrivial = nontrivial_flexes(fw, &trivial, tol);
    let u = orthonormal_columns(&nontrivial.basis, tol);
    let f = u.cols();
    let d = fw.dim();

    let stresses: Vec<Vec<f64>> = stress_space(fw, tol)
        .and_then(|s| s.power_basis)
        .map_or_else(Vec::new, |b| b.vectors());
    let n_e = fw.graph().edge_count();

    // B_e^T D_e B_e per edge.
    let edge_forms: Vec<Matrix<f64>> = (0..n_e)
        .map(|e| {
            let (v, w) = fw.graph().edges()[e];
            let b = Matrix::from_fn(d, f, |k, j| u[(v * d + k, j)] - u[(w * d + k, j)]);
            let diag = data[e].1;
            Matrix::from_fn(f, f, |i, j| {
                (0..d).map(|k| diag[k] * b[(k, i)] * b[(k, j)]).sum()
            })
        })
        .collect();

    let forms: Vec<Matrix<f64>> = stresses
        .iter()
        .map(|a| {
            let mut q = Matrix::<f64>::zeros(f, f);
            for (e, m) in edge_forms.iter().enumerate() {
                for i in 0..f {
                    for j in 0..f {
                        q[(i, j)] += a[e] * m[(i, j)];
                    }
                }
            }
            q
        })
        .collect();

    // Bound on the entries of any unit combination that stays put when the
    // forms themselves vanish: sum_e max_i |a^i_e| |D_e|_inf |B_e|_F^2.
    let scale = (0..n_e)
        .map(|e| {
            let (v, w) = fw.graph().edges()[e];
            let weight = stresses.iter().map(|a| a[e].abs()).fold(0.0, f64::max);
            let dmax = data[e].1.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let b2: f64 = (0..d)
                .flat_map(|k| (0..f).map(move |j| (k, j)))
                .map(|(k, j)| (u[(v * d + k, j)] - u[(w * d + k, j)]).powi(2))
                .sum();
            weight * dmax * b2
        })
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);

    Ok(RestrictedForms {
        p,
        flex_coords: u,
        stresses,
        forms,
        scale,
    })
}

/// `H_{a,b}(u) = sum_e a_e Delta_e(du, du) + b_e (phi_e(du))^2` with the norm
/// Hessian and gradient; `a` is a stress for the norm-gradient rows.
pub fn evaluate_h_ab(
    fw: &Framework<f64>,
    a: &[f64],
    b: &[f64],
    u: &[f64],
) -> Result<f64, SecondOrderError> {
    let n_e = fw.graph().edge_count();
    if a.len() != n_e || b.len() != n_e || u.len() != fw.coord_count() {
        return Err(SecondOrderError::InvalidInput("length mismatch".into()));
    }
    if let Some(e) = b.iter().position(|&x| x.is_nan() || x <= 0.0) {
        return Err(SecondOrderError::InvalidInput(format!(
            "b must be positive, b[{e}] = {}",
            b[e]
        )));
    }
    let mut total = 0.0;
    for (e, g) in fw.geometry().iter().enumerate() {
        let EdgeGeometry::Smooth(s) = g else {
            return Err(SecondOrderError::NotApplicable(format!(
                "edge {} is not a smooth point of the norm",
                fw.graph().edge_label(e)
            )));
        };
        let Some(h) = &s.hessian else {
            return Err(SecondOrderError::NotApplicable(format!(
                "the norm is not twice differentiable at edge {}",
                fw.graph().edge_label(e)
            )));
        };
        let du = fw.edge_difference(e, u);
        let hd = h.mul_vec(&du)?;
        let phi = dot(&s.gradient, &du);
        total += a[e] * dot(&du, &hd) + b[e] * phi * phi;
    }
    Ok(total)
}

/// `a^grad_e = a^pow_e |x_e|^(p-1)`: the norm-gradient stress matching a power stress.
pub fn gradient_stress(
    fw: &Framework<f64>,
    power_stress: &[f64],
) -> Result<Vec<f64>, SecondOrderError> {
    let p = power_exponent(fw)?;
    Ok(power_stress
        .iter()
        .zip(fw.rigidity_map())
        .map(|(a, len)| a * len.powf(p - 1.0))
        .collect())
}

/// `sum_e a_e du^T D_e du`.
pub fn evaluate_power_form(
    fw: &Framework<f64>,
    a: &[f64],
    u: &[f64],
) -> Result<f64, SecondOrderError> {
    let data = edge_data(fw)?;
    if a.len() != data.len() || u.len() != fw.coord_count() {
        return Err(SecondOrderError::InvalidInput("length mismatch".into()));
    }
    Ok(data
        .iter()
        .enumerate()
        .map(|(e, (_, d))| a[e] * quad_diag(d, &fw.edge_difference(e, u)))
        .sum())
}

/// Least-squares `u'` for a flex `u`.
pub fn acceleration_for(
    fw: &Framework<f64>,
    u: &[f64],
    tol: f64,
) -> Result<Vec<f64>, SecondOrderError> {
    let p = power_exponent(fw)?;
    let data = edge_data(fw)?;
    let rows: Vec<Vec<f64>> = (0..data.len())
        .map(|e| edge_row(fw, e, data[e].0))
        .collect();
    let r = Matrix::from_rows(&rows, fw.coord_count())?;
    let rhs: Vec<f64> = (0..data.len())
        .map(|e| -(p - 1.0) * quad_diag(data[e].1, &fw.edge_difference(e, u)))
        .collect();
    if r.rows() == 0 {
        return Ok(vec![0.0; fw.coord_count()]);
    }
    Ok(jacobi_svd(&r).solve(&rhs, tol))
}

/// Largest per-edge residuals `(flex, second-order)` after scaling `|u|_inf = 1`.
pub fn witness_residuals(
    fw: &Framework<f64>,
    w: &SecondOrderWitness,
) -> Result<(f64, f64), SecondOrderError> {
    let p = power_exponent(fw)?;
    let data = edge_data(fw)?;
    let n = fw.coord_count();
    if w.u.len() != n || w.u_prime.len() != n {
        return Err(SecondOrderError::InvalidInput("length mismatch".into()));
    }
    let m = w.u.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if m == 0.0 {
        return Ok((0.0, 0.0));
    }
    let u: Vec<f64> = w.u.iter().map(|x| x / m).collect();
    let up: Vec<f64> = w.u_prime.iter().map(|x| x / (m * m)).collect();
    let mut flex: f64 = 0.0;
    let mut second: f64 = 0.0;
    for (e, (r, d)) in data.iter().enumerate() {
        let du = fw.edge_difference(e, &u);
        let dup = fw.edge_difference(e, &up);
        flex = flex.max(dot(r, &du).abs());
        second = second.max(((p - 1.0) * quad_diag(d, &du) + dot(r, &dup)).abs());
    }
    Ok((flex, second))
}

/// True iff `u` is a flex outside `T(p)` and every second-order residual is below [`RESIDUAL_TOL`].
pub fn certify_second_order_witness(fw: &Framework<f64>, w: &SecondOrderWitness, tol: f64) -> bool {
    let Ok((flex, second)) = witness_residuals(fw, w) else {
        return false;
    };
    if w.u.iter().all(|x| *x == 0.0) || in_span(&trivial_space(fw, tol), &w.u, tol) {
        return false;
    }
    flex <= RESIDUAL_TOL && second <= RESIDUAL_TOL
}

/// Scales `u` to `|u|_inf = 1`, removes its trivial part on pinned coordinates,
/// and solves for `u'`; `None` unless the result certifies.
fn build_witness(fw: &Framework<f64>, u: &[f64], tol: f64) -> Option<SecondOrderWitness> {
    let trivial = trivial_space(fw, tol);
    let pinned = pin(&trivial, u, tol);
    let m = pinned.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if m == 0.0 {
        return None;
    }
    let u: Vec<f64> = pinned.iter().map(|x| x / m).collect();
    let u_prime = acceleration_for(fw, &u, tol).ok()?;
    let w = SecondOrderWitness { u, u_prime };
    certify_second_order_witness(fw, &w, tol).then_some(w)
}

fn normalized_stress(a: Vec<f64>) -> Vec<f64> {
    let m = a.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if m == 0.0 {
        a
    } else {
        a.into_iter().map(|x| x / m).collect()
    }
}

fn unit_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let norm = norm2(&v);
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Maximises `lambda_min(sum x_i Q_i)` over the unit ball by projected supergradient ascent.
/// Returns the best `(value, x)` over all starts.
fn ascend(forms: &RestrictedForms, seed: u64) -> Result<(f64, Vec<f64>), SecondOrderError> {
    let s = forms.stress_dim();
    let tau = forms.threshold();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = (f64::NEG_INFINITY, vec![0.0; s]);
    for _ in 0..ASCENT_STARTS {
        let mut x = unit_vector(&mut rng, s);
        for k in 0..ASCENT_STEPS {
            let eig = sym_eigen(&forms.combination(&x))?;
            let (lmin, v) = eig.min().expect("forms are nonempty");
            if lmin > best.0 {
                best = (lmin, x.clone());
            }
            if best.0 > tau {
                return Ok(best);
            }
            let g: Vec<f64> = forms
                .forms
                .iter()
                .map(|q| dot(&v, &q.mul_vec(&v).expect("square form")))
                .collect();
            let gn = norm2(&g);
            if gn == 0.0 {
                break;
            }
            let step = 0.5 / ((k + 1) as f64).sqrt();
            for (xi, gi) in x.iter_mut().zip(&g) {
                *xi += step * gi / gn;
            }
            let xn = norm2(&x);
            if xn > 1.0 {
                x.iter_mut().for_each(|xi| *xi /= xn);
            }
        }
    }
    Ok(best)
}

/// Levenberg-Marquardt on the unit sphere for a common zero of the forms.
fn common_zero(forms: &RestrictedForms, start: Vec<f64>) -> Vec<f64> {
    let f = forms.flex_dim();
    let residual = |c: &[f64]| -> Vec<f64> {
        forms
            .forms
            .iter()
            .map(|q| dot(c, &q.mul_vec(c).expect("square form")))
            .collect()
    };
    let mut c = start;
    let mut r = residual(&c);
    let mut phi: f64 = r.iter().map(|x| x * x).sum();
    let mut mu = 1e-3 * forms.scale * forms.scale;
    for _ in 0..ZERO_SEARCH_STEPS {
        if phi.sqrt() <= 1e-14 * forms.scale {
            break;
        }
        // Tangent-projected Jacobian rows 2 (Q_i c)^T (I - c c^T).
        let jac: Vec<Vec<f64>> = forms
            .forms
            .iter()
            .map(|q| {
                let g: Vec<f64> = q
                    .mul_vec(&c)
                    .expect("square form")
                    .iter()
                    .map(|x| 2.0 * x)
                    .collect();
                let gc = dot(&g, &c);
                g.iter().zip(&c).map(|(gi, ci)| gi - gc * ci).collect()
            })
            .collect();
        let mut improved = false;
        for _ in 0..30 {
            let a = Matrix::from_fn(f, f, |i, j| {
                jac.iter().map(|row| row[i] * row[j]).sum::<f64>() + if i == j { mu } else { 0.0 }
            });
            let rhs: Vec<f64> = (0..f)
                .map(|i| -jac.iter().zip(&r).map(|(row, ri)| row[i] * ri).sum::<f64>())
                .collect();
            let Some(delta) = crate::numeric::solve_square(&a, &rhs, 1e-300) else {
                mu *= 10.0;
                continue;
            };
            let mut trial: Vec<f64> = c.iter().zip(&delta).map(|(ci, di)| ci + di).collect();
            let n = norm2(&trial);
            trial.iter_mut().for_each(|x| *x /= n);
            let tr = residual(&trial);
            let tphi: f64 = tr.iter().map(|x| x * x).sum();
            if tphi < phi {
                c = trial;
                r = tr;
                phi = tphi;
                mu = (mu / 3.0).max(1e-30);
                improved = true;
                break;
            }
            mu *= 3.0;
        }
        if !improved {
            break;
        }
    }
    c
}

/// Prestress stability and second-order rigidity of a second-order well-positioned framework.
pub fn analyze(
    fw: &Framework<f64>,
    tol: f64,
    seed: u64,
) -> Result<SecondOrderAnalysis, SecondOrderError> {
    let forms = restricted_forms(fw, tol)?;
    let (f, s) = (forms.flex_dim(), forms.stress_dim());
    let tau = forms.threshold();
    let u_of = |c: &[f64]| forms.flex_coords.mul_vec(c).expect("coefficient length");

    if f == 0 {
        return Ok(SecondOrderAnalysis {
            prestress: PrestressResult {
                decision: Decision::Yes,
                stress: Some(vec![0.0; fw.graph().edge_count()]),
                min_eigenvalue: None,
                method: "infinitesimally rigid",
            },
            second_order: SecondOrderResult {
                decision: Decision::Yes,
                witness: None,
                method: "infinitesimally rigid",
            },
            forms,
        });
    }

    if s == 0 {
        let witness = build_witness(fw, &u_of(&unit(f, 0)), tol);
        let decision = if witness.is_some() {
            Decision::No
        } else {
            Decision::Undetermined
        };
        return Ok(SecondOrderAnalysis {
            prestress: PrestressResult {
                decision: Decision::No,
                stress: None,
                min_eigenvalue: None,
                method: "no nonzero stress",
            },
            second_order: SecondOrderResult {
                decision,
                witness,
                method: "no nonzero stress: every flex extends",
            },
            forms,
        });
    }

    // Prestress search.
    let (best, x) = if s == 1 {
        let eig = sym_eigen(&forms.forms[0])?;
        let lmin = eig.values[0];
        let lmax = *eig.values.last().expect("f > 0");
        if -lmax > lmin {
            (-lmax, vec![-1.0])
        } else {
            (lmin, vec![1.0])
        }
    } else {
        ascend(&forms, seed)?
    };
    if best > tau {
        let stress = normalized_stress(forms.stress_combination(&x));
        return Ok(SecondOrderAnalysis {
            prestress: PrestressResult {
                decision: Decision::Yes,
                stress: Some(stress),
                min_eigenvalue: Some(best),
                method: if s == 1 {
                    "definite form"
                } else {
                    "supergradient ascent"
                },
            },
            second_order: SecondOrderResult {
                decision: Decision::Yes,
                witness: None,
                method: "implied by prestress stability",
            },
            forms,
        });
    }

    // Look for a second-order flex, which also rules out prestress stability.
    let mut witness = None;
    let mut method = "common zero search";
    if s == 1 {
        method = "indefinite or singular form";
        let eig = sym_eigen(&forms.forms[0])?;
        let (lmin, vmin) = eig.min().expect("f > 0");
        let (lmax, vmax) = eig.max().expect("f > 0");
        let candidates: Vec<Vec<f64>> = if lmin < -tau && lmax > tau {
            let (a, b) = (lmax.sqrt(), (-lmin).sqrt());
            vec![vmin.iter().zip(&vmax).map(|(p, q)| a * p + b * q).collect()]
        } else {
            // Eigenvectors of eigenvalues closest to zero.
            let mut idx: Vec<usize> = (0..f).collect();
            idx.sort_by(|&i, &j| eig.values[i].abs().total_cmp(&eig.values[j].abs()));
            idx.into_iter().map(|i| eig.vectors.column(i)).collect()
        };
        for c in candidates {
            if let Some(w) = build_witness(fw, &u_of(&c), tol) {
                witness = Some(w);
                break;
            }
        }
    }
    if witness.is_none() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
        for _ in 0..ZERO_SEARCH_STARTS {
            let c = common_zero(&forms, unit_vector(&mut rng, f));
            if let Some(w) = build_witness(fw, &u_of(&c), tol) {
                witness = Some(w);
                method = "common zero search";
                break;
            }
        }
    }
    let (pre, second) = if witness.is_some() {
        (Decision::No, Decision::No)
    } else {
        (Decision::Undetermined, Decision::Undetermined)
    };
    Ok(SecondOrderAnalysis {
        prestress: PrestressResult {
            decision: pre,
            stress: None,
            min_eigenvalue: Some(best),
            method: if witness.is_some() {
                "second-order flex found"
            } else {
                "no positive stress found"
            },
        },
        second_order: SecondOrderResult {
            decision: second,
            witness,
            method,
        },
        forms,
    })
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()
}

pub fn prestress_decide(
    fw: &Framework<f64>,
    tol: f64,
    seed: u64,
) -> Result<PrestressResult, SecondOrderError> {
    Ok(analyze(fw, tol, seed)?.prestress)
}

pub fn second_order_decide(
    fw: &Framework<f64>,
    tol: f64,
    seed: u64,
) -> Result<SecondOrderResult, SecondOrderError> {
    Ok(analyze(fw, tol, seed)?.second_order)
}
