//! Exact linear programming: a dense two-phase tableau simplex with Bland's rule.

use num_traits::{One, Signed, Zero};

use super::linalg::null_space;
use super::matrix::Matrix;
use super::scalar::Rational;
use super::NumericError;

const MAX_PIVOTS: usize = 200_000;

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Infeasible,
    Unbounded,
    Optimal { x: Vec<Rational>, value: Rational },
}

struct Tableau {
    /// Constraint rows, last entry is the right-hand side.
    rows: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    /// Reduced costs `c_B B^-1 A_j - c_j`, last entry is the objective value.
    obj: Vec<Rational>,
    /// Columns allowed to enter the basis.
    allowed: Vec<bool>,
}

impl Tableau {
    fn width(&self) -> usize {
        self.obj.len() - 1
    }

    fn set_objective(&mut self, c: &[Rational]) {
        let w = self.width();
        let mut obj: Vec<Rational> = (0..=w)
            .map(|j| {
                if j < w {
                    -c[j].clone()
                } else {
                    Rational::zero()
                }
            })
            .collect();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = &c[b];
            if cb.is_zero() {
                continue;
            }
            for (j, o) in obj.iter_mut().enumerate() {
                *o += cb * &self.rows[i][j];
            }
        }
        self.obj = obj;
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let inv = Rational::one() / &self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v *= &inv;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *v -= &f * p;
                }
            }
        }
        if !self.obj[c].is_zero() {
            let f = self.obj[c].clone();
            for (v, p) in self.obj.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *v -= &f * p;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Runs to optimality. `Ok(false)` means unbounded.
    fn run(&mut self) -> Result<bool, NumericError> {
        let w = self.width();
        for _ in 0..MAX_PIVOTS {
            let Some(enter) = (0..w).find(|&j| self.allowed[j] && self.obj[j].is_negative()) else {
                return Ok(true);
            };
            let mut leave: Option<(usize, Rational)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[enter].is_positive() {
                    continue;
                }
                let ratio = &row[w] / &row[enter];
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => {
                        ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            match leave {
                None => return Ok(false),
                Some((r, _)) => self.pivot(r, enter),
            }
        }
        Err(NumericError::IterationLimit("simplex"))
    }
}

/// Maximises `c.x` subject to `a x = b`, `x >= 0`.
pub fn maximize(
    a: &Matrix<Rational>,
    b: &[Rational],
    c: &[Rational],
) -> Result<LpOutcome, NumericError> {
    let (m, n) = (a.rows(), a.cols());
    if b.len() != m || c.len() != n {
        return Err(NumericError::Shape(format!(
            "linear program with {m}x{n} constraints, {} right-hand sides, {} costs",
            b.len(),
            c.len()
        )));
    }
    let w = n + m;
    let rows: Vec<Vec<Rational>> = (0..m)
        .map(|i| {
            let flip = b[i].is_negative();
            let mut row: Vec<Rational> = a
                .row(i)
                .iter()
                .map(|v| if flip { -v.clone() } else { v.clone() })
                .collect();
            row.extend((0..m).map(|k| {
                if k == i {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            }));
            row.push(if flip { -b[i].clone() } else { b[i].clone() });
            row
        })
        .collect();
    let mut t = Tableau {
        rows,
        basis: (n..w).collect(),
        obj: vec![Rational::zero(); w + 1],
        allowed: vec![true; w],
    };

    let phase1: Vec<Rational> = (0..w)
        .map(|j| {
            if j < n {
                Rational::zero()
            } else {
                -Rational::one()
            }
        })
        .collect();
    t.set_objective(&phase1);
    t.run()?;
    if !t.obj[w].is_zero() {
        return Ok(LpOutcome::Infeasible);
    }

    // Drive remaining artificials out of the basis; drop redundant rows.
    let mut i = 0;
    while i < t.rows.len() {
        if t.basis[i] >= n {
            match (0..n).find(|&j| !t.rows[i][j].is_zero()) {
                Some(j) => t.pivot(i, j),
                None => {
                    t.rows.remove(i);
                    t.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }
    for j in n..w {
        t.allowed[j] = false;
    }

    let mut phase2 = c.to_vec();
    phase2.extend((0..m).map(|_| Rational::zero()));
    t.set_objective(&phase2);
    if !t.run()? {
        return Ok(LpOutcome::Unbounded);
    }
    let mut x = vec![Rational::zero(); n];
    for (r, &bv) in t.basis.iter().enumerate() {
        if bv < n {
            x[bv] = t.rows[r][w].clone();
        }
    }
    Ok(LpOutcome::Optimal {
        x,
        value: t.obj[w].clone(),
    })
}

/// Nonzero `u` with `inequalities . u >= 0` and `equalities . u = 0`, or `None`.
///
/// Equalities are eliminated through an exact kernel basis `u = N z`. For each
/// coordinate of `z` and each sign the program `max +-z_i` over
/// `G N z >= 0, |z| <= 1` is solved; a positive optimum is a witness.
pub fn feasible_nonzero(
    inequalities: &Matrix<Rational>,
    equalities: &Matrix<Rational>,
) -> Result<Option<Vec<Rational>>, NumericError> {
    let dim = inequalities.cols().max(equalities.cols());
    if inequalities.cols() != dim || equalities.cols() != dim {
        return Err(NumericError::Shape(format!(
            "inequalities have {} columns, equalities {}",
            inequalities.cols(),
            equalities.cols()
        )));
    }
    let basis = null_space(equalities, 0.0).basis;
    let k = basis.cols();
    if k == 0 {
        return Ok(None);
    }
    let h = inequalities.mul(&basis)?;
    let q = h.rows();

    // Variables: z+ (k), z- (k), slack for each inequality (q), slack for each bound (2k).
    let n = 2 * k + q + 2 * k;
    let m = q + 2 * k;
    let mut a = Matrix::<Rational>::zeros(m, n);
    let mut b = vec![Rational::zero(); m];
    for i in 0..q {
        // -H z + s = 0
        for j in 0..k {
            a[(i, j)] = -h[(i, j)].clone();
            a[(i, k + j)] = h[(i, j)].clone();
        }
        a[(i, 2 * k + i)] = Rational::one();
    }
    for j in 0..2 * k {
        let r = q + j;
        a[(r, j)] = Rational::one();
        a[(r, 2 * k + q + j)] = Rational::one();
        b[r] = Rational::one();
    }

    for j in 0..k {
        for sign in [1i64, -1] {
            let mut c = vec![Rational::zero(); n];
            c[j] = Rational::from_integer(sign.into());
            c[k + j] = Rational::from_integer((-sign).into());
            if let LpOutcome::Optimal { x, value } = maximize(&a, &b, &c)? {
                if value.is_positive() {
                    let z: Vec<Rational> = (0..k).map(|i| &x[i] - &x[k + i]).collect();
                    return Ok(Some(basis.mul_vec(&z)?));
                }
            }
        }
    }
    Ok(None)
}

/// Weights `w >= 0` with `sum w = 1` and `sum w_i g_i = target`, or `None`.
pub fn convex_weights(
    generators: &[Vec<Rational>],
    target: &[Rational],
) -> Result<Option<Vec<Rational>>, NumericError> {
    let d = target.len();
    if let Some(g) = generators.iter().find(|g| g.len() != d) {
        return Err(NumericError::Shape(format!(
            "generator of length {} for a target of length {d}",
            g.len()
        )));
    }
    if generators.is_empty() {
        return Ok(None);
    }
    let n = generators.len();
    let mut a = Matrix::<Rational>::zeros(d + 1, n);
    for (j, g) in generators.iter().enumerate() {
        for i in 0..d {
            a[(i, j)] = g[i].clone();
        }
        a[(d, j)] = Rational::one();
    }
    let mut b = target.to_vec();
    b.push(Rational::one());
    match maximize(&a, &b, &vec![Rational::zero(); n])? {
        LpOutcome::Optimal { x, .. } => Ok(Some(x)),
        _ => Ok(None),
    }
}
