//! The divergence matrix `M` (`div p_a = sum_b M_ab q_b`) and exact linear
//! algebra over it.

use std::fmt;

use super::diagram::{divergence, Atom, Molecule, VectorDiagram};
use super::poly::{Poly, EU, EV};
use super::ratfunc::RatFunc;
use crate::error::{Error, Result};

/// The eight vectors `u_i v, v_i u, r_i uv, r_i u_j v_j, r_j u_j v_i,
/// r_j v_j u_i, r^2 u_i v, r^2 v_i u`.
pub fn standard_vectors() -> Vec<VectorDiagram> {
    use Atom::*;
    let v = |atoms: &[Atom], bonds: &[(usize, usize)], dangle| {
        VectorDiagram::new(atoms.to_vec(), bonds.to_vec(), dangle).expect("well-formed vector")
    };
    vec![
        v(&[U, V], &[], 0),
        v(&[U, V], &[], 1),
        v(&[R, U, V], &[], 0),
        v(&[R, U, V], &[(1, 2)], 0),
        v(&[R, U, V], &[(0, 1)], 2),
        v(&[R, U, V], &[(0, 2)], 1),
        v(&[R, R, U, V], &[(0, 1)], 2),
        v(&[R, R, U, V], &[(0, 1)], 3),
    ]
}

/// The eight scalars `uv, u_i v_i, r_i u_i v, r_i v_i u, r_i u_ij v_j,
/// r_i v_ij u_j, r^2 uv, r^2 u_i v_i`, in canonical form.
pub fn standard_scalars() -> Vec<Molecule> {
    use Atom::*;
    let m = |atoms: &[Atom], bonds: &[(usize, usize)]| {
        Molecule::new(atoms.to_vec(), bonds.to_vec()).expect("well-formed scalar").canonical()
    };
    vec![
        m(&[U, V], &[]),
        m(&[U, V], &[(0, 1)]),
        m(&[R, U, V], &[(0, 1)]),
        m(&[R, U, V], &[(0, 2)]),
        m(&[R, U, V], &[(0, 1), (1, 2)]),
        m(&[R, U, V], &[(0, 2), (1, 2)]),
        m(&[R, R, U, V], &[(0, 1)]),
        m(&[R, R, U, V], &[(0, 1), (2, 3)]),
    ]
}

/// Polynomial matrix, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoeffMatrix {
    pub rows: Vec<Vec<Poly>>,
}

impl CoeffMatrix {
    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn map(&self, f: impl Fn(&Poly) -> Poly) -> CoeffMatrix {
        CoeffMatrix { rows: self.rows.iter().map(|r| r.iter().map(&f).collect()).collect() }
    }

    /// Set `E_v = E_u`.
    pub fn at_equal_energy(&self) -> CoeffMatrix {
        self.map(|p| p.substitute(EV, &Poly::var(EU)))
    }

    pub fn to_rational(&self) -> RatMatrix {
        RatMatrix { rows: self.rows.iter().map(|r| r.iter().cloned().map(RatFunc::from).collect()).collect() }
    }

    pub fn eval(&self, x: &[f64; 3]) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.nrows(), self.ncols(), |i, j| self.rows[i][j].eval(x))
    }
}

impl fmt::Display for CoeffMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(|p| p.to_string()).collect()).collect();
        let width = cells.iter().flatten().map(String::len).max().unwrap_or(1);
        for row in cells {
            let padded: Vec<String> = row.iter().map(|c| format!("{c:>width$}")).collect();
            writeln!(f, "[ {} ]", padded.join("  "))?;
        }
        Ok(())
    }
}

/// Rational-function matrix, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatMatrix {
    pub rows: Vec<Vec<RatFunc>>,
}

impl RatMatrix {
    pub fn identity(n: usize) -> Self {
        RatMatrix {
            rows: (0..n)
                .map(|i| (0..n).map(|j| if i == j { RatFunc::one() } else { RatFunc::zero() }).collect())
                .collect(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn transpose(&self) -> RatMatrix {
        RatMatrix { rows: (0..self.ncols()).map(|j| self.rows.iter().map(|r| r[j].clone()).collect()).collect() }
    }

    pub fn mul(&self, o: &RatMatrix) -> RatMatrix {
        RatMatrix {
            rows: (0..self.nrows())
                .map(|i| {
                    (0..o.ncols())
                        .map(|j| {
                            (0..self.ncols())
                                .fold(RatFunc::zero(), |acc, k| &acc + &(&self.rows[i][k] * &o.rows[k][j]))
                        })
                        .collect()
                })
                .collect(),
        }
    }

    pub fn row(&self, i: usize) -> &[RatFunc] {
        &self.rows[i]
    }
}

/// Divergences of `vectors` expanded in `scalars`.
pub fn assemble_m(vectors: &[VectorDiagram], scalars: &[Molecule]) -> Result<CoeffMatrix> {
    let scalars: Vec<Molecule> = scalars.iter().map(Molecule::canonical).collect();
    let mut rows = Vec::with_capacity(vectors.len());
    for v in vectors {
        let div = divergence(v)?;
        let mut row = vec![Poly::zero(); scalars.len()];
        for (m, c) in div.terms() {
            match scalars.iter().position(|s| s == m) {
                Some(j) => row[j] = c.clone(),
                None => {
                    return Err(Error::Unexpressible(format!(
                        "divergence of {v} contains scalar {m}, which is not in the basis"
                    )))
                }
            }
        }
        rows.push(row);
    }
    Ok(CoeffMatrix { rows })
}

/// Exact inverse by fraction-free Gauss–Jordan elimination.
///
/// `[M | I]` is reduced with Bareiss updates, which keep every entry a
/// polynomial; at the end the left block is `D I` and `M^{-1}` is the right
/// block divided by `D`.
pub fn invert(m: &CoeffMatrix) -> Result<RatMatrix> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Symbolic(format!("cannot invert a {}x{} matrix", n, m.ncols())));
    }
    let mut a: Vec<Vec<Poly>> = m
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { Poly::one() } else { Poly::zero() }));
            row
        })
        .collect();
    let mut prev = Poly::one();
    for k in 0..n {
        let p = (k..n).find(|&i| !a[i][k].is_zero()).ok_or_else(|| {
            Error::Symbolic(format!("matrix is singular over the rational functions (column {})", k + 1))
        })?;
        a.swap(k, p);
        let piv = a[k][k].clone();
        let pivot_row = a[k].clone();
        for (i, row) in a.iter_mut().enumerate() {
            if i == k {
                continue;
            }
            let f = row[k].clone();
            for (x, pk) in row.iter_mut().zip(&pivot_row) {
                let num = &(&piv * &*x) - &(&f * pk);
                *x = num
                    .div_exact(&prev)
                    .ok_or_else(|| Error::Symbolic("fraction-free elimination produced a remainder".into()))?;
            }
        }
        prev = piv;
    }
    let det = RatFunc::from(prev);
    Ok(RatMatrix {
        rows: a.iter().map(|r| r[n..].iter().map(|x| &RatFunc::from(x.clone()) / &det).collect()).collect(),
    })
}

/// Reduced row echelon form; returns the pivot columns.
fn rref(a: &mut [Vec<RatFunc>]) -> Vec<usize> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(r, p);
        let inv = a[r][c].recip().expect("nonzero pivot");
        for x in a[r].iter_mut() {
            *x = &*x * &inv;
        }
        let pivot_row = a[r].clone();
        for (i, row) in a.iter_mut().enumerate() {
            if i != r && !row[c].is_zero() {
                let f = row[c].clone();
                for (x, pr) in row.iter_mut().zip(&pivot_row) {
                    *x = &*x - &(&f * pr);
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Basis of `{x : A x = 0}`, each vector scaled so its first nonzero entry is 1.
pub fn nullspace(a: &RatMatrix) -> Vec<Vec<RatFunc>> {
    let mut r = a.rows.clone();
    let pivots = rref(&mut r);
    let n = a.ncols();
    let mut basis = Vec::new();
    for free in (0..n).filter(|c| !pivots.contains(c)) {
        let mut x = vec![RatFunc::zero(); n];
        x[free] = RatFunc::one();
        for (row, &pc) in pivots.iter().enumerate() {
            x[pc] = -&r[row][free];
        }
        let lead = x.iter().find(|v| !v.is_zero()).cloned().expect("free variable is 1");
        basis.push(x.iter().map(|v| v / &lead).collect());
    }
    basis
}

#[derive(Clone, Debug)]
pub struct EqualEnergySolution {
    pub target: usize,
    /// Solution with all free variables zero.
    pub particular: Vec<RatFunc>,
    /// Null space of `M^T`.
    pub nullspace: Vec<Vec<RatFunc>>,
    /// Member of the family whose first two entries agree.
    pub canonical: Vec<RatFunc>,
}

/// Solve `M^T x = e_target` at `E_u = E_v` (0-based `target`).
pub fn equal_energy_solve(m: &CoeffMatrix, target: usize) -> Result<EqualEnergySolution> {
    let n = m.nrows();
    if target >= m.ncols() {
        return Err(Error::OutOfRange(format!("target index {} exceeds {} scalars", target + 1, m.ncols())));
    }
    let mt = m.at_equal_energy().to_rational().transpose();
    let mut aug: Vec<Vec<RatFunc>> = mt
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.push(if i == target { RatFunc::one() } else { RatFunc::zero() });
            row
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.contains(&n) {
        return Err(Error::Inconsistent { alpha: target + 1 });
    }
    let mut particular = vec![RatFunc::zero(); n];
    for (row, &pc) in pivots.iter().enumerate() {
        particular[pc] = aug[row][n].clone();
    }
    let null = nullspace(&mt);
    let mut canonical = particular.clone();
    if let Some(z) = null.first() {
        let dz = &z[0] - &z[1];
        if !dz.is_zero() {
            let t = &(&particular[1] - &particular[0]) / &dz;
            canonical = particular.iter().zip(z).map(|(p, zi)| p + &(&t * zi)).collect();
        }
    }
    Ok(EqualEnergySolution { target, particular, nullspace: null, canonical })
}
