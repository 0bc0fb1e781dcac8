//! Numerical checks of the derived identities on Helmholtz solutions that
//! satisfy no boundary condition.

use std::sync::Arc;

use nalgebra::Matrix2;
use num::Complex;
use rand::Rng;
use serde::Serialize;

use super::identity::{flux_integrals, EnergyMode, Identity};
use super::system::CoeffMatrix;
use crate::error::{Error, Result};
use crate::geometry::{build_boundary_mesh, interior_quadrature, BoundaryMesh, Domain, InteriorQuadrature, Vec2};
use crate::modes::bessel::bessel_j_seq_unchecked;
use crate::modes::{trace_of, EigenState, ModeFunction};

/// A solution of `-Δu = E u` with value, gradient and Hessian.
pub trait TrialField: ModeFunction {
    fn energy(&self) -> f64;
    fn hessian(&self, p: Vec2) -> Matrix2<f64>;
}

/// `cos(k·x + phase)`
#[derive(Clone, Debug)]
pub struct PlaneWave {
    pub k: Vec2,
    pub phase: f64,
}

impl ModeFunction for PlaneWave {
    fn eval(&self, p: Vec2) -> (f64, Vec2) {
        let (s, c) = (self.k.dot(&p) + self.phase).sin_cos();
        (c, -s * self.k)
    }
}

impl TrialField for PlaneWave {
    fn energy(&self) -> f64 {
        self.k.norm_squared()
    }

    fn hessian(&self, p: Vec2) -> Matrix2<f64> {
        let c = (self.k.dot(&p) + self.phase).cos();
        -c * self.k * self.k.transpose()
    }
}

/// `Re sum_m a_m J_m(k r) e^{i m theta}`
#[derive(Clone, Debug)]
pub struct FourierBessel {
    pub k: f64,
    pub terms: Vec<(i32, Complex<f64>)>,
}

impl FourierBessel {
    /// `F_m = J_m(kr) e^{i m θ}` for `m` in `[lo, hi]`.
    fn basis(&self, p: Vec2, lo: i32, hi: i32) -> Vec<Complex<f64>> {
        let nmax = lo.unsigned_abs().max(hi.unsigned_abs()) as usize;
        let x = self.k * p.norm();
        let j = bessel_j_seq_unchecked(nmax + 1, x);
        let theta = p.y.atan2(p.x);
        (lo..=hi)
            .map(|m| {
                let mag = m.unsigned_abs() as usize;
                let jm = if m < 0 && mag % 2 == 1 { -j[mag] } else { j[mag] };
                Complex::from_polar(1.0, m as f64 * theta) * jm
            })
            .collect()
    }

    fn range(&self) -> (i32, i32) {
        let lo = self.terms.iter().map(|t| t.0).min().unwrap_or(0) - 2;
        let hi = self.terms.iter().map(|t| t.0).max().unwrap_or(0) + 2;
        (lo, hi)
    }
}

// With D± = ∂x ± i∂y: D+ F_m = -k F_{m+1}, D- F_m = k F_{m-1}.
impl ModeFunction for FourierBessel {
    fn eval(&self, p: Vec2) -> (f64, Vec2) {
        let (lo, hi) = self.range();
        let f = self.basis(p, lo, hi);
        let at = |m: i32| f[(m - lo) as usize];
        let k = self.k;
        let (mut val, mut gx, mut gy) = (0.0, 0.0, 0.0);
        for &(m, a) in &self.terms {
            let dp = -k * at(m + 1);
            let dm = k * at(m - 1);
            val += (a * at(m)).re;
            gx += (a * (dp + dm) * 0.5).re;
            gy += (a * (dp - dm) / Complex::new(0.0, 2.0)).re;
        }
        (val, Vec2::new(gx, gy))
    }
}

impl TrialField for FourierBessel {
    fn energy(&self) -> f64 {
        self.k * self.k
    }

    fn hessian(&self, p: Vec2) -> Matrix2<f64> {
        let (lo, hi) = self.range();
        let f = self.basis(p, lo, hi);
        let at = |m: i32| f[(m - lo) as usize];
        let k2 = self.k * self.k;
        let (mut xx, mut yy, mut xy) = (0.0, 0.0, 0.0);
        for &(m, a) in &self.terms {
            let (up, mid, dn) = (at(m + 2) * k2, at(m) * k2, at(m - 2) * k2);
            xx += (a * (up - mid * 2.0 + dn) * 0.25).re;
            yy += (a * (up + mid * 2.0 + dn) * -0.25).re;
            xy += (a * (up - dn) / Complex::new(0.0, 4.0)).re;
        }
        Matrix2::new(xx, xy, xy, yy)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TrialKind {
    PlaneWave,
    FourierBessel,
}

/// Random field of the given kind at energy `energy`.
pub fn random_field<R: Rng>(kind: TrialKind, energy: f64, rng: &mut R) -> Arc<dyn TrialField> {
    let k = energy.sqrt();
    match kind {
        TrialKind::PlaneWave => {
            let a = rng.gen_range(0.0..std::f64::consts::TAU);
            Arc::new(PlaneWave { k: Vec2::new(k * a.cos(), k * a.sin()), phase: rng.gen_range(0.0..std::f64::consts::TAU) })
        }
        TrialKind::FourierBessel => {
            let terms = (0..=6)
                .map(|m| (m, Complex::from_polar(rng.gen_range(-1.0..1.0), rng.gen_range(0.0..std::f64::consts::TAU))))
                .collect();
            Arc::new(FourierBessel { k, terms })
        }
    }
}

/// Value of scalar `q_b` (0-based) at shifted position `r`.
pub fn scalar_value(b: usize, u: &dyn TrialField, v: &dyn TrialField, p: Vec2, r: Vec2) -> f64 {
    let (uu, gu) = u.eval(p);
    let (vv, gv) = v.eval(p);
    match b {
        0 => uu * vv,
        1 => gu.dot(&gv),
        2 => r.dot(&gu) * vv,
        3 => r.dot(&gv) * uu,
        4 => r.dot(&(u.hessian(p) * gv)),
        5 => r.dot(&(v.hessian(p) * gu)),
        6 => r.norm_squared() * uu * vv,
        7 => r.norm_squared() * gu.dot(&gv),
        _ => panic!("scalar index {b} out of range"),
    }
}

/// Volume integrals of all eight scalars and of their absolute values.
pub fn scalar_integrals(u: &dyn TrialField, v: &dyn TrialField, iq: &InteriorQuadrature) -> ([f64; 8], [f64; 8]) {
    let mut s = [0.0; 8];
    let mut a = [0.0; 8];
    for (i, (r, w)) in iq.nodes.iter().enumerate() {
        let p = iq.intrinsic(i);
        for b in 0..8 {
            let x = scalar_value(b, u, v, p, *r);
            s[b] += w * x;
            a[b] += w * x.abs();
        }
    }
    (s, a)
}

#[derive(Clone, Debug, Serialize)]
pub struct Verification {
    pub e_u: f64,
    pub e_v: f64,
    pub volume: f64,
    pub boundary: f64,
    /// `|volume - boundary| / ∫|q| dV`
    pub residual: f64,
    pub warning: Option<String>,
}

/// Quadrature used by the verifier.
pub struct VerifyGrid {
    pub mesh: BoundaryMesh,
    pub iq: InteriorQuadrature,
}

impl VerifyGrid {
    pub fn new(domain: &Domain, boundary_nodes: usize, interior: usize) -> Result<Self> {
        Ok(VerifyGrid { mesh: build_boundary_mesh(domain, boundary_nodes)?, iq: interior_quadrature(domain, interior)? })
    }

    /// Resolution adequate for fields with `E <= 100` on a unit-size domain.
    pub fn standard(domain: &Domain) -> Result<Self> {
        Self::new(domain, 512, 48)
    }
}

/// Compare both sides of `id` for one pair of fields.
pub fn verify_pair(id: &Identity, u: &dyn TrialField, v: &dyn TrialField, grid: &VerifyGrid) -> Result<Verification> {
    let (e_u, e_v) = (u.energy(), v.energy());
    let warning = match id.mode {
        EnergyMode::Unequal if (e_u - e_v).abs() < 1e-6 * (e_u + e_v) => {
            Some(format!("E_u - E_v = {:e} is tiny; the identity is ill-conditioned", e_u - e_v))
        }
        EnergyMode::Equal if (e_u - e_v).abs() > 1e-12 * (e_u + e_v) => {
            return Err(Error::OutOfRange(format!("equal-energy identity needs E_u = E_v, got {e_u} and {e_v}")))
        }
        _ => None,
    };
    let tu = trace_of(u, &grid.mesh);
    let tv = trace_of(v, &grid.mesh);
    let boundary = id.boundary_side(&tu, &tv, &grid.mesh, e_u, e_v)?;
    let (vol, abs) = scalar_integrals(u, v, &grid.iq);
    let volume = vol[id.target];
    Ok(Verification { e_u, e_v, volume, boundary, residual: (volume - boundary).abs() / abs[id.target], warning })
}

/// Draw fields at `(e_u, e_v)` and compare both sides.
pub fn verify_identity<R: Rng>(
    id: &Identity,
    e_u: f64,
    e_v: f64,
    kind: TrialKind,
    grid: &VerifyGrid,
    rng: &mut R,
) -> Result<Verification> {
    let u = random_field(kind, e_u, rng);
    let v = random_field(kind, e_v, rng);
    verify_pair(id, u.as_ref(), v.as_ref(), grid)
}

/// The Dirichlet form of an identity on two eigenstates vanishing on the
/// boundary: `∫ r² u v` against `c ∮ r_n u_n v_n`.
pub fn verify_dirichlet_pair(id: &Identity, u: &EigenState, v: &EigenState, grid: &VerifyGrid) -> Result<Verification> {
    if id.target != 6 {
        return Err(Error::Unsupported("Dirichlet check is implemented for the r² u v identity".into()));
    }
    if !grid.mesh.domain.bc.is_dirichlet() {
        return Err(Error::Unsupported("Dirichlet check needs a Dirichlet domain".into()));
    }
    let tu = trace_of(u.func.as_ref(), &grid.mesh);
    let tv = trace_of(v.func.as_ref(), &grid.mesh);
    let boundary = id.dirichlet_boundary_side(&tu, &tv, &grid.mesh, u.energy, v.energy)?;
    let (mut volume, mut abs) = (0.0, 0.0);
    for (i, (r, w)) in grid.iq.nodes.iter().enumerate() {
        let p = grid.iq.intrinsic(i);
        let x = r.norm_squared() * u.eval(p).0 * v.eval(p).0;
        volume += w * x;
        abs += w * x.abs();
    }
    Ok(Verification {
        e_u: u.energy,
        e_v: v.energy,
        volume,
        boundary,
        residual: (volume - boundary).abs() / abs,
        warning: None,
    })
}

/// Largest relative mismatch in `∮ n·p_a = sum_b M_ab ∫ q_b` over the rows.
pub fn consistency_residual(m: &CoeffMatrix, u: &dyn TrialField, v: &dyn TrialField, grid: &VerifyGrid) -> Result<f64> {
    let tu = trace_of(u, &grid.mesh);
    let tv = trace_of(v, &grid.mesh);
    let fl = flux_integrals(&tu, &tv, &grid.mesh)?;
    let (vol, abs) = scalar_integrals(u, v, &grid.iq);
    let mm = m.eval(&[u.energy(), v.energy(), 2.0]);
    let mut worst = 0.0f64;
    for a in 0..m.nrows() {
        let rhs: f64 = (0..m.ncols()).map(|b| mm[(a, b)] * vol[b]).sum();
        let scale: f64 = (0..m.ncols()).map(|b| (mm[(a, b)] * abs[b]).abs()).sum();
        worst = worst.max((fl[a] - rhs).abs() / scale);
    }
    Ok(worst)
}
