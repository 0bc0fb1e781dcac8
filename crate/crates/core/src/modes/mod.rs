//! Closed-form eigenpairs of the disk and rectangle, and their boundary traces.

pub mod bessel;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundaryCondition, BoundaryMesh, Domain, Shape, Vec2};
use bessel::{bessel_j_seq_unchecked, bessel_zeros_below, derivative_from_seq, ZeroKind};

/// A real function on the plane with its gradient, evaluated in the domain's
/// intrinsic frame.
pub trait ModeFunction: Send + Sync + fmt::Debug {
    fn eval(&self, p: Vec2) -> (f64, Vec2);

    fn value(&self, p: Vec2) -> f64 {
        self.eval(p).0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Parity {
    Cos,
    Sin,
}

/// Mode identifier. The derived ordering is the degeneracy tie-break.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModeLabel {
    /// `J_m(k r) cos(m theta)` or `sin`. `n` counts positive roots from 1;
    /// the constant Neumann mode has `n = 0`.
    Disk { m: u32, n: u32, parity: Parity },
    /// `sin(p pi x / a) sin(q pi y / b)` (Dirichlet) or `cos cos` (Neumann),
    /// `x, y` measured from the lower-left corner.
    Rectangle { p: u32, q: u32 },
    /// Level recovered numerically, numbered within its sweep.
    Numerical { index: u32 },
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModeLabel::Disk { m, n, parity } => {
                let p = match parity {
                    Parity::Cos => "cos",
                    Parity::Sin => "sin",
                };
                write!(f, "disk(m={m};n={n};{p})")
            }
            ModeLabel::Rectangle { p, q } => write!(f, "rect(p={p};q={q})"),
            ModeLabel::Numerical { index } => write!(f, "level({index})"),
        }
    }
}

/// One normalized eigenpair.
#[derive(Clone, Debug)]
pub struct EigenState {
    pub energy: f64,
    pub k: f64,
    pub label: ModeLabel,
    pub bc: BoundaryCondition,
    pub norm_constant: f64,
    pub func: Arc<dyn ModeFunction>,
}

impl EigenState {
    pub fn eval(&self, p: Vec2) -> (f64, Vec2) {
        self.func.eval(p)
    }
}

#[derive(Clone, Debug)]
pub struct DiskMode {
    pub radius: f64,
    pub m: usize,
    pub k: f64,
    pub parity: Parity,
    pub c: f64,
}

impl ModeFunction for DiskMode {
    fn eval(&self, p: Vec2) -> (f64, Vec2) {
        let r = p.norm();
        let theta = p.y.atan2(p.x);
        let m = self.m;
        let x = self.k * r;
        let seq = bessel_j_seq_unchecked(m + 1, x.min(bessel::MAX_ARG));
        let jm = seq[m];
        let djm = derivative_from_seq(&seq, m);
        let mt = m as f64 * theta;
        let (ang, dang) = match self.parity {
            Parity::Cos => (mt.cos(), -mt.sin()),
            Parity::Sin => (mt.sin(), mt.cos()),
        };
        // (m / r) J_m(k r) written without the division.
        let m_over_r_jm = if m == 0 { 0.0 } else { 0.5 * self.k * (seq[m - 1] + seq[m + 1]) };
        let d_r = self.c * self.k * djm * ang;
        let d_t = self.c * m_over_r_jm * dang;
        let (s, c) = theta.sin_cos();
        let grad = Vec2::new(d_r * c - d_t * s, d_r * s + d_t * c);
        (self.c * jm * ang, grad)
    }
}

#[derive(Clone, Debug)]
pub struct RectangleMode {
    pub a: f64,
    pub b: f64,
    pub p: u32,
    pub q: u32,
    pub dirichlet: bool,
    pub c: f64,
}

impl ModeFunction for RectangleMode {
    fn eval(&self, pt: Vec2) -> (f64, Vec2) {
        let kx = self.p as f64 * PI / self.a;
        let ky = self.q as f64 * PI / self.b;
        let x = pt.x + 0.5 * self.a;
        let y = pt.y + 0.5 * self.b;
        let (sx, cx) = (kx * x).sin_cos();
        let (sy, cy) = (ky * y).sin_cos();
        if self.dirichlet {
            (self.c * sx * sy, Vec2::new(self.c * kx * cx * sy, self.c * ky * sx * cy))
        } else {
            (self.c * cx * cy, Vec2::new(-self.c * kx * sx * cy, -self.c * ky * cx * sy))
        }
    }
}

/// `int_0^R J_m(k r)^2 r dr` in closed form.
fn disk_radial_norm(m: usize, k: f64, radius: f64) -> f64 {
    if k == 0.0 {
        return if m == 0 { 0.5 * radius * radius } else { 0.0 };
    }
    let x = k * radius;
    let seq = bessel_j_seq_unchecked(m + 1, x);
    let (j, dj) = (seq[m], derivative_from_seq(&seq, m));
    let mm = (m * m) as f64;
    0.5 * radius * radius * (dj * dj + (1.0 - mm / (x * x)) * j * j)
}

fn disk_state(radius: f64, m: usize, n: u32, k: f64, parity: Parity, bc: BoundaryCondition) -> EigenState {
    let ang = if m == 0 { 2.0 * PI } else { PI };
    let c = 1.0 / (ang * disk_radial_norm(m, k, radius)).sqrt();
    EigenState {
        energy: k * k,
        k,
        label: ModeLabel::Disk { m: m as u32, n, parity },
        bc,
        norm_constant: c,
        func: Arc::new(DiskMode { radius, m, k, parity, c }),
    }
}

/// Every eigenpair with `E <= e_max`, ascending, ties broken by label.
pub fn analytic_spectrum(domain: &Domain, e_max: f64) -> Result<Vec<EigenState>> {
    if !(e_max > 0.0 && e_max.is_finite()) {
        return Err(Error::OutOfRange(format!("E_max must be positive, got {e_max}")));
    }
    let mut states = match &domain.shape {
        Shape::Radial(_) => {
            let radius = domain
                .disk_radius()
                .ok_or_else(|| Error::Unsupported("closed-form modes exist only for disks and rectangles".into()))?;
            disk_spectrum(radius, domain.bc, e_max)?
        }
        Shape::Rectangle { a, b } => rectangle_spectrum(*a, *b, domain.bc, e_max)?,
    };
    states.sort_by(|x, y| x.energy.total_cmp(&y.energy).then(x.label.cmp(&y.label)));
    if states.is_empty() {
        return Err(Error::OutOfRange(format!("no eigenvalue below E_max = {e_max}")));
    }
    Ok(states)
}

/// Two-term Weyl estimate `(A/4π)E ∓ (P/4π)√E` of the counting function;
/// minus for Dirichlet, plus otherwise.
pub fn weyl_estimate(domain: &Domain, e: f64) -> f64 {
    let sign = if domain.bc.is_dirichlet() { -1.0 } else { 1.0 };
    let e = e.max(0.0);
    (domain.area() * e + sign * domain.perimeter() * e.sqrt()) / (4.0 * PI)
}

/// The lowest `count` eigenpairs.
pub fn lowest_states(domain: &Domain, count: usize) -> Result<Vec<EigenState>> {
    let area = domain.area();
    // Weyl estimate, then grow until enough levels are found.
    let mut e_max = (4.0 * PI * count as f64 / area).max(10.0) * 1.5 + 20.0;
    loop {
        let s = analytic_spectrum(domain, e_max)?;
        if s.len() > count {
            return Ok(s.into_iter().take(count).collect());
        }
        e_max *= 1.5;
    }
}

fn disk_spectrum(radius: f64, bc: BoundaryCondition, e_max: f64) -> Result<Vec<EigenState>> {
    let kmax = e_max.sqrt();
    let mut out = Vec::new();
    let kind = match bc {
        BoundaryCondition::Dirichlet => ZeroKind::Dirichlet,
        BoundaryCondition::Robin { gamma: 0.0 } => ZeroKind::Neumann,
        BoundaryCondition::Robin { gamma } => ZeroKind::Robin { gamma, radius },
    };
    if kind == ZeroKind::Neumann {
        out.push(disk_state(radius, 0, 0, 0.0, Parity::Cos, bc));
    }
    for m in 0..=bessel::MAX_ORDER {
        let ks: Vec<f64> = match kind {
            ZeroKind::Robin { .. } => bessel_zeros_below(m, kind, kmax)?,
            _ => bessel_zeros_below(m, kind, kmax * radius)?.into_iter().map(|x| x / radius).collect(),
        };
        if ks.is_empty() && m > 0 {
            break;
        }
        for (i, &k) in ks.iter().enumerate() {
            let n = i as u32 + 1;
            out.push(disk_state(radius, m, n, k, Parity::Cos, bc));
            if m > 0 {
                out.push(disk_state(radius, m, n, k, Parity::Sin, bc));
            }
        }
    }
    Ok(out)
}

fn rectangle_spectrum(a: f64, b: f64, bc: BoundaryCondition, e_max: f64) -> Result<Vec<EigenState>> {
    let dirichlet = match bc {
        BoundaryCondition::Dirichlet => true,
        BoundaryCondition::Robin { gamma: 0.0 } => false,
        BoundaryCondition::Robin { .. } => {
            return Err(Error::Unsupported("closed-form Robin modes are available for the disk only".into()))
        }
    };
    let first = if dirichlet { 1u32 } else { 0u32 };
    let mut out = Vec::new();
    let pmax = (e_max.sqrt() * a / PI).floor() as u32;
    let qmax = (e_max.sqrt() * b / PI).floor() as u32;
    for p in first..=pmax {
        for q in first..=qmax {
            let kx = p as f64 * PI / a;
            let ky = q as f64 * PI / b;
            let e = kx * kx + ky * ky;
            if e > e_max {
                continue;
            }
            let c = if dirichlet {
                2.0 / (a * b).sqrt()
            } else {
                let fx = if p == 0 { 1.0 } else { 2f64.sqrt() };
                let fy = if q == 0 { 1.0 } else { 2f64.sqrt() };
                fx * fy / (a * b).sqrt()
            };
            out.push(EigenState {
                energy: e,
                k: e.sqrt(),
                label: ModeLabel::Rectangle { p, q },
                bc,
                norm_constant: c,
                func: Arc::new(RectangleMode { a, b, p, q, dirichlet, c }),
            });
        }
    }
    Ok(out)
}

/// Boundary data of one state on one mesh.
#[derive(Clone, Debug)]
pub struct BoundaryTrace {
    pub value: Vec<f64>,
    /// `n . grad`
    pub dn: Vec<f64>,
    pub grad: Vec<Vec2>,
    /// `r . grad` in the shifted frame.
    pub dr: Vec<f64>,
    pub origin_offset: Vec2,
}

impl BoundaryTrace {
    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn check_mesh(&self, mesh: &BoundaryMesh) -> Result<()> {
        if self.len() != mesh.len() || self.origin_offset != mesh.offset() {
            return Err(Error::MeshMismatch(format!(
                "trace has {} nodes at origin {:?}, mesh has {} at {:?}",
                self.len(),
                self.origin_offset,
                mesh.len(),
                mesh.offset()
            )));
        }
        Ok(())
    }

    /// Scale all data by `s`.
    pub fn scaled(mut self, s: f64) -> Self {
        self.value.iter_mut().for_each(|v| *v *= s);
        self.dn.iter_mut().for_each(|v| *v *= s);
        self.dr.iter_mut().for_each(|v| *v *= s);
        self.grad.iter_mut().for_each(|v| *v *= s);
        self
    }
}

/// Boundary trace of any mode function on a mesh.
pub fn trace_of(func: &dyn ModeFunction, mesh: &BoundaryMesh) -> BoundaryTrace {
    let data: Vec<(f64, Vec2)> = (0..mesh.len()).into_par_iter().map(|i| func.eval(mesh.intrinsic(i))).collect();
    let mut t = BoundaryTrace {
        value: Vec::with_capacity(data.len()),
        dn: Vec::with_capacity(data.len()),
        grad: Vec::with_capacity(data.len()),
        dr: Vec::with_capacity(data.len()),
        origin_offset: mesh.offset(),
    };
    for (node, (v, g)) in mesh.nodes.iter().zip(data) {
        t.value.push(v);
        t.dn.push(node.normal.dot(&g));
        t.dr.push(node.pos.dot(&g));
        t.grad.push(g);
    }
    t
}

pub fn boundary_trace(state: &EigenState, mesh: &BoundaryMesh) -> BoundaryTrace {
    trace_of(state.func.as_ref(), mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_boundary_mesh, interior_quadrature};
    use rand::{Rng, SeedableRng};

    fn disk(bc: BoundaryCondition) -> Domain {
        Domain::disk(1.0, bc).unwrap()
    }

    #[test]
    fn disk_lowest_dirichlet_energy() {
        let s = analytic_spectrum(&disk(BoundaryCondition::Dirichlet), 20.0).unwrap();
        assert!((s[0].energy - 5.783185962946785).abs() < 1e-12);
        assert_eq!(s[0].label, ModeLabel::Disk { m: 0, n: 1, parity: Parity::Cos });
        // m = 1 pair is degenerate, cos first
        assert_eq!(s[1].energy, s[2].energy);
        assert_eq!(s[1].label, ModeLabel::Disk { m: 1, n: 1, parity: Parity::Cos });
        assert_eq!(s[2].label, ModeLabel::Disk { m: 1, n: 1, parity: Parity::Sin });
    }

    #[test]
    fn square_lowest_dirichlet_mode() {
        let d = Domain::rectangle(1.0, 1.0, BoundaryCondition::Dirichlet).unwrap();
        let s = analytic_spectrum(&d, 60.0).unwrap();
        assert!((s[0].energy - 2.0 * PI * PI).abs() < 1e-12);
        for &(x, y) in &[(0.3, 0.2), (0.5, 0.5), (0.9, 0.1)] {
            // corner-based coordinates (x, y) are intrinsic (x - 1/2, y - 1/2)
            let v = s[0].eval(Vec2::new(x - 0.5, y - 0.5)).0;
            let want = 2.0 * (PI * x).sin() * (PI * y).sin();
            assert!((v - want).abs() < 1e-14);
        }
        // (1,2) before (2,1)
        assert_eq!(s[1].label, ModeLabel::Rectangle { p: 1, q: 2 });
        assert_eq!(s[2].label, ModeLabel::Rectangle { p: 2, q: 1 });
    }

    #[test]
    fn states_are_orthonormal_in_the_interior() {
        let d = disk(BoundaryCondition::Dirichlet);
        let states = lowest_states(&d, 30).unwrap();
        let iq = interior_quadrature(&d, 48).unwrap();
        let vals: Vec<Vec<f64>> = states
            .iter()
            .map(|s| (0..iq.nodes.len()).map(|i| s.eval(iq.intrinsic(i)).0).collect())
            .collect();
        for i in 0..states.len() {
            for j in 0..=i {
                let g: f64 = iq.nodes.iter().enumerate().map(|(n, (_, w))| w * vals[i][n] * vals[j][n]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g - want).abs() < 1e-9, "({i},{j}) -> {g}");
            }
        }
    }

    #[test]
    fn normalization_for_every_bc() {
        for bc in [BoundaryCondition::NEUMANN, BoundaryCondition::Robin { gamma: 1.0 }] {
            let d = disk(bc);
            let iq = interior_quadrature(&d, 48).unwrap();
            for s in lowest_states(&d, 12).unwrap() {
                let n = iq.integrate(|p| s.eval(p).0.powi(2));
                assert!((n - 1.0).abs() < 1e-10, "{} {}", s.label, n);
            }
        }
        let d = Domain::rectangle(1.3, 0.7, BoundaryCondition::NEUMANN).unwrap();
        let iq = interior_quadrature(&d, 48).unwrap();
        for s in lowest_states(&d, 12).unwrap() {
            let n = iq.integrate(|p| s.eval(p).0.powi(2));
            assert!((n - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn helmholtz_residual_by_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for d in [
            disk(BoundaryCondition::Dirichlet),
            disk(BoundaryCondition::Robin { gamma: 1.0 }),
            Domain::rectangle(1.0, 2.0, BoundaryCondition::Dirichlet).unwrap(),
        ] {
            for s in lowest_states(&d, 8).unwrap() {
                for _ in 0..10 {
                    let p = loop {
                        let p = Vec2::new(rng.gen_range(-0.6..0.6), rng.gen_range(-0.6..0.6));
                        if d.contains(p) && s.eval(p).0.abs() > 0.05 {
                            break p;
                        }
                    };
                    let h = 1e-4 / s.k;
                    let f = |q: Vec2| s.eval(q).0;
                    let lap = (f(p + Vec2::new(h, 0.0)) + f(p - Vec2::new(h, 0.0)) + f(p + Vec2::new(0.0, h))
                        + f(p - Vec2::new(0.0, h))
                        - 4.0 * f(p))
                        / (h * h);
                    let rel = (-lap - s.energy * f(p)).abs() / (s.energy * f(p).abs());
                    assert!(rel < 1e-5, "{} rel {rel:e}", s.label);
                }
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let d = disk(BoundaryCondition::Dirichlet);
        for s in lowest_states(&d, 10).unwrap() {
            for p in [Vec2::new(0.3, 0.2), Vec2::new(-0.5, 0.4), Vec2::new(0.0, 0.0)] {
                let h = 1e-6;
                let f = |q: Vec2| s.eval(q).0;
                let fd = Vec2::new(
                    (f(p + Vec2::new(h, 0.0)) - f(p - Vec2::new(h, 0.0))) / (2.0 * h),
                    (f(p + Vec2::new(0.0, h)) - f(p - Vec2::new(0.0, h))) / (2.0 * h),
                );
                assert!((fd - s.eval(p).1).norm() < 1e-7 * s.k, "{}", s.label);
            }
        }
    }

    #[test]
    fn dirichlet_disk_traces() {
        let d = disk(BoundaryCondition::Dirichlet);
        let mesh = build_boundary_mesh(&d, 256).unwrap();
        let states = lowest_states(&d, 20).unwrap();
        let j01 = states[0].k;
        let j1 = bessel::bessel_j(1, j01).unwrap().0;
        let c = 1.0 / (PI.sqrt() * j1);
        let t0 = boundary_trace(&states[0], &mesh);
        for v in &t0.dn {
            assert!((v + c * j01 * j1).abs() < 1e-12);
        }
        for s in &states {
            let t = boundary_trace(s, &mesh);
            let max_dn = t.dn.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            let max_v = t.value.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            assert!(max_v < 1e-10 * max_dn);
            for (i, node) in mesh.nodes.iter().enumerate() {
                assert!((t.dr[i] - node.r_n * t.dn[i]).abs() < 1e-10 * max_dn);
            }
        }
    }

    #[test]
    fn robin_and_neumann_traces_satisfy_bc() {
        let d = disk(BoundaryCondition::Robin { gamma: 1.0 });
        let mesh = build_boundary_mesh(&d, 256).unwrap();
        for s in lowest_states(&d, 15).unwrap() {
            let t = boundary_trace(&s, &mesh);
            let max_v = t.value.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            for i in 0..t.len() {
                assert!((t.value[i] + t.dn[i]).abs() < 1e-8 * s.k * max_v);
            }
        }
        let sq = Domain::rectangle(1.0, 1.0, BoundaryCondition::NEUMANN).unwrap();
        let mesh = build_boundary_mesh(&sq, 128).unwrap();
        let s = analytic_spectrum(&sq, 12.0).unwrap();
        let m10 = s.iter().find(|s| s.label == ModeLabel::Rectangle { p: 1, q: 0 }).unwrap();
        for v in boundary_trace(m10, &mesh).dn {
            assert!(v.abs() < 1e-13);
        }
    }

    #[test]
    fn neumann_disk_includes_constant_mode() {
        let s = analytic_spectrum(&disk(BoundaryCondition::NEUMANN), 10.0).unwrap();
        assert_eq!(s[0].energy, 0.0);
        assert!((s[1].k - 1.841183781340659).abs() < 1e-12);
    }

    #[test]
    fn disk_weyl_remainder_mean_and_peak() {
        let s = analytic_spectrum(&disk(BoundaryCondition::Dirichlet), 500.0).unwrap();
        let energies: Vec<f64> = s.iter().map(|x| x.energy).collect();
        let (mut sum, mut worst, n) = (0.0, 0.0f64, 100_000);
        for i in 0..n {
            let e = 50.0 + 450.0 * (i as f64 + 0.5) / n as f64;
            let count = energies.partition_point(|&x| x <= e) as f64;
            let rem = count - weyl_estimate(&disk(BoundaryCondition::Dirichlet), e);
            sum += rem;
            worst = worst.max(rem.abs());
        }
        // The disk's smooth counting function carries a constant 1/6.
        assert!((sum / n as f64 - 1.0 / 6.0).abs() < 0.05, "mean {}", sum / n as f64);
        // Pointwise the remainder is not within 3: it peaks at 3.66 just
        // above E = 432.2, where several Bessel zeros cluster.
        assert!((worst - 3.66).abs() < 0.01, "worst {worst}");
    }

    #[test]
    fn unsupported_shape_is_error() {
        let d = Domain::radial(vec![1.0, 0.0, 0.1], vec![], BoundaryCondition::Dirichlet).unwrap();
        assert!(matches!(analytic_spectrum(&d, 50.0), Err(Error::Unsupported(_))));
    }
}
