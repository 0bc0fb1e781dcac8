//! Billiard domains, boundary and interior quadrature, and the escribed circle.
//!
//! A domain lives in its own intrinsic frame: radial shapes are star-shaped
//! about the intrinsic origin and rectangles are centered on it. The working
//! coordinate is `r - t`, where `t` is the domain's origin offset; every
//! position stored in a mesh or quadrature rule is in that shifted frame.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre_on;

pub type Vec2 = nalgebra::Vector2<f64>;

/// Boundary radius `rho(theta) = c0 + sum_k c_k cos(k theta) + s_k sin(k theta)`.
///
/// `cos[k]` multiplies `cos(k theta)` (so `cos[0]` is the mean radius) and
/// `sin[k - 1]` multiplies `sin(k theta)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierRadius {
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl FourierRadius {
    pub fn circle(radius: f64) -> Self {
        Self { cos: vec![radius], sin: Vec::new() }
    }

    /// `(rho, rho', rho'')` at `theta`.
    pub fn eval(&self, theta: f64) -> (f64, f64, f64) {
        let mut r = 0.0;
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        for (k, &c) in self.cos.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let kf = k as f64;
            let (s, co) = (kf * theta).sin_cos();
            r += c * co;
            d1 -= c * kf * s;
            d2 -= c * kf * kf * co;
        }
        for (j, &c) in self.sin.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let kf = (j + 1) as f64;
            let (s, co) = (kf * theta).sin_cos();
            r += c * s;
            d1 += c * kf * co;
            d2 -= c * kf * kf * s;
        }
        (r, d1, d2)
    }

    pub fn harmonics(&self) -> usize {
        self.cos.len().max(self.sin.len() + 1)
    }

    /// Radius if the curve is a circle about the intrinsic origin.
    pub fn circle_radius(&self) -> Option<f64> {
        let rest_zero = self.cos.iter().skip(1).all(|c| *c == 0.0) && self.sin.iter().all(|c| *c == 0.0);
        match self.cos.first() {
            Some(&r0) if rest_zero => Some(r0),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    Radial(FourierRadius),
    Rectangle { a: f64, b: f64 },
}

/// Homogeneous boundary condition applied on the whole boundary.
/// `Robin { gamma: 0.0 }` is the Neumann condition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum BoundaryCondition {
    Dirichlet,
    Robin { gamma: f64 },
}

impl BoundaryCondition {
    pub const NEUMANN: BoundaryCondition = BoundaryCondition::Robin { gamma: 0.0 };

    pub fn is_dirichlet(&self) -> bool {
        matches!(self, BoundaryCondition::Dirichlet)
    }

    pub fn name(&self) -> String {
        match self {
            BoundaryCondition::Dirichlet => "dirichlet".into(),
            BoundaryCondition::Robin { gamma } if *gamma == 0.0 => "neumann".into(),
            BoundaryCondition::Robin { gamma } => format!("robin(gamma={gamma})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub shape: Shape,
    pub origin_offset: Vec2,
    pub bc: BoundaryCondition,
}

const POSITIVITY_GRID: usize = 4096;

impl Domain {
    pub fn new(shape: Shape, origin_offset: Vec2, bc: BoundaryCondition) -> Result<Self> {
        let d = Domain { shape, origin_offset, bc };
        d.validate()?;
        Ok(d)
    }

    pub fn disk(radius: f64, bc: BoundaryCondition) -> Result<Self> {
        Self::new(Shape::Radial(FourierRadius::circle(radius)), Vec2::zeros(), bc)
    }

    pub fn radial(cos: Vec<f64>, sin: Vec<f64>, bc: BoundaryCondition) -> Result<Self> {
        Self::new(Shape::Radial(FourierRadius { cos, sin }), Vec2::zeros(), bc)
    }

    pub fn rectangle(a: f64, b: f64, bc: BoundaryCondition) -> Result<Self> {
        Self::new(Shape::Rectangle { a, b }, Vec2::zeros(), bc)
    }

    pub fn with_origin(mut self, offset: Vec2) -> Self {
        self.origin_offset = offset;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.origin_offset.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidDomain("origin offset must be finite".into()));
        }
        if let BoundaryCondition::Robin { gamma } = self.bc {
            if !gamma.is_finite() {
                return Err(Error::InvalidDomain(format!("Robin coefficient must be finite, got {gamma}")));
            }
        }
        match &self.shape {
            Shape::Rectangle { a, b } => {
                if !(a.is_finite() && b.is_finite() && *a > 0.0 && *b > 0.0) {
                    return Err(Error::InvalidDomain(format!("rectangle sides must be positive, got a={a}, b={b}")));
                }
            }
            Shape::Radial(f) => {
                if f.cos.is_empty() {
                    return Err(Error::InvalidDomain("radial shape needs at least the mean radius".into()));
                }
                if !f.cos.iter().chain(&f.sin).all(|c| c.is_finite()) {
                    return Err(Error::InvalidDomain("Fourier coefficients must be finite".into()));
                }
                let n = POSITIVITY_GRID.max(64 * f.harmonics());
                for i in 0..n {
                    let theta = 2.0 * PI * i as f64 / n as f64;
                    let (r, _, _) = f.eval(theta);
                    if r <= 0.0 {
                        return Err(Error::InvalidDomain(format!(
                            "radius function is non-positive (rho = {r:.3e}) at theta = {theta:.6}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Radius of the disk if this is a circle about its intrinsic origin.
    pub fn disk_radius(&self) -> Option<f64> {
        match &self.shape {
            Shape::Radial(f) => f.circle_radius(),
            _ => None,
        }
    }

    pub fn area(&self) -> f64 {
        match &self.shape {
            Shape::Rectangle { a, b } => a * b,
            Shape::Radial(f) => {
                // (1/2) * integral of rho^2 over a period, by Parseval.
                let c0 = f.cos[0];
                let rest: f64 = f.cos.iter().skip(1).chain(&f.sin).map(|c| c * c).sum();
                PI * (c0 * c0 + 0.5 * rest)
            }
        }
    }

    pub fn perimeter(&self) -> f64 {
        match &self.shape {
            Shape::Rectangle { a, b } => 2.0 * (a + b),
            Shape::Radial(f) => {
                let n = 4096.max(64 * f.harmonics());
                let h = 2.0 * PI / n as f64;
                (0..n)
                    .map(|i| {
                        let (r, dr, _) = f.eval(i as f64 * h);
                        (r * r + dr * dr).sqrt()
                    })
                    .sum::<f64>()
                    * h
            }
        }
    }

    /// Whether an intrinsic-frame point lies strictly inside.
    pub fn contains(&self, p: Vec2) -> bool {
        match &self.shape {
            Shape::Rectangle { a, b } => p.x.abs() < 0.5 * a && p.y.abs() < 0.5 * b,
            Shape::Radial(f) => {
                let (r, _, _) = f.eval(p.y.atan2(p.x));
                p.norm() < r
            }
        }
    }

    /// Intrinsic bounding box `(min, max)`.
    pub fn bounding_box(&self) -> (Vec2, Vec2) {
        match &self.shape {
            Shape::Rectangle { a, b } => (Vec2::new(-0.5 * a, -0.5 * b), Vec2::new(0.5 * a, 0.5 * b)),
            Shape::Radial(_) => {
                let pts = self.intrinsic_boundary_samples(2048);
                let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
                let mut hi = -lo;
                for p in pts {
                    lo = lo.inf(&p);
                    hi = hi.sup(&p);
                }
                let pad = 1e-3 * (hi - lo).norm();
                (lo - Vec2::new(pad, pad), hi + Vec2::new(pad, pad))
            }
        }
    }

    /// Evenly spaced boundary points in the intrinsic frame (rectangle corners included).
    fn intrinsic_boundary_samples(&self, samples: usize) -> Vec<Vec2> {
        match &self.shape {
            Shape::Radial(f) => (0..samples)
                .map(|i| {
                    let theta = 2.0 * PI * i as f64 / samples as f64;
                    let (r, _, _) = f.eval(theta);
                    Vec2::new(r * theta.cos(), r * theta.sin())
                })
                .collect(),
            Shape::Rectangle { a, b } => {
                let (ha, hb) = (0.5 * a, 0.5 * b);
                let corners = [
                    Vec2::new(-ha, -hb),
                    Vec2::new(ha, -hb),
                    Vec2::new(ha, hb),
                    Vec2::new(-ha, hb),
                ];
                let per = 2.0 * (a + b);
                let mut pts = Vec::with_capacity(samples + 4);
                for e in 0..4 {
                    let (p0, p1) = (corners[e], corners[(e + 1) % 4]);
                    let len = (p1 - p0).norm();
                    let n = ((samples as f64 * len / per).ceil() as usize).max(1);
                    for j in 0..n {
                        pts.push(p0 + (p1 - p0) * (j as f64 / n as f64));
                    }
                }
                pts
            }
        }
    }

    /// Boundary samples in the shifted (working) frame.
    pub fn boundary_samples(&self, samples: usize) -> Vec<Vec2> {
        self.intrinsic_boundary_samples(samples)
            .into_iter()
            .map(|p| p - self.origin_offset)
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryNode {
    /// Position in the shifted frame.
    pub pos: Vec2,
    /// Outward unit normal.
    pub normal: Vec2,
    /// `pos . normal`
    pub r_n: f64,
    /// Arclength quadrature weight.
    pub weight: f64,
}

#[derive(Clone, Debug)]
pub struct BoundaryMesh {
    pub domain: Domain,
    pub nodes: Vec<BoundaryNode>,
    pub total_weight: f64,
}

impl BoundaryMesh {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn offset(&self) -> Vec2 {
        self.domain.origin_offset
    }

    /// Node position in the domain's intrinsic frame.
    pub fn intrinsic(&self, i: usize) -> Vec2 {
        self.nodes[i].pos + self.domain.origin_offset
    }

    /// Quadrature of a per-node integrand.
    pub fn integrate(&self, f: impl Fn(usize, &BoundaryNode) -> f64) -> f64 {
        self.nodes.iter().enumerate().map(|(i, n)| n.weight * f(i, n)).sum()
    }
}

/// Node count giving roughly 12 points per wavelength at wavenumber `k`.
pub fn suggested_node_count(domain: &Domain, k: f64) -> usize {
    let m = (12.0 * k * domain.perimeter() / (2.0 * PI)).ceil() as usize;
    m.max(512)
}

const RECT_PANEL_ORDER: usize = 16;

/// Boundary quadrature with `m` nodes (approximately, for rectangles).
///
/// Radial curves use the periodic trapezoid rule in `theta`; rectangle edges
/// use composite Gauss–Legendre panels so corners are never sampled.
pub fn build_boundary_mesh(domain: &Domain, m: usize) -> Result<BoundaryMesh> {
    if m < 16 {
        return Err(Error::OutOfRange(format!("boundary mesh needs at least 16 nodes, got {m}")));
    }
    domain.validate()?;
    let t = domain.origin_offset;
    let mut nodes = Vec::with_capacity(m);
    match &domain.shape {
        Shape::Radial(f) => {
            let h = 2.0 * PI / m as f64;
            for i in 0..m {
                let theta = i as f64 * h;
                let (r, dr, _) = f.eval(theta);
                let (s, c) = theta.sin_cos();
                let p = Vec2::new(r * c, r * s);
                let tangent = Vec2::new(dr * c - r * s, dr * s + r * c);
                let speed = tangent.norm();
                let normal = Vec2::new(tangent.y, -tangent.x) / speed;
                let pos = p - t;
                nodes.push(BoundaryNode { pos, normal, r_n: pos.dot(&normal), weight: speed * h });
            }
        }
        Shape::Rectangle { a, b } => {
            let (ha, hb) = (0.5 * a, 0.5 * b);
            // Counterclockwise from the bottom-left corner.
            let edges = [
                (Vec2::new(-ha, -hb), Vec2::new(ha, -hb), Vec2::new(0.0, -1.0)),
                (Vec2::new(ha, -hb), Vec2::new(ha, hb), Vec2::new(1.0, 0.0)),
                (Vec2::new(ha, hb), Vec2::new(-ha, hb), Vec2::new(0.0, 1.0)),
                (Vec2::new(-ha, hb), Vec2::new(-ha, -hb), Vec2::new(-1.0, 0.0)),
            ];
            let per = domain.perimeter();
            for (p0, p1, normal) in edges {
                let len = (p1 - p0).norm();
                let panels = ((m as f64 * len / per / RECT_PANEL_ORDER as f64).round() as usize).max(1);
                for pi in 0..panels {
                    let (s, w) = gauss_legendre_on(
                        RECT_PANEL_ORDER,
                        pi as f64 / panels as f64,
                        (pi + 1) as f64 / panels as f64,
                    );
                    for (sj, wj) in s.iter().zip(&w) {
                        let pos = p0 + (p1 - p0) * *sj - t;
                        nodes.push(BoundaryNode { pos, normal, r_n: pos.dot(&normal), weight: wj * len });
                    }
                }
            }
        }
    }
    let total_weight = nodes.iter().map(|n| n.weight).sum();
    Ok(BoundaryMesh { domain: domain.clone(), nodes, total_weight })
}

#[derive(Clone, Debug)]
pub struct InteriorQuadrature {
    /// `(position in shifted frame, area weight)`
    pub nodes: Vec<(Vec2, f64)>,
    pub origin_offset: Vec2,
}

impl InteriorQuadrature {
    pub fn integrate(&self, f: impl Fn(Vec2) -> f64) -> f64 {
        self.nodes.iter().map(|(p, w)| w * f(*p)).sum()
    }

    pub fn intrinsic(&self, i: usize) -> Vec2 {
        self.nodes[i].0 + self.origin_offset
    }

    pub fn area(&self) -> f64 {
        self.nodes.iter().map(|(_, w)| w).sum()
    }
}

/// Interior rule at resolution `n`.
///
/// Radial shapes: `n` Gauss–Legendre nodes in the scaled radius `s = r / rho(theta)`
/// times `4n` trapezoid angles. Rectangles: `n x n` tensor Gauss–Legendre.
pub fn interior_quadrature(domain: &Domain, n: usize) -> Result<InteriorQuadrature> {
    if n < 16 {
        return Err(Error::OutOfRange(format!("interior quadrature needs resolution >= 16, got {n}")));
    }
    domain.validate()?;
    let t = domain.origin_offset;
    let mut nodes = Vec::new();
    match &domain.shape {
        Shape::Radial(f) => {
            let nt = 4 * n;
            let (s, ws) = gauss_legendre_on(n, 0.0, 1.0);
            let h = 2.0 * PI / nt as f64;
            nodes.reserve(n * nt);
            for j in 0..nt {
                let theta = j as f64 * h;
                let (rho, _, _) = f.eval(theta);
                let (sn, cs) = theta.sin_cos();
                for (si, wi) in s.iter().zip(&ws) {
                    let r = rho * si;
                    nodes.push((Vec2::new(r * cs, r * sn) - t, wi * rho * rho * si * h));
                }
            }
        }
        Shape::Rectangle { a, b } => {
            let (x, wx) = gauss_legendre_on(n, -0.5 * a, 0.5 * a);
            let (y, wy) = gauss_legendre_on(n, -0.5 * b, 0.5 * b);
            for (xi, wxi) in x.iter().zip(&wx) {
                for (yj, wyj) in y.iter().zip(&wy) {
                    nodes.push((Vec2::new(*xi, *yj) - t, wxi * wyj));
                }
            }
        }
    }
    Ok(InteriorQuadrature { nodes, origin_offset: t })
}

/// Smallest `r_n` over a fine boundary mesh; positive iff strictly star-shaped
/// about the current origin.
pub fn star_shaped_margin(domain: &Domain) -> Result<f64> {
    let m = 4096.max(64 * match &domain.shape {
        Shape::Radial(f) => f.harmonics(),
        Shape::Rectangle { .. } => 1,
    });
    let mesh = build_boundary_mesh(domain, m)?;
    Ok(mesh.nodes.iter().map(|n| n.r_n).fold(f64::INFINITY, f64::min))
}

/// Largest distance from the current origin to a boundary sample.
pub fn max_radius(domain: &Domain, samples: usize) -> f64 {
    domain.boundary_samples(samples).iter().map(|p| p.norm()).fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Circle {
    pub center: Vec2,
    pub radius: f64,
}

impl Circle {
    fn contains(&self, p: &Vec2) -> bool {
        (p - self.center).norm() <= self.radius * (1.0 + 1e-12) + 1e-14
    }

    fn from_two(a: Vec2, b: Vec2) -> Circle {
        let center = (a + b) * 0.5;
        Circle { center, radius: (a - center).norm() }
    }

    fn from_three(a: Vec2, b: Vec2, c: Vec2) -> Circle {
        let (bx, by) = (b.x - a.x, b.y - a.y);
        let (cx, cy) = (c.x - a.x, c.y - a.y);
        let d = 2.0 * (bx * cy - by * cx);
        if d.abs() < 1e-300 {
            // Collinear: the widest pair spans the circle.
            let cands = [Circle::from_two(a, b), Circle::from_two(a, c), Circle::from_two(b, c)];
            return cands.into_iter().max_by(|x, y| x.radius.total_cmp(&y.radius)).unwrap();
        }
        let b2 = bx * bx + by * by;
        let c2 = cx * cx + cy * cy;
        let ux = (cy * b2 - by * c2) / d;
        let uy = (bx * c2 - cx * b2) / d;
        let center = Vec2::new(a.x + ux, a.y + uy);
        Circle { center, radius: (ux * ux + uy * uy).sqrt() }
    }
}

/// Welzl's randomized incremental minimum enclosing circle.
pub fn welzl(points: &[Vec2], seed: u64) -> Circle {
    let mut pts = points.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pts.shuffle(&mut rng);
    if pts.is_empty() {
        return Circle { center: Vec2::zeros(), radius: 0.0 };
    }
    let mut c = Circle { center: pts[0], radius: 0.0 };
    for i in 1..pts.len() {
        if c.contains(&pts[i]) {
            continue;
        }
        c = Circle { center: pts[i], radius: 0.0 };
        for j in 0..i {
            if c.contains(&pts[j]) {
                continue;
            }
            c = Circle::from_two(pts[i], pts[j]);
            for k in 0..j {
                if !c.contains(&pts[k]) {
                    c = Circle::from_three(pts[i], pts[j], pts[k]);
                }
            }
        }
    }
    c
}

/// Escribed circle of the sampled boundary, in the shifted frame.
///
/// Its center is the origin minimizing the bound constant `R^2 / 4`.
pub fn min_enclosing_circle(domain: &Domain, samples: usize) -> Result<Circle> {
    if samples < 256 {
        return Err(Error::OutOfRange(format!("need at least 256 boundary samples, got {samples}")));
    }
    domain.validate()?;
    Ok(welzl(&domain.boundary_samples(samples), 0x5eed))
}
