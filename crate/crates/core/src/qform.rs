//! The boundary bilinear form `q`, the matrix `Q` built from it, and the
//! checks around it.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{max_radius, BoundaryCondition, BoundaryMesh, InteriorQuadrature, Vec2};
use crate::image::GrayImage;
use crate::modes::{boundary_trace, BoundaryTrace, EigenState, ModeLabel};

/// Boundary samples used for the radius in the bound constant `R^2 / 4`.
const RADIUS_SAMPLES: usize = 1 << 14;

/// `q(u, v; e)` by boundary quadrature in dimension `d`.
pub fn q_bilinear(u: &BoundaryTrace, v: &BoundaryTrace, e: f64, mesh: &BoundaryMesh, d: u32) -> Result<f64> {
    u.check_mesh(mesh)?;
    v.check_mesh(mesh)?;
    let half_dm2 = 0.5 * (d as f64 - 2.0);
    Ok(mesh.integrate(|i, node| {
        half_dm2 * (u.dn[i] * v.value[i] + v.dn[i] * u.value[i])
            + node.r_n * (0.5 * e * u.value[i] * v.value[i] - u.grad[i].dot(&v.grad[i]))
            + u.dr[i] * v.dn[i]
            + v.dr[i] * u.dn[i]
    }))
}

/// `oint r_n u_n v_n`, the form for functions vanishing on the boundary.
pub fn q_dirichlet(u: &BoundaryTrace, v: &BoundaryTrace, mesh: &BoundaryMesh) -> Result<f64> {
    u.check_mesh(mesh)?;
    v.check_mesh(mesh)?;
    Ok(mesh.integrate(|i, node| node.r_n * u.dn[i] * v.dn[i]))
}

#[derive(Clone, Debug, Serialize)]
pub struct QMatrix {
    pub energies: Vec<f64>,
    pub labels: Vec<ModeLabel>,
    pub entries: DMatrix<f64>,
    pub origin: Vec2,
    pub bc: BoundaryCondition,
    /// Largest boundary distance from the origin.
    pub r_max: f64,
}

impl QMatrix {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// `R^2 / 4`
    pub fn bound_constant(&self) -> f64 {
        0.25 * self.r_max * self.r_max
    }

    /// Entries divided by `2 E_i` on the diagonal; `NaN` where `E_i = 0`.
    pub fn diagonal_ratios(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.entries[(i, i)] / (2.0 * self.energies[i])).collect()
    }
}

/// Assemble `Q_ij = q(phi_i, phi_j; E_i + E_j)` for analytic states.
pub fn build_q(states: &[EigenState], mesh: &BoundaryMesh) -> Result<QMatrix> {
    let traces: Vec<BoundaryTrace> = states.iter().map(|s| boundary_trace(s, mesh)).collect();
    let energies: Vec<f64> = states.iter().map(|s| s.energy).collect();
    let labels: Vec<ModeLabel> = states.iter().map(|s| s.label).collect();
    build_q_from_traces(&energies, &labels, &traces, mesh)
}

pub fn build_q_from_traces(
    energies: &[f64],
    labels: &[ModeLabel],
    traces: &[BoundaryTrace],
    mesh: &BoundaryMesh,
) -> Result<QMatrix> {
    let n = energies.len();
    if traces.len() != n || labels.len() != n {
        return Err(Error::MeshMismatch(format!(
            "{} energies, {} labels, {} traces",
            n,
            labels.len(),
            traces.len()
        )));
    }
    for t in traces {
        t.check_mesh(mesh)?;
    }
    let dirichlet = mesh.domain.bc.is_dirichlet();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            if dirichlet {
                q_dirichlet(&traces[i], &traces[j], mesh)
            } else {
                q_bilinear(&traces[i], &traces[j], energies[i] + energies[j], mesh, 2)
            }
        })
        .collect::<Result<_>>()?;
    let mut entries = DMatrix::zeros(n, n);
    for (&(i, j), v) in pairs.iter().zip(values) {
        entries[(i, j)] = v;
        entries[(j, i)] = v;
    }
    Ok(QMatrix {
        energies: energies.to_vec(),
        labels: labels.to_vec(),
        entries,
        origin: mesh.offset(),
        bc: mesh.domain.bc,
        r_max: max_radius(&mesh.domain, RADIUS_SAMPLES),
    })
}

/// Values of each state at each interior node, `nodes x states`.
pub fn interior_values(states: &[EigenState], iq: &InteriorQuadrature) -> DMatrix<f64> {
    let cols: Vec<Vec<f64>> = states
        .par_iter()
        .map(|s| (0..iq.nodes.len()).map(|i| s.eval(iq.intrinsic(i)).0).collect())
        .collect();
    DMatrix::from_fn(iq.nodes.len(), states.len(), |i, j| cols[j][i])
}

/// `<phi_i, r^2 phi_j>` over the interior, `r` measured from the shifted origin.
pub fn r2_matrix(states: &[EigenState], iq: &InteriorQuadrature) -> DMatrix<f64> {
    let v = interior_values(states, iq);
    let wr2 = DMatrix::from_fn(iq.nodes.len(), states.len(), |i, j| {
        let (p, w) = iq.nodes[i];
        w * p.norm_squared() * v[(i, j)]
    });
    let m = v.transpose() * wr2;
    (&m + m.transpose()) * 0.5
}

/// Gram matrix `<phi_i, phi_j>` over the interior.
pub fn interior_gram(states: &[EigenState], iq: &InteriorQuadrature) -> DMatrix<f64> {
    let v = interior_values(states, iq);
    let wv = DMatrix::from_fn(iq.nodes.len(), states.len(), |i, j| iq.nodes[i].1 * v[(i, j)]);
    v.transpose() * wv
}

#[derive(Clone, Debug, Serialize)]
pub struct LemmaReport {
    pub max_residual: f64,
    pub worst: (usize, usize),
}

/// Largest `|Q_ij - 2 E_i delta_ij - (E_i - E_j)^2 / 4 <phi_i, r^2 phi_j>| / max(1, |Q_ij|)`.
pub fn lemma_residual(q: &QMatrix, states: &[EigenState], iq: &InteriorQuadrature) -> Result<LemmaReport> {
    if iq.origin_offset != q.origin {
        return Err(Error::MeshMismatch(format!(
            "interior quadrature origin {:?} differs from Q origin {:?}",
            iq.origin_offset, q.origin
        )));
    }
    if states.len() != q.dim() {
        return Err(Error::MeshMismatch(format!("{} states for a {}x{} Q", states.len(), q.dim(), q.dim())));
    }
    let r2 = r2_matrix(states, iq);
    let mut rep = LemmaReport { max_residual: 0.0, worst: (0, 0) };
    for i in 0..q.dim() {
        for j in 0..=i {
            let eps = q.energies[i] - q.energies[j];
            let diag = if i == j { 2.0 * q.energies[i] } else { 0.0 };
            let qij = q.entries[(i, j)];
            let res = (qij - diag - 0.25 * eps * eps * r2[(i, j)]).abs() / qij.abs().max(1.0);
            if res > rep.max_residual {
                rep = LemmaReport { max_residual: res, worst: (i, j) };
            }
        }
    }
    Ok(rep)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundViolation {
    pub i: usize,
    pub j: usize,
    pub q: f64,
    pub bound: f64,
}

/// Pairs breaking `|Q_ij| <= (R^2/4)(E_i - E_j)^2`.
pub fn theorem_bound_check(q: &QMatrix) -> Vec<BoundViolation> {
    theorem_bound_check_scaled(q, 1.0)
}

/// As [`theorem_bound_check`] with the constant multiplied by `factor`.
///
/// Each bound carries a rounding allowance of `1e-9 (E_i + E_j)` so exactly
/// degenerate pairs are judged on their computed zero.
pub fn theorem_bound_check_scaled(q: &QMatrix, factor: f64) -> Vec<BoundViolation> {
    let c = factor * q.bound_constant();
    let mut out = Vec::new();
    for i in 0..q.dim() {
        for j in 0..i {
            let (ei, ej) = (q.energies[i], q.energies[j]);
            let bound = c * (ei - ej).powi(2);
            let qij = q.entries[(i, j)];
            if qij.abs() > bound + 1e-9 * (ei + ej) {
                out.push(BoundViolation { i, j, q: qij, bound });
            }
        }
    }
    out
}

/// Largest ratio `|Q_ij| / ((R^2/4)(E_i - E_j)^2)` over non-degenerate pairs.
pub fn bound_margin(q: &QMatrix) -> f64 {
    let c = q.bound_constant();
    let mut worst = 0.0f64;
    for i in 0..q.dim() {
        for j in 0..i {
            let eps = q.energies[i] - q.energies[j];
            if eps.abs() > 1e-9 * (q.energies[i] + q.energies[j]) {
                worst = worst.max(q.entries[(i, j)].abs() / (c * eps * eps));
            }
        }
    }
    worst
}

/// `oint (d-2) phi phi_n + r_n (E phi^2 - |grad phi|^2) + 2 phi_r phi_n`.
pub fn normalization_general(state: &EigenState, mesh: &BoundaryMesh, d: u32) -> f64 {
    let t = boundary_trace(state, mesh);
    normalization_from_trace(&t, state.energy, mesh, d)
}

pub fn normalization_from_trace(t: &BoundaryTrace, energy: f64, mesh: &BoundaryMesh, d: u32) -> f64 {
    let dm2 = d as f64 - 2.0;
    mesh.integrate(|i, node| {
        dm2 * t.value[i] * t.dn[i]
            + node.r_n * (energy * t.value[i].powi(2) - t.grad[i].norm_squared())
            + 2.0 * t.dr[i] * t.dn[i]
    })
}

/// `oint r_n phi_n^2`, equal to `2E` for a normalized Dirichlet state.
pub fn rellich_norm(t: &BoundaryTrace, mesh: &BoundaryMesh) -> f64 {
    mesh.integrate(|i, node| node.r_n * t.dn[i] * t.dn[i])
}

#[derive(Clone, Debug, Serialize)]
pub struct WindowReport {
    pub energy: f64,
    pub beta: f64,
    pub half_width: f64,
    pub indices: Vec<usize>,
    /// Max `|Q_ij| / 2E` over distinct selected levels.
    pub sup_offdiag: f64,
    /// `Q` restricted to the window and divided by `2E`.
    pub scaled: DMatrix<f64>,
}

/// Restrict `Q` to levels with `|E_i - E| <= c E^beta`.
pub fn window_extract(q: &QMatrix, energy: f64, beta: f64, c: f64) -> Result<WindowReport> {
    if !(0.0..0.5).contains(&beta) {
        return Err(Error::OutOfRange(format!("window exponent must lie in [0, 1/2), got {beta}")));
    }
    if !(energy > 0.0 && c > 0.0) {
        return Err(Error::OutOfRange(format!("window needs E > 0 and c > 0, got E = {energy}, c = {c}")));
    }
    let half_width = c * energy.powf(beta);
    let indices: Vec<usize> = (0..q.dim()).filter(|&i| (q.energies[i] - energy).abs() <= half_width).collect();
    if indices.is_empty() {
        return Err(Error::EmptyWindow { center: energy, half_width });
    }
    let n = indices.len();
    let scaled = DMatrix::from_fn(n, n, |a, b| q.entries[(indices[a], indices[b])] / (2.0 * energy));
    let mut sup = 0.0f64;
    for a in 0..n {
        for b in 0..a {
            sup = sup.max(scaled[(a, b)].abs());
        }
    }
    Ok(WindowReport { energy, beta, half_width, indices, sup_offdiag: sup, scaled })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Weight {
    /// `r . n`
    RadialNormal,
    Unit,
}

/// `oint D phi_n,i phi_n,j` for Dirichlet traces.
pub fn weighted_gram(traces: &[BoundaryTrace], mesh: &BoundaryMesh, weight: Weight) -> Result<DMatrix<f64>> {
    if !mesh.domain.bc.is_dirichlet() {
        return Err(Error::Unsupported("weighted Gram matrices are defined for Dirichlet states only".into()));
    }
    for t in traces {
        t.check_mesh(mesh)?;
    }
    let n = traces.len();
    let w: Vec<f64> = mesh
        .nodes
        .iter()
        .map(|node| {
            node.weight
                * match weight {
                    Weight::RadialNormal => node.r_n,
                    Weight::Unit => 1.0,
                }
        })
        .collect();
    let a = DMatrix::from_fn(mesh.len(), n, |i, j| traces[j].dn[i]);
    let wa = DMatrix::from_fn(mesh.len(), n, |i, j| w[i] * a[(i, j)]);
    let g = a.transpose() * wa;
    Ok((&g + g.transpose()) * 0.5)
}

/// Median of `|G_ij| / (E_i - E_j)^2` over pairs with `0 < |E_i - E_j| <= max_gap`.
///
/// Entries below `1e-10 sqrt(G_ii G_jj)` vanish by symmetry (angular
/// selection rules on the disk) and are left out.
pub fn median_scaled_offdiag(g: &DMatrix<f64>, energies: &[f64], max_gap: f64) -> Option<f64> {
    let mut v = Vec::new();
    for i in 0..energies.len() {
        for j in 0..i {
            let eps = (energies[i] - energies[j]).abs();
            let zero = g[(i, j)].abs() <= 1e-10 * (g[(i, i)] * g[(j, j)]).abs().sqrt();
            if !zero && eps > 1e-9 * (energies[i] + energies[j]) && eps <= max_gap {
                v.push(g[(i, j)].abs() / (eps * eps));
            }
        }
    }
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len();
    Some(if m % 2 == 1 { v[m / 2] } else { 0.5 * (v[m / 2 - 1] + v[m / 2]) })
}

/// Log-compressed density plot of `|Q_ij|`, dark = large.
pub fn q_density_image(q: &DMatrix<f64>) -> GrayImage {
    let (rows, cols) = q.shape();
    let mut img = GrayImage::new(cols, rows, 255);
    let max = q.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if max == 0.0 || !max.is_finite() {
        return img;
    }
    let floor = 1e-6 * max;
    let denom = (1.0 + max / floor).ln();
    for i in 0..rows {
        for j in 0..cols {
            let v = (1.0 + q[(i, j)].abs() / floor).ln() / denom;
            img.set(i, j, (255.0 * (1.0 - v)).round().clamp(0.0, 255.0) as u8);
        }
    }
    img
}
