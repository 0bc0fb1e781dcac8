//! Scaling-method eigensolver for Dirichlet problems on strictly star-shaped
//! domains.
//!
//! A plane-wave basis `ξ_j = cos(k n_j·x + α_j)` is scaled with `k`. The
//! boundary tension `F(k) = ∮ ξ_i ξ_j / r_n` and its derivative `G = dF/dk`
//! are simultaneously diagonalized at one `k0`; each generalized eigenvalue
//! `λ = f/f'` yields a wavenumber `k0 - 2λ` for the scaled eigenfunction.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{
    build_boundary_mesh, star_shaped_margin, suggested_node_count, BoundaryCondition, BoundaryMesh, Domain, Vec2,
};
use crate::modes::{trace_of, BoundaryTrace, EigenState, ModeFunction, ModeLabel};
use crate::qform::{build_q_from_traces, QMatrix};

#[derive(Clone, Debug, Serialize)]
pub struct ScalingBasis {
    pub directions: Vec<Vec2>,
    pub phases: Vec<f64>,
}

impl ScalingBasis {
    /// `n` equally spaced directions with seeded random phases.
    pub fn new(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let directions = (0..n)
            .map(|j| {
                let t = 2.0 * PI * j as f64 / n as f64;
                Vec2::new(t.cos(), t.sin())
            })
            .collect();
        let phases = (0..n).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        ScalingBasis { directions, phases }
    }

    /// `ceil(factor * k P / pi) + extra` directions.
    pub fn for_wavenumber(domain: &Domain, k: f64, factor: f64, extra: usize, seed: u64) -> Self {
        let n = (factor * k * domain.perimeter() / PI).ceil() as usize + extra;
        Self::new(n, seed)
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    /// `(ξ_j, ∇ξ_j, ∂ξ_j/∂k)` at shifted position `x`.
    pub fn eval(&self, j: usize, k: f64, x: Vec2) -> (f64, Vec2, f64) {
        let n = self.directions[j];
        let nx = n.dot(&x);
        let (s, c) = (k * nx + self.phases[j]).sin_cos();
        (c, -k * s * n, -s * nx)
    }
}

/// Basis expansion `u = Σ c_j ξ_j(k, x - t)`, usable as a mode.
#[derive(Clone, Debug)]
pub struct ScalingMode {
    pub basis: Arc<ScalingBasis>,
    pub k: f64,
    pub coeffs: DVector<f64>,
    pub origin_offset: Vec2,
}

impl ModeFunction for ScalingMode {
    fn eval(&self, p: Vec2) -> (f64, Vec2) {
        let x = p - self.origin_offset;
        let mut v = 0.0;
        let mut g = Vec2::zeros();
        for j in 0..self.basis.len() {
            let (xi, gxi, _) = self.basis.eval(j, self.k, x);
            v += self.coeffs[j] * xi;
            g += self.coeffs[j] * gxi;
        }
        (v, g)
    }
}

fn check_mesh(mesh: &BoundaryMesh) -> Result<()> {
    if !mesh.domain.bc.is_dirichlet() {
        return Err(Error::Unsupported("the scaling method is implemented for Dirichlet conditions only".into()));
    }
    if let Some(n) = mesh.nodes.iter().find(|n| n.r_n <= 0.0) {
        return Err(Error::InvalidDomain(format!(
            "domain is not strictly star-shaped about the origin (r_n = {:e} at {:?})",
            n.r_n, n.pos
        )));
    }
    Ok(())
}

/// Rows `sqrt(w/r_n) ξ_j` and `sqrt(w/r_n) ∂ξ_j/∂k`.
fn weighted_rows(basis: &ScalingBasis, k: f64, mesh: &BoundaryMesh) -> (DMatrix<f64>, DMatrix<f64>) {
    let (m, n) = (mesh.len(), basis.len());
    let rows: Vec<(Vec<f64>, Vec<f64>)> = mesh
        .nodes
        .par_iter()
        .map(|node| {
            let s = (node.weight / node.r_n).sqrt();
            (0..n)
                .map(|j| {
                    let (xi, _, dk) = basis.eval(j, k, node.pos);
                    (s * xi, s * dk)
                })
                .unzip()
        })
        .collect();
    let a = DMatrix::from_fn(m, n, |i, j| rows[i].0[j]);
    let b = DMatrix::from_fn(m, n, |i, j| rows[i].1[j]);
    (a, b)
}

/// `F = ∮ ξ_i ξ_j / r_n` and `G = dF/dk` at `k0`.
pub fn tension_matrices(basis: &ScalingBasis, k0: f64, mesh: &BoundaryMesh) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    check_mesh(mesh)?;
    let (a, b) = weighted_rows(basis, k0, mesh);
    let f = a.tr_mul(&a);
    let ab = a.tr_mul(&b);
    let g = &ab + ab.transpose();
    Ok(((&f + f.transpose()) * 0.5, g))
}

/// One generalized eigenpair of `F x = λ G x`, normalized so `xᵀ F x = 1`.
#[derive(Clone, Debug)]
pub struct SpectralPair {
    pub lambda: f64,
    pub k: f64,
    pub coeffs: DVector<f64>,
}

/// Solve `F x = λ G x` on the part of the space where `F` exceeds
/// `cutoff · max eig(F)`; returns pairs ordered by `|λ|`.
///
/// `F` is a Gram matrix and so positive semidefinite, while `G` is indefinite
/// near every eigenvalue; whitening with the retained part of `F` gives a
/// well-posed symmetric problem `Zᵀ G Z w = μ w` with `λ = 1/μ`.
pub fn solve_window(f: &DMatrix<f64>, g: &DMatrix<f64>, k0: f64, cutoff: f64) -> Result<Vec<SpectralPair>> {
    if f.shape() != g.shape() || !f.is_square() {
        return Err(Error::OutOfRange(format!("F is {:?} but G is {:?}", f.shape(), g.shape())));
    }
    let eig = SymmetricEigen::new(f.clone());
    let fmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..f.nrows()).filter(|&i| eig.eigenvalues[i] > cutoff * fmax).collect();
    if keep.is_empty() || fmax <= 0.0 {
        return Err(Error::EmptySubspace { cutoff });
    }
    let z = DMatrix::from_fn(f.nrows(), keep.len(), |i, c| {
        eig.eigenvectors[(i, keep[c])] / eig.eigenvalues[keep[c]].sqrt()
    });
    let h = z.tr_mul(&(g * &z));
    let h = (&h + h.transpose()) * 0.5;
    let e2 = SymmetricEigen::new(h);
    let mut out: Vec<SpectralPair> = (0..keep.len())
        .filter(|&i| e2.eigenvalues[i] != 0.0)
        .map(|i| {
            let lambda = 1.0 / e2.eigenvalues[i];
            SpectralPair { lambda, k: k0 - 2.0 * lambda, coeffs: &z * e2.eigenvectors.column(i) }
        })
        .collect();
    out.sort_by(|a, b| a.lambda.abs().total_cmp(&b.lambda.abs()));
    Ok(out)
}

/// Boundary quantities of a basis expansion at wavenumber `k`.
struct Expansion {
    /// `∮ u² / r_n`
    f: f64,
    /// `∮ r_n u_n²`
    rellich: f64,
}

fn expansion_norms(basis: &ScalingBasis, coeffs: &DVector<f64>, k: f64, mesh: &BoundaryMesh) -> Expansion {
    let (f, rellich) = mesh
        .nodes
        .par_iter()
        .map(|node| {
            let mut v = 0.0;
            let mut g = Vec2::zeros();
            for j in 0..basis.len() {
                let (xi, gxi, _) = basis.eval(j, k, node.pos);
                v += coeffs[j] * xi;
                g += coeffs[j] * gxi;
            }
            let un = g.dot(&node.normal);
            (node.weight * v * v / node.r_n, node.weight * node.r_n * un * un)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    Expansion { f, rellich }
}

/// Dimensionless tension `k² ∮ u²/r_n / ∮ r_n u_n²`; zero for an exact
/// Dirichlet eigenfunction.
pub fn tension(basis: &ScalingBasis, coeffs: &DVector<f64>, k: f64, mesh: &BoundaryMesh) -> f64 {
    let e = expansion_norms(basis, coeffs, k, mesh);
    k * k * e.f / e.rellich
}

#[derive(Clone, Debug, Serialize)]
pub struct Candidate {
    pub k: f64,
    pub lambda: f64,
    pub tension: f64,
    #[serde(skip)]
    pub coeffs: DVector<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingResult {
    pub k0: f64,
    pub half_width: f64,
    pub retained_dim: usize,
    /// Unrefined in-window pairs with their tensions.
    pub raw: Vec<Candidate>,
    /// Refined levels, one entry per state, sorted by `k`.
    pub levels: Vec<Candidate>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScalingOptions {
    /// Relative eigenvalue cutoff for `F`.
    pub cutoff: f64,
    /// Largest tension of an accepted, refined level.
    pub tension_threshold: f64,
    /// Largest tension of an unrefined pair worth refining. The tension of a
    /// raw pair is roughly the square of its wavenumber error.
    pub seed_tension: f64,
    /// Directions: `ceil(basis_factor k P / pi) + basis_extra`.
    pub basis_factor: f64,
    pub basis_extra: usize,
    pub seed: u64,
    /// Window half-width in `k`; `None` uses `0.6 · 2π / P`.
    pub half_width: Option<f64>,
    /// Newton-like re-solves per level.
    pub refine_iters: usize,
    /// Relative tolerance for merging levels.
    pub merge_tol: f64,
}

impl Default for ScalingOptions {
    fn default() -> Self {
        ScalingOptions {
            cutoff: 1e-14,
            tension_threshold: 1e-6,
            seed_tension: 1e-2,
            basis_factor: 1.5,
            basis_extra: 20,
            seed: 0x5ca1e,
            half_width: None,
            refine_iters: 6,
            merge_tol: 1e-6,
        }
    }
}

impl ScalingOptions {
    pub fn half_width_for(&self, domain: &Domain) -> f64 {
        self.half_width.unwrap_or_else(|| 0.6 * 2.0 * PI / domain.perimeter())
    }
}

fn raw_candidates(
    basis: &ScalingBasis,
    mesh: &BoundaryMesh,
    k0: f64,
    half_width: f64,
    cutoff: f64,
) -> Result<(usize, Vec<Candidate>)> {
    let (f, g) = tension_matrices(basis, k0, mesh)?;
    let pairs = solve_window(&f, &g, k0, cutoff)?;
    let dim = pairs.len();
    let mut out: Vec<Candidate> = pairs
        .into_par_iter()
        .filter(|p| (p.k - k0).abs() <= half_width && p.k > 0.0)
        .map(|p| Candidate { k: p.k, lambda: p.lambda, tension: tension(basis, &p.coeffs, p.k, mesh), coeffs: p.coeffs })
        .collect();
    out.sort_by(|a, b| a.k.total_cmp(&b.k));
    Ok((dim, out))
}

/// A refined level and every low-tension pair of the last solve at it.
struct Refined {
    k: f64,
    tension: f64,
    members: Vec<Candidate>,
    /// Other low-tension pairs of the last solve, close enough to be accurate.
    neighbors: Vec<Candidate>,
}

/// Relative offset of the refinement centers from the current estimate.
/// A level solved exactly at its own wavenumber has `f = 0` and drops out of
/// the retained subspace; the bias of an offset `δ` is about `δ²/2k`.
const REFINE_OFFSET: f64 = 1e-5;

/// Re-solve next to the current estimate, following the nearest pair whose
/// tension has not grown, until the estimate stops moving.
///
/// Near-null directions of `F` produce pairs with `λ ≈ 0` at every center;
/// their large tension keeps them from being followed.
fn refine(
    basis: &ScalingBasis,
    mesh: &BoundaryMesh,
    start: &Candidate,
    half_width: f64,
    opts: &ScalingOptions,
) -> Result<Option<Refined>> {
    let mut k = start.k;
    let mut prev_step = f64::INFINITY;
    let mut prev_tension = start.tension;
    let mut last: Option<Refined> = None;
    let reach = (0.5 * half_width).max(4.0 * start.tension.sqrt());
    for _ in 0..opts.refine_iters {
        let (_, cands) = raw_candidates(basis, mesh, k * (1.0 + REFINE_OFFSET), reach, opts.cutoff)?;
        let Some(best) = cands
            .iter()
            .filter(|c| c.tension <= 10.0 * prev_tension)
            .min_by(|a, b| (a.k - k).abs().total_cmp(&(b.k - k).abs()))
        else {
            break;
        };
        let step = best.k - k;
        // A growing correction means the pair belongs to a different level.
        if step.abs() > 2.0 * prev_step + 1e-12 * k {
            break;
        }
        let kb = best.k;
        let members: Vec<Candidate> = cands
            .iter()
            .filter(|c| (c.k - kb).abs() <= opts.merge_tol * kb && c.tension <= opts.tension_threshold)
            .cloned()
            .collect();
        k = kb;
        prev_step = step.abs();
        prev_tension = best.tension;
        if !members.is_empty() {
            let neighbors = neighbors_of(&cands, kb, half_width, opts);
            last = Some(Refined { k, tension: best.tension, members, neighbors });
        }
        if step.abs() < 1e-12 * k {
            break;
        }
    }
    // A partner sitting on the re-centered point drops out of the retained
    // space; probing from the other side recovers it.
    if let Some(r) = last.as_mut() {
        let (_, cands) = raw_candidates(basis, mesh, r.k * (1.0 - REFINE_OFFSET), reach, opts.cutoff)?;
        for c in neighbors_of(&cands, r.k, half_width, opts) {
            if r.neighbors.iter().all(|n| (n.k - c.k).abs() > opts.merge_tol * c.k) {
                r.neighbors.push(c);
            }
        }
    }
    Ok(last)
}

fn neighbors_of(cands: &[Candidate], k: f64, half_width: f64, opts: &ScalingOptions) -> Vec<Candidate> {
    cands
        .iter()
        .filter(|c| (c.k - k).abs() > opts.merge_tol * k && (c.k - k).abs() <= 0.1 * half_width)
        .filter(|c| c.tension <= opts.seed_tension)
        .cloned()
        .collect()
}

/// Solve one window centered at `k0` and refine every level inside it.
pub fn window(
    basis: &ScalingBasis,
    mesh: &BoundaryMesh,
    k0: f64,
    half_width: f64,
    opts: &ScalingOptions,
) -> Result<ScalingResult> {
    let (retained_dim, raw) = raw_candidates(basis, mesh, k0, half_width, opts.cutoff)?;
    let mut seeds: Vec<Candidate> = raw.iter().filter(|c| c.tension <= opts.seed_tension).cloned().collect();
    let mut groups: Vec<Refined> = Vec::new();
    // Levels split by less than the raw bias can send two seeds to the same
    // level; their partners show up as neighbors of the refined solve.
    for _ in 0..4 {
        if seeds.is_empty() {
            break;
        }
        let refined: Vec<Refined> = seeds
            .par_iter()
            .map(|c| refine(basis, mesh, c, half_width, opts))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .filter(|r| (r.k - k0).abs() <= half_width)
            .collect();
        for r in refined {
            match groups.iter_mut().find(|g| (g.k - r.k).abs() <= opts.merge_tol * r.k) {
                Some(g) => {
                    if (r.members.len(), -r.tension) > (g.members.len(), -g.tension) {
                        *g = r;
                    }
                }
                None => groups.push(r),
            }
        }
        seeds = Vec::new();
        for (kc, n) in groups.iter().flat_map(|g| g.neighbors.iter().map(move |n| (g.k, n))) {
            // A neighbor seen from `kc` is biased by about (n.k - kc)² / 2k.
            let slack = opts.merge_tol * n.k + (n.k - kc).powi(2) / n.k;
            let known = |k: f64| (k - n.k).abs() <= slack;
            if !groups.iter().any(|g| known(g.k)) && !seeds.iter().any(|s: &Candidate| known(s.k)) {
                seeds.push(n.clone());
            }
        }
    }
    let mut levels: Vec<Candidate> = groups.into_iter().flat_map(|g| g.members).collect();
    levels.sort_by(|a, b| a.k.total_cmp(&b.k));
    Ok(ScalingResult { k0, half_width, retained_dim, raw, levels })
}

#[derive(Clone, Debug, Serialize)]
pub struct ScaledLevel {
    pub k: f64,
    pub energy: f64,
    pub tension: f64,
    /// `∮ r_n u_n² / (2E ∫ u²) - 1` when an interior check was requested.
    pub rellich_defect: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub domain: Domain,
    pub k_range: (f64, f64),
    pub basis: Arc<ScalingBasis>,
    pub mesh: BoundaryMesh,
    pub levels: Vec<ScaledLevel>,
    /// Normalized so that `∮ r_n u_n² = 2E`.
    pub states: Vec<EigenState>,
    pub windows: usize,
    pub options: ScalingOptions,
}

/// All levels with `k` in `[k_lo, k_hi]`.
///
/// Windows of half-width `h` are centered every `step` (default `h`); each
/// window keeps the refined levels within `step/2` of its center.
pub fn sweep(domain: &Domain, k_lo: f64, k_hi: f64, step: Option<f64>, opts: &ScalingOptions) -> Result<SweepResult> {
    if !(k_lo > 0.0 && k_hi > k_lo) {
        return Err(Error::OutOfRange(format!("k range must satisfy 0 < k_lo < k_hi, got [{k_lo}, {k_hi}]")));
    }
    if !domain.bc.is_dirichlet() {
        return Err(Error::Unsupported("the scaling method is implemented for Dirichlet conditions only".into()));
    }
    let margin = star_shaped_margin(domain)?;
    if margin <= 0.0 {
        return Err(Error::InvalidDomain(format!("domain is not strictly star-shaped (min r_n = {margin:e})")));
    }
    let hw = opts.half_width_for(domain);
    let step = step.unwrap_or(hw).min(2.0 * hw);
    let basis = Arc::new(ScalingBasis::for_wavenumber(domain, k_hi + hw, opts.basis_factor, opts.basis_extra, opts.seed));
    let mesh = build_boundary_mesh(domain, suggested_node_count(domain, k_hi + hw))?;

    let nwin = ((k_hi - k_lo) / step).ceil().max(1.0) as usize;
    let centers: Vec<f64> = (0..nwin).map(|i| k_lo + (i as f64 + 0.5) * step).collect();
    let owned: Vec<Vec<Candidate>> = centers
        .par_iter()
        .map(|&k0| -> Result<Vec<Candidate>> {
            let w = window(&basis, &mesh, k0, hw, opts)?;
            let (lo, hi) = (k0 - 0.5 * step, k0 + 0.5 * step);
            Ok(w.levels.into_iter().filter(|c| c.k >= lo && c.k < hi && c.k >= k_lo && c.k <= k_hi).collect())
        })
        .collect::<Result<_>>()?;

    let mut levels = Vec::new();
    let mut states = Vec::new();
    for cands in owned {
        for c in cands {
            let e = expansion_norms(&basis, &c.coeffs, c.k, &mesh);
            let energy = c.k * c.k;
            let scale = (2.0 * energy / e.rellich).sqrt();
            let func = ScalingMode {
                basis: basis.clone(),
                k: c.k,
                coeffs: &c.coeffs * scale,
                origin_offset: domain.origin_offset,
            };
            levels.push(ScaledLevel { k: c.k, energy, tension: c.tension, rellich_defect: None });
            states.push(EigenState {
                energy,
                k: c.k,
                label: ModeLabel::Numerical { index: 0 },
                bc: BoundaryCondition::Dirichlet,
                norm_constant: scale,
                func: Arc::new(func),
            });
        }
    }
    let mut order: Vec<usize> = (0..levels.len()).collect();
    order.sort_by(|&a, &b| levels[a].k.total_cmp(&levels[b].k));
    let levels: Vec<ScaledLevel> = order.iter().map(|&i| levels[i].clone()).collect();
    let states: Vec<EigenState> = order
        .iter()
        .enumerate()
        .map(|(n, &i)| {
            let mut s = states[i].clone();
            s.label = ModeLabel::Numerical { index: n as u32 };
            s
        })
        .collect();
    Ok(SweepResult {
        domain: domain.clone(),
        k_range: (k_lo, k_hi),
        basis,
        mesh,
        levels,
        states,
        windows: nwin,
        options: *opts,
    })
}

impl SweepResult {
    pub fn wavenumbers(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.k).collect()
    }

    /// Fill in `∮ r_n u_n² / (2E ∫ u²) - 1` using an interior rule.
    pub fn check_rellich(&mut self, interior_resolution: usize) -> Result<()> {
        let iq = crate::geometry::interior_quadrature(&self.domain, interior_resolution)?;
        let defects: Vec<f64> = self
            .states
            .par_iter()
            .map(|s| {
                let norm = iq.integrate(|p| s.eval(p + iq.origin_offset).0.powi(2));
                // States carry ∮ r_n u_n² = 2E by construction.
                1.0 / norm - 1.0
            })
            .collect();
        for (l, d) in self.levels.iter_mut().zip(defects) {
            l.rellich_defect = Some(d);
        }
        Ok(())
    }

    pub fn traces(&self, mesh: &BoundaryMesh) -> Vec<BoundaryTrace> {
        self.states.iter().map(|s| trace_of(s.func.as_ref(), mesh)).collect()
    }
}

/// `Q` for the recovered levels on `mesh`.
pub fn scaled_q(result: &SweepResult, mesh: &BoundaryMesh) -> Result<QMatrix> {
    let energies: Vec<f64> = result.states.iter().map(|s| s.energy).collect();
    let labels: Vec<ModeLabel> = result.states.iter().map(|s| s.label).collect();
    build_q_from_traces(&energies, &labels, &result.traces(mesh), mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::bessel::{bessel_zeros_below, ZeroKind};
    use crate::modes::weyl_estimate;

    fn disk() -> Domain {
        Domain::disk(1.0, BoundaryCondition::Dirichlet).unwrap()
    }

    fn disk_levels(lo: f64, hi: f64) -> Vec<f64> {
        let mut out = Vec::new();
        for m in 0..200 {
            let z = bessel_zeros_below(m, ZeroKind::Dirichlet, hi).unwrap();
            if z.is_empty() {
                break;
            }
            for x in z.into_iter().filter(|&x| x > lo) {
                out.push(x);
                if m > 0 {
                    out.push(x);
                }
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }

    #[test]
    fn scaling_property() {
        let b = ScalingBasis::new(7, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for j in 0..7 {
            let x = Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let k = rng.gen_range(1.0..30.0);
            let (_, g, dk) = b.eval(j, k, x);
            assert!((dk - x.dot(&g) / k).abs() < 1e-12);
        }
    }

    #[test]
    fn g_is_the_k_derivative_of_f() {
        let d = disk();
        let mesh = build_boundary_mesh(&d, 256).unwrap();
        let b = ScalingBasis::new(20, 3);
        let k0 = 7.3;
        let (f, g) = tension_matrices(&b, k0, &mesh).unwrap();
        assert!((&f - f.transpose()).amax() == 0.0);
        assert!(SymmetricEigen::new(f.clone()).eigenvalues.min() > -1e-10 * f.amax());
        let h = 1e-6 * k0;
        let (fp, _) = tension_matrices(&b, k0 + h, &mesh).unwrap();
        let (fm, _) = tension_matrices(&b, k0 - h, &mesh).unwrap();
        let fd = (fp - fm) / (2.0 * h);
        assert!((&fd - &g).amax() < 1e-6 * g.amax());
    }

    #[test]
    fn f_matches_dense_quadrature() {
        let d = disk();
        let mesh = build_boundary_mesh(&d, 128).unwrap();
        let b = ScalingBasis::new(2, 4);
        let k0 = 2.0;
        let (f, _) = tension_matrices(&b, k0, &mesh).unwrap();
        let n = 100_000;
        for i in 0..2 {
            for j in 0..2 {
                let mut s = 0.0;
                for t in 0..n {
                    let th = 2.0 * PI * (t as f64 + 0.5) / n as f64;
                    let x = Vec2::new(th.cos(), th.sin());
                    s += b.eval(i, k0, x).0 * b.eval(j, k0, x).0;
                }
                s *= 2.0 * PI / n as f64;
                assert!((s - f[(i, j)]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn non_star_shaped_or_neumann_is_refused() {
        let d = disk().with_origin(Vec2::new(1.5, 0.0));
        let mesh = build_boundary_mesh(&d, 64).unwrap();
        assert!(matches!(tension_matrices(&ScalingBasis::new(4, 0), 3.0, &mesh), Err(Error::InvalidDomain(_))));
        let n = Domain::disk(1.0, BoundaryCondition::NEUMANN).unwrap();
        assert!(sweep(&n, 3.0, 4.0, None, &ScalingOptions::default()).is_err());
    }

    #[test]
    fn disk_sweep_finds_every_level() {
        let res = sweep(&disk(), 5.0, 10.0, None, &ScalingOptions::default()).unwrap();
        let want = disk_levels(5.0, 10.0);
        let got = res.wavenumbers();
        assert_eq!(got.len(), want.len(), "got {got:?}\nwant {want:?}");
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-8 * b, "{a} vs {b}");
        }
    }

    #[test]
    fn gap_window_is_empty() {
        // j_{0,1} = 2.4048 and j_{1,1} = 3.8317 leave a gap around 3.1.
        let d = disk();
        let opts = ScalingOptions::default();
        let b = ScalingBasis::for_wavenumber(&d, 4.0, opts.basis_factor, opts.basis_extra, opts.seed);
        let mesh = build_boundary_mesh(&d, 512).unwrap();
        let w = window(&b, &mesh, 3.1, 0.3, &opts).unwrap();
        assert!(w.levels.is_empty(), "{:?}", w.levels);
    }

    fn deformed() -> Domain {
        Domain::radial(vec![1.0, 0.0, 0.05, 0.03], vec![], BoundaryCondition::Dirichlet).unwrap()
    }

    fn deformed_sweep() -> &'static SweepResult {
        static CELL: std::sync::OnceLock<SweepResult> = std::sync::OnceLock::new();
        CELL.get_or_init(|| {
            let mut r = sweep(&deformed(), 20.0, 21.0, None, &ScalingOptions::default()).unwrap();
            r.check_rellich(160).unwrap();
            r
        })
    }

    fn disk_window() -> (ScalingBasis, BoundaryMesh) {
        let d = disk();
        let opts = ScalingOptions::default();
        let b = ScalingBasis::for_wavenumber(&d, 21.0, opts.basis_factor, opts.basis_extra, opts.seed);
        let mesh = build_boundary_mesh(&d, suggested_node_count(&d, 21.0)).unwrap();
        (b, mesh)
    }

    #[test]
    fn disk_window_matches_bessel_zeros() {
        let (b, mesh) = disk_window();
        let w = window(&b, &mesh, 20.5, 0.5, &ScalingOptions::default()).unwrap();
        let want = disk_levels(20.0, 21.0);
        let got: Vec<f64> = w.levels.iter().map(|c| c.k).collect();
        assert_eq!(got.len(), want.len(), "got {got:?}\nwant {want:?}");
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-6 * b, "{a} vs {b}");
        }
        assert!(w.levels.iter().all(|c| c.tension >= 0.0 && c.tension < 1e-10));
    }

    #[test]
    fn wavenumber_map_has_slope_two() {
        let (b, mesh) = disk_window();
        let exact = disk_levels(19.0, 22.0);
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        // The map is the small-offset limit; the bias grows like (k0 - k)².
        for i in 0..=50 {
            let k0 = 20.0 + 0.02 * i as f64;
            let (_, raw) = raw_candidates(&b, &mesh, k0, 0.1, 1e-14).unwrap();
            for c in raw.iter().filter(|c| c.tension < 1e-3) {
                let ke = exact.iter().cloned().min_by(|a, b| (a - c.k).abs().total_cmp(&(b - c.k).abs())).unwrap();
                xs.push(c.lambda);
                ys.push(k0 - ke);
            }
        }
        let n = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let slope = sxy / sxx;
        assert!(xs.len() > 10 && (slope - 2.0).abs() < 0.01, "slope {slope} from {} pairs", xs.len());
    }

    #[test]
    fn accepted_levels_have_vanishing_boundary_norm() {
        let (b, mesh) = disk_window();
        let w = window(&b, &mesh, 20.5, 0.5, &ScalingOptions::default()).unwrap();
        for c in &w.levels {
            let (f, _) = tension_matrices(&b, c.k, &mesh).unwrap();
            let scale = f.trace() / f.nrows() as f64;
            let x = &c.coeffs;
            let t = x.dot(&(&f * x)) / x.dot(x);
            assert!(t < 1e-10 * scale, "{t} vs {scale}");
        }
    }

    #[test]
    fn deformed_circle_levels_satisfy_rellich() {
        let r = deformed_sweep();
        assert!(!r.levels.is_empty());
        for l in &r.levels {
            assert!(l.tension < r.options.tension_threshold);
            assert!(l.rellich_defect.unwrap().abs() < 1e-4, "{l:?}");
        }
        for t in r.traces(&r.mesh) {
            let vmax = t.value.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let nmax = t.dn.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            assert!(vmax < 1e-6 * nmax, "{vmax} {nmax}");
        }
    }

    #[test]
    fn deformed_circle_count_follows_weyl() {
        let r = deformed_sweep();
        let d = deformed();
        let expect = weyl_estimate(&d, 441.0) - weyl_estimate(&d, 400.0);
        assert!((r.levels.len() as f64 - expect).abs() <= 2.0, "{} vs {expect}", r.levels.len());
    }

    #[test]
    fn overlapping_sweeps_agree_on_close_pairs() {
        // 22.02048 and 22.02066 are split by less than 1e-5 k.
        let opts = ScalingOptions::default();
        let a = sweep(&deformed(), 20.8, 22.2, None, &opts).unwrap().wavenumbers();
        let b = sweep(&deformed(), 21.5, 22.5, None, &opts).unwrap().wavenumbers();
        let pick = |v: &[f64]| v.iter().copied().filter(|&k| (21.6..22.1).contains(&k)).collect::<Vec<_>>();
        let (a, b) = (pick(&a), pick(&b));
        assert_eq!(a.len(), b.len(), "{a:?} vs {b:?}");
        assert_eq!(a.iter().filter(|&&k| (k - 22.0206).abs() < 1e-3).count(), 2);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-8 * x);
        }
    }

    #[test]
    fn larger_basis_leaves_levels_unchanged() {
        let r = deformed_sweep();
        let opts = ScalingOptions { basis_factor: 1.8, basis_extra: 30, ..Default::default() };
        let big = sweep(&deformed(), 20.0, 21.0, None, &opts).unwrap();
        assert!(big.basis.len() as f64 >= 1.2 * r.basis.len() as f64);
        let (a, b) = (r.wavenumbers(), big.wavenumbers());
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-6 * x, "{x} vs {y}");
        }
    }

    #[test]
    fn scaled_q_agrees_with_analytic_disk() {
        use crate::modes::analytic_spectrum;
        use crate::qform::{build_q, theorem_bound_check};
        let d = disk();
        let r = sweep(&d, 20.0, 21.0, None, &ScalingOptions::default()).unwrap();
        let mesh = build_boundary_mesh(&d, 1536).unwrap();
        let q = scaled_q(&r, &mesh).unwrap();
        let analytic: Vec<EigenState> =
            analytic_spectrum(&d, 441.0).unwrap().into_iter().filter(|s| s.energy > 400.0).collect();
        let qa = build_q(&analytic, &mesh).unwrap();
        assert_eq!(q.dim(), qa.dim());
        for i in 0..q.dim() {
            assert!((q.entries[(i, i)] / (2.0 * q.energies[i]) - 1.0).abs() < 1e-4);
        }
        assert!(theorem_bound_check(&q).is_empty());
        // Degenerate pairs come out in an arbitrary rotation, so compare block norms.
        let groups = |e: &[f64]| {
            let mut g: Vec<Vec<usize>> = Vec::new();
            for (i, &x) in e.iter().enumerate() {
                match g.last_mut() {
                    Some(last) if (e[last[0]] - x).abs() < 1e-6 * x => last.push(i),
                    _ => g.push(vec![i]),
                }
            }
            g
        };
        let (ga, gs) = (groups(&qa.energies), groups(&q.energies));
        assert_eq!(ga.iter().map(Vec::len).collect::<Vec<_>>(), gs.iter().map(Vec::len).collect::<Vec<_>>());
        let block = |m: &DMatrix<f64>, a: &[usize], b: &[usize]| {
            a.iter().flat_map(|&i| b.iter().map(move |&j| (i, j))).map(|(i, j)| m[(i, j)].powi(2)).sum::<f64>().sqrt()
        };
        for a in 0..ga.len() {
            for b in 0..ga.len() {
                let want = block(&qa.entries, &ga[a], &ga[b]);
                let got = block(&q.entries, &gs[a], &gs[b]);
                assert!((got - want).abs() < 1e-5 * want.max(1.0), "block ({a},{b}): {got} vs {want}");
            }
        }
    }
}
