//! Band profiles of `⟨φ_i, r² φ_j⟩` and their semiclassical prediction.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::billiard::{evolve_in, observable_series, random_state, RadialBoundary};
use super::spectrum::{pooled_spectral_density, SpectralEstimate};
use crate::error::{Error, Result};
use crate::geometry::{interior_quadrature, Domain};
use crate::qform::QMatrix;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct EnsembleConfig {
    pub trajectories: usize,
    pub duration: f64,
    pub dt: f64,
    pub segment_len: usize,
    pub seed: u64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig { trajectories: 64, duration: 1e4, dt: 0.05, segment_len: 2048, seed: 0xb111 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EnsembleResult {
    pub config: EnsembleConfig,
    pub spectrum: SpectralEstimate,
    /// Pooled time average of `r²`.
    pub time_average: f64,
    pub per_trajectory_means: Vec<f64>,
    pub space_average: f64,
    pub bounces: usize,
    pub speed_error: f64,
}

pub fn mean_free_path(domain: &Domain) -> f64 {
    std::f64::consts::PI * domain.area() / domain.perimeter()
}

/// `∫ r² dV / vol` about the domain origin.
pub fn space_average_r2(domain: &Domain) -> Result<f64> {
    let iq = interior_quadrature(domain, 256)?;
    Ok(iq.integrate(|p| p.norm_squared()) / iq.area())
}

/// Liouville-distributed trajectories and the pooled spectrum of `r²`.
pub fn run_ensemble(domain: &Domain, cfg: &EnsembleConfig) -> Result<EnsembleResult> {
    let mfp = mean_free_path(domain);
    if cfg.dt > 0.25 * mfp {
        return Err(Error::OutOfRange(format!(
            "sample spacing {} exceeds a quarter of the mean free path {mfp}",
            cfg.dt
        )));
    }
    if cfg.trajectories == 0 {
        return Err(Error::OutOfRange("ensemble needs at least one trajectory".into()));
    }
    let wall = RadialBoundary::new(domain)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let starts: Vec<_> = (0..cfg.trajectories).map(|_| random_state(domain, &mut rng)).collect();
    let runs: Vec<(Vec<f64>, usize, f64)> = starts
        .into_par_iter()
        .map(|s| {
            let traj = evolve_in(&wall, s, domain.origin_offset, cfg.duration)?;
            Ok((observable_series(&traj, cfg.dt), traj.bounces.len(), traj.speed_error()))
        })
        .collect::<Result<_>>()?;
    let per_trajectory_means: Vec<f64> = runs.iter().map(|r| r.0.iter().sum::<f64>() / r.0.len() as f64).collect();
    let bounces = runs.iter().map(|r| r.1).sum();
    let speed_error = runs.iter().map(|r| r.2).fold(0.0, f64::max);
    let series: Vec<Vec<f64>> = runs.into_iter().map(|r| r.0).collect();
    let spectrum = pooled_spectral_density(&series, cfg.dt, cfg.segment_len)?;
    Ok(EnsembleResult {
        config: *cfg,
        time_average: spectrum.mean,
        spectrum,
        per_trajectory_means,
        space_average: space_average_r2(domain)?,
        bounces,
        speed_error,
    })
}

/// `var ⟨φ_i, r² φ_j⟩ ≈ C̃(ω_ij) / (vol √E)` with `ω_ij = √E_i - √E_j`.
#[derive(Clone, Debug, Serialize)]
pub struct FpPrediction {
    pub energy: f64,
    pub volume: f64,
    pub spectrum: SpectralEstimate,
}

pub fn fp_prediction(energy: f64, spectrum: &SpectralEstimate, volume: f64) -> FpPrediction {
    FpPrediction { energy, volume, spectrum: spectrum.clone() }
}

impl FpPrediction {
    /// Predicted variance of `⟨φ_i, r² φ_j⟩` at frequency `omega`, energy `e`.
    pub fn variance(&self, omega: f64, e: f64) -> f64 {
        self.spectrum.at(omega) / (self.volume * e.sqrt())
    }

    /// Curve on the spectrum grid at the reference energy.
    pub fn curve(&self) -> Vec<(f64, f64)> {
        self.spectrum.omega.iter().map(|&w| (w, self.variance(w, self.energy))).collect()
    }

    /// `(C̃(0) / 16 vol)^{1/2}`: since `Q_ij = (E_i - E_j)² ⟨φ_i, r² φ_j⟩ / 4`,
    /// typical `|Q_ij|` is this times `E^{-1/4} (E_i - E_j)²`.
    pub fn q_coefficient(&self) -> f64 {
        (self.spectrum.zero_frequency().0 / (16.0 * self.volume)).sqrt()
    }

    pub fn q_magnitude(&self, e_i: f64, e_j: f64) -> f64 {
        let e = 0.5 * (e_i + e_j);
        self.q_coefficient() * e.powf(-0.25) * (e_i - e_j).powi(2)
    }

    /// Predicted window supremum of `|Q_ij| / 2E` for `|E_i - E| <= c E^β`,
    /// which decays like `E^{2β - 5/4}`.
    pub fn window_trend(&self, energy: f64, beta: f64, c: f64) -> f64 {
        2.0 * c * c * self.q_coefficient() * energy.powf(improved_exponent(beta))
    }
}

pub fn improved_exponent(beta: f64) -> f64 {
    2.0 * beta - 1.25
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ProfileOptions {
    pub bin_width: f64,
    pub max_omega: f64,
    /// Bins with fewer pairs are dropped.
    pub min_count: usize,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions { bin_width: 0.2, max_omega: 4.0, min_count: 5 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProfilePair {
    pub i: usize,
    pub j: usize,
    pub omega: f64,
    pub energy: f64,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BandProfile {
    pub energy: f64,
    pub bin_width: f64,
    pub omega: Vec<f64>,
    /// Mean square of `⟨φ_i, r² φ_j⟩` per bin (the off-diagonal mean vanishes).
    pub empirical: Vec<f64>,
    pub counts: Vec<usize>,
    pub predicted: Option<Vec<f64>>,
    pub dropped_bins: Vec<f64>,
    /// Pairs left out because `E_i = E_j` to within `1e-9 E`.
    pub degenerate_pairs: usize,
    #[serde(skip)]
    pub pairs: Vec<Vec<ProfilePair>>,
}

pub const MIN_LEVELS: usize = 50;

pub const RESOLVED_TOL: f64 = 0.1;

fn profile(energies: &[f64], value: impl Fn(usize, usize) -> f64, opts: &ProfileOptions) -> Result<BandProfile> {
    let n = energies.len();
    if n < MIN_LEVELS {
        return Err(Error::InsufficientData(format!("band profile needs at least {MIN_LEVELS} levels, got {n}")));
    }
    if !(opts.bin_width > 0.0 && opts.max_omega > 0.0) {
        return Err(Error::OutOfRange("bin width and maximum frequency must be positive".into()));
    }
    let nbins = (opts.max_omega / opts.bin_width).ceil() as usize;
    let mut bins: Vec<Vec<ProfilePair>> = vec![Vec::new(); nbins];
    let mut degenerate = 0;
    for i in 0..n {
        for j in 0..i {
            let (ei, ej) = (energies[i], energies[j]);
            if (ei - ej).abs() <= 1e-9 * ei.max(ej) {
                degenerate += 1;
                continue;
            }
            let omega = (ei.sqrt() - ej.sqrt()).abs();
            let b = (omega / opts.bin_width).floor() as usize;
            if b < nbins {
                bins[b].push(ProfilePair { i, j, omega, energy: 0.5 * (ei + ej), value: value(i, j) });
            }
        }
    }
    let mut out = BandProfile {
        energy: energies.iter().sum::<f64>() / n as f64,
        bin_width: opts.bin_width,
        omega: Vec::new(),
        empirical: Vec::new(),
        counts: Vec::new(),
        predicted: None,
        dropped_bins: Vec::new(),
        degenerate_pairs: degenerate,
        pairs: Vec::new(),
    };
    for (b, pairs) in bins.into_iter().enumerate() {
        let center = (b as f64 + 0.5) * opts.bin_width;
        if pairs.len() < opts.min_count.max(1) {
            out.dropped_bins.push(center);
            continue;
        }
        out.omega.push(center);
        out.empirical.push(pairs.iter().map(|p| p.value * p.value).sum::<f64>() / pairs.len() as f64);
        out.counts.push(pairs.len());
        out.pairs.push(pairs);
    }
    Ok(out)
}

/// Profile from `Q`, reading `⟨φ_i, r² φ_j⟩ = 4 Q_ij / (E_i - E_j)²`.
pub fn band_profile_from_q(q: &QMatrix, opts: &ProfileOptions) -> Result<BandProfile> {
    let e = &q.energies;
    profile(e, |i, j| 4.0 * q.entries[(i, j)] / (e[i] - e[j]).powi(2), opts)
}

/// Profile from interior matrix elements `⟨φ_i, r² φ_j⟩`.
pub fn band_profile_from_r2(a: &DMatrix<f64>, energies: &[f64], opts: &ProfileOptions) -> Result<BandProfile> {
    if a.nrows() != energies.len() || a.ncols() != energies.len() {
        return Err(Error::OutOfRange(format!("matrix is {:?} for {} levels", a.shape(), energies.len())));
    }
    profile(energies, |i, j| a[(i, j)], opts)
}

impl BandProfile {
    /// Attach the pair-averaged prediction `C̃(ω_ij) / (vol √E_ij)`.
    pub fn with_prediction(mut self, fp: &FpPrediction) -> Self {
        let pred = self
            .pairs
            .iter()
            .map(|ps| ps.iter().map(|p| fp.variance(p.omega, p.energy)).sum::<f64>() / ps.len() as f64)
            .collect();
        self.predicted = Some(pred);
        self
    }

    /// Pearson correlation of log empirical and log predicted profiles.
    pub fn log_correlation(&self) -> Option<f64> {
        let pred = self.predicted.as_ref()?;
        let pts: Vec<(f64, f64)> = self
            .empirical
            .iter()
            .zip(pred)
            .filter(|(a, b)| **a > 0.0 && **b > 0.0)
            .map(|(a, b)| (a.ln(), b.ln()))
            .collect();
        pearson(&pts)
    }
}

fn pearson(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    Some(sxy / (sxx * syy).sqrt())
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub stderr: f64,
    pub pairs: usize,
}

/// Slope `s` of the model `Q_ij ~ N(0, c |E_i - E_j|^{2s})` over pairs with
/// `|√E_i - √E_j| <= max_omega`, fitted by maximum likelihood.
///
/// Selection-rule zeros lower `c` but leave `s` alone. With interior elements
/// `r2 = ⟨φ_i, r² φ_j⟩`, pairs where `Q_ij` and `(E_i - E_j)² r2_ij / 4`
/// differ by more than `RESOLVED_TOL |Q_ij|` are skipped as unresolved
/// (near-degenerate partners).
pub fn near_diagonal_slope(q: &QMatrix, max_omega: f64, r2: Option<&DMatrix<f64>>) -> Option<SlopeFit> {
    let e = &q.energies;
    let mut pts = Vec::new();
    for i in 0..q.dim() {
        for j in 0..i {
            let de = (e[i] - e[j]).abs();
            let v = q.entries[(i, j)];
            if !(de > 1e-9 * e[i].max(e[j]) && (e[i].sqrt() - e[j].sqrt()).abs() <= max_omega && v != 0.0) {
                continue;
            }
            if let Some(a) = r2 {
                if (v - 0.25 * de * de * a[(i, j)]).abs() > RESOLVED_TOL * v.abs() {
                    continue;
                }
            }
            pts.push((de.ln(), v * v));
        }
    }
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let xm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - xm).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    // The profile likelihood is convex in s; its derivative vanishes where the
    // Q²-weighted mean of log|ΔE| equals the plain mean, and the weighted mean
    // decreases with s.
    let excess = |s: f64| {
        let w: Vec<f64> = pts.iter().map(|p| p.1.ln() - 2.0 * s * (p.0 - xm)).collect();
        let m = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (num, den) = pts.iter().zip(&w).fold((0.0, 0.0), |(a, b), (p, w)| {
            let x = (w - m).exp();
            (a + x * p.0, b + x)
        });
        num / den - xm
    };
    let (mut lo, mut hi) = (-20.0, 20.0);
    if excess(lo) < 0.0 || excess(hi) > 0.0 {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(SlopeFit { slope: 0.5 * (lo + hi), stderr: 1.0 / (2.0 * sxx).sqrt(), pairs: pts.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundaryCondition;
    use crate::modes::analytic_spectrum;
    use crate::qform::{build_q, r2_matrix};
    use crate::geometry::build_boundary_mesh;

    fn deformed() -> Domain {
        Domain::radial(vec![1.0, 0.0, 0.05, 0.03], vec![], BoundaryCondition::Dirichlet).unwrap()
    }

    #[test]
    fn prediction_scalings() {
        let d = deformed();
        let cfg = EnsembleConfig { trajectories: 8, duration: 2000.0, segment_len: 1024, ..Default::default() };
        let ens = run_ensemble(&d, &cfg).unwrap();
        let fp = fp_prediction(400.0, &ens.spectrum, d.area());
        assert_eq!(fp.q_magnitude(400.0, 400.0), 0.0);
        let r = fp.variance(0.3, 800.0) / fp.variance(0.3, 400.0);
        assert!((r - 2f64.powf(-0.5)).abs() < 1e-12);
        assert_eq!(improved_exponent(0.0), -1.25);
        assert!(ens.spectrum.zero_frequency().0 > 0.0);
    }

    #[test]
    fn q_and_interior_profiles_agree() {
        let d = Domain::disk(1.0, BoundaryCondition::Dirichlet).unwrap();
        let states: Vec<_> = analytic_spectrum(&d, 900.0).unwrap().into_iter().filter(|s| s.energy > 300.0).collect();
        let mesh = build_boundary_mesh(&d, 1024).unwrap();
        let q = build_q(&states, &mesh).unwrap();
        let iq = interior_quadrature(&d, 200).unwrap();
        let a = r2_matrix(&states, &iq);
        let opts = ProfileOptions { bin_width: 0.5, max_omega: 3.0, min_count: 1 };
        let p1 = band_profile_from_q(&q, &opts).unwrap();
        let p2 = band_profile_from_r2(&a, &q.energies, &opts).unwrap();
        assert_eq!(p1.counts, p2.counts);
        assert!(p1.degenerate_pairs > 0);
        for (x, y) in p1.empirical.iter().zip(&p2.empirical) {
            assert!((x - y).abs() <= 1e-6 * x.abs().max(1e-6), "{x} vs {y}");
        }
    }

    #[test]
    fn too_few_levels_is_an_error() {
        let d = Domain::disk(1.0, BoundaryCondition::Dirichlet).unwrap();
        let states = analytic_spectrum(&d, 100.0).unwrap();
        let mesh = build_boundary_mesh(&d, 256).unwrap();
        let q = build_q(&states, &mesh).unwrap();
        assert!(matches!(band_profile_from_q(&q, &ProfileOptions::default()), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn slope_recovers_planted_scaling() {
        use crate::modes::ModeLabel;
        use rand::Rng;
        use rand_distr::StandardNormal;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 120;
        let mut energies: Vec<f64> = (0..n).map(|_| rng.gen_range(300.0..500.0)).collect();
        energies.sort_by(f64::total_cmp);
        let mut entries = DMatrix::zeros(n, n);
        for i in 0..n {
            entries[(i, i)] = 2.0 * energies[i];
            for j in 0..i {
                // Half the pairs are exact zeros, as for a mirror-symmetric shape.
                let x: f64 = if (i + j) % 2 == 0 { 0.03 * rng.sample::<f64, _>(StandardNormal) } else { 0.0 };
                entries[(i, j)] = 0.25 * (energies[i] - energies[j]).powi(2) * x;
                entries[(j, i)] = entries[(i, j)];
            }
        }
        let d = Domain::disk(1.0, BoundaryCondition::Dirichlet).unwrap();
        let q = QMatrix {
            energies,
            labels: (0..n as u32).map(|index| ModeLabel::Numerical { index }).collect(),
            entries,
            origin: d.origin_offset,
            bc: d.bc,
            r_max: 1.0,
        };
        let fit = near_diagonal_slope(&q, 2.0, None).unwrap();
        assert!(fit.pairs > 100);
        assert!((fit.slope - 2.0).abs() < 3.0 * fit.stderr, "{fit:?}");
        assert!(fit.stderr < 0.1);
    }
}
