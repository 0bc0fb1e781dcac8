//! `bandprofile`: classical spectrum of `r²(t)` against quantum matrix elements.

use anyhow::{Context, Result};
use qortho::dynamics::{band_profile_from_r2, fp_prediction, near_diagonal_slope, run_ensemble, EnsembleConfig, ProfileOptions};
use qortho::geometry::interior_quadrature;
use qortho::qform::r2_matrix;

use super::spectral::levels;
use crate::output::{num, Check};
use crate::Ctx;

pub fn bandprofile(ctx: &mut Ctx) -> Result<()> {
    let d = ctx.domain()?;
    let p = ctx.run.params.clone();
    let cfg = EnsembleConfig {
        trajectories: p.trajectories,
        duration: p.duration,
        dt: p.dt,
        segment_len: p.segment,
        seed: p.seed,
    };
    ctx.seed("ensemble", p.seed);
    let ens = run_ensemble(&d, &cfg).context("classical ensemble failed")?;
    let sp = &ens.spectrum;
    let spec_rows = (0..sp.omega.len()).map(|i| vec![num(sp.omega[i]), num(sp.density[i]), num(sp.stderr[i])]);
    ctx.out.csv("spectrum.csv", &["omega [L^-1]", "C~ [L^5]", "stderr [L^5]"], spec_rows)?;
    let parseval = sp.parseval_ratio();
    let ergodic = ens.time_average / ens.space_average - 1.0;
    let (c0, c0_err) = sp.zero_frequency();
    ctx.say(format!(
        "{} trajectories, {} bounces, <r^2>_t = {}, <r^2>_A = {}, C~(0) = {c0:.4e} +- {c0_err:.1e}",
        cfg.trajectories, ens.bounces, ens.time_average, ens.space_average
    ));

    let lv = levels(ctx, &d, 500.0)?;
    let energies = lv.energies();
    let iq = interior_quadrature(&d, p.interior)?;
    let a = r2_matrix(lv.states(), &iq);
    let e_ref = p.fp_energy.unwrap_or(0.5 * (energies[0] + energies[energies.len() - 1]));
    let fp = fp_prediction(e_ref, sp, d.area());
    let opts = ProfileOptions { bin_width: p.bin_width, max_omega: p.max_omega, ..ProfileOptions::default() };
    let profile = band_profile_from_r2(&a, &energies, &opts)?.with_prediction(&fp);
    let predicted = profile.predicted.clone().unwrap_or_default();
    let band_rows = (0..profile.omega.len()).map(|i| {
        vec![num(profile.omega[i]), profile.counts[i].to_string(), num(profile.empirical[i]), num(predicted[i])]
    });
    ctx.out.csv("band.csv", &["omega [L^-1]", "pairs", "empirical [L^4]", "predicted [L^4]"], band_rows)?;
    ctx.say(format!(
        "{} levels, reference E = {e_ref}, {} bins, {} degenerate pairs left out",
        energies.len(),
        profile.omega.len(),
        profile.degenerate_pairs
    ));

    ctx.check(Check::below("max speed error", ens.speed_error, 1e-12));
    ctx.check(Check::below("|Parseval ratio - 1|", (parseval - 1.0).abs(), 0.02));
    ctx.check(Check::below("|<r^2>_t / <r^2>_A - 1|", ergodic.abs(), 0.01));
    if let (Some(e0), Some(p0)) = (profile.empirical.first(), predicted.first()) {
        ctx.check(Check::within("predicted / empirical, first bin", p0 / e0, 1.0 / 3.0, 3.0));
    }
    if let Some(r) = profile.log_correlation() {
        ctx.check(Check::within("log-profile correlation", r, 0.5, 1.0));
    }
    let q = lv.q()?;
    match near_diagonal_slope(&q, p.slope_window, Some(&a)) {
        Some(fit) => {
            ctx.say(format!("near-diagonal slope {:.4} +- {:.4} over {} pairs", fit.slope, fit.stderr, fit.pairs));
            ctx.check(Check::within("near-diagonal slope", fit.slope, 1.8, 2.2));
        }
        None => ctx.say(format!("no resolved pairs with |omega| <= {}", p.slope_window)),
    }
    Ok(())
}
