//! `mesh` and `origin`.

use anyhow::Result;
use qortho::dynamics::{run_ensemble, EnsembleConfig};
use qortho::geometry::{
    build_boundary_mesh, max_radius, min_enclosing_circle, star_shaped_margin, suggested_node_count, Shape, Vec2,
};

use crate::output::{num, Check};
use crate::Ctx;

const SAMPLES: usize = 4096;

pub fn mesh(ctx: &mut Ctx) -> Result<()> {
    let d = ctx.domain()?;
    let p = &ctx.run.params;
    let k = p.krange.map(|r| r[1]).or(p.emax.map(f64::sqrt)).unwrap_or(20.0);
    let m = p.nodes.unwrap_or_else(|| suggested_node_count(&d, k));
    let mesh = build_boundary_mesh(&d, m)?;
    let rows = mesh.nodes.iter().enumerate().map(|(i, n)| {
        let x = mesh.intrinsic(i);
        vec![i.to_string(), num(x.x), num(x.y), num(n.normal.x), num(n.normal.y), num(n.r_n), num(n.weight)]
    });
    ctx.out.csv("mesh.csv", &["i", "x [L]", "y [L]", "n_x [1]", "n_y [1]", "r_n [L]", "weight [L]"], rows)?;

    let margin = star_shaped_margin(&d)?;
    let circle = min_enclosing_circle(&d, SAMPLES)?;
    let c = circle.center + d.origin_offset;
    ctx.say(format!("nodes {}", mesh.len()));
    ctx.say(format!("area {}", d.area()));
    ctx.say(format!("perimeter {} (quadrature {})", d.perimeter(), mesh.total_weight));
    ctx.say(format!("min r_n {margin} ({})", if margin > 0.0 { "strictly star-shaped" } else { "not strictly star-shaped" }));
    ctx.say(format!("escribed circle center ({}, {}) radius {}", c.x, c.y, circle.radius));
    let smooth = matches!(d.shape, Shape::Radial(_));
    let rel = (mesh.total_weight - d.perimeter()).abs() / d.perimeter();
    ctx.check(Check::below("perimeter quadrature, relative", rel, if smooth { 1e-10 } else { 1e-12 }));
    ctx.check(Check::below("negative weights", mesh.nodes.iter().filter(|n| n.weight <= 0.0).count() as f64, 0.5));
    Ok(())
}

pub fn origin(ctx: &mut Ctx) -> Result<()> {
    let d = ctx.domain()?;
    let circle = min_enclosing_circle(&d, SAMPLES)?;
    let best = circle.center + d.origin_offset;
    let mut cands = vec![("configured", d.origin_offset), ("escribed center", best)];
    if d.origin_offset != Vec2::zeros() {
        cands.push(("zero", Vec2::zeros()));
    }
    let p = ctx.run.params.clone();
    let mut rows = Vec::new();
    let mut consts = Vec::new();
    for (label, o) in &cands {
        let dd = d.clone().with_origin(*o);
        let r = max_radius(&dd, SAMPLES);
        let margin = star_shaped_margin(&dd)?;
        let mut row = vec![label.to_string(), num(o.x), num(o.y), num(r), num(r * r / 4.0), num(margin)];
        if p.spectra {
            let cfg = EnsembleConfig {
                trajectories: p.trajectories,
                duration: p.duration,
                dt: p.dt,
                segment_len: p.segment,
                seed: p.seed,
            };
            let ens = run_ensemble(&dd, &cfg)?;
            row.push(num(ens.spectrum.zero_frequency().0));
        }
        ctx.say(format!("{label}: origin ({}, {}), R {r}, C = R^2/4 = {}, min r_n {margin}", o.x, o.y, r * r / 4.0));
        consts.push(r * r / 4.0);
        rows.push(row);
    }
    let mut header = vec!["origin", "x [L]", "y [L]", "R_max [L]", "C [L^2]", "min r_n [L]"];
    if p.spectra {
        ctx.seed("ensemble", p.seed);
        header.push("C~(0) [L^4 T]");
    }
    ctx.out.csv("origins.csv", &header, rows)?;
    // The escribed center minimizes R, up to boundary sampling.
    let excess = consts[1] - consts.iter().cloned().fold(f64::INFINITY, f64::min);
    ctx.check(Check::at_most("escribed-center C minus smallest candidate C", excess, 1e-9));
    Ok(())
}
