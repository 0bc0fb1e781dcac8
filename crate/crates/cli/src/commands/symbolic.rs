//! `derive` and `verify`.

use std::fmt::Write as _;

use anyhow::{bail, Result};
use qortho::geometry::{BoundaryCondition, Domain};
use qortho::modes::lowest_states;
use qortho::symid::poly::ENERGY_NAMES;
use qortho::symid::system::{assemble_m, equal_energy_solve, invert, nullspace, standard_scalars, standard_vectors};
use qortho::symid::verify::{verify_dirichlet_pair, Verification};
use qortho::symid::{verify_identity, CoeffMatrix, Identity, RatFunc, RatMatrix, TrialKind, VerifyGrid, SCALAR_NAMES};
use qortho::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::output::{num, Check};
use crate::Ctx;

const EQUAL_NAMES: [&str; 3] = ["E", "E", "d"];

fn vector_line(v: &[RatFunc], names: &[&str; 3]) -> String {
    let parts: Vec<String> = v.iter().map(|c| c.display_with(names)).collect();
    format!("({})", parts.join(", "))
}

fn is_identity(m: &RatMatrix) -> bool {
    let id = RatMatrix::identity(m.nrows());
    (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| (&m.rows[i][j] - &id.rows[i][j]).is_zero()))
}

fn index(n: usize, what: &str) -> Result<usize> {
    if !(1..=8).contains(&n) {
        bail!("{what} must be between 1 and 8, got {n}");
    }
    Ok(n - 1)
}

pub fn derive(ctx: &mut Ctx, row: Option<usize>, equal: Option<usize>) -> Result<()> {
    let m = assemble_m(&standard_vectors(), &standard_scalars())?;
    let inv = invert(&m)?;
    let exact = is_identity(&inv.mul(&m.to_rational()));
    let mut text = String::new();

    if let Some(n) = row {
        let id = Identity::unequal(&inv, index(n, "--row")?)?;
        let _ = writeln!(text, "row {n} of M^-1, with ℰ = E_u + E_v and ε = E_u - E_v:\n{}", id.render());
        let _ = writeln!(text, "coefficients (E_u, E_v): {}", vector_line(&id.coeffs, &ENERGY_NAMES));
    }
    if let Some(n) = equal {
        let t = index(n, "--equal")?;
        match Identity::equal(&m, t) {
            Ok(id) => {
                let _ = writeln!(text, "equal-energy identity for scalar {n}:\n{}", id.render());
            }
            Err(Error::Inconsistent { .. }) => {
                let _ = writeln!(text, "scalar {n} ({}) has no equal-energy boundary identity", SCALAR_NAMES[t]);
                ctx.check(Check::at_most(&format!("equal-energy system for scalar {n} is consistent"), 1.0, 0.0));
            }
            Err(e) => return Err(e.into()),
        }
    }
    if row.is_none() && equal.is_none() {
        full_derivation(&m, &inv, &mut text)?;
    }
    for line in text.lines() {
        ctx.say(line);
    }
    ctx.out.text("derive.txt", &text)?;
    ctx.check(Check::at_most("M^-1 M - I nonzero entries", if exact { 0.0 } else { 1.0 }, 0.0));
    Ok(())
}

fn full_derivation(m: &CoeffMatrix, inv: &RatMatrix, text: &mut String) -> Result<()> {
    let _ = writeln!(text, "scalars q_b: {}", SCALAR_NAMES.join(" | "));
    let _ = writeln!(text, "div p_a = sum_b M_ab q_b, M =");
    for r in &m.rows {
        let parts: Vec<String> = r.iter().map(|p| p.display_with(&ENERGY_NAMES)).collect();
        let _ = writeln!(text, "  [{}]", parts.join(", "));
    }
    let _ = writeln!(text, "\nunequal energies (rows of M^-1):");
    for t in 0..8 {
        let id = Identity::unequal(inv, t)?;
        let _ = writeln!(text, "({}) {}", t + 1, id.render());
    }
    let at_equal = m.at_equal_energy().to_rational();
    let _ = writeln!(text, "\nat E_u = E_v = E:");
    for z in nullspace(&at_equal) {
        let _ = writeln!(text, "  Nul M   = span {}", vector_line(&z, &EQUAL_NAMES));
    }
    for z in nullspace(&at_equal.transpose()) {
        let _ = writeln!(text, "  Nul M^T = span {}", vector_line(&z, &EQUAL_NAMES));
    }
    for (t, name) in SCALAR_NAMES.iter().enumerate() {
        match equal_energy_solve(m, t) {
            Ok(sol) => {
                let id = Identity { mode: qortho::symid::EnergyMode::Equal, target: t, coeffs: sol.canonical };
                let _ = writeln!(text, "({}) {}", t + 1, id.render());
            }
            Err(Error::Inconsistent { .. }) => {
                let _ = writeln!(text, "({}) ∫ {} dV: inconsistent, no boundary identity", t + 1, name);
            }
            Err(e) => return Err(e.into()),
        }
    }
    let _ = writeln!(text, "\nDirichlet forms (u = v = 0 on the boundary):");
    for t in 0..8 {
        let id = Identity::unequal(inv, t)?;
        if !id.dirichlet_coefficient().is_zero() {
            let _ = writeln!(text, "({}) {}", t + 1, id.render_dirichlet());
        }
    }
    Ok(())
}

struct Row {
    identity: String,
    kind: &'static str,
    v: Verification,
}

pub fn verify(ctx: &mut Ctx) -> Result<()> {
    let d = match &ctx.run.domain {
        Some(_) => ctx.domain()?,
        None => Domain::disk(1.0, BoundaryCondition::Dirichlet)?,
    };
    let p = ctx.run.params.clone();
    let e_hi = p.emax.unwrap_or(90.0);
    if e_hi <= 5.0 {
        bail!("verify draws energies from [5, emax); emax = {e_hi} is too small");
    }
    ctx.seed("pairs", p.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let grid = VerifyGrid::standard(&d)?;
    let m = assemble_m(&standard_vectors(), &standard_scalars())?;
    let inv = invert(&m)?;
    let unequal: Vec<Identity> = (0..8).map(|t| Identity::unequal(&inv, t)).collect::<Result<_, _>>()?;
    let equal: Vec<Identity> = (0..6).map(|t| Identity::equal(&m, t)).collect::<Result<_, _>>()?;

    let mut rows = Vec::new();
    for n in 0..p.pairs {
        let (kind, kname) = if n % 2 == 0 { (TrialKind::PlaneWave, "plane_wave") } else { (TrialKind::FourierBessel, "fourier_bessel") };
        let eu = rng.gen_range(5.0..e_hi);
        let ev = rng.gen_range(5.0..e_hi);
        for id in &unequal {
            let v = verify_identity(id, eu, ev, kind, &grid, &mut rng)?;
            rows.push(Row { identity: format!("unequal {}", id.target + 1), kind: kname, v });
        }
        for id in &equal {
            let v = verify_identity(id, eu, eu, kind, &grid, &mut rng)?;
            rows.push(Row { identity: format!("equal {}", id.target + 1), kind: kname, v });
        }
    }
    if d.bc.is_dirichlet() {
        match lowest_states(&d, 40) {
            Ok(states) => {
                let mut done = 0;
                while done < p.pairs {
                    let (i, j) = (rng.gen_range(0..states.len()), rng.gen_range(0..states.len()));
                    if (states[i].energy - states[j].energy).abs() < 1e-6 {
                        continue;
                    }
                    let v = verify_dirichlet_pair(&unequal[6], &states[i], &states[j], &grid)?;
                    rows.push(Row { identity: "dirichlet 7".into(), kind: "eigenstate", v });
                    done += 1;
                }
            }
            Err(Error::Unsupported(_)) => ctx.say("no closed-form states on this domain; Dirichlet form skipped"),
            Err(e) => return Err(e.into()),
        }
    }

    let worst = rows.iter().map(|r| r.v.residual).fold(0.0, f64::max);
    let warnings = rows.iter().filter(|r| r.v.warning.is_some()).count();
    let csv_rows = rows.iter().map(|r| {
        vec![
            r.identity.clone(),
            r.kind.to_string(),
            num(r.v.e_u),
            num(r.v.e_v),
            num(r.v.volume),
            num(r.v.boundary),
            num(r.v.residual),
        ]
    });
    ctx.out.csv("residuals.csv", &["identity", "field", "E_u [L^-2]", "E_v [L^-2]", "volume", "boundary", "residual [1]"], csv_rows)?;
    ctx.say(format!("{} comparisons, {warnings} ill-conditioned, max residual {worst:.3e}", rows.len()));
    ctx.check(Check::below("max identity residual", worst, 1e-9));
    Ok(())
}
