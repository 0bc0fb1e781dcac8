//! Boundary identities read off from the solved divergence system.

use super::poly::{Poly, DIM, EU, EV, NVARS};
use super::ratfunc::RatFunc;
use super::system::{equal_energy_solve, CoeffMatrix, RatMatrix};
use crate::error::{Error, Result};
use crate::geometry::{BoundaryMesh, BoundaryNode};
use crate::modes::BoundaryTrace;

/// Scalars `q_b`, in basis order.
pub const SCALAR_NAMES: [&str; 8] =
    ["u v", "∇u·∇v", "(r·∇u) v", "(r·∇v) u", "r_i u_ij v_j", "r_i v_ij u_j", "r² u v", "r² ∇u·∇v"];

/// Outward fluxes `n · p_a`, in vector order.
pub const FLUX_NAMES: [&str; 8] =
    ["u_n v", "v_n u", "r_n u v", "r_n ∇u·∇v", "u_r v_n", "v_r u_n", "r² u_n v", "r² v_n u"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnergyMode {
    Unequal,
    Equal,
}

/// `int q_target dV = oint sum_a c_a (n · p_a) dA`.
#[derive(Clone, Debug)]
pub struct Identity {
    pub mode: EnergyMode,
    /// 0-based scalar index.
    pub target: usize,
    pub coeffs: Vec<RatFunc>,
}

/// The eight fluxes at boundary node `i`.
pub fn flux_values(u: &BoundaryTrace, v: &BoundaryTrace, node: &BoundaryNode, i: usize) -> [f64; 8] {
    let r2 = node.pos.norm_squared();
    [
        u.dn[i] * v.value[i],
        v.dn[i] * u.value[i],
        node.r_n * u.value[i] * v.value[i],
        node.r_n * u.grad[i].dot(&v.grad[i]),
        u.dr[i] * v.dn[i],
        v.dr[i] * u.dn[i],
        r2 * u.dn[i] * v.value[i],
        r2 * v.dn[i] * u.value[i],
    ]
}

/// Boundary integrals of the eight fluxes.
pub fn flux_integrals(u: &BoundaryTrace, v: &BoundaryTrace, mesh: &BoundaryMesh) -> Result<[f64; 8]> {
    u.check_mesh(mesh)?;
    v.check_mesh(mesh)?;
    let mut out = [0.0; 8];
    for (i, node) in mesh.nodes.iter().enumerate() {
        let f = flux_values(u, v, node, i);
        for a in 0..8 {
            out[a] += node.weight * f[a];
        }
    }
    Ok(out)
}

impl Identity {
    /// Row `target` of `M^{-1}`.
    pub fn unequal(m_inv: &RatMatrix, target: usize) -> Result<Self> {
        if target >= m_inv.nrows() {
            return Err(Error::OutOfRange(format!("no scalar number {}", target + 1)));
        }
        Ok(Identity { mode: EnergyMode::Unequal, target, coeffs: m_inv.row(target).to_vec() })
    }

    /// Canonical solution of `M^T x = e_target` at equal energy.
    pub fn equal(m: &CoeffMatrix, target: usize) -> Result<Self> {
        let sol = equal_energy_solve(m, target)?;
        Ok(Identity { mode: EnergyMode::Equal, target, coeffs: sol.canonical })
    }

    /// Coefficients at `d = 2`; in equal mode `E = e_u`.
    ///
    /// Unequal-mode coefficients are evaluated in `(ℰ, ε)`, where the
    /// denominators are powers of `ε`; expanding `(E_u - E_v)^3` instead
    /// loses most digits for close energies.
    pub fn coefficient_values(&self, e_u: f64, e_v: f64) -> Vec<f64> {
        let (coeffs, x) = match self.mode {
            EnergyMode::Unequal => (self.display_coefficients().0, [e_u + e_v, e_u - e_v, 2.0]),
            EnergyMode::Equal => (self.coeffs.clone(), [e_u, e_u, 2.0]),
        };
        coeffs.iter().map(|c| c.eval(&x)).collect()
    }

    /// Right-hand side evaluated on a trace pair.
    pub fn boundary_side(
        &self,
        u: &BoundaryTrace,
        v: &BoundaryTrace,
        mesh: &BoundaryMesh,
        e_u: f64,
        e_v: f64,
    ) -> Result<f64> {
        let fl = flux_integrals(u, v, mesh)?;
        Ok(self.coefficient_values(e_u, e_v).iter().zip(fl).map(|(c, f)| c * f).sum())
    }

    /// Boxed form of [`Identity::boundary_side`].
    pub fn evaluator(&self) -> impl Fn(&BoundaryTrace, &BoundaryTrace, &BoundaryMesh, f64, f64) -> Result<f64> + '_ {
        move |u, v, mesh, eu, ev| self.boundary_side(u, v, mesh, eu, ev)
    }

    /// Coefficients written in `ℰ = E_u + E_v`, `ε = E_u - E_v` (unequal mode)
    /// or in the common energy `E` (equal mode).
    pub fn display_coefficients(&self) -> (Vec<RatFunc>, [&'static str; NVARS]) {
        match self.mode {
            EnergyMode::Unequal => {
                let half = Poly::ratio(1, 2);
                let (s, e) = (Poly::var(0), Poly::var(1));
                let subs = [&(&s + &e) * &half, &(&s - &e) * &half, Poly::var(DIM)];
                (self.coeffs.iter().map(|c| c.compose(&subs)).collect(), ["ℰ", "ε", "d"])
            }
            EnergyMode::Equal => (self.coeffs.clone(), ["E", "E", "d"]),
        }
    }

    pub fn render(&self) -> String {
        let (coeffs, names) = self.display_coefficients();
        let terms: Vec<String> = coeffs
            .iter()
            .zip(FLUX_NAMES)
            .filter(|(c, _)| !c.is_zero())
            .map(|(c, f)| format!("[{}] {}", c.display_with(&names), f))
            .collect();
        let rhs = if terms.is_empty() { "0".to_string() } else { terms.join("\n        + ") };
        format!("∫ {} dV\n    = ∮ {} dA", SCALAR_NAMES[self.target], rhs)
    }

    /// Coefficient of `r_n u_n v_n` once `u = v = 0` on the boundary, where
    /// `∇u = n u_n` turns the fourth to sixth fluxes into `r_n u_n v_n`.
    pub fn dirichlet_coefficient(&self) -> RatFunc {
        let s = &self.coeffs[3] + &self.coeffs[4];
        &s + &self.coeffs[5]
    }

    pub fn render_dirichlet(&self) -> String {
        let (coeffs, names) = self.display_coefficients();
        let s = &(&coeffs[3] + &coeffs[4]) + &coeffs[5];
        format!("∫ {} dV = [{}] ∮ r_n u_n v_n dA", SCALAR_NAMES[self.target], s.display_with(&names))
    }

    pub fn dirichlet_boundary_side(
        &self,
        u: &BoundaryTrace,
        v: &BoundaryTrace,
        mesh: &BoundaryMesh,
        e_u: f64,
        e_v: f64,
    ) -> Result<f64> {
        u.check_mesh(mesh)?;
        v.check_mesh(mesh)?;
        let c: f64 = self.coefficient_values(e_u, e_v)[3..6].iter().sum();
        Ok(c * mesh.integrate(|i, node| node.r_n * u.dn[i] * v.dn[i]))
    }
}

/// `(1/(E_u - E_v)) (-1, 1, 0, ..., 0)`: the Green row.
pub fn green_row() -> Vec<RatFunc> {
    let eps = &Poly::var(EU) - &Poly::var(EV);
    let mut row = vec![RatFunc::zero(); 8];
    row[0] = RatFunc::new(Poly::int(-1), eps.clone());
    row[1] = RatFunc::new(Poly::one(), eps);
    row
}
