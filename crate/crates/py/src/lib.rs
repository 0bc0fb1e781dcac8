//! Python bindings: domains, closed-form spectra, `Q` matrices, scaling
//! sweeps and the derived boundary identities.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use qortho::config::{parse_domain, DomainConfig};
use qortho::geometry::{build_boundary_mesh, suggested_node_count, BoundaryCondition, Vec2};
use qortho::modes::{analytic_spectrum, lowest_states, EigenState};
use qortho::qform::build_q;
use qortho::scaling::{sweep, ScalingOptions};
use qortho::symid::system::{assemble_m, invert, standard_scalars, standard_vectors};
use qortho::symid::Identity;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// `"dirichlet"`, `"neumann"` or `"robin"` (which needs `gamma`).
pub fn parse_bc(bc: &str, gamma: Option<f64>) -> Result<BoundaryCondition, String> {
    match (bc.to_ascii_lowercase().as_str(), gamma) {
        ("dirichlet", None) => Ok(BoundaryCondition::Dirichlet),
        ("neumann", None) => Ok(BoundaryCondition::NEUMANN),
        ("robin", Some(gamma)) => Ok(BoundaryCondition::Robin { gamma }),
        ("robin", None) => Err("bc 'robin' requires gamma".into()),
        ("dirichlet" | "neumann", Some(_)) => Err(format!("gamma only applies to bc 'robin', not '{bc}'")),
        _ => Err(format!("unknown boundary condition '{bc}' (expected dirichlet, neumann or robin)")),
    }
}

#[pyclass(frozen, name = "Domain", module = "pyqortho")]
pub struct PyDomain {
    inner: qortho::geometry::Domain,
}

#[pymethods]
impl PyDomain {
    #[staticmethod]
    #[pyo3(signature = (radius = 1.0, bc = "dirichlet", gamma = None))]
    fn disk(radius: f64, bc: &str, gamma: Option<f64>) -> PyResult<Self> {
        let inner = qortho::geometry::Domain::disk(radius, parse_bc(bc, gamma).map_err(err)?).map_err(err)?;
        Ok(PyDomain { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (a, b, bc = "dirichlet", gamma = None))]
    fn rectangle(a: f64, b: f64, bc: &str, gamma: Option<f64>) -> PyResult<Self> {
        let inner = qortho::geometry::Domain::rectangle(a, b, parse_bc(bc, gamma).map_err(err)?).map_err(err)?;
        Ok(PyDomain { inner })
    }

    /// `rho(theta) = cos[0] + sum cos[k] cos(k theta) + sin[k-1] sin(k theta)`.
    #[staticmethod]
    #[pyo3(signature = (cos, sin = Vec::new(), bc = "dirichlet", gamma = None))]
    fn radial(cos: Vec<f64>, sin: Vec<f64>, bc: &str, gamma: Option<f64>) -> PyResult<Self> {
        let inner = qortho::geometry::Domain::radial(cos, sin, parse_bc(bc, gamma).map_err(err)?).map_err(err)?;
        Ok(PyDomain { inner })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(PyDomain { inner: parse_domain(text).map_err(err)? })
    }

    fn to_toml(&self) -> String {
        DomainConfig::from_domain(&self.inner).to_toml()
    }

    fn with_origin(&self, x: f64, y: f64) -> Self {
        PyDomain { inner: self.inner.clone().with_origin(Vec2::new(x, y)) }
    }

    fn area(&self) -> f64 {
        self.inner.area()
    }

    fn perimeter(&self) -> f64 {
        self.inner.perimeter()
    }

    fn weyl_estimate(&self, e: f64) -> f64 {
        qortho::modes::weyl_estimate(&self.inner, e)
    }

    fn __repr__(&self) -> String {
        format!("Domain({:?}, bc={}, origin=({}, {}))", self.inner.shape, self.inner.bc.name(), self.inner.origin_offset.x, self.inner.origin_offset.y)
    }
}

fn states(d: &PyDomain, emax: Option<f64>, modes: Option<usize>) -> PyResult<Vec<EigenState>> {
    match (emax, modes) {
        (_, Some(n)) => lowest_states(&d.inner, n).map_err(err),
        (Some(e), None) => analytic_spectrum(&d.inner, e).map_err(err),
        (None, None) => Err(PyValueError::new_err("pass emax or modes")),
    }
}

/// Closed-form eigenvalues, ascending, with multiplicity.
#[pyfunction]
#[pyo3(signature = (domain, emax = None, modes = None))]
fn energies(domain: &PyDomain, emax: Option<f64>, modes: Option<usize>) -> PyResult<Vec<f64>> {
    Ok(states(domain, emax, modes)?.iter().map(|s| s.energy).collect())
}

/// `(energies, Q)` with `Q` as a list of rows.
#[pyfunction]
#[pyo3(signature = (domain, emax = None, modes = None))]
fn q_matrix(domain: &PyDomain, emax: Option<f64>, modes: Option<usize>) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
    let st = states(domain, emax, modes)?;
    let kmax = st.last().map_or(1.0, |s| s.k);
    let mesh = build_boundary_mesh(&domain.inner, suggested_node_count(&domain.inner, kmax)).map_err(err)?;
    let q = build_q(&st, &mesh).map_err(err)?;
    let rows = q.entries.row_iter().map(|r| r.iter().copied().collect()).collect();
    Ok((q.energies, rows))
}

/// Dirichlet wavenumbers in `[k_lo, k_hi]` found by the scaling method.
#[pyfunction]
fn sweep_wavenumbers(domain: &PyDomain, k_lo: f64, k_hi: f64) -> PyResult<Vec<f64>> {
    let r = sweep(&domain.inner, k_lo, k_hi, None, &ScalingOptions::default()).map_err(err)?;
    Ok(r.wavenumbers())
}

/// Boundary identity for scalar `n` (1-based): row `n` of `M^-1`, or the
/// equal-energy identity when `equal` is true.
#[pyfunction]
#[pyo3(signature = (n, equal = false))]
fn identity(n: usize, equal: bool) -> PyResult<String> {
    if !(1..=8).contains(&n) {
        return Err(PyValueError::new_err(format!("scalar index must be between 1 and 8, got {n}")));
    }
    let m = assemble_m(&standard_vectors(), &standard_scalars()).map_err(err)?;
    let id = if equal {
        Identity::equal(&m, n - 1).map_err(err)?
    } else {
        Identity::unequal(&invert(&m).map_err(err)?, n - 1).map_err(err)?
    };
    Ok(id.render())
}

#[pymodule]
fn pyqortho(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDomain>()?;
    m.add_function(wrap_pyfunction!(energies, m)?)?;
    m.add_function(wrap_pyfunction!(q_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_wavenumbers, m)?)?;
    m.add_function(wrap_pyfunction!(identity, m)?)?;
    Ok(())
}
