//! TOML domain configuration.
//!
//! ```toml
//! shape  = "radial"            # or "rectangle"
//! cos    = [1.0, 0.0, 0.05, 0.03]  # rho(theta) = cos[0] + sum cos[k] cos(k theta) ...
//! sin    = []                  # ... + sum sin[k-1] sin(k theta)
//! # a = 1.0                    # rectangle side along x
//! # b = 1.0                    # rectangle side along y
//! origin = [0.0, 0.0]          # origin offset t; coordinates are r - t
//! bc     = "dirichlet"         # "dirichlet" | "neumann" | "robin"
//! # gamma = 1.0                # Robin coefficient (required for "robin")
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundaryCondition, Domain, FourierRadius, Shape, Vec2};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Radial,
    Rectangle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BcKind {
    Dirichlet,
    Neumann,
    Robin,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub shape: ShapeKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cos: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sin: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default)]
    pub origin: [f64; 2],
    pub bc: BcKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

impl DomainConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("domain config always serializes")
    }

    pub fn to_domain(&self) -> Result<Domain> {
        let shape = match self.shape {
            ShapeKind::Radial => {
                if self.a.is_some() || self.b.is_some() {
                    return Err(Error::Config("keys `a`/`b` only apply to shape = \"rectangle\"".into()));
                }
                if self.cos.is_empty() {
                    return Err(Error::Config("radial shape needs `cos = [mean radius, ...]`".into()));
                }
                Shape::Radial(FourierRadius { cos: self.cos.clone(), sin: self.sin.clone() })
            }
            ShapeKind::Rectangle => {
                if !self.cos.is_empty() || !self.sin.is_empty() {
                    return Err(Error::Config("keys `cos`/`sin` only apply to shape = \"radial\"".into()));
                }
                match (self.a, self.b) {
                    (Some(a), Some(b)) => Shape::Rectangle { a, b },
                    _ => return Err(Error::Config("rectangle needs both `a` and `b`".into())),
                }
            }
        };
        let bc = match (self.bc, self.gamma) {
            (BcKind::Dirichlet, None) => BoundaryCondition::Dirichlet,
            (BcKind::Neumann, None) => BoundaryCondition::NEUMANN,
            (BcKind::Robin, Some(gamma)) => BoundaryCondition::Robin { gamma },
            (BcKind::Robin, None) => return Err(Error::Config("bc = \"robin\" requires `gamma`".into())),
            (_, Some(_)) => return Err(Error::Config("`gamma` only applies to bc = \"robin\"".into())),
        };
        Domain::new(shape, Vec2::new(self.origin[0], self.origin[1]), bc)
    }

    pub fn from_domain(domain: &Domain) -> Self {
        let (shape, cos, sin, a, b) = match &domain.shape {
            Shape::Radial(f) => (ShapeKind::Radial, f.cos.clone(), f.sin.clone(), None, None),
            Shape::Rectangle { a, b } => (ShapeKind::Rectangle, vec![], vec![], Some(*a), Some(*b)),
        };
        let (bc, gamma) = match domain.bc {
            BoundaryCondition::Dirichlet => (BcKind::Dirichlet, None),
            BoundaryCondition::Robin { gamma: 0.0 } => (BcKind::Neumann, None),
            BoundaryCondition::Robin { gamma } => (BcKind::Robin, Some(gamma)),
        };
        DomainConfig {
            shape,
            cos,
            sin,
            a,
            b,
            origin: [domain.origin_offset.x, domain.origin_offset.y],
            bc,
            gamma,
        }
    }
}

pub fn parse_domain(text: &str) -> Result<Domain> {
    DomainConfig::parse(text)?.to_domain()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_deformed_circle() {
        let d = parse_domain(
            "shape = \"radial\"\ncos = [1.0, 0.0, 0.05, 0.03]\norigin = [0.1, 0.0]\nbc = \"dirichlet\"\n",
        )
        .unwrap();
        assert_eq!(d.origin_offset, Vec2::new(0.1, 0.0));
        assert!(d.bc.is_dirichlet());
    }

    #[test]
    fn unknown_key_lists_valid_keys() {
        let err = parse_domain("shape = \"radial\"\ncos = [1.0]\nbc = \"dirichlet\"\nradius = 2\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("radius") && msg.contains("origin"), "{msg}");
    }

    #[test]
    fn malformed_coefficients_report_location() {
        let err = parse_domain("shape = \"radial\"\ncos = [1.0, oops]\nbc = \"dirichlet\"\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn robin_needs_gamma() {
        assert!(parse_domain("shape = \"radial\"\ncos = [1.0]\nbc = \"robin\"\n").is_err());
        let d = parse_domain("shape = \"rectangle\"\na = 2.0\nb = 1.0\nbc = \"robin\"\ngamma = 1.5\n").unwrap();
        assert_eq!(d.bc, BoundaryCondition::Robin { gamma: 1.5 });
    }

    proptest! {
        #[test]
        fn config_round_trips(
            c0 in 0.5f64..2.0,
            c2 in -0.1f64..0.1,
            s1 in -0.1f64..0.1,
            ox in -0.3f64..0.3,
            gamma in prop::option::of(-2.0f64..2.0),
        ) {
            let bc = match gamma {
                None => BoundaryCondition::Dirichlet,
                Some(g) => BoundaryCondition::Robin { gamma: g },
            };
            let d = Domain::new(
                Shape::Radial(FourierRadius { cos: vec![c0, 0.0, c2], sin: vec![s1] }),
                Vec2::new(ox, 0.0),
                bc,
            ).unwrap();
            let text = DomainConfig::from_domain(&d).to_toml();
            let back = parse_domain(&text).unwrap();
            prop_assert_eq!(back, d);
        }
    }
}
