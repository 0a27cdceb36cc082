//! Radial domains: balls and annuli in dimension `N >= 2`.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Geometric shape of the domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Ball { radius: f64 },
    Annulus { inner: f64, outer: f64 },
}

/// A radial domain: shape plus space dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    #[serde(flatten)]
    pub shape: Shape,
    pub dim: u32,
}

impl Domain {
    pub fn ball(radius: f64, dim: u32) -> Result<Self> {
        let d = Self { shape: Shape::Ball { radius }, dim };
        d.validate()?;
        Ok(d)
    }

    pub fn annulus(inner: f64, outer: f64, dim: u32) -> Result<Self> {
        let d = Self { shape: Shape::Annulus { inner, outer }, dim };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(CoreError::InvalidDomain(format!(
                "dim must be at least 2, got {}",
                self.dim
            )));
        }
        match self.shape {
            Shape::Ball { radius } => {
                if !(radius.is_finite() && radius > 0.0) {
                    return Err(CoreError::InvalidDomain(format!("ball radius {radius} invalid")));
                }
            }
            Shape::Annulus { inner, outer } => {
                if !(inner.is_finite() && outer.is_finite() && 0.0 < inner && inner < outer) {
                    return Err(CoreError::InvalidDomain(format!(
                        "annulus radii ({inner}, {outer}) invalid"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn is_ball(&self) -> bool {
        matches!(self.shape, Shape::Ball { .. })
    }

    /// Inner radius (0 for balls).
    pub fn r_in(&self) -> f64 {
        match self.shape {
            Shape::Ball { .. } => 0.0,
            Shape::Annulus { inner, .. } => inner,
        }
    }

    pub fn r_out(&self) -> f64 {
        match self.shape {
            Shape::Ball { radius } => radius,
            Shape::Annulus { outer, .. } => outer,
        }
    }

    /// `((N-2)/2)^2`, the sharp constant of the radial Hardy inequality.
    /// Singular-weight eigenvalues are meaningful strictly below it.
    pub fn hardy_threshold(&self) -> f64 {
        let s = (self.dim as f64 - 2.0) / 2.0;
        s * s
    }
}

impl std::fmt::Display for Domain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.shape {
            Shape::Ball { radius } => write!(f, "ball({radius};N={})", self.dim),
            Shape::Annulus { inner, outer } => {
                write!(f, "annulus({inner},{outer};N={})", self.dim)
            }
        }
    }
}

impl std::str::FromStr for Domain {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || CoreError::Artifact(format!("unparseable domain `{s}`"));
        let (head, rest) = s.split_once('(').ok_or_else(bad)?;
        let body = rest.strip_suffix(')').ok_or_else(bad)?;
        let (args, dim_part) = body.split_once(";N=").ok_or_else(bad)?;
        let dim: u32 = dim_part.parse().map_err(|_| bad())?;
        match head {
            "ball" => {
                let radius: f64 = args.parse().map_err(|_| bad())?;
                Domain::ball(radius, dim)
            }
            "annulus" => {
                let (a, b) = args.split_once(',').ok_or_else(bad)?;
                let inner: f64 = a.parse().map_err(|_| bad())?;
                let outer: f64 = b.parse().map_err(|_| bad())?;
                Domain::annulus(inner, outer, dim)
            }
            _ => Err(bad()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(Domain::ball(1.0, 3).is_ok());
        assert!(Domain::ball(0.0, 3).is_err());
        assert!(Domain::ball(1.0, 1).is_err());
        assert!(Domain::annulus(0.5, 1.0, 2).is_ok());
        assert!(Domain::annulus(1.0, 0.5, 2).is_err());
        assert!(Domain::annulus(0.0, 1.0, 2).is_err());
    }

    #[test]
    fn hardy_threshold_values() {
        assert_eq!(Domain::ball(1.0, 2).unwrap().hardy_threshold(), 0.0);
        assert_eq!(Domain::ball(1.0, 3).unwrap().hardy_threshold(), 0.25);
        assert_eq!(Domain::ball(1.0, 4).unwrap().hardy_threshold(), 1.0);
    }

    #[test]
    fn display_round_trip() {
        for d in [
            Domain::ball(1.5, 3).unwrap(),
            Domain::annulus(0.5, 1.0, 4).unwrap(),
        ] {
            let s = d.to_string();
            let back: Domain = s.parse().unwrap();
            assert_eq!(d, back);
        }
    }

    #[test]
    fn serde_round_trip() {
        let d = Domain::annulus(0.25, 2.0, 5).unwrap();
        let js = serde_json::to_string(&d).unwrap();
        let back: Domain = serde_json::from_str(&js).unwrap();
        assert_eq!(d, back);
        // Tagged representation keeps configs self-describing.
        assert!(js.contains("\"kind\":\"annulus\""));
    }
}
