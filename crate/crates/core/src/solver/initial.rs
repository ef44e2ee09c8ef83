//! Smooth, mean-zero initial data.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::SolverError;
use crate::geometry::{geodesic_distance, UnitVector};
use crate::transform::{analyze, Grid, PhysicalField, SpectralField};

#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// Unit-norm `Y_ℓ0`.
    ZonalHarmonic { degree: usize },
    /// Gaussian coefficients on degrees `lo..=hi`, rescaled to RMS value
    /// `amplitude` over the sphere. Without a seed the run seed is used.
    RandomBand {
        lo: usize,
        hi: usize,
        amplitude: f64,
        seed: Option<u64>,
    },
    /// Opposite-sign Gaussian bumps of angular width `width` centred on the
    /// equator at longitudes `±separation/2`.
    GaussianPair {
        separation: f64,
        width: f64,
        amplitude: f64,
    },
}

impl InitialCondition {
    /// Coefficients truncated at `lmax`; `default_seed` feeds unseeded random data.
    pub fn build(&self, lmax: usize, default_seed: u64) -> Result<SpectralField, SolverError> {
        let bad = |m: String| Err(SolverError::InitialCondition(m));
        match *self {
            InitialCondition::ZonalHarmonic { degree } => {
                if degree == 0 || degree > lmax {
                    return bad(format!("zonal degree must be in 1..={lmax}, got {degree}"));
                }
                Ok(SpectralField::zonal(lmax, degree))
            }
            InitialCondition::RandomBand {
                lo,
                hi,
                amplitude,
                seed,
            } => {
                if lo == 0 || lo > hi || hi > lmax {
                    return bad(format!(
                        "band must satisfy 1 <= lo <= hi <= {lmax}, got {lo}..{hi}"
                    ));
                }
                if !(amplitude > 0.0 && amplitude.is_finite()) {
                    return bad(format!("amplitude must be positive, got {amplitude}"));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(default_seed));
                let mut a = SpectralField::zeros(lmax);
                for l in lo..=hi {
                    for m in 0..=l {
                        let re: f64 = StandardNormal.sample(&mut rng);
                        let im: f64 = StandardNormal.sample(&mut rng);
                        let v = if m == 0 {
                            Complex64::new(re, 0.0)
                        } else {
                            Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
                        };
                        a.set_real_pair(l, m, v);
                    }
                }
                let rms = a.l2_norm() / (4.0 * PI).sqrt();
                Ok(a.scaled(amplitude / rms))
            }
            InitialCondition::GaussianPair {
                separation,
                width,
                amplitude,
            } => {
                if !(separation > 0.0 && separation <= PI && width > 0.0 && amplitude.is_finite()) {
                    return bad("pair needs 0 < separation <= pi, width > 0".into());
                }
                let grid = Grid::new(lmax.max(2))
                    .map_err(|e| SolverError::InitialCondition(e.to_string()))?;
                let c1 = UnitVector::from_spherical(0.5 * PI, 0.5 * separation);
                let c2 = UnitVector::from_spherical(0.5 * PI, -0.5 * separation);
                let f = PhysicalField::from_fn(&grid, |t, p| {
                    let x = UnitVector::from_spherical(t, p);
                    let g = |c: &UnitVector| {
                        (-(geodesic_distance(&x, c).powi(2)) / (2.0 * width * width)).exp()
                    };
                    amplitude * (g(&c1) - g(&c2))
                });
                let mut a =
                    analyze(&f).map_err(|e| SolverError::InitialCondition(e.to_string()))?;
                a.set(0, 0, Complex64::new(0.0, 0.0));
                Ok(a.resized(lmax))
            }
        }
    }

    /// Same data with an explicit seed (no effect on deterministic presets).
    pub fn with_seed(self, s: u64) -> Self {
        match self {
            InitialCondition::RandomBand {
                lo, hi, amplitude, ..
            } => InitialCondition::RandomBand {
                lo,
                hi,
                amplitude,
                seed: Some(s),
            },
            other => other,
        }
    }
}

impl fmt::Display for InitialCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialCondition::ZonalHarmonic { degree } => write!(f, "zonal:{degree}"),
            InitialCondition::RandomBand {
                lo,
                hi,
                amplitude,
                seed,
            } => {
                write!(f, "random:{lo}:{hi}:{amplitude}")?;
                if let Some(s) = seed {
                    write!(f, ":{s}")?;
                }
                Ok(())
            }
            InitialCondition::GaussianPair {
                separation,
                width,
                amplitude,
            } => {
                write!(f, "pair:{separation}:{width}:{amplitude}")
            }
        }
    }
}

/// Parses `zonal:L`, `random:LO:HI:AMP[:SEED]` or `pair:SEP:WIDTH:AMP`.
impl FromStr for InitialCondition {
    type Err = SolverError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || {
            SolverError::InitialCondition(format!(
                "cannot parse '{s}' (zonal:L | random:LO:HI:AMP[:SEED] | pair:SEP:WIDTH:AMP)"
            ))
        };
        let int = |i: usize| {
            parts
                .get(i)
                .and_then(|v| v.parse::<usize>().ok())
                .ok_or_else(bad)
        };
        let real = |i: usize| {
            parts
                .get(i)
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(bad)
        };
        match parts[0] {
            "zonal" if parts.len() == 2 => Ok(InitialCondition::ZonalHarmonic { degree: int(1)? }),
            "random" if parts.len() == 4 || parts.len() == 5 => Ok(InitialCondition::RandomBand {
                lo: int(1)?,
                hi: int(2)?,
                amplitude: real(3)?,
                seed: if parts.len() == 5 {
                    Some(parts[4].parse().map_err(|_| bad())?)
                } else {
                    None
                },
            }),
            "pair" if parts.len() == 4 => Ok(InitialCondition::GaussianPair {
                separation: real(1)?,
                width: real(2)?,
                amplitude: real(3)?,
            }),
            _ => Err(bad()),
        }
    }
}
