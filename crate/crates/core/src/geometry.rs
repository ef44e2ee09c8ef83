//! Point geometry of the round unit sphere centred at the origin.

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("cannot normalise a zero or non-finite vector")]
    Degenerate,
    #[error("point too close to the projection pole (z = {z})")]
    PoleProximity { z: f64 },
}

/// Points with `z` at or above this value are rejected by the stereographic chart.
pub const POLE_GUARD: f64 = 1.0 - 1e-10;

/// A point on the unit sphere in ambient coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl UnitVector {
    pub const NORTH: UnitVector = UnitVector {
        x: 0.0,
        y: 0.0,
        z: 1.0,
    };
    pub const SOUTH: UnitVector = UnitVector {
        x: 0.0,
        y: 0.0,
        z: -1.0,
    };

    /// Normalises `(x, y, z)` onto the sphere.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self, GeometryError> {
        let n = (x * x + y * y + z * z).sqrt();
        if !n.is_finite() || n == 0.0 {
            return Err(GeometryError::Degenerate);
        }
        Ok(UnitVector {
            x: x / n,
            y: y / n,
            z: z / n,
        })
    }

    /// Point at colatitude `colat` and eastward longitude `lon` (radians).
    pub fn from_spherical(colat: f64, lon: f64) -> Self {
        let (st, ct) = colat.sin_cos();
        let (sp, cp) = lon.sin_cos();
        UnitVector {
            x: st * cp,
            y: st * sp,
            z: ct,
        }
    }

    pub fn colatitude(&self) -> f64 {
        let rho = self.x.hypot(self.y);
        rho.atan2(self.z)
    }

    pub fn longitude(&self) -> f64 {
        let phi = self.y.atan2(self.x);
        if phi < 0.0 {
            phi + 2.0 * PI
        } else {
            phi
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(&self, other: &UnitVector) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// Orthonormal basis `(e1, e2)` of the tangent plane at this point.
    pub fn tangent_basis(&self) -> ([f64; 3], [f64; 3]) {
        // pick the ambient axis least aligned with the point
        let p = self.as_array();
        let axis = if self.x.abs() <= self.y.abs() && self.x.abs() <= self.z.abs() {
            [1.0, 0.0, 0.0]
        } else if self.y.abs() <= self.z.abs() {
            [0.0, 1.0, 0.0]
        } else {
            [0.0, 0.0, 1.0]
        };
        let e1 = normalize3(cross3(axis, p));
        let e2 = cross3(p, e1);
        (e1, e2)
    }

    /// Point reached by walking a geodesic of length `r` from `self` in the
    /// tangent direction `cos(phi) e1 + sin(phi) e2`.
    pub fn exp_map(&self, basis: &([f64; 3], [f64; 3]), r: f64, phi: f64) -> UnitVector {
        let (sr, cr) = r.sin_cos();
        let (sp, cp) = phi.sin_cos();
        let (e1, e2) = basis;
        let d = [
            cp * e1[0] + sp * e2[0],
            cp * e1[1] + sp * e2[1],
            cp * e1[2] + sp * e2[2],
        ];
        UnitVector {
            x: cr * self.x + sr * d[0],
            y: cr * self.y + sr * d[1],
            z: cr * self.z + sr * d[2],
        }
    }
}

pub(crate) fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn normalize3(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Great-circle distance in `[0, π]`.
pub fn geodesic_distance(p: &UnitVector, q: &UnitVector) -> f64 {
    p.dot(q).clamp(-1.0, 1.0).acos()
}

/// Coordinates in the stereographic chart `(x/(1−z), y/(1−z))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StereoPoint {
    pub w1: f64,
    pub w2: f64,
}

pub fn stereographic_project(p: &UnitVector) -> Result<StereoPoint, GeometryError> {
    if p.z >= POLE_GUARD {
        return Err(GeometryError::PoleProximity { z: p.z });
    }
    let d = 1.0 - p.z;
    Ok(StereoPoint {
        w1: p.x / d,
        w2: p.y / d,
    })
}

pub fn stereographic_unproject(w: &StereoPoint) -> UnitVector {
    let r2 = w.w1 * w.w1 + w.w2 * w.w2;
    let d = 1.0 + r2;
    UnitVector {
        x: 2.0 * w.w1 / d,
        y: 2.0 * w.w2 / d,
        z: (r2 - 1.0) / d,
    }
}

/// Deviation of the rotation generator about the `y` axis from the chart
/// coordinate field `∂_{w1}` in a box of size `h` around the south pole.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionReport {
    pub h: f64,
    /// `∂_{w1}` component at the sample where `dev_11` is largest.
    pub coeff_11: f64,
    /// `∂_{w2}` component at the sample where `dev_12` is largest.
    pub coeff_12: f64,
    pub dev_11: f64,
    pub dev_12: f64,
}

/// Samples per axis of the `(y0, angle)` box.
pub const EXPANSION_SAMPLES: usize = 32;

/// Components of `d/dα` of the orbit `(c sin α, y0, −c cos α)`, `c = √(1−y0²)`,
/// pushed through the chart. Components are measured against `∂_{w}` scaled
/// to unit length at the south pole (the chart has conformal factor 2 there).
pub fn rotation_generator_components(y0: f64, angle: f64) -> (f64, f64) {
    let c = (1.0 - y0 * y0).sqrt();
    let (s, co) = angle.sin_cos();
    let den = 1.0 + c * co;
    let d1 = c * (c + co) / (den * den);
    let d2 = y0 * c * s / (den * den);
    (2.0 * d1, 2.0 * d2)
}

pub fn rotation_expansion_report(h: f64) -> ExpansionReport {
    assert!(
        h > 0.0 && h <= 0.3,
        "expansion box size must lie in (0, 0.3]"
    );
    let n = EXPANSION_SAMPLES;
    let mut rep = ExpansionReport {
        h,
        coeff_11: 1.0,
        coeff_12: 0.0,
        dev_11: 0.0,
        dev_12: 0.0,
    };
    for i in 0..n {
        let y0 = -h + 2.0 * h * i as f64 / (n - 1) as f64;
        for j in 0..n {
            let a = -h + 2.0 * h * j as f64 / (n - 1) as f64;
            let (c11, c12) = rotation_generator_components(y0, a);
            if (c11 - 1.0).abs() > rep.dev_11 {
                rep.dev_11 = (c11 - 1.0).abs();
                rep.coeff_11 = c11;
            }
            if c12.abs() > rep.dev_12 {
                rep.dev_12 = c12.abs();
                rep.coeff_12 = c12;
            }
        }
    }
    rep
}

/// Least-squares slope of `log(dev_11)` against `log(h)`.
pub fn expansion_order(hs: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = hs
        .iter()
        .map(|&h| (h.ln(), rotation_expansion_report(h).dev_11.ln()))
        .collect();
    log_log_slope(&pts)
}

pub(crate) fn log_log_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
