//! Orthonormal associated Legendre functions `P̄_ℓm(cos θ)` with the
//! Condon–Shortley phase, so that `Y_ℓm(θ, φ) = P̄_ℓm(cos θ) e^{imφ}`.
//!
//! Values for one colatitude are packed `m`-major: all `ℓ = m..=L` for
//! `m = 0`, then `m = 1`, and so on (see [`tri_offset`]).

use std::f64::consts::PI;

// The ℓ-recurrence runs on values stripped of their `sin^m θ` factor and
// pre-multiplied by this scale; `sin^m θ / SCALE` is carried separately and
// applied on output. Headroom is sufficient to about degree 2700.
const SCALE: f64 = 1e-280;

/// Offset of the `(m, ℓ = m)` entry in the packed layout for truncation `lmax`.
#[inline]
pub fn tri_offset(lmax: usize, m: usize) -> usize {
    m * (2 * lmax + 3 - m) / 2
}

/// Number of packed `(ℓ, m ≥ 0)` entries.
#[inline]
pub fn tri_len(lmax: usize) -> usize {
    (lmax + 1) * (lmax + 2) / 2
}

/// Fills `p` with `P̄_ℓm(cos θ)` and, when given, `dp` with `dP̄_ℓm/dθ`.
///
/// Derivatives divide by `sin θ`, so `dp` must only be requested away from
/// the poles.
pub fn compute_ring(
    lmax: usize,
    cos_t: f64,
    sin_t: f64,
    p: &mut [f64],
    mut dp: Option<&mut [f64]>,
) {
    debug_assert!(p.len() >= tri_len(lmax));
    let mut rescale = 1.0 / SCALE;
    let mut pmm = SCALE / (4.0 * PI).sqrt();
    for m in 0..=lmax {
        let off = tri_offset(lmax, m);
        let mf = m as f64;
        let unscale = rescale;
        p[off] = pmm * unscale;
        if m < lmax {
            let mut p2 = pmm;
            let mut p1 = (2.0 * mf + 3.0).sqrt() * cos_t * pmm;
            p[off + 1] = p1 * unscale;
            for l in (m + 2)..=lmax {
                let lf = l as f64;
                let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
                let p0 = a * (cos_t * p1 - b * p2);
                p[off + l - m] = p0 * unscale;
                p2 = p1;
                p1 = p0;
            }
        }
        if let Some(d) = dp.as_deref_mut() {
            let inv_s = 1.0 / sin_t;
            d[off] = mf * cos_t * p[off] * inv_s;
            for l in (m + 1)..=lmax {
                let lf = l as f64;
                let c = ((2.0 * lf + 1.0) / (2.0 * lf - 1.0) * (lf * lf - mf * mf)).sqrt();
                d[off + l - m] = (lf * cos_t * p[off + l - m] - c * p[off + l - m - 1]) * inv_s;
            }
        }
        pmm *= -((2.0 * mf + 3.0) / (2.0 * mf + 2.0)).sqrt();
        rescale *= sin_t;
    }
}
