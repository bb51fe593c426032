//! Sinusoidal baseline encoders.
//!
//! These follow the published multi-scale constructions in spirit; the exact
//! formulas below are this crate's own and are labelled as such in reports.
//!
//! Scales are geometric between `rmin` and 360 degrees:
//! `α_s = rmin · (360 / rmin)^{s / (S − 1)}`. The spherical variants use the
//! frequency `ω_s = 360 / α_s` on latitude and the nearest integer frequency
//! `n_s = max(1, round(ω_s))` on longitude, so every feature is continuous
//! across the antimeridian.

use std::f64::consts::PI;

use super::spec::ScaleParams;
use crate::sphere::SpherePoint;

const MAX_RADIUS_DEG: f64 = 360.0;

pub(crate) fn scale_radii(p: &ScaleParams) -> Vec<f64> {
    let s = p.num_freqs;
    if s == 1 {
        return vec![p.min_radius_deg];
    }
    let ratio = MAX_RADIUS_DEG / p.min_radius_deg;
    (0..s).map(|i| p.min_radius_deg * ratio.powf(i as f64 / (s - 1) as f64)).collect()
}

pub(crate) fn direct(p: SpherePoint, out: &mut [f64]) {
    out[0] = p.lat_rad();
    out[1] = p.lon_rad();
}

pub(crate) fn cartesian(p: SpherePoint, out: &mut [f64]) {
    out.copy_from_slice(&p.unit_vector());
}

/// Planar grid cells: three directions 120° apart applied to
/// `(lon°, lat°)`, a sine and cosine per direction and scale.
pub(crate) fn theory(p: SpherePoint, params: &ScaleParams, out: &mut [f64]) {
    let (x, y) = (p.lon_deg(), p.lat_deg());
    let dirs: [(f64, f64); 3] = std::array::from_fn(|j| (2.0 * PI * j as f64 / 3.0).sin_cos());
    let mut idx = 0;
    for alpha in scale_radii(params) {
        for (sin_d, cos_d) in dirs {
            let (s, c) = ((cos_d * x + sin_d * y) / alpha).sin_cos();
            out[idx] = s;
            out[idx + 1] = c;
            idx += 2;
        }
    }
}

fn frequencies(params: &ScaleParams) -> impl Iterator<Item = (f64, f64)> {
    scale_radii(params).into_iter().map(|alpha| {
        let omega = MAX_RADIUS_DEG / alpha;
        (omega, omega.round().max(1.0))
    })
}

pub(crate) fn sphere_c_plus(p: SpherePoint, params: &ScaleParams, out: &mut [f64]) {
    let (lat, lon) = (p.lat_rad(), p.lon_rad());
    let mut idx = 0;
    for (omega, n) in frequencies(params) {
        let (sl, cl) = (lat * omega).sin_cos();
        let (sn, cn) = (lon * n).sin_cos();
        out[idx..idx + 7].copy_from_slice(&[sl, cl * cn, cl * sn, sl, cl, sn, cn]);
        idx += 7;
    }
}

pub(crate) fn sphere_m_plus(p: SpherePoint, params: &ScaleParams, out: &mut [f64]) {
    let (lat, lon) = (p.lat_rad(), p.lon_rad());
    let (s1, c1) = lon.sin_cos();
    let cos_lat = lat.cos();
    let mut idx = 0;
    for (omega, n) in frequencies(params) {
        let (sl, cl) = (lat * omega).sin_cos();
        let (sn, cn) = (lon * n).sin_cos();
        out[idx..idx + 9].copy_from_slice(&[sl, cl * c1, cos_lat * cn, cl * s1, cos_lat * sn, sl, cl, sn, cn]);
        idx += 9;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radii_span_min_to_full_circle() {
        let r = scale_radii(&ScaleParams { num_freqs: 16, min_radius_deg: 45.0 });
        assert_eq!(r.len(), 16);
        assert!((r[0] - 45.0).abs() < 1e-12 && (r[15] - 360.0).abs() < 1e-9);
        assert_eq!(scale_radii(&ScaleParams { num_freqs: 1, min_radius_deg: 90.0 }), vec![90.0]);
    }
}
