//! Real spherical harmonics.

use std::f64::consts::SQRT_2;

use super::legendre::{naive_legendre, LegendreTable};
use crate::sphere::SpherePoint;

/// Writes the `(lmax + 1)²` real harmonics of `p` into `out`, ordered by
/// degree, then by order from `−l` to `l`.
pub(crate) fn fill_harmonics(p: SpherePoint, table: &mut LegendreTable, trig: &mut Vec<(f64, f64)>, out: &mut [f64]) {
    let lmax = table.lmax();
    let (s, c) = p.theta().sin_cos();
    table.fill(c, s);
    trig.clear();
    trig.extend((0..=lmax).map(|m| (m as f64 * p.phi()).sin_cos()));
    let mut idx = 0;
    for l in 0..=lmax {
        for m in (1..=l).rev() {
            out[idx] = SQRT_2 * table.get(l, m) * trig[m].0;
            idx += 1;
        }
        out[idx] = table.get(l, 0);
        idx += 1;
        for m in 1..=l {
            out[idx] = SQRT_2 * table.get(l, m) * trig[m].1;
            idx += 1;
        }
    }
}

/// Real spherical harmonic features up to degree `lmax`.
pub fn encode_spherical_harmonic(p: SpherePoint, lmax: usize) -> Vec<f64> {
    let mut out = vec![0.0; (lmax + 1) * (lmax + 1)];
    let mut table = LegendreTable::new(lmax);
    fill_harmonics(p, &mut table, &mut Vec::new(), &mut out);
    out
}

/// The same features built from the factorial closed form, one `(l, m)` at
/// a time. Kept as the timing baseline for the benchmark.
pub fn encode_spherical_harmonic_naive(p: SpherePoint, lmax: usize) -> Vec<f64> {
    let x = p.theta().cos();
    let mut out = Vec::with_capacity((lmax + 1) * (lmax + 1));
    for l in 0..=lmax {
        for m in -(l as i64)..=(l as i64) {
            let am = m.unsigned_abs() as usize;
            let plm = naive_legendre(l, am, x);
            let v = match m {
                0 => plm,
                m if m > 0 => SQRT_2 * plm * (m as f64 * p.phi()).cos(),
                _ => SQRT_2 * plm * (am as f64 * p.phi()).sin(),
            };
            out.push(v);
        }
    }
    out
}
