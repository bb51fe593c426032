//! Normalized associated Legendre functions.
//!
//! `P̄_l^m(x) = √[(2l+1)/(4π) · (l−m)!/(l+m)!] · P_l^m(x)`, Condon-Shortley
//! phase included. The recurrence folds the normalization into its
//! coefficients so no factorial is ever formed; values stay finite well past
//! degree 200.
//!
//! [`naive_legendre`] evaluates the same quantity from the explicit factorial
//! sum. It exists as a reference and for timing comparisons; in single
//! precision the factorials overflow around degree 17 and the result turns
//! into NaN.

use std::f64::consts::PI;

use num_traits::Float;

use crate::error::{Error, Result};

/// Flat index of `(l, m)` in a triangular table.
#[inline]
pub fn tri_index(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

/// All `P̄_l^m(x)` for `0 ≤ m ≤ l ≤ lmax`, stored triangularly.
#[derive(Debug, Clone)]
pub struct LegendreTable {
    lmax: usize,
    values: Vec<f64>,
}

impl LegendreTable {
    pub fn new(lmax: usize) -> Self {
        Self { lmax, values: vec![0.0; tri_index(lmax, lmax) + 1] }
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    #[inline]
    pub fn get(&self, l: usize, m: usize) -> f64 {
        self.values[tri_index(l, m)]
    }

    /// Fills the table for `x = cos θ`, given `s = sin θ ≥ 0`.
    ///
    /// Taking `s` separately avoids recomputing `√(1 − x²)`, which loses
    /// precision near the poles.
    pub fn fill(&mut self, x: f64, s: f64) {
        let lmax = self.lmax;
        let v = &mut self.values;
        v[0] = 0.5 / PI.sqrt();
        for m in 1..=lmax {
            let mf = m as f64;
            v[tri_index(m, m)] = -((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s * v[tri_index(m - 1, m - 1)];
        }
        for m in 0..lmax {
            let mf = m as f64;
            v[tri_index(m + 1, m)] = (2.0 * mf + 3.0).sqrt() * x * v[tri_index(m, m)];
        }
        for m in 0..=lmax {
            let mf = m as f64;
            for l in m + 2..=lmax {
                let lf = l as f64;
                let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
                v[tri_index(l, m)] = a * (x * v[tri_index(l - 1, m)] - b * v[tri_index(l - 2, m)]);
            }
        }
    }
}

fn check_args(l: usize, m: usize, x: f64) -> Result<()> {
    if m > l {
        return Err(Error::invalid(format!("order m={m} exceeds degree l={l}")));
    }
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::invalid(format!("argument {x} outside [-1, 1]")));
    }
    Ok(())
}

/// Normalized `P̄_l^m(x)` by the stable recurrence.
pub fn assoc_legendre(l: usize, m: usize, x: f64) -> Result<f64> {
    check_args(l, m, x)?;
    let mut table = LegendreTable::new(l);
    table.fill(x, (1.0 - x * x).max(0.0).sqrt());
    Ok(table.get(l, m))
}

fn factorial<T: Float>(n: usize) -> T {
    (1..=n).fold(T::one(), |acc, k| acc * T::from(k).unwrap())
}

/// Normalized `P̄_l^m(x)` from the explicit closed form
///
/// `P_l^m(x) = (−1)^m (1−x²)^{m/2} 2^{−l} Σ_k (−1)^k (2l−2k)! / (k! (l−k)! (l−2k−m)!) x^{l−2k−m}`
///
/// with every factorial recomputed from scratch, in the working precision `T`.
pub fn naive_legendre<T: Float>(l: usize, m: usize, x: T) -> T {
    let two = T::from(2.0).unwrap();
    let mut sum = T::zero();
    for k in 0..=(l - m) / 2 {
        let num: T = factorial(2 * l - 2 * k);
        let den = factorial::<T>(k) * factorial::<T>(l - k) * factorial::<T>(l - 2 * k - m);
        let term = num / den * x.powi((l - 2 * k - m) as i32);
        sum = if k % 2 == 0 { sum + term } else { sum - term };
    }
    let s = (T::one() - x * x).max(T::zero()).sqrt();
    let mut p = sum * s.powi(m as i32) / two.powi(l as i32);
    if m % 2 == 1 {
        p = -p;
    }
    let four_pi = T::from(4.0 * PI).unwrap();
    let ratio = factorial::<T>(l - m) / factorial::<T>(l + m);
    let norm = (T::from(2 * l + 1).unwrap() / four_pi * ratio).sqrt();
    norm * p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_examples() {
        for x in [-1.0, -0.3, 0.0, 0.7, 1.0] {
            assert!((assoc_legendre(0, 0, x).unwrap() - 0.282_094_791_8).abs() < 1e-10);
        }
        assert!((assoc_legendre(1, 0, 1.0).unwrap() - 0.488_602_511_9).abs() < 1e-10);
        // P̄_1^1 = −√(3/8π) sin θ
        let x: f64 = 0.5;
        let expected = -(3.0 / (8.0 * PI)).sqrt() * (1.0 - x * x).sqrt();
        assert!((assoc_legendre(1, 1, x).unwrap() - expected).abs() < 1e-15);
        // P̄_2^0 = √(5/4π) (3x² − 1)/2
        let expected = (5.0 / (4.0 * PI)).sqrt() * (3.0 * x * x - 1.0) / 2.0;
        assert!((assoc_legendre(2, 0, x).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn high_degree_stays_finite() {
        let v = assoc_legendre(30, 30, 0.5).unwrap();
        assert!(v.is_finite() && v != 0.0);
        for l in [100usize, 200] {
            for m in [0, l / 2, l] {
                for x in [-1.0, -0.5, 0.0, 0.5, 1.0] {
                    assert!(assoc_legendre(l, m, x).unwrap().is_finite());
                }
            }
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(assoc_legendre(2, 3, 0.0).is_err());
        assert!(assoc_legendre(2, 1, 1.5).is_err());
    }

    #[test]
    fn naive_agrees_at_low_degree() {
        for l in 0..=12 {
            for m in 0..=l {
                for x in [-0.9, -0.5, 0.1, 0.5, 0.99] {
                    let a = assoc_legendre(l, m, x).unwrap();
                    let b = naive_legendre(l, m, x);
                    assert!((a - b).abs() <= 1e-9 * b.abs().max(1e-12), "l={l} m={m} x={x}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn naive_single_precision_breaks_at_degree_thirty() {
        let broken = (0..=30).any(|m| !naive_legendre(30, m, 0.5f32).is_finite());
        assert!(broken);
        assert!(naive_legendre(30, 30, 0.5f64).is_finite());
    }
}
