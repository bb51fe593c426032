//! Spherical wavelets built by inverse stereographic projection.
//!
//! The family is `ψ_{a,ρ} = R(ρ) D(a) ψ`: the mother wavelet `ψ` is dilated by
//! `a = 2^{i/Q}` and then rotated so its centre sits on a Fibonacci lattice
//! point. A feature is the value of one family member at the query point.
//!
//! Evaluation never calls trigonometric functions for the geometry. With the
//! query expressed in the local frame of a lattice point as `(x, y, z)`,
//! `tan(θ/2) = ρ / (1 + z)` and `tan(θ/2)·cos φ = x / (1 + z)` where
//! `ρ = √(x² + y²)`, and the dilation only rescales `tan(θ/2)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::spec::{ComplexMode, WaveletFilter, WaveletParams};
use crate::error::{Error, Result};
use crate::sphere::{fibonacci_lattice, mat_mul, mat_vec, transpose, EulerRotation, Matrix3, SpherePoint};

/// Query points closer than this (in radians) to the projection pole of a
/// basis function get a zero feature.
pub const POLE_CLAMP: f64 = 1e-9;

/// Mother wavelet `ψ(θ, φ)` in its own frame.
///
/// Morlet: `exp(i k tan(θ/2) cos φ) · exp(−tan²(θ/2) / (2w²)) / (1 + cos θ)`.
/// Mexican hat: `(2 − r²/w²) · exp(−r²/(2w²)) / (1 + cos θ)` with
/// `r = 2 tan(θ/2)`, real valued.
pub fn mother_wavelet(theta: f64, phi: f64, k: f64, w: f64, filter: WaveletFilter) -> Result<Complex64> {
    if !(theta < PI) || PI - theta <= POLE_CLAMP * 1.5 {
        return Err(Error::PoleSingularity { theta });
    }
    let t = (theta / 2.0).tan();
    let jacobian = 1.0 / (1.0 + theta.cos());
    Ok(match filter {
        WaveletFilter::Morlet => {
            let envelope = (-t * t / (2.0 * w * w)).exp() * jacobian;
            Complex64::from_polar(envelope, k * t * phi.cos())
        }
        WaveletFilter::MexicanHat => {
            let r2 = 4.0 * t * t;
            Complex64::new(jacobian * (2.0 - r2 / (w * w)) * (-r2 / (2.0 * w * w)).exp(), 0.0)
        }
    })
}

/// `‖ψ‖₂` over the sphere. Dilation by the cocycle and rotation both
/// preserve the norm, so every family member shares it.
pub fn mother_l2_norm(w: f64, filter: WaveletFilter) -> f64 {
    match filter {
        WaveletFilter::Morlet => (PI * w * w).sqrt(),
        WaveletFilter::MexicanHat => (PI * w * w / 2.0).sqrt(),
    }
}

/// Precomputed wavelet family.
#[derive(Debug, Clone)]
pub struct WaveletBasis {
    /// Maps a global unit vector into each centre's local frame.
    frames: Vec<Matrix3>,
    scales: Vec<f64>,
    params: WaveletParams,
    gain: f64,
}

impl WaveletBasis {
    pub fn new(params: WaveletParams) -> Result<Self> {
        let centres = fibonacci_lattice(params.rotations)?;
        let rotations: Vec<EulerRotation> = centres.into_iter().map(EulerRotation::onto).collect();
        Self::with_rotations(params, &rotations)
    }

    /// A family centred on arbitrary rotations instead of the lattice.
    pub fn with_rotations(params: WaveletParams, rotations: &[EulerRotation]) -> Result<Self> {
        let scales = (1..=params.scales).map(|i| 2f64.powf(i as f64 / params.q as f64)).collect();
        let gain = if params.normalize { 1.0 / mother_l2_norm(params.scale_factor, params.filter) } else { 1.0 };
        Ok(Self {
            frames: rotations.iter().map(|r| transpose(&r.matrix())).collect(),
            scales,
            params,
            gain,
        })
    }

    /// The same family with every centre moved by `r`.
    pub fn rotated(&self, r: &EulerRotation) -> Self {
        let inv = transpose(&r.matrix());
        Self { frames: self.frames.iter().map(|f| mat_mul(f, &inv)).collect(), ..self.clone() }
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn len(&self) -> usize {
        let per = match self.params.mode {
            ComplexMode::RealOnly => 1,
            ComplexMode::RealImag => 2,
        };
        per * self.frames.len() * self.scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Writes the features of `p` into `out`, rotation-major, scale-minor.
    pub fn fill(&self, p: SpherePoint, out: &mut [f64]) {
        let v = p.unit_vector();
        let WaveletParams { wavenumber: k, scale_factor: w, filter, mode, .. } = self.params;
        let inv_2w2 = 1.0 / (2.0 * w * w);
        let mut idx = 0;
        for frame in &self.frames {
            let [x, y, z] = mat_vec(frame, v);
            let rho = (x * x + y * y).sqrt();
            let singular = z < 0.0 && rho < POLE_CLAMP;
            // tan(θ/2) and tan(θ/2)·cos φ, stable on both hemispheres
            let (t, u) = if singular {
                (0.0, 0.0)
            } else if z >= 0.0 {
                (rho / (1.0 + z), x / (1.0 + z))
            } else {
                let t = (1.0 - z) / rho;
                (t, t * x / rho)
            };
            for &a in &self.scales {
                let value = if singular {
                    Complex64::new(0.0, 0.0)
                } else {
                    let (td, ud) = (t / a, u / a);
                    let td2 = td * td;
                    // λ(a, θ)^{1/2} · 1/(1 + cos θ_{1/a})
                    let weight = self.gain * a * (1.0 + t * t) / (a * a + t * t) * 0.5 * (1.0 + td2);
                    match filter {
                        WaveletFilter::Morlet => Complex64::from_polar(weight * (-td2 * inv_2w2).exp(), k * ud),
                        WaveletFilter::MexicanHat => {
                            let r2 = 4.0 * td2;
                            Complex64::new(weight * (2.0 - r2 / (w * w)) * (-r2 * inv_2w2).exp(), 0.0)
                        }
                    }
                };
                match mode {
                    ComplexMode::RealOnly => {
                        out[idx] = value.re;
                        idx += 1;
                    }
                    ComplexMode::RealImag => {
                        out[idx] = value.re;
                        out[idx + 1] = value.im;
                        idx += 2;
                    }
                }
            }
        }
    }
}
