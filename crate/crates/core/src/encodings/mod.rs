//! Location encoders: a point on the sphere in, a fixed-length real vector out.

pub mod baseline;
pub mod bench;
pub mod harmonic;
pub mod legendre;
pub mod spec;
pub mod wavelet;

use ndarray::Array2;
use rayon::prelude::*;

pub use harmonic::{encode_spherical_harmonic, encode_spherical_harmonic_naive};
pub use legendre::{assoc_legendre, naive_legendre, LegendreTable};
pub use spec::{ComplexMode, EncodingSpec, ScaleParams, WaveletFilter, WaveletParams};
pub use wavelet::{mother_wavelet, WaveletBasis};

use crate::error::{Error, Result};
use crate::sphere::SpherePoint;

/// One encoded point, tagged with the spec that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodingVector {
    pub values: Vec<f64>,
    pub spec_fingerprint: String,
}

#[derive(Debug, Clone)]
enum Backend {
    Direct,
    Cartesian,
    Theory(ScaleParams),
    SphereC(ScaleParams),
    SphereM(ScaleParams),
    Harmonic(usize),
    Wavelet(WaveletBasis),
}

/// A ready-to-use encoder. Construction does the one-time work (lattice,
/// rotation frames); encoding is pure and can run from any thread.
#[derive(Debug, Clone)]
pub struct Encoder {
    spec: EncodingSpec,
    backend: Backend,
    len: usize,
    fingerprint: String,
}

impl Encoder {
    pub fn new(spec: &EncodingSpec) -> Result<Self> {
        spec.validate()?;
        let backend = match *spec {
            EncodingSpec::Direct => Backend::Direct,
            EncodingSpec::Cartesian3d => Backend::Cartesian,
            EncodingSpec::Theory(p) => Backend::Theory(p),
            EncodingSpec::SphereCPlus(p) => Backend::SphereC(p),
            EncodingSpec::SphereMPlus(p) => Backend::SphereM(p),
            EncodingSpec::SphericalHarmonic { lmax } => Backend::Harmonic(lmax),
            EncodingSpec::SphericalWavelet(w) => Backend::Wavelet(WaveletBasis::new(w)?),
        };
        Ok(Self { spec: *spec, backend, len: spec.output_len(), fingerprint: spec.fingerprint() })
    }

    /// Wraps a prebuilt wavelet family, e.g. one whose centres were rotated.
    pub fn from_wavelet_basis(params: WaveletParams, basis: WaveletBasis) -> Self {
        let spec = EncodingSpec::SphericalWavelet(params);
        Self { len: basis.len(), fingerprint: spec.fingerprint(), spec, backend: Backend::Wavelet(basis) }
    }

    pub fn spec(&self) -> &EncodingSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    /// Writes the features of `p` into `out`, which must be `self.len()` long.
    pub fn encode_into(&self, p: SpherePoint, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.len);
        match &self.backend {
            Backend::Direct => baseline::direct(p, out),
            Backend::Cartesian => baseline::cartesian(p, out),
            Backend::Theory(s) => baseline::theory(p, s, out),
            Backend::SphereC(s) => baseline::sphere_c_plus(p, s, out),
            Backend::SphereM(s) => baseline::sphere_m_plus(p, s, out),
            Backend::Harmonic(lmax) => {
                let mut table = LegendreTable::new(*lmax);
                harmonic::fill_harmonics(p, &mut table, &mut Vec::new(), out)
            }
            Backend::Wavelet(basis) => basis.fill(p, out),
        }
    }

    pub fn encode(&self, p: SpherePoint) -> EncodingVector {
        let mut values = vec![0.0; self.len];
        self.encode_into(p, &mut values);
        EncodingVector { values, spec_fingerprint: self.fingerprint.clone() }
    }

    /// Encodes many points into a `(points, features)` matrix.
    pub fn encode_batch(&self, points: &[SpherePoint]) -> Array2<f64> {
        let mut out = Array2::zeros((points.len(), self.len));
        let rows = out.as_slice_mut().expect("fresh array is contiguous");
        if self.len == 0 {
            return out;
        }
        match &self.backend {
            // Reuse the Legendre scratch table across a chunk of points.
            Backend::Harmonic(lmax) => rows.par_chunks_mut(self.len * 256).zip(points.par_chunks(256)).for_each(|(block, pts)| {
                let mut table = LegendreTable::new(*lmax);
                let mut trig = Vec::with_capacity(lmax + 1);
                for (row, p) in block.chunks_mut(self.len).zip(pts) {
                    harmonic::fill_harmonics(*p, &mut table, &mut trig, row);
                }
            }),
            _ => rows.par_chunks_mut(self.len).zip(points.par_iter()).for_each(|(row, p)| self.encode_into(*p, row)),
        }
        out
    }

    /// Single-threaded variant of [`Encoder::encode_batch`], used for timing.
    pub fn encode_batch_serial(&self, points: &[SpherePoint]) -> Array2<f64> {
        let mut out = Array2::zeros((points.len(), self.len));
        if let Backend::Harmonic(lmax) = &self.backend {
            let mut table = LegendreTable::new(*lmax);
            let mut trig = Vec::new();
            for (mut row, p) in out.rows_mut().into_iter().zip(points) {
                harmonic::fill_harmonics(*p, &mut table, &mut trig, row.as_slice_mut().unwrap());
            }
        } else {
            for (mut row, p) in out.rows_mut().into_iter().zip(points) {
                self.encode_into(*p, row.as_slice_mut().unwrap());
            }
        }
        out
    }
}

/// Encodes `p` with any spec.
pub fn encode(p: SpherePoint, spec: &EncodingSpec) -> Result<EncodingVector> {
    Ok(Encoder::new(spec)?.encode(p))
}

/// Spherical wavelet features of `p`.
pub fn encode_spherical_wavelet(p: SpherePoint, spec: &EncodingSpec) -> Result<EncodingVector> {
    match spec {
        EncodingSpec::SphericalWavelet(_) => encode(p, spec),
        other => Err(Error::invalid(format!("expected a spherical wavelet spec, got {}", other.kind()))),
    }
}

/// Baseline features of `p`. Only the sinusoidal and coordinate baselines are
/// accepted here.
pub fn encode_baseline(p: SpherePoint, spec: &EncodingSpec) -> Result<EncodingVector> {
    match spec {
        EncodingSpec::Direct
        | EncodingSpec::Cartesian3d
        | EncodingSpec::Theory(_)
        | EncodingSpec::SphereCPlus(_)
        | EncodingSpec::SphereMPlus(_) => encode(p, spec),
        other => Err(Error::invalid(format!("{} is not a baseline encoding", other.kind()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::{fibonacci_lattice, rotate, EulerRotation};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn all_specs() -> Vec<EncodingSpec> {
        [
            "direct",
            "cartesian3d",
            "theory:S=8,rmin=45",
            "spherec+:S=8,rmin=45",
            "spherem+:S=8,rmin=90",
            "sh:L=12",
            "sw:N=40,M=3,Q=4,k=6",
            "sw:N=20,M=2,Q=2,k=3,filter=mexican_hat,mode=real_imag",
        ]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect()
    }

    #[test]
    fn baseline_examples() {
        let p = SpherePoint::new(PI / 2.0, 0.0).unwrap();
        assert_eq!(encode_baseline(p, &EncodingSpec::Direct).unwrap().values, vec![0.0, 0.0]);
        let v = encode_baseline(p, &EncodingSpec::Cartesian3d).unwrap().values;
        assert!((v[0] - 1.0).abs() < 1e-15 && v[1].abs() < 1e-15 && v[2].abs() < 1e-15);
        let theory = "theory:S=16,rmin=45".parse().unwrap();
        assert_eq!(encode_baseline(p, &theory).unwrap().values.len(), 96);
        assert!(encode_baseline(p, &EncodingSpec::SphericalHarmonic { lmax: 3 }).is_err());
        assert!(encode_spherical_wavelet(p, &EncodingSpec::Direct).is_err());
    }

    #[test]
    fn lengths_and_batches_agree() {
        let pts = fibonacci_lattice(300).unwrap();
        for spec in all_specs() {
            let enc = Encoder::new(&spec).unwrap();
            let batch = enc.encode_batch(&pts);
            assert_eq!(batch.ncols(), spec.output_len());
            assert_eq!(batch, enc.encode_batch_serial(&pts));
            for (i, p) in pts.iter().enumerate().step_by(37) {
                let v = enc.encode(*p);
                assert_eq!(v.values.as_slice(), batch.row(i).as_slice().unwrap(), "{spec}");
                assert_eq!(v.spec_fingerprint, spec.fingerprint());
            }
        }
    }

    #[test]
    fn antimeridian_continuity() {
        let eps = 1e-7;
        for s in ["cartesian3d", "spherec+:S=16,rmin=45", "spherem+:S=16,rmin=45"] {
            let spec: EncodingSpec = s.parse().unwrap();
            for lat in [-60.0, 0.0, 33.0] {
                let a = encode(SpherePoint::from_lat_lon_deg(lat, -180.0 + eps).unwrap(), &spec).unwrap();
                let b = encode(SpherePoint::from_lat_lon_deg(lat, 180.0 - eps).unwrap(), &spec).unwrap();
                let gap = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                assert!(gap < 1e-4, "{s} lat={lat}: {gap}");
            }
        }
    }

    #[test]
    fn wavelet_covariance_under_rotation() {
        let params = WaveletParams { rotations: 50, scales: 3, q: 3, mode: ComplexMode::RealImag, ..Default::default() };
        let basis = WaveletBasis::new(params).unwrap();
        let r = EulerRotation::new(0.7, 1.1, -2.3);
        let moved = Encoder::from_wavelet_basis(params, basis.rotated(&r));
        let fixed = Encoder::from_wavelet_basis(params, basis);
        for p in fibonacci_lattice(97).unwrap() {
            let a = fixed.encode(p).values;
            let b = moved.encode(rotate(p, &r)).values;
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-8);
            }
        }
    }

    proptest! {
        #[test]
        fn encoders_are_finite_and_deterministic(theta in 0.0..PI, phi in 0.0..(2.0 * PI)) {
            let p = SpherePoint::new(theta, phi).unwrap();
            for spec in all_specs() {
                let a = encode(p, &spec).unwrap();
                let b = encode(p, &spec).unwrap();
                prop_assert!(a.values.iter().all(|v| v.is_finite()));
                prop_assert_eq!(a.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
            }
        }
    }
}
