//! Encoding generation timings.

use std::time::Instant;

use super::harmonic::encode_spherical_harmonic_naive;
use super::spec::{EncodingSpec, WaveletParams};
use super::Encoder;
use crate::error::{Error, Result};
use crate::sphere::fibonacci_lattice;

/// Size-matched harmonic and wavelet configurations. `legendre` counts
/// polynomial degrees `0..legendre`, so the harmonic size is `legendre²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeRow {
    pub size: usize,
    pub legendre: usize,
    pub dilations: usize,
    pub rotations: usize,
}

pub const DEFAULT_SIZE_ROWS: [SizeRow; 4] = [
    SizeRow { size: 25, legendre: 5, dilations: 1, rotations: 25 },
    SizeRow { size: 100, legendre: 10, dilations: 4, rotations: 25 },
    SizeRow { size: 625, legendre: 25, dilations: 5, rotations: 125 },
    SizeRow { size: 900, legendre: 30, dilations: 6, rotations: 150 },
];

impl SizeRow {
    /// Looks up a default row, or builds a square one (`size = L² = N·1`).
    pub fn for_size(size: usize) -> Result<Self> {
        if let Some(row) = DEFAULT_SIZE_ROWS.iter().find(|r| r.size == size) {
            return Ok(*row);
        }
        let legendre = (size as f64).sqrt().round() as usize;
        if legendre == 0 || legendre * legendre != size {
            return Err(Error::invalid(format!("benchmark size {size} is not a perfect square")));
        }
        Ok(Self { size, legendre, dilations: 1, rotations: size })
    }

    pub fn harmonic(&self) -> EncodingSpec {
        EncodingSpec::SphericalHarmonic { lmax: self.legendre - 1 }
    }

    pub fn wavelet(&self) -> EncodingSpec {
        EncodingSpec::SphericalWavelet(WaveletParams {
            rotations: self.rotations,
            scales: self.dilations,
            ..WaveletParams::default()
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub label: String,
    pub size: usize,
    pub mean_ms: f64,
    pub std_ms: f64,
    pub repetitions: usize,
}

fn time_reps(reps: usize, mut f: impl FnMut()) -> (f64, f64) {
    let samples: Vec<f64> = (0..reps)
        .map(|_| {
            let start = Instant::now();
            f();
            start.elapsed().as_secs_f64() * 1e3
        })
        .collect();
    let mean = samples.iter().sum::<f64>() / reps as f64;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (reps.max(2) - 1) as f64;
    (mean, var.sqrt())
}

/// Times single-threaded batch encoding of `n_points` lattice points for each
/// spec, at least five repetitions each. Every harmonic spec is followed by
/// a row for the factorial closed form.
pub fn encoding_benchmark(specs: &[EncodingSpec], n_points: usize, repetitions: usize) -> Result<Vec<BenchRow>> {
    if n_points == 0 {
        return Err(Error::invalid("benchmark needs at least one point"));
    }
    let reps = repetitions.max(5);
    let points = fibonacci_lattice(n_points)?;
    let mut rows = Vec::new();
    for spec in specs {
        let encoder = Encoder::new(spec)?;
        let (mean_ms, std_ms) = time_reps(reps, || {
            std::hint::black_box(encoder.encode_batch_serial(&points));
        });
        rows.push(BenchRow { label: spec.to_string(), size: spec.output_len(), mean_ms, std_ms, repetitions: reps });

        if let EncodingSpec::SphericalHarmonic { lmax } = *spec {
            let (mean_ms, std_ms) = time_reps(reps, || {
                for p in &points {
                    std::hint::black_box(encode_spherical_harmonic_naive(*p, lmax));
                }
            });
            rows.push(BenchRow { label: format!("{spec} (closed form)"), size: spec.output_len(), mean_ms, std_ms, repetitions: reps });
        }
    }
    Ok(rows)
}
