//! Declarative encoder configuration and its one-line string form.
//!
//! ```text
//! direct
//! cartesian3d
//! theory:S=16,rmin=45
//! spherec+:S=16,rmin=45
//! spherem+:S=16,rmin=45
//! sh:L=20
//! sw:N=130,M=4,Q=6,k=6,w=1,filter=morlet,mode=real_only,norm=false
//! ```

use std::fmt;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WaveletFilter {
    Morlet,
    MexicanHat,
}

impl WaveletFilter {
    pub fn as_str(&self) -> &'static str {
        match self {
            WaveletFilter::Morlet => "morlet",
            WaveletFilter::MexicanHat => "mexican_hat",
        }
    }
}

/// How complex wavelet responses are turned into real features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ComplexMode {
    RealOnly,
    RealImag,
}

impl ComplexMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ComplexMode::RealOnly => "real_only",
            ComplexMode::RealImag => "real_imag",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveletParams {
    /// Number of rotation centres on the Fibonacci lattice.
    pub rotations: usize,
    /// Number of dilations `a_i = 2^{i/Q}`, `i = 1..=M`.
    pub scales: usize,
    pub q: usize,
    pub wavenumber: f64,
    pub scale_factor: f64,
    pub filter: WaveletFilter,
    pub mode: ComplexMode,
    /// Divide every basis function by its L² norm on the sphere.
    pub normalize: bool,
}

impl Default for WaveletParams {
    fn default() -> Self {
        Self {
            rotations: 130,
            scales: 4,
            q: 6,
            wavenumber: 6.0,
            scale_factor: 1.0,
            filter: WaveletFilter::Morlet,
            mode: ComplexMode::RealOnly,
            normalize: false,
        }
    }
}

/// Multi-scale sinusoidal baselines share a scale schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleParams {
    pub num_freqs: usize,
    pub min_radius_deg: f64,
}

impl Default for ScaleParams {
    fn default() -> Self {
        Self { num_freqs: 16, min_radius_deg: 45.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EncodingSpec {
    Direct,
    Cartesian3d,
    Theory(ScaleParams),
    SphereCPlus(ScaleParams),
    SphereMPlus(ScaleParams),
    SphericalHarmonic { lmax: usize },
    SphericalWavelet(WaveletParams),
}

impl EncodingSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            EncodingSpec::Direct => "direct",
            EncodingSpec::Cartesian3d => "cartesian3d",
            EncodingSpec::Theory(_) => "theory",
            EncodingSpec::SphereCPlus(_) => "spherec+",
            EncodingSpec::SphereMPlus(_) => "spherem+",
            EncodingSpec::SphericalHarmonic { .. } => "sh",
            EncodingSpec::SphericalWavelet(_) => "sw",
        }
    }

    /// Length of the feature vector this spec produces.
    pub fn output_len(&self) -> usize {
        match self {
            EncodingSpec::Direct => 2,
            EncodingSpec::Cartesian3d => 3,
            EncodingSpec::Theory(s) => 6 * s.num_freqs,
            EncodingSpec::SphereCPlus(s) => 7 * s.num_freqs,
            EncodingSpec::SphereMPlus(s) => 9 * s.num_freqs,
            EncodingSpec::SphericalHarmonic { lmax } => (lmax + 1) * (lmax + 1),
            EncodingSpec::SphericalWavelet(w) => {
                let per = match w.mode {
                    ComplexMode::RealOnly => 1,
                    ComplexMode::RealImag => 2,
                };
                per * w.rotations * w.scales
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            EncodingSpec::Theory(s) | EncodingSpec::SphereCPlus(s) | EncodingSpec::SphereMPlus(s) => {
                if s.num_freqs == 0 {
                    return Err(Error::invalid("number of frequencies must be positive"));
                }
                if !(s.min_radius_deg > 0.0 && s.min_radius_deg.is_finite()) {
                    return Err(Error::invalid("minimum radius must be positive"));
                }
            }
            EncodingSpec::SphericalWavelet(w) => {
                if w.rotations == 0 || w.scales == 0 || w.q == 0 {
                    return Err(Error::invalid("wavelet N, M and Q must be positive"));
                }
                if w.q > 8 {
                    return Err(Error::invalid(format!("wavelet Q={} exceeds 8", w.q)));
                }
                if !(w.wavenumber > 0.0 && w.wavenumber.is_finite()) {
                    return Err(Error::invalid("wave number must be positive"));
                }
                if !(w.scale_factor > 0.0 && w.scale_factor.is_finite()) {
                    return Err(Error::invalid("scale factor must be positive"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Content hash of the canonical string form.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_string().as_bytes());
        hex::encode(&digest[..8])
    }
}

impl fmt::Display for EncodingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EncodingSpec::Direct | EncodingSpec::Cartesian3d => f.write_str(self.kind()),
            EncodingSpec::Theory(s) | EncodingSpec::SphereCPlus(s) | EncodingSpec::SphereMPlus(s) => {
                write!(f, "{}:S={},rmin={}", self.kind(), s.num_freqs, s.min_radius_deg)
            }
            EncodingSpec::SphericalHarmonic { lmax } => write!(f, "sh:L={lmax}"),
            EncodingSpec::SphericalWavelet(w) => write!(
                f,
                "sw:N={},M={},Q={},k={},w={},filter={},mode={},norm={}",
                w.rotations,
                w.scales,
                w.q,
                w.wavenumber,
                w.scale_factor,
                w.filter.as_str(),
                w.mode.as_str(),
                w.normalize
            ),
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| Error::format("encoding spec", format!("bad value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(Error::format("encoding spec", format!("bad boolean {other:?} for {key}"))),
    }
}

impl FromStr for EncodingSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let pairs: Vec<(&str, &str)> = rest
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(|p| {
                p.split_once('=')
                    .map(|(k, v)| (k.trim(), v.trim()))
                    .ok_or_else(|| Error::format("encoding spec", format!("expected key=value, got {p:?}")))
            })
            .collect::<Result<_>>()?;
        let unknown = |key: &str| Error::format("encoding spec", format!("unknown parameter {key:?} for {kind}"));

        let spec = match kind.to_ascii_lowercase().as_str() {
            "direct" | "cartesian3d" | "cartesian" => {
                if let Some((k, _)) = pairs.first() {
                    return Err(unknown(k));
                }
                if kind.eq_ignore_ascii_case("direct") {
                    EncodingSpec::Direct
                } else {
                    EncodingSpec::Cartesian3d
                }
            }
            k @ ("theory" | "spherec+" | "sphere_c_plus" | "spherem+" | "sphere_m_plus") => {
                let mut p = ScaleParams::default();
                for (key, value) in &pairs {
                    match *key {
                        "S" | "freqs" => p.num_freqs = parse_num(key, value)?,
                        "rmin" | "min_radius" => p.min_radius_deg = parse_num(key, value)?,
                        _ => return Err(unknown(key)),
                    }
                }
                match k {
                    "theory" => EncodingSpec::Theory(p),
                    "spherec+" | "sphere_c_plus" => EncodingSpec::SphereCPlus(p),
                    _ => EncodingSpec::SphereMPlus(p),
                }
            }
            "sh" | "spherical_harmonic" => {
                let mut lmax = 10;
                for (key, value) in &pairs {
                    match *key {
                        "L" | "lmax" => lmax = parse_num(key, value)?,
                        _ => return Err(unknown(key)),
                    }
                }
                EncodingSpec::SphericalHarmonic { lmax }
            }
            "sw" | "spherical_wavelet" => {
                let mut w = WaveletParams::default();
                for (key, value) in &pairs {
                    match *key {
                        "N" => w.rotations = parse_num(key, value)?,
                        "M" => w.scales = parse_num(key, value)?,
                        "Q" => w.q = parse_num(key, value)?,
                        "k" => w.wavenumber = parse_num(key, value)?,
                        "w" => w.scale_factor = parse_num(key, value)?,
                        "filter" => {
                            w.filter = match *value {
                                "morlet" => WaveletFilter::Morlet,
                                "mexican_hat" | "mexhat" => WaveletFilter::MexicanHat,
                                other => {
                                    return Err(Error::format("encoding spec", format!("unknown filter {other:?}")))
                                }
                            }
                        }
                        "mode" => {
                            w.mode = match *value {
                                "real_only" | "real" => ComplexMode::RealOnly,
                                "real_imag" | "complex" => ComplexMode::RealImag,
                                other => {
                                    return Err(Error::format("encoding spec", format!("unknown mode {other:?}")))
                                }
                            }
                        }
                        "norm" | "normalize" => w.normalize = parse_bool(key, value)?,
                        _ => return Err(unknown(key)),
                    }
                }
                EncodingSpec::SphericalWavelet(w)
            }
            other => return Err(Error::format("encoding spec", format!("unknown encoding kind {other:?}"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_cli_examples() {
        let sw: EncodingSpec = "sw:N=130,M=4,Q=6,k=6,w=1,filter=morlet,mode=real_only".parse().unwrap();
        assert_eq!(sw.output_len(), 520);
        let sh: EncodingSpec = "sh:L=20".parse().unwrap();
        assert_eq!(sh.output_len(), 441);
        let sw: EncodingSpec = "sw:N=130,M=4,Q=6,k=6".parse().unwrap();
        match sw {
            EncodingSpec::SphericalWavelet(w) => assert_eq!((w.wavenumber, w.scale_factor), (6.0, 1.0)),
            _ => panic!(),
        }
    }

    #[test]
    fn lengths() {
        let sw = |mode| EncodingSpec::SphericalWavelet(WaveletParams { rotations: 25, scales: 4, mode, ..Default::default() });
        assert_eq!(sw(ComplexMode::RealOnly).output_len(), 100);
        assert_eq!(sw(ComplexMode::RealImag).output_len(), 200);
        assert_eq!(EncodingSpec::SphericalHarmonic { lmax: 2 }.output_len(), 9);
        assert_eq!("theory:S=16,rmin=45".parse::<EncodingSpec>().unwrap().output_len(), 96);
        assert_eq!("spherec+:S=16".parse::<EncodingSpec>().unwrap().output_len(), 112);
        assert_eq!("spherem+:S=16".parse::<EncodingSpec>().unwrap().output_len(), 144);
    }

    #[test]
    fn rejects_bad_specs() {
        for bad in ["sw:Q=9", "sw:N=0", "sh:L=x", "sh:K=3", "fourier", "direct:S=1", "sw:filter=butterfly", "theory:S=0"] {
            assert!(bad.parse::<EncodingSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn fingerprint_tracks_content() {
        let a: EncodingSpec = "sh:L=20".parse().unwrap();
        let b: EncodingSpec = "sh:lmax=20".parse().unwrap();
        let c: EncodingSpec = "sh:L=21".parse().unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_ne!(a.fingerprint(), c.fingerprint());
    }

    proptest! {
        #[test]
        fn display_round_trips(n in 1usize..300, m in 1usize..8, q in 1usize..=8, k in 0.5f64..12.0, w in 0.25f64..2.0, imag: bool, norm: bool) {
            let spec = EncodingSpec::SphericalWavelet(WaveletParams {
                rotations: n, scales: m, q, wavenumber: k, scale_factor: w,
                filter: WaveletFilter::Morlet,
                mode: if imag { ComplexMode::RealImag } else { ComplexMode::RealOnly },
                normalize: norm,
            });
            prop_assert_eq!(spec.to_string().parse::<EncodingSpec>().unwrap(), spec);
        }
    }
}
