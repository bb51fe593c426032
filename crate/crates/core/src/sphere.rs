//! Geometry on the unit sphere.
//!
//! Points are stored as colatitude `theta` in `[0, π]` and longitude `phi`
//! in `[0, 2π)`. Geographic degrees (latitude, longitude in `[-180, 180)`)
//! are converted at the edges of the crate; everything internal works in
//! radians.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

/// Mean Earth radius in kilometres.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Golden ratio, used by the Fibonacci lattice.
pub const GOLDEN_RATIO: f64 = 1.618_033_988_749_895;

/// A location on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePoint {
    theta: f64,
    phi: f64,
}

impl SpherePoint {
    /// Builds a point from colatitude and longitude in radians. `phi` is
    /// wrapped into `[0, 2π)`.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !theta.is_finite() || !phi.is_finite() {
            return Err(Error::invalid("sphere point coordinates must be finite"));
        }
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::invalid(format!("colatitude {theta} outside [0, π]")));
        }
        Ok(Self { theta, phi: wrap_tau(phi) })
    }

    /// Geographic degrees to a sphere point.
    pub fn from_lat_lon_deg(lat_deg: f64, lon_deg: f64) -> Result<Self> {
        if !(-90.0..=90.0).contains(&lat_deg) {
            return Err(Error::invalid(format!("latitude {lat_deg} outside [-90, 90]")));
        }
        Self::new((90.0 - lat_deg).to_radians().clamp(0.0, PI), lon_deg.to_radians())
    }

    /// Builds a point from a (not necessarily unit) cartesian vector.
    pub fn from_unit_vector(v: [f64; 3]) -> Self {
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let z = (v[2] / norm).clamp(-1.0, 1.0);
        let theta = z.acos();
        let phi = v[1].atan2(v[0]);
        Self { theta, phi: wrap_tau(phi) }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn lat_deg(&self) -> f64 {
        90.0 - self.theta.to_degrees()
    }

    /// Longitude in degrees, wrapped into `[-180, 180)`.
    pub fn lon_deg(&self) -> f64 {
        wrap_signed(self.phi).to_degrees()
    }

    /// Latitude in radians.
    pub fn lat_rad(&self) -> f64 {
        PI / 2.0 - self.theta
    }

    /// Longitude in radians, wrapped into `[-π, π)`.
    pub fn lon_rad(&self) -> f64 {
        wrap_signed(self.phi)
    }

    pub fn unit_vector(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }
}

fn wrap_tau(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs.
    if w >= TAU {
        0.0
    } else {
        w
    }
}

fn wrap_signed(phi: f64) -> f64 {
    let w = wrap_tau(phi + PI) - PI;
    if w >= PI {
        w - TAU
    } else {
        w
    }
}

pub type Matrix3 = [[f64; 3]; 3];

pub(crate) fn mat_mul(a: &Matrix3, b: &Matrix3) -> Matrix3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub(crate) fn mat_vec(m: &Matrix3, v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

pub(crate) fn transpose(m: &Matrix3) -> Matrix3 {
    let mut t = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = m[j][i];
        }
    }
    t
}

fn rot_z(angle: f64) -> Matrix3 {
    let (s, c) = angle.sin_cos();
    [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
}

fn rot_y(angle: f64) -> Matrix3 {
    let (s, c) = angle.sin_cos();
    [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]]
}

/// Rotation in Z-Y-Z Euler angles: `R = Rz(alpha) · Ry(beta) · Rz(gamma)`.
///
/// This is the only convention used in the crate. `Ry(beta)` with
/// `Rz(alpha)` carries the north pole to the point `(theta = beta, phi = alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EulerRotation {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl EulerRotation {
    pub const IDENTITY: Self = Self { alpha: 0.0, beta: 0.0, gamma: 0.0 };

    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self { alpha, beta, gamma }
    }

    /// The rotation that moves the north pole onto `p`, with no in-plane twist.
    pub fn onto(p: SpherePoint) -> Self {
        Self::new(p.phi(), p.theta(), 0.0)
    }

    pub fn matrix(&self) -> Matrix3 {
        mat_mul(&mat_mul(&rot_z(self.alpha), &rot_y(self.beta)), &rot_z(self.gamma))
    }

    pub fn inverse(&self) -> Self {
        Self::new(-self.gamma, -self.beta, -self.alpha)
    }

    /// `self ∘ other`: applying the result equals applying `other` first,
    /// then `self`.
    pub fn compose(&self, other: &Self) -> Self {
        Self::from_matrix(&mat_mul(&self.matrix(), &other.matrix()))
    }

    /// Z-Y-Z decomposition of a rotation matrix. At the gimbal-locked
    /// configurations (`beta` of 0 or π) the twist is folded into `alpha`.
    pub fn from_matrix(m: &Matrix3) -> Self {
        let cb = m[2][2].clamp(-1.0, 1.0);
        let sb = (m[0][2] * m[0][2] + m[1][2] * m[1][2]).sqrt();
        if sb > 1e-12 {
            Self {
                alpha: m[1][2].atan2(m[0][2]),
                beta: sb.atan2(cb),
                gamma: m[2][1].atan2(-m[2][0]),
            }
        } else if cb > 0.0 {
            Self { alpha: m[1][0].atan2(m[0][0]), beta: 0.0, gamma: 0.0 }
        } else {
            Self { alpha: (-m[1][0]).atan2(-m[0][0]), beta: PI, gamma: 0.0 }
        }
    }
}

/// Applies `r` to `p`.
pub fn rotate(p: SpherePoint, r: &EulerRotation) -> SpherePoint {
    SpherePoint::from_unit_vector(mat_vec(&r.matrix(), p.unit_vector()))
}

/// A stereographic dilation by a positive factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dilation {
    a: f64,
}

impl Dilation {
    pub const IDENTITY: Self = Self { a: 1.0 };

    pub fn new(a: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::invalid(format!("dilation factor must be positive, got {a}")));
        }
        Ok(Self { a })
    }

    pub fn factor(&self) -> f64 {
        self.a
    }
}

/// Stereographic cocycle `λ(a, θ) = 4a² / ((a² − 1)cos θ + a² + 1)²`.
///
/// `λ(a, ·)` is the Jacobian `dμ(ω_{1/a}) / dμ(ω)`, so `λ^{1/2}(a, ω) s(ω_{1/a})`
/// is the L²-preserving dilation of `s` by `a`.
pub fn cocycle(a: f64, theta: f64) -> f64 {
    cocycle_from_cos(a, theta.cos())
}

#[inline]
pub(crate) fn cocycle_from_cos(a: f64, cos_theta: f64) -> f64 {
    let a2 = a * a;
    let d = (a2 - 1.0) * cos_theta + a2 + 1.0;
    4.0 * a2 / (d * d)
}

/// Dilates a colatitude by `a` through the stereographic projection from
/// the south pole: `tan(θ'/2) = a · tan(θ/2)`. Returns `θ'` together with
/// `λ(a, θ)^{1/2}`.
pub fn stereographic_dilate(theta: f64, a: f64) -> Result<(f64, f64)> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::invalid(format!("dilation factor must be positive, got {a}")));
    }
    if !(0.0..PI).contains(&theta) || PI - theta <= 1.5e-9 {
        return Err(Error::PoleSingularity { theta });
    }
    let dilated = 2.0 * (a * (theta / 2.0).tan()).atan();
    Ok((dilated, cocycle(a, theta).sqrt()))
}

/// Haversine distance between two points on a sphere of the given radius.
pub fn great_circle_distance(p: SpherePoint, q: SpherePoint, radius_km: f64) -> f64 {
    let (lat1, lat2) = (p.lat_rad(), q.lat_rad());
    let dlat = lat2 - lat1;
    let dlon = q.phi() - p.phi();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * radius_km * h.sqrt().clamp(0.0, 1.0).asin()
}

/// Area of an equirectangular cell centred at `lat_deg`, `R² Δ² cos(lat)`.
pub fn cell_area_km2(lat_deg: f64, resolution_deg: f64, radius_km: f64) -> Result<f64> {
    if !(-90.0..=90.0).contains(&lat_deg) {
        return Err(Error::invalid(format!("latitude {lat_deg} outside [-90, 90]")));
    }
    if !(resolution_deg > 0.0) {
        return Err(Error::invalid(format!("resolution must be positive, got {resolution_deg}")));
    }
    if lat_deg.abs() == 90.0 {
        return Ok(0.0);
    }
    let delta = resolution_deg.to_radians();
    Ok((radius_km * radius_km * delta * delta * lat_deg.to_radians().cos()).max(0.0))
}

/// `n` near-uniform points: `z_i = 1 − (2i + 1)/n`, `φ_i = 2πi/Φ mod 2π`.
pub fn fibonacci_lattice(n: usize) -> Result<Vec<SpherePoint>> {
    if n == 0 {
        return Err(Error::invalid("lattice size must be at least 1"));
    }
    Ok((0..n)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / n as f64;
            SpherePoint { theta: z.clamp(-1.0, 1.0).acos(), phi: wrap_tau(TAU * i as f64 / GOLDEN_RATIO) }
        })
        .collect())
}

/// Central angle between two points, in radians.
pub fn angular_distance(p: SpherePoint, q: SpherePoint) -> f64 {
    great_circle_distance(p, q, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn lattice_small_cases() {
        let one = fibonacci_lattice(1).unwrap();
        assert_eq!(one.len(), 1);
        assert!(close(one[0].theta(), PI / 2.0, 1e-15));

        let two = fibonacci_lattice(2).unwrap();
        assert!(close(two[0].theta(), 0.5f64.acos(), 1e-15));
        assert!(close(two[1].theta(), (-0.5f64).acos(), 1e-15));
        assert!(close(two[0].theta(), std::f64::consts::FRAC_PI_3, 1e-12));
        assert!(close(two[1].theta(), 2.0 * std::f64::consts::FRAC_PI_3, 1e-12));

        assert!(fibonacci_lattice(0).is_err());
    }

    #[test]
    fn lattice_is_deterministic_and_centred() {
        assert_eq!(fibonacci_lattice(100).unwrap(), fibonacci_lattice(100).unwrap());
        let mut c = [0.0; 3];
        for p in fibonacci_lattice(100).unwrap() {
            let v = p.unit_vector();
            for k in 0..3 {
                c[k] += v[k];
            }
        }
        let norm = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt() / 100.0;
        assert!(norm < 0.05, "centre of mass {norm}");
    }

    #[test]
    fn lattice_min_separation() {
        for n in [10usize, 100, 1000] {
            let pts = fibonacci_lattice(n).unwrap();
            let bound = 0.5 * (8.0 * PI / (3f64.sqrt() * n as f64)).sqrt();
            let mut min = f64::INFINITY;
            for i in 0..n {
                for j in i + 1..n {
                    min = min.min(angular_distance(pts[i], pts[j]));
                }
            }
            assert!(min >= bound, "n={n}: min {min} < {bound}");
        }
    }

    #[test]
    fn rotation_examples() {
        let p = SpherePoint::new(PI / 2.0, 0.0).unwrap();
        let q = rotate(p, &EulerRotation::IDENTITY);
        assert!(close(q.theta(), PI / 2.0, 1e-15) && close(q.phi(), 0.0, 1e-15));

        let north = SpherePoint::new(0.0, 0.0).unwrap();
        let q = rotate(north, &EulerRotation::new(0.0, PI / 2.0, 0.0));
        assert!(close(q.theta(), PI / 2.0, 1e-12));
        assert!(close(q.phi(), 0.0, 1e-12));
    }

    #[test]
    fn dilation_examples() {
        let (t, c) = stereographic_dilate(0.7, 1.0).unwrap();
        assert!(close(t, 0.7, 1e-15) && close(c, 1.0, 1e-15));

        let (t, c) = stereographic_dilate(PI / 2.0, 2.0).unwrap();
        assert!(close(t, 2.0 * 2f64.atan(), 1e-14));
        assert!(close(t, 2.2143, 1e-4));
        assert!(close(c, 0.8, 1e-14));

        assert!(matches!(stereographic_dilate(PI - 1e-9, 2.0), Err(Error::PoleSingularity { .. })));
        assert!(matches!(stereographic_dilate(PI, 2.0), Err(Error::PoleSingularity { .. })));
        assert!(matches!(stereographic_dilate(0.3, 0.0), Err(Error::InvalidArgument(_))));
        assert!(Dilation::new(-1.0).is_err());
        assert_eq!(Dilation::IDENTITY.factor(), 1.0);
    }

    #[test]
    fn distances() {
        let p = SpherePoint::from_lat_lon_deg(0.0, 0.0).unwrap();
        let q = SpherePoint::from_lat_lon_deg(0.0, 90.0).unwrap();
        let r = SpherePoint::from_lat_lon_deg(0.0, 180.0).unwrap();
        assert_eq!(great_circle_distance(p, p, EARTH_RADIUS_KM), 0.0);
        assert!(close(great_circle_distance(p, q, EARTH_RADIUS_KM), EARTH_RADIUS_KM * PI / 2.0, 1e-9));
        assert!(close(great_circle_distance(p, r, EARTH_RADIUS_KM), EARTH_RADIUS_KM * PI, 1e-9));
        assert!(close(EARTH_RADIUS_KM * PI / 2.0, 10007.5, 0.1));
        assert!(close(EARTH_RADIUS_KM * PI, 20015.1, 0.1));
    }

    #[test]
    fn cell_areas() {
        let eq = cell_area_km2(0.0, 0.1, EARTH_RADIUS_KM).unwrap();
        assert!(close(eq, 123.64, 0.01), "{eq}");
        assert_eq!(cell_area_km2(90.0, 0.1, EARTH_RADIUS_KM).unwrap(), 0.0);
        let sixty = cell_area_km2(60.0, 0.1, EARTH_RADIUS_KM).unwrap();
        assert!(close(sixty, eq / 2.0, 1e-9));
        assert!(cell_area_km2(91.0, 0.1, EARTH_RADIUS_KM).is_err());
    }

    #[test]
    fn geographic_round_trip_edges() {
        let p = SpherePoint::from_lat_lon_deg(10.0, 180.0).unwrap();
        assert!(close(p.lon_deg(), -180.0, 1e-12));
        let p = SpherePoint::new(1.0, -1e-300).unwrap();
        assert!(p.phi() < TAU);
        assert!(SpherePoint::new(-0.1, 0.0).is_err());
    }

    fn point() -> impl Strategy<Value = SpherePoint> {
        (0.0..PI, 0.0..TAU).prop_map(|(t, p)| SpherePoint::new(t, p).unwrap())
    }

    fn rotation() -> impl Strategy<Value = EulerRotation> {
        (-PI..PI, 0.0..PI, -PI..PI).prop_map(|(a, b, g)| EulerRotation::new(a, b, g))
    }

    fn angle_diff(a: f64, b: f64) -> f64 {
        let d = (a - b).rem_euclid(TAU);
        d.min(TAU - d)
    }

    fn same_point(p: SpherePoint, q: SpherePoint, tol: f64) -> bool {
        let (u, v) = (p.unit_vector(), q.unit_vector());
        (0..3).all(|k| (u[k] - v[k]).abs() < tol)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn rotate_then_inverse_is_identity(p in point(), r in rotation()) {
            let back = rotate(rotate(p, &r), &r.inverse());
            prop_assert!(same_point(p, back, 1e-10));
            if p.theta() > 1e-6 && PI - p.theta() > 1e-6 {
                prop_assert!(close(back.theta(), p.theta(), 1e-8));
                prop_assert!(angle_diff(back.phi(), p.phi()) < 1e-6);
            }
        }

        #[test]
        fn rotation_matrix_is_orthogonal(r in rotation()) {
            let m = r.matrix();
            let mtm = mat_mul(&transpose(&m), &m);
            for i in 0..3 {
                for j in 0..3 {
                    let id = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((mtm[i][j] - id).abs() < 1e-12);
                }
            }
            let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
            prop_assert!((det - 1.0).abs() < 1e-12);
        }

        #[test]
        fn composition_matches_sequential(p in point(), r1 in rotation(), r2 in rotation()) {
            let composed = rotate(p, &r1.compose(&r2));
            let sequential = rotate(rotate(p, &r2), &r1);
            prop_assert!(same_point(composed, sequential, 1e-10));
        }

        #[test]
        fn geographic_round_trip(p in point()) {
            let q = SpherePoint::from_lat_lon_deg(p.lat_deg(), p.lon_deg()).unwrap();
            prop_assert!(close(q.theta(), p.theta(), 1e-12));
            prop_assert!(angle_diff(q.phi(), p.phi()) < 1e-12);
        }

        #[test]
        fn dilation_inverse(theta in 0.0..(PI - 0.01), a in 0.125f64..8.0) {
            let (t1, _) = stereographic_dilate(theta, a).unwrap();
            let (t2, _) = stereographic_dilate(t1, 1.0 / a).unwrap();
            prop_assert!(close(t2, theta, 1e-10));
        }

        // λ(ab, θ) = λ(a, θ_{1/b}) · λ(b, θ), where θ_{1/b} is θ dilated by 1/b.
        #[test]
        fn cocycle_property(theta in 0.0..(PI - 0.01), a in 0.125f64..8.0, b in 0.125f64..8.0) {
            let (theta_b, _) = stereographic_dilate(theta, 1.0 / b).unwrap();
            let lhs = cocycle(a * b, theta);
            let rhs = cocycle(a, theta_b) * cocycle(b, theta);
            prop_assert!(((lhs - rhs) / lhs).abs() < 1e-8);
        }

        #[test]
        fn haversine_symmetric_and_triangle(p in point(), q in point(), r in point()) {
            let d = |x, y| great_circle_distance(x, y, EARTH_RADIUS_KM);
            prop_assert!(close(d(p, q), d(q, p), 1e-9));
            prop_assert!(d(p, r) <= d(p, q) + d(q, r) + 1e-6);
        }
    }
}
