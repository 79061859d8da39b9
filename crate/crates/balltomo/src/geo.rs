//! Ball geometry: spherical coordinates (r, φ, t), the local orthonormal
//! frame, tesseroid parameter boxes and their validity constraints.
//!
//! A point in the ball of radius `BALL_RADIUS` is addressed by its radius
//! `r`, longitude `φ ∈ [0, 2π)` and polar-distance cosine `t = cos θ ∈ [−1, 1]`:
//!
//! ```text
//! x(r, φ, t) = r · (√(1−t²) cos φ, √(1−t²) sin φ, t)
//! ```
//!
//! All computations run on the unit ball; physical radii enter only through
//! I/O scaling factors.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Radius of the computational ball. Everything internal is unit-ball.
pub const BALL_RADIUS: f64 = 1.0;

pub const TWO_PI: f64 = 2.0 * PI;

/// Core-mantle boundary over Earth radius, the default lower bound `ρ` for
/// tesseroid centres (3482 km / 6371 km).
pub const CMB_FRACTION: f64 = 3482.0 / 6371.0;

#[derive(Debug, Error, PartialEq)]
pub enum GeoError {
    /// The local frame degenerates at the poles (t = ±1): ε^φ and ε^t are
    /// not defined there.
    #[error("local frame undefined at t = {0} (pole)")]
    DegenerateFrame(f64),
}

/// 3-vector helpers used throughout; plain arrays keep call sites light.
pub type Vec3 = [f64; 3];

#[inline]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Normalize an angle into `[0, 2π)`.
#[inline]
pub fn wrap_longitude(phi: f64) -> f64 {
    let mut p = phi % TWO_PI;
    if p < 0.0 {
        p += TWO_PI;
    }
    // rem can return exactly 2π for inputs just below a multiple of 2π
    if p >= TWO_PI {
        p = 0.0;
    }
    p
}

/// Signed angular difference `a − b` wrapped into `[−π, π]`.
#[inline]
pub fn wrap_angle_diff(a: f64, b: f64) -> f64 {
    let mut d = (a - b) % TWO_PI;
    if d > PI {
        d -= TWO_PI;
    } else if d < -PI {
        d += TWO_PI;
    }
    d
}

/// A point of the ball in (r, φ, t) coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphericalPoint {
    /// Radius, `0 ≤ r ≤ BALL_RADIUS`.
    pub r: f64,
    /// Longitude in `[0, 2π)`.
    pub phi: f64,
    /// Polar-distance cosine in `[−1, 1]`.
    pub t: f64,
}

impl SphericalPoint {
    /// Builds a point, normalizing the longitude into `[0, 2π)`.
    pub fn new(r: f64, phi: f64, t: f64) -> Self {
        Self {
            r,
            phi: wrap_longitude(phi),
            t,
        }
    }
}

/// `x(r, φ, t) = r (√(1−t²) cos φ, √(1−t²) sin φ, t)`.
pub fn spherical_to_cartesian(p: SphericalPoint) -> Vec3 {
    let s = (1.0 - p.t * p.t).max(0.0).sqrt();
    [
        p.r * s * p.phi.cos(),
        p.r * s * p.phi.sin(),
        p.r * p.t,
    ]
}

/// Inverse of [`spherical_to_cartesian`]. At the origin the angular
/// coordinates are conventional (φ = 0, t = 1).
pub fn cartesian_to_spherical(x: Vec3) -> SphericalPoint {
    let r = norm(x);
    if r == 0.0 {
        return SphericalPoint { r: 0.0, phi: 0.0, t: 1.0 };
    }
    let t = (x[2] / r).clamp(-1.0, 1.0);
    let phi = if x[0] == 0.0 && x[1] == 0.0 {
        0.0
    } else {
        wrap_longitude(x[1].atan2(x[0]))
    };
    SphericalPoint { r, phi, t }
}

/// The local orthonormal frame `(ε^r, ε^φ, ε^t)` at (φ, t).
///
/// Fails at the poles where ε^φ and ε^t are undefined.
pub fn local_frame(phi: f64, t: f64) -> Result<(Vec3, Vec3, Vec3), GeoError> {
    if t.abs() >= 1.0 {
        return Err(GeoError::DegenerateFrame(t));
    }
    let s = (1.0 - t * t).sqrt();
    let (sin_phi, cos_phi) = phi.sin_cos();
    let e_r = [s * cos_phi, s * sin_phi, t];
    let e_phi = [-sin_phi, cos_phi, 0.0];
    let e_t = [-t * cos_phi, -t * sin_phi, s];
    Ok((e_r, e_phi, e_t))
}

/// Domain constraints shared by all tesseroids: minimal half-widths and the
/// depth bound `ρ` (centres live in `[ρ·R, R]` radially).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub rho: f64,
    pub eps_r: f64,
    pub eps_phi: f64,
    pub eps_t: f64,
}

impl Default for Domain {
    fn default() -> Self {
        Self {
            rho: CMB_FRACTION,
            eps_r: 1e-2,
            eps_phi: 1e-2,
            eps_t: 1e-2,
        }
    }
}

impl Domain {
    #[inline]
    pub fn r_min(&self) -> f64 {
        self.rho * BALL_RADIUS
    }
    #[inline]
    pub fn r_max(&self) -> f64 {
        BALL_RADIUS
    }
    #[inline]
    pub fn t_min(&self) -> f64 {
        -1.0 + self.eps_t
    }
    #[inline]
    pub fn t_max(&self) -> f64 {
        1.0 - self.eps_t
    }
}

/// Centre/half-width parameters of a tesseroid hat function.
///
/// The carrier is the curvilinear box
/// `[R−ΔR, R+ΔR] × [Φ−ΔΦ, Φ+ΔΦ] × [T−ΔT, T+ΔT]` clipped radially to
/// `[ρR, R]` and latitudinally to `[−1+ε_T, 1−ε_T]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tesseroid {
    pub r: f64,
    pub phi: f64,
    pub t: f64,
    pub dr: f64,
    pub dphi: f64,
    pub dt: f64,
    pub domain: Domain,
}

impl Tesseroid {
    pub fn new(r: f64, phi: f64, t: f64, dr: f64, dphi: f64, dt: f64, domain: Domain) -> Self {
        Self { r, phi, t, dr, dphi, dt, domain }
    }

    /// Branch start `P = ⌊(Φ−ΔΦ)/π⌋·π`; the support lives in `[P, P+2π]`.
    /// Recomputed on demand, never stored.
    pub fn branch_start(&self) -> f64 {
        ((self.phi - self.dphi) / PI).floor() * PI
    }

    /// Clipped radial support `[max(ρR, R−ΔR), min(R, R+ΔR)]`.
    pub fn r_support(&self) -> (f64, f64) {
        (
            self.domain.r_min().max(self.r - self.dr),
            self.domain.r_max().min(self.r + self.dr),
        )
    }

    /// Clipped latitudinal support `[max(−1+ε_T, T−ΔT), min(1−ε_T, T+ΔT)]`.
    pub fn t_support(&self) -> (f64, f64) {
        (
            self.domain.t_min().max(self.t - self.dt),
            self.domain.t_max().min(self.t + self.dt),
        )
    }

    /// Longitudinal support `[Φ−ΔΦ, Φ+ΔΦ]` in the element's own branch;
    /// never clipped since `2ΔΦ ≤ 2π`.
    pub fn phi_support(&self) -> (f64, f64) {
        (self.phi - self.dphi, self.phi + self.dphi)
    }
}

/// One violated tesseroid constraint, with the offending value.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintViolation {
    pub what: &'static str,
    pub value: f64,
}

impl std::fmt::Display for ConstraintViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (got {})", self.what, self.value)
    }
}

/// Checks every natural tesseroid constraint and reports all violations:
///
/// `R ∈ [ρR, R_max]`, `ε_R ≤ ΔR ≤ R_max/2`, `Φ ∈ [0, 2π]`, `ε_Φ ≤ ΔΦ ≤ π`,
/// `T ∈ [−1+ε_T, 1−ε_T]`, `ε_T ≤ ΔT ≤ 0.5`, plus non-degeneracy of the
/// clipped support box.
pub fn validate_tesseroid(ts: &Tesseroid) -> Result<(), Vec<ConstraintViolation>> {
    let d = &ts.domain;
    let mut v = Vec::new();
    let mut check = |ok: bool, what: &'static str, value: f64| {
        if !ok {
            v.push(ConstraintViolation { what, value });
        }
    };
    check(ts.r >= d.r_min(), "R >= rho*R_ball", ts.r);
    check(ts.r <= d.r_max(), "R <= R_ball", ts.r);
    check(ts.dr >= d.eps_r, "dR >= eps_R", ts.dr);
    check(ts.dr <= d.r_max() / 2.0, "dR <= R_ball/2", ts.dr);
    check(ts.phi >= 0.0, "Phi >= 0", ts.phi);
    check(ts.phi <= TWO_PI, "Phi <= 2*pi", ts.phi);
    check(ts.dphi >= d.eps_phi, "dPhi >= eps_Phi", ts.dphi);
    check(ts.dphi <= PI, "dPhi <= pi", ts.dphi);
    check(ts.t >= d.t_min(), "T >= -1+eps_T", ts.t);
    check(ts.t <= d.t_max(), "T <= 1-eps_T", ts.t);
    check(ts.dt >= d.eps_t, "dT >= eps_T", ts.dt);
    check(ts.dt <= 0.5, "dT <= 0.5", ts.dt);
    let (rl, ru) = ts.r_support();
    check(rl < ru, "radial support non-degenerate", ru - rl);
    let (tl, tu) = ts.t_support();
    check(tl < tu, "latitudinal support non-degenerate", tu - tl);
    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}

/// Index of a ball polynomial: radial degree `m`, angular degree `n`,
/// order `j` with `|j| ≤ n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PolyIndex {
    pub m: u32,
    pub n: u32,
    pub j: i32,
}

impl PolyIndex {
    pub fn new(m: u32, n: u32, j: i32) -> Self {
        debug_assert!(j.unsigned_abs() <= n);
        Self { m, n, j }
    }
}

/// A trial function of the hybrid dictionary: either a global ball
/// polynomial or a local tesseroid hat.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DictionaryElement {
    Poly(PolyIndex),
    Hat(Tesseroid),
}

impl DictionaryElement {
    pub fn is_hat(&self) -> bool {
        matches!(self, DictionaryElement::Hat(_))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn axis_and_pole_cases() {
        let x = spherical_to_cartesian(SphericalPoint::new(1.0, 0.0, 0.0));
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(x[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(x[2], 0.0, epsilon = 1e-15);

        let x = spherical_to_cartesian(SphericalPoint::new(1.0, 0.0, 1.0));
        assert_abs_diff_eq!(x[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(x[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(x[2], 1.0, epsilon = 1e-15);

        let x = spherical_to_cartesian(SphericalPoint::new(0.5, PI / 2.0, 0.0));
        assert_abs_diff_eq!(x[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(x[1], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(x[2], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn frame_axis_cases() {
        let (er, ep, et) = local_frame(0.0, 0.0).unwrap();
        assert_eq!(er, [1.0, 0.0, 0.0]);
        assert_eq!(ep, [0.0, 1.0, 0.0]);
        assert_eq!(et, [0.0, 0.0, 1.0]);
        let (_, ep, _) = local_frame(PI / 2.0, 0.0).unwrap();
        assert_abs_diff_eq!(ep[0], -1.0, epsilon = 1e-15);
        assert!(local_frame(0.3, 1.0).is_err());
        assert!(local_frame(0.3, -1.0).is_err());
    }

    proptest! {
        #[test]
        fn roundtrip_cartesian(r in 1e-6f64..1.0, phi in 0.0f64..TWO_PI, t in -0.999_999f64..0.999_999) {
            let p = SphericalPoint::new(r, phi, t);
            let x = spherical_to_cartesian(p);
            let q = cartesian_to_spherical(x);
            let y = spherical_to_cartesian(q);
            prop_assert!(norm(sub(x, y)) < 1e-12);
        }

        #[test]
        fn frame_orthonormal_right_handed(phi in 0.0f64..TWO_PI, t in -0.999f64..0.999) {
            let (er, ep, et) = local_frame(phi, t).unwrap();
            for (a, b) in [(er, ep), (er, et), (ep, et)] {
                prop_assert!(dot(a, b).abs() < 1e-14);
            }
            for e in [er, ep, et] {
                prop_assert!((norm(e) - 1.0).abs() < 1e-14);
            }
            // right-handed: ε^r × ε^φ = ε^t
            let c = cross(er, ep);
            prop_assert!(norm(sub(c, et)) < 1e-13);
        }
    }

    #[test]
    fn roundtrip_thousand_points() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..1000 {
            let p = SphericalPoint::new(
                rng.gen_range(1e-3..1.0),
                rng.gen_range(0.0..TWO_PI),
                rng.gen_range(-0.9999..0.9999),
            );
            let x = spherical_to_cartesian(p);
            let y = spherical_to_cartesian(cartesian_to_spherical(x));
            assert!(norm(sub(x, y)) < 1e-12);
        }
    }

    #[test]
    fn tesseroid_validation() {
        let dom = Domain::default();
        let ok = Tesseroid::new(0.8, PI, 0.0, 0.1, 1.0, 0.3, dom);
        assert!(validate_tesseroid(&ok).is_ok());

        let bad_dt = Tesseroid::new(0.8, PI, 0.0, 0.1, 1.0, 0.6, dom);
        let v = validate_tesseroid(&bad_dt).unwrap_err();
        assert!(v.iter().any(|c| c.what == "dT <= 0.5"));

        let bad_r = Tesseroid::new(0.5, PI, 0.0, 0.1, 1.0, 0.3, dom);
        let v = validate_tesseroid(&bad_r).unwrap_err();
        assert!(v.iter().any(|c| c.what == "R >= rho*R_ball"));
    }

    #[test]
    fn wrap_helpers() {
        assert_abs_diff_eq!(wrap_longitude(-0.1), TWO_PI - 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(wrap_longitude(TWO_PI), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(wrap_angle_diff(0.1, TWO_PI - 0.1), 0.2, epsilon = 1e-14);
        assert_abs_diff_eq!(wrap_angle_diff(TWO_PI - 0.1, 0.1), -0.2, epsilon = 1e-14);
    }

    #[test]
    fn branch_start_cases() {
        let dom = Domain::default();
        // Phi - dPhi negative => branch starts at -pi
        let a = Tesseroid::new(0.8, 0.0, 0.0, 0.1, PI / 2.0, 0.3, dom);
        assert_abs_diff_eq!(a.branch_start(), -PI, epsilon = 1e-15);
        // Phi - dPhi in [0, pi) => branch starts at 0
        let b = Tesseroid::new(0.8, PI, 0.0, 0.1, PI / 2.0, 0.3, dom);
        assert_abs_diff_eq!(b.branch_start(), 0.0, epsilon = 1e-15);
        // Phi - dPhi >= pi => branch starts at pi
        let c = Tesseroid::new(0.8, TWO_PI, 0.0, 0.1, PI / 2.0, 0.3, dom);
        assert_abs_diff_eq!(c.branch_start(), PI, epsilon = 1e-15);
    }
}
