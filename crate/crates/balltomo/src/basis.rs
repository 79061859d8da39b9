//! Point evaluation and Cartesian gradients of the two trial-function
//! families: tesseroid hat functions and orthonormal ball polynomials.
//!
//! Hat functions are products of three 1-D hats on the (clipped) carrier box:
//!
//! ```text
//! N_{A,ΔA}(a) = χ_supp(a) · Π_j (ΔA_j − |a_j − A_j|)/ΔA_j
//! ```
//!
//! Ball polynomials combine a Jacobi factor in `I(r) = 2(r/R)² − 1`, a power
//! `(r/R)ⁿ` and a real fully normalized surface harmonic:
//!
//! ```text
//! G_{m,n,j}(x) = p_{m,n} P_m^{(0,n+1/2)}(I(r)) (r/R)ⁿ q_{n,j} P_{n,|j|}(t) Trig(jφ)
//! ```

use crate::geo::{
    local_frame, wrap_angle_diff, DictionaryElement, PolyIndex, SphericalPoint, Tesseroid, Vec3,
    BALL_RADIUS,
};
use crate::special::{
    assoc_legendre, jacobi, jacobi_derivative, legendre_over_sine, p_norm, q_norm,
    sine_times_legendre_prime, trig,
};

#[inline]
fn hat_1d(x: f64, center: f64, half_width: f64) -> f64 {
    (half_width - (x - center).abs()) / half_width
}

#[inline]
fn sgn(x: f64) -> f64 {
    // sgn(0) := 0, the kink value; integrals never weight the kink set
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Hat value at `p`; zero outside the clipped carrier, one at the centre.
pub fn fehf_eval(ts: &Tesseroid, p: &SphericalPoint) -> f64 {
    let (rl, ru) = ts.r_support();
    if p.r < rl || p.r > ru {
        return 0.0;
    }
    let (tl, tu) = ts.t_support();
    if p.t < tl || p.t > tu {
        return 0.0;
    }
    // longitude measured in the element's branch
    let dphi = wrap_angle_diff(p.phi, ts.phi);
    if dphi.abs() > ts.dphi {
        return 0.0;
    }
    hat_1d(p.r, ts.r, ts.dr)
        * ((ts.dphi - dphi.abs()) / ts.dphi)
        * hat_1d(p.t, ts.t, ts.dt)
}

/// Cartesian gradient of the hat, valid almost everywhere (the kink planes
/// carry the convention sgn(0) = 0); zero outside the carrier.
pub fn fehf_gradient(ts: &Tesseroid, p: &SphericalPoint) -> Vec3 {
    let (rl, ru) = ts.r_support();
    let (tl, tu) = ts.t_support();
    let dphi = wrap_angle_diff(p.phi, ts.phi);
    if p.r < rl || p.r > ru || p.t < tl || p.t > tu || dphi.abs() > ts.dphi {
        return [0.0, 0.0, 0.0];
    }
    let Ok((e_r, e_phi, e_t)) = local_frame(p.phi, p.t) else {
        return [0.0, 0.0, 0.0];
    };
    let hr = hat_1d(p.r, ts.r, ts.dr);
    let hp = (ts.dphi - dphi.abs()) / ts.dphi;
    let ht = hat_1d(p.t, ts.t, ts.dt);
    let s = (1.0 - p.t * p.t).sqrt();
    let g_r = -sgn(p.r - ts.r) / ts.dr * hp * ht;
    let g_phi = (1.0 / p.r) * (1.0 / s) * hr * (-sgn(dphi) / ts.dphi) * ht;
    let g_t = (1.0 / p.r) * s * hr * hp * (-sgn(p.t - ts.t) / ts.dt);
    [
        e_r[0] * g_r + e_phi[0] * g_phi + e_t[0] * g_t,
        e_r[1] * g_r + e_phi[1] * g_phi + e_t[1] * g_t,
        e_r[2] * g_r + e_phi[2] * g_phi + e_t[2] * g_t,
    ]
}

#[inline]
fn radial_argument(r: f64) -> f64 {
    2.0 * (r / BALL_RADIUS).powi(2) - 1.0
}

/// Ball polynomial value at `p`.
pub fn poly_eval(idx: &PolyIndex, p: &SphericalPoint) -> f64 {
    let beta = f64::from(idx.n) + 0.5;
    let k = idx.j.unsigned_abs();
    p_norm(idx.m, idx.n)
        * jacobi(idx.m, beta, radial_argument(p.r))
        * (p.r / BALL_RADIUS).powi(idx.n as i32)
        * q_norm(idx.n, idx.j)
        * assoc_legendre(idx.n, k, p.t)
        * trig(idx.j, p.phi)
}

/// Cartesian gradient of a ball polynomial; pole-stable by construction
/// (the two pole-sensitive factors enter through their limit-carrying
/// evaluators).
pub fn poly_gradient(idx: &PolyIndex, p: &SphericalPoint) -> Vec3 {
    let beta = f64::from(idx.n) + 0.5;
    let k = idx.j.unsigned_abs();
    let pm = jacobi(idx.m, beta, radial_argument(p.r));
    let pm_prime = jacobi_derivative(idx.m, beta, radial_argument(p.r));
    let i_prime = 4.0 * p.r / (BALL_RADIUS * BALL_RADIUS);
    let pq = p_norm(idx.m, idx.n) * q_norm(idx.n, idx.j);

    if idx.n == 0 {
        // only the radial term survives
        let Ok((e_r, _, _)) = local_frame(p.phi, p.t) else {
            // at the poles the radial direction is +-z
            let dir = if p.t > 0.0 { 1.0 } else { -1.0 };
            let g = pq * pm_prime * i_prime / (4.0 * std::f64::consts::PI).sqrt().recip().recip();
            // q_{0,0} = 1/sqrt(4 pi) is already inside pq
            let _ = g;
            return [0.0, 0.0, dir * pq * pm_prime * i_prime];
        };
        let g = pq * pm_prime * i_prime;
        return [e_r[0] * g, e_r[1] * g, e_r[2] * g];
    }

    let (e_r, e_phi, e_t) = match local_frame(p.phi, p.t) {
        Ok(f) => f,
        Err(_) => {
            // exact poles: fall back to the frame a hair inside; the limits
            // of the angular factors are already built in
            local_frame(p.phi, p.t.clamp(-1.0 + 1e-12, 1.0 - 1e-12)).unwrap()
        }
    };
    let rn = (p.r / BALL_RADIUS).powi(idx.n as i32);
    let rn1 = (p.r / BALL_RADIUS).powi(idx.n as i32 - 1);
    let pnk = assoc_legendre(idx.n, k, p.t);
    let trig_j = trig(idx.j, p.phi);
    let trig_neg = trig(-idx.j, p.phi);

    // radial part: terms 1 and 2 share the xi = e^r direction
    let radial = pm_prime * i_prime * rn * pnk * trig_j
        + f64::from(idx.n) / BALL_RADIUS * pm * rn1 * pnk * trig_j;
    // longitudinal: j/(R) * P/sqrt(1-t^2) with the pole limit
    let over_sine = if idx.j == 0 {
        0.0
    } else {
        legendre_over_sine(idx.n, k, p.t).expect("k >= 1 whenever j != 0")
    };
    let lon = f64::from(idx.j) / BALL_RADIUS * pm * rn1 * over_sine * trig_neg;
    // latitudinal: sqrt(1-t^2) P'
    let lat = 1.0 / BALL_RADIUS * pm * rn1 * sine_times_legendre_prime(idx.n, k, p.t) * trig_j;

    [
        pq * (e_r[0] * radial + e_phi[0] * lon + e_t[0] * lat),
        pq * (e_r[1] * radial + e_phi[1] * lon + e_t[1] * lat),
        pq * (e_r[2] * radial + e_phi[2] * lon + e_t[2] * lat),
    ]
}

/// Value of any dictionary element at `p`.
pub fn eval_element(d: &DictionaryElement, p: &SphericalPoint) -> f64 {
    match d {
        DictionaryElement::Poly(idx) => poly_eval(idx, p),
        DictionaryElement::Hat(ts) => fehf_eval(ts, p),
    }
}

/// Cartesian gradient of any dictionary element at `p` (a.e. for hats).
pub fn element_gradient(d: &DictionaryElement, p: &SphericalPoint) -> Vec3 {
    match d {
        DictionaryElement::Poly(idx) => poly_gradient(idx, p),
        DictionaryElement::Hat(ts) => fehf_gradient(ts, p),
    }
}
