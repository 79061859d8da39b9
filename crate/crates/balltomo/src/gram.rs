//! H¹(ball) inner products `⟨d, d'⟩ = ⟨d, d'⟩_{L²} + ⟨∇d, ∇d'⟩` for the three
//! element-pair cases, using the analytic per-dimension reductions.
//!
//! Two hats reduce to products of closed-form piecewise-polynomial segment
//! integrals (with an atanh/log antiderivative for the 1/(1−t²)-weighted
//! latitudinal factor). Two polynomials reduce to Kronecker deltas plus
//! three radial integrals in `u = 2(r/R)² − 1`. The mixed case factors into
//! one numeric radial integral, one analytic longitudinal integral and one
//! numeric latitudinal integral per gradient term.

use crate::geo::{
    wrap_longitude, DictionaryElement, PolyIndex, SphericalPoint, Tesseroid, BALL_RADIUS, TWO_PI,
};
use crate::quad::{adaptive_gk_with_breakpoints, gauss_legendre};
use crate::special::{
    assoc_legendre, jacobi, jacobi_derivative, jacobi_general, one_minus_t2_times_legendre_prime,
    p_norm, q_norm, trig_antiderivative, trig_moment_antiderivative, DELTA_POLE,
};
use std::collections::HashMap;
use std::sync::RwLock;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GramError {
    /// A latitudinal integration bound sits inside the pole band where the
    /// atanh/log antiderivatives blow up.
    #[error("latitudinal bound {0} within {DELTA_POLE} of a pole")]
    PoleProximity(f64),
}

/// Quadrature knobs for the semi-analytic inner products.
#[derive(Clone, Copy, Debug)]
pub struct GramConfig {
    /// Relative tolerance of the adaptive radial integrals.
    pub gk_tol: f64,
    /// Node count of the fixed Gauss–Legendre rule for the mixed-case
    /// latitudinal integrals (split at the hat kink).
    pub mixed_t_nodes: usize,
}

impl Default for GramConfig {
    fn default() -> Self {
        Self {
            gk_tol: 1e-8,
            mixed_t_nodes: 10_000,
        }
    }
}

/// Overlap of two 1-D hat carriers: bounds, the effective hat centres inside
/// this interval (the second centre may be shifted by ±2π in the wrap case),
/// and the critical points (kink locations, endpoints included, ascending).
#[derive(Clone, Debug)]
pub struct OverlapInterval {
    pub lb: f64,
    pub ub: f64,
    pub center_a: f64,
    pub center_b: f64,
    pub points: Vec<f64>,
}

impl OverlapInterval {
    fn build(lb: f64, ub: f64, center_a: f64, da: f64, center_b: f64, db: f64) -> Option<Self> {
        if lb >= ub {
            return None;
        }
        let mut points = vec![lb];
        let mut inner: Vec<f64> = [
            center_a - da,
            center_a,
            center_a + da,
            center_b - db,
            center_b,
            center_b + db,
        ]
        .into_iter()
        .filter(|&x| x > lb && x < ub)
        .collect();
        inner.sort_by(|p, q| p.partial_cmp(q).unwrap());
        inner.dedup();
        points.extend(inner);
        points.push(ub);
        Some(Self { lb, ub, center_a, center_b, points })
    }
}

/// Per-dimension overlap of two tesseroid carriers. The longitudinal
/// dimension may split into two intervals when the carriers sit on
/// different branches of `[P, P+2π]`.
#[derive(Clone, Debug)]
pub struct PairOverlap {
    pub r: Option<OverlapInterval>,
    pub phi: Vec<OverlapInterval>,
    pub t: Option<OverlapInterval>,
}

impl PairOverlap {
    pub fn is_empty(&self) -> bool {
        self.r.is_none() || self.phi.is_empty() || self.t.is_none()
    }
}

/// Computes the carrier overlap of two tesseroids dimension by dimension.
///
/// Radial and latitudinal bounds come from the clipped supports. The
/// longitudinal overlap intersects the first carrier with all three
/// 2π-translates of the second, which realizes every branch combination of
/// the two elements; the shifted centre is recorded for sign evaluation.
pub fn overlap_bounds(a: &Tesseroid, b: &Tesseroid) -> PairOverlap {
    let (arl, aru) = a.r_support();
    let (brl, bru) = b.r_support();
    let r = OverlapInterval::build(arl.max(brl), aru.min(bru), a.r, a.dr, b.r, b.dr);

    let (atl, atu) = a.t_support();
    let (btl, btu) = b.t_support();
    let t = OverlapInterval::build(atl.max(btl), atu.min(btu), a.t, a.dt, b.t, b.dt);

    let ca = wrap_longitude(a.phi);
    let cb = wrap_longitude(b.phi);
    let mut phi = Vec::new();
    for k in [-1.0, 0.0, 1.0] {
        let cb_k = cb + k * TWO_PI;
        let lb = (ca - a.dphi).max(cb_k - b.dphi);
        let ub = (ca + a.dphi).min(cb_k + b.dphi);
        if let Some(iv) = OverlapInterval::build(lb, ub, ca, a.dphi, cb_k, b.dphi) {
            phi.push(iv);
        }
    }
    PairOverlap { r, phi, t }
}

#[inline]
fn seg_sign(mid: f64, center: f64) -> f64 {
    if mid > center {
        1.0
    } else {
        -1.0
    }
}

/// Affine coefficients of `(Δ − s(x − c))/Δ = u + v·x` on a fixed-sign segment.
#[inline]
fn hat_affine(center: f64, half: f64, s: f64) -> (f64, f64) {
    ((half + s * center) / half, -s / half)
}

/// ∫ (c0 + c1 x + c2 x²) x^q dx between segment endpoints.
fn poly_weight_segment(c: (f64, f64, f64), q: u32, a: f64, b: f64) -> f64 {
    let f = |x: f64| {
        let q1 = f64::from(q) + 1.0;
        c.0 * x.powi(q as i32 + 1) / q1
            + c.1 * x.powi(q as i32 + 2) / (q1 + 1.0)
            + c.2 * x.powi(q as i32 + 3) / (q1 + 2.0)
    };
    f(b) - f(a)
}

/// ∫ (c0 + c1 t + c2 t²)/(1 − t²) dt between segment endpoints.
fn inv_weight_segment(c: (f64, f64, f64), a: f64, b: f64) -> f64 {
    let f = |t: f64| {
        -c.2 * t + (c.0 + c.2) * t.atanh() - 0.5 * c.1 * (1.0 - t * t).ln()
    };
    f(b) - f(a)
}

/// Kind of 1-D factor appearing in the hat×hat reductions.
#[derive(Clone, Copy, PartialEq)]
enum Weight {
    /// x^q, q ∈ {0, 2}
    Power(u32),
    /// 1/(1−t²)
    InverseOneMinusT2,
    /// (1−t²), used for the sgn·sgn latitudinal factor
    OneMinusT2,
}

/// Hat×hat 1-D integral with the given weight, summed over critical-point
/// segments of one overlap interval; signs are taken at segment midpoints.
fn hat_product_integral(iv: &OverlapInterval, da: f64, db: f64, w: Weight) -> f64 {
    let mut total = 0.0;
    for seg in iv.points.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        if b <= a {
            continue;
        }
        let mid = 0.5 * (a + b);
        let (u1, v1) = hat_affine(iv.center_a, da, seg_sign(mid, iv.center_a));
        let (u2, v2) = hat_affine(iv.center_b, db, seg_sign(mid, iv.center_b));
        let c = (u1 * u2, u1 * v2 + u2 * v1, v1 * v2);
        total += match w {
            Weight::Power(q) => poly_weight_segment(c, q, a, b),
            Weight::InverseOneMinusT2 => inv_weight_segment(c, a, b),
            Weight::OneMinusT2 => unreachable!("hat products never carry (1-t^2)"),
        };
    }
    total
}

/// sgn·sgn 1-D integral with the given weight over one overlap interval.
fn sign_product_integral(iv: &OverlapInterval, da: f64, db: f64, w: Weight) -> f64 {
    let mut total = 0.0;
    for seg in iv.points.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        if b <= a {
            continue;
        }
        let mid = 0.5 * (a + b);
        let ss = seg_sign(mid, iv.center_a) * seg_sign(mid, iv.center_b) / (da * db);
        total += ss
            * match w {
                Weight::Power(0) => b - a,
                Weight::Power(2) => (b.powi(3) - a.powi(3)) / 3.0,
                Weight::Power(_) => unreachable!(),
                Weight::OneMinusT2 => (b - b.powi(3) / 3.0) - (a - a.powi(3) / 3.0),
                Weight::InverseOneMinusT2 => unreachable!("sgn products never carry 1/(1-t^2)"),
            };
    }
    total
}

fn check_pole(bound: f64) -> Result<(), GramError> {
    if 1.0 - bound.abs() < DELTA_POLE {
        Err(GramError::PoleProximity(bound))
    } else {
        Ok(())
    }
}

/// H¹ inner product of two hat functions, fully analytic.
pub fn h1_fehf_fehf(a: &Tesseroid, b: &Tesseroid) -> Result<f64, GramError> {
    let ov = overlap_bounds(a, b);
    if ov.is_empty() {
        return Ok(0.0);
    }
    let ivr = ov.r.as_ref().unwrap();
    let ivt = ov.t.as_ref().unwrap();
    check_pole(ivt.lb)?;
    check_pole(ivt.ub)?;

    let hat_r2 = hat_product_integral(ivr, a.dr, b.dr, Weight::Power(2));
    let hat_r = hat_product_integral(ivr, a.dr, b.dr, Weight::Power(0));
    let sgn_r2 = sign_product_integral(ivr, a.dr, b.dr, Weight::Power(2));

    let mut hat_phi = 0.0;
    let mut sgn_phi = 0.0;
    for iv in &ov.phi {
        hat_phi += hat_product_integral(iv, a.dphi, b.dphi, Weight::Power(0));
        sgn_phi += sign_product_integral(iv, a.dphi, b.dphi, Weight::Power(0));
    }

    let hat_t = hat_product_integral(ivt, a.dt, b.dt, Weight::Power(0));
    let hat_t_inv = hat_product_integral(ivt, a.dt, b.dt, Weight::InverseOneMinusT2);
    let sgn_t = sign_product_integral(ivt, a.dt, b.dt, Weight::OneMinusT2);

    let l2 = hat_r2 * hat_phi * hat_t;
    let grad = sgn_r2 * hat_phi * hat_t + hat_r * sgn_phi * hat_t_inv + hat_r * hat_phi * sgn_t;
    Ok(l2 + grad)
}

/// H¹ inner product of two ball polynomials: Kronecker L² part plus the
/// three radial u-integrals of the gradient part (numeric due to the
/// half-integer exponents of (1+u)).
pub fn h1_poly_poly(a: &PolyIndex, b: &PolyIndex, cfg: &GramConfig) -> f64 {
    if a.n != b.n || a.j != b.j {
        return 0.0;
    }
    let n = a.n;
    let beta = f64::from(n) + 0.5;
    let l2 = if a.m == b.m { 1.0 } else { 0.0 };

    let exp1 = f64::from(n) + 1.5;
    let int1 = adaptive_gk_with_breakpoints(
        |u| {
            jacobi_derivative(a.m, beta, u)
                * jacobi_derivative(b.m, beta, u)
                * (1.0 + u).powf(exp1)
        },
        -1.0,
        1.0,
        cfg.gk_tol,
        &[],
    )
    .value;
    let mut grad = BALL_RADIUS * std::f64::consts::SQRT_2 / 2f64.powi(n as i32) * int1;

    if n >= 1 {
        let exp2 = f64::from(n) + 0.5;
        let int2 = adaptive_gk_with_breakpoints(
            |u| {
                (jacobi_derivative(a.m, beta, u) * jacobi(b.m, beta, u)
                    + jacobi(a.m, beta, u) * jacobi_derivative(b.m, beta, u))
                    * (1.0 + u).powf(exp2)
            },
            -1.0,
            1.0,
            cfg.gk_tol,
            &[],
        )
        .value;
        grad += BALL_RADIUS * f64::from(n) / (2f64.powi(n as i32) * std::f64::consts::SQRT_2)
            * int2;

        let exp3 = f64::from(n) - 0.5;
        let int3 = adaptive_gk_with_breakpoints(
            |u| jacobi(a.m, beta, u) * jacobi(b.m, beta, u) * (1.0 + u).powf(exp3),
            -1.0,
            1.0,
            cfg.gk_tol,
            &[],
        )
        .value;
        grad += BALL_RADIUS * f64::from(n) * f64::from(2 * n + 1)
            / (2f64.powi(n as i32 + 1) * std::f64::consts::SQRT_2)
            * int3;
    }

    l2 + p_norm(a.m, n) * p_norm(b.m, n) * grad
}

/// Analytic longitudinal integral `∫ hat(φ)·Trig(jφ) dφ` over the carrier,
/// via the antiderivatives I₁, I₂.
fn hat_trig_integral(phi_c: f64, dphi: f64, j: i32) -> f64 {
    let i1 = |p: f64| trig_moment_antiderivative(j, p);
    let i2 = |p: f64| trig_antiderivative(j, p);
    -i1(phi_c - dphi) / dphi - (1.0 - phi_c / dphi) * i2(phi_c - dphi)
        + 2.0 * i1(phi_c) / dphi
        - 2.0 * phi_c / dphi * i2(phi_c)
        - i1(phi_c + dphi) / dphi
        + (1.0 + phi_c / dphi) * i2(phi_c + dphi)
}

/// Analytic longitudinal integral `∫ (−sgn(φ−Φ)/ΔΦ)·j·Trig(−jφ) dφ`.
fn sgn_trig_integral(phi_c: f64, dphi: f64, j: i32) -> f64 {
    if j == 0 {
        return 0.0;
    }
    let i2 = |p: f64| trig_antiderivative(-j, p);
    f64::from(j) / dphi * (2.0 * i2(phi_c) - i2(phi_c - dphi) - i2(phi_c + dphi))
}

/// The four 1-D latitudinal integrals of the mixed case for a single (n, k),
/// by a fixed Gauss–Legendre rule split at the hat kink.
fn mixed_t_integrals(
    ts: &Tesseroid,
    n: u32,
    k: u32,
    cfg: &GramConfig,
) -> Result<(f64, f64, f64), GramError> {
    let (tl, tu) = ts.t_support();
    check_pole(tl)?;
    check_pole(tu)?;
    let mut l2 = 0.0;
    let mut inv = 0.0;
    let mut grad = 0.0;
    let half = (cfg.mixed_t_nodes / 2).max(8);
    for (pa, pb) in [(tl, ts.t), (ts.t, tu)] {
        if pb <= pa {
            continue;
        }
        let rule = gauss_legendre(half, pa, pb);
        let sgn = if 0.5 * (pa + pb) > ts.t { 1.0 } else { -1.0 };
        for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
            let hat = (ts.dt - (t - ts.t).abs()) / ts.dt;
            let pnk = assoc_legendre(n, k, t);
            l2 += w * hat * pnk;
            inv += w * hat * pnk / (1.0 - t * t);
            grad += w * (-sgn / ts.dt) * one_minus_t2_times_legendre_prime(n, k, t);
        }
    }
    Ok((l2, inv, grad))
}

/// The three 1-D radial integrals of the mixed case, adaptive Gauss–Kronrod
/// with a breakpoint at the hat kink.
fn mixed_r_integrals(ts: &Tesseroid, m: u32, n: u32, cfg: &GramConfig) -> (f64, f64, f64) {
    let (rl, ru) = ts.r_support();
    let beta = f64::from(n) + 0.5;
    let arg = |r: f64| 2.0 * (r / BALL_RADIUS).powi(2) - 1.0;
    let hat = |r: f64| (ts.dr - (r - ts.r).abs()) / ts.dr;
    let breaks = [ts.r];
    let l2 = adaptive_gk_with_breakpoints(
        |r| hat(r) * jacobi(m, beta, arg(r)) * (r / BALL_RADIUS).powi(n as i32) * r * r,
        rl,
        ru,
        cfg.gk_tol,
        &breaks,
    )
    .value;
    let plain = adaptive_gk_with_breakpoints(
        |r| hat(r) * jacobi(m, beta, arg(r)) * (r / BALL_RADIUS).powi(n as i32),
        rl,
        ru,
        cfg.gk_tol,
        &breaks,
    )
    .value;
    let grad = adaptive_gk_with_breakpoints(
        |r| {
            let s = if r > ts.r { 1.0 } else { -1.0 };
            let rn = (r / BALL_RADIUS).powi(n as i32);
            (-s / ts.dr)
                * (jacobi_derivative(m, beta, arg(r)) * (4.0 * r / (BALL_RADIUS * BALL_RADIUS))
                    * rn
                    * r
                    * r
                    + f64::from(n) * r * jacobi(m, beta, arg(r)) * rn)
        },
        rl,
        ru,
        cfg.gk_tol,
        &breaks,
    )
    .value;
    (l2, plain, grad)
}

/// H¹ inner product of a hat and a ball polynomial.
pub fn h1_mixed(ts: &Tesseroid, idx: &PolyIndex, cfg: &GramConfig) -> Result<f64, GramError> {
    let k = idx.j.unsigned_abs();
    let (it_l2, it_inv, it_grad) = mixed_t_integrals(ts, idx.n, k, cfg)?;
    let (ir_l2, ir_plain, ir_grad) = mixed_r_integrals(ts, idx.m, idx.n, cfg);
    let iphi_hat = hat_trig_integral(ts.phi, ts.dphi, idx.j);
    let iphi_grad = sgn_trig_integral(ts.phi, ts.dphi, idx.j);
    let pq = p_norm(idx.m, idx.n) * q_norm(idx.n, idx.j);
    Ok(pq
        * (ir_l2 * iphi_hat * it_l2
            + ir_grad * iphi_hat * it_l2
            + ir_plain * iphi_grad * it_inv
            + ir_plain * iphi_hat * it_grad))
}

/// Mixed H¹ inner products of one hat against a batch of polynomial indices,
/// sharing quadrature nodes and recurrence tables across the batch. Agrees
/// with [`h1_mixed`] to quadrature accuracy; used on the solver's hot path.
pub fn h1_mixed_batch(
    ts: &Tesseroid,
    idxs: &[PolyIndex],
    cfg: &GramConfig,
) -> Result<Vec<f64>, GramError> {
    if idxs.is_empty() {
        return Ok(Vec::new());
    }
    let n_max = idxs.iter().map(|i| i.n).max().unwrap();
    let m_max = idxs.iter().map(|i| i.m).max().unwrap();
    let (tl, tu) = ts.t_support();
    check_pole(tl)?;
    check_pole(tu)?;

    // latitudinal tables: for each (n, k), the (l2, inv, grad) integrals
    let nn = (n_max + 1) as usize;
    let mut t_l2 = vec![0.0f64; nn * nn];
    let mut t_inv = vec![0.0f64; nn * nn];
    let mut t_grad = vec![0.0f64; nn * nn];
    let half = (cfg.mixed_t_nodes / 2).max(8);
    for (pa, pb) in [(tl, ts.t), (ts.t, tu)] {
        if pb <= pa {
            continue;
        }
        let rule = gauss_legendre(half, pa, pb);
        let sgn = if 0.5 * (pa + pb) > ts.t { 1.0 } else { -1.0 };
        for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
            let hat = (ts.dt - (t - ts.t).abs()) / ts.dt;
            let inv_fac = 1.0 / (1.0 - t * t);
            // full associated-Legendre table up to n_max
            let mut table = vec![0.0f64; nn * nn];
            for n in 0..=n_max {
                for k in 0..=n {
                    table[(n * (n_max + 1) + k) as usize] = assoc_legendre(n, k, t);
                }
            }
            for n in 0..=n_max {
                for k in 0..=n {
                    let at = |nn_: u32, kk: u32| -> f64 {
                        if kk > nn_ {
                            0.0
                        } else {
                            table[(nn_ * (n_max + 1) + kk) as usize]
                        }
                    };
                    let pnk = at(n, k);
                    let idx2 = (n * (n_max + 1) + k) as usize;
                    t_l2[idx2] += w * hat * pnk;
                    t_inv[idx2] += w * hat * pnk * inv_fac;
                    let prime = if n == 0 {
                        0.0
                    } else {
                        f64::from(n + k) * at(n - 1, k) - f64::from(n) * t * pnk
                    };
                    t_grad[idx2] += w * (-sgn / ts.dt) * prime;
                }
            }
        }
    }

    // radial tables: for each (m, n), the (l2, plain, grad) integrals by a
    // fixed rule exact for the piecewise-polynomial integrands
    let (rl, ru) = ts.r_support();
    let mm = (m_max + 1) as usize;
    let mut r_l2 = vec![0.0f64; mm * nn];
    let mut r_plain = vec![0.0f64; mm * nn];
    let mut r_grad = vec![0.0f64; mm * nn];
    let r_nodes = (m_max + n_max + 4) as usize;
    for (pa, pb) in [(rl, ts.r), (ts.r, ru)] {
        if pb <= pa {
            continue;
        }
        let rule = gauss_legendre(r_nodes, pa, pb);
        let sgn = if 0.5 * (pa + pb) > ts.r { 1.0 } else { -1.0 };
        for (&r, &w) in rule.nodes.iter().zip(&rule.weights) {
            let hat = (ts.dr - (r - ts.r).abs()) / ts.dr;
            let arg = 2.0 * (r / BALL_RADIUS).powi(2) - 1.0;
            let iprime = 4.0 * r / (BALL_RADIUS * BALL_RADIUS);
            for n in 0..=n_max {
                let beta = f64::from(n) + 0.5;
                let rn = (r / BALL_RADIUS).powi(n as i32);
                for m in 0..=m_max {
                    let pj = jacobi(m, beta, arg);
                    let pj_prime = jacobi_derivative(m, beta, arg);
                    let idx2 = (m * (n_max + 1) + n) as usize;
                    r_l2[idx2] += w * hat * pj * rn * r * r;
                    r_plain[idx2] += w * hat * pj * rn;
                    r_grad[idx2] += w
                        * (-sgn / ts.dr)
                        * (pj_prime * iprime * rn * r * r + f64::from(n) * r * pj * rn);
                }
            }
        }
    }

    // longitudinal values memoized per order
    let mut phi_hat: HashMap<i32, f64> = HashMap::new();
    let mut phi_grad: HashMap<i32, f64> = HashMap::new();

    let out = idxs
        .iter()
        .map(|idx| {
            let k = idx.j.unsigned_abs();
            let ti = (idx.n * (n_max + 1) + k) as usize;
            let ri = (idx.m * (n_max + 1) + idx.n) as usize;
            let ih = *phi_hat
                .entry(idx.j)
                .or_insert_with(|| hat_trig_integral(ts.phi, ts.dphi, idx.j));
            let ig = *phi_grad
                .entry(idx.j)
                .or_insert_with(|| sgn_trig_integral(ts.phi, ts.dphi, idx.j));
            let pq = p_norm(idx.m, idx.n) * q_norm(idx.n, idx.j);
            pq * (r_l2[ri] * ih * t_l2[ti]
                + r_grad[ri] * ih * t_l2[ti]
                + r_plain[ri] * ig * t_inv[ti]
                + r_plain[ri] * ih * t_grad[ti])
        })
        .collect();
    Ok(out)
}

/// Dispatches to the appropriate pair case.
pub fn h1_element(
    a: &DictionaryElement,
    b: &DictionaryElement,
    cfg: &GramConfig,
) -> Result<f64, GramError> {
    match (a, b) {
        (DictionaryElement::Poly(i), DictionaryElement::Poly(j)) => Ok(h1_poly_poly(i, j, cfg)),
        (DictionaryElement::Hat(s), DictionaryElement::Hat(t)) => h1_fehf_fehf(s, t),
        (DictionaryElement::Hat(s), DictionaryElement::Poly(i))
        | (DictionaryElement::Poly(i), DictionaryElement::Hat(s)) => h1_mixed(s, i, cfg),
    }
}

/// Exact-bits cache key for a dictionary element; hat parameters are keyed on
/// their stored representation, never on a float tolerance.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
enum ElemKey {
    Poly(u32, u32, i32),
    Hat([u64; 10]),
}

fn elem_key(d: &DictionaryElement) -> ElemKey {
    match d {
        DictionaryElement::Poly(i) => ElemKey::Poly(i.m, i.n, i.j),
        DictionaryElement::Hat(t) => ElemKey::Hat([
            t.r.to_bits(),
            t.phi.to_bits(),
            t.t.to_bits(),
            t.dr.to_bits(),
            t.dphi.to_bits(),
            t.dt.to_bits(),
            t.domain.rho.to_bits(),
            t.domain.eps_r.to_bits(),
            t.domain.eps_phi.to_bits(),
            t.domain.eps_t.to_bits(),
        ]),
    }
}

/// Memoized, symmetric H¹ inner products over unordered element pairs.
pub struct GramCache {
    map: RwLock<HashMap<(ElemKey, ElemKey), f64>>,
    pub config: GramConfig,
}

impl GramCache {
    pub fn new(config: GramConfig) -> Self {
        Self { map: RwLock::new(HashMap::new()), config }
    }

    pub fn len(&self) -> usize {
        self.map.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(
        &self,
        a: &DictionaryElement,
        b: &DictionaryElement,
    ) -> Result<f64, GramError> {
        let (ka, kb) = {
            let ka = elem_key(a);
            let kb = elem_key(b);
            if ka <= kb { (ka, kb) } else { (kb, ka) }
        };
        if let Some(&v) = self.map.read().unwrap().get(&(ka.clone(), kb.clone())) {
            return Ok(v);
        }
        let v = h1_element(a, b, &self.config)?;
        self.map.write().unwrap().insert((ka, kb), v);
        Ok(v)
    }
}

/// Memoized symmetric lookup: `gram_get(c, d, d') = gram_get(c, d', d)`.
pub fn gram_get(
    cache: &GramCache,
    a: &DictionaryElement,
    b: &DictionaryElement,
) -> Result<f64, GramError> {
    cache.get(a, b)
}

/// Brute-force H¹ inner product by tensor ball quadrature with kink
/// breakpoints; the independent oracle for the analytic reductions.
pub fn h1_brute_force(
    a: &DictionaryElement,
    b: &DictionaryElement,
    nodes_per_panel: usize,
) -> f64 {
    use crate::basis::{element_gradient, eval_element};
    let mut r_breaks = Vec::new();
    let mut t_breaks = Vec::new();
    let mut phi_breaks = Vec::new();
    for d in [a, b] {
        if let DictionaryElement::Hat(ts) = d {
            let (rl, ru) = ts.r_support();
            r_breaks.extend([rl, ts.r, ru]);
            let (tl, tu) = ts.t_support();
            t_breaks.extend([tl, ts.t, tu]);
            for p in [ts.phi - ts.dphi, ts.phi, ts.phi + ts.dphi] {
                phi_breaks.push(wrap_longitude(p));
            }
        }
    }
    let rule = crate::quad::ball_quadrature_with_breakpoints(
        nodes_per_panel,
        nodes_per_panel,
        nodes_per_panel,
        &r_breaks,
        &t_breaks,
        &phi_breaks,
    );
    rule.points
        .iter()
        .zip(&rule.weights)
        .map(|(&p, &w)| {
            let fa = eval_element(a, &p);
            let fb = eval_element(b, &p);
            let ga = element_gradient(a, &p);
            let gb = element_gradient(b, &p);
            w * (fa * fb + crate::geo::dot(ga, gb))
        })
        .sum()
}
