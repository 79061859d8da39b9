//! Stable evaluation of the special functions behind the ball polynomials:
//! Jacobi polynomials P_m^{(0, n+1/2)}, associated Legendre functions
//! P_{n,k} (Condon–Shortley-free), the longitudinal factor Trig(jφ) and its
//! antiderivatives, and the two pole-sensitive combinations
//! P_{n,k}(t)/√(1−t²) and √(1−t²)·P'_{n,k}(t).

use std::f64::consts::SQRT_2;
use thiserror::Error;

/// Switchover band around t = ±1 inside which the pole limits replace the
/// direct quotient; the quotient loses about half the mantissa there.
pub const DELTA_POLE: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum SpecialError {
    #[error("legendre_over_sine requires k >= 1 (got k = 0)")]
    OrderZeroQuotient,
}

/// Jacobi polynomial P_m^{(α,β)}(x) by the ascending three-term recurrence.
///
/// Stable for the parameter ranges used here (α ∈ {0, 1}, β ≥ 1/2, m ≲ 50).
pub fn jacobi_general(m: u32, alpha: f64, beta: f64, x: f64) -> f64 {
    if m == 0 {
        return 1.0;
    }
    let p1 = (alpha + 1.0) + (alpha + beta + 2.0) * (x - 1.0) / 2.0;
    if m == 1 {
        return p1;
    }
    let mut prev = 1.0;
    let mut cur = p1;
    for k in 2..=m {
        let k = f64::from(k);
        let c = 2.0 * k + alpha + beta;
        let a1 = 2.0 * k * (k + alpha + beta) * (c - 2.0);
        let a2 = (c - 1.0) * (alpha * alpha - beta * beta);
        let a3 = (c - 2.0) * (c - 1.0) * c;
        let a4 = 2.0 * (k + alpha - 1.0) * (k + beta - 1.0) * c;
        let next = ((a2 + a3 * x) * cur - a4 * prev) / a1;
        prev = cur;
        cur = next;
    }
    cur
}

/// P_m^{(0,β)}(x); the radial Jacobi factor of the ball polynomials uses
/// β = n + 1/2.
pub fn jacobi(m: u32, beta: f64, x: f64) -> f64 {
    jacobi_general(m, 0.0, beta, x)
}

/// Derivative (P_m^{(0,β)})'(x) = ((m+β+1)/2)·P_{m−1}^{(1,β+1)}(x), zero for m = 0.
pub fn jacobi_derivative(m: u32, beta: f64, x: f64) -> f64 {
    if m == 0 {
        return 0.0;
    }
    0.5 * (f64::from(m) + beta + 1.0) * jacobi_general(m - 1, 1.0, beta + 1.0, x)
}

/// k-th derivative of the Legendre polynomial, P_n^{(k)}(t), via the
/// differentiated Bonnet recurrence
/// `n P_n^{(k)} = (2n−1)(t P_{n−1}^{(k)} + k P_{n−1}^{(k−1)}) − (n−1) P_{n−2}^{(k)}`.
pub fn legendre_kth_derivative(n: u32, k: u32, t: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    let n = n as usize;
    let k = k as usize;
    // table[i][d] = P_i^{(d)}(t), d <= k
    let mut prev2 = vec![0.0; k + 1];
    let mut prev = vec![0.0; k + 1];
    prev2[0] = 1.0; // P_0
    if n == 0 {
        return prev2[k];
    }
    prev[0] = t; // P_1
    if k >= 1 {
        prev[1] = 1.0;
    }
    if n == 1 {
        return prev[k];
    }
    let mut cur = vec![0.0; k + 1];
    for i in 2..=n {
        let fi = i as f64;
        for d in 0..=k.min(i) {
            let lower = if d >= 1 { prev[d - 1] } else { 0.0 };
            cur[d] = ((2.0 * fi - 1.0) * (t * prev[d] + d as f64 * lower)
                - (fi - 1.0) * prev2[d])
                / fi;
        }
        for d in (k.min(i) + 1)..=k {
            cur[d] = 0.0;
        }
        std::mem::swap(&mut prev2, &mut prev);
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[k]
}

/// Unnormalized associated Legendre function P_{n,k}(t) without the
/// Condon–Shortley phase, via the diagonal-then-upward recurrence
/// `P_{k,k} = (2k−1)!! (1−t²)^{k/2}`,
/// `P_{k+1,k} = (2k+1) t P_{k,k}`,
/// `(n−k) P_{n,k} = (2n−1) t P_{n−1,k} − (n+k−1) P_{n−2,k}`.
pub fn assoc_legendre(n: u32, k: u32, t: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    let s2 = (1.0 - t * t).max(0.0);
    let mut pkk = 1.0;
    for i in 1..=k {
        pkk *= (2.0 * f64::from(i) - 1.0) * s2.sqrt();
    }
    if n == k {
        return pkk;
    }
    let mut prev = pkk;
    let mut cur = (2.0 * f64::from(k) + 1.0) * t * pkk;
    if n == k + 1 {
        return cur;
    }
    for i in (k + 2)..=n {
        let fi = f64::from(i);
        let fk = f64::from(k);
        let next = ((2.0 * fi - 1.0) * t * cur - (fi + fk - 1.0) * prev) / (fi - fk);
        prev = cur;
        cur = next;
    }
    cur
}

/// P'_n(±1) = (±1)^{n+1} n(n+1)/2.
fn legendre_prime_at_pole(n: u32, t: f64) -> f64 {
    let v = f64::from(n) * f64::from(n + 1) / 2.0;
    if t > 0.0 {
        v
    } else if n % 2 == 0 {
        -v
    } else {
        v
    }
}

/// P_{n,k}(t)/√(1−t²) for k ≥ 1, with the pole limits
/// P'_n(±1) for k = 1 and 0 for k > 1 inside the `DELTA_POLE` band.
pub fn legendre_over_sine(n: u32, k: u32, t: f64) -> Result<f64, SpecialError> {
    if k == 0 {
        return Err(SpecialError::OrderZeroQuotient);
    }
    if t.abs() > 1.0 - DELTA_POLE {
        return Ok(if k == 1 {
            legendre_prime_at_pole(n, t)
        } else {
            0.0
        });
    }
    Ok(assoc_legendre(n, k, t) / (1.0 - t * t).sqrt())
}

/// √(1−t²)·P'_{n,k}(t), finite on the whole interval including t = ±1.
///
/// Computed through `P_{n,k} = (1−t²)^{k/2} P_n^{(k)}` as
/// `−k t (1−t²)^{(k−1)/2} P_n^{(k)} + (1−t²)^{(k+1)/2} P_n^{(k+1)}`,
/// which is uniformly stable and carries the pole limits by construction.
pub fn sine_times_legendre_prime(n: u32, k: u32, t: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    let s2 = (1.0 - t * t).max(0.0);
    let second = s2.powf((f64::from(k) + 1.0) / 2.0) * legendre_kth_derivative(n, k + 1, t);
    if k == 0 {
        return second;
    }
    let first = -f64::from(k) * t * s2.powf((f64::from(k) - 1.0) / 2.0)
        * legendre_kth_derivative(n, k, t);
    first + second
}

/// (1−t²)·P'_{n,k}(t) via the ladder identity
/// `(1−t²) P'_{n,k} = (n+k) P_{n−1,k} − n t P_{n,k}`.
pub fn one_minus_t2_times_legendre_prime(n: u32, k: u32, t: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    f64::from(n + k) * assoc_legendre(n - 1, k, t) - f64::from(n) * t * assoc_legendre(n, k, t)
}

/// Longitudinal factor: √2·cos(jφ) for j < 0, 1 for j = 0, √2·sin(jφ) for j > 0.
#[inline]
pub fn trig(j: i32, phi: f64) -> f64 {
    let arg = f64::from(j) * phi;
    match j.cmp(&0) {
        std::cmp::Ordering::Less => SQRT_2 * arg.cos(),
        std::cmp::Ordering::Equal => 1.0,
        std::cmp::Ordering::Greater => SQRT_2 * arg.sin(),
    }
}

/// Antiderivative I₂(j, φ) = ∫ Trig(jφ) dφ.
pub fn trig_antiderivative(j: i32, phi: f64) -> f64 {
    let fj = f64::from(j);
    let arg = fj * phi;
    match j.cmp(&0) {
        std::cmp::Ordering::Less => SQRT_2 / fj * arg.sin(),
        std::cmp::Ordering::Equal => phi,
        std::cmp::Ordering::Greater => -SQRT_2 / fj * arg.cos(),
    }
}

/// Antiderivative I₁(j, φ) = ∫ φ·Trig(jφ) dφ.
pub fn trig_moment_antiderivative(j: i32, phi: f64) -> f64 {
    let fj = f64::from(j);
    let arg = fj * phi;
    match j.cmp(&0) {
        std::cmp::Ordering::Less => SQRT_2 * (arg.cos() / (fj * fj) + phi * arg.sin() / fj),
        std::cmp::Ordering::Equal => 0.5 * phi * phi,
        std::cmp::Ordering::Greater => SQRT_2 * (arg.sin() / (fj * fj) - phi * arg.cos() / fj),
    }
}

/// Both antiderivatives at once: `(I₁, I₂)`.
pub fn trig_antiderivatives(j: i32, phi: f64) -> (f64, f64) {
    (
        trig_moment_antiderivative(j, phi),
        trig_antiderivative(j, phi),
    )
}

/// Spherical-harmonic normalization
/// `q_{n,j} = √((2n+1)/(4π) · (n−|j|)!/(n+|j|)!)`.
pub fn q_norm(n: u32, j: i32) -> f64 {
    let k = j.unsigned_abs();
    let mut ratio = 1.0;
    // (n-k)!/(n+k)! = 1 / ((n-k+1) (n-k+2) ... (n+k))
    for i in (n - k + 1)..=(n + k) {
        ratio /= f64::from(i);
    }
    ((2.0 * f64::from(n) + 1.0) / (4.0 * std::f64::consts::PI) * ratio).sqrt()
}

/// Radial normalization `p_{m,n} = √((4m+2n+3)/R³)` on the unit ball.
pub fn p_norm(m: u32, n: u32) -> f64 {
    ((4.0 * f64::from(m) + 2.0 * f64::from(n) + 3.0) / crate::geo::BALL_RADIUS.powi(3)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    /// Independent series oracle:
    /// P_m^{(α,β)}(x) = Σ_s C(m+α, m−s) C(m+β, s) ((x−1)/2)^s ((x+1)/2)^{m−s}.
    fn jacobi_series(m: u32, alpha: f64, beta: f64, x: f64) -> f64 {
        let binom = |top: f64, k: u32| -> f64 {
            let mut v = 1.0;
            for i in 0..k {
                v *= (top - f64::from(i)) / f64::from(k - i);
            }
            v
        };
        let mut sum = 0.0;
        for s in 0..=m {
            sum += binom(f64::from(m) + alpha, m - s)
                * binom(f64::from(m) + beta, s)
                * ((x - 1.0) / 2.0).powi(s as i32)
                * ((x + 1.0) / 2.0).powi((m - s) as i32);
        }
        sum
    }

    /// Rodrigues-style oracle for P_{n,k}: differentiate the explicit
    /// Legendre coefficient array k times, then multiply by (1−t²)^{k/2}.
    fn assoc_legendre_rodrigues(n: u32, k: u32, t: f64) -> f64 {
        // Legendre coefficients from P_n(t) = 2^-n sum_i C(n,i)^2 (t-1)^(n-i) (t+1)^i,
        // expanded numerically via polynomial multiplication.
        let n = n as usize;
        let mut coeffs = vec![0.0f64; n + 1];
        // build via recurrence on coefficient arrays (independent of runtime eval path)
        let mut p0 = vec![1.0];
        if n == 0 {
            coeffs = p0.clone();
        } else {
            let mut p1 = vec![0.0, 1.0];
            if n == 1 {
                coeffs.copy_from_slice(&p1);
            }
            for i in 2..=n {
                let fi = i as f64;
                let mut next = vec![0.0; i + 1];
                for (d, &c) in p1.iter().enumerate() {
                    next[d + 1] += (2.0 * fi - 1.0) * c / fi;
                }
                for (d, &c) in p0.iter().enumerate() {
                    next[d] -= (fi - 1.0) * c / fi;
                }
                p0 = p1;
                p1 = next;
                if i == n {
                    coeffs.copy_from_slice(&p1);
                }
            }
        }
        for _ in 0..k {
            let mut d = vec![0.0; coeffs.len().saturating_sub(1).max(1)];
            for (i, &c) in coeffs.iter().enumerate().skip(1) {
                d[i - 1] = c * i as f64;
            }
            coeffs = d;
        }
        let poly: f64 = coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * t + c);
        (1.0 - t * t).powf(f64::from(k) / 2.0) * poly
    }

    #[test]
    fn jacobi_closed_forms() {
        for x in [-0.9, -0.3, 0.0, 0.4, 1.0] {
            assert_abs_diff_eq!(jacobi(0, 3.7, x), 1.0);
            assert_abs_diff_eq!(jacobi(1, 0.5, x), 1.0 + 1.25 * (x - 1.0), epsilon = 1e-15);
        }
        let v = jacobi(3, 2.5, 0.3);
        let o = jacobi_series(3, 0.0, 2.5, 0.3);
        assert_abs_diff_eq!(v, o, epsilon = 1e-13);
    }

    #[test]
    fn jacobi_derivative_cases() {
        for x in [-0.8, 0.0, 0.7] {
            assert_eq!(jacobi_derivative(0, 1.5, x), 0.0);
            assert_abs_diff_eq!(jacobi_derivative(1, 0.5, x), 1.25, epsilon = 1e-15);
        }
        // m=4, beta=3.5 vs central finite differences, h = 1e-6
        let h = 1e-6;
        let fd = (jacobi(4, 3.5, -0.2 + h) - jacobi(4, 3.5, -0.2 - h)) / (2.0 * h);
        let an = jacobi_derivative(4, 3.5, -0.2);
        assert!((fd - an).abs() / an.abs() < 1e-7);
    }

    #[test]
    fn jacobi_derivative_random_matches_fd() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let m = rng.gen_range(1u32..=8);
            let beta = rng.gen_range(0.5..8.5);
            let x: f64 = rng.gen_range(-0.99..0.99);
            let h = 1e-6;
            let fd = (jacobi(m, beta, x + h) - jacobi(m, beta, x - h)) / (2.0 * h);
            let an = jacobi_derivative(m, beta, x);
            let denom = an.abs().max(1e-9);
            assert!(
                (fd - an).abs() / denom < 1e-6,
                "m={m} beta={beta} x={x}: fd={fd} an={an}"
            );
        }
    }

    #[test]
    fn assoc_legendre_low_orders() {
        for t in [-0.8, -0.2, 0.5, 0.95] {
            assert_abs_diff_eq!(assoc_legendre(0, 0, t), 1.0);
            assert_abs_diff_eq!(assoc_legendre(1, 0, t), t, epsilon = 1e-15);
            assert_abs_diff_eq!(assoc_legendre(1, 1, t), (1.0 - t * t).sqrt(), epsilon = 1e-15);
        }
        let v = assoc_legendre(5, 3, 0.4);
        let o = assoc_legendre_rodrigues(5, 3, 0.4);
        assert!((v - o).abs() < 1e-11 * o.abs().max(1.0));
    }

    proptest! {
        #[test]
        fn assoc_legendre_matches_rodrigues(n in 0u32..=8, frac in 0.0f64..1.0, t in -1.0f64..1.0) {
            let k = (frac * f64::from(n + 1)).floor() as u32;
            let k = k.min(n);
            let v = assoc_legendre(n, k, t);
            let o = assoc_legendre_rodrigues(n, k, t);
            prop_assert!((v - o).abs() < 1e-10 * o.abs().max(1.0));
        }
    }

    #[test]
    fn over_sine_pole_limits() {
        assert_eq!(legendre_over_sine(2, 0, 0.3), Err(SpecialError::OrderZeroQuotient));
        // k=1 limit is P'_n(+-1)
        assert_abs_diff_eq!(legendre_over_sine(1, 1, 1.0 - 1e-9).unwrap(), 1.0);
        assert_abs_diff_eq!(legendre_over_sine(3, 1, 1.0 - 1e-9).unwrap(), 6.0);
        assert_abs_diff_eq!(legendre_over_sine(2, 1, -1.0 + 1e-9).unwrap(), -3.0);
        // k>1 tends to zero
        assert!(legendre_over_sine(3, 2, 0.999_999).unwrap().abs() < 1e-5 * 100.0);
        assert_eq!(legendre_over_sine(3, 2, 1.0 - 1e-8).unwrap(), 0.0);
        // direct quotient region
        let v = legendre_over_sine(2, 1, 0.5).unwrap();
        assert_abs_diff_eq!(v, assoc_legendre(2, 1, 0.5) / 0.75f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn over_sine_continuous_at_switchover() {
        for n in 1..=6u32 {
            for k in 1..=n {
                for sign in [-1.0, 1.0] {
                    let t_in = sign * (1.0 - DELTA_POLE * 0.99);
                    let t_out = sign * (1.0 - DELTA_POLE * 1.01);
                    let a = legendre_over_sine(n, k, t_in).unwrap();
                    let b = legendre_over_sine(n, k, t_out).unwrap();
                    assert!((a - b).abs() < 1e-6 * a.abs().max(1.0), "n={n} k={k}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn sine_times_prime_basics() {
        // n=1, k=0: P_{1,0} = t, so sqrt(1-t^2) * 1
        for t in [-0.7, 0.0, 0.3, 1.0] {
            assert_abs_diff_eq!(
                sine_times_legendre_prime(1, 0, t),
                (1.0f64 - t * t).max(0.0).sqrt(),
                epsilon = 1e-14
            );
        }
        // finite at the poles, matching the one-sided finite-difference estimate nearby
        for (n, k) in [(3u32, 1u32), (4, 2), (5, 0), (4, 4)] {
            for sign in [-1.0, 1.0] {
                let v = sine_times_legendre_prime(n, k, sign);
                assert!(v.is_finite());
                let t0 = sign * (1.0 - 1e-4);
                let h = 1e-7;
                let fd = (assoc_legendre(n, k, t0 + h) - assoc_legendre(n, k, t0 - h)) / (2.0 * h);
                let approx_v = (1.0 - t0 * t0).sqrt() * fd;
                let w = sine_times_legendre_prime(n, k, t0);
                assert!(
                    (approx_v - w).abs() < 1e-6 * w.abs().max(1.0),
                    "n={n} k={k} t0={t0}: fd {approx_v} vs {w}"
                );
            }
        }
    }

    #[test]
    fn sine_times_prime_matches_fd_interior() {
        let h = 1e-6;
        let t = 0.0;
        let fd = (assoc_legendre(4, 2, t + h) - assoc_legendre(4, 2, t - h)) / (2.0 * h);
        let v = sine_times_legendre_prime(4, 2, t);
        assert!((v - (1.0 - t * t).sqrt() * fd).abs() / v.abs() < 1e-7);
    }

    #[test]
    fn one_minus_t2_prime_identity() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let n = rng.gen_range(1u32..=8);
            let k = rng.gen_range(0..=n);
            let t: f64 = rng.gen_range(-0.999..0.999);
            let a = one_minus_t2_times_legendre_prime(n, k, t);
            let b = (1.0 - t * t).sqrt() * sine_times_legendre_prime(n, k, t);
            assert!((a - b).abs() < 1e-9 * a.abs().max(1.0), "n={n} k={k} t={t}");
        }
    }

    #[test]
    fn trig_and_antiderivatives() {
        assert_eq!(trig(0, 1.23), 1.0);
        let (i1, i2) = trig_antiderivatives(0, 0.7);
        assert_abs_diff_eq!(i2, 0.7);
        assert_abs_diff_eq!(i1, 0.245, epsilon = 1e-15);

        // d/dphi I2(j, phi) = Trig(j phi)
        let h = 1e-6;
        for j in [-3, -1, 2, 5] {
            for phi in [0.2, 1.9, 4.4] {
                let fd =
                    (trig_antiderivative(j, phi + h) - trig_antiderivative(j, phi - h)) / (2.0 * h);
                assert!((fd - trig(j, phi)).abs() < 1e-9, "j={j} phi={phi}");
                let fd1 = (trig_moment_antiderivative(j, phi + h)
                    - trig_moment_antiderivative(j, phi - h))
                    / (2.0 * h);
                assert!((fd1 - phi * trig(j, phi)).abs() < 1e-8, "j={j} phi={phi}");
            }
        }
    }

    #[test]
    fn surface_harmonics_orthonormal() {
        // Gram of q_{n,j} P_{n,|j|}(t) Trig(j phi) for n <= 8 under the sphere
        // measure, tensor Gauss 200 x 400 nodes, must be the identity to 1e-8.
        let rule_t = crate::quad::gauss_legendre(200, -1.0, 1.0);
        let rule_phi = crate::quad::gauss_legendre(400, 0.0, crate::geo::TWO_PI);
        let mut idx = Vec::new();
        for n in 0u32..=8 {
            for j in -(n as i32)..=(n as i32) {
                idx.push((n, j));
            }
        }
        let nf = idx.len();
        let mut gram = vec![0.0f64; nf * nf];
        for (ti, &t) in rule_t.nodes.iter().enumerate() {
            let wt = rule_t.weights[ti];
            for (pi, &phi) in rule_phi.nodes.iter().enumerate() {
                let w = wt * rule_phi.weights[pi];
                let vals: Vec<f64> = idx
                    .iter()
                    .map(|&(n, j)| {
                        q_norm(n, j) * assoc_legendre(n, j.unsigned_abs(), t) * trig(j, phi)
                    })
                    .collect();
                for a in 0..nf {
                    let va = vals[a] * w;
                    for b in a..nf {
                        gram[a * nf + b] += va * vals[b];
                    }
                }
            }
        }
        let mut worst = 0.0f64;
        for a in 0..nf {
            for b in a..nf {
                let expect = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((gram[a * nf + b] - expect).abs());
            }
        }
        assert!(worst < 1e-8, "max deviation from identity: {worst}");
    }
}
