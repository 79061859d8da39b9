//! One-dimensional Gauss–Legendre rules, adaptive Gauss–Kronrod (7/15)
//! integration with caller-supplied breakpoints, and the tensor-product
//! ball rule used as the brute-force integration oracle.

use crate::geo::{SphericalPoint, BALL_RADIUS, TWO_PI};
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

/// Absolute-tolerance floor preventing endless refinement of integrals whose
/// true value is zero.
pub const TOL_ABS_FLOOR: f64 = 1e-12;

/// Hard cap on adaptive subdivisions.
pub const MAX_SUBDIVISIONS: usize = 2000;

/// Nodes of the 15-point Kronrod rule on [-1, 1] (positive half; symmetric).
/// Odd indices are the embedded 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// A fixed quadrature rule on `[a, b]`.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub interval: (f64, f64),
}

impl QuadratureRule {
    /// Integrates `f` with this rule.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration.
fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre P_n(x) and derivative by recurrence
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let fk = k as f64;
                let p2 = ((2.0 * fk - 1.0) * x * p1 - (fk - 1.0) * p0) / fk;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            dp = if n == 0 {
                0.0
            } else {
                n as f64 * (x * p1 - p0) / (x * x - 1.0)
            };
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn unit_rule_cache() -> &'static Mutex<std::collections::HashMap<usize, (Vec<f64>, Vec<f64>)>> {
    static CACHE: OnceLock<Mutex<std::collections::HashMap<usize, (Vec<f64>, Vec<f64>)>>> =
        OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(std::collections::HashMap::new()))
}

/// Degree-(2n−1)-exact Gauss–Legendre rule on `[a, b]`.
///
/// Unit-interval nodes are cached per point count; large rules are built once.
pub fn gauss_legendre(npoints: usize, a: f64, b: f64) -> QuadratureRule {
    assert!(npoints >= 1, "need at least one node");
    let (unit_nodes, unit_weights) = {
        let mut cache = unit_rule_cache().lock().unwrap();
        cache
            .entry(npoints)
            .or_insert_with(|| gauss_legendre_unit(npoints))
            .clone()
    };
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    QuadratureRule {
        nodes: unit_nodes.iter().map(|&x| mid + half * x).collect(),
        weights: unit_weights.iter().map(|&w| w * half).collect(),
        interval: (a, b),
    }
}

/// Result of an adaptive integration: value, error estimate, and whether the
/// requested tolerance was met before the subdivision cap.
#[derive(Clone, Copy, Debug)]
pub struct IntegralResult {
    pub value: f64,
    pub error_estimate: f64,
    pub converged: bool,
}

/// One 7/15 Gauss–Kronrod panel: returns (kronrod, abs error estimate).
fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = WGK[7] * fc;
    let mut res_g = WG[3] * fc;
    let mut res_abs = WGK[7] * fc.abs();
    let mut fv = [0.0f64; 14];
    for i in 0..7 {
        let dx = half * XGK[i];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv[i] = f1;
        fv[7 + i] = f2;
        res_k += WGK[i] * (f1 + f2);
        res_abs += WGK[i] * (f1.abs() + f2.abs());
        if i % 2 == 1 {
            res_g += WG[i / 2] * (f1 + f2);
        }
    }
    let mean = res_k * 0.5;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for i in 0..7 {
        res_asc += WGK[i] * ((fv[i] - mean).abs() + (fv[7 + i] - mean).abs());
    }
    res_asc *= half.abs();
    res_abs *= half.abs();
    let value = res_k * half;
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * 1.0f64.min((200.0 * err / res_asc).powf(1.5));
    }
    let min_err = 50.0 * f64::EPSILON * res_abs;
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) && min_err > err {
        err = min_err;
    }
    (value, err)
}

/// Adaptive Gauss–Kronrod integration of `f` over `[a, b]` to relative
/// tolerance `tol` (with the absolute floor [`TOL_ABS_FLOOR`]).
pub fn adaptive_gk(f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> IntegralResult {
    adaptive_gk_with_breakpoints(f, a, b, tol, &[])
}

/// Same as [`adaptive_gk`], pre-splitting the interval at the given
/// breakpoints (kink locations of piecewise-defined integrands).
pub fn adaptive_gk_with_breakpoints(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    breakpoints: &[f64],
) -> IntegralResult {
    if a == b {
        return IntegralResult { value: 0.0, error_estimate: 0.0, converged: true };
    }
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&x| x > a && x < b)
        .collect();
    cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    cuts.dedup();
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(a);
    edges.extend(cuts);
    edges.push(b);

    // segment worklist ordered by error estimate
    struct Seg {
        a: f64,
        b: f64,
        value: f64,
        err: f64,
    }
    let mut segs: Vec<Seg> = edges
        .windows(2)
        .map(|w| {
            let (v, e) = gk15(&mut f, w[0], w[1]);
            Seg { a: w[0], b: w[1], value: v, err: e }
        })
        .collect();
    let mut subdivisions = 0usize;
    loop {
        let total: f64 = segs.iter().map(|s| s.value).sum();
        let total_err: f64 = segs.iter().map(|s| s.err).sum();
        let target = (tol * total.abs()).max(TOL_ABS_FLOOR);
        if total_err <= target {
            return IntegralResult { value: total, error_estimate: total_err, converged: true };
        }
        if subdivisions >= MAX_SUBDIVISIONS {
            return IntegralResult { value: total, error_estimate: total_err, converged: false };
        }
        // split the worst segment
        let worst = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.partial_cmp(&y.1.err).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        let Seg { a: sa, b: sb, .. } = segs[worst];
        let mid = 0.5 * (sa + sb);
        if mid <= sa || mid >= sb {
            // interval exhausted at machine precision
            let total: f64 = segs.iter().map(|s| s.value).sum();
            let total_err: f64 = segs.iter().map(|s| s.err).sum();
            return IntegralResult { value: total, error_estimate: total_err, converged: false };
        }
        let (v1, e1) = gk15(&mut f, sa, mid);
        let (v2, e2) = gk15(&mut f, mid, sb);
        segs[worst] = Seg { a: sa, b: mid, value: v1, err: e1 };
        segs.push(Seg { a: mid, b: sb, value: v2, err: e2 });
        subdivisions += 1;
    }
}

/// A weighted point set on the ball: `Σ w_i f(x_i) ≈ ∫_B f dV`.
#[derive(Clone, Debug)]
pub struct BallRule {
    pub points: Vec<SphericalPoint>,
    pub weights: Vec<f64>,
}

impl BallRule {
    pub fn integrate(&self, mut f: impl FnMut(SphericalPoint) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * f(p))
            .sum()
    }
}

/// Tensor-product rule on the ball with the `r²` Jacobian folded into the
/// weights: Gauss–Legendre in `r ∈ [0, R]`, `t ∈ [−1, 1]`, `φ ∈ [0, 2π]`.
pub fn ball_quadrature(n_r: usize, n_t: usize, n_phi: usize) -> BallRule {
    ball_quadrature_with_breakpoints(n_r, n_t, n_phi, &[], &[], &[])
}

/// Tensor ball rule with composite panels split at the supplied per-dimension
/// breakpoints; `n_*` nodes are used on each panel. This keeps the rule
/// accurate for integrands with axis-aligned kinks (hat-function carriers).
pub fn ball_quadrature_with_breakpoints(
    n_r: usize,
    n_t: usize,
    n_phi: usize,
    r_breaks: &[f64],
    t_breaks: &[f64],
    phi_breaks: &[f64],
) -> BallRule {
    let composite = |n: usize, a: f64, b: f64, breaks: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
        cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
        cuts.dedup();
        let mut edges = vec![a];
        edges.extend(cuts);
        edges.push(b);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for w in edges.windows(2) {
            let rule = gauss_legendre(n, w[0], w[1]);
            nodes.extend(rule.nodes);
            weights.extend(rule.weights);
        }
        (nodes, weights)
    };
    let (rn, rw) = composite(n_r, 0.0, BALL_RADIUS, r_breaks);
    let (tn, tw) = composite(n_t, -1.0, 1.0, t_breaks);
    let (pn, pw) = composite(n_phi, 0.0, TWO_PI, phi_breaks);
    let mut points = Vec::with_capacity(rn.len() * tn.len() * pn.len());
    let mut weights = Vec::with_capacity(points.capacity());
    for (i, &r) in rn.iter().enumerate() {
        let wr = rw[i] * r * r;
        for (k, &t) in tn.iter().enumerate() {
            let wrt = wr * tw[k];
            for (l, &phi) in pn.iter().enumerate() {
                points.push(SphericalPoint { r, phi, t });
                weights.push(wrt * pw[l]);
            }
        }
    }
    BallRule { points, weights }
}
