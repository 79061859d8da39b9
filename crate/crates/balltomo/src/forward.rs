//! Rays through the ball and the discretized ray perturbation operator:
//! per ray `i`, the delay functional `T^i f = ∫ f(X_i(s)) ds` along an
//! arc-length-parameterized polyline.
//!
//! Rays are either ingested from a line-oriented text format (see
//! [`load_rays`]) or generated as straight surface-to-surface chords.
//! Integration is adaptive Gauss–Kronrod per segment, pre-split where the
//! segment crosses the face planes of a hat-function carrier.

use crate::basis::{eval_element, fehf_eval, poly_eval};
use crate::geo::{
    add, cartesian_to_spherical, dot, norm, scale, spherical_to_cartesian, sub, wrap_angle_diff,
    DictionaryElement, SphericalPoint, Tesseroid, Vec3, BALL_RADIUS,
};
use crate::parallel::par_map;
use crate::quad::adaptive_gk_with_breakpoints;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::BufRead;
use std::path::Path;
use thiserror::Error;

/// Default relative tolerance of the ray integrals.
pub const DEFAULT_DSPO_TOL: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum RayError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("ray {index}: {msg}")]
    Invariant { index: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// An arc-length-parameterized polyline through the ball carrying one delay
/// datum and its uncertainty.
#[derive(Clone, Debug)]
pub struct Ray {
    pub vertices: Vec<Vec3>,
    /// Cumulative arc length at each vertex; strictly increasing, starts at 0.
    pub cum_len: Vec<f64>,
    /// Travel-time delay in seconds.
    pub delay: f64,
    /// Measurement uncertainty in seconds.
    pub sigma: f64,
}

impl Ray {
    pub fn new(vertices: Vec<Vec3>, delay: f64, sigma: f64) -> Result<Self, String> {
        if vertices.len() < 2 {
            return Err(format!("needs >= 2 vertices, got {}", vertices.len()));
        }
        for (i, v) in vertices.iter().enumerate() {
            let r = norm(*v);
            if r > BALL_RADIUS * (1.0 + 1e-9) {
                return Err(format!("vertex {i} outside the ball (|x| = {r})"));
            }
        }
        let mut cum = Vec::with_capacity(vertices.len());
        cum.push(0.0);
        for w in vertices.windows(2) {
            let step = norm(sub(w[1], w[0]));
            if step <= 0.0 {
                return Err("repeated vertex (arc length must be strictly increasing)".into());
            }
            cum.push(cum.last().unwrap() + step);
        }
        if *cum.last().unwrap() <= 0.0 {
            return Err("zero total length".into());
        }
        Ok(Self { vertices, cum_len: cum, delay, sigma })
    }

    pub fn length(&self) -> f64 {
        *self.cum_len.last().unwrap()
    }

    /// Re-samples the polyline at roughly double vertex density; geometry is
    /// unchanged (linear interpolation inserts segment midpoints).
    pub fn densified(&self) -> Ray {
        let mut vertices = Vec::with_capacity(self.vertices.len() * 2);
        for w in self.vertices.windows(2) {
            vertices.push(w[0]);
            vertices.push(scale(add(w[0], w[1]), 0.5));
        }
        vertices.push(*self.vertices.last().unwrap());
        Ray::new(vertices, self.delay, self.sigma).expect("densified polyline stays valid")
    }
}

/// A family of rays partitioned into divide-and-conquer packages.
#[derive(Clone, Debug, Default)]
pub struct RaySet {
    pub rays: Vec<Ray>,
    /// End index (exclusive) of each package; covers `rays` exactly.
    pub package_ends: Vec<usize>,
}

impl RaySet {
    pub fn single_package(rays: Vec<Ray>) -> Self {
        let ends = if rays.is_empty() { vec![] } else { vec![rays.len()] };
        Self { rays, package_ends: ends }
    }

    /// Re-partitions into consecutive packages of at most `size` rays.
    pub fn with_package_size(mut self, size: usize) -> Self {
        assert!(size >= 1);
        let n = self.rays.len();
        let mut ends = Vec::new();
        let mut e = 0;
        while e < n {
            e = (e + size).min(n);
            ends.push(e);
        }
        self.package_ends = ends;
        self
    }

    pub fn len(&self) -> usize {
        self.rays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rays.is_empty()
    }

    pub fn package_count(&self) -> usize {
        self.package_ends.len()
    }

    /// Rays of packages `0..k` (the active set when `k` packages are live).
    pub fn active_slice(&self, k: usize) -> &[Ray] {
        let end = if k == 0 { 0 } else { self.package_ends[k.min(self.package_count()) - 1] };
        &self.rays[..end]
    }

    /// Rays of package `k` alone.
    pub fn package_slice(&self, k: usize) -> &[Ray] {
        let start = if k == 0 { 0 } else { self.package_ends[k - 1] };
        &self.rays[start..self.package_ends[k]]
    }
}

/// Loads a ray file.
///
/// Grammar (line oriented, whitespace separated, `#` comments allowed):
///
/// ```text
/// radius_km <float>
/// ray <delay_s> <sigma_s> <nvertices>
/// <x> <y> <z>          (nvertices lines, kilometres)
/// ...
/// ```
///
/// Blank lines may separate rays. Vertices are scaled by the declared radius
/// onto the unit ball. Trailing garbage is rejected.
pub fn load_rays(path: &Path) -> Result<RaySet, RayError> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut lines = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let stripped = line.split('#').next().unwrap_or("").trim().to_string();
        lines.push((i + 1, stripped));
    }
    let mut it = lines.iter().filter(|(_, s)| !s.is_empty());

    let mut rays = Vec::new();
    let mut radius_km: Option<f64> = None;
    let mut ray_index = 0usize;
    while let Some(&(lineno, ref text)) = it.next() {
        let tokens: Vec<&str> = text.split_whitespace().collect();
        match tokens[0] {
            "radius_km" => {
                if tokens.len() != 2 {
                    return Err(RayError::Parse { line: lineno, msg: "expected `radius_km <float>`".into() });
                }
                radius_km = Some(tokens[1].parse().map_err(|e| RayError::Parse {
                    line: lineno,
                    msg: format!("bad radius: {e}"),
                })?);
            }
            "ray" => {
                let radius = radius_km.ok_or(RayError::Parse {
                    line: lineno,
                    msg: "`ray` before `radius_km` header".into(),
                })?;
                if tokens.len() != 4 {
                    return Err(RayError::Parse {
                        line: lineno,
                        msg: "expected `ray <delay_s> <sigma_s> <nvertices>`".into(),
                    });
                }
                let delay: f64 = tokens[1].parse().map_err(|e| RayError::Parse {
                    line: lineno,
                    msg: format!("bad delay: {e}"),
                })?;
                let sigma: f64 = tokens[2].parse().map_err(|e| RayError::Parse {
                    line: lineno,
                    msg: format!("bad sigma: {e}"),
                })?;
                let nv: usize = tokens[3].parse().map_err(|e| RayError::Parse {
                    line: lineno,
                    msg: format!("bad vertex count: {e}"),
                })?;
                let mut vertices = Vec::with_capacity(nv);
                for _ in 0..nv {
                    let &(vline, ref vtext) = it.next().ok_or(RayError::Parse {
                        line: lineno,
                        msg: format!("ray declares {nv} vertices but the file ends early"),
                    })?;
                    let coords: Vec<&str> = vtext.split_whitespace().collect();
                    if coords.len() != 3 {
                        return Err(RayError::Parse {
                            line: vline,
                            msg: format!("expected `x y z`, got `{vtext}`"),
                        });
                    }
                    let mut v = [0.0; 3];
                    for (k, c) in coords.iter().enumerate() {
                        v[k] = c.parse::<f64>().map_err(|e| RayError::Parse {
                            line: vline,
                            msg: format!("bad coordinate: {e}"),
                        })? / radius;
                    }
                    vertices.push(v);
                }
                let ray = Ray::new(vertices, delay, sigma)
                    .map_err(|msg| RayError::Invariant { index: ray_index, msg })?;
                rays.push(ray);
                ray_index += 1;
            }
            other => {
                return Err(RayError::Parse {
                    line: lineno,
                    msg: format!("unexpected token `{other}`"),
                });
            }
        }
    }
    Ok(RaySet::single_package(rays))
}

/// Writes a ray set back in the [`load_rays`] format.
pub fn write_rays(path: &Path, rays: &RaySet, radius_km: f64) -> std::io::Result<()> {
    use std::io::Write;
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "radius_km {radius_km}")?;
    for ray in &rays.rays {
        writeln!(f)?;
        writeln!(f, "ray {} {} {}", ray.delay, ray.sigma, ray.vertices.len())?;
        for v in &ray.vertices {
            writeln!(f, "{} {} {}", v[0] * radius_km, v[1] * radius_km, v[2] * radius_km)?;
        }
    }
    Ok(())
}

/// Generates `n` straight chords between pseudo-random surface points,
/// deterministic in the seed. Tangent depths are biased so the mid-mantle is
/// sampled densest, qualitatively mimicking teleseismic body-wave coverage.
pub fn synthetic_chords(n: usize, seed: u64) -> RaySet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rays = Vec::with_capacity(n);
    for _ in 0..n {
        // triangular depth distribution of the tangent radius, peak mid-mantle
        let (lo, peak, hi) = (0.40, 0.78, 0.985);
        let u: f64 = rng.gen();
        let a = if u < (peak - lo) / (hi - lo) {
            lo + ((hi - lo) * (peak - lo) * u).sqrt()
        } else {
            hi - ((hi - lo) * (hi - peak) * (1.0 - u)).sqrt()
        };
        // random axis toward the chord midpoint
        let axis = random_unit(&mut rng);
        // random direction perpendicular to the axis
        let helper = random_unit(&mut rng);
        let mut w = sub(helper, scale(axis, dot(helper, axis)));
        let wn = norm(w);
        if wn < 1e-9 {
            w = [axis[1], -axis[0], 0.0];
        }
        let w = scale(w, 1.0 / norm(w));
        let half = (1.0 - a * a).sqrt();
        let mut p0 = add(scale(axis, a), scale(w, half));
        let mut p1 = sub(scale(axis, a), scale(w, half));
        // renormalize endpoints exactly onto the surface
        p0 = scale(p0, BALL_RADIUS / norm(p0));
        p1 = scale(p1, BALL_RADIUS / norm(p1));
        rays.push(Ray::new(vec![p0, p1], 0.0, 1.0).expect("chord is valid"));
    }
    RaySet::single_package(rays)
}

fn random_unit(rng: &mut impl Rng) -> Vec3 {
    loop {
        let v = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        let n = norm(v);
        if n > 1e-3 && n <= 1.0 {
            return scale(v, 1.0 / n);
        }
    }
}

/// Roots of `a τ² + b τ + c = 0` inside `(lo, hi)`.
fn quadratic_roots_in(a: f64, b: f64, c: f64, lo: f64, hi: f64, out: &mut Vec<f64>) {
    if a.abs() < 1e-300 {
        if b.abs() > 1e-300 {
            let t = -c / b;
            if t > lo && t < hi {
                out.push(t);
            }
        }
        return;
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return;
    }
    let sq = disc.sqrt();
    for t in [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)] {
        if t > lo && t < hi {
            out.push(t);
        }
    }
}

/// τ values in (0,1) where the segment `p0 + τ v` crosses `r = c`.
fn radius_crossings(p0: Vec3, v: Vec3, c: f64, out: &mut Vec<f64>) {
    quadratic_roots_in(dot(v, v), 2.0 * dot(p0, v), dot(p0, p0) - c * c, 0.0, 1.0, out);
}

/// τ values in (0,1) where the segment crosses the cone `t = c`.
fn polar_crossings(p0: Vec3, v: Vec3, c: f64, out: &mut Vec<f64>) {
    // z(τ)² = c² |x(τ)|², keeping roots with sign(z) = sign(c)
    let a = v[2] * v[2] - c * c * dot(v, v);
    let b = 2.0 * (p0[2] * v[2] - c * c * dot(p0, v));
    let d = p0[2] * p0[2] - c * c * dot(p0, p0);
    let mut cand = Vec::new();
    quadratic_roots_in(a, b, d, 0.0, 1.0, &mut cand);
    for tau in cand {
        let z = p0[2] + tau * v[2];
        if z * c >= 0.0 {
            out.push(tau);
        }
    }
}

/// τ values in (0,1) where the segment crosses the half-plane `φ = c`.
fn longitude_crossings(p0: Vec3, v: Vec3, c: f64, out: &mut Vec<f64>) {
    let (s, co) = c.sin_cos();
    let np = -s * p0[0] + co * p0[1];
    let nv = -s * v[0] + co * v[1];
    if nv.abs() < 1e-300 {
        return;
    }
    let tau = -np / nv;
    if tau > 0.0 && tau < 1.0 {
        let x = p0[0] + tau * v[0];
        let y = p0[1] + tau * v[1];
        if co * x + s * y > 0.0 {
            out.push(tau);
        }
    }
}

/// Sub-intervals of τ ∈ [0,1] where `r(τ) ∈ [rl, ru]`; used both to clip hat
/// integrals and to skip segments that never reach the carrier shell.
fn radial_shell_intervals(p0: Vec3, v: Vec3, rl: f64, ru: f64) -> Vec<(f64, f64)> {
    let mut cuts = vec![0.0, 1.0];
    radius_crossings(p0, v, rl, &mut cuts);
    radius_crossings(p0, v, ru, &mut cuts);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out = Vec::new();
    for w in cuts.windows(2) {
        if w[1] - w[0] < 1e-14 {
            continue;
        }
        let mid = 0.5 * (w[0] + w[1]);
        let r = norm(add(p0, scale(v, mid)));
        if r >= rl && r <= ru {
            // merge adjacent in-shell intervals
            match out.last_mut() {
                Some((_, e)) if (*e - w[0]).abs() < 1e-13 => *e = w[1],
                _ => out.push((w[0], w[1])),
            }
        }
    }
    out
}

/// Great-circle angle between two directions.
fn angle_between(a: Vec3, b: Vec3) -> f64 {
    (dot(a, b) / (norm(a) * norm(b))).clamp(-1.0, 1.0).acos()
}

/// Conservative reject test: can the sub-segment reach the hat's angular
/// footprint at all?
fn segment_misses_hat_angularly(p0: Vec3, v: Vec3, lo: f64, hi: f64, ts: &Tesseroid) -> bool {
    let center = spherical_to_cartesian(SphericalPoint::new(1.0, ts.phi, ts.t));
    // meridian reach of the t-band plus parallel reach of the phi-band
    let theta_c = ts.t.acos();
    let (tl, tu) = ts.t_support();
    let reach_t = (theta_c - tu.acos()).abs().max((theta_c - tl.acos()).abs());
    let bound = reach_t + ts.dphi + 1e-9;

    let a = add(p0, scale(v, lo));
    let m = add(p0, scale(v, 0.5 * (lo + hi)));
    let b = add(p0, scale(v, hi));
    if norm(a) == 0.0 || norm(m) == 0.0 || norm(b) == 0.0 {
        return false;
    }
    let arc_half = angle_between(a, m).max(angle_between(m, b));
    angle_between(m, center) - arc_half > bound
}

/// Line integral of an arbitrary scalar field along the ray.
pub fn field_line_integral(
    ray: &Ray,
    f: impl Fn(&SphericalPoint) -> f64,
    tol: f64,
) -> (f64, bool) {
    let mut total = 0.0;
    let mut converged = true;
    for w in ray.vertices.windows(2) {
        let p0 = w[0];
        let v = sub(w[1], w[0]);
        let len = norm(v);
        let res = adaptive_gk_with_breakpoints(
            |s| {
                let x = add(p0, scale(v, s / len));
                f(&cartesian_to_spherical(x))
            },
            0.0,
            len,
            tol,
            &[],
        );
        total += res.value;
        converged &= res.converged;
    }
    (total, converged)
}

/// `T^i d`: the delay a unit-coefficient element `d` would produce on `ray`.
pub fn dspo_apply(d: &DictionaryElement, ray: &Ray, tol: f64) -> f64 {
    dspo_apply_checked(d, ray, tol).0
}

/// As [`dspo_apply`], also reporting quadrature convergence.
pub fn dspo_apply_checked(d: &DictionaryElement, ray: &Ray, tol: f64) -> (f64, bool) {
    match d {
        DictionaryElement::Poly(idx) => {
            let mut total = 0.0;
            let mut ok = true;
            for w in ray.vertices.windows(2) {
                let p0 = w[0];
                let v = sub(w[1], w[0]);
                let len = norm(v);
                let res = adaptive_gk_with_breakpoints(
                    |s| {
                        let x = add(p0, scale(v, s / len));
                        poly_eval(idx, &cartesian_to_spherical(x))
                    },
                    0.0,
                    len,
                    tol,
                    &[],
                );
                total += res.value;
                ok &= res.converged;
            }
            (total, ok)
        }
        DictionaryElement::Hat(ts) => {
            let (rl, ru) = ts.r_support();
            let (tl, tu) = ts.t_support();
            let mut total = 0.0;
            let mut ok = true;
            for w in ray.vertices.windows(2) {
                let p0 = w[0];
                let v = sub(w[1], w[0]);
                let len = norm(v);
                for (lo, hi) in radial_shell_intervals(p0, v, rl, ru) {
                    if segment_misses_hat_angularly(p0, v, lo, hi, ts) {
                        continue;
                    }
                    // face and kink planes inside the clipped piece
                    let mut taus = Vec::new();
                    radius_crossings(p0, v, ts.r, &mut taus);
                    for c in [tl, ts.t, tu] {
                        polar_crossings(p0, v, c, &mut taus);
                    }
                    for off in [-ts.dphi, 0.0, ts.dphi] {
                        longitude_crossings(p0, v, ts.phi + off, &mut taus);
                    }
                    let breaks: Vec<f64> = taus
                        .into_iter()
                        .filter(|&t| t > lo && t < hi)
                        .map(|t| t * len)
                        .collect();
                    let res = adaptive_gk_with_breakpoints(
                        |s| {
                            let x = add(p0, scale(v, s / len));
                            fehf_eval(ts, &cartesian_to_spherical(x))
                        },
                        lo * len,
                        hi * len,
                        tol,
                        &breaks,
                    );
                    total += res.value;
                    ok &= res.converged;
                }
            }
            (total, ok)
        }
    }
}

/// One operator column over a slice of rays, computed in parallel with
/// order-preserving collection.
pub fn dspo_matrix_column(d: &DictionaryElement, rays: &[Ray], tol: f64) -> Vec<f64> {
    par_map(rays, |ray| dspo_apply(d, ray, tol))
}

/// Quick containment hint used by tests: carrier box of a hat in (r, φ, t).
pub fn hat_contains(ts: &Tesseroid, p: &SphericalPoint) -> bool {
    let (rl, ru) = ts.r_support();
    let (tl, tu) = ts.t_support();
    p.r >= rl
        && p.r <= ru
        && p.t >= tl
        && p.t <= tu
        && wrap_angle_diff(p.phi, ts.phi).abs() <= ts.dphi
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{Domain, PolyIndex};
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use std::f64::consts::PI;
    use std::io::Write;

    fn chord(p0: Vec3, p1: Vec3) -> Ray {
        Ray::new(vec![p0, p1], 0.0, 1.0).unwrap()
    }

    #[test]
    fn ray_basic_invariants() {
        let r = chord([1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]);
        assert_abs_diff_eq!(r.length(), 2.0);
        assert!(Ray::new(vec![[0.0, 0.0, 0.0]], 0.0, 1.0).is_err());
        assert!(Ray::new(vec![[1.2, 0.0, 0.0], [0.0, 0.0, 0.0]], 0.0, 1.0).is_err());
        assert!(Ray::new(vec![[0.5, 0.0, 0.0], [0.5, 0.0, 0.0]], 0.0, 1.0).is_err());
    }

    #[test]
    fn load_rays_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rays.txt");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "radius_km 6371.0").unwrap();
        writeln!(f).unwrap();
        writeln!(f, "ray 1.25 1.0 2").unwrap();
        writeln!(f, "6371 0 0").unwrap();
        writeln!(f, "0 6371 0").unwrap();
        drop(f);
        let rs = load_rays(&path).unwrap();
        assert_eq!(rs.len(), 1);
        assert_abs_diff_eq!(rs.rays[0].delay, 1.25);
        assert_abs_diff_eq!(rs.rays[0].length(), 2.0f64.sqrt(), epsilon = 1e-12);

        // empty file parses as an empty, valid set
        let empty = dir.path().join("empty.txt");
        std::fs::write(&empty, "").unwrap();
        assert!(load_rays(&empty).unwrap().is_empty());

        // vertex outside the ball
        let bad = dir.path().join("bad.txt");
        std::fs::write(&bad, "radius_km 6371\nray 0 1 2\n7645.2 0 0\n0 6371 0\n").unwrap();
        assert!(matches!(load_rays(&bad), Err(RayError::Invariant { .. })));

        // trailing garbage
        let junk = dir.path().join("junk.txt");
        std::fs::write(&junk, "radius_km 6371\nray 0 1 2\n6371 0 0\n0 6371 0\nwat\n").unwrap();
        assert!(matches!(load_rays(&junk), Err(RayError::Parse { .. })));
    }

    #[test]
    fn write_then_load_round_trips() {
        let rs = synthetic_chords(5, 99);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.txt");
        write_rays(&path, &rs, 6371.0).unwrap();
        let back = load_rays(&path).unwrap();
        assert_eq!(back.len(), 5);
        for (a, b) in rs.rays.iter().zip(&back.rays) {
            assert!(norm(sub(a.vertices[0], b.vertices[0])) < 1e-12);
            assert!((a.length() - b.length()).abs() < 1e-12);
        }
    }

    #[test]
    fn synthetic_chords_deterministic_and_on_surface() {
        let a = synthetic_chords(20, 7);
        let b = synthetic_chords(20, 7);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.rays.iter().zip(&b.rays) {
            assert_eq!(x.vertices, y.vertices);
        }
        assert!(synthetic_chords(0, 7).is_empty());
        for ray in &a.rays {
            for v in &ray.vertices {
                assert!((norm(*v) - BALL_RADIUS).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn packages_partition() {
        let rs = synthetic_chords(10, 3).with_package_size(4);
        assert_eq!(rs.package_ends, vec![4, 8, 10]);
        assert_eq!(rs.active_slice(2).len(), 8);
        assert_eq!(rs.package_slice(2).len(), 2);
        assert_eq!(rs.active_slice(0).len(), 0);
    }

    #[test]
    fn constant_field_integrates_to_length() {
        let ray = chord([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
        let (v, ok) = field_line_integral(&ray, |_| 1.0, 1e-10);
        assert!(ok);
        assert_abs_diff_eq!(v, ray.length(), epsilon = 1e-12);
    }

    #[test]
    fn constant_polynomial_along_diameter() {
        let idx = DictionaryElement::Poly(PolyIndex::new(0, 0, 0));
        let ray = chord([0.0, 0.0, 1.0], [0.0, 0.0, -1.0]);
        let v = dspo_apply(&idx, &ray, 1e-10);
        assert_abs_diff_eq!(v, 2.0 * (3.0 / (4.0 * PI)).sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn hat_disjoint_from_ray_is_zero() {
        let dom = Domain::default();
        // hat near the north pole region, ray in the equatorial plane
        let ts = Tesseroid::new(0.9, 1.0, 0.9, 0.05, 0.4, 0.05, dom);
        let ray = chord([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
        let v = dspo_apply(&DictionaryElement::Hat(ts), &ray, 1e-8);
        assert_eq!(v, 0.0);
    }

    #[test]
    fn hat_integral_bounded_by_shell_chord() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(19);
        let rays = synthetic_chords(40, 5);
        for _ in 0..20 {
            let dom = Domain::default();
            let ts = Tesseroid::new(
                rng.gen_range(dom.r_min()..dom.r_max()),
                rng.gen_range(0.0..crate::geo::TWO_PI),
                rng.gen_range(dom.t_min()..dom.t_max()),
                rng.gen_range(0.05..0.3),
                rng.gen_range(0.3..1.5),
                rng.gen_range(0.1..0.45),
                dom,
            );
            for ray in &rays.rays {
                let v = dspo_apply(&DictionaryElement::Hat(ts), ray, 1e-8);
                assert!(v >= 0.0);
                // crude upper bound: length of the ray piece inside the shell
                let p0 = ray.vertices[0];
                let dirv = sub(ray.vertices[1], ray.vertices[0]);
                let (rl, ru) = ts.r_support();
                let inside: f64 = radial_shell_intervals(p0, dirv, rl, ru)
                    .iter()
                    .map(|(a, b)| (b - a) * norm(dirv))
                    .sum();
                assert!(v <= inside + 1e-9, "{v} > {inside}");
            }
        }
    }

    #[test]
    fn hat_integral_matches_dense_sampling() {
        // cross-check the clipped, breakpoint-driven path against midpoint
        // sampling with a fine step
        let dom = Domain::default();
        let ts = Tesseroid::new(0.8, 0.6, 0.2, 0.15, 0.9, 0.35, dom);
        let d = DictionaryElement::Hat(ts);
        let rays = synthetic_chords(25, 11);
        for ray in &rays.rays {
            let fast = dspo_apply(&d, ray, 1e-9);
            let p0 = ray.vertices[0];
            let v = sub(ray.vertices[1], ray.vertices[0]);
            let len = norm(v);
            let n = 40_000;
            let mut slow = 0.0;
            for i in 0..n {
                let s = (i as f64 + 0.5) / n as f64;
                let x = add(p0, scale(v, s));
                slow += fehf_eval(&ts, &cartesian_to_spherical(x));
            }
            slow *= len / n as f64;
            assert!(
                (fast - slow).abs() < 2e-6 * slow.abs().max(1e-3),
                "fast {fast} slow {slow}"
            );
        }
    }

    #[test]
    fn operator_linearity() {
        let a = DictionaryElement::Poly(PolyIndex::new(1, 1, 0));
        let dom = Domain::default();
        let b = DictionaryElement::Hat(Tesseroid::new(0.8, 0.6, 0.2, 0.2, 1.2, 0.4, dom));
        let rays = synthetic_chords(10, 23);
        let (alpha, beta) = (0.7, -1.3);
        for ray in &rays.rays {
            let va = dspo_apply(&a, ray, 1e-9);
            let vb = dspo_apply(&b, ray, 1e-9);
            // linear combination evaluated pointwise through the field path
            let (vc, _) = field_line_integral(
                ray,
                |p| alpha * eval_element(&a, p) + beta * eval_element(&b, p),
                1e-10,
            );
            assert!(
                (vc - (alpha * va + beta * vb)).abs() < 1e-7 * (alpha.abs() + beta.abs()),
                "combined {vc} vs {}",
                alpha * va + beta * vb
            );
        }
    }

    #[test]
    fn parameterization_invariance() {
        let idx = DictionaryElement::Poly(PolyIndex::new(2, 3, 1));
        let rays = synthetic_chords(8, 31);
        for ray in &rays.rays {
            let coarse = dspo_apply(&idx, ray, 1e-9);
            let fine = dspo_apply(&idx, &ray.densified(), 1e-9);
            assert!(
                (coarse - fine).abs() <= 1e-6 * coarse.abs().max(1e-9),
                "coarse {coarse} fine {fine}"
            );
        }
    }

    #[test]
    fn column_matches_single_applications() {
        let d = DictionaryElement::Poly(PolyIndex::new(1, 2, -1));
        let rays = synthetic_chords(12, 77);
        let col = dspo_matrix_column(&d, &rays.rays, 1e-6);
        assert_eq!(col.len(), 12);
        for (i, ray) in rays.rays.iter().enumerate() {
            assert_eq!(col[i], dspo_apply(&d, ray, 1e-6));
        }
        let zero_like = dspo_matrix_column(&d, &rays.rays[3..4], 1e-6);
        assert_eq!(zero_like.len(), 1);
    }
}
