//! Synthetic ground truth and evaluation machinery: conical plume fields,
//! delay synthesis, multiplicative Gaussian noise, equi-angular evaluation
//! grids, the relative RMS error, and the slowness-to-velocity-anomaly map.

use crate::forward::{field_line_integral, RaySet};
use crate::geo::{spherical_to_cartesian, SphericalPoint, BALL_RADIUS, CMB_FRACTION};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("ground truth is identically zero on the grid")]
    ZeroTruth,
    #[error("slowness deviation cancels the reference slowness (division by zero)")]
    SlownessCancelsReference,
}

/// One conical slow anomaly: a column from the core-mantle boundary to the
/// surface around a fixed axis, with linearly tapering angular radius.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Plume {
    /// Longitude of the axis, degrees east.
    pub lon_deg: f64,
    /// Latitude of the axis, degrees north.
    pub lat_deg: f64,
    /// Angular radius (radians) of the cone at the base (r = ρR).
    pub base_radius: f64,
    /// Angular radius (radians) at the surface (r = R).
    pub top_radius: f64,
}

impl Plume {
    pub fn axis(&self) -> SphericalPoint {
        SphericalPoint::new(
            1.0,
            self.lon_deg.to_radians(),
            self.lat_deg.to_radians().sin(),
        )
    }

    /// Cone radius at radius `r`, linear between base and top.
    pub fn radius_at(&self, r: f64, rho: f64) -> f64 {
        let x = ((r - rho * BALL_RADIUS) / (BALL_RADIUS - rho * BALL_RADIUS)).clamp(0.0, 1.0);
        self.base_radius + (self.top_radius - self.base_radius) * x
    }
}

/// The synthetic slowness-deviation model: a sum of plumes with a common
/// amplitude (slow anomaly ⇒ positive deviation), zero below the
/// core-mantle boundary.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlumeSpec {
    pub plumes: Vec<Plume>,
    /// Slowness deviation on the plume axis, seconds per unit length.
    pub amplitude: f64,
    /// Lower radial cutoff as a fraction of the ball radius.
    pub rho: f64,
}

impl Default for PlumeSpec {
    fn default() -> Self {
        Self {
            // Volcanic Eifel and Yellowstone
            plumes: vec![
                Plume { lon_deg: 6.7, lat_deg: 50.2, base_radius: 0.28, top_radius: 0.14 },
                Plume { lon_deg: -110.6, lat_deg: 44.4, base_radius: 0.28, top_radius: 0.14 },
            ],
            amplitude: 5.0,
            rho: CMB_FRACTION,
        }
    }
}

/// Triangular bump profile: 1−x on [0,1], zero beyond.
#[inline]
fn bump(x: f64) -> f64 {
    (1.0 - x).max(0.0)
}

/// Slowness deviation of the plume model at a point.
pub fn plume_field(spec: &PlumeSpec, p: &SphericalPoint) -> f64 {
    if p.r < spec.rho * BALL_RADIUS {
        return 0.0;
    }
    let x = spherical_to_cartesian(SphericalPoint::new(1.0, p.phi, p.t));
    let mut v = 0.0;
    for plume in &spec.plumes {
        let axis = spherical_to_cartesian(plume.axis());
        let angle = crate::geo::dot(x, axis).clamp(-1.0, 1.0).acos();
        let radius = plume.radius_at(p.r, spec.rho);
        v += spec.amplitude * bump(angle / radius);
    }
    v
}

/// Unperturbed delays: the line integral of the truth field along each ray.
pub fn synthesize_delays(spec: &PlumeSpec, rays: &RaySet, tol: f64) -> Vec<f64> {
    crate::parallel::par_map(&rays.rays, |ray| {
        field_line_integral(ray, |p| plume_field(spec, p), tol).0
    })
}

/// Multiplies each datum by `(1 + level·ε)` with `ε ~ N(0,1)`, deterministic
/// in the seed.
pub fn perturb(y: &[f64], level: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    y.iter()
        .map(|&v| perturb_one(v, level, standard_normal(&mut rng)))
        .collect()
}

/// The perturbation arithmetic for a single datum: `y·(1 + level·ε)`.
#[inline]
pub fn perturb_one(y: f64, level: f64, eps: f64) -> f64 {
    y * (1.0 + level * eps)
}

/// Box–Muller standard normal from the uniform stream.
fn standard_normal(rng: &mut impl Rng) -> f64 {
    loop {
        let u1: f64 = rng.gen();
        if u1 <= f64::MIN_POSITIVE {
            continue;
        }
        let u2: f64 = rng.gen();
        return (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos();
    }
}

/// Evaluation grid: layers of equi-angular longitude/latitude samples.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvalGrid {
    /// Layer radii (unit-ball units).
    pub layer_radii: Vec<f64>,
    pub n_lon: usize,
    pub n_lat: usize,
}

impl EvalGrid {
    /// The default twelve layers spanning one step below the core-mantle
    /// boundary up to the surface, equally spaced.
    pub fn default_layers(n_lon: usize, n_lat: usize) -> Self {
        let mut layer_radii = Vec::with_capacity(12);
        for i in 0..12 {
            layer_radii.push((3193.1 + 288.9 * i as f64) / 6371.0);
        }
        Self { layer_radii, n_lon, n_lat }
    }

    pub fn points_per_layer(&self) -> usize {
        self.n_lon * self.n_lat
    }

    pub fn total_points(&self) -> usize {
        self.layer_radii.len() * self.points_per_layer()
    }

    /// Grid points of one layer in row-major (lat outer, lon inner) order,
    /// with their (lon, lat) in degrees.
    pub fn layer_points(&self, layer: usize) -> Vec<(f64, f64, SphericalPoint)> {
        let r = self.layer_radii[layer];
        let mut out = Vec::with_capacity(self.points_per_layer());
        for la in 0..self.n_lat {
            let lat_deg = -90.0 + 180.0 * la as f64 / (self.n_lat - 1) as f64;
            let t = lat_deg.to_radians().sin();
            for lo in 0..self.n_lon {
                let lon_deg = 360.0 * lo as f64 / (self.n_lon - 1) as f64;
                out.push((lon_deg, lat_deg, SphericalPoint::new(r, lon_deg.to_radians(), t)));
            }
        }
        out
    }
}

/// Relative root mean square error of `approx` against `truth` over a grid
/// of values: `(Σ(f−f_N)² / Σf²)^{1/2}`.
pub fn rrmse(truth: &[f64], approx: &[f64]) -> Result<f64, ScenarioError> {
    assert_eq!(truth.len(), approx.len());
    let denom: f64 = truth.iter().map(|v| v * v).sum();
    if denom <= 0.0 {
        return Err(ScenarioError::ZeroTruth);
    }
    let num: f64 = truth
        .iter()
        .zip(approx)
        .map(|(f, g)| (f - g) * (f - g))
        .sum();
    Ok((num / denom).sqrt())
}

/// Converts a slowness deviation into the relative velocity anomaly:
/// `dc/c = −δS / (δS + 1/c_ref)`.
pub fn slowness_to_dc_over_c(delta_s: f64, c_ref: f64) -> Result<f64, ScenarioError> {
    let denom = delta_s + 1.0 / c_ref;
    if denom == 0.0 {
        return Err(ScenarioError::SlownessCancelsReference);
    }
    Ok(-delta_s / denom)
}
