//! Box-constrained Nelder–Mead simplex refinement: the local stage of the
//! two-step hat-parameter search. Candidate points are clamped into the unit
//! cube, which realizes the bound constraints.

#[derive(Clone, Copy, Debug)]
pub struct NelderMeadOptions {
    /// Stop when the simplex diameter drops below this value.
    pub xtol: f64,
    /// Stop when the value spread drops below this fraction of the best
    /// magnitude.
    pub ftol_rel: f64,
    pub max_evals: usize,
    /// Initial simplex step per coordinate.
    pub initial_step: f64,
}

pub struct NelderMeadResult {
    pub best_x: Vec<f64>,
    pub best_value: f64,
    pub evals: usize,
    pub budget_exhausted: bool,
}

fn clamp01(x: &mut [f64]) {
    for v in x.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
}

/// Minimizes `f` over `[0,1]^dim` starting from `x0`.
pub fn nelder_mead_minimize(
    x0: &[f64],
    mut f: impl FnMut(&[f64]) -> f64,
    opts: &NelderMeadOptions,
) -> NelderMeadResult {
    let dim = x0.len();
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    // initial simplex: x0 plus a step along each coordinate, reflected
    // inward when the step would leave the box
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let mut start = x0.to_vec();
    clamp01(&mut start);
    let v0 = eval(&start, &mut evals);
    simplex.push((start.clone(), v0));
    for k in 0..dim {
        let mut x = start.clone();
        let step = if x[k] + opts.initial_step <= 1.0 {
            opts.initial_step
        } else {
            -opts.initial_step
        };
        x[k] += step;
        clamp01(&mut x);
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }

    loop {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        let best = simplex[0].1;
        let worst = simplex[dim].1;

        // termination
        let mut diam = 0.0f64;
        for s in &simplex[1..] {
            let d: f64 = s.0
                .iter()
                .zip(&simplex[0].0)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            diam = diam.max(d);
        }
        if diam < opts.xtol {
            return NelderMeadResult {
                best_x: simplex[0].0.clone(),
                best_value: best,
                evals,
                budget_exhausted: false,
            };
        }
        if (worst - best).abs() <= opts.ftol_rel * best.abs().max(1e-300) {
            return NelderMeadResult {
                best_x: simplex[0].0.clone(),
                best_value: best,
                evals,
                budget_exhausted: false,
            };
        }
        if evals >= opts.max_evals {
            return NelderMeadResult {
                best_x: simplex[0].0.clone(),
                best_value: best,
                evals,
                budget_exhausted: true,
            };
        }

        // centroid of all but the worst
        let mut centroid = vec![0.0; dim];
        for s in &simplex[..dim] {
            for (c, v) in centroid.iter_mut().zip(&s.0) {
                *c += v / dim as f64;
            }
        }

        let reflect = |from: &[f64], coef: f64| -> Vec<f64> {
            let mut x: Vec<f64> = centroid
                .iter()
                .zip(from)
                .map(|(c, w)| c + coef * (c - w))
                .collect();
            clamp01(&mut x);
            x
        };

        let xr = reflect(&simplex[dim].0, alpha);
        let vr = eval(&xr, &mut evals);
        if vr < simplex[0].1 {
            // expansion
            let xe = reflect(&simplex[dim].0, gamma);
            let ve = eval(&xe, &mut evals);
            simplex[dim] = if ve < vr { (xe, ve) } else { (xr, vr) };
        } else if vr < simplex[dim - 1].1 {
            simplex[dim] = (xr, vr);
        } else {
            // contraction (outside if the reflection helped at all)
            let (xc, vc) = if vr < simplex[dim].1 {
                let mut xo: Vec<f64> = centroid
                    .iter()
                    .zip(&xr)
                    .map(|(c, w)| c + rho * (w - c))
                    .collect();
                clamp01(&mut xo);
                let v = eval(&xo, &mut evals);
                (xo, v)
            } else {
                let mut xi: Vec<f64> = centroid
                    .iter()
                    .zip(&simplex[dim].0)
                    .map(|(c, w)| c + rho * (w - c))
                    .collect();
                clamp01(&mut xi);
                let v = eval(&xi, &mut evals);
                (xi, v)
            };
            if vc < simplex[dim].1.min(vr) {
                simplex[dim] = (xc, vc);
            } else {
                // shrink toward the best vertex
                let best_x = simplex[0].0.clone();
                for s in simplex.iter_mut().skip(1) {
                    for (v, b) in s.0.iter_mut().zip(&best_x) {
                        *v = b + sigma * (*v - b);
                    }
                    s.1 = eval(&s.0, &mut evals);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> NelderMeadOptions {
        NelderMeadOptions { xtol: 1e-8, ftol_rel: 1e-10, max_evals: 5000, initial_step: 0.1 }
    }

    #[test]
    fn refines_quadratic() {
        let r = nelder_mead_minimize(
            &[0.2, 0.2],
            |x| (x[0] - 0.6).powi(2) + 3.0 * (x[1] - 0.4).powi(2),
            &opts(),
        );
        assert!((r.best_x[0] - 0.6).abs() < 1e-5, "{:?}", r.best_x);
        assert!((r.best_x[1] - 0.4).abs() < 1e-5);
        assert!(!r.budget_exhausted);
    }

    #[test]
    fn stays_in_box_when_optimum_outside() {
        let r = nelder_mead_minimize(&[0.5], |x| (x[0] - 2.0).powi(2), &opts());
        assert!((r.best_x[0] - 1.0).abs() < 1e-6, "{:?}", r.best_x);
    }

    #[test]
    fn deterministic_and_budgeted() {
        let f = |x: &[f64]| (x[0] - 0.3).abs() + (x[1] - 0.9).abs();
        let a = nelder_mead_minimize(&[0.1, 0.1], f, &opts());
        let b = nelder_mead_minimize(&[0.1, 0.1], f, &opts());
        assert_eq!(a.best_x, b.best_x);
        assert_eq!(a.evals, b.evals);
        let tight = NelderMeadOptions { max_evals: 10, ..opts() };
        let c = nelder_mead_minimize(&[0.1, 0.1], f, &tight);
        assert!(c.budget_exhausted);
    }

    #[test]
    fn never_worse_than_start() {
        let f = |x: &[f64]| ((x[0] * 7.0).sin() + 1.5) * ((x[1] * 5.0).cos() + 1.2);
        for start in [[0.1, 0.9], [0.5, 0.5], [0.95, 0.05]] {
            let v0 = f(&start);
            let r = nelder_mead_minimize(&start, f, &opts());
            assert!(r.best_value <= v0 + 1e-12);
        }
    }
}
