//! Derivative-free global search by locally-biased rectangle division on the
//! unit cube: trisect potentially-optimal boxes along their longest sides,
//! selecting at most one box per size class on the lower convex hull of
//! (size, best value).

/// Termination settings for the rectangle-division stage.
#[derive(Clone, Copy, Debug)]
pub struct DirectOptions {
    /// Stop once the best box diameter falls below this fraction of the cube
    /// diagonal.
    pub xtol_rel: f64,
    /// Stop once a sweep improves the best value by less than this fraction
    /// of its magnitude.
    pub ftol_rel: f64,
    pub max_evals: usize,
}

#[derive(Clone, Debug)]
struct Rect {
    center: Vec<f64>,
    /// Side lengths (powers of 1/3).
    sides: Vec<f64>,
    value: f64,
}

impl Rect {
    fn diameter(&self) -> f64 {
        self.sides.iter().map(|s| s * s).sum::<f64>().sqrt() * 0.5
    }
}

pub struct DirectResult {
    pub best_x: Vec<f64>,
    pub best_value: f64,
    pub evals: usize,
    pub budget_exhausted: bool,
}

const JONES_EPS: f64 = 1e-4;

/// Minimizes `f` over the unit cube `[0,1]^dim`.
pub fn direct_minimize(
    dim: usize,
    mut f: impl FnMut(&[f64]) -> f64,
    opts: &DirectOptions,
) -> DirectResult {
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let center = vec![0.5; dim];
    let v0 = eval(&center, &mut evals);
    let mut rects = vec![Rect { center, sides: vec![1.0; dim], value: v0 }];
    let mut best_value = v0;
    let mut best_x = rects[0].center.clone();
    let cube_diag = (dim as f64).sqrt() * 0.5;

    loop {
        // size classes: group by diameter, keep the best rect per class
        let mut classes: Vec<(f64, usize)> = Vec::new(); // (diameter, rect index)
        for (i, r) in rects.iter().enumerate() {
            let d = r.diameter();
            match classes.iter_mut().find(|(cd, _)| (*cd - d).abs() < 1e-13) {
                Some((_, idx)) => {
                    if r.value < rects[*idx].value {
                        *idx = i;
                    }
                }
                None => classes.push((d, i)),
            }
        }
        classes.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

        // lower convex hull over (diameter, value), largest diameters first
        let mut selected: Vec<usize> = Vec::new();
        {
            let pts: Vec<(f64, f64, usize)> = classes
                .iter()
                .map(|&(d, i)| (d, rects[i].value, i))
                .collect();
            let mut hull: Vec<(f64, f64, usize)> = Vec::new();
            for &p in &pts {
                while hull.len() >= 2 {
                    let a = hull[hull.len() - 2];
                    let b = hull[hull.len() - 1];
                    // keep the hull lower-convex in (d, f)
                    if (b.1 - a.1) * (p.0 - a.0) >= (p.1 - a.1) * (b.0 - a.0) {
                        hull.pop();
                    } else {
                        break;
                    }
                }
                hull.push(p);
            }
            for &(d, v, i) in &hull {
                // Jones epsilon test against the incumbent
                let thresh = best_value - JONES_EPS * best_value.abs().max(1e-12);
                let ok = if let Some(&(dn, vn, _)) = hull.iter().find(|h| h.0 > d) {
                    // value achievable by growing towards the next hull point
                    v - (vn - v) / (dn - d) * d <= thresh || v <= thresh
                } else {
                    true
                };
                if ok {
                    selected.push(i);
                }
            }
            if selected.is_empty() {
                selected.push(pts.last().unwrap().2);
            }
        }

        let prev_best = best_value;
        // divide each selected rectangle along its longest sides
        let mut new_rects: Vec<Rect> = Vec::new();
        for &ri in &selected {
            let rect = rects[ri].clone();
            let max_side = rect.sides.iter().cloned().fold(0.0, f64::max);
            let long_dims: Vec<usize> = (0..dim)
                .filter(|&k| rect.sides[k] > max_side * (1.0 - 1e-12))
                .collect();
            // sample c +- side/3 along each long dimension
            let delta = max_side / 3.0;
            let mut samples: Vec<(usize, f64, f64, Vec<f64>, Vec<f64>)> = Vec::new();
            for &k in &long_dims {
                let mut xp = rect.center.clone();
                xp[k] += delta;
                let mut xm = rect.center.clone();
                xm[k] -= delta;
                let vp = eval(&xp, &mut evals);
                let vm = eval(&xm, &mut evals);
                if vp < best_value {
                    best_value = vp;
                    best_x = xp.clone();
                }
                if vm < best_value {
                    best_value = vm;
                    best_x = xm.clone();
                }
                samples.push((k, vp, vm, xp, xm));
            }
            // divide dimensions in order of increasing best sample value
            samples.sort_by(|a, b| {
                a.1.min(a.2)
                    .partial_cmp(&b.1.min(b.2))
                    .unwrap()
                    .then(a.0.cmp(&b.0))
            });
            let mut host = rect;
            for (k, vp, vm, xp, xm) in samples {
                host.sides[k] /= 3.0;
                let mut left = Rect { center: xm, sides: host.sides.clone(), value: vm };
                let mut right = Rect { center: xp, sides: host.sides.clone(), value: vp };
                new_rects.push(std::mem::replace(&mut left, Rect {
                    center: vec![],
                    sides: vec![],
                    value: 0.0,
                }));
                new_rects.push(std::mem::replace(&mut right, Rect {
                    center: vec![],
                    sides: vec![],
                    value: 0.0,
                }));
            }
            rects[ri] = host;
        }
        rects.extend(new_rects);

        let best_diam = rects
            .iter()
            .map(|r| r.diameter())
            .fold(f64::INFINITY, f64::min);
        if evals >= opts.max_evals {
            return DirectResult { best_x, best_value, evals, budget_exhausted: true };
        }
        if best_diam / cube_diag < opts.xtol_rel {
            return DirectResult { best_x, best_value, evals, budget_exhausted: false };
        }
        let improvement = prev_best - best_value;
        if improvement <= opts.ftol_rel * best_value.abs().max(1e-300) {
            return DirectResult { best_x, best_value, evals, budget_exhausted: false };
        }
    }
}
