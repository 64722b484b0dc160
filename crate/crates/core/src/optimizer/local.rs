//! Derivative-free and finite-difference local minimizers.

use serde::{Deserialize, Serialize};

/// Local search used after each random start.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LocalSearch {
    #[default]
    NelderMead,
    /// Quasi-Newton with central finite-difference gradients.
    Bfgs,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Stop when the simplex (or the last step) is this small in every coordinate.
    pub x: f64,
    /// Stop when objective values agree to this level.
    pub f: f64,
    pub max_evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

pub fn minimize(
    method: LocalSearch,
    f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    initial_step: f64,
    tol: Tolerances,
) -> LocalOutcome {
    match method {
        LocalSearch::NelderMead => nelder_mead(f, x0, initial_step, tol),
        LocalSearch::Bfgs => bfgs(f, x0, tol),
    }
}

/// Nelder-Mead with dimension-adapted coefficients (Gao & Han).
pub fn nelder_mead(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    initial_step: f64,
    tol: Tolerances,
) -> LocalOutcome {
    let n = x0.len();
    let mut evaluations = 0usize;
    let mut eval = |x: &[f64], count: &mut usize| {
        *count += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    if n == 0 {
        let value = eval(x0, &mut evaluations);
        return LocalOutcome {
            x: Vec::new(),
            value,
            evaluations,
        };
    }

    let nf = n as f64;
    let alpha = 1.0;
    let beta = 1.0 + 2.0 / nf;
    let gamma = 0.75 - 1.0 / (2.0 * nf);
    let delta = 1.0 - 1.0 / nf;

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += if v[i] >= 0.0 { initial_step } else { -initial_step };
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| eval(x, &mut evaluations)).collect();

    let mut order: Vec<usize> = (0..=n).collect();
    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut trial2 = vec![0.0; n];

    loop {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let best = order[0];
        let worst = order[n];
        let second = order[n - 1];

        let f_spread = order[1..]
            .iter()
            .map(|&k| (values[k] - values[best]).abs())
            .fold(0.0, f64::max);
        let x_spread = order[1..]
            .iter()
            .flat_map(|&k| simplex[k].iter().zip(&simplex[best]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if (f_spread <= tol.f && x_spread <= tol.x) || evaluations >= tol.max_evaluations {
            break;
        }

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for &k in &order[..n] {
            for (c, v) in centroid.iter_mut().zip(&simplex[k]) {
                *c += v / nf;
            }
        }

        let along = |coef: f64, out: &mut Vec<f64>, worst_x: &[f64]| {
            for ((o, c), w) in out.iter_mut().zip(&centroid).zip(worst_x) {
                *o = c + coef * (c - w);
            }
        };

        along(alpha, &mut trial, &simplex[worst]);
        let f_reflect = eval(&trial, &mut evaluations);

        if f_reflect < values[best] {
            along(beta, &mut trial2, &simplex[worst]);
            let f_expand = eval(&trial2, &mut evaluations);
            if f_expand < f_reflect {
                simplex[worst].copy_from_slice(&trial2);
                values[worst] = f_expand;
            } else {
                simplex[worst].copy_from_slice(&trial);
                values[worst] = f_reflect;
            }
            continue;
        }
        if f_reflect < values[second] {
            simplex[worst].copy_from_slice(&trial);
            values[worst] = f_reflect;
            continue;
        }
        let (coef, reference) = if f_reflect < values[worst] {
            (gamma, f_reflect)
        } else {
            (-gamma, values[worst])
        };
        along(coef, &mut trial2, &simplex[worst]);
        let f_contract = eval(&trial2, &mut evaluations);
        if f_contract <= reference {
            simplex[worst].copy_from_slice(&trial2);
            values[worst] = f_contract;
            continue;
        }
        // shrink towards the best vertex
        let best_x = simplex[best].clone();
        for &k in &order[1..] {
            for (v, b) in simplex[k].iter_mut().zip(&best_x) {
                *v = b + delta * (*v - b);
            }
            values[k] = eval(&simplex[k], &mut evaluations);
        }
    }

    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .expect("nonempty simplex");
    LocalOutcome {
        x: simplex[best].clone(),
        value: values[best],
        evaluations,
    }
}

fn gradient(f: &mut impl FnMut(&[f64]) -> f64, x: &[f64], evaluations: &mut usize) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = 1e-6 * x[i].abs().max(1.0);
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            *evaluations += 2;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// BFGS with backtracking line search and finite-difference gradients.
pub fn bfgs(mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], tol: Tolerances) -> LocalOutcome {
    let n = x0.len();
    let mut evaluations = 1usize;
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    if n == 0 {
        return LocalOutcome {
            x,
            value: fx,
            evaluations,
        };
    }
    let mut g = gradient(&mut f, &x, &mut evaluations);
    let mut hinv = vec![vec![0.0; n]; n];
    for (i, row) in hinv.iter_mut().enumerate() {
        row[i] = 1.0;
    }

    while evaluations < tol.max_evaluations {
        let gnorm = g.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if gnorm <= 1e-12 {
            break;
        }
        let mut dir: Vec<f64> = hinv
            .iter()
            .map(|row| -row.iter().zip(&g).map(|(h, gi)| h * gi).sum::<f64>())
            .collect();
        let mut slope: f64 = dir.iter().zip(&g).map(|(d, gi)| d * gi).sum();
        if slope >= 0.0 {
            // lost positive definiteness; fall back to steepest descent
            for (row_i, row) in hinv.iter_mut().enumerate() {
                row.iter_mut().enumerate().for_each(|(j, v)| *v = if j == row_i { 1.0 } else { 0.0 });
            }
            dir = g.iter().map(|v| -v).collect();
            slope = -g.iter().map(|v| v * v).sum::<f64>();
        }

        let mut step = 1.0;
        let mut x_new = vec![0.0; n];
        let mut f_new;
        loop {
            for ((xn, xi), d) in x_new.iter_mut().zip(&x).zip(&dir) {
                *xn = xi + step * d;
            }
            f_new = f(&x_new);
            evaluations += 1;
            if f_new <= fx + 1e-4 * step * slope || step < 1e-12 {
                break;
            }
            step *= 0.5;
        }
        if !(f_new <= fx) {
            break;
        }
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let df = fx - f_new;
        x = x_new;
        fx = f_new;
        let step_size = s.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if step_size <= tol.x || df <= tol.f {
            break;
        }
        let g_new = gradient(&mut f, &x, &mut evaluations);
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        g = g_new;
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        if sy > 1e-300 {
            let hy: Vec<f64> = hinv.iter().map(|row| row.iter().zip(&y).map(|(h, v)| h * v).sum()).collect();
            let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
            let rho = 1.0 / sy;
            for i in 0..n {
                for j in 0..n {
                    hinv[i][j] += rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
                }
            }
        }
    }
    LocalOutcome {
        x,
        value: fx,
        evaluations,
    }
}
