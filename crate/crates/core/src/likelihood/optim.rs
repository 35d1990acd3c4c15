//! Dense BFGS maximizer with a strong-Wolfe line search.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfgsOptions {
    /// Stop when `|f_k - f_{k-1}| / max(1, |f_k|)` falls below this ...
    pub rel_tol: f64,
    /// ... and the gradient max-norm falls below this (or no further gain is
    /// representable, see [`Optimum::precision_limited`]).
    pub grad_tol: f64,
    pub max_iter: usize,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            grad_tol: 1e-6,
            max_iter: 500,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Optimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Converged because no further gain is representable in `f64`, before the
    /// gradient reached `grad_tol`.
    pub precision_limited: bool,
    /// Objective value at every accepted iterate, starting point first.
    pub trace: Vec<f64>,
}

const C1: f64 = 1e-4;
const C2: f64 = 0.9;
const MAX_LINE_EVALS: usize = 40;
const NOISE_STEP_TRIES: usize = 12;
/// Predicted gains below this multiple of `eps * |f|` are rounding noise.
const PRECISION_LIMIT: f64 = 16.0 * f64::EPSILON;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

struct Point {
    x: Vec<f64>,
    /// Minimization objective, `-f`.
    phi: f64,
    /// Gradient of `phi`.
    grad: Vec<f64>,
}

struct Minimizer<F> {
    f: F,
}

impl<F> Minimizer<F>
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    fn eval(&mut self, x: Vec<f64>) -> Point {
        match (self.f)(&x) {
            Some((v, g)) if v.is_finite() && g.iter().all(|gi| gi.is_finite()) => Point {
                x,
                phi: -v,
                grad: g.into_iter().map(|gi| -gi).collect(),
            },
            _ => Point {
                x,
                phi: f64::INFINITY,
                grad: Vec::new(),
            },
        }
    }

    fn step(&mut self, from: &Point, dir: &[f64], t: f64) -> Point {
        let x = from.x.iter().zip(dir).map(|(xi, di)| xi + t * di).collect();
        self.eval(x)
    }

    /// Strong-Wolfe search along `dir` (Nocedal & Wright, Alg. 3.5/3.6).
    /// Falls back to the best Armijo point found; `None` if there is none.
    fn line_search(&mut self, start: &Point, dir: &[f64], t0: f64) -> Option<Point> {
        let d0 = dot(&start.grad, dir);
        let armijo = |t: f64, phi: f64| phi <= start.phi + C1 * t * d0;
        let mut lo_t = 0.0;
        let mut lo: Option<Point> = None;
        let mut prev_phi = start.phi;
        let mut t = t0;
        let mut evals = 0;

        let (mut a_lo, mut a_hi, mut p_lo) = loop {
            evals += 1;
            let p = self.step(start, dir, t);
            if !armijo(t, p.phi) || (evals > 1 && p.phi >= prev_phi) {
                break (lo_t, t, lo);
            }
            let d = dot(&p.grad, dir);
            if d.abs() <= -C2 * d0 {
                return Some(p);
            }
            if d >= 0.0 {
                let keep = t;
                break (keep, lo_t, Some(p));
            }
            prev_phi = p.phi;
            lo_t = t;
            lo = Some(p);
            t *= 2.0;
            if evals >= MAX_LINE_EVALS {
                return lo;
            }
        };

        while evals < MAX_LINE_EVALS {
            evals += 1;
            let t = 0.5 * (a_lo + a_hi);
            let p = self.step(start, dir, t);
            let lo_phi = p_lo.as_ref().map_or(start.phi, |q| q.phi);
            if !armijo(t, p.phi) || p.phi >= lo_phi {
                a_hi = t;
                continue;
            }
            let d = dot(&p.grad, dir);
            if d.abs() <= -C2 * d0 {
                return Some(p);
            }
            if d * (a_hi - a_lo) >= 0.0 {
                a_hi = a_lo;
            }
            a_lo = t;
            p_lo = Some(p);
        }
        p_lo
    }

    /// Near the optimum the predicted decrease falls below the rounding error
    /// of the objective and sufficient decrease cannot be verified. Gradients
    /// are still accurate there, so accept a backtracked step that does not
    /// increase the objective and shrinks the gradient.
    fn noise_level_step(&mut self, start: &Point, dir: &[f64]) -> Option<Point> {
        let g0 = max_abs(&start.grad);
        let mut t = 1.0;
        for _ in 0..NOISE_STEP_TRIES {
            let p = self.step(start, dir, t);
            if p.phi <= start.phi && !p.grad.is_empty() && max_abs(&p.grad) < g0 {
                return Some(p);
            }
            t *= 0.5;
        }
        None
    }
}

/// Maximizes `f`, which returns `(value, gradient)` or `None` outside its domain.
///
/// Every accepted step satisfies the Armijo condition, so the recorded trace
/// is nondecreasing.
pub fn maximize<F>(f: F, x0: Vec<f64>, opts: BfgsOptions) -> Optimum
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let n = x0.len();
    let mut m = Minimizer { f };
    let mut cur = m.eval(x0);
    if !cur.phi.is_finite() {
        return Optimum {
            x: cur.x,
            value: f64::NEG_INFINITY,
            gradient: vec![f64::NAN; n],
            iterations: 0,
            converged: false,
            precision_limited: false,
            trace: Vec::new(),
        };
    }
    let mut trace = vec![-cur.phi];
    let mut h = identity(n);
    let mut fresh = true;
    let mut converged = n == 0;
    let mut iterations = 0;
    let mut last_rel = f64::INFINITY;
    let mut precision_limited = false;

    while !converged && iterations < opts.max_iter {
        iterations += 1;
        let mut dir: Vec<f64> = (0..n).map(|i| -dot(&h[i], &cur.grad)).collect();
        if dot(&dir, &cur.grad) >= 0.0 {
            h = identity(n);
            fresh = true;
            dir = cur.grad.iter().map(|g| -g).collect();
        }
        let t0 = if fresh {
            (1.0 / max_abs(&cur.grad).max(1e-300)).min(1.0)
        } else {
            1.0
        };
        let next = match m
            .line_search(&cur, &dir, t0)
            .or_else(|| m.noise_level_step(&cur, &dir))
        {
            Some(p) => p,
            None if !fresh => {
                // No representable improvement along a quasi-Newton direction
                // whose predicted gain is itself below rounding: stop here.
                if last_rel < opts.rel_tol
                    && predicted_gain(&h, &cur.grad) <= PRECISION_LIMIT * cur.phi.abs().max(1.0)
                {
                    converged = true;
                    precision_limited = true;
                    break;
                }
                h = identity(n);
                fresh = true;
                continue;
            }
            None => break,
        };

        let s: Vec<f64> = next.x.iter().zip(&cur.x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next
            .grad
            .iter()
            .zip(&cur.grad)
            .map(|(a, b)| a - b)
            .collect();
        let sy = dot(&s, &y);
        let rel = (next.phi - cur.phi).abs() / next.phi.abs().max(1.0);
        last_rel = rel;
        cur = next;
        trace.push(-cur.phi);

        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if fresh {
                let scale = sy / dot(&y, &y);
                for (i, row) in h.iter_mut().enumerate() {
                    row.iter_mut().for_each(|v| *v = 0.0);
                    row[i] = scale;
                }
                fresh = false;
            }
            bfgs_update(&mut h, &s, &y, sy);
        }
        converged = rel < opts.rel_tol && max_abs(&cur.grad) < opts.grad_tol;
    }

    Optimum {
        value: -cur.phi,
        gradient: cur.grad.iter().map(|g| -g).collect(),
        x: cur.x,
        iterations,
        converged,
        precision_limited,
        trace,
    }
}

/// Quasi-Newton prediction of the remaining decrease, `g' H g / 2`.
fn predicted_gain(h: &[Vec<f64>], g: &[f64]) -> f64 {
    0.5 * h
        .iter()
        .zip(g)
        .map(|(row, gi)| gi * dot(row, g))
        .sum::<f64>()
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            let mut row = vec![0.0; n];
            row[i] = 1.0;
            row
        })
        .collect()
}

/// `H <- (I - rho s y') H (I - rho y s') + rho s s'`.
fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| dot(&h[i], y)).collect();
    let yhy = dot(y, &hy);
    let coef = rho * rho * yhy + rho;
    for i in 0..n {
        for j in 0..n {
            h[i][j] += coef * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> Option<(f64, Vec<f64>)> {
        let (a, b) = (x[0], x[1]);
        let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
        let g = vec![
            -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
            200.0 * (b - a * a),
        ];
        Some((-f, g.into_iter().map(|v| -v).collect()))
    }

    #[test]
    fn solves_rosenbrock() {
        let opt = maximize(
            rosenbrock,
            vec![-1.2, 1.0],
            BfgsOptions {
                rel_tol: 1e-14,
                grad_tol: 1e-8,
                max_iter: 500,
            },
        );
        assert!(opt.converged, "{opt:?}");
        assert!((opt.x[0] - 1.0).abs() < 1e-6 && (opt.x[1] - 1.0).abs() < 1e-6);
        assert!(opt.trace.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn quadratic_in_few_steps() {
        let f = |x: &[f64]| {
            let v = -(x[0] - 3.0).powi(2) - 4.0 * (x[1] + 1.0).powi(2) - x[0] * x[1];
            Some((
                v,
                vec![-2.0 * (x[0] - 3.0) - x[1], -8.0 * (x[1] + 1.0) - x[0]],
            ))
        };
        let opt = maximize(f, vec![0.0, 0.0], BfgsOptions::default());
        assert!(opt.converged);
        assert!(opt.iterations < 20);
    }

    #[test]
    fn respects_domain() {
        // log-barrier style objective undefined for x <= 0
        let f = |x: &[f64]| {
            if x[0] <= 0.0 {
                None
            } else {
                Some((x[0].ln() - x[0], vec![1.0 / x[0] - 1.0]))
            }
        };
        let opt = maximize(f, vec![5.0], BfgsOptions::default());
        assert!(opt.converged);
        assert!((opt.x[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn stops_at_iteration_cap() {
        let opt = maximize(
            rosenbrock,
            vec![-1.2, 1.0],
            BfgsOptions {
                max_iter: 3,
                ..BfgsOptions::default()
            },
        );
        assert!(!opt.converged);
        assert_eq!(opt.iterations, 3);
    }
}
