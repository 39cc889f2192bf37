//! Classical optimizers for the variational loops: BFGS with a strong-Wolfe
//! line search (analytic gradients) and a derivative-free Nelder-Mead.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    QuasiNewton,
    NelderMead,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub method: Method,
    /// Hartree.
    pub energy_tol: f64,
    /// Hartree per radian.
    pub grad_tol: f64,
    pub max_evals: usize,
    /// Random-perturbation restarts allowed after a stalled run.
    pub restart_count: usize,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            method: Method::QuasiNewton,
            energy_tol: 1e-10,
            grad_tol: 1e-8,
            max_evals: 20_000,
            restart_count: 3,
            seed: 7,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> crate::Result<()> {
        if !(self.energy_tol > 0.0 && self.grad_tol > 0.0) {
            return Err(crate::Error::InvalidArgument("optimizer tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad: Vec<f64>,
    pub evals: usize,
    pub iterations: usize,
    pub converged: bool,
}

impl Optimum {
    pub fn grad_norm(&self) -> f64 {
        norm(&self.grad)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Objective wrapper that counts evaluations and keeps the best point seen.
struct Tracked<F> {
    f: F,
    evals: usize,
    max_evals: usize,
    best: Option<(Vec<f64>, f64, Vec<f64>)>,
}

impl<F: FnMut(&[f64]) -> (f64, Vec<f64>)> Tracked<F> {
    fn eval(&mut self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        if self.evals >= self.max_evals {
            return None;
        }
        self.evals += 1;
        let (fx, g) = (self.f)(x);
        if self.best.as_ref().is_none_or(|(_, fb, _)| fx < *fb) {
            self.best = Some((x.to_vec(), fx, g.clone()));
        }
        Some((fx, g))
    }
}

/// Minimizes `f`, which returns the value and its gradient.
pub fn minimize<F>(f: F, x0: &[f64], cfg: &OptimizerConfig) -> Optimum
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let mut t = Tracked {
        f,
        evals: 0,
        max_evals: cfg.max_evals.max(1),
        best: None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut start = x0.to_vec();
    let mut total_iterations = 0;
    let mut result = None;
    for attempt in 0..=cfg.restart_count {
        let run = match cfg.method {
            Method::QuasiNewton => bfgs(&mut t, &start, cfg),
            Method::NelderMead => nelder_mead(&mut t, &start, cfg),
        };
        total_iterations += run.iterations;
        let stalled = !run.converged && t.evals < t.max_evals;
        let better = result.as_ref().is_none_or(|r: &Optimum| run.f < r.f || run.converged);
        if better {
            result = Some(run);
        }
        if !stalled || attempt == cfg.restart_count || start.is_empty() {
            break;
        }
        let (bx, _, _) = t.best.clone().expect("evaluated at least once");
        start = bx.iter().map(|v| v + rng.gen_range(-0.05..0.05)).collect();
        log::debug!("optimizer stalled; restart {} from a perturbed point", attempt + 1);
    }
    let mut out = result.expect("at least one attempt");
    // the best point seen may come from a line-search probe
    if let Some((bx, bf, bg)) = t.best.take() {
        if bf < out.f {
            out.x = bx;
            out.f = bf;
            out.grad = bg;
            out.converged = out.converged || norm(&out.grad) < cfg.grad_tol;
        }
    }
    out.evals = t.evals;
    out.iterations = total_iterations;
    out
}

const C1: f64 = 1e-4;
const C2: f64 = 0.9;

fn noise_floor(f: f64) -> f64 {
    1e-14 * f.abs().max(1.0)
}

fn bfgs<F: FnMut(&[f64]) -> (f64, Vec<f64>)>(t: &mut Tracked<F>, x0: &[f64], cfg: &OptimizerConfig) -> Optimum {
    let n = x0.len();
    let mut x = x0.to_vec();
    let Some((mut fx, mut g)) = t.eval(&x) else {
        return Optimum {
            x,
            f: f64::INFINITY,
            grad: vec![0.0; n],
            evals: 0,
            iterations: 0,
            converged: false,
        };
    };
    let done = |fx: f64, g: Vec<f64>, x: Vec<f64>, iterations: usize, converged: bool| Optimum {
        x,
        f: fx,
        grad: g,
        evals: 0,
        iterations,
        converged,
    };
    if n == 0 || norm(&g) < cfg.grad_tol {
        return done(fx, g, x, 0, true);
    }
    let mut hinv = vec![0.0; n * n];
    let reset = |h: &mut Vec<f64>| {
        h.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            h[i * n + i] = 1.0;
        }
    };
    reset(&mut hinv);
    let mut fresh = true;
    let mut iterations = 0;
    loop {
        iterations += 1;
        let mut p: Vec<f64> = (0..n).map(|i| -dot(&hinv[i * n..(i + 1) * n], &g)).collect();
        if dot(&p, &g) >= 0.0 {
            reset(&mut hinv);
            fresh = true;
            p = g.iter().map(|v| -v).collect();
        }
        let pmax = p.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let alpha0 = if pmax > 1.0 { 1.0 / pmax } else { 1.0 };
        let step = line_search(t, &x, fx, &g, &p, alpha0);
        let Some((alpha, f_new, g_new)) = step else {
            if !fresh {
                reset(&mut hinv);
                fresh = true;
                continue;
            }
            let gn = norm(&g);
            return done(fx, g, x, iterations, gn < cfg.grad_tol);
        };
        let s: Vec<f64> = p.iter().map(|v| alpha * v).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        for (xi, si) in x.iter_mut().zip(&s) {
            *xi += si;
        }
        let df = (fx - f_new).abs();
        fx = f_new;
        g = g_new;
        let gn = norm(&g);
        if gn < cfg.grad_tol && df < cfg.energy_tol {
            return done(fx, g, x, iterations, true);
        }
        if t.evals >= t.max_evals {
            return done(fx, g, x, iterations, false);
        }
        let sy = dot(&s, &y);
        if sy > 1e-14 * norm(&s) * norm(&y) && sy > 0.0 {
            if fresh {
                let scale = sy / dot(&y, &y);
                hinv.iter_mut().for_each(|v| *v *= scale);
                fresh = false;
            }
            let hy: Vec<f64> = (0..n).map(|i| dot(&hinv[i * n..(i + 1) * n], &y)).collect();
            let yhy = dot(&y, &hy);
            let a = (sy + yhy) / (sy * sy);
            for i in 0..n {
                for j in 0..n {
                    hinv[i * n + j] += a * s[i] * s[j] - (hy[i] * s[j] + s[i] * hy[j]) / sy;
                }
            }
        }
    }
}

/// Strong-Wolfe line search; returns `(alpha, f, g)` or `None` when no
/// acceptable decrease was found.
fn line_search<F: FnMut(&[f64]) -> (f64, Vec<f64>)>(
    t: &mut Tracked<F>,
    x: &[f64],
    f0: f64,
    g0: &[f64],
    p: &[f64],
    alpha0: f64,
) -> Option<(f64, f64, Vec<f64>)> {
    let d0 = dot(g0, p);
    let noise = noise_floor(f0);
    let at = |a: f64| -> Vec<f64> { x.iter().zip(p).map(|(xi, pi)| xi + a * pi).collect() };
    let mut prev = (0.0, f0, d0, g0.to_vec());
    let mut a = alpha0;
    for i in 0..25 {
        let (fa, ga) = t.eval(&at(a))?;
        let da = dot(&ga, p);
        if fa > f0 + C1 * a * d0 + noise || (i > 0 && fa >= prev.1) {
            return zoom(t, x, p, f0, d0, prev, (a, fa, da, ga));
        }
        if da.abs() <= -C2 * d0 {
            return Some((a, fa, ga));
        }
        if da >= 0.0 {
            return zoom(t, x, p, f0, d0, (a, fa, da, ga), prev);
        }
        prev = (a, fa, da, ga);
        a *= 2.0;
    }
    let (a, fa, _, ga) = prev;
    (a > 0.0).then_some((a, fa, ga))
}

type Probe = (f64, f64, f64, Vec<f64>);

#[allow(clippy::too_many_arguments)]
fn zoom<F: FnMut(&[f64]) -> (f64, Vec<f64>)>(
    t: &mut Tracked<F>,
    x: &[f64],
    p: &[f64],
    f0: f64,
    d0: f64,
    mut lo: Probe,
    mut hi: Probe,
) -> Option<(f64, f64, Vec<f64>)> {
    let noise = noise_floor(f0);
    for _ in 0..40 {
        let (a_lo, a_hi) = (lo.0, hi.0);
        if (a_hi - a_lo).abs() < 1e-18 * a_lo.abs().max(1e-12) {
            break;
        }
        let mut a = cubic_min(lo.0, lo.1, lo.2, hi.0, hi.1, hi.2);
        let (left, right) = if a_lo < a_hi { (a_lo, a_hi) } else { (a_hi, a_lo) };
        let margin = 0.1 * (right - left);
        if !a.is_finite() || a < left + margin || a > right - margin {
            a = 0.5 * (left + right);
        }
        let xa: Vec<f64> = x.iter().zip(p).map(|(xi, pi)| xi + a * pi).collect();
        let (fa, ga) = t.eval(&xa)?;
        let da = dot(&ga, p);
        if fa > f0 + C1 * a * d0 + noise || fa >= lo.1 {
            hi = (a, fa, da, ga);
        } else {
            if da.abs() <= -C2 * d0 {
                return Some((a, fa, ga));
            }
            if da * (hi.0 - lo.0) >= 0.0 {
                hi = lo.clone();
            }
            lo = (a, fa, da, ga);
        }
    }
    (lo.0 > 0.0 && lo.1 <= f0 + noise).then_some((lo.0, lo.1, lo.3))
}

/// Minimizer of the cubic interpolating values and slopes at two points.
fn cubic_min(a: f64, fa: f64, da: f64, b: f64, fb: f64, db: f64) -> f64 {
    let d1 = da + db - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    if disc < 0.0 {
        return f64::NAN;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2)
}

fn nelder_mead<F: FnMut(&[f64]) -> (f64, Vec<f64>)>(t: &mut Tracked<F>, x0: &[f64], cfg: &OptimizerConfig) -> Optimum {
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let Some((f0, _)) = t.eval(x0) else {
        return Optimum {
            x: x0.to_vec(),
            f: f64::INFINITY,
            grad: vec![0.0; n],
            evals: 0,
            iterations: 0,
            converged: false,
        };
    };
    simplex.push((x0.to_vec(), f0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += 0.1;
        match t.eval(&x) {
            Some((fx, _)) => simplex.push((x, fx)),
            None => break,
        }
    }
    let mut iterations = 0;
    let mut converged = n == 0;
    while simplex.len() == n + 1 && n > 0 {
        iterations += 1;
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        let size = simplex[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread < cfg.energy_tol && size < 1e-6 {
            converged = true;
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64)
            .collect();
        let towards = |coef: f64, worst: &[f64]| -> Vec<f64> {
            centroid.iter().zip(worst).map(|(c, w)| c + coef * (w - c)).collect()
        };
        let worst = simplex[n].0.clone();
        let xr = towards(-1.0, &worst);
        let Some((fr, _)) = t.eval(&xr) else { break };
        if fr < simplex[0].1 {
            let xe = towards(-2.0, &worst);
            let Some((fe, _)) = t.eval(&xe) else { break };
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = towards(-0.5, &worst);
                let Some((fc, _)) = t.eval(&xc) else { break };
                (xc, fc)
            } else {
                let xc = towards(0.5, &worst);
                let Some((fc, _)) = t.eval(&xc) else { break };
                (xc, fc)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for k in 1..=n {
                    let xs: Vec<f64> = best.iter().zip(&simplex[k].0).map(|(b, x)| b + 0.5 * (x - b)).collect();
                    let Some((fs, _)) = t.eval(&xs) else { break };
                    simplex[k] = (xs, fs);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, _) = simplex[0].clone();
    let (f, grad) = match t.eval(&x) {
        Some(v) => v,
        None => (simplex[0].1, vec![f64::NAN; n]),
    };
    Optimum {
        x,
        f,
        grad,
        evals: 0,
        iterations,
        converged,
    }
}
