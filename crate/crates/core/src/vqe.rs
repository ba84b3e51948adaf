//! Variational minimisation and incremental hierarchy sweeps.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ansatz::ProductAnsatz;
use crate::error::{Error, Result};
use crate::hierarchy::PriorityList;
use crate::perturbation::{exact_ground, HamiltonianModel};
use crate::simulator::{self, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerOptions {
    /// Gradient-norm convergence threshold.
    pub tol: f64,
    pub max_iter: usize,
    /// Random restarts attempted when a run stalls before converging.
    pub restarts: usize,
    pub restart_scale: f64,
    pub seed: u64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            tol: 1e-9,
            max_iter: 2000,
            restarts: 3,
            restart_scale: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeResult {
    pub theta: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(x: &[f64], alpha: f64, p: &[f64]) -> Vec<f64> {
    x.iter().zip(p).map(|(a, b)| a + alpha * b).collect()
}

struct Point {
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
}

fn eval<F>(f: &mut F, x: Vec<f64>) -> Result<Point>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let (v, g) = f(&x)?;
    if !v.is_finite() || g.iter().any(|z| !z.is_finite()) {
        return Err(Error::NonFinite("objective"));
    }
    Ok(Point { x, f: v, g })
}

/// Strong-Wolfe line search: expansion until bracketed, then safeguarded quadratic zoom.
fn line_search<F>(f: &mut F, at: &Point, p: &[f64], evals: &mut usize) -> Result<Option<Point>>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    const C1: f64 = 1e-4;
    const C2: f64 = 0.9;
    let d0 = dot(&at.g, p);
    // Decreases below rounding noise still count as progress.
    let slack = 4.0 * f64::EPSILON * at.f.abs();
    let pn = norm(p);

    let (mut lo_a, mut lo_f, mut lo_d) = (0.0, at.f, d0);
    let mut lo: Option<Point> = None;
    let mut hi: Option<(f64, f64)> = None;
    let mut a = 1.0;
    for _ in 0..80 {
        *evals += 1;
        let trial = eval(f, axpy(&at.x, a, p))?;
        let d = dot(&trial.g, p);
        if trial.f > at.f + C1 * a * d0 + slack || (lo.is_some() && trial.f >= lo_f) {
            hi = Some((a, trial.f));
        } else {
            if d.abs() <= -C2 * d0 {
                return Ok(Some(trial));
            }
            if let Some((ha, _)) = hi {
                if d * (ha - a) >= 0.0 {
                    hi = Some((lo_a, lo_f));
                }
            } else if d >= 0.0 {
                hi = Some((lo_a, lo_f));
            }
            lo_a = a;
            lo_f = trial.f;
            lo_d = d;
            lo = Some(trial);
        }
        match hi {
            None => a *= 2.0,
            Some((ha, hf)) => {
                let delta = ha - lo_a;
                if delta.abs() * pn < 1e-16 * (1.0 + norm(&at.x)) {
                    break;
                }
                let curv = hf - lo_f - lo_d * delta;
                let q = if curv > 0.0 {
                    lo_a - lo_d * delta * delta / (2.0 * curv)
                } else {
                    f64::NAN
                };
                let (l, h) = (lo_a.min(ha), lo_a.max(ha));
                a = if q > l + 0.1 * (h - l) && q < h - 0.1 * (h - l) {
                    q
                } else {
                    0.5 * (l + h)
                };
            }
        }
    }
    Ok(lo.filter(|pt| pt.f < at.f || pt.f <= at.f + slack && norm(&pt.g) < norm(&at.g)))
}

fn bfgs<F>(f: &mut F, x0: Vec<f64>, opts: &OptimizerOptions, budget: usize) -> Result<(Point, usize, bool)>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let n = x0.len();
    let mut cur = eval(f, x0)?;
    let mut h = identity(n);
    let mut evals = 0;
    for it in 0..budget {
        if norm(&cur.g) <= opts.tol {
            return Ok((cur, it, true));
        }
        let mut p: Vec<f64> = (0..n).map(|i| -dot(&h[i * n..(i + 1) * n], &cur.g)).collect();
        if dot(&p, &cur.g) >= 0.0 {
            h = identity(n);
            p = cur.g.iter().map(|v| -v).collect();
        }
        let Some(next) = line_search(f, &cur, &p, &mut evals)? else {
            if h != identity(n) {
                h = identity(n);
                continue;
            }
            return Ok((cur, it, false));
        };
        let s: Vec<f64> = next.x.iter().zip(&cur.x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next.g.iter().zip(&cur.g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            if it == 0 {
                let scale = sy / dot(&y, &y);
                h.iter_mut().for_each(|v| *v *= scale);
            }
            let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], &y)).collect();
            let yhy = dot(&y, &hy);
            let rho = 1.0 / sy;
            for i in 0..n {
                for j in 0..n {
                    h[i * n + j] += rho * rho * (sy + yhy) * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
        }
        cur = next;
    }
    let ok = norm(&cur.g) <= opts.tol;
    Ok((cur, budget, ok))
}

fn identity(n: usize) -> Vec<f64> {
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        h[i * n + i] = 1.0;
    }
    h
}

/// Quasi-Newton minimisation of a smooth objective given value and gradient.
///
/// Returns the best point seen; when a run stops short of `tol`, up to
/// `opts.restarts` perturbed restarts are tried from the best point.
pub fn minimize<F>(mut f: F, x0: &[f64], opts: &OptimizerOptions) -> Result<OptimizeResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("initial parameters"));
    }
    let (mut best, mut iterations, mut converged) = bfgs(&mut f, x0.to_vec(), opts, opts.max_iter)?;
    if x0.is_empty() {
        converged = true;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut tries = 0;
    while !converged && tries < opts.restarts && iterations < opts.max_iter {
        tries += 1;
        let x: Vec<f64> = best
            .x
            .iter()
            .map(|v| v + opts.restart_scale * rng.random_range(-1.0..1.0))
            .collect();
        let (pt, it, ok) = bfgs(&mut f, x, opts, opts.max_iter - iterations)?;
        iterations += it;
        if pt.f < best.f || ok && pt.f <= best.f {
            converged = ok;
            best = pt;
        }
    }
    Ok(OptimizeResult {
        grad_norm: norm(&best.g),
        theta: best.x,
        value: best.f,
        iterations,
        converged,
    })
}

/// Minimises `E(θ)` for `a` on `model`, starting at `theta0`.
pub fn optimize(
    a: &ProductAnsatz,
    model: &HamiltonianModel,
    theta0: &[f64],
    opts: &OptimizerOptions,
) -> Result<OptimizeResult> {
    if theta0.len() != a.num_params() {
        return Err(Error::DimensionMismatch {
            expected: a.num_params(),
            found: theta0.len(),
        });
    }
    minimize(|x| simulator::energy_and_gradient(a, x, model), theta0, opts)
}

/// Like [`optimize`], but a run that ends no lower than `reference` (a stalled
/// warm start) is retried from `opts.restarts` random perturbations of its end point.
fn optimize_with_restarts(
    a: &ProductAnsatz,
    model: &HamiltonianModel,
    theta0: &[f64],
    reference: f64,
    opts: &OptimizerOptions,
) -> Result<OptimizeResult> {
    let mut best = optimize(a, model, theta0, opts)?;
    if best.value < reference - opts.tol * reference.abs() {
        return Ok(best);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x9e37_79b9_7f4a_7c15);
    for _ in 0..opts.restarts {
        let x: Vec<f64> = best
            .theta
            .iter()
            .map(|v| v + opts.restart_scale * rng.random_range(-1.0..1.0))
            .collect();
        let r = optimize(a, model, &x, opts)?;
        if r.value < best.value {
            let iterations = best.iterations + r.iterations;
            best = OptimizeResult { iterations, ..r };
        } else {
            best.iterations += r.iterations;
        }
    }
    Ok(best)
}

/// Maximises `|⟨target|ψ(θ)⟩|²` from `attempts` random starts; returns the best fidelity.
pub fn maximize_fidelity(
    a: &ProductAnsatz,
    target: &StateVector,
    attempts: usize,
    opts: &OptimizerOptions,
) -> Result<(Vec<f64>, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for _ in 0..attempts.max(1) {
        let x0: Vec<f64> = (0..a.num_params())
            .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
            .collect();
        let r = minimize(
            |x| {
                let (ov, d) = simulator::overlap_gradient(a, x, target)?;
                let g = d.iter().map(|z| -2.0 * (ov.conj() * z).re).collect();
                Ok((1.0 - ov.norm_sqr(), g))
            },
            &x0,
            opts,
        )?;
        let fid = 1.0 - r.value;
        if best.as_ref().is_none_or(|b| fid > b.1) {
            best = Some((r.theta, fid));
        }
        if fid >= 1.0 - opts.tol {
            break;
        }
    }
    Ok(best.expect("at least one attempt"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n_params: usize,
    pub energy: f64,
    pub epsilon: f64,
    pub theta_star: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub tag: String,
    pub e0: f64,
    pub rows: Vec<SweepRow>,
    /// Set when an optimizer error cut the sweep short; rows hold the partial result.
    pub aborted: Option<String>,
}

impl SweepResult {
    pub fn last(&self) -> Option<&SweepRow> {
        self.rows.last()
    }

    pub fn epsilon_at(&self, n_params: usize) -> Option<f64> {
        self.rows.iter().find(|r| r.n_params == n_params).map(|r| r.epsilon)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("n_params,energy,epsilon,iterations\n");
        for r in &self.rows {
            s.push_str(&format!("{},{:e},{:e},{}\n", r.n_params, r.energy, r.epsilon, r.iterations));
        }
        s
    }

    /// Sidecar with the optimal parameters of every row.
    pub fn theta_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Sidecar<'a> {
            tag: &'a str,
            e0: f64,
            theta_star: Vec<&'a [f64]>,
        }
        Ok(serde_json::to_string_pretty(&Sidecar {
            tag: &self.tag,
            e0: self.e0,
            theta_star: self.rows.iter().map(|r| r.theta_star.as_slice()).collect(),
        })?)
    }
}

/// `(E − E₀)/E₀`, written so it is non-negative when `E ≥ E₀` and `E₀ < 0`.
pub fn relative_error(e: f64, e0: f64) -> f64 {
    (e - e0) / e0.abs()
}

/// Grows the ansatz one unit at a time along `list`, warm-starting each optimisation.
pub fn hierarchy_sweep(
    model: &HamiltonianModel,
    list: &PriorityList,
    n_p_max: usize,
    opts: &OptimizerOptions,
) -> Result<SweepResult> {
    let (e0, _) = exact_ground(model)?;
    let n = model.n_qubits();
    let mut result = SweepResult {
        tag: list.tag(),
        e0,
        rows: Vec::with_capacity(n_p_max + 1),
        aborted: None,
    };
    // Fail early on an exhausted list rather than midway.
    list.take(n_p_max)?;
    let base = list.ansatz(n, 0)?;
    let e_start = simulator::ansatz_energy(&base, &[], model)?;
    result.rows.push(SweepRow {
        n_params: 0,
        energy: e_start,
        epsilon: relative_error(e_start, e0),
        theta_star: vec![],
        iterations: 0,
        converged: true,
    });
    let mut theta: Vec<f64> = Vec::new();
    for np in 1..=n_p_max {
        let a = list.ansatz(n, np)?;
        theta.push(0.0);
        let step_opts = OptimizerOptions {
            seed: opts.seed.wrapping_add(np as u64),
            ..*opts
        };
        let prev = result.rows.last().map_or(e_start, |r| r.energy);
        match optimize_with_restarts(&a, model, &theta, prev, &step_opts) {
            Ok(r) => {
                theta.clone_from(&r.theta);
                result.rows.push(SweepRow {
                    n_params: np,
                    energy: r.value,
                    epsilon: relative_error(r.value, e0),
                    theta_star: r.theta,
                    iterations: r.iterations,
                    converged: r.converged,
                });
            }
            Err(e) => {
                result.aborted = Some(e.to_string());
                break;
            }
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::BasisState;

    #[test]
    fn rosenbrock() {
        let r = minimize(
            |x| {
                let (a, b) = (x[0], x[1]);
                Ok((
                    (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2),
                    vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)],
                ))
            },
            &[-1.2, 1.0],
            &OptimizerOptions::default(),
        )
        .unwrap();
        assert!(r.converged);
        assert!((r.theta[0] - 1.0).abs() < 1e-8 && (r.theta[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn empty_ansatz() {
        let m = HamiltonianModel::tfim(3, 1.0, 0.3).unwrap();
        let a = ProductAnsatz::new(BasisState::zero(3), vec![], 0).unwrap();
        let r = optimize(&a, &m, &[], &OptimizerOptions::default()).unwrap();
        assert!((r.value + 3.0).abs() < 1e-15);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn relative_error_sign() {
        assert!(relative_error(-0.9, -1.0) > 0.0);
        assert!((relative_error(-0.9, -1.0) - 0.1).abs() < 1e-15);
    }
}
