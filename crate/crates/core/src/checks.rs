//! Property checks behind the `verify` subcommand.

use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::ansatz::build_qca;
use crate::error::{Error, Result};
use crate::hierarchy::estimate_thetas;
use crate::pauli::{MultiIndex, Pauli, PauliString};
use crate::perturbation::{series_residual, Coupling, HamiltonianModel, PerturbationSeries};
use crate::simulator::{self, StateVector};
use crate::vqe::{maximize_fidelity, OptimizerOptions};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    /// Human-readable acceptance rule, e.g. `>= 9` or `<= 1e-10`.
    pub rule: String,
    pub pass: bool,
}

impl Check {
    fn at_most(name: &'static str, value: f64, tol: f64) -> Self {
        Check {
            name,
            value,
            rule: format!("<= {tol:e}"),
            pass: value <= tol,
        }
    }

    fn at_least(name: &'static str, value: f64, bound: f64) -> Self {
        Check {
            name,
            value,
            rule: format!(">= {bound}"),
            pass: value >= bound,
        }
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Slope of the truncated-series residual against the coupling strength, with
/// couplings rescaled so that the largest has magnitude `J ∈ [lo, hi]`.
pub fn residual_slope(model: &HamiltonianModel, max_order: u32, lo: f64, hi: f64, points: usize) -> Result<f64> {
    let jmax = model.j_values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if jmax == 0.0 {
        return Err(Error::Model("model has no nonzero coupling".into()));
    }
    let unit = model.scaled(1.0 / jmax);
    let xs: Vec<f64> = (0..points)
        .map(|i| lo * (hi / lo).powf(i as f64 / (points - 1) as f64))
        .collect();
    let ys = xs
        .iter()
        .map(|&x| series_residual(&unit, max_order, x))
        .collect::<Result<Vec<f64>>>()?;
    Ok(loglog_slope(&xs, &ys))
}

fn random_block(rng: &mut ChaCha8Rng, n: usize, offset: usize, total: usize) -> Result<(Vec<f64>, Vec<Coupling>)> {
    let paulis = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    let h = (0..n)
        .map(|_| {
            let m = rng.random_range(0.5..1.5);
            if rng.random::<bool>() {
                m
            } else {
                -m
            }
        })
        .collect();
    let mut couplings = Vec::new();
    let count = rng.random_range(1..=3);
    while couplings.len() < count {
        let factors: Vec<(usize, Pauli)> = (0..n)
            .map(|q| (offset + q, paulis[rng.random_range(0..4)]))
            .collect();
        let p = PauliString::from_factors(total, &factors)?;
        if p.x_mask() == 0 {
            continue;
        }
        couplings.push(Coupling {
            j: rng.random_range(-0.3..0.3),
            pauli: p,
        });
    }
    Ok((h, couplings))
}

/// Random model made of two non-interacting blocks; returns it with the coupling
/// count of the lower block.
pub fn random_two_block(rng: &mut ChaCha8Rng, max_qubits: usize) -> Result<(HamiltonianModel, usize)> {
    let n = rng.random_range(2..=max_qubits);
    let na = rng.random_range(1..n);
    let (mut h, mut couplings) = random_block(rng, na, 0, n)?;
    let split = couplings.len();
    let (hb, cb) = random_block(rng, n - na, na, n)?;
    h.extend(hb);
    couplings.extend(cb);
    Ok((HamiltonianModel::new(h, couplings)?, split))
}

fn random_index(rng: &mut ChaCha8Rng, len: usize, range: std::ops::Range<usize>, max: u32) -> MultiIndex {
    let mut k = vec![0u32; len];
    let order = rng.random_range(1..=max);
    for _ in 0..order {
        k[rng.random_range(range.clone())] += 1;
    }
    MultiIndex::new(k)
}

/// Largest `|C_{kA+kB} − C_{kA}·C_{kB}|` over `count` random two-block models.
pub fn factorization_error(seed: u64, count: usize, max_qubits: usize, max_block_order: u32) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..count {
        let (model, split) = random_two_block(&mut rng, max_qubits)?;
        let nc = model.n_couplings();
        let ka = random_index(&mut rng, nc, 0..split, max_block_order);
        let kb = random_index(&mut rng, nc, split..nc, max_block_order);
        let mut series = PerturbationSeries::new(&model);
        let joint = series.normalized_c(&ka.add(&kb))?;
        let product = series.normalized_c(&ka)? * series.normalized_c(&kb)?;
        worst = worst.max((joint - product).abs());
    }
    Ok(worst)
}

/// Compares θ̃ estimates of `model` with those of two disjoint copies of it.
///
/// Returns the largest per-copy deviation, counting any cross-copy slot or
/// nonzero disconnected term as a deviation of its own size.
pub fn duplication_error(model: &HamiltonianModel, max_order: u32) -> Result<f64> {
    let n = model.n_qubits();
    let single = estimate_thetas(model, &build_qca(n)?, max_order)?;
    let dup = model.direct_sum(model)?;
    let double = estimate_thetas(&dup, &build_qca(2 * n)?, max_order)?;
    let low_mask = (1u64 << n) - 1;
    let mut worst = 0.0f64;
    let mut matched = 0;
    for e in &double.estimates {
        let bits = e.slot.s.bits();
        let (lo, hi) = (bits & low_mask, bits >> n);
        let local = match (lo, hi) {
            (l, 0) => l,
            (0, h) => h,
            _ => {
                worst = worst.max(e.theta_tilde.abs().max(1.0));
                continue;
            }
        };
        match single
            .estimates
            .iter()
            .find(|s| s.slot.s.bits() == local && s.slot.a == e.slot.a)
        {
            Some(s) => {
                matched += 1;
                worst = worst.max((s.theta_tilde - e.theta_tilde).abs());
            }
            None => worst = worst.max(e.theta_tilde.abs().max(1.0)),
        }
    }
    if matched != 2 * single.estimates.len() {
        worst = worst.max(1.0);
    }
    for (_, r) in &double.disconnected {
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

/// Haar-random pure state.
pub fn haar_state(rng: &mut ChaCha8Rng, n: usize) -> Result<StateVector> {
    let gauss = |rng: &mut ChaCha8Rng| {
        let u1: f64 = 1.0 - rng.random::<f64>();
        let u2: f64 = rng.random();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    };
    let mut amps: Vec<Complex64> = (0..1usize << n)
        .map(|_| Complex64::new(gauss(rng), gauss(rng)))
        .collect();
    let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|z| *z /= norm);
    StateVector::from_amplitudes(amps)
}

/// Smallest best-found fidelity of the QCA against `targets` Haar-random states.
pub fn spanning_fidelity(n: usize, targets: usize, seed: u64) -> Result<f64> {
    let a = build_qca(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let opts = OptimizerOptions {
        tol: 1e-10,
        seed,
        ..OptimizerOptions::default()
    };
    let mut worst = 1.0f64;
    for _ in 0..targets {
        let t = haar_state(&mut rng, n)?;
        let (_, f) = maximize_fidelity(&a, &t, 20, &opts)?;
        worst = worst.min(f);
    }
    Ok(worst)
}

/// Largest deviation between parameter-shift, adjoint and central-difference gradients
/// of the QCA energy at random parameters.
pub fn gradient_error(model: &HamiltonianModel, seed: u64, step: f64) -> Result<f64> {
    let a = build_qca(model.n_qubits())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let theta: Vec<f64> = (0..a.num_params()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let shift = simulator::gradient(&a, &theta, model)?;
    let (_, adjoint) = simulator::energy_and_gradient(&a, &theta, model)?;
    let mut worst = 0.0f64;
    for i in 0..theta.len() {
        let mut tp = theta.clone();
        let mut tm = theta.clone();
        tp[i] += step;
        tm[i] -= step;
        let fd = (simulator::ansatz_energy(&a, &tp, model)? - simulator::ansatz_energy(&a, &tm, model)?) / (2.0 * step);
        worst = worst.max((shift[i] - fd).abs()).max((shift[i] - adjoint[i]).abs());
    }
    Ok(worst)
}

/// The suite run by `verify` for a configured model.
pub fn run_all(model: &HamiltonianModel, max_order: u32, seed: u64) -> Result<Vec<Check>> {
    let n = model.n_qubits();
    // Surface degeneracy and non-matched problems before anything else.
    estimate_thetas(model, &build_qca(n)?, max_order)?;
    let k = max_order.min(4);
    let mut out = Vec::new();
    let slope = residual_slope(model, k, 0.02, 0.1, 7)?;
    out.push(Check::at_least("series residual slope", slope, 2.0 * (k + 1) as f64 - 1.0));
    out.push(Check::at_most(
        "two-block factorization",
        factorization_error(seed, 20, 6, 2)?,
        1e-10,
    ));
    if 2 * n <= 12 {
        out.push(Check::at_most("disjoint-copy estimates", duplication_error(model, max_order)?, 1e-10));
    }
    out.push(Check::at_least("QCA spanning fidelity", spanning_fidelity(2, 5, seed)?, 1.0 - 1e-6));
    if n <= 6 {
        out.push(Check::at_most("gradient agreement", gradient_error(model, seed, 1e-5)?, 1e-6));
    }
    Ok(out)
}
