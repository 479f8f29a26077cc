//! Outer minimizations over portfolio weights: the difference-of-riskmetrics
//! problem under mean-covariance information, the preference-robust problem
//! over a family of inverse-S distortions, and the marginal-constraint
//! problems (convex riskmetric column and RA lower-bound column).
//!
//! The feasible set is the box-constrained simplex A = {a in [lo, hi]^n,
//! sum a = 1}. Convex objectives go through projected gradient with
//! backtracking; the RA-based objective is derivative-free and noisy, so it
//! gets a seeded multi-start Nelder-Mead over projected coordinates.

use crate::distortion::Distortion;
use crate::envelope::concave_envelope;
use crate::error::{Error, Result};
use crate::moment::q_center;
use crate::numerics::{golden_min, symmetric_eigenvalues};
use crate::quantile::QuantileModel;
use crate::rearrange::{discretize, ra_iterate, GridMode, RaParams};
use crate::rho::rho;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Solution of an outer weight optimization.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub weights: Vec<f64>,
    pub value: f64,
    /// Worst-case distortion parameter, for the preference-robust problem.
    pub gamma_hat: Option<f64>,
    pub iterations: usize,
    /// Projected-gradient KKT residual, or the final simplex spread for
    /// direct-search solvers.
    pub residual: f64,
}

/// Mean and dispersion of a weighted sum under mean-covariance information:
/// the moment set it induces is M^2(a'mu, sqrt(a' Sigma a)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanCov {
    pub m: f64,
    pub v: f64,
}

pub fn reduce_mean_cov(a: &[f64], mu: &[f64], sigma: &[Vec<f64>]) -> Result<MeanCov> {
    ensure_psd(sigma)?;
    if a.len() != mu.len() || a.len() != sigma.len() {
        return Err(Error::InvalidParameter("dimension mismatch".into()));
    }
    let m = dot(a, mu);
    let v = quad_form(a, sigma).max(0.0).sqrt();
    Ok(MeanCov { m, v })
}

/// Projection onto {a in [lo, hi]^n : sum a = 1} (Euclidean).
pub fn project_box_simplex(y: &[f64], lo: f64, hi: f64) -> Result<Vec<f64>> {
    let n = y.len();
    if n == 0 || !(lo < hi) || n as f64 * lo > 1.0 + 1e-12 || (n as f64) * hi < 1.0 - 1e-12 {
        return Err(Error::Domain(format!("empty feasible box [{lo}, {hi}]^{n}")));
    }
    let maxy = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let miny = y.iter().copied().fold(f64::INFINITY, f64::min);
    let (mut a, mut b) = (miny - hi, maxy - lo);
    let total = |lam: f64| -> f64 { y.iter().map(|v| (v - lam).clamp(lo, hi)).sum::<f64>() };
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if total(mid) > 1.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    let lam = 0.5 * (a + b);
    Ok(y.iter().map(|v| (v - lam).clamp(lo, hi)).collect())
}

fn ensure_psd(sigma: &[Vec<f64>]) -> Result<()> {
    let n = sigma.len();
    let mut flat = Vec::with_capacity(n * n);
    for row in sigma {
        if row.len() != n {
            return Err(Error::InvalidParameter("covariance matrix must be square".into()));
        }
        flat.extend_from_slice(row);
    }
    for i in 0..n {
        for j in 0..n {
            if (flat[i * n + j] - flat[j * n + i]).abs() > 1e-10 {
                return Err(Error::InvalidParameter("covariance matrix must be symmetric".into()));
            }
        }
    }
    let ev = symmetric_eigenvalues(&flat, n);
    let scale = ev.iter().fold(1.0f64, |m, e| m.max(e.abs()));
    if ev.iter().any(|&e| e < -1e-10 * scale) {
        return Err(Error::InvalidParameter("covariance matrix is not PSD".into()));
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn mat_vec(sigma: &[Vec<f64>], a: &[f64]) -> Vec<f64> {
    sigma.iter().map(|row| dot(row, a)).collect()
}

fn quad_form(a: &[f64], sigma: &[Vec<f64>]) -> f64 {
    dot(a, &mat_vec(sigma, a))
}

/// Projected gradient with backtracking on a smooth convex objective.
fn projected_gradient<FG>(
    fg: FG,
    x0: Vec<f64>,
    lo: f64,
    hi: f64,
    max_iters: usize,
    tol: f64,
) -> Result<(Vec<f64>, f64, usize, f64)>
where
    FG: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let mut x = project_box_simplex(&x0, lo, hi)?;
    let (mut fx, mut gx) = fg(&x);
    let mut step = 1.0;
    let mut residual = f64::INFINITY;
    for it in 0..max_iters {
        let probe: Vec<f64> = x.iter().zip(&gx).map(|(a, g)| a - g).collect();
        let kkt = project_box_simplex(&probe, lo, hi)?;
        residual = kkt
            .iter()
            .zip(&x)
            .map(|(p, a)| (p - a).abs())
            .fold(0.0, f64::max);
        if residual <= tol {
            return Ok((x, fx, it, residual));
        }
        // backtracking on the projected step
        let mut accepted = false;
        for _ in 0..60 {
            let cand_raw: Vec<f64> = x.iter().zip(&gx).map(|(a, g)| a - step * g).collect();
            let cand = project_box_simplex(&cand_raw, lo, hi)?;
            let (fc, gc) = fg(&cand);
            let diff: Vec<f64> = cand.iter().zip(&x).map(|(c, a)| c - a).collect();
            let quad = dot(&gx, &diff) + dot(&diff, &diff) / (2.0 * step);
            if fc <= fx + quad + 1e-15 {
                x = cand;
                fx = fc;
                gx = gc;
                step *= 1.5;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok((x, fx, max_iters, residual))
}

/// Minimize sqrt(a' Sigma a) times the envelope 2-norm of the difference of
/// two inverse-S distortions: the closed-form reduction of the worst-case
/// disagreement problem. The norm factor is constant in a, so this is a
/// box-simplex QP.
pub fn solve_diff_tk(sigma: &[Vec<f64>], gamma1: f64, gamma2: f64) -> Result<SolveReport> {
    ensure_psd(sigma)?;
    let n = sigma.len();
    let h = Distortion::tk(gamma1)?.difference(&Distortion::tk(gamma2)?);
    let env = concave_envelope(&h)?;
    let norm = q_center(&env.envelope, 2.0)?.norm;
    let fg = |a: &[f64]| {
        let sa = mat_vec(sigma, a);
        (dot(a, &sa), sa.iter().map(|v| 2.0 * v).collect())
    };
    let x0 = vec![1.0 / n as f64; n];
    let (weights, qf, iterations, residual) =
        projected_gradient(fg, x0, 0.0, 1.0, 100_000, 1e-12)?;
    Ok(SolveReport {
        value: norm * qf.max(0.0).sqrt(),
        weights,
        gamma_hat: None,
        iterations,
        residual,
    })
}

/// [(h^gamma)*]_2 for the inverse-S distortion: the dispersion coefficient of
/// the worst case over M^2.
pub fn tk_envelope_norm2(gamma: f64) -> Result<f64> {
    let env = concave_envelope(&Distortion::tk(gamma)?)?;
    Ok(q_center(&env.envelope, 2.0)?.norm)
}

/// Preference-robust solve: min over weights of the worst-case price over the
/// distortion family {h^gamma}, with the deviation penalty
/// exp(c (gamma - 0.71)^2) - 1 (zero at the benchmark parameter).
///
/// The reported value is a' mu + sqrt(a' Sigma a) [(h^ghat)*]_2 minus the
/// penalty, i.e. the penalized worst-case price. The gamma grid has the given
/// step; the returned gamma_hat is refined locally off the grid.
pub fn solve_pref_robust(
    mu: &[f64],
    sigma: &[Vec<f64>],
    penalty_curvature: f64,
    gamma_range: (f64, f64),
    grid_step: f64,
) -> Result<SolveReport> {
    ensure_psd(sigma)?;
    let n = mu.len();
    if sigma.len() != n {
        return Err(Error::InvalidParameter("dimension mismatch".into()));
    }
    let (glo, ghi) = gamma_range;
    if !(0.0 < glo && glo < ghi && ghi <= 1.0) {
        return Err(Error::InvalidParameter(format!("bad gamma range ({glo}, {ghi})")));
    }
    let steps = ((ghi - glo) / grid_step).round() as usize;
    let gammas: Vec<f64> = (0..=steps).map(|j| glo + grid_step * j as f64).collect();
    let norms: Vec<f64> = gammas
        .par_iter()
        .map(|&g| tk_envelope_norm2(g).unwrap_or(f64::INFINITY))
        .collect();
    let pen: Vec<f64> =
        gammas.iter().map(|g| (penalty_curvature * (g - 0.71) * (g - 0.71)).exp() - 1.0).collect();

    let inner = |t: f64, s: f64| -> (f64, usize) {
        let mut best = f64::NEG_INFINITY;
        let mut arg = 0;
        for j in 0..gammas.len() {
            let v = t + s * norms[j] - pen[j];
            if v > best {
                best = v;
                arg = j;
            }
        }
        (best, arg)
    };
    let objective = |a: &[f64]| -> f64 {
        let s = quad_form(a, sigma).max(0.0).sqrt();
        inner(dot(a, mu), s).0
    };

    // projected subgradient from several starts, then a smooth polish on the
    // active gamma
    let mut starts = vec![vec![1.0 / n as f64; n]];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..4 {
        let mut y: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let s: f64 = y.iter().sum();
        y.iter_mut().for_each(|v| *v /= s);
        starts.push(y);
    }
    let mut best_a: Vec<f64> = starts[0].clone();
    let mut best_v = f64::INFINITY;
    for start in starts {
        let mut a = project_box_simplex(&start, 0.0, 1.0)?;
        for k in 0..4000 {
            let s = quad_form(&a, sigma).max(0.0).sqrt();
            let (_, j) = inner(dot(&a, mu), s);
            let sa = mat_vec(sigma, &a);
            let sg: Vec<f64> = mu
                .iter()
                .zip(&sa)
                .map(|(m, sv)| m + if s > 1e-12 { norms[j] * sv / s } else { 0.0 })
                .collect();
            let eta = 0.5 / ((k + 1) as f64).sqrt();
            let y: Vec<f64> = a.iter().zip(&sg).map(|(x, g)| x - eta * g).collect();
            a = project_box_simplex(&y, 0.0, 1.0)?;
            let v = objective(&a);
            if v < best_v {
                best_v = v;
                best_a = a.clone();
            }
        }
    }
    // polish: fix the active gamma and solve the smooth convex problem
    for _ in 0..10 {
        let s = quad_form(&best_a, sigma).max(0.0).sqrt();
        let (_, j) = inner(dot(&best_a, mu), s);
        let fg = |a: &[f64]| {
            let sa = mat_vec(sigma, a);
            let s = dot(a, &sa).max(1e-300).sqrt();
            let val = dot(a, mu) + s * norms[j] - pen[j];
            let grad: Vec<f64> =
                mu.iter().zip(&sa).map(|(m, sv)| m + norms[j] * sv / s).collect();
            (val, grad)
        };
        let (cand, _, _, _) = projected_gradient(fg, best_a.clone(), 0.0, 1.0, 20_000, 1e-11)?;
        let v = objective(&cand);
        if v < best_v - 1e-13 {
            best_v = v;
            best_a = cand;
        } else {
            break;
        }
    }

    // refine gamma off the grid around the discrete argmax
    let s = quad_form(&best_a, sigma).max(0.0).sqrt();
    let t = dot(&best_a, mu);
    let (_, j) = inner(t, s);
    let neg = |g: f64| -> f64 {
        let nv = tk_envelope_norm2(g).unwrap_or(f64::INFINITY);
        -(t + s * nv - ((penalty_curvature * (g - 0.71) * (g - 0.71)).exp() - 1.0))
    };
    let wlo = if j > 0 { gammas[j - 1] } else { gammas[j] };
    let whi = if j + 1 < gammas.len() { gammas[j + 1] } else { gammas[j] };
    let gamma_hat = if whi > wlo { golden_min(neg, wlo, whi, 1e-6) } else { gammas[j] };
    let value = -neg(gamma_hat);

    Ok(SolveReport {
        weights: best_a,
        value: value.max(best_v),
        gamma_hat: Some(gamma_hat),
        iterations: 4000,
        residual: 0.0,
    })
}

/// Minimize a' r + c ||a||_2 over the box-simplex: the linear-plus-penalty
/// program that the comonotone reduction produces.
pub fn solve_linear_penalized(r: &[f64], lo: f64, hi: f64, c: f64) -> Result<SolveReport> {
    if c < 0.0 {
        return Err(Error::InvalidParameter("penalty scale must be nonnegative".into()));
    }
    let n = r.len();
    let fg = |a: &[f64]| {
        let nrm = dot(a, a).max(1e-300).sqrt();
        let val = dot(a, r) + c * nrm;
        let grad: Vec<f64> = r.iter().zip(a).map(|(ri, ai)| ri + c * ai / nrm).collect();
        (val, grad)
    };
    let x0 = vec![1.0 / n as f64; n];
    let (weights, value, iterations, residual) =
        projected_gradient(fg, x0, lo, hi, 200_000, 1e-11)?;
    Ok(SolveReport { weights, value, gamma_hat: None, iterations, residual })
}

/// Convex marginal-constraint solve: the worst case of a concave riskmetric of
/// a weighted sum is comonotone, so the objective is linear in the marginal
/// riskmetric values plus the norm penalty.
pub fn solve_marginal_convex(
    h: &Distortion,
    marginals: &[QuantileModel],
    lo: f64,
    hi: f64,
    c: f64,
) -> Result<SolveReport> {
    if !h.is_concave(1e-9) {
        return Err(Error::NotConcave("marginal reduction needs a concave distortion".into()));
    }
    let r: Result<Vec<f64>> = marginals.iter().map(|f| rho(h, f)).collect();
    solve_linear_penalized(&r?, lo, hi, c)
}

/// Inner objective of the non-convex marginal problem.
#[derive(Debug, Clone, Copy)]
pub enum RaTarget<'a> {
    /// Worst-case quantile at the given level (tail-grid RA, min row sum).
    VarLevel(f64),
    /// Worst-case rho_h via the full-grid rearranged empirical sum.
    Rho(&'a Distortion),
}

/// Multi-start search parameters for the outer weight optimization.
///
/// Starts are seeded perturbations around the warm start (typically the convex
/// solution). The search is deliberately local: the RA objective is only a
/// lower bound on the worst case, and it sags in regions far from the
/// comonotone-tight optimum, so a global search would minimize the bound's
/// looseness rather than the risk value.
#[derive(Debug, Clone, Copy)]
pub struct SearchParams {
    pub starts: usize,
    pub nm_iters: usize,
    /// Grid rows used during the search; the final value is re-evaluated at
    /// the full RaParams row count.
    pub search_rows: usize,
    pub seed: u64,
    /// Per-coordinate start perturbation, as a multiple of 1/n.
    pub spread: f64,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self { starts: 20, nm_iters: 120, search_rows: 2000, seed: 0, spread: 0.2 }
    }
}

fn ra_value(
    target: RaTarget<'_>,
    marginals: &[QuantileModel],
    weights: &[f64],
    rows: usize,
    ra: &RaParams,
) -> Result<f64> {
    let mode = match target {
        RaTarget::VarLevel(alpha) => GridMode::Tail { alpha },
        RaTarget::Rho(_) => GridMode::Full,
    };
    let m = discretize(marginals, weights, rows, mode)?;
    let out = ra_iterate(&m, ra.eps, ra.max_sweeps, ra.seed);
    match target {
        RaTarget::VarLevel(_) => Ok(out.objective),
        RaTarget::Rho(h) => {
            let mut rowsum = vec![0.0; out.matrix.n_rows];
            for col in &out.matrix.cols {
                for (s, v) in rowsum.iter_mut().zip(col) {
                    *s += v;
                }
            }
            rho(h, &QuantileModel::empirical(&rowsum)?)
        }
    }
}

/// Nelder-Mead on projected coordinates (deterministic given the start).
fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    spread: f64,
    max_iters: usize,
) -> (Vec<f64>, f64, f64) {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += spread;
        simplex.push(v);
    }
    let mut fv: Vec<f64> = simplex.iter().map(|x| f(x)).collect();
    for _ in 0..max_iters {
        let mut idx: Vec<usize> = (0..simplex.len()).collect();
        idx.sort_by(|&a, &b| fv[a].partial_cmp(&fv[b]).unwrap());
        let (best, worst, second) = (idx[0], idx[n], idx[n - 1]);
        if (fv[worst] - fv[best]).abs() <= 1e-10 * (1.0 + fv[best].abs()) {
            break;
        }
        let mut centroid = vec![0.0; n];
        for &i in idx.iter().take(n) {
            for (c, x) in centroid.iter_mut().zip(&simplex[i]) {
                *c += x / n as f64;
            }
        }
        let at = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let xr = at(1.0);
        let fr = f(&xr);
        if fr < fv[best] {
            let xe = at(2.0);
            let fe = f(&xe);
            if fe < fr {
                simplex[worst] = xe;
                fv[worst] = fe;
            } else {
                simplex[worst] = xr;
                fv[worst] = fr;
            }
        } else if fr < fv[second] {
            simplex[worst] = xr;
            fv[worst] = fr;
        } else {
            let xc = at(-0.5);
            let fc = f(&xc);
            if fc < fv[worst] {
                simplex[worst] = xc;
                fv[worst] = fc;
            } else {
                // shrink toward the best vertex
                let b = simplex[best].clone();
                for i in 0..simplex.len() {
                    if i == best {
                        continue;
                    }
                    for (x, bb) in simplex[i].iter_mut().zip(&b) {
                        *x = bb + 0.5 * (*x - bb);
                    }
                    fv[i] = f(&simplex[i]);
                }
            }
        }
    }
    let mut best = 0;
    for i in 1..fv.len() {
        if fv[i] < fv[best] {
            best = i;
        }
    }
    let spread_final = fv.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v))
        - fv.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    (simplex[best].clone(), fv[best], spread_final)
}

/// Outer minimization of the RA lower bound plus penalty over the box-simplex,
/// by seeded multi-start direct search. `warm` is typically the convex
/// solution; the published gaps between the two optima are tiny, so warm
/// starting dominates.
pub fn solve_marginal_lower_bound(
    target: RaTarget<'_>,
    marginals: &[QuantileModel],
    lo: f64,
    hi: f64,
    c: f64,
    ra: &RaParams,
    search: &SearchParams,
    warm: Option<&[f64]>,
) -> Result<SolveReport> {
    let n = marginals.len();
    // feasibility check up front
    project_box_simplex(&vec![1.0 / n as f64; n], lo, hi)?;

    let anchor: Vec<f64> = match warm {
        Some(w) => w.to_vec(),
        None => vec![1.0 / n as f64; n],
    };
    let mut starts: Vec<Vec<f64>> = vec![anchor.clone()];
    let delta = search.spread / n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(search.seed.wrapping_add(101));
    while starts.len() < search.starts {
        let y: Vec<f64> =
            anchor.iter().map(|a| a + rng.gen_range(-delta..delta)).collect();
        starts.push(y);
    }

    // trust region: outside the warm neighbourhood the RA value measures the
    // bound's looseness rather than the risk, so exclude it from the search
    let radius = 2.0 * delta;
    let eval_rows = |a: &[f64], rows: usize| -> f64 {
        let w = project_box_simplex(a, lo, hi).expect("feasible");
        if w.iter().zip(&anchor).any(|(x, y)| (x - y).abs() > radius) {
            return f64::INFINITY;
        }
        let base = ra_value(target, marginals, &w, rows, ra).unwrap_or(f64::INFINITY);
        base + c * dot(&w, &w).sqrt()
    };

    let results: Vec<(usize, Vec<f64>, f64, f64)> = starts
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let (x, v, spread) = nelder_mead(
                |a| eval_rows(a, search.search_rows),
                s,
                delta.max(1e-4),
                search.nm_iters,
            );
            (i, x, v, spread)
        })
        .collect();
    let best = results
        .iter()
        .min_by(|a, b| a.2.partial_cmp(&b.2).unwrap().then(a.0.cmp(&b.0)))
        .ok_or(Error::EmptySet)?;

    let weights = project_box_simplex(&best.1, lo, hi)?;
    let value = eval_rows(&weights, ra.n_rows);
    Ok(SolveReport {
        weights,
        value,
        gamma_hat: None,
        iterations: search.starts * search.nm_iters,
        residual: best.3,
    })
}
