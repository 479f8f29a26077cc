//! Desk-scale verification machinery for the convexification equivalence:
//! membership predicates for uncertainty sets, finite concentration closures,
//! suprema over finite sets, and the exact identity
//! rho_{h*}(F) = rho_{h-hat}(F^{I_h}) that drives the equivalence.

use crate::distortion::Distortion;
use crate::envelope::concave_envelope;
use crate::error::{Error, Result};
use crate::quantile::QuantileModel;
use crate::rho::rho;

/// Number of grid points used for quantile-function equality of models.
const DEDUP_GRID: usize = 512;
const DEDUP_TOL: f64 = 1e-10;

/// An uncertainty set with a decidable membership predicate.
#[derive(Debug, Clone)]
pub enum UncertaintySpec {
    /// M^p(m, v): fixed mean, central p-norm at most v.
    Moment { p: f64, m: f64, v: f64, tol: f64 },
    /// Everything dominated in convex order by each of the given models.
    ConvexOrder { dominating: Vec<QuantileModel>, grid: usize, tol: f64 },
    /// An explicit finite list (membership by quantile-function equality).
    Explicit { models: Vec<QuantileModel>, tol: f64 },
    /// rho_{h_k}(Y) <= x_k for concave distortions h_k (dual-utility bounds).
    DistortionBounds { constraints: Vec<(Distortion, f64)>, tol: f64 },
}

impl UncertaintySpec {
    pub fn contains(&self, f: &QuantileModel) -> Result<bool> {
        match self {
            Self::Moment { p, m, v, tol } => {
                let mean = f.mean()?;
                if (mean - m).abs() > *tol {
                    return Ok(false);
                }
                Ok(f.central_norm(*p)? <= v + tol)
            }
            Self::ConvexOrder { dominating, grid, tol } => {
                let mean = f.mean()?;
                for z in dominating {
                    if (mean - z.mean()?).abs() > *tol {
                        return Ok(false);
                    }
                    // stop-loss dominance on a grid spanning the wider support
                    let lo = z.quantile(0.001, crate::quantile::QSide::Left)?;
                    let hi = z.quantile(0.999, crate::quantile::QSide::Left)?;
                    for i in 0..*grid {
                        let k = lo + (hi - lo) * i as f64 / (*grid - 1).max(1) as f64;
                        if f.stop_loss(k)? > z.stop_loss(k)? + tol {
                            return Ok(false);
                        }
                    }
                }
                Ok(true)
            }
            Self::Explicit { models, tol } => {
                Ok(models.iter().any(|g| models_equal(f, g, *tol)))
            }
            Self::DistortionBounds { constraints, tol } => {
                for (h, x) in constraints {
                    if rho(h, f)? > x + tol {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }
}

/// Quantile-function equality on a fixed midpoint grid.
pub fn models_equal(a: &QuantileModel, b: &QuantileModel, tol: f64) -> bool {
    for i in 0..DEDUP_GRID {
        let u = (i as f64 + 0.5) / DEDUP_GRID as f64;
        let (qa, qb) = (a.q_left(u, 1.0 - u), b.q_left(u, 1.0 - u));
        if (qa - qb).abs() > tol {
            return false;
        }
    }
    true
}

/// Both sides of the key identity: rho_{h*}(F) on the left and
/// rho_{h-hat}(F^{I_h}) on the right. They agree for any h with finitely many
/// jumps and divergence intervals, which is how the equivalence theorem moves
/// mass onto the divergence set without changing the envelope value.
pub fn concentration_identity(h: &Distortion, f: &QuantileModel) -> Result<(f64, f64)> {
    let env = concave_envelope(h)?;
    let lhs = rho(&env.envelope, f)?;
    let hh = h.usc_modification();
    let g = f.concentrate_multi(&env.i_h)?;
    let rhs = rho(&hh, &g)?;
    Ok((lhs, rhs))
}

/// A finite concentration closure, possibly truncated by the model budget.
#[derive(Debug, Clone)]
pub struct Closure {
    pub models: Vec<QuantileModel>,
    /// False when the budget stopped the breadth-first generation early.
    pub complete: bool,
}

/// Breadth-first closure of a discrete seed under concentration over the
/// candidate intervals, deduplicated by quantile equality on a fixed grid.
/// Candidates may overlap (they are applied one at a time).
pub fn closure_generate(
    seed: &QuantileModel,
    candidates: &[(f64, f64)],
    depth: usize,
    budget: usize,
) -> Result<Closure> {
    match seed {
        QuantileModel::Discrete { atoms, .. } if atoms.len() <= 8 => {}
        QuantileModel::Discrete { .. } => {
            return Err(Error::InvalidParameter("seed must have at most 8 atoms".into()))
        }
        _ => return Err(Error::InvalidParameter("seed must be a discrete model".into())),
    }
    for &(a, b) in candidates {
        if !(0.0 <= a && a < b && b <= 1.0) {
            return Err(Error::InvalidParameter(format!("bad candidate interval ({a}, {b})")));
        }
    }
    let mut all = vec![seed.clone()];
    let mut frontier = vec![seed.clone()];
    for _ in 0..depth {
        let mut next = Vec::new();
        for f in &frontier {
            for &c in candidates {
                let g = f.concentrate(c)?;
                if !all.iter().any(|m| models_equal(m, &g, DEDUP_TOL)) {
                    if all.len() >= budget {
                        return Ok(Closure { models: all, complete: false });
                    }
                    all.push(g.clone());
                    next.push(g);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(Closure { models: all, complete: true })
}

/// Exact maximum of rho_h over a finite set; ties break to the lowest index.
pub fn sup_over_set(h: &Distortion, models: &[QuantileModel]) -> Result<(f64, usize)> {
    if models.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0;
    for (i, f) in models.iter().enumerate() {
        let v = rho(h, f)?;
        if v > best {
            best = v;
            arg = i;
        }
    }
    Ok((best, arg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantile::QSide;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const ES75_STD_NORMAL: f64 = 1.271_106_290_736_427_7;

    #[test]
    fn identity_trivial_for_concave() {
        let h = Distortion::es(0.9).unwrap();
        let f = QuantileModel::normal(0.0, 1.0).unwrap();
        let (lhs, rhs) = concentration_identity(&h, &f).unwrap();
        assert!((lhs - rhs).abs() < 1e-10);
        assert!((lhs - rho(&h, &f).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn identity_var_plus_uniform() {
        // lhs: ES_0.9 of U(0,1) = 0.95; rhs: usc value at the tail atom
        let h = Distortion::var_plus(0.9).unwrap();
        let f = QuantileModel::standard_uniform();
        let (lhs, rhs) = concentration_identity(&h, &f).unwrap();
        assert!((lhs - 0.95).abs() < 1e-12);
        assert!((rhs - 0.95).abs() < 1e-12);
    }

    #[test]
    fn identity_iqr_normal() {
        // lhs = ES_.75(Z) + ES_.75(-Z); rhs concentrates both tails
        let h = Distortion::inter_quantile(0.75).unwrap();
        let f = QuantileModel::normal(0.0, 1.0).unwrap();
        let (lhs, rhs) = concentration_identity(&h, &f).unwrap();
        assert!((lhs - 2.0 * ES75_STD_NORMAL).abs() < 1e-9, "lhs {lhs}");
        assert!((lhs - rhs).abs() < 1e-9, "gap {}", lhs - rhs);
    }

    fn random_pl(rng: &mut ChaCha8Rng) -> Distortion {
        let k = rng.gen_range(2..=6);
        let mut knots: Vec<f64> = vec![0.0];
        for _ in 0..k - 1 {
            knots.push(rng.gen_range(0.02..0.98));
        }
        knots.push(1.0);
        knots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        knots.dedup_by(|a, b| (*a - *b).abs() < 0.01);
        if *knots.last().unwrap() != 1.0 {
            knots.push(1.0);
        }
        let mut values = vec![0.0];
        for _ in 0..knots.len() - 1 {
            values.push(rng.gen_range(-1.0..1.5));
        }
        Distortion::piecewise_linear(&knots, &values).unwrap()
    }

    fn random_discrete(rng: &mut ChaCha8Rng) -> QuantileModel {
        let k = rng.gen_range(1..=8);
        let mut atoms = Vec::new();
        let mut weights = Vec::new();
        for _ in 0..k {
            atoms.push(rng.gen_range(-3.0..3.0));
            weights.push(rng.gen_range(0.05..1.0));
        }
        let s: f64 = weights.iter().sum();
        let pairs: Vec<(f64, f64)> =
            atoms.into_iter().zip(weights.into_iter().map(|w| w / s)).collect();
        QuantileModel::discrete(&pairs).unwrap()
    }

    #[test]
    fn identity_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for case in 0..50 {
            let h = random_pl(&mut rng);
            let f = random_discrete(&mut rng);
            let (lhs, rhs) = concentration_identity(&h, &f).unwrap();
            assert!((lhs - rhs).abs() < 1e-10, "case {case}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn closure_examples() {
        let seed = QuantileModel::discrete(&[
            (0.0, 0.25),
            (1.0, 0.25),
            (2.0, 0.25),
            (3.0, 0.25),
        ])
        .unwrap();
        // depth 0 keeps only the seed
        let c0 = closure_generate(&seed, &[(0.0, 0.5)], 0, 100).unwrap();
        assert_eq!(c0.models.len(), 1);
        // a degenerate seed is fixed by any concentration
        let c = closure_generate(&QuantileModel::degenerate(1.0), &[(0.1, 0.7)], 3, 100).unwrap();
        assert_eq!(c.models.len(), 1);
        // dyadic candidates at depth 2: all generated models keep the mean
        let dyadic = [(0.0, 0.5), (0.5, 1.0), (0.0, 0.25), (0.25, 0.5), (0.5, 0.75), (0.75, 1.0)];
        let cl = closure_generate(&seed, &dyadic, 2, 10_000).unwrap();
        assert!(cl.complete);
        assert!(cl.models.len() > 3);
        for m in &cl.models {
            assert!((m.mean().unwrap() - 1.5).abs() < 1e-10);
        }
        // budget exhaustion is flagged, not an error
        let tight = closure_generate(&seed, &dyadic, 3, 3).unwrap();
        assert!(!tight.complete);
        assert_eq!(tight.models.len(), 3);
    }

    #[test]
    fn sup_over_concentration_closed_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for case in 0..20 {
            let h = random_pl(&mut rng);
            let env = concave_envelope(&h).unwrap();
            let seed = random_discrete(&mut rng);
            // close the set under concentration within I_h: all subsets of the
            // divergence intervals, which is exactly the reachable closure
            let candidates: Vec<(f64, f64)> = env.i_h.iter().collect();
            let cl = closure_generate(&seed, &candidates, candidates.len().max(1), 10_000)
                .unwrap();
            assert!(cl.complete);
            let (sup_h, _) = sup_over_set(&h, &cl.models).unwrap();
            let (sup_env, _) = sup_over_set(&env.envelope, &cl.models).unwrap();
            assert!(
                (sup_h - sup_env).abs() < 1e-9,
                "case {case}: sup_h {sup_h} vs sup_env {sup_env}"
            );
        }
    }

    #[test]
    fn monotone_gap_guard() {
        // without closing the set, only the one-sided bound holds
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let h = random_pl(&mut rng);
            let env = concave_envelope(&h).unwrap();
            let models = vec![random_discrete(&mut rng), random_discrete(&mut rng)];
            let (sup_h, _) = sup_over_set(&h, &models).unwrap();
            let (sup_env, _) = sup_over_set(&env.envelope, &models).unwrap();
            assert!(sup_h <= sup_env + 1e-10);
        }
        assert!(matches!(
            sup_over_set(&Distortion::linear(), &[]),
            Err(Error::EmptySet)
        ));
    }

    #[test]
    fn membership_predicates() {
        let spec = UncertaintySpec::Moment { p: 2.0, m: 0.5, v: 1.0, tol: 1e-9 };
        assert!(spec.contains(&QuantileModel::standard_uniform()).unwrap());
        assert!(!spec.contains(&QuantileModel::normal(0.0, 1.0).unwrap()).unwrap());
        assert!(!spec.contains(&QuantileModel::normal(0.5, 2.0).unwrap()).unwrap());

        // concentration keeps membership (the Jensen direction)
        let u = QuantileModel::standard_uniform();
        let c = u.concentrate((0.2, 0.8)).unwrap();
        assert!(spec.contains(&c).unwrap());

        let cx = UncertaintySpec::ConvexOrder {
            dominating: vec![QuantileModel::normal(0.0, 1.0).unwrap()],
            grid: 33,
            tol: 1e-8,
        };
        assert!(cx.contains(&QuantileModel::normal(0.0, 0.5).unwrap()).unwrap());
        assert!(cx.contains(&QuantileModel::degenerate(0.0)).unwrap());
        assert!(!cx.contains(&QuantileModel::normal(0.0, 2.0).unwrap()).unwrap());

        let db = UncertaintySpec::DistortionBounds {
            constraints: vec![(Distortion::es(0.9).unwrap(), 1.0)],
            tol: 1e-9,
        };
        assert!(db.contains(&QuantileModel::uniform(0.0, 1.0).unwrap()).unwrap());
        assert!(!db.contains(&QuantileModel::normal(1.0, 1.0).unwrap()).unwrap());

        let ex = UncertaintySpec::Explicit {
            models: vec![QuantileModel::standard_uniform()],
            tol: 1e-10,
        };
        assert!(ex.contains(&QuantileModel::uniform(0.0, 1.0).unwrap()).unwrap());
        assert!(!ex.contains(&QuantileModel::uniform(0.0, 1.1).unwrap()).unwrap());
    }

    #[test]
    fn closure_stays_in_moment_set() {
        let seed = QuantileModel::discrete(&[(-1.0, 0.5), (1.0, 0.5)]).unwrap();
        let spec = UncertaintySpec::Moment { p: 3.0, m: 0.0, v: 1.0, tol: 1e-10 };
        assert!(spec.contains(&seed).unwrap());
        let dyadic = [(0.0, 0.5), (0.5, 1.0), (0.25, 0.75), (0.0, 1.0)];
        let cl = closure_generate(&seed, &dyadic, 3, 1000).unwrap();
        for m in &cl.models {
            assert!(spec.contains(m).unwrap(), "closure left the moment set");
        }
    }

    #[test]
    fn identity_with_jumpy_h() {
        // the identity also holds for discontinuous h (rhs uses the usc version)
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..20 {
            let f = random_discrete(&mut rng);
            for h in [
                Distortion::var(0.85).unwrap(),
                Distortion::var_plus(0.6).unwrap(),
                Distortion::inter_quantile(0.75).unwrap(),
            ] {
                let (lhs, rhs) = concentration_identity(&h, &f).unwrap();
                assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
            }
        }
        let _ = QSide::Left;
    }
}
