//! Evaluation of distortion riskmetrics: rho_h(F) as a quantile integral
//! against dh, with the jump-side conventions centralized here.
//!
//! The decomposition is dh = (absolutely continuous part) + (jump masses).
//! Writing d-(s) = h(s) - h(s-) and d+(s) = h(s+) - h(s),
//!
//!   rho_h(F) = int_0^1 F^{-1}(1-t) h'(t) dt
//!            + sum_s d-(s) F^{-1+}(1-s)  +  sum_s d+(s) F^{-1}(1-s),
//!
//! i.e. a left-limit mass pairs with the right quantile and a right-limit mass
//! pairs with the left quantile. The boundary cases follow the same rule:
//! a mass d+(0) multiplies F^{-1}(1) (the essential supremum) and a mass d-(1)
//! multiplies F^{-1+}(0) (the essential infimum). These pairings reproduce the
//! defining survival-function integral for indicator distortions of every
//! orientation, which is exactly what the equivalence-oracle suite checks.

use crate::distortion::{Distortion, Piece};
use crate::error::{Error, Result};
use crate::numerics::tanh_sinh;
use crate::quantile::{stable_pair, QuantileModel, Tail};

/// rho_h(F). Returns a signed divergence error when the combination is not
/// integrable (checked against the tail classes before any quadrature).
pub fn rho(h: &Distortion, f: &QuantileModel) -> Result<f64> {
    check_integrable(h, f)?;
    let mut total = 0.0;

    for j in h.jumps() {
        let d_left = j.point - j.left;
        let d_right = j.right - j.point;
        if d_left != 0.0 {
            // F^{-1+}(1 - s); at s = 1 this is the essential infimum
            let u = 1.0 - j.at;
            total += d_left * f.q_right(u);
        }
        if d_right != 0.0 {
            let u = 1.0 - j.at;
            total += d_right * f.q_left(u, j.at);
        }
    }

    if let QuantileModel::Discrete { atoms, cum } = f {
        total += ac_integral_discrete(h, atoms, cum);
        return Ok(total);
    }
    for piece in h.pieces() {
        total += ac_piece_integral(piece, f)?;
    }
    Ok(total)
}

/// Exact absolutely-continuous part for a discrete model: atom j lives on the
/// strip t in [1 - c_j, 1 - c_{j-1}] and contributes its value times the
/// piece increment over the clipped strip.
fn ac_integral_discrete(h: &Distortion, atoms: &[(f64, f64)], cum: &[f64]) -> f64 {
    let mut total = 0.0;
    for piece in h.pieces() {
        if piece.f.is_constant() {
            continue;
        }
        let start = cum.partition_point(|&c| c <= 1.0 - piece.hi);
        let mut cached = (f64::NAN, 0.0);
        for j in start..atoms.len() {
            let c_lo = if j == 0 { 0.0 } else { cum[j - 1] };
            if c_lo >= 1.0 - piece.lo {
                break;
            }
            let t_lo = (1.0 - cum[j]).max(piece.lo);
            let t_hi = (1.0 - c_lo).min(piece.hi);
            if t_hi <= t_lo {
                continue;
            }
            let v_hi =
                if t_hi == cached.0 { cached.1 } else { piece.f.value(t_hi, 1.0 - t_hi) };
            let v_lo = piece.f.value(t_lo, 1.0 - t_lo);
            cached = (t_lo, v_lo);
            total += atoms[j].0 * (v_hi - v_lo);
        }
    }
    total
}

/// Integral of F^{-1}(1-t) h'(t) over one analytic piece of h.
fn ac_piece_integral(piece: &Piece, f: &QuantileModel) -> Result<f64> {
    if piece.f.is_constant() {
        return Ok(0.0);
    }
    // split where the quantile has kinks or atoms: t = 1 - level
    let mut cuts: Vec<f64> = f
        .split_levels()
        .into_iter()
        .map(|l| 1.0 - l)
        .filter(|t| *t > piece.lo && *t < piece.hi)
        .collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.push(piece.hi);

    let mut total = 0.0;
    let mut lo = piece.lo;
    for hi in cuts {
        if hi <= lo {
            continue;
        }
        // exact contribution where the quantile is constant on the strip
        if let Some(v) = f.constant_on(1.0 - hi, 1.0 - lo) {
            total += v * (piece.f.value(hi, 1.0 - hi) - piece.f.value(lo, 1.0 - lo));
        } else {
            let q = tanh_sinh(
                |t, fl, fh| {
                    let (t, omt) = stable_pair(t, fl, fh, lo, hi);
                    f.q_left(omt, t) * piece.f.deriv(t, omt)
                },
                lo,
                hi,
                1e-12,
            );
            if !q.converged {
                return Err(Error::NonIntegrable { positive: q.value >= 0.0 });
            }
            total += q.value;
        }
        lo = hi;
    }
    Ok(total)
}

/// Pre-flight integrability screen from the tail classes of F and the
/// endpoint behaviour of h', per the Hoelder-type sufficient condition.
fn check_integrable(h: &Distortion, f: &QuantileModel) -> Result<()> {
    for j in h.jumps() {
        let d_right = j.right - j.point;
        if j.at == 0.0 && d_right != 0.0 && f.upper_tail() != Tail::Bounded {
            return Err(Error::NonIntegrable { positive: d_right > 0.0 });
        }
        let d_left = j.point - j.left;
        if j.at == 1.0 && d_left != 0.0 && f.lower_tail() != Tail::Bounded {
            return Err(Error::NonIntegrable { positive: d_left < 0.0 });
        }
    }
    // h' near t=0 integrates the upper tail of F, h' near t=1 the lower tail
    let first = &h.pieces()[0].f;
    end_check(first, f.upper_tail(), true)?;
    let last = &h.pieces()[h.pieces().len() - 1].f;
    end_check(last, f.lower_tail(), false)?;
    Ok(())
}

fn end_check(seg: &crate::distortion::Smooth, tail: Tail, upper: bool) -> Result<()> {
    if seg.is_constant() {
        return Ok(());
    }
    let ok = match (seg.min_tk_gamma(), tail) {
        (_, Tail::Bounded) | (_, Tail::Light) => true,
        (Some(g), Tail::Power(theta)) => g * theta > 1.0,
        (None, Tail::Power(theta)) => theta > 1.0,
    };
    if ok {
        Ok(())
    } else {
        // the divergence sign follows the dominant slope sign at that end
        let lead = seg.lead_coefficient();
        let positive = if upper { lead > 0.0 } else { lead < 0.0 };
        Err(Error::NonIntegrable { positive })
    }
}

/// The exact worst case of rho_h over all dependence structures of a weighted
/// sum with fixed marginals, valid for concave h: comonotonic additivity gives
/// sum_i a_i rho_h(F_i).
pub fn weighted_sum_comonotone(
    h: &Distortion,
    weights: &[f64],
    marginals: &[QuantileModel],
) -> Result<f64> {
    if !h.is_concave(1e-9) {
        return Err(Error::NotConcave(
            "comonotone additivity requires a concave distortion; pass an envelope".into(),
        ));
    }
    if weights.len() != marginals.len() {
        return Err(Error::InvalidParameter("weights/marginals length mismatch".into()));
    }
    if weights.iter().any(|w| *w < 0.0) {
        return Err(Error::InvalidParameter("weights must be nonnegative".into()));
    }
    let mut total = 0.0;
    for (w, f) in weights.iter().zip(marginals) {
        if *w > 0.0 {
            total += w * rho(h, f)?;
        }
    }
    Ok(total)
}

impl QuantileModel {
    /// Value if the left quantile is a.e. constant on (ulo, uhi).
    pub(crate) fn constant_on(&self, ulo: f64, uhi: f64) -> Option<f64> {
        if uhi <= ulo {
            return None;
        }
        match self {
            Self::Discrete { atoms, cum } => {
                let mut lo = 0.0;
                for (i, &(v, _)) in atoms.iter().enumerate() {
                    let hi = cum[i];
                    if ulo >= lo && uhi <= hi {
                        return Some(v);
                    }
                    lo = hi;
                }
                None
            }
            Self::Affine { base, scale, shift } => {
                base.constant_on(ulo, uhi).map(|v| shift + scale * v)
            }
            Self::Concentrated { base, intervals, means } => {
                for (j, (a, b)) in intervals.iter().enumerate() {
                    if ulo >= a && uhi <= b {
                        return Some(means[j]);
                    }
                }
                // outside every flat: defer to the base when the strip avoids them
                if intervals.iter().all(|(a, b)| uhi <= a || ulo >= b) {
                    base.constant_on(ulo, uhi)
                } else {
                    None
                }
            }
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distortion::{Jump, Piece, Smooth};
    use crate::quantile::QuantileModel as QM;

    const ES95_STD_NORMAL: f64 = 2.062_712_807_507_426; // pdf(z95)/0.05
    const ES95_PARETO3: f64 = 4.071_626_424_892_360_5; // 1.5 * 20^(1/3)
    const Z75: f64 = 0.674_489_750_196_081_7;

    #[test]
    fn identity_distortion_gives_mean() {
        let h = Distortion::linear();
        for f in [
            QM::normal(0.7, 2.0).unwrap(),
            QM::exponential(3.0).unwrap(),
            QM::lomax(3.0).unwrap(),
            QM::discrete(&[(1.0, 0.25), (5.0, 0.75)]).unwrap(),
        ] {
            let r = rho(&h, &f).unwrap();
            assert!((r - f.mean().unwrap()).abs() < 1e-11, "{f:?}");
        }
    }

    #[test]
    fn es_normal_and_pareto() {
        let h = Distortion::es(0.95).unwrap();
        let n = QM::normal(0.0, 1.0).unwrap();
        assert!((rho(&h, &n).unwrap() - ES95_STD_NORMAL).abs() < 1e-9);
        let p = QM::pareto(3.0).unwrap();
        assert!((rho(&h, &p).unwrap() - ES95_PARETO3).abs() < 1e-10);
    }

    #[test]
    fn var_of_uniform_is_alpha() {
        for alpha in [0.5, 0.9, 0.95, 0.99] {
            let h = Distortion::var(alpha).unwrap();
            let u = QM::standard_uniform();
            assert!((rho(&h, &u).unwrap() - alpha).abs() < 1e-14);
        }
    }

    #[test]
    fn var_sides_on_discrete() {
        // two-point law: left quantile at 0.5 is 0, right quantile is 1
        let f = QM::discrete(&[(0.0, 0.5), (1.0, 0.5)]).unwrap();
        let var = Distortion::var(0.5).unwrap(); // F^{-1}(0.5)
        assert_eq!(rho(&var, &f).unwrap(), 0.0);
        let varp = Distortion::var_plus(0.5).unwrap(); // F^{-1+}(0.5)
        assert_eq!(rho(&varp, &f).unwrap(), 1.0);
    }

    #[test]
    fn usc_equivalence_for_continuous_quantiles() {
        let n = QM::normal(0.3, 1.3).unwrap();
        for h in [
            Distortion::var(0.9).unwrap(),
            Distortion::inter_quantile(0.8).unwrap(),
        ] {
            let a = rho(&h, &n).unwrap();
            let b = rho(&h.usc_modification(), &n).unwrap();
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn iqr_on_standard_normal() {
        let h = Distortion::inter_quantile(0.75).unwrap();
        let n = QM::normal(0.0, 1.0).unwrap();
        // F^{-1+}(0.75) - F^{-1}(0.25) = 2 z_{0.75}
        assert!((rho(&h, &n).unwrap() - 2.0 * Z75).abs() < 1e-12);
    }

    #[test]
    fn linearity_in_h() {
        let h1 = Distortion::es(0.9).unwrap();
        let h2 = Distortion::tk(0.7).unwrap();
        let d = h1.difference(&h2);
        for f in [QM::normal(1.0, 2.0).unwrap(), QM::exponential(1.5).unwrap()] {
            let lhs = rho(&d, &f).unwrap();
            let rhs = rho(&h1, &f).unwrap() - rho(&h2, &f).unwrap();
            assert!((lhs - rhs).abs() < 1e-10);
        }
    }

    #[test]
    fn divergence_carries_sign() {
        // mass at t = 0 multiplies the essential supremum
        let h = Distortion::from_parts(
            vec![Piece { lo: 0.0, hi: 1.0, f: Smooth::constant(1.0) }],
            vec![Jump { at: 0.0, left: 0.0, point: 0.0, right: 1.0 }],
        )
        .unwrap();
        let n = QM::normal(0.0, 1.0).unwrap();
        assert_eq!(rho(&h, &n), Err(Error::NonIntegrable { positive: true }));
        assert_eq!(rho(&h.negate(), &n), Err(Error::NonIntegrable { positive: false }));
        // bounded support is fine: essential supremum of U(0,1)
        assert_eq!(rho(&h, &QM::standard_uniform()).unwrap(), 1.0);
        // heavy tail against ES diverges, too
        let es = Distortion::es(0.95).unwrap();
        assert!(matches!(
            rho(&es, &QM::pareto(0.8).unwrap()),
            Err(Error::NonIntegrable { positive: true })
        ));
    }

    #[test]
    fn rho_on_concentrated_tail() {
        // ES_0.9 of U(0,1) equals the atom produced by concentrating (0.9, 1)
        let u = QM::standard_uniform();
        let es = Distortion::es(0.9).unwrap();
        let direct = rho(&es, &u).unwrap();
        let conc = u.concentrate((0.9, 1.0)).unwrap();
        let vp = Distortion::var_plus(0.9).unwrap();
        let atom = rho(&vp, &conc).unwrap();
        assert!((direct - 0.95).abs() < 1e-12);
        assert!((atom - 0.95).abs() < 1e-12);
    }

    #[test]
    fn comonotone_sum_examples() {
        let es = Distortion::es(0.95).unwrap();
        let marginals =
            vec![QM::standard_uniform(), QM::standard_uniform(), QM::standard_uniform()];
        let w = vec![1.0 / 3.0; 3];
        let v = weighted_sum_comonotone(&es, &w, &marginals).unwrap();
        assert!((v - 0.975).abs() < 1e-12);

        let single = weighted_sum_comonotone(&es, &[1.0], &marginals[..1]).unwrap();
        assert!((single - rho(&es, &marginals[0]).unwrap()).abs() < 1e-14);
        assert_eq!(weighted_sum_comonotone(&es, &[0.0; 3], &marginals).unwrap(), 0.0);

        let tk = Distortion::tk(0.7).unwrap();
        assert!(matches!(
            weighted_sum_comonotone(&tk, &w, &marginals),
            Err(Error::NotConcave(_))
        ));
    }
}
