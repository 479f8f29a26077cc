//! Distributions represented by their quantile functions, and the
//! concentration operator that replaces a quantile segment by its conditional
//! mean.
//!
//! Everything is quantile-analytic: parametric families carry closed-form
//! quantiles and segment integrals, discrete laws are exact, and concentrated
//! models wrap their base model lazily (the base is never discretized; only
//! the per-interval conditional means are evaluated, in closed form where the
//! base admits one).

use crate::distortion::Distortion;
use crate::error::{Error, Result};
use crate::interval::IntervalSet;
use crate::numerics::{bisect, normal_pdf, tanh_sinh_split};
use serde::{Deserialize, Serialize};
use statrs::distribution::ContinuousCDF;

/// Quantile side: the left-continuous F^{-1} or right-continuous F^{-1+}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QSide {
    Left,
    Right,
}

/// Tail behaviour, used to decide integrability before quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tail {
    /// The quantile stays bounded approaching the endpoint.
    Bounded,
    /// Unbounded but lighter than any power (all moments finite).
    Light,
    /// Power tail: |Q(u)| ~ (1-u)^(-1/theta); moments finite below theta.
    Power(f64),
}

#[derive(Debug, Clone)]
pub enum QuantileModel {
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, sd: f64 },
    Exponential { rate: f64 },
    /// F(x) = 1 - x^(-shape) on x >= 1.
    Pareto { shape: f64 },
    /// Atoms sorted by value with positive probabilities summing to one.
    Discrete { atoms: Vec<(f64, f64)>, cum: Vec<f64> },
    /// shift + scale * base with scale > 0.
    Affine { base: Box<QuantileModel>, scale: f64, shift: f64 },
    /// Base model with the quantile replaced by its conditional mean on each interval.
    Concentrated { base: Box<QuantileModel>, intervals: IntervalSet, means: Vec<f64> },
    /// The moment-bound optimizer shape m + v * phi applied to an envelope derivative.
    Extremal {
        env: Box<Distortion>,
        center: f64,
        norm: f64,
        q: f64,
        m: f64,
        v: f64,
        negate: bool,
    },
}

fn std_normal_quantile(p: f64) -> f64 {
    statrs::distribution::Normal::new(0.0, 1.0).unwrap().inverse_cdf(p)
}

impl QuantileModel {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::InvalidParameter(format!("uniform: lo {lo} >= hi {hi}")));
        }
        Ok(Self::Uniform { lo, hi })
    }

    pub fn standard_uniform() -> Self {
        Self::Uniform { lo: 0.0, hi: 1.0 }
    }

    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        if !(sd > 0.0) {
            return Err(Error::InvalidParameter(format!("normal: sd {sd} <= 0")));
        }
        Ok(Self::Normal { mean, sd })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate > 0.0) {
            return Err(Error::InvalidParameter(format!("exponential: rate {rate} <= 0")));
        }
        Ok(Self::Exponential { rate })
    }

    pub fn pareto(shape: f64) -> Result<Self> {
        if !(shape > 0.0) {
            return Err(Error::InvalidParameter(format!("pareto: shape {shape} <= 0")));
        }
        Ok(Self::Pareto { shape })
    }

    /// Pareto shifted to start at 0 (Lomax with unit scale).
    pub fn lomax(shape: f64) -> Result<Self> {
        Ok(Self::Affine { base: Box::new(Self::pareto(shape)?), scale: 1.0, shift: -1.0 })
    }

    pub fn discrete(atoms: &[(f64, f64)]) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidParameter("discrete: no atoms".into()));
        }
        let mut a: Vec<(f64, f64)> = atoms.to_vec();
        for &(v, p) in &a {
            if !v.is_finite() || !(p > 0.0) {
                return Err(Error::InvalidParameter(format!("discrete: bad atom ({v}, {p})")));
            }
        }
        a.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(a.len());
        for (v, p) in a {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += p,
                _ => merged.push((v, p)),
            }
        }
        let total: f64 = merged.iter().map(|x| x.1).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "discrete: probabilities sum to {total}"
            )));
        }
        let mut cum = Vec::with_capacity(merged.len());
        let mut acc = 0.0;
        for &(_, p) in &merged {
            acc += p;
            cum.push(acc);
        }
        *cum.last_mut().unwrap() = 1.0;
        Ok(Self::Discrete { atoms: merged, cum })
    }

    pub fn degenerate(c: f64) -> Self {
        Self::discrete(&[(c, 1.0)]).unwrap()
    }

    /// Equal-weight atoms from a sample (sorted internally).
    pub fn empirical(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("empirical: no samples".into()));
        }
        let w = 1.0 / values.len() as f64;
        let atoms: Vec<(f64, f64)> = values.iter().map(|&v| (v, w)).collect();
        Self::discrete(&atoms)
    }

    pub fn affine(base: QuantileModel, scale: f64, shift: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::InvalidParameter(format!("affine: scale {scale} <= 0")));
        }
        Ok(Self::Affine { base: Box::new(base), scale, shift })
    }

    /// Left or right quantile; t outside [0, 1] is a domain error. The
    /// convention inf(empty) = +inf yields infinite values at the ends of
    /// unbounded supports.
    pub fn quantile(&self, t: f64, side: QSide) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!("t = {t} outside [0,1]")));
        }
        Ok(match side {
            QSide::Left => self.q_left(t, 1.0 - t),
            QSide::Right => self.q_right(t),
        })
    }

    /// Left quantile with the complement 1 - u supplied separately, so upper
    /// tails are resolved beyond f64 spacing around 1.
    pub(crate) fn q_left(&self, u: f64, omu: f64) -> f64 {
        if u <= 0.0 {
            return f64::NEG_INFINITY;
        }
        match self {
            Self::Uniform { lo, hi } => {
                if u >= 1.0 {
                    *hi
                } else {
                    lo + (hi - lo) * u
                }
            }
            Self::Normal { mean, sd } => {
                if omu <= 0.0 {
                    return f64::INFINITY;
                }
                let z = if u <= 0.5 { std_normal_quantile(u) } else { -std_normal_quantile(omu) };
                mean + sd * z
            }
            Self::Exponential { rate } => {
                if omu <= 0.0 {
                    return f64::INFINITY;
                }
                -omu.ln() / rate
            }
            Self::Pareto { shape } => {
                if omu <= 0.0 {
                    return f64::INFINITY;
                }
                omu.powf(-1.0 / shape)
            }
            Self::Discrete { atoms, cum } => {
                let i = cum.partition_point(|&c| c < u);
                atoms[i.min(atoms.len() - 1)].0
            }
            Self::Affine { base, scale, shift } => shift + scale * base.q_left(u, omu),
            Self::Concentrated { base, intervals, means } => {
                match intervals.find_half_open(u) {
                    Some(j) => means[j],
                    None => base.q_left(u, omu),
                }
            }
            Self::Extremal { env, center, norm, q, m, v, negate } => {
                // the derivative is read at 1 - u, i.e. at omu
                let d = env.deriv_with_complement(omu, u);
                let phi = phi_shape(d, *center, *norm, *q);
                m + v * if *negate { -phi } else { phi }
            }
        }
    }

    pub(crate) fn q_right(&self, u: f64) -> f64 {
        if u >= 1.0 {
            return f64::INFINITY;
        }
        match self {
            Self::Uniform { lo, hi } => {
                if u <= 0.0 {
                    *lo
                } else {
                    lo + (hi - lo) * u
                }
            }
            Self::Discrete { atoms, cum } => {
                let i = cum.partition_point(|&c| c <= u);
                atoms[i.min(atoms.len() - 1)].0
            }
            Self::Affine { base, scale, shift } => shift + scale * base.q_right(u),
            Self::Concentrated { base, intervals, means } => {
                match intervals.find_open_half(u) {
                    Some(j) => means[j],
                    None => base.q_right(u),
                }
            }
            Self::Extremal { env, center, norm, q, m, v, negate } => {
                // right-continuity in u needs the left-sided derivative at knots
                let omu = 1.0 - u;
                let d = env.deriv_left_with_complement(omu, u);
                let phi = phi_shape(d, *center, *norm, *q);
                m + v * if *negate { -phi } else { phi }
            }
            // continuous models: both quantiles agree except at 0 and 1
            _ => {
                if u <= 0.0 {
                    self.support_infimum()
                } else {
                    self.q_left(u, 1.0 - u)
                }
            }
        }
    }

    fn support_infimum(&self) -> f64 {
        match self {
            Self::Uniform { lo, .. } => *lo,
            Self::Normal { .. } => f64::NEG_INFINITY,
            Self::Exponential { .. } => 0.0,
            Self::Pareto { .. } => 1.0,
            Self::Affine { base, scale, shift } => shift + scale * base.support_infimum(),
            Self::Extremal { .. } => self.q_left(1e-300, 1.0),
            _ => unreachable!("handled by q_right"),
        }
    }

    /// Integral of the left quantile over (a, b), in closed form where available.
    pub fn integral_on(&self, a: f64, b: f64) -> Result<f64> {
        if !(0.0 <= a && a <= b && b <= 1.0) {
            return Err(Error::Domain(format!("({a}, {b}) not inside [0,1]")));
        }
        if a == b {
            return Ok(0.0);
        }
        match self {
            Self::Uniform { lo, hi } => Ok(lo * (b - a) + 0.5 * (hi - lo) * (b * b - a * a)),
            Self::Normal { mean, sd } => {
                let pa = if a == 0.0 { 0.0 } else { normal_pdf(std_normal_quantile(a)) };
                let pb = if b == 1.0 { 0.0 } else { normal_pdf(std_normal_quantile(b)) };
                Ok(mean * (b - a) + sd * (pa - pb))
            }
            Self::Exponential { rate } => {
                let g = |s: f64| if s == 0.0 { 0.0 } else { s - s * s.ln() };
                Ok((g(1.0 - a) - g(1.0 - b)) / rate)
            }
            Self::Pareto { shape } => {
                let e = 1.0 - 1.0 / shape;
                if b == 1.0 && e <= 0.0 {
                    return Err(Error::NonIntegrable { positive: true });
                }
                if e == 0.0 {
                    return Ok((1.0 - a).ln() - (1.0 - b).ln());
                }
                Ok(((1.0 - a).powf(e) - (1.0 - b).powf(e)) / e)
            }
            Self::Discrete { atoms, cum } => {
                let mut total = 0.0;
                let mut lo = 0.0f64;
                for (i, &(v, _)) in atoms.iter().enumerate() {
                    let hi = cum[i];
                    let ov = (hi.min(b) - lo.max(a)).max(0.0);
                    total += v * ov;
                    lo = hi;
                }
                Ok(total)
            }
            Self::Affine { base, scale, shift } => {
                Ok(shift * (b - a) + scale * base.integral_on(a, b)?)
            }
            Self::Concentrated { base, intervals, means } => {
                let mut total = 0.0;
                let mut pos = a;
                for (j, (ia, ib)) in intervals.iter().enumerate() {
                    if ib <= a || ia >= b {
                        continue;
                    }
                    let lo = ia.max(a);
                    let hi = ib.min(b);
                    if lo > pos {
                        total += base.integral_on(pos, lo)?;
                    }
                    total += means[j] * (hi - lo);
                    pos = hi;
                }
                if b > pos {
                    total += base.integral_on(pos, b)?;
                }
                Ok(total)
            }
            Self::Extremal { .. } => {
                let splits = self.split_levels();
                let q = tanh_sinh_split(
                    |u, fl, fh| {
                        let (u, omu) = stable_pair(u, fl, fh, a, b);
                        self.q_left(u, omu)
                    },
                    a,
                    b,
                    &splits,
                    1e-12,
                );
                if !q.converged {
                    return Err(Error::NonIntegrable { positive: q.value >= 0.0 });
                }
                Ok(q.value)
            }
        }
    }

    /// Conditional mean of the quantile over (a, b).
    pub fn mean_on(&self, a: f64, b: f64) -> Result<f64> {
        if !(a < b) {
            return Err(Error::Domain(format!("empty interval ({a}, {b})")));
        }
        Ok(self.integral_on(a, b)? / (b - a))
    }

    pub fn mean(&self) -> Result<f64> {
        match self {
            Self::Uniform { lo, hi } => Ok(0.5 * (lo + hi)),
            Self::Normal { mean, .. } => Ok(*mean),
            Self::Exponential { rate } => Ok(1.0 / rate),
            Self::Pareto { shape } => {
                if *shape <= 1.0 {
                    Err(Error::NonIntegrable { positive: true })
                } else {
                    Ok(shape / (shape - 1.0))
                }
            }
            Self::Discrete { atoms, .. } => Ok(atoms.iter().map(|&(v, p)| v * p).sum()),
            Self::Affine { base, scale, shift } => Ok(shift + scale * base.mean()?),
            // concentration is mean-preserving
            Self::Concentrated { base, .. } => base.mean(),
            Self::Extremal { m, .. } => Ok(*m),
        }
    }

    /// Central p-norm E[|X - m|^p]^(1/p).
    pub fn central_norm(&self, p: f64) -> Result<f64> {
        if !(p >= 1.0) {
            return Err(Error::InvalidParameter(format!("p = {p} < 1")));
        }
        let m = self.mean()?;
        if let Self::Discrete { atoms, .. } = self {
            let s: f64 = atoms.iter().map(|&(v, pr)| (v - m).abs().powf(p) * pr).sum();
            return Ok(s.powf(1.0 / p));
        }
        if p >= self.max_moment() {
            return Err(Error::NonIntegrable { positive: true });
        }
        // the nondecreasing quantile crosses its mean once; split there
        let mut splits = self.split_levels();
        let f = |u: f64| self.q_left(u, 1.0 - u) - m;
        if f(1e-12) < 0.0 && f(1.0 - 1e-12) > 0.0 {
            splits.push(bisect(f, 1e-12, 1.0 - 1e-12));
        }
        let q = tanh_sinh_split(
            |u, fl, fh| {
                let (u, omu) = stable_pair(u, fl, fh, 0.0, 1.0);
                (self.q_left(u, omu) - m).abs().powf(p)
            },
            0.0,
            1.0,
            &splits,
            1e-13,
        );
        if !q.converged {
            return Err(Error::NonIntegrable { positive: true });
        }
        Ok(q.value.max(0.0).powf(1.0 / p))
    }

    /// E[(X - k)+], the stop-loss transform, from the quantile.
    pub fn stop_loss(&self, k: f64) -> Result<f64> {
        if let Self::Discrete { atoms, .. } = self {
            return Ok(atoms.iter().map(|&(v, pr)| (v - k).max(0.0) * pr).sum());
        }
        let mut splits = self.split_levels();
        let f = |u: f64| self.q_left(u, 1.0 - u) - k;
        if f(1e-12) < 0.0 && f(1.0 - 1e-12) > 0.0 {
            splits.push(bisect(f, 1e-12, 1.0 - 1e-12));
        }
        let q = tanh_sinh_split(
            |u, fl, fh| {
                let (u, omu) = stable_pair(u, fl, fh, 0.0, 1.0);
                (self.q_left(u, omu) - k).max(0.0)
            },
            0.0,
            1.0,
            &splits,
            1e-13,
        );
        if !q.converged {
            return Err(Error::NonIntegrable { positive: true });
        }
        Ok(q.value)
    }

    /// The C-concentration F^C: quantile replaced on (a, b] by its conditional
    /// mean. Discrete models stay discrete; anything else wraps lazily.
    pub fn concentrate(&self, c: (f64, f64)) -> Result<Self> {
        let set = IntervalSet::new(vec![c])?;
        self.concentrate_multi(&set)
    }

    /// Simultaneous concentration over disjoint intervals; equals sequential
    /// application in any order.
    pub fn concentrate_multi(&self, intervals: &IntervalSet) -> Result<Self> {
        if intervals.is_empty() {
            return Ok(self.clone());
        }
        if let Self::Discrete { .. } = self {
            let mut cur = self.clone();
            for (a, b) in intervals.iter() {
                cur = cur.concentrate_discrete(a, b)?;
            }
            return Ok(cur);
        }
        let mut means = Vec::with_capacity(intervals.len());
        for (a, b) in intervals.iter() {
            means.push(self.mean_on(a, b)?);
        }
        Ok(Self::Concentrated {
            base: Box::new(self.clone()),
            intervals: intervals.clone(),
            means,
        })
    }

    /// Exact discrete concentration: the original cumulative levels and the
    /// cut points a, b are preserved bit-for-bit, so boundary quantiles stay
    /// on the correct side of the cut.
    fn concentrate_discrete(&self, a: f64, b: f64) -> Result<Self> {
        let (atoms, cum) = match self {
            Self::Discrete { atoms, cum } => (atoms, cum),
            _ => unreachable!(),
        };
        let mut bar = 0.0;
        let mut lo = 0.0f64;
        let mut inside: Option<f64> = None;
        let mut single = true;
        for (i, &(v, _)) in atoms.iter().enumerate() {
            let hi = cum[i];
            let overlap = (hi.min(b) - lo.max(a)).max(0.0);
            if overlap > 0.0 {
                single &= inside.is_none();
                inside = Some(v);
            }
            bar += v * overlap;
            lo = hi;
        }
        // a region covered by one atom concentrates to exactly that atom
        bar = if single { inside.unwrap_or(0.0) } else { bar / (b - a) };

        let mut vals: Vec<f64> = Vec::with_capacity(atoms.len() + 1);
        let mut cums: Vec<f64> = Vec::with_capacity(atoms.len() + 1);
        let push = |v: f64, c: f64, vals: &mut Vec<f64>, cums: &mut Vec<f64>| {
            if let (Some(lv), Some(lc)) = (vals.last().copied(), cums.last_mut()) {
                if c <= *lc {
                    return;
                }
                if lv == v {
                    *lc = c;
                    return;
                }
            }
            vals.push(v);
            cums.push(c);
        };
        let mut prev = 0.0f64;
        for (i, &(v, _)) in atoms.iter().enumerate() {
            let hi = cum[i];
            if prev < a {
                push(v, hi.min(a), &mut vals, &mut cums);
            }
            prev = hi;
        }
        push(bar, b, &mut vals, &mut cums);
        prev = 0.0;
        for (i, &(v, _)) in atoms.iter().enumerate() {
            let hi = cum[i];
            if hi > b {
                let _ = prev;
                push(v, hi, &mut vals, &mut cums);
            }
            prev = hi;
        }
        *cums.last_mut().unwrap() = 1.0;
        let pairs: Vec<(f64, f64)> = vals
            .iter()
            .zip(cums.iter())
            .scan(0.0, |acc, (&v, &c)| {
                let p = c - *acc;
                *acc = c;
                Some((v, p))
            })
            .collect();
        // rebuild through the validating constructor, then restore exact levels
        let mut model = Self::discrete(&pairs)?;
        if let Self::Discrete { atoms: new_atoms, cum: new_cum } = &mut model {
            if new_atoms.len() == cums.len() {
                new_cum.clone_from(&cums);
            }
        }
        Ok(model)
    }

    /// Quantile levels at which evaluation kinks or jumps; integrators split there.
    pub fn split_levels(&self) -> Vec<f64> {
        match self {
            Self::Discrete { cum, .. } => cum[..cum.len() - 1].to_vec(),
            Self::Affine { base, .. } => base.split_levels(),
            Self::Concentrated { base, intervals, .. } => {
                let mut v = base.split_levels();
                for (a, b) in intervals.iter() {
                    v.push(a);
                    v.push(b);
                }
                v
            }
            Self::Extremal { env, .. } => {
                let mut v: Vec<f64> = env
                    .pieces()
                    .iter()
                    .flat_map(|p| [1.0 - p.lo, 1.0 - p.hi])
                    .filter(|t| *t > 0.0 && *t < 1.0)
                    .collect();
                v.sort_by(|a, b| a.partial_cmp(b).unwrap());
                v
            }
            _ => Vec::new(),
        }
    }

    /// Supremum of p with finite p-th moment (exclusive for power tails).
    pub fn max_moment(&self) -> f64 {
        match (self.lower_tail(), self.upper_tail()) {
            (Tail::Power(a), Tail::Power(b)) => a.min(b),
            (Tail::Power(a), _) | (_, Tail::Power(a)) => a,
            _ => f64::INFINITY,
        }
    }

    pub fn upper_tail(&self) -> Tail {
        match self {
            Self::Uniform { .. } | Self::Discrete { .. } => Tail::Bounded,
            Self::Normal { .. } | Self::Exponential { .. } => Tail::Light,
            Self::Pareto { shape } => Tail::Power(*shape),
            Self::Affine { base, .. } => base.upper_tail(),
            Self::Concentrated { base, intervals, .. } => {
                if intervals.iter().any(|(_, b)| b >= 1.0) {
                    Tail::Bounded
                } else {
                    base.upper_tail()
                }
            }
            Self::Extremal { env, q, .. } => extremal_tail(env, *q, true),
        }
    }

    pub fn lower_tail(&self) -> Tail {
        match self {
            Self::Uniform { .. } | Self::Discrete { .. } => Tail::Bounded,
            Self::Exponential { .. } | Self::Pareto { .. } => Tail::Bounded,
            Self::Normal { .. } => Tail::Light,
            Self::Affine { base, .. } => base.lower_tail(),
            Self::Concentrated { base, intervals, .. } => {
                if intervals.iter().any(|(a, _)| a <= 0.0) {
                    Tail::Bounded
                } else {
                    base.lower_tail()
                }
            }
            Self::Extremal { env, q, .. } => extremal_tail(env, *q, false),
        }
    }
}

/// phi-shape transform of a derivative value: sign(d-c) |d-c|^(q-1) norm^(1-q).
fn phi_shape(d: f64, c: f64, norm: f64, q: f64) -> f64 {
    if d == c || norm == 0.0 {
        return 0.0;
    }
    let g = d - c;
    g.signum() * g.abs().powf(q - 1.0) * norm.powf(1.0 - q)
}

/// Tail of the extremal quantile: a TK-singular envelope end maps to a power tail.
fn extremal_tail(env: &Distortion, q: f64, upper: bool) -> Tail {
    // the upper quantile tail (u -> 1) reads the envelope derivative near 0
    let piece = if upper { env.pieces().first() } else { env.pieces().last() };
    match piece.and_then(|p| p.f.min_tk_gamma()) {
        Some(g) if g < 1.0 => Tail::Power(1.0 / ((1.0 - g) * (q - 1.0))),
        _ => Tail::Bounded,
    }
}

/// Reconstruct (u, 1-u) from a quadrature node over [a, b] inside [0, 1],
/// using the endpoint distances so both tails stay resolved.
#[inline]
pub(crate) fn stable_pair(u: f64, from_lo: f64, from_hi: f64, a: f64, b: f64) -> (f64, f64) {
    let uu = if u < 0.5 { a + from_lo } else { u };
    let omu = if u < 0.5 { 1.0 - uu } else { (1.0 - b) + from_hi };
    (uu, omu)
}

/// JSON-facing model descriptor mirroring the constructors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum QDescriptor {
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, sd: f64 },
    Exponential { rate: f64 },
    Pareto { shape: f64 },
    Lomax { shape: f64 },
    Discrete { atoms: Vec<(f64, f64)> },
    Empirical { values: Vec<f64> },
    Affine { scale: f64, shift: f64, of: Box<QDescriptor> },
}

impl QDescriptor {
    pub fn build(&self) -> Result<QuantileModel> {
        match self {
            Self::Uniform { lo, hi } => QuantileModel::uniform(*lo, *hi),
            Self::Normal { mean, sd } => QuantileModel::normal(*mean, *sd),
            Self::Exponential { rate } => QuantileModel::exponential(*rate),
            Self::Pareto { shape } => QuantileModel::pareto(*shape),
            Self::Lomax { shape } => QuantileModel::lomax(*shape),
            Self::Discrete { atoms } => QuantileModel::discrete(atoms),
            Self::Empirical { values } => QuantileModel::empirical(values),
            Self::Affine { scale, shift, of } => QuantileModel::affine(of.build()?, *scale, *shift),
        }
    }
}
