//! Distortion functions: bounded-variation weight transforms h on [0, 1] with
//! h(0) = 0, represented symbolically as analytic pieces plus explicit jumps.
//!
//! The representation is exact rather than sampled: envelope construction and
//! q-norm integrals need precise jump locations and an evaluable derivative,
//! and sampling loses jumps. Inverse-S ("TK") terms carry their parameter and
//! expose an analytic derivative; evaluation near the endpoints goes through
//! the complement `1 - t` supplied by the caller so that the t^(g-1) and
//! (1-t)^(g-1) singularities are computed without cancellation.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Coalescing tolerance for knot and jump locations.
pub(crate) const LOC_TOL: f64 = 1e-12;

/// One inverse-S-shaped weighting term `coef * t^g / (t^g + (1-t)^g)^(1/g)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TkTerm {
    pub coef: f64,
    pub gamma: f64,
}

/// A function that is analytic on a subinterval: polynomial plus TK terms.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Smooth {
    /// Polynomial coefficients in the global variable t: poly[k] * t^k.
    pub poly: Vec<f64>,
    /// TK terms, each with gamma in (0, 1); gamma = 1 is folded into `poly`.
    pub tk: Vec<TkTerm>,
}

fn tk_value(t: f64, omt: f64, g: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if omt <= 0.0 {
        return 1.0;
    }
    let tg = t.powf(g);
    let og = omt.powf(g);
    let d = tg + og;
    tg * d.powf(-1.0 / g)
}

fn tk_deriv(t: f64, omt: f64, g: f64) -> f64 {
    if t <= 0.0 || omt <= 0.0 {
        return f64::INFINITY;
    }
    let tg = t.powf(g);
    let og = omt.powf(g);
    let d = tg + og;
    // h' = D^(-1/g-1) [ (g-1) t^(2g-1) + g t^(g-1) (1-t)^g + t^g (1-t)^(g-1) ]
    let bracket = (g - 1.0) * t.powf(2.0 * g - 1.0)
        + g * t.powf(g - 1.0) * og
        + tg * omt.powf(g - 1.0);
    d.powf(-1.0 / g - 1.0) * bracket
}

impl Smooth {
    pub fn constant(c: f64) -> Self {
        Self { poly: vec![c], tk: Vec::new() }
    }

    pub fn linear(c0: f64, c1: f64) -> Self {
        Self { poly: vec![c0, c1], tk: Vec::new() }
    }

    pub fn tk_curve(gamma: f64) -> Self {
        if gamma == 1.0 {
            Self::linear(0.0, 1.0)
        } else {
            Self { poly: Vec::new(), tk: vec![TkTerm { coef: 1.0, gamma }] }
        }
    }

    /// Line through (x0, y0) and (x1, y1).
    pub fn chord(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        let s = (y1 - y0) / (x1 - x0);
        Self::linear(y0 - s * x0, s)
    }

    pub fn value(&self, t: f64, omt: f64) -> f64 {
        let mut v = 0.0;
        for &c in self.poly.iter().rev() {
            v = v * t + c;
        }
        for term in &self.tk {
            v += term.coef * tk_value(t, omt, term.gamma);
        }
        v
    }

    /// Derivative; returns a signed infinity at t = 0 or t = 1 when TK terms
    /// make the slope unbounded there.
    pub fn deriv(&self, t: f64, omt: f64) -> f64 {
        if !self.tk.is_empty() && (t <= 0.0 || omt <= 0.0) {
            // dominated by the smallest-gamma term at the singular endpoint
            let lead = self
                .tk
                .iter()
                .min_by(|a, b| a.gamma.partial_cmp(&b.gamma).unwrap())
                .unwrap();
            return if lead.coef >= 0.0 { f64::INFINITY } else { f64::NEG_INFINITY };
        }
        let mut v = 0.0;
        for (k, &c) in self.poly.iter().enumerate().skip(1).rev() {
            v = v * t + c * k as f64;
        }
        for term in &self.tk {
            v += term.coef * tk_deriv(t, omt, term.gamma);
        }
        v
    }

    pub fn is_linear(&self) -> bool {
        self.tk.is_empty() && self.poly.len() <= 2
    }

    pub fn is_constant(&self) -> bool {
        self.tk.is_empty() && self.poly.len() <= 1
    }

    /// Coefficient of the term dominating the slope at a singular endpoint
    /// (the smallest-gamma TK coefficient, else the linear slope).
    pub fn lead_coefficient(&self) -> f64 {
        match self.tk.iter().min_by(|a, b| a.gamma.partial_cmp(&b.gamma).unwrap()) {
            Some(t) => t.coef,
            None => self.poly.get(1).copied().unwrap_or(0.0),
        }
    }

    /// Smallest TK gamma, governing the endpoint slope singularity strength.
    pub fn min_tk_gamma(&self) -> Option<f64> {
        self.tk.iter().map(|t| t.gamma).min_by(|a, b| a.partial_cmp(b).unwrap())
    }

    fn add_scaled(&mut self, other: &Smooth, k: f64) {
        if self.poly.len() < other.poly.len() {
            self.poly.resize(other.poly.len(), 0.0);
        }
        for (i, &c) in other.poly.iter().enumerate() {
            self.poly[i] += k * c;
        }
        for term in &other.tk {
            match self.tk.iter_mut().find(|t| (t.gamma - term.gamma).abs() <= LOC_TOL) {
                Some(t) => t.coef += k * term.coef,
                None => self.tk.push(TkTerm { coef: k * term.coef, gamma: term.gamma }),
            }
        }
        self.normalize();
    }

    fn normalize(&mut self) {
        self.tk.retain(|t| t.coef != 0.0);
        self.tk.sort_by(|a, b| a.gamma.partial_cmp(&b.gamma).unwrap());
        while self.poly.last() == Some(&0.0) {
            self.poly.pop();
        }
    }

    fn scaled(&self, k: f64) -> Smooth {
        let mut out = Smooth::default();
        out.add_scaled(self, k);
        out
    }
}

/// A maximal interval on which h is analytic.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub f: Smooth,
}

/// A discontinuity record: one-sided limits and the point value at `at`.
///
/// The limits equal the adjacent pieces' continuous extensions; only the point
/// value is free. The conventions h(0-) = h(0) and h(1+) = h(1) are encoded by
/// `left == point` at 0 and `right == point` at 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub at: f64,
    pub left: f64,
    pub point: f64,
    pub right: f64,
}

impl Jump {
    fn is_trivial(&self) -> bool {
        self.left == self.point && self.point == self.right
    }
}

/// Evaluation side: the point value or a one-sided limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Point,
    Left,
    Right,
}

/// The sets J+, J-, J0 of interior discontinuities, classified on the
/// upper-semicontinuous modification.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct JumpClassification {
    /// usc value agrees with the right limit only.
    pub j_plus: Vec<f64>,
    /// usc value agrees with the left limit only.
    pub j_minus: Vec<f64>,
    /// usc value agrees with neither limit.
    pub j_zero: Vec<f64>,
}

/// A distortion function h on [0, 1] with h(0) = 0 and finitely many jumps.
#[derive(Debug, Clone, PartialEq)]
pub struct Distortion {
    pieces: Vec<Piece>,
    jumps: Vec<Jump>,
    h1: f64,
    descriptor: Option<Descriptor>,
}

impl Distortion {
    /// Assembles a distortion from pieces and jump records, validating the
    /// representation invariants.
    pub fn from_parts(pieces: Vec<Piece>, jumps: Vec<Jump>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidParameter("no pieces".into()));
        }
        if pieces[0].lo != 0.0 || pieces.last().unwrap().hi != 1.0 {
            return Err(Error::InvalidParameter("pieces must cover [0,1]".into()));
        }
        for p in &pieces {
            if !(p.lo < p.hi) {
                return Err(Error::InvalidParameter("empty piece".into()));
            }
        }
        for w in pieces.windows(2) {
            if (w[0].hi - w[1].lo).abs() > LOC_TOL {
                return Err(Error::InvalidParameter("pieces must be contiguous".into()));
            }
        }
        let mut jumps: Vec<Jump> = jumps.into_iter().filter(|j| !j.is_trivial()).collect();
        jumps.sort_by(|a, b| a.at.partial_cmp(&b.at).unwrap());
        for w in jumps.windows(2) {
            if w[1].at - w[0].at <= LOC_TOL {
                return Err(Error::InvalidParameter("jump locations must be distinct".into()));
            }
        }
        let mut d = Self { pieces, jumps, h1: 0.0, descriptor: None };
        let h0 = d.raw_eval(0.0, Side::Point);
        if h0 != 0.0 {
            return Err(Error::InvalidParameter(format!("h(0) = {h0}, must be 0")));
        }
        d.h1 = d.raw_eval(1.0, Side::Point);
        Ok(d)
    }

    fn with_descriptor(mut self, d: Descriptor) -> Self {
        self.descriptor = Some(d);
        self
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    pub fn value_at_one(&self) -> f64 {
        self.h1
    }

    pub fn descriptor(&self) -> Option<&Descriptor> {
        self.descriptor.as_ref()
    }

    /// h(t) = t, the expectation riskmetric.
    pub fn linear() -> Self {
        Self::from_parts(vec![Piece { lo: 0.0, hi: 1.0, f: Smooth::linear(0.0, 1.0) }], vec![])
            .unwrap()
            .with_descriptor(Descriptor::Linear)
    }

    /// h = 1 on (1-alpha, 1], the VaR_alpha distortion (left quantile).
    pub fn var(alpha: f64) -> Result<Self> {
        let k = check_unit_open("alpha", alpha)?;
        let d = Self::two_level(k, 0.0, 1.0)?;
        Ok(d.with_descriptor(Descriptor::Var { alpha }))
    }

    /// h = 1 on [1-alpha, 1], the VaR+_alpha distortion (right quantile).
    pub fn var_plus(alpha: f64) -> Result<Self> {
        let k = check_unit_open("alpha", alpha)?;
        let d = Self::two_level(k, 1.0, 1.0)?;
        Ok(d.with_descriptor(Descriptor::VarPlus { alpha }))
    }

    fn two_level(at: f64, point: f64, right: f64) -> Result<Self> {
        Self::from_parts(
            vec![
                Piece { lo: 0.0, hi: at, f: Smooth::constant(0.0) },
                Piece { lo: at, hi: 1.0, f: Smooth::constant(1.0) },
            ],
            vec![Jump { at, left: 0.0, point, right }],
        )
    }

    /// h(t) = (t / (1-alpha)) /\ 1, the ES_alpha distortion.
    pub fn es(alpha: f64) -> Result<Self> {
        let k = check_unit_open("alpha", alpha)?;
        let d = Self::from_parts(
            vec![
                Piece { lo: 0.0, hi: k, f: Smooth::linear(0.0, 1.0 / k) },
                Piece { lo: k, hi: 1.0, f: Smooth::constant(1.0) },
            ],
            vec![],
        )?;
        Ok(d.with_descriptor(Descriptor::Es { alpha }))
    }

    /// h(t) = ((t - 1 + alpha) / alpha) \/ 0, the lower-tail ES distortion.
    pub fn es_left(alpha: f64) -> Result<Self> {
        let k = check_unit_open("alpha", alpha)?;
        let d = Self::from_parts(
            vec![
                Piece { lo: 0.0, hi: k, f: Smooth::constant(0.0) },
                Piece { lo: k, hi: 1.0, f: Smooth::linear(-k / alpha, 1.0 / alpha) },
            ],
            vec![],
        )?;
        Ok(d.with_descriptor(Descriptor::EsLeft { alpha }))
    }

    /// The inverse-S weighting curve with parameter gamma in (0, 1].
    pub fn tk(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::InvalidParameter(format!("tk gamma {gamma} not in (0,1]")));
        }
        let d = Self::from_parts(
            vec![Piece { lo: 0.0, hi: 1.0, f: Smooth::tk_curve(gamma) }],
            vec![],
        )?;
        Ok(d.with_descriptor(Descriptor::Tk { gamma }))
    }

    /// h = 1 on [1-alpha, alpha], the inter-quantile-range distortion.
    pub fn inter_quantile(alpha: f64) -> Result<Self> {
        if !(alpha >= 0.5 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("iqr alpha {alpha} not in [0.5,1)")));
        }
        let lo = 1.0 - alpha;
        let d = if alpha == 0.5 {
            Self::from_parts(
                vec![
                    Piece { lo: 0.0, hi: 0.5, f: Smooth::constant(0.0) },
                    Piece { lo: 0.5, hi: 1.0, f: Smooth::constant(0.0) },
                ],
                vec![Jump { at: 0.5, left: 0.0, point: 1.0, right: 0.0 }],
            )?
        } else {
            Self::from_parts(
                vec![
                    Piece { lo: 0.0, hi: lo, f: Smooth::constant(0.0) },
                    Piece { lo, hi: alpha, f: Smooth::constant(1.0) },
                    Piece { lo: alpha, hi: 1.0, f: Smooth::constant(0.0) },
                ],
                vec![
                    Jump { at: lo, left: 0.0, point: 1.0, right: 1.0 },
                    Jump { at: alpha, left: 1.0, point: 1.0, right: 0.0 },
                ],
            )?
        };
        Ok(d.with_descriptor(Descriptor::Iqr { alpha }))
    }

    /// Continuous piecewise-linear distortion through the given knots.
    pub fn piecewise_linear(knots: &[f64], values: &[f64]) -> Result<Self> {
        if knots.len() != values.len() || knots.len() < 2 {
            return Err(Error::InvalidParameter("need matching knots/values, length >= 2".into()));
        }
        if knots[0] != 0.0 || *knots.last().unwrap() != 1.0 || values[0] != 0.0 {
            return Err(Error::InvalidParameter(
                "knots must span [0,1] and h(0) must be 0".into(),
            ));
        }
        let mut pieces = Vec::new();
        for i in 0..knots.len() - 1 {
            if !(knots[i] < knots[i + 1]) {
                return Err(Error::InvalidParameter("knots must increase".into()));
            }
            pieces.push(Piece {
                lo: knots[i],
                hi: knots[i + 1],
                f: Smooth::chord(knots[i], values[i], knots[i + 1], values[i + 1]),
            });
        }
        let d = Self::from_parts(pieces, vec![])?;
        Ok(d.with_descriptor(Descriptor::Piecewise {
            knots: knots.to_vec(),
            values: values.to_vec(),
        }))
    }

    fn jump_at(&self, t: f64) -> Option<&Jump> {
        self.jumps.iter().find(|j| (j.at - t).abs() <= LOC_TOL)
    }

    /// Index of the piece used for the one-sided value at `t`. Jump-location
    /// tolerance lives in `jump_at`; piece lookup is exact so that integrand
    /// discontinuities stay aligned with the declared knots.
    fn piece_index(&self, t: f64, from_left: bool) -> usize {
        let mut idx = self
            .pieces
            .partition_point(|p| p.hi < t)
            .min(self.pieces.len() - 1);
        // at a shared knot, choose the side requested
        if from_left && idx > 0 && self.pieces[idx].lo == t {
            idx -= 1;
        }
        if !from_left && self.pieces[idx].hi == t && idx + 1 < self.pieces.len() {
            idx += 1;
        }
        idx
    }

    fn limit(&self, t: f64, from_left: bool) -> f64 {
        let p = &self.pieces[self.piece_index(t, from_left)];
        p.f.value(t, 1.0 - t)
    }

    fn raw_eval(&self, t: f64, side: Side) -> f64 {
        match side {
            Side::Point => match self.jump_at(t) {
                Some(j) => j.point,
                None => self.limit(t, t == 1.0),
            },
            Side::Left => {
                if t == 0.0 {
                    return self.raw_eval(0.0, Side::Point);
                }
                match self.jump_at(t) {
                    Some(j) => j.left,
                    None => self.limit(t, true),
                }
            }
            Side::Right => {
                if t == 1.0 {
                    return self.raw_eval(1.0, Side::Point);
                }
                match self.jump_at(t) {
                    Some(j) => j.right,
                    None => self.limit(t, false),
                }
            }
        }
    }

    /// h(t), h(t-), or h(t+); t outside [0, 1] is a domain error.
    pub fn eval(&self, t: f64, side: Side) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!("t = {t} outside [0,1]")));
        }
        Ok(self.raw_eval(t, side))
    }

    /// Derivative of the absolutely continuous part at an interior point.
    pub fn deriv(&self, t: f64) -> f64 {
        self.deriv_with_complement(t, 1.0 - t)
    }

    /// Derivative with `1 - t` supplied separately for endpoint-accurate
    /// evaluation. At shared knots the right piece is used (left at t = 1), so
    /// `t -> deriv(1 - t)` is left-continuous.
    pub fn deriv_with_complement(&self, t: f64, omt: f64) -> f64 {
        let p = &self.pieces[self.piece_index(t, t == 1.0)];
        p.f.deriv(t, omt)
    }

    /// Left-sided derivative at shared knots (right at t = 0), making
    /// `t -> deriv(1 - t)` right-continuous.
    pub fn deriv_left_with_complement(&self, t: f64, omt: f64) -> f64 {
        let p = &self.pieces[self.piece_index(t, t != 0.0)];
        p.f.deriv(t, omt)
    }

    /// Interior discontinuity locations with their classification.
    pub fn jump_set(&self) -> (Vec<f64>, JumpClassification) {
        let mut locs = Vec::new();
        let mut cls = JumpClassification::default();
        for j in &self.jumps {
            if j.at <= 0.0 || j.at >= 1.0 {
                continue;
            }
            locs.push(j.at);
            let usc = j.left.max(j.point).max(j.right);
            let eq_l = usc == j.left;
            let eq_r = usc == j.right;
            match (eq_l, eq_r) {
                (false, true) => cls.j_plus.push(j.at),
                (true, false) => cls.j_minus.push(j.at),
                (false, false) => cls.j_zero.push(j.at),
                (true, true) => {} // removable: the usc modification is continuous here
            }
        }
        (locs, cls)
    }

    /// The upper semicontinuous modification: each interior point value is
    /// raised to the maximum of the point value and both one-sided limits.
    /// Values at 0 and 1 are never modified.
    pub fn usc_modification(&self) -> Self {
        self.modified(true)
    }

    /// The lower semicontinuous modification (used by infimum problems).
    pub fn lsc_modification(&self) -> Self {
        self.modified(false)
    }

    fn modified(&self, upper: bool) -> Self {
        let mut jumps = Vec::new();
        for j in &self.jumps {
            let point = if j.at > 0.0 && j.at < 1.0 {
                if upper {
                    j.left.max(j.point).max(j.right)
                } else {
                    j.left.min(j.point).min(j.right)
                }
            } else {
                j.point
            };
            let nj = Jump { point, ..*j };
            if !nj.is_trivial() {
                jumps.push(nj);
            }
        }
        let mut d = Self {
            pieces: self.pieces.clone(),
            jumps,
            h1: self.h1,
            descriptor: None,
        };
        d.descriptor = self.descriptor.clone();
        d
    }

    /// Whether h equals its upper semicontinuous modification.
    pub fn is_usc(&self) -> bool {
        self.jumps
            .iter()
            .filter(|j| j.at > 0.0 && j.at < 1.0)
            .all(|j| j.point == j.left.max(j.point).max(j.right))
    }

    /// Whether h equals its lower semicontinuous modification.
    pub fn is_lsc(&self) -> bool {
        self.jumps
            .iter()
            .filter(|j| j.at > 0.0 && j.at < 1.0)
            .all(|j| j.point == j.left.min(j.point).min(j.right))
    }

    pub fn is_continuous(&self) -> bool {
        self.jumps.is_empty()
    }

    /// Pointwise combination k1 * h1 + k2 * h2 with merged knots and jumps.
    fn binary(h1: &Self, h2: &Self, k1: f64, k2: f64) -> Self {
        let mut knots: Vec<f64> = h1
            .pieces
            .iter()
            .chain(h2.pieces.iter())
            .flat_map(|p| [p.lo, p.hi])
            .collect();
        knots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        knots.dedup_by(|a, b| (*a - *b).abs() <= LOC_TOL);
        let mut pieces = Vec::new();
        for w in knots.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let mut f = h1.pieces[h1.piece_index(mid, false)].f.scaled(k1);
            f.add_scaled(&h2.pieces[h2.piece_index(mid, false)].f, k2);
            pieces.push(Piece { lo: w[0], hi: w[1], f });
        }
        let mut locs: Vec<f64> = h1.jumps.iter().chain(h2.jumps.iter()).map(|j| j.at).collect();
        locs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        locs.dedup_by(|a, b| (*a - *b).abs() <= LOC_TOL);
        let jumps = locs
            .into_iter()
            .map(|at| Jump {
                at,
                left: k1 * h1.raw_eval(at, Side::Left) + k2 * h2.raw_eval(at, Side::Left),
                point: k1 * h1.raw_eval(at, Side::Point) + k2 * h2.raw_eval(at, Side::Point),
                right: k1 * h1.raw_eval(at, Side::Right) + k2 * h2.raw_eval(at, Side::Right),
            })
            .collect();
        Self::from_parts(pieces, jumps).expect("combination preserves invariants")
    }

    pub fn difference(&self, other: &Self) -> Self {
        let mut d = Self::binary(self, other, 1.0, -1.0);
        d.descriptor = match (self.descriptor.clone(), other.descriptor.clone()) {
            (Some(a), Some(b)) => {
                Some(Descriptor::Difference { left: Box::new(a), right: Box::new(b) })
            }
            _ => None,
        };
        d
    }

    pub fn sum(&self, other: &Self) -> Self {
        let mut d = Self::binary(self, other, 1.0, 1.0);
        d.descriptor = match (self.descriptor.clone(), other.descriptor.clone()) {
            (Some(a), Some(b)) => Some(Descriptor::Sum { left: Box::new(a), right: Box::new(b) }),
            _ => None,
        };
        d
    }

    /// k * h; negation is scale(-1) and implements -rho_h = rho_{-h}.
    pub fn scale(&self, k: f64) -> Self {
        let pieces = self
            .pieces
            .iter()
            .map(|p| Piece { lo: p.lo, hi: p.hi, f: p.f.scaled(k) })
            .collect();
        let jumps = self
            .jumps
            .iter()
            .map(|j| Jump { at: j.at, left: k * j.left, point: k * j.point, right: k * j.right })
            .filter(|j| !j.is_trivial())
            .collect();
        let mut d = Self::from_parts(pieces, jumps).expect("scaling preserves invariants");
        d.descriptor = self.descriptor.clone().map(|of| {
            if k == -1.0 {
                Descriptor::Negate { of: Box::new(of) }
            } else {
                Descriptor::Scale { k, of: Box::new(of) }
            }
        });
        d
    }

    pub fn negate(&self) -> Self {
        self.scale(-1.0)
    }

    /// Approximate total variation (pieces sampled, jumps exact).
    pub fn total_variation(&self, samples_per_piece: usize) -> f64 {
        let mut tv = 0.0;
        for p in &self.pieces {
            let mut prev = p.f.value(p.lo, 1.0 - p.lo);
            for i in 1..=samples_per_piece {
                let t = p.lo + (p.hi - p.lo) * i as f64 / samples_per_piece as f64;
                let v = p.f.value(t, 1.0 - t);
                tv += (v - prev).abs();
                prev = v;
            }
        }
        for j in &self.jumps {
            tv += (j.point - j.left).abs() + (j.right - j.point).abs();
        }
        tv
    }

    /// Concavity check: no interior discontinuities, non-increasing derivative
    /// within each piece, and non-increasing slope across knots. Boundary jumps
    /// that concave functions admit (up at 0, down at 1) are allowed.
    pub fn is_concave(&self, tol: f64) -> bool {
        for j in &self.jumps {
            if j.at > 0.0 && j.at < 1.0 {
                return false;
            }
            if j.at == 0.0 && j.right < j.point - tol {
                return false;
            }
            if j.at == 1.0 && j.left < j.point - tol {
                return false;
            }
        }
        let mut prev = f64::INFINITY;
        for p in &self.pieces {
            let samples = 33;
            for i in 0..=samples {
                let t = p.lo + (p.hi - p.lo) * i as f64 / samples as f64;
                let t = t.clamp(p.lo + 1e-13, p.hi - 1e-13);
                let d = p.f.deriv(t, 1.0 - t);
                if d > prev + tol {
                    return false;
                }
                prev = d;
            }
        }
        true
    }
}

fn check_unit_open(name: &str, x: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::InvalidParameter(format!("{name} = {x} not in (0,1)")));
    }
    Ok(1.0 - x)
}

/// JSON-facing constructor descriptor; round-trips parameters bit-exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Descriptor {
    Tk { gamma: f64 },
    Var { alpha: f64 },
    VarPlus { alpha: f64 },
    Es { alpha: f64 },
    EsLeft { alpha: f64 },
    Iqr { alpha: f64 },
    Linear,
    Difference { left: Box<Descriptor>, right: Box<Descriptor> },
    Sum { left: Box<Descriptor>, right: Box<Descriptor> },
    Scale { k: f64, of: Box<Descriptor> },
    Negate { of: Box<Descriptor> },
    Piecewise { knots: Vec<f64>, values: Vec<f64> },
}

impl Descriptor {
    pub fn build(&self) -> Result<Distortion> {
        match self {
            Descriptor::Tk { gamma } => Distortion::tk(*gamma),
            Descriptor::Var { alpha } => Distortion::var(*alpha),
            Descriptor::VarPlus { alpha } => Distortion::var_plus(*alpha),
            Descriptor::Es { alpha } => Distortion::es(*alpha),
            Descriptor::EsLeft { alpha } => Distortion::es_left(*alpha),
            Descriptor::Iqr { alpha } => Distortion::inter_quantile(*alpha),
            Descriptor::Linear => Ok(Distortion::linear()),
            Descriptor::Difference { left, right } => Ok(left.build()?.difference(&right.build()?)),
            Descriptor::Sum { left, right } => Ok(left.build()?.sum(&right.build()?)),
            Descriptor::Scale { k, of } => Ok(of.build()?.scale(*k)),
            Descriptor::Negate { of } => Ok(of.build()?.negate()),
            Descriptor::Piecewise { knots, values } => Distortion::piecewise_linear(knots, values),
        }
    }
}
