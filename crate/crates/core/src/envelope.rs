//! Concave and convex envelopes of distortion functions, with the divergence
//! interval set on which the envelope is linear.
//!
//! The envelope of the usc modification is computed from an upper hull over
//! exact knot/jump values plus dense samples of the smooth arcs, then bridge
//! endpoints that land inside a smooth arc are refined by solving the tangency
//! equation. The result is symbolic: contact regions reuse the original
//! analytic pieces, bridges become exact linear pieces. A plain dense-grid hull
//! stays in the test suite as the independent oracle.

use crate::distortion::{Distortion, Jump, Piece, Side, Smooth};
use crate::error::{Error, Result};
use crate::interval::IntervalSet;
use crate::numerics::bisect;

/// Divergence intervals shorter than this are treated as numerical noise.
const MIN_DIVERGENCE_LEN: f64 = 1e-9;
/// Pointwise tolerance for "envelope equals the function here".
const CONTACT_TOL: f64 = 1e-9;

/// One maximal interval of the envelope, flagged when the envelope is linear on it.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct EnvelopeSegment {
    pub lo: f64,
    pub hi: f64,
    pub linear: bool,
}

/// A concave (or convex) envelope together with where it departs from the function.
#[derive(Debug, Clone)]
pub struct EnvelopeResult {
    /// The envelope as a distortion function in its own right.
    pub envelope: Distortion,
    /// Maximal open intervals of (0,1) where the usc/lsc modification differs
    /// from the envelope; the envelope is linear on each.
    pub divergence: IntervalSet,
    /// The reflected set {(1-b, 1-a)}: the intervals on which probability mass
    /// must be concentrated to close the gap between rho_h and rho_{h*}.
    pub i_h: IntervalSet,
    /// Interval decomposition of the envelope with linearity flags.
    pub segments: Vec<EnvelopeSegment>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Support {
    Exact,
    /// Interior sample of a smooth piece: (piece index, sample ordinal).
    Arc(usize, usize),
}

#[derive(Debug, Clone, Copy)]
struct Pt {
    x: f64,
    y: f64,
    kind: Support,
}

/// The smallest concave function in H dominating h, h* = (h-hat)*.
pub fn concave_envelope(h: &Distortion) -> Result<EnvelopeResult> {
    let hh = h.usc_modification();
    let pts = support_points(&hh);
    let mut hull = upper_hull(&pts);
    refine_bridges(&hh, &mut hull);
    assemble(h, &hh, &hull)
}

/// The largest convex minorant, computed as -(-h)*.
pub fn convex_envelope(h: &Distortion) -> Result<EnvelopeResult> {
    let r = concave_envelope(&h.negate())?;
    Ok(EnvelopeResult {
        envelope: r.envelope.negate(),
        i_h: r.divergence.reflect(),
        divergence: r.divergence,
        segments: r.segments,
    })
}

/// Tangency point t0 of the inverse-S curve: the chord from (t0, h(t0)) to
/// (1, 1) has slope h'(t0), so the concave envelope is h on [0, t0] and linear
/// on [t0, 1] (divergence (t0, 1), reflected set {(0, 1 - t0)}).
pub fn tk_tangency(gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Domain(format!("gamma = {gamma} not in (0,1)")));
    }
    let f = Smooth::tk_curve(gamma);
    let psi = |t: f64| {
        let omt = 1.0 - t;
        f.deriv(t, omt) * omt - (1.0 - f.value(t, omt))
    };
    Ok(bisect(psi, 1e-12, 1.0 - 1e-9))
}

fn support_points(hh: &Distortion) -> Vec<Pt> {
    let mut pts: Vec<Pt> = Vec::new();
    // boundary anchors: concave majorants may jump up at 0 and down at 1, so
    // the hull on (0,1) is anchored at the larger of the value and the limit
    let r0 = hh.eval(0.0, Side::Right).unwrap();
    pts.push(Pt { x: 0.0, y: r0.max(0.0), kind: Support::Exact });
    let l1 = hh.eval(1.0, Side::Left).unwrap();
    let h1 = hh.value_at_one();
    pts.push(Pt { x: 1.0, y: l1.max(h1), kind: Support::Exact });

    for (pi, p) in hh.pieces().iter().enumerate() {
        let len = p.hi - p.lo;
        pts.push(Pt { x: p.lo, y: p.f.value(p.lo, 1.0 - p.lo), kind: Support::Exact });
        pts.push(Pt { x: p.hi, y: p.f.value(p.hi, 1.0 - p.hi), kind: Support::Exact });
        if p.f.is_linear() {
            continue;
        }
        let mut xs: Vec<f64> = Vec::with_capacity(220);
        for i in 1..128 {
            xs.push(p.lo + len * i as f64 / 128.0);
        }
        // geometric ladders resolve the steep ends of inverse-S arcs
        let mut d = len / 256.0;
        while d > 1e-13 {
            xs.push(p.lo + d);
            xs.push(p.hi - d);
            d *= 0.5;
        }
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        xs.dedup();
        for (ord, &x) in xs.iter().enumerate() {
            if x > p.lo && x < p.hi {
                pts.push(Pt { x, y: p.f.value(x, 1.0 - x), kind: Support::Arc(pi, ord) });
            }
        }
    }
    for j in hh.jumps() {
        if j.at > 0.0 && j.at < 1.0 {
            let y = j.left.max(j.point).max(j.right);
            pts.push(Pt { x: j.at, y, kind: Support::Exact });
        }
    }
    pts.sort_by(|a, b| {
        a.x.partial_cmp(&b.x)
            .unwrap()
            .then(b.y.partial_cmp(&a.y).unwrap())
    });
    // one point per abscissa: the highest, preferring exact support
    pts.dedup_by(|b, a| {
        if a.x == b.x {
            if b.y > a.y || (b.y == a.y && b.kind == Support::Exact) {
                a.y = b.y;
                a.kind = b.kind;
            }
            true
        } else {
            false
        }
    });
    pts
}

fn cross(o: &Pt, a: &Pt, b: &Pt) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn upper_hull(pts: &[Pt]) -> Vec<Pt> {
    let mut hull: Vec<Pt> = Vec::new();
    for &p in pts {
        while hull.len() >= 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], &p) >= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull
}

fn is_contact_step(a: &Pt, b: &Pt) -> bool {
    match (a.kind, b.kind) {
        (Support::Arc(i, oi), Support::Arc(j, oj)) => i == j && oj == oi + 1,
        _ => false,
    }
}

/// Solve the tangency equation for a bridge endpoint lying inside a smooth arc:
/// the supporting line through `other` must have the arc's slope at the contact.
fn refine_endpoint(piece: &Piece, x: f64, other: (f64, f64), lo: f64, hi: f64) -> f64 {
    let r = |s: f64| {
        let omt = 1.0 - s;
        piece.f.deriv(s, omt) * (other.0 - s) - (other.1 - piece.f.value(s, omt))
    };
    let (a, b) = (lo.max(piece.lo + 1e-15), hi.min(piece.hi - 1e-15));
    if !(a < x && x < b) {
        return x;
    }
    let (ra, rb) = (r(a), r(b));
    if ra == 0.0 {
        return a;
    }
    if rb == 0.0 {
        return b;
    }
    if (ra > 0.0) == (rb > 0.0) {
        return x; // no sign change: keep the discrete vertex
    }
    bisect(r, a, b)
}

fn refine_bridges(hh: &Distortion, hull: &mut [Pt]) {
    let n = hull.len();
    for i in 0..n - 1 {
        let (a, b) = (hull[i], hull[i + 1]);
        if is_contact_step(&a, &b) {
            continue;
        }
        // bracket each arc endpoint between its hull neighbours
        let lo_a = if i > 0 { hull[i - 1].x } else { 0.0 };
        let hi_b = if i + 2 < n { hull[i + 2].x } else { 1.0 };
        let mut xa = a.x;
        let mut xb = b.x;
        for _ in 0..60 {
            let mut moved: f64 = 0.0;
            if let Support::Arc(pi, _) = a.kind {
                let p = &hh.pieces()[pi];
                let yb = point_on(hh, hull, i + 1, xb);
                let nx = refine_endpoint(p, xa, (xb, yb), lo_a, xb);
                moved = moved.max((nx - xa).abs());
                xa = nx;
            }
            if let Support::Arc(pj, _) = b.kind {
                let p = &hh.pieces()[pj];
                let ya = point_on(hh, hull, i, xa);
                let nx = refine_endpoint(p, xb, (xa, ya), xa, hi_b);
                moved = moved.max((nx - xb).abs());
                xb = nx;
            }
            if moved < 1e-14 {
                break;
            }
        }
        if let Support::Arc(pi, _) = a.kind {
            let p = &hh.pieces()[pi];
            hull[i].x = xa;
            hull[i].y = p.f.value(xa, 1.0 - xa);
        }
        if let Support::Arc(pj, _) = b.kind {
            let p = &hh.pieces()[pj];
            hull[i + 1].x = xb;
            hull[i + 1].y = p.f.value(xb, 1.0 - xb);
        }
    }
}

fn point_on(hh: &Distortion, hull: &[Pt], idx: usize, x: f64) -> f64 {
    match hull[idx].kind {
        Support::Arc(pi, _) => {
            let p = &hh.pieces()[pi];
            p.f.value(x, 1.0 - x)
        }
        Support::Exact => hull[idx].y,
    }
}

fn assemble(h: &Distortion, hh: &Distortion, hull: &[Pt]) -> Result<EnvelopeResult> {
    #[derive(Debug)]
    struct Seg {
        lo: f64,
        hi: f64,
        f: Smooth,
        linear: bool,
    }
    let mut segs: Vec<Seg> = Vec::new();
    let mut i = 0;
    while i + 1 < hull.len() {
        if is_contact_step(&hull[i], &hull[i + 1]) {
            let piece_idx = match hull[i].kind {
                Support::Arc(pi, _) => pi,
                _ => unreachable!(),
            };
            let start = hull[i].x;
            let mut j = i + 1;
            while j + 1 < hull.len() && is_contact_step(&hull[j], &hull[j + 1]) {
                j += 1;
            }
            segs.push(Seg {
                lo: start,
                hi: hull[j].x,
                f: hh.pieces()[piece_idx].f.clone(),
                linear: false,
            });
            i = j;
        } else {
            let (a, b) = (&hull[i], &hull[i + 1]);
            if b.x > a.x {
                segs.push(Seg {
                    lo: a.x,
                    hi: b.x,
                    f: Smooth::chord(a.x, a.y, b.x, b.y),
                    linear: true,
                });
            }
            i += 1;
        }
    }
    // merge contact runs that were split only by sampling adjacency
    let mut merged: Vec<Seg> = Vec::new();
    for s in segs {
        if let Some(last) = merged.last_mut() {
            if !last.linear && !s.linear && last.f == s.f {
                last.hi = s.hi;
                continue;
            }
        }
        merged.push(s);
    }
    // absorb sampling-artifact bridges: a linear sliver that coincides with the
    // neighbouring arc belongs to that arc's contact run (this carries contact
    // runs out to exact piece boundaries)
    let scale0 = 1.0f64.max(hull.iter().map(|p| p.y.abs()).fold(0.0, f64::max));
    let coincides = |lin: &Seg, arc: &Smooth| -> bool {
        for k in 0..=4 {
            let t = lin.lo + (lin.hi - lin.lo) * k as f64 / 4.0;
            let omt = 1.0 - t;
            if (lin.f.value(t, omt) - arc.value(t, omt)).abs() > CONTACT_TOL * scale0 {
                return false;
            }
        }
        true
    };
    let mut i = 0;
    while i < merged.len() {
        if merged[i].linear {
            let absorb_right = i + 1 < merged.len()
                && !merged[i + 1].linear
                && coincides(&merged[i], &merged[i + 1].f);
            if absorb_right {
                merged[i + 1].lo = merged[i].lo;
                merged.remove(i);
                continue;
            }
            let absorb_left =
                i > 0 && !merged[i - 1].linear && coincides(&merged[i], &merged[i - 1].f);
            if absorb_left {
                merged[i - 1].hi = merged[i].hi;
                merged.remove(i);
                continue;
            }
        }
        i += 1;
    }
    // re-merge contact runs that became adjacent after absorption
    let mut tmp: Vec<Seg> = Vec::new();
    for s in merged {
        if let Some(last) = tmp.last_mut() {
            if !last.linear && !s.linear && last.f == s.f {
                last.hi = s.hi;
                continue;
            }
        }
        tmp.push(s);
    }
    let merged = tmp;

    let mut divergence: Vec<(f64, f64)> = Vec::new();
    let scale = 1.0f64.max(hull.iter().map(|p| p.y.abs()).fold(0.0, f64::max));
    for s in &merged {
        if !s.linear || s.hi - s.lo < MIN_DIVERGENCE_LEN {
            continue;
        }
        let mut depart = false;
        for k in 1..17 {
            let t = s.lo + (s.hi - s.lo) * k as f64 / 17.0;
            let hv = hh.eval(t, Side::Point)?;
            if s.f.value(t, 1.0 - t) - hv > CONTACT_TOL * scale {
                depart = true;
                break;
            }
        }
        if depart {
            divergence.push((s.lo.max(0.0), s.hi.min(1.0)));
        }
    }

    let pieces: Vec<Piece> = merged
        .iter()
        .map(|s| Piece { lo: s.lo, hi: s.hi, f: s.f.clone() })
        .collect();
    let mut jumps = Vec::new();
    let first_y = hull[0].y;
    if first_y > 0.0 {
        jumps.push(Jump { at: 0.0, left: 0.0, point: 0.0, right: first_y });
    }
    let last_y = hull[hull.len() - 1].y;
    let h1 = h.value_at_one();
    if last_y > h1 {
        jumps.push(Jump { at: 1.0, left: last_y, point: h1, right: h1 });
    }
    let envelope = Distortion::from_parts(pieces, jumps)?;
    let segments = merged
        .iter()
        .map(|s| EnvelopeSegment { lo: s.lo, hi: s.hi, linear: s.linear })
        .collect();
    let divergence = IntervalSet::new(divergence)?;
    let i_h = divergence.reflect();
    Ok(EnvelopeResult { envelope, divergence, i_h, segments })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distortion::Distortion;

    // Tangency abscissas of the inverse-S curve, frozen from a bisection oracle
    // run at 30-digit precision.
    const T0_05: f64 = 0.067_243_234_535_305_27;
    const T0_07: f64 = 0.130_276_025_316_900_74;
    const T0_09: f64 = 0.190_038_483_407_838_18;
    // Bridge boundary of the envelope of tk(0.8) - tk(0.7).
    const DIFF_TSTAR: f64 = 0.757_778_938_048_534_9;

    fn grid_eval(d: &Distortion, n: usize) -> Vec<f64> {
        (0..=n)
            .map(|i| d.eval(i as f64 / n as f64, Side::Point).unwrap())
            .collect()
    }

    #[test]
    fn var_envelope_is_es() {
        let h = Distortion::var(0.95).unwrap();
        let r = concave_envelope(&h).unwrap();
        let es = Distortion::es(0.95).unwrap();
        for (a, b) in grid_eval(&r.envelope, 512).iter().zip(grid_eval(&es, 512)) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(r.divergence.len(), 1);
        let (a, b) = r.divergence.as_slice()[0];
        assert!(a.abs() < 1e-12 && (b - 0.05).abs() < 1e-12);
        let (ia, ib) = r.i_h.as_slice()[0];
        assert!((ia - 0.95).abs() < 1e-12 && (ib - 1.0).abs() < 1e-12);
    }

    #[test]
    fn concave_input_is_fixed_point() {
        let h = Distortion::es(0.9).unwrap();
        let r = concave_envelope(&h).unwrap();
        assert!(r.divergence.is_empty());
        for (a, b) in grid_eval(&r.envelope, 1024).iter().zip(grid_eval(&h, 1024)) {
            assert!((a - b).abs() < 1e-10);
        }
        // idempotence on a computed envelope
        let tk_env = concave_envelope(&Distortion::tk(0.7).unwrap()).unwrap();
        let again = concave_envelope(&tk_env.envelope).unwrap();
        assert!(again.divergence.is_empty());
        for (a, b) in grid_eval(&again.envelope, 1024)
            .iter()
            .zip(grid_eval(&tk_env.envelope, 1024))
        {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn tk_tangency_residuals() {
        for (g, want) in [(0.5, T0_05), (0.7, T0_07), (0.9, T0_09)] {
            let t0 = tk_tangency(g).unwrap();
            assert!((t0 - want).abs() < 1e-12, "gamma={g}: {t0} vs {want}");
            let h = Distortion::tk(g).unwrap();
            let chord = (1.0 - h.eval(t0, Side::Point).unwrap()) / (1.0 - t0);
            assert!((chord - h.deriv(t0)).abs() < 1e-10);
        }
        assert!(tk_tangency(0.5).unwrap() < tk_tangency(0.9).unwrap());
        assert!(tk_tangency(1.0).is_err());
        // near-linear limit: the divergence interval shrinks toward the right end
        assert!(tk_tangency(0.999).unwrap() > 0.2);
    }

    #[test]
    fn tk_envelope_structure() {
        let h = Distortion::tk(0.7).unwrap();
        let r = concave_envelope(&h).unwrap();
        assert_eq!(r.divergence.len(), 1);
        let (a, b) = r.divergence.as_slice()[0];
        assert!((a - T0_07).abs() < 1e-9 && (b - 1.0).abs() < 1e-12);
        let (ia, ib) = r.i_h.as_slice()[0];
        assert!(ia.abs() < 1e-12 && (ib - (1.0 - T0_07)).abs() < 1e-9);
        // envelope = h on the contact region, linear above on the bridge
        for i in 0..=100 {
            let t = T0_07 * i as f64 / 100.0;
            let e = r.envelope.eval(t, Side::Point).unwrap();
            let v = h.eval(t, Side::Point).unwrap();
            assert!((e - v).abs() < 1e-10, "contact at t={t}");
        }
        let mid = 0.5 * (T0_07 + 1.0);
        let chord = h.eval(T0_07, Side::Point).unwrap()
            + (1.0 - h.eval(T0_07, Side::Point).unwrap()) * (mid - T0_07) / (1.0 - T0_07);
        assert!((r.envelope.eval(mid, Side::Point).unwrap() - chord).abs() < 1e-9);
    }

    #[test]
    fn diff_tk_envelope() {
        let h = Distortion::tk(0.8).unwrap().difference(&Distortion::tk(0.7).unwrap());
        let r = concave_envelope(&h).unwrap();
        assert_eq!(r.divergence.len(), 1);
        let (a, b) = r.divergence.as_slice()[0];
        assert!(a.abs() < 1e-12, "bridge starts at 0, got {a}");
        assert!((b - DIFF_TSTAR).abs() < 2e-3, "boundary {b}");
        let (ia, ib) = r.i_h.as_slice()[0];
        assert!((ia - (1.0 - DIFF_TSTAR)).abs() < 2e-3 && (ib - 1.0).abs() < 1e-12);
        // linear on [0, t*]: zero second difference
        let e = |t: f64| r.envelope.eval(t, Side::Point).unwrap();
        for i in 1..20 {
            let t = DIFF_TSTAR * i as f64 / 21.0;
            let dd = e(t + 1e-3) - 2.0 * e(t) + e(t - 1e-3);
            assert!(dd.abs() < 1e-10, "second difference {dd} at {t}");
        }
    }

    #[test]
    fn envelope_dominance_and_boundaries() {
        let cases = [
            Distortion::var(0.95).unwrap(),
            Distortion::inter_quantile(0.75).unwrap(),
            Distortion::tk(0.6).unwrap(),
            Distortion::tk(0.8).unwrap().difference(&Distortion::tk(0.7).unwrap()),
        ];
        for h in &cases {
            let hh = h.usc_modification();
            let r = concave_envelope(h).unwrap();
            assert_eq!(r.envelope.eval(0.0, Side::Point).unwrap(), 0.0);
            assert!((r.envelope.value_at_one() - h.value_at_one()).abs() < 1e-12);
            for i in 1..512 {
                let t = i as f64 / 512.0;
                let e = r.envelope.eval(t, Side::Point).unwrap();
                let v = hh.eval(t, Side::Point).unwrap();
                assert!(e >= v - 1e-10, "dominance fails at t={t}: {e} < {v}");
            }
        }
    }

    #[test]
    fn convex_envelope_reflection() {
        let h = Distortion::tk(0.7).unwrap();
        let lower = convex_envelope(&h).unwrap();
        let reflected = concave_envelope(&h.negate()).unwrap();
        for i in 0..=512 {
            let t = i as f64 / 512.0;
            let a = lower.envelope.eval(t, Side::Point).unwrap();
            let b = -reflected.envelope.eval(t, Side::Point).unwrap();
            assert!((a - b).abs() < 1e-14);
            assert!(a <= h.eval(t, Side::Point).unwrap() + 1e-10);
        }
        // lower envelope of an inverse-S curve: linear from the origin up to a
        // tangency point, then equal to the curve
        let (a, b) = lower.divergence.as_slice()[0];
        assert!(a.abs() < 1e-12 && b > 0.1 && b < 1.0);
        let s0 = b;
        let slope = h.eval(s0, Side::Point).unwrap() / s0;
        assert!((slope - h.deriv(s0)).abs() < 1e-7, "tangency residual");
    }

    #[test]
    fn convex_input_convex_envelope_identity() {
        let h = Distortion::es_left(0.9).unwrap();
        let r = convex_envelope(&h).unwrap();
        assert!(r.divergence.is_empty());
        for i in 0..=256 {
            let t = i as f64 / 256.0;
            assert!(
                (r.envelope.eval(t, Side::Point).unwrap() - h.eval(t, Side::Point).unwrap())
                    .abs()
                    < 1e-12
            );
        }
    }

    #[test]
    fn var_lower_envelope_is_late_chord() {
        // largest convex minorant of 1_{(0.05, 1]}: zero until 0.05, then the
        // chord rising to (1, 1)
        let h = Distortion::var(0.95).unwrap();
        let r = convex_envelope(&h).unwrap();
        for i in 0..=512 {
            let t = i as f64 / 512.0;
            let v = r.envelope.eval(t, Side::Point).unwrap();
            let want = ((t - 0.05) / 0.95).max(0.0);
            assert!((v - want).abs() < 1e-12, "h_* at {t}: {v} vs {want}");
            assert!(v <= h.eval(t, Side::Point).unwrap() + 1e-12);
        }
        assert!((r.envelope.value_at_one() - 1.0).abs() < 1e-12);
        // equality at the divergence endpoints, linear in between
        let (a, b) = r.divergence.as_slice()[0];
        assert!((a - 0.05).abs() < 1e-12 && (b - 1.0).abs() < 1e-12);
    }
}
