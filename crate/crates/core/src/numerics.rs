//! Shared numerical kernels: tanh-sinh quadrature, root bracketing, golden-section
//! minimization, and a small symmetric eigensolver.
//!
//! The quadrature passes the distances to both interval endpoints into the
//! integrand. Integrands with endpoint singularities (quantile tails, distortion
//! derivatives of the form t^(g-1)) must be evaluated from those distances rather
//! than from t itself, otherwise the node placement near the endpoints is wasted
//! on catastrophic cancellation.

/// Result of an adaptive quadrature.
#[derive(Debug, Clone, Copy)]
pub struct Quad {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

const TS_UMAX: f64 = 5.7;
const TS_MAX_LEVEL: u32 = 11;

/// Tanh-sinh quadrature of `f` over `[a, b]`.
///
/// The integrand receives `(t, t - a, b - t)`; the endpoint distances are exact
/// down to ~1e-300 even when `t` itself rounds to `a` or `b`. Integrable endpoint
/// singularities converge at their analytic rate; non-integrable ones fail the
/// convergence test and are reported with `converged = false`.
pub fn tanh_sinh<F: Fn(f64, f64, f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Quad {
    debug_assert!(b >= a);
    if a == b {
        return Quad { value: 0.0, error: 0.0, converged: true };
    }
    let m = 0.5 * (b - a);

    // g(u) du with g(u) = f(x(u)) * w(u); x = tanh(pi/2 sinh u)
    let eval_u = |u: f64| -> f64 {
        let w = std::f64::consts::FRAC_PI_2 * u.sinh();
        // 1 - tanh(w) = 2 e^{-2w} / (1 + e^{-2w}), stable for w >= 0
        let e2 = (-2.0 * w.abs()).exp();
        let one_minus_x = 2.0 * e2 / (1.0 + e2);
        let sech = 2.0 * (-w.abs()).exp() / (1.0 + e2);
        let weight = std::f64::consts::FRAC_PI_2 * u.cosh() * sech * sech;
        if weight == 0.0 {
            return 0.0;
        }
        let near = m * one_minus_x; // distance from the endpoint the node clusters to
        if near == 0.0 {
            return 0.0;
        }
        let far = 2.0 * m - near;
        let mut acc = 0.0;
        // u > 0 clusters at b, u < 0 at a; evaluate both signed nodes here.
        let tb = b - near;
        let va = f(tb, far, near);
        if va.is_finite() {
            acc += va * weight;
        }
        if u != 0.0 {
            let ta = a + near;
            let vb = f(ta, near, far);
            if vb.is_finite() {
                acc += vb * weight;
            }
        }
        acc
    };

    // Level 0: step 1, nodes at integer u in [0, TS_UMAX] (u=0 counted once).
    let mut step = 1.0f64;
    let mut sum = eval_u(0.0);
    let mut j = 1.0;
    while j <= TS_UMAX {
        sum += eval_u(j);
        j += 1.0;
    }
    let mut value = sum * step * m;
    let mut error = f64::INFINITY;

    for _level in 1..=TS_MAX_LEVEL {
        step *= 0.5;
        // new nodes at odd multiples of the refined step
        let mut u = step;
        let mut add = 0.0;
        while u <= TS_UMAX {
            add += eval_u(u);
            u += 2.0 * step;
        }
        sum += add;
        let new_value = sum * step * m;
        error = (new_value - value).abs();
        value = new_value;
        if error <= abs_tol.max(1e-15 * value.abs()) {
            return Quad { value, error, converged: true };
        }
    }
    Quad { value, error, converged: false }
}

/// Integrate with interior split points (kinks, atoms); points outside `(a, b)`
/// are ignored. The integrand's endpoint distances stay relative to the full
/// `[a, b]`, so singular global endpoints remain resolved across panels.
pub fn tanh_sinh_split<F: Fn(f64, f64, f64) -> f64 + Copy>(
    f: F,
    a: f64,
    b: f64,
    splits: &[f64],
    abs_tol: f64,
) -> Quad {
    let mut pts: Vec<f64> = splits.iter().copied().filter(|&t| t > a && t < b).collect();
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup_by(|x, y| (*x - *y).abs() <= 1e-15);
    let mut value = 0.0;
    let mut error = 0.0;
    let mut converged = true;
    let mut lo = a;
    for &p in pts.iter().chain(std::iter::once(&b)) {
        let (off_lo, off_hi) = (lo - a, b - p);
        let q = tanh_sinh(|t, fl, fh| f(t, off_lo + fl, off_hi + fh), lo, p, abs_tol);
        value += q.value;
        error += q.error;
        converged &= q.converged;
        lo = p;
    }
    Quad { value, error, converged }
}

/// Bisection on a sign change; `f(a)` and `f(b)` must have opposite signs.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    if fa == 0.0 {
        return a;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fa > 0.0) != (fm > 0.0) {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    0.5 * (a + b)
}

/// Golden-section minimization of a unimodal function on `[a, b]`.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    0.5 * (a + b)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations (row-major, n x n).
pub fn symmetric_eigenvalues(mat: &[f64], n: usize) -> Vec<f64> {
    assert_eq!(mat.len(), n * n);
    let mut a = mat.to_vec();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if off.sqrt() < 1e-14 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = 0.5 * (aqq - app) / apq;
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).collect()
}

/// Standard normal density.
pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}
