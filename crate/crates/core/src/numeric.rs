//! Scalar root finding and convex line minimization.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Bisection on a bracket whose endpoints have opposite signs (zero counts as
/// the non-positive side). Returns `None` without a sign change.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Option<f64> {
    let flo = f(lo);
    let fhi = f(hi);
    if !flo.is_finite() || !fhi.is_finite() || (flo > 0.0) == (fhi > 0.0) {
        return None;
    }
    let lo_positive = flo > 0.0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Golden-section search for the minimum of a unimodal `f` on `[a, b]`.
/// Returns `(argmin, min)`.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    // the best interior probe, not the midpoint: on kinked objectives the
    // midpoint can sit on the wrong side of the kink by up to `tol`
    let mid = 0.5 * (a + b);
    let fm = f(mid);
    [(mid, fm), (c, fc), (d, fd)]
        .into_iter()
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .expect("three candidates")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LineMinimum {
    Found {
        arg: f64,
        value: f64,
    },
    /// Still descending at `|t| = limit`; the last probe is reported.
    Unbounded {
        arg: f64,
        value: f64,
    },
}

/// Minimizes a convex `f` over the real line: brackets by doubling outward
/// from `t0`, then golden-section to `tol`. Gives up past `|t| > limit`.
pub fn minimize_convex<F: Fn(f64) -> f64>(f: F, t0: f64, step: f64, tol: f64, limit: f64) -> LineMinimum {
    let f0 = f(t0);
    let fp = f(t0 + step);
    let dir = if fp < f0 {
        1.0
    } else if f(t0 - step) < f0 {
        -1.0
    } else {
        let (arg, value) = golden_section(&f, t0 - step, t0 + step, tol);
        return LineMinimum::Found { arg, value };
    };
    let mut prev = t0;
    let mut cur = t0 + dir * step;
    let mut fcur = f(cur);
    let mut h = step;
    loop {
        h *= 2.0;
        let next = cur + dir * h;
        if next.abs() > limit {
            let edge = dir * limit;
            let fedge = f(edge);
            if fedge < fcur {
                return LineMinimum::Unbounded {
                    arg: edge,
                    value: fedge,
                };
            }
            let (lo, hi) = if dir > 0.0 { (prev, edge) } else { (edge, prev) };
            let (arg, value) = golden_section(&f, lo, hi, tol);
            return LineMinimum::Found { arg, value };
        }
        let fnext = f(next);
        if fnext >= fcur {
            let (lo, hi) = if dir > 0.0 { (prev, next) } else { (next, prev) };
            let (arg, value) = golden_section(&f, lo, hi, tol);
            return LineMinimum::Found { arg, value };
        }
        prev = cur;
        cur = next;
        fcur = fnext;
    }
}

/// `ln(e^a - 1)` for `a > 0`, accurate for tiny and huge `a`.
pub fn ln_expm1(a: f64) -> f64 {
    if a > 30.0 {
        a + (-(-a).exp()).ln_1p()
    } else {
        a.exp_m1().ln()
    }
}

/// `ln(e^a + e^b)`, with `-inf` as an identity.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Formats like C's `%.{sig}g`.
pub fn format_sig(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sig = sig.max(1);
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -5 || exp >= sig as i32 {
        let mantissa = trim_zeros(mantissa);
        format!("{mantissa}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
