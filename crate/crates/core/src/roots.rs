//! Scalar root finding.

/// Brent's method on a bracket `[a, b]` with `f(a)·f(b) ≤ 0`.
///
/// Returns `None` if the bracket is invalid or `f` produced a NaN.
pub fn brent<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    xtol: f64,
    max_iter: usize,
) -> Option<f64> {
    let fa = f(a);
    let fb = f(b);
    brent_with(f, a, fa, b, fb, xtol, max_iter)
}

/// Like [`brent`], reusing known endpoint values.
pub fn brent_with<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut fa: f64,
    mut b: f64,
    mut fb: f64,
    xtol: f64,
    max_iter: usize,
) -> Option<f64> {
    if fa.is_nan() || fb.is_nan() || fa * fb > 0.0 {
        return None;
    }
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb * fc > 0.0 {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Some(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
        if fb.is_nan() {
            return None;
        }
    }
    None
}

/// Grows `[a, b]` geometrically about its midpoint, clamped to `[lo, hi]`,
/// until `f` changes sign. Returns the bracket with its endpoint values.
pub fn expand_bracket<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    lo: f64,
    hi: f64,
    max_iter: usize,
) -> Option<(f64, f64, f64, f64)> {
    let (mut a, mut b) = (a.max(lo), b.min(hi));
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..max_iter {
        if fa.is_finite() && fb.is_finite() && fa * fb <= 0.0 {
            return Some((a, fa, b, fb));
        }
        let w = b - a;
        let grow_left = if fa.is_nan() {
            false
        } else if fb.is_nan() {
            true
        } else {
            fa.abs() < fb.abs()
        };
        if (grow_left && a > lo) || b >= hi {
            if a <= lo {
                return None;
            }
            a = (a - 1.6 * w).max(lo);
            fa = f(a);
        } else {
            b = (b + 1.6 * w).min(hi);
            fb = f(b);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_cubic_root() {
        let r = brent(|x| x * x * x - 2.0, 0.0, 2.0, 1e-14, 100).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-13);
    }

    #[test]
    fn rejects_invalid_bracket() {
        assert!(brent(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 100).is_none());
    }

    #[test]
    fn expands_until_sign_change() {
        let (a, fa, b, fb) = expand_bracket(|x| x - 7.5, 0.0, 1.0, -100.0, 100.0, 50).unwrap();
        assert!(fa * fb <= 0.0 && a <= 7.5 && b >= 7.5);
        assert!(expand_bracket(|x| x * x + 1.0, 0.0, 1.0, -10.0, 10.0, 50).is_none());
    }
}
