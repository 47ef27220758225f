//! Exactly rounded summation and closed-form line integrals of |x − y|^λ over
//! intervals and rectangles.

use crate::quadrature::gauss::gauss_legendre;

/// Correctly rounded sum (Shewchuk's non-overlapping partials).
pub fn fsum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut partials: Vec<f64> = Vec::new();
    for mut x in xs {
        let mut i = 0;
        for j in 0..partials.len() {
            let mut y = partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        partials.truncate(i);
        partials.push(x);
    }
    // round the partials' exact sum once, watching for half-way cases
    let mut n = partials.len();
    if n == 0 {
        return 0.0;
    }
    n -= 1;
    let mut hi = partials[n];
    let mut lo = 0.0;
    while n > 0 {
        let x = hi;
        n -= 1;
        let y = partials[n];
        hi = x + y;
        let yr = hi - x;
        lo = y - yr;
        if lo != 0.0 {
            break;
        }
    }
    if n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0)) {
        let y = lo * 2.0;
        let x = hi + y;
        if y == x - hi {
            hi = x;
        }
    }
    hi
}

/// ∫_a^b |x − y|^λ dy.
pub fn interval_potential(x: f64, a: f64, b: f64, lambda: f64) -> f64 {
    let e = lambda + 1.0;
    if x <= a {
        ((b - x).powf(e) - (a - x).powf(e)) / e
    } else if x >= b {
        ((x - a).powf(e) - (x - b).powf(e)) / e
    } else {
        ((x - a).powf(e) + (b - x).powf(e)) / e
    }
}

/// ∫_u^v |t|^λ (α + βt) dt for an interval not containing 0 in its interior.
fn weighted_power(u: f64, v: f64, alpha: f64, beta: f64, lambda: f64) -> f64 {
    if v <= u {
        return 0.0;
    }
    if v <= 0.0 {
        // mirror t → −t
        return weighted_power(-v, -u, alpha, -beta, lambda);
    }
    if u == 0.0 {
        return alpha * v.powf(lambda + 1.0) / (lambda + 1.0) + beta * v.powf(lambda + 2.0) / (lambda + 2.0);
    }
    // geometric panels with ratio at most 3/2 keep t^λ analytic well beyond each panel
    let rule = gauss_legendre(10);
    let f = |t: f64| t.powf(lambda) * (alpha + beta * t);
    let mut acc = 0.0;
    let mut lo = u;
    while lo < v {
        let hi = (1.5 * lo).min(v);
        acc += rule.integrate(lo, hi, f);
        lo = hi;
    }
    acc
}

/// ∫_a^b ∫_c^d |x − y|^λ dy dx, written as ∫ |t|^λ w(t) dt with the trapezoidal
/// overlap length w of [a, b] and [c, d] + t.
pub fn rectangle_integral(a: f64, b: f64, c: f64, d: f64, lambda: f64) -> f64 {
    let (t1, t4) = (a - d, b - c);
    let (t2, t3) = if a - c <= b - d { (a - c, b - d) } else { (b - d, a - c) };
    let plateau = (b - a).min(d - c);
    // (start, end, α, β) with w = α + βt on each piece
    let pieces = [(t1, t2, -t1, 1.0), (t2, t3, plateau, 0.0), (t3, t4, t4, -1.0)];
    let mut terms = Vec::with_capacity(6);
    for (u, v, alpha, beta) in pieces {
        if u < 0.0 && v > 0.0 {
            terms.push(weighted_power(u, 0.0, alpha, beta, lambda));
            terms.push(weighted_power(0.0, v, alpha, beta, lambda));
        } else {
            terms.push(weighted_power(u, v, alpha, beta, lambda));
        }
    }
    fsum(terms)
}
