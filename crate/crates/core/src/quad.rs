//! Adaptive quadrature on (0,1) for integrands of the form
//! `x^(a-1) (1-x)^(b-1) φ(x)` with smooth `φ` and `a, b > 0`: the workhorse
//! behind density normalisation and per-bin masses. Endpoint singularities
//! are removed by the power substitution `x = u^m` (resp. `1-x = v^m`) with
//! `m` large enough that the transformed integrand is twice differentiable.

/// Adaptive Simpson with an absolute tolerance. The per-level tolerance is
/// floored near machine precision so round-off in `delta` cannot force the
/// recursion to the depth cap everywhere.
pub(crate) fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let floor = 1e-16 * whole.abs().max(1.0);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol.max(floor), floor, 20)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    floor: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || !delta.is_finite() || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        let child_tol = (0.5 * tol).max(floor);
        simpson_rec(f, a, m, fa, flm, fm, left, child_tol, floor, depth - 1)
            + simpson_rec(f, m, b, fm, frm, fb, right, child_tol, floor, depth - 1)
    }
}

/// Substitution power that makes `u^(m*e-1)` at least C²: `m*e - 1 >= 3`.
fn subst_power(exponent: f64) -> f64 {
    if exponent >= 4.0 {
        1.0
    } else {
        (4.0 / exponent).ceil()
    }
}

/// `∫_lo^hi x^(a-1) (1-x)^(b-1) φ(x) dx` on `0 <= lo < hi <= 1` with
/// `a, b > 0` and smooth `φ`. The singular powers are rebuilt from the
/// substitution variable itself (`x = u^m` gives `u^(m·a−1)` directly), so
/// no evaluation ever hits `0^negative`.
pub(crate) fn integrate_with_endpoint_powers(
    phi: &impl Fn(f64) -> f64,
    a_exp: f64,
    b_exp: f64,
    lo: f64,
    hi: f64,
    tol: f64,
) -> f64 {
    assert!(a_exp > 0.0 && b_exp > 0.0, "non-integrable endpoint exponent");
    assert!((0.0..=1.0).contains(&lo) && lo < hi && hi <= 1.0);
    let full = |x: f64| x.powf(a_exp - 1.0) * (1.0 - x).powf(b_exp - 1.0) * phi(x);

    // interior piece needs no substitution
    if lo > 0.0 && hi < 1.0 {
        return adaptive_simpson(&full, lo, hi, tol);
    }

    let mut total = 0.0;
    let split_lo = if lo == 0.0 { hi.min(0.5) } else { lo };
    let split_hi = if hi == 1.0 { lo.max(0.5) } else { hi };

    if lo == 0.0 {
        // x = u^m: integrand m u^(m a − 1) (1 − u^m)^(b−1) φ(u^m)
        let m = subst_power(a_exp);
        let g = |u: f64| {
            if u <= 0.0 {
                return 0.0;
            }
            let x = u.powf(m);
            m * u.powf(m * a_exp - 1.0) * (1.0 - x).powf(b_exp - 1.0) * phi(x)
        };
        total += adaptive_simpson(&g, 0.0, split_lo.powf(1.0 / m), tol);
    }
    if hi == 1.0 {
        // 1 − x = v^m: integrand m v^(m b − 1) (1 − v^m)^(a−1) φ(1 − v^m)
        let m = subst_power(b_exp);
        let g = |v: f64| {
            if v <= 0.0 {
                return 0.0;
            }
            let w = v.powf(m);
            m * v.powf(m * b_exp - 1.0) * (1.0 - w).powf(a_exp - 1.0) * phi(1.0 - w)
        };
        total += adaptive_simpson(&g, 0.0, (1.0 - split_hi).powf(1.0 / m), tol);
    }
    if lo == 0.0 && hi == 1.0 && split_lo < split_hi {
        total += adaptive_simpson(&full, split_lo, split_hi, tol);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_polynomial() {
        let v = adaptive_simpson(&|x| x * x, 0.0, 1.0, 1e-12);
        assert!((v - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn beta_integrals_with_singular_endpoints() {
        // B(3/4, 1/4) = pi / sin(pi/4) = pi * sqrt(2)
        let phi = |_x: f64| 1.0;
        let v = integrate_with_endpoint_powers(&phi, 0.75, 0.25, 0.0, 1.0, 1e-11);
        let exact = std::f64::consts::PI * std::f64::consts::SQRT_2;
        assert!((v - exact).abs() < 1e-8, "got {v}, want {exact}");
    }

    #[test]
    fn partial_ranges_sum_to_whole() {
        let phi = |x: f64| 1.0 + 0.3 * x;
        let whole = integrate_with_endpoint_powers(&phi, 0.75, 0.25, 0.0, 1.0, 1e-11);
        let left = integrate_with_endpoint_powers(&phi, 0.75, 0.25, 0.0, 0.37, 1e-11);
        let mid = integrate_with_endpoint_powers(&phi, 0.75, 0.25, 0.37, 0.81, 1e-11);
        let right = integrate_with_endpoint_powers(&phi, 0.75, 0.25, 0.81, 1.0, 1e-11);
        assert!((left + mid + right - whole).abs() < 1e-8);
    }
}
