//! Special functions: modified Bessel K, incomplete gamma, Gaussian Q.

use crate::error::{Error, Result};
use crate::numerics::quadrature::{integrate, Tolerance};
use crate::scalar::Real;

fn rel_tol<T: Real>() -> f64 {
    (64.0 * T::epsilon().as_f64()).max(1e-14)
}

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma<T: Real>(x: T) -> T {
    T::lit(statrs::function::gamma::ln_gamma(x.as_f64()))
}

/// Modified Bessel function of the second kind, `K_nu(x)`, for real order
/// and `x > 0`.
pub fn bessel_k<T: Real>(nu: T, x: T) -> Result<T> {
    Ok(ln_bessel_k(nu, x)?.exp())
}

/// `ln K_nu(x)`. Stays finite where `K_nu(x)` itself would overflow or
/// underflow, which the generalized-K density relies on.
///
/// Evaluates `K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt` with the
/// integrand rescaled by its peak value, so only the logarithm of the peak
/// ever leaves the exponent. For `x` large against both a fixed floor and
/// `nu^2`, the Hankel asymptotic series is used instead.
pub fn ln_bessel_k<T: Real>(nu: T, x: T) -> Result<T> {
    if !(x > T::zero()) || !x.is_finite() {
        return Err(Error::Domain(format!("K_nu(x) needs x > 0, got {x}")));
    }
    if !nu.is_finite() {
        return Err(Error::Domain(format!("K_nu(x) needs a finite order, got {nu}")));
    }
    let nu = nu.abs();
    if x > T::lit(35.0) && x > nu * nu {
        if let Some(v) = ln_bessel_k_asymptotic(nu, x) {
            return Ok(v);
        }
    }
    ln_bessel_k_integral(nu, x)
}

fn ln_bessel_k_asymptotic<T: Real>(nu: T, x: T) -> Option<T> {
    let mu = T::lit(4.0) * nu * nu;
    let eps = T::epsilon();
    let mut term = T::one();
    let mut sum = T::one();
    for k in 1..200 {
        let odd = T::from_usize_lossy(2 * k - 1);
        let next = term * (mu - odd * odd) / (T::from_usize_lossy(8 * k) * x);
        if next.abs() > term.abs() {
            return None;
        }
        term = next;
        sum = sum + term;
        if term.abs() <= eps * sum.abs() {
            let half_log = T::lit(0.5) * (T::PI() / (T::lit(2.0) * x)).ln();
            return Some(half_log - x + sum.ln());
        }
    }
    None
}

fn ln_bessel_k_integral<T: Real>(nu: T, x: T) -> Result<T> {
    let two = T::lit(2.0);
    // Exponent of exp(-x cosh t + nu t), concave in t with its peak at asinh(nu / x).
    let phase = |t: T| -x * t.cosh() + nu * t;
    let t_peak = (nu / x).asinh();
    let peak = phase(t_peak);
    // Integrand is negligible once the exponent has dropped by this much.
    let drop = -(T::epsilon().ln()) + T::lit(10.0);
    let mut width = T::one();
    while peak - phase(t_peak + width) < drop {
        width = width * two;
    }
    let integrand = |t: T| {
        let scaled = (phase(t) - peak).exp();
        scaled * T::lit(0.5) * (T::one() + (-two * nu * t).exp())
    };
    let tol = Tolerance::new(0.0, rel_tol::<T>());
    let left = integrate(integrand, T::zero(), t_peak, tol)?;
    let right = integrate(integrand, t_peak, t_peak + width, tol)?;
    Ok(peak + (left.value + right.value).ln())
}

/// Regularized lower incomplete gamma `P(s, x) = gamma(s, x) / Gamma(s)`.
pub fn regularized_lower_gamma<T: Real>(s: T, x: T) -> Result<T> {
    Ok(gamma_pq(s, x)?.0)
}

/// Lower incomplete gamma `gamma(s, x) = int_0^x t^(s-1) e^(-t) dt`.
///
/// Power series for `x < s + 1`, otherwise the Lentz continued fraction for
/// the upper function.
pub fn lower_incomplete_gamma<T: Real>(s: T, x: T) -> Result<T> {
    check_gamma_domain(s, x)?;
    if x == T::zero() {
        return Ok(T::zero());
    }
    if x < s + T::one() {
        let log_pre = s * x.ln() - x;
        Ok((log_pre + series_sum(s, x)?.ln()).exp())
    } else {
        let (p, _) = gamma_pq(s, x)?;
        Ok(p * ln_gamma(s).exp())
    }
}

fn check_gamma_domain<T: Real>(s: T, x: T) -> Result<()> {
    if !(s > T::zero()) {
        return Err(Error::Domain(format!("incomplete gamma needs s > 0, got {s}")));
    }
    if !(x >= T::zero()) {
        return Err(Error::Domain(format!("incomplete gamma needs x >= 0, got {x}")));
    }
    Ok(())
}

// sum_{n>=0} x^n / (s (s+1) ... (s+n))
fn series_sum<T: Real>(s: T, x: T) -> Result<T> {
    let eps = T::epsilon();
    let mut denom = s;
    let mut term = T::one() / s;
    let mut sum = term;
    for _ in 0..10_000 {
        denom = denom + T::one();
        term = term * x / denom;
        sum = sum + term;
        if term.abs() < sum.abs() * eps {
            return Ok(sum);
        }
    }
    Err(Error::Convergence("incomplete gamma series".into()))
}

// Q(s, x) * Gamma(s) * e^x / x^s as a continued fraction (modified Lentz).
fn continued_fraction<T: Real>(s: T, x: T) -> Result<T> {
    let eps = T::epsilon();
    let tiny = T::min_positive_value() / eps;
    let mut b = x + T::one() - s;
    let mut c = T::one() / tiny;
    let mut d = T::one() / b;
    let mut h = d;
    for i in 1..10_000 {
        let fi = T::from_usize_lossy(i);
        let an = -fi * (fi - s);
        b = b + T::lit(2.0);
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = T::one() / d;
        let delta = d * c;
        h = h * delta;
        if (delta - T::one()).abs() < eps {
            return Ok(h);
        }
    }
    Err(Error::Convergence("incomplete gamma continued fraction".into()))
}

fn gamma_pq<T: Real>(s: T, x: T) -> Result<(T, T)> {
    check_gamma_domain(s, x)?;
    if x == T::zero() {
        return Ok((T::zero(), T::one()));
    }
    let log_pre = s * x.ln() - x - ln_gamma(s);
    if x < s + T::one() {
        let p = (log_pre + series_sum(s, x)?.ln()).exp();
        Ok((p, T::one() - p))
    } else {
        let q = (log_pre + continued_fraction(s, x)?.ln()).exp();
        Ok((T::one() - q, q))
    }
}

/// Gaussian tail probability `Q(x) = erfc(x / sqrt 2) / 2`.
pub fn q_function<T: Real>(x: T) -> T {
    T::lit(0.5 * statrs::function::erf::erfc(x.as_f64() / std::f64::consts::SQRT_2))
}
