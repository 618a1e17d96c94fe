//! Continuum side of the model: the limit density `f` of `X_n / n`, its
//! ballistic rescaling `f_t`, the macroscopic profile `ρ(t, x) = (γ * f_t)(x)`
//! and the exact finite-`n` Poisson intensity `B(j, n)`.
//!
//! Every integral against `f_t` goes through the substitution
//! `v = t·sin(θ)/√2`, under which `f_t(v) dv = dθ / (π√2 (1 − sin²θ / 2))`.
//! The endpoint singularity disappears and the transformed weight is smooth
//! and bounded on `[−π/2, π/2]`.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use thiserror::Error;

use crate::profile::Profile;
use crate::quadrature::{integrate_with_breaks, QuadConfig, QuadratureError};
use crate::walk::{averaged_kernel, PositionDistribution};

/// `f` is supported on `[−√2/2, √2/2]`.
pub const SUPPORT_HALF_WIDTH: f64 = FRAC_1_SQRT_2;

const INNER_QUAD: QuadConfig = QuadConfig {
    abs_tol: 1e-11,
    max_panels: 4000,
};

const OUTER_QUAD: QuadConfig = QuadConfig {
    abs_tol: 1e-9,
    max_panels: 4000,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    #[error("time must be positive and finite, got {0}")]
    NonPositiveTime(f64),
    #[error("scale n must be at least 1")]
    ZeroScale,
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

fn check_time(t: f64) -> Result<(), AnalyticsError> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(AnalyticsError::NonPositiveTime(t))
    }
}

/// `⌊y⌋` as a site index (rounds toward −∞).
pub fn floor_site(y: f64) -> i64 {
    y.floor() as i64
}

/// Macroscopic point `x` at scale `n`, i.e. the site `⌊x·n⌋`.
pub fn macro_site(x: f64, n: u64) -> i64 {
    floor_site(x * n as f64)
}

/// Number of walk steps `⌊t·n⌋` for macroscopic time `t`.
pub fn ballistic_steps(n: u64, t: f64) -> Result<u64, AnalyticsError> {
    check_time(t)?;
    Ok((t * n as f64).floor() as u64)
}

/// `f(x) = 1 / (π (1 − x²) √(1 − 2x²))` on the open interval `|x| < √2/2`,
/// zero elsewhere (including the two endpoints, where the formula diverges).
pub fn density_f(x: f64) -> f64 {
    let x2 = x * x;
    let r = 1.0 - 2.0 * x2;
    if r.is_nan() || r <= 0.0 {
        return 0.0;
    }
    1.0 / (PI * (1.0 - x2) * r.sqrt())
}

/// `f_t(x) = f(x / t) / t`.
pub fn density_f_t(t: f64, x: f64) -> Result<f64, AnalyticsError> {
    check_time(t)?;
    Ok(density_f(x / t) / t)
}

/// `f_t(v) dv` in the angle variable.
fn angular_weight(theta: f64) -> f64 {
    let s = theta.sin();
    1.0 / (PI * SQRT_2 * (1.0 - 0.5 * s * s))
}

/// Angle `θ` with `t·sin(θ)/√2 = v`, clamped to `[−π/2, π/2]`.
fn angle_of(t: f64, v: f64) -> f64 {
    let s = (SQRT_2 * v / t).clamp(-1.0, 1.0);
    s.asin()
}

/// `∫_{lo}^{hi} g(v) f_t(v) dv`, where `v_breaks` lists points at which `g`
/// is not smooth. Bounds may extend past the support of `f_t`.
pub fn integrate_against_f_t<G>(
    t: f64,
    g: G,
    lo: f64,
    hi: f64,
    v_breaks: &[f64],
    config: QuadConfig,
) -> Result<f64, AnalyticsError>
where
    G: Fn(f64) -> f64,
{
    check_time(t)?;
    let reach = t * SUPPORT_HALF_WIDTH;
    let lo = lo.max(-reach);
    let hi = hi.min(reach);
    if lo.is_nan() || hi.is_nan() || lo >= hi {
        return Ok(0.0);
    }
    let (a, b) = (angle_of(t, lo), angle_of(t, hi));
    let breaks: Vec<f64> = v_breaks.iter().map(|&v| angle_of(t, v)).collect();
    let integrand = |theta: f64| {
        let v = t * theta.sin() * FRAC_1_SQRT_2;
        g(v) * angular_weight(theta)
    };
    Ok(integrate_with_breaks(integrand, a, b, &breaks, config)?.value)
}

/// `F(x) = ∫_{−∞}^x f`.
pub fn cdf_f(x: f64) -> f64 {
    if x <= -SUPPORT_HALF_WIDTH {
        return 0.0;
    }
    if x >= SUPPORT_HALF_WIDTH {
        return 1.0;
    }
    // Integrate from the centre so F(0) = 1/2 exactly and F(−x) = 1 − F(x).
    let theta = angle_of(1.0, x.abs());
    let half = integrate_with_breaks(angular_weight, 0.0, theta, &[], INNER_QUAD)
        .expect("bounded integrand on a finite interval")
        .value;
    let half = half.clamp(0.0, 0.5);
    if x >= 0.0 {
        0.5 + half
    } else {
        0.5 - half
    }
}

/// `ρ(t, x) = ∫ γ(y) f_t(x − y) dy`.
///
/// Exactly zero when `[x − t√2/2, x + t√2/2]` misses the support of `γ`.
pub fn rho(profile: &Profile, t: f64, x: f64) -> Result<f64, AnalyticsError> {
    rho_with(profile, t, x, INNER_QUAD)
}

fn rho_with(profile: &Profile, t: f64, x: f64, config: QuadConfig) -> Result<f64, AnalyticsError> {
    check_time(t)?;
    let (a, b) = profile.support();
    let reach = t * SUPPORT_HALF_WIDTH;
    if x - reach >= b || x + reach <= a || profile.is_zero() {
        return Ok(0.0);
    }
    // With v = x − y, γ(x − v) has kinks at v = x − knot.
    let breaks: Vec<f64> = profile.knots().iter().map(|k| x - k).collect();
    let value = integrate_against_f_t(t, |v| profile.eval(x - v), x - b, x - a, &breaks, config)?;
    Ok(value.max(0.0))
}

/// Support of `ρ(t, ·)`: the support of `γ` widened by `t√2/2` on each side.
pub fn rho_support(profile: &Profile, t: f64) -> Result<(f64, f64), AnalyticsError> {
    check_time(t)?;
    let (a, b) = profile.support();
    let reach = t * SUPPORT_HALF_WIDTH;
    Ok((a - reach, b + reach))
}

/// `∫ H(x) ρ(t, x) dx` by adaptive quadrature over `x`, with `ρ` evaluated
/// pointwise. Breakpoints sit at the knots of `H` and at `knot(γ) ± t√2/2`,
/// where `ρ` has square-root type singular derivatives.
pub fn rho_functional(profile: &Profile, test_fn: &Profile, t: f64) -> Result<f64, AnalyticsError> {
    check_time(t)?;
    let (ra, rb) = rho_support(profile, t)?;
    let (ha, hb) = test_fn.support();
    let lo = ra.max(ha);
    let hi = rb.min(hb);
    if lo.is_nan() || hi.is_nan() || lo >= hi || profile.is_zero() || test_fn.is_zero() {
        return Ok(0.0);
    }
    let reach = t * SUPPORT_HALF_WIDTH;
    let mut breaks: Vec<f64> = test_fn.knots().to_vec();
    for &k in profile.knots() {
        breaks.extend([k - reach, k, k + reach]);
    }
    // The quadrature driver takes an infallible integrand; park the first error.
    let failure = std::cell::RefCell::new(None::<AnalyticsError>);
    let integrand = |x: f64| match integrand_value(profile, test_fn, t, x) {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            0.0
        }
    };
    let value = integrate_with_breaks(integrand, lo, hi, &breaks, OUTER_QUAD)?.value;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(value)
}

fn integrand_value(profile: &Profile, test_fn: &Profile, t: f64, x: f64) -> Result<f64, AnalyticsError> {
    let h = test_fn.eval(x);
    if h == 0.0 {
        return Ok(0.0);
    }
    Ok(h * rho_with(profile, t, x, INNER_QUAD)?)
}

/// `B(j) = Σ_k γ(k/n) q(j − k)` for a precomputed averaged kernel `q`.
pub fn intensity_with_kernel(profile: &Profile, n: u64, kernel: &PositionDistribution, j: i64) -> f64 {
    let nf = n as f64;
    let (a, b) = profile.support();
    // γ(k/n) > 0 only for a < k/n < b.
    let k_lo = floor_site(a * nf) + 1;
    let k_hi = (b * nf).ceil() as i64 - 1;
    let k_lo = k_lo.max(j - kernel.last_site());
    let k_hi = k_hi.min(j - kernel.offset());
    (k_lo..=k_hi)
        .map(|k| profile.eval(k as f64 / nf) * kernel.prob(j - k))
        .sum()
}

/// Exact Poisson intensity `B(j, ⌊tn⌋)` of the occupation field at site `j`.
pub fn intensity_b(profile: &Profile, n: u64, t: f64, j: i64) -> Result<f64, AnalyticsError> {
    if n == 0 {
        return Err(AnalyticsError::ZeroScale);
    }
    let steps = ballistic_steps(n, t)?;
    Ok(intensity_with_kernel(profile, n, &averaged_kernel(steps), j))
}

/// Sites `k` with `γ(k/n) > 0` possible, as an inclusive range.
pub fn profile_sites(profile: &Profile, n: u64) -> std::ops::RangeInclusive<i64> {
    let nf = n as f64;
    let (a, b) = profile.support();
    (floor_site(a * nf) + 1)..=((b * nf).ceil() as i64 - 1)
}

/// `E|U|` for `U ~ f`; closed form `1/2`.
pub fn mean_abs_limit() -> f64 {
    0.5
}
