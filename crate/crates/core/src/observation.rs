//! Per-pixel beam model.
//!
//! A pixel whose ray meets the object model at predicted depth `d` reads a
//! depth `z` drawn from one of two branches:
//!
//! * visible: the object itself is seen; `z` is Gaussian about `d` with the
//!   camera noise `σ_c(d) = k_c·d²` and the model noise `σ_m` combined,
//!   `σ_eff² = σ_c² + σ_m²`;
//! * occluded: some other surface is seen first. Its distance follows an
//!   exponential distribution truncated to `(0, d)`, blurred by the camera
//!   noise `σ_c(d)`. The convolution has a closed form in the normal CDF.
//!
//! Both branches mix in a uniform outlier term `β/m` over `(0, m]`. The
//! Gaussian parts are renormalized to `(0, m]`, the support the sensor can
//! actually report, so each branch is a proper density there.

use std::f64::consts::{FRAC_1_SQRT_2, LN_2};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::geometry::is_valid_depth;
use crate::{Error, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Below this `λ·d` the truncated exponential is treated as uniform on `(0, d)`.
const UNIFORM_LIMIT: f64 = 1e-8;

/// Beyond this many standard deviations a normal tail is zero in f64 for our
/// purposes (`Φ(−40) ≈ 4e-350`).
const TAIL_CUTOFF: f64 = 40.0;

/// Where `1 − Φ(−x)` rounds to exactly one.
const UNIT_MASS_CUTOFF: f64 = 8.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObservationParams {
    /// Object-model error standard deviation, meters.
    pub sigma_m: f64,
    /// Camera noise coefficient: `σ_c(d) = k_c·d²`, 1/meters.
    pub k_c: f64,
    /// Weight of the uniform outlier term.
    pub beta: f64,
    /// Maximum measurable depth, meters.
    pub m: f64,
    /// Occluder rate of the truncated exponential, 1/meters.
    pub lambda: f64,
}

impl Default for ObservationParams {
    fn default() -> Self {
        Self {
            sigma_m: 0.003,
            k_c: 0.0015,
            beta: 0.01,
            m: 6.0,
            lambda: LN_2,
        }
    }
}

impl ObservationParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(format!("observation: {}", what)));
        if !(self.sigma_m.is_finite() && self.sigma_m >= 0.0) {
            return bad("sigma_m must be >= 0");
        }
        if !(self.k_c.is_finite() && self.k_c > 0.0) {
            return bad("k_c must be > 0");
        }
        if !(0.0..1.0).contains(&self.beta) {
            return bad("beta must be in [0, 1)");
        }
        if !(self.m.is_finite() && self.m > 0.0) {
            return bad("m must be > 0");
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return bad("lambda must be > 0");
        }
        Ok(())
    }
}

/// Occluder rate for which half of all rays travel `half_life` meters
/// without hitting anything.
pub fn lambda_from_half_life(half_life: f64) -> Result<f64> {
    if !(half_life.is_finite() && half_life > 0.0) {
        return Err(Error::InvalidParameter("half-life must be > 0".into()));
    }
    Ok(LN_2 / half_life)
}

/// Camera noise standard deviation at depth `d`.
#[inline]
pub fn sigma_c(d: f64, params: &ObservationParams) -> f64 {
    params.k_c * d * d
}

#[inline]
fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

#[inline]
fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

#[inline]
fn normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// `Φ(hi) − Φ(lo)` for `hi ≥ lo`, evaluated on whichever tail avoids
/// cancellation.
#[inline]
fn cdf_diff(hi: f64, lo: f64) -> f64 {
    if lo >= 0.0 {
        normal_sf(lo) - normal_sf(hi)
    } else if hi <= 0.0 {
        normal_cdf(hi) - normal_cdf(lo)
    } else {
        1.0 - normal_sf(hi) - normal_cdf(lo)
    }
}

/// `∫ v dΦ`-style antiderivative of `Φ`: `G(v) = vΦ(v) + φ(v)`.
fn cdf_antiderivative(v: f64) -> f64 {
    v * normal_cdf(v) + normal_pdf(v)
}

/// Normalizing constant of the truncated exponential `c·e^{−λb}` on `(0, d)`.
#[inline]
fn truncated_exp_norm(lambda: f64, d: f64) -> f64 {
    let x = lambda * d;
    if x < UNIFORM_LIMIT {
        (1.0 + 0.5 * x) / d
    } else {
        lambda / -(-x).exp_m1()
    }
}

/// `∫₀^d TruncExp(b)·N(z; b, σ) db` with `σ = σ_c(d)`: the occluder depth
/// distribution blurred by camera noise, before the outlier mixture and
/// without renormalization to `(0, m]`.
pub fn occluded_kernel(z: f64, d: f64, params: &ObservationParams) -> f64 {
    let sigma = sigma_c(d, params);
    kernel(z, d, sigma, params.lambda, truncated_exp_norm(params.lambda, d))
}

#[inline]
fn kernel(z: f64, d: f64, sigma: f64, lambda: f64, c: f64) -> f64 {
    let shift = lambda * sigma * sigma;
    let hi = (d - z + shift) / sigma;
    if hi < -TAIL_CUTOFF {
        return 0.0;
    }
    let lo = (shift - z) / sigma;
    c * (0.5 * lambda * shift - lambda * z).exp() * cdf_diff(hi, lo)
}

/// Mass of [`occluded_kernel`] inside `(0, m]`.
pub fn occluded_mass(d: f64, params: &ObservationParams) -> f64 {
    occluded_mass_with(d, sigma_c(d, params), params.lambda, params.m)
}

fn occluded_mass_with(d: f64, sigma: f64, lambda: f64, m: f64) -> f64 {
    let x = lambda * d;
    // mass pushed below zero (`below`) and above m (`above`) by the blur
    let (below, above) = if x < UNIFORM_LIMIT {
        let below = (sigma / d)
            * (normal_pdf(0.0) + (d / sigma) * normal_cdf(-d / sigma) - normal_pdf(d / sigma));
        let above = if (m - d) / sigma > TAIL_CUTOFF {
            0.0
        } else {
            (sigma / d) * (cdf_antiderivative((d - m) / sigma) - cdf_antiderivative(-m / sigma))
        };
        (below, above)
    } else {
        let scale = 1.0 / -(-x).exp_m1();
        let decay = (-x).exp();
        let shift = lambda * sigma * sigma;
        let gain = (0.5 * lambda * shift).exp();
        let far = d / sigma > TAIL_CUTOFF;
        let below = scale
            * (0.5
                - if far { 0.0 } else { decay * normal_cdf(-d / sigma) }
                - gain * cdf_diff((d + shift) / sigma, lambda * sigma));
        let above = if (m - d) / sigma > TAIL_CUTOFF {
            0.0
        } else {
            scale
                * (normal_cdf(-m / sigma) - decay * normal_cdf((d - m) / sigma)
                    + gain
                        * (-lambda * m).exp()
                        * cdf_diff((d - m + shift) / sigma, (shift - m) / sigma))
        };
        (below, above)
    };
    1.0 - below - above
}

/// Both branch densities at one predicted depth, with every quantity that
/// depends only on `d` computed once.
#[derive(Clone, Copy, Debug)]
pub struct BeamModel {
    d: f64,
    tail: f64,
    // visible branch
    vis_scale: f64,
    vis_inv_sigma: f64,
    // occluded branch
    occ_sigma: f64,
    occ_lambda: f64,
    occ_scale: f64,
}

impl BeamModel {
    /// `d` must be positive and finite; `params` must be valid.
    #[inline]
    pub fn new(d: f64, params: &ObservationParams) -> Self {
        let sc = sigma_c(d, params);
        let sigma_eff = (sc * sc + params.sigma_m * params.sigma_m).sqrt();
        let m = params.m;
        let vis_mass = if d / sigma_eff > UNIT_MASS_CUTOFF && (m - d) / sigma_eff > UNIT_MASS_CUTOFF {
            1.0
        } else {
            cdf_diff((m - d) / sigma_eff, -d / sigma_eff)
        };
        let occ_mass = occluded_mass_with(d, sc, params.lambda, m);
        let keep = 1.0 - params.beta;
        Self {
            d,
            tail: params.beta / m,
            vis_scale: keep * INV_SQRT_2PI / (sigma_eff * vis_mass),
            vis_inv_sigma: 1.0 / sigma_eff,
            occ_sigma: sc,
            occ_lambda: params.lambda,
            occ_scale: keep * truncated_exp_norm(params.lambda, d) / occ_mass,
        }
    }

    /// `p(z | d, visible)` for a valid `z`.
    #[inline]
    pub fn visible(&self, z: f64) -> f64 {
        let u = (z - self.d) * self.vis_inv_sigma;
        self.vis_scale * (-0.5 * u * u).exp() + self.tail
    }

    /// `p(z | d, occluded)` for a valid `z`.
    #[inline]
    pub fn occluded(&self, z: f64) -> f64 {
        kernel(z, self.d, self.occ_sigma, self.occ_lambda, self.occ_scale) + self.tail
    }

    /// Mixture of the two branches with visibility probability `p_vis`.
    #[inline]
    pub fn marginal(&self, z: f64, p_vis: f64) -> f64 {
        p_vis * self.visible(z) + (1.0 - p_vis) * self.occluded(z)
    }
}

fn check(z: f64, d: f64, params: &ObservationParams) -> Result<()> {
    if !is_valid_depth(z, params.m) {
        return Err(Error::InvalidMeasurement(format!(
            "depth {} outside (0, {}]",
            z, params.m
        )));
    }
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::InvalidMeasurement(format!("predicted depth {} must be > 0", d)));
    }
    Ok(())
}

/// Density of measuring `z` when the object at predicted depth `d` is visible.
pub fn lik_visible(z: f64, d: f64, params: &ObservationParams) -> Result<f64> {
    check(z, d, params)?;
    Ok(BeamModel::new(d, params).visible(z))
}

/// Density of measuring `z` when the object at predicted depth `d` is hidden
/// behind some other surface.
pub fn lik_occluded(z: f64, d: f64, params: &ObservationParams) -> Result<f64> {
    check(z, d, params)?;
    Ok(BeamModel::new(d, params).occluded(z))
}

/// Per-pixel likelihood with the occlusion marginalized out. A pixel whose
/// ray misses the object model gets the flat background density `1/m`.
pub fn pixel_marginal(
    z: f64,
    d: Option<f64>,
    p_vis: f64,
    params: &ObservationParams,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_vis) {
        return Err(Error::InvalidParameter(format!("p_vis {} outside [0, 1]", p_vis)));
    }
    match d {
        None => {
            check(z, 1.0, params)?;
            Ok(1.0 / params.m)
        }
        Some(d) => {
            check(z, d, params)?;
            Ok(BeamModel::new(d, params).marginal(z, p_vis))
        }
    }
}

/// Draws a measurement of a surface at distance `b`: with probability `β` a
/// uniform outlier on `(0, m]`, otherwise `N(b, σ_c(b))` restricted to
/// `(0, m]` by rejection.
pub fn sample_measurement<R: Rng + ?Sized>(b: f64, params: &ObservationParams, rng: &mut R) -> f64 {
    debug_assert!(b > 0.0 && b <= params.m);
    let m = params.m;
    if rng.random::<f64>() < params.beta {
        return m * (1.0 - rng.random::<f64>());
    }
    let sigma = sigma_c(b, params);
    loop {
        let n: f64 = rng.sample(StandardNormal);
        let z = b + sigma * n;
        if z > 0.0 && z <= m {
            return z;
        }
    }
}
