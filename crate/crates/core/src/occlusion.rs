//! Per-pixel occlusion Markov chain and its Bayes update.
//!
//! Each pixel carries the probability that the tracked object is visible in
//! it. Between frames the probability is pushed through a two-state chain;
//! a new measurement then reweights the two states by the visible and
//! occluded beam densities.

use serde::{Deserialize, Serialize};

use crate::geometry::is_valid_depth;
use crate::observation::{BeamModel, ObservationParams};
use crate::{Error, Result};

/// Posterior visibilities are kept inside `[CLAMP, 1 − CLAMP]`.
pub const CLAMP: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OcclusionParams {
    /// P(visible now | visible one reference interval ago).
    pub p_vis_given_vis: f64,
    /// P(visible now | occluded one reference interval ago).
    pub p_vis_given_occ: f64,
    /// Interval the two probabilities refer to, seconds.
    pub reference_dt: f64,
    /// Visibility assigned to every pixel before the first frame.
    pub initial_p_vis: f64,
}

impl Default for OcclusionParams {
    fn default() -> Self {
        Self {
            p_vis_given_vis: 0.9,
            p_vis_given_occ: 0.3,
            reference_dt: 1.0,
            initial_p_vis: 0.5,
        }
    }
}

impl OcclusionParams {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !unit(self.p_vis_given_vis) || !unit(self.p_vis_given_occ) || !unit(self.initial_p_vis) {
            return Err(Error::InvalidParameter(
                "occlusion: probabilities must lie in [0, 1]".into(),
            ));
        }
        if !(self.reference_dt.is_finite() && self.reference_dt > 0.0) {
            return Err(Error::InvalidParameter("occlusion: reference_dt must be > 0".into()));
        }
        // second eigenvalue of the chain; fractional powers need it in [0, 1]
        if self.p_vis_given_vis < self.p_vis_given_occ {
            return Err(Error::InvalidParameter(
                "occlusion: p_vis_given_vis must be >= p_vis_given_occ".into(),
            ));
        }
        Ok(())
    }

    /// Chain transition for an elapsed time `dt`.
    pub fn transition(&self, dt: f64) -> Transition {
        let a = self.p_vis_given_vis;
        let b = self.p_vis_given_occ;
        let s = dt / self.reference_dt;
        if s == 1.0 {
            return Transition { from_vis: a, from_occ: b };
        }
        let eigen = a - b;
        if eigen >= 1.0 {
            // both states absorbing
            return Transition { from_vis: 1.0, from_occ: 0.0 };
        }
        let stationary = b / (1.0 - eigen);
        let decay = eigen.powf(s);
        Transition {
            from_vis: stationary + decay * (1.0 - stationary),
            from_occ: stationary * (1.0 - decay),
        }
    }
}

/// The chain's transition matrix raised to `dt / reference_dt`, computed
/// through its eigen-decomposition (eigenvalues 1 and
/// `p_vis_given_vis − p_vis_given_occ`). Only the visible row is kept.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition {
    /// P(visible after dt | visible now).
    pub from_vis: f64,
    /// P(visible after dt | occluded now).
    pub from_occ: f64,
}

impl Transition {
    #[inline]
    pub fn apply(&self, p: f64) -> f64 {
        p * self.from_vis + (1.0 - p) * self.from_occ
    }
}

/// Prior visibility after `dt` seconds, given visibility `p_vis` now.
pub fn propagate_visibility(p_vis: f64, dt: f64, params: &OcclusionParams) -> f64 {
    debug_assert!(dt >= 0.0);
    params.transition(dt).apply(p_vis)
}

/// Bayes update of a prior visibility with the two branch densities.
#[inline]
pub fn posterior_visibility(prior: f64, lik_visible: f64, lik_occluded: f64) -> f64 {
    if lik_visible == lik_occluded {
        return prior;
    }
    let num = prior * lik_visible;
    let post = num / (num + (1.0 - prior) * lik_occluded);
    if post.is_nan() {
        return prior;
    }
    post.clamp(CLAMP, 1.0 - CLAMP)
}

/// One step of the per-pixel occlusion recursion: propagate the previous
/// posterior through the chain, then condition on the measurement `z`.
/// Without a usable measurement or a predicted depth the propagated prior is
/// returned unchanged.
pub fn update_visibility(
    p_vis_prev: f64,
    z: Option<f64>,
    d: Option<f64>,
    dt: f64,
    obs: &ObservationParams,
    occ: &OcclusionParams,
) -> f64 {
    let prior = propagate_visibility(p_vis_prev, dt, occ);
    match (z, d) {
        (Some(z), Some(d)) if is_valid_depth(z, obs.m) && d > 0.0 && d.is_finite() => {
            let beam = BeamModel::new(d, obs);
            posterior_visibility(prior, beam.visible(z), beam.occluded(z))
        }
        _ => prior,
    }
}

/// Per-pixel visibility probabilities of one particle, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct OcclusionBelief {
    pub p_vis: Vec<f32>,
}

impl OcclusionBelief {
    pub fn uniform(len: usize, p_vis: f64) -> Self {
        Self {
            p_vis: vec![p_vis as f32; len],
        }
    }

    pub fn len(&self) -> usize {
        self.p_vis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_vis.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix2;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    /// Chain matrix to the power `s` via an explicit eigen-decomposition;
    /// independent of `Transition`. Columns are the previous state (vis, occ),
    /// rows the next state.
    fn chain_power_explicit(params: &OcclusionParams, s: f64) -> Matrix2<f64> {
        let (a, b) = (params.p_vis_given_vis, params.p_vis_given_occ);
        let lambda2 = a - b;
        // eigenvectors: stationary (b, 1 − a) for eigenvalue 1, (1, −1) for λ₂
        let v = Matrix2::new(b, 1.0, 1.0 - a, -1.0);
        let d = Matrix2::new(1.0, 0.0, 0.0, lambda2.powf(s));
        v * d * v.try_inverse().unwrap()
    }

    /// Four-term enumeration of the occlusion recursion.
    fn enumerate(p_prev: f64, lv: f64, lo: f64, t: &Matrix2<f64>) -> f64 {
        let prev = [p_prev, 1.0 - p_prev];
        let lik = [lv, lo];
        let mut joint = [0.0; 2];
        for now in 0..2 {
            for before in 0..2 {
                joint[now] += lik[now] * t[(now, before)] * prev[before];
            }
        }
        (joint[0] / (joint[0] + joint[1])).clamp(CLAMP, 1.0 - CLAMP)
    }

    #[test]
    fn one_second_values() {
        let p = OcclusionParams::default();
        assert_eq!(propagate_visibility(1.0, 1.0, &p), 0.9);
        assert_eq!(propagate_visibility(0.0, 1.0, &p), 0.3);
    }

    #[test]
    fn stationary_point() {
        let p = OcclusionParams::default();
        for dt in [0.0, 1.0 / 30.0, 0.5, 1.0, 7.0] {
            assert!((propagate_visibility(0.75, dt, &p) - 0.75).abs() < 1e-15);
        }
    }

    #[test]
    fn thirty_frames_make_one_second() {
        let p = OcclusionParams::default();
        for start in [0.0, 0.2, 1.0] {
            let mut q = start;
            for _ in 0..30 {
                q = propagate_visibility(q, 1.0 / 30.0, &p);
            }
            assert!((q - propagate_visibility(start, 1.0, &p)).abs() < 1e-9);
        }
    }

    #[test]
    fn matches_eigen_decomposition_power() {
        let p = OcclusionParams::default();
        for s in [0.1, 1.0 / 30.0, 1.0, 2.7] {
            let t = chain_power_explicit(&p, s);
            for q in [0.0, 0.3, 1.0] {
                let expect = t[(0, 0)] * q + t[(0, 1)] * (1.0 - q);
                assert!((propagate_visibility(q, s, &p) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn equal_evidence_keeps_prior() {
        for prior in [0.0, 0.1, 0.5, 0.77, 1.0] {
            assert_eq!(posterior_visibility(prior, 2.5, 2.5), prior);
        }
    }

    #[test]
    fn measurement_at_prediction_means_visible() {
        let obs = ObservationParams::default();
        let occ = OcclusionParams::default();
        let post = update_visibility(0.5, Some(1.0), Some(1.0), 0.0, &obs, &occ);
        assert!(post > 0.95, "{}", post);
        let post = update_visibility(0.5, Some(0.5), Some(1.0), 0.0, &obs, &occ);
        assert!(post < 0.05, "{}", post);
    }

    #[test]
    fn no_information_returns_prior() {
        let obs = ObservationParams::default();
        let occ = OcclusionParams::default();
        let prior = propagate_visibility(0.2, 0.1, &occ);
        assert_eq!(update_visibility(0.2, None, Some(1.0), 0.1, &obs, &occ), prior);
        assert_eq!(update_visibility(0.2, Some(f64::NAN), Some(1.0), 0.1, &obs, &occ), prior);
        assert_eq!(update_visibility(0.2, Some(1.0), None, 0.1, &obs, &occ), prior);
    }

    #[test]
    fn repeated_evidence_converges_monotonically() {
        let obs = ObservationParams::default();
        let occ = OcclusionParams::default();
        let dt = 1.0 / 30.0;
        let (mut up, mut down) = (0.5, 0.5);
        let (mut last_up, mut last_down) = (up, down);
        for _ in 0..100 {
            up = update_visibility(up, Some(1.0), Some(1.0), dt, &obs, &occ);
            down = update_visibility(down, Some(0.4), Some(1.0), dt, &obs, &occ);
            assert!(up >= last_up && down <= last_down);
            last_up = up;
            last_down = down;
        }
        assert!(up > 0.999, "{}", up);
        assert!(down < 0.02, "{}", down);
    }

    #[test]
    fn rejects_invalid_chain() {
        let p = OcclusionParams { p_vis_given_vis: 0.2, p_vis_given_occ: 0.6, ..Default::default() };
        assert!(p.validate().is_err());
        assert!(OcclusionParams::default().validate().is_ok());
    }

    #[test]
    fn randomized_update_matches_enumeration() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let obs = ObservationParams::default();
        for _ in 0..2000 {
            let occ = OcclusionParams {
                p_vis_given_occ: rng.random_range(0.0..0.5),
                p_vis_given_vis: rng.random_range(0.5..1.0),
                reference_dt: rng.random_range(0.2..2.0),
                initial_p_vis: 0.5,
            };
            let dt = rng.random_range(0.0..1.0);
            let p_prev = rng.random_range(0.0..1.0);
            let d = rng.random_range(0.3..4.0);
            let z = rng.random_range(0.05..5.0);
            let beam = BeamModel::new(d, &obs);
            let expect = enumerate(
                p_prev,
                beam.visible(z),
                beam.occluded(z),
                &chain_power_explicit(&occ, dt / occ.reference_dt),
            );
            let got = update_visibility(p_prev, Some(z), Some(d), dt, &obs, &occ);
            assert!((got - expect).abs() < 1e-12, "{} vs {}", got, expect);
        }
    }

    proptest! {
        #[test]
        fn propagation_stays_in_unit_interval_and_is_a_semigroup(
            p in 0.0f64..=1.0,
            dt1 in 0.0f64..3.0,
            dt2 in 0.0f64..3.0,
            a in 0.5f64..=1.0,
            b in 0.0f64..0.5,
        ) {
            let params = OcclusionParams { p_vis_given_vis: a, p_vis_given_occ: b, ..Default::default() };
            let once = propagate_visibility(p, dt1 + dt2, &params);
            let twice = propagate_visibility(propagate_visibility(p, dt1, &params), dt2, &params);
            prop_assert!((once - twice).abs() < 1e-9);
            prop_assert!((0.0..=1.0).contains(&once));
        }
    }
}
