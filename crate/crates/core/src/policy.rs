//! Deterministic runtime for the denoising recurrence
//!
//! ```text
//! A^{k-1} = alpha * (A^k - gamma * eps(O, A^k, k) + N(0, sigma^2 I))
//! ```
//!
//! iterated from a Gaussian draw `A^K` down to `A^0`. The noise predictor is
//! injected; no network lives here.
//!
//! # Random stream
//!
//! All randomness comes from ChaCha20 (`rand_chacha::ChaCha20Rng`) seeded with
//! `SeedableRng::seed_from_u64(rng_seed)`. Each standard normal consumes one
//! `next_u64()`: the top 53 bits `b` give `u = (b + 0.5) / 2^53` in `(0, 1)`,
//! mapped through Acklam's rational inverse normal CDF. The initial draw
//! takes `dim` normals, then each step takes `dim` more (drawn even when
//! `sigma = 0`, so streams stay aligned across parameter changes).

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DenoiseError {
    #[error("expected a vector of length {expected}, got {actual}")]
    Length { expected: usize, actual: usize },
    #[error("action sample is already at step 0")]
    Exhausted,
    #[error("invalid denoise parameters: {0}")]
    InvalidParams(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenoiseParams {
    pub alpha: f64,
    pub gamma: f64,
    pub sigma: f64,
    /// Number of denoising steps `K`.
    pub steps: usize,
    pub rng_seed: u64,
}

impl DenoiseParams {
    pub fn validate(&self) -> Result<(), DenoiseError> {
        if self.steps == 0 {
            return Err(DenoiseError::InvalidParams("step count must be at least 1"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(DenoiseError::InvalidParams("sigma must be nonnegative"));
        }
        if !(self.alpha.is_finite() && self.gamma.is_finite()) {
            return Err(DenoiseError::InvalidParams("alpha and gamma must be finite"));
        }
        Ok(())
    }
}

/// Coefficients `(alpha, gamma, sigma)` for a given step index `k`.
pub trait Schedule {
    fn coefficients(&self, k: usize) -> (f64, f64, f64);
}

impl Schedule for DenoiseParams {
    fn coefficients(&self, _k: usize) -> (f64, f64, f64) {
        (self.alpha, self.gamma, self.sigma)
    }
}

impl<F: Fn(usize) -> (f64, f64, f64)> Schedule for F {
    fn coefficients(&self, k: usize) -> (f64, f64, f64) {
        self(k)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionSample {
    pub values: Vec<f64>,
    /// Current denoise index; `K` for the initial draw, 0 for the output.
    pub k: usize,
}

/// `eps_theta(O, A, k)`; returns a vector of the same length as `A`.
pub trait NoisePredictor {
    fn predict(&self, observation: &[f64], action: &[f64], k: usize) -> Vec<f64>;
}

impl<F: Fn(&[f64], &[f64], usize) -> Vec<f64>> NoisePredictor for F {
    fn predict(&self, observation: &[f64], action: &[f64], k: usize) -> Vec<f64> {
        self(observation, action, k)
    }
}

/// Always predicts zero noise.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroPredictor;

impl NoisePredictor for ZeroPredictor {
    fn predict(&self, _observation: &[f64], action: &[f64], _k: usize) -> Vec<f64> {
        vec![0.0; action.len()]
    }
}

/// `eps = scale * A + offset`, elementwise.
#[derive(Debug, Clone, Copy)]
pub struct AffinePredictor {
    pub scale: f64,
    pub offset: f64,
}

impl NoisePredictor for AffinePredictor {
    fn predict(&self, _observation: &[f64], action: &[f64], _k: usize) -> Vec<f64> {
        action.iter().map(|a| self.scale * a + self.offset).collect()
    }
}

/// `values' = alpha * (values - gamma * eps + noise)`, decrementing `k`.
pub fn denoise_step(
    a: &ActionSample,
    eps: &[f64],
    params: &DenoiseParams,
    noise: &[f64],
) -> Result<ActionSample, DenoiseError> {
    let (alpha, gamma, _) = params.coefficients(a.k);
    step_with(a, eps, alpha, gamma, noise)
}

fn step_with(
    a: &ActionSample,
    eps: &[f64],
    alpha: f64,
    gamma: f64,
    noise: &[f64],
) -> Result<ActionSample, DenoiseError> {
    if a.k == 0 {
        return Err(DenoiseError::Exhausted);
    }
    for v in [eps, noise] {
        if v.len() != a.values.len() {
            return Err(DenoiseError::Length {
                expected: a.values.len(),
                actual: v.len(),
            });
        }
    }
    let values = a
        .values
        .iter()
        .zip(eps)
        .zip(noise)
        .map(|((x, e), n)| alpha * (x - gamma * e + n))
        .collect();
    Ok(ActionSample { values, k: a.k - 1 })
}

/// ChaCha20-backed standard normal stream.
pub struct NormalStream {
    rng: ChaCha20Rng,
}

impl NormalStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    /// Uniform in the open interval `(0, 1)`.
    pub fn next_uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_normal(&mut self) -> f64 {
        inverse_normal_cdf(self.next_uniform())
    }

    pub fn fill(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.next_normal();
        }
    }
}

/// Acklam's rational approximation of the standard normal quantile
/// (relative error below 1.15e-9).
pub fn inverse_normal_cdf(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.38357751867269e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// The seeded initial draw `A^K`.
pub fn initial_sample(params: &DenoiseParams, dim: usize) -> ActionSample {
    let mut values = vec![0.0; dim];
    NormalStream::new(params.rng_seed).fill(&mut values);
    ActionSample {
        values,
        k: params.steps,
    }
}

/// Runs the full chain from `A^K` to `A^0` with constant coefficients.
pub fn run_denoising(
    observation: &[f64],
    predictor: &dyn NoisePredictor,
    params: &DenoiseParams,
    dim: usize,
) -> Result<ActionSample, DenoiseError> {
    run_denoising_with_schedule(observation, predictor, params, params, dim)
}

/// Like [`run_denoising`], taking `(alpha, gamma, sigma)` per step from
/// `schedule`. `params.steps` and `params.rng_seed` still apply.
pub fn run_denoising_with_schedule(
    observation: &[f64],
    predictor: &dyn NoisePredictor,
    params: &DenoiseParams,
    schedule: &dyn Schedule,
    dim: usize,
) -> Result<ActionSample, DenoiseError> {
    params.validate()?;
    if dim == 0 {
        return Err(DenoiseError::InvalidParams("action dimension must be at least 1"));
    }
    let mut stream = NormalStream::new(params.rng_seed);
    let mut a = ActionSample {
        values: vec![0.0; dim],
        k: params.steps,
    };
    stream.fill(&mut a.values);
    let mut noise = vec![0.0; dim];
    while a.k > 0 {
        let eps = predictor.predict(observation, &a.values, a.k);
        let (alpha, gamma, sigma) = schedule.coefficients(a.k);
        stream.fill(&mut noise);
        for n in &mut noise {
            *n *= sigma;
        }
        a = step_with(&a, &eps, alpha, gamma, &noise)?;
    }
    Ok(a)
}
