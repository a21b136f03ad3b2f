use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::rng::{replicate_stream, Purpose};
use super::sphere::uniform_direction;
use super::{replicate_mean_and_se, McConfig, RadialDensity};
use crate::error::{Error, Result};
use crate::estimate::{Method, TailEstimate};
use crate::linalg::SignedSpectrum;

/// Brute-force estimate of `P(|w₋|² − |w₊|² ≥ R²)` by direct sampling of `w`.
pub fn mc_oracle(r: f64, spectrum: &SignedSpectrum, cfg: McConfig) -> Result<TailEstimate> {
    if !(r >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "hyperboloid radius must be nonnegative, got {r}"
        )));
    }
    Ok(OracleSampler::new(spectrum, &RadialDensity::Normal, cfg)?.evaluate(r))
}

/// Sorted draws of `|w₋|² − |w₊|²`, one vector per replicate.
///
/// `w = |D|^{1/2} u` where `u` is standard normal, or `ρ ξ` with a custom
/// radial law. The antithetic flag is ignored: `u ↦ −u` leaves the event
/// unchanged.
#[derive(Debug, Clone)]
pub struct OracleSampler {
    replicates: Vec<Vec<f64>>,
    evaluations: u64,
}

impl OracleSampler {
    pub fn new(spectrum: &SignedSpectrum, density: &RadialDensity, cfg: McConfig) -> Result<Self> {
        cfg.validate()?;
        if spectrum.n_plus() + spectrum.n_minus() == 0 {
            return Err(Error::AllZeroSpectrum);
        }
        // signed weights: + for the negative-curvature part
        let weights: Vec<f64> = spectrum
            .d_minus
            .iter()
            .copied()
            .chain(spectrum.d_plus.iter().map(|d| -d))
            .collect();
        let replicates = (0..cfg.replicates)
            .into_par_iter()
            .map(|rep| {
                let mut rng = replicate_stream(cfg.seed, Purpose::Oracle, rep);
                let mut u = vec![0.0; weights.len()];
                let mut out: Vec<f64> = (0..cfg.samples_per_replicate)
                    .map(|_| {
                        match density {
                            RadialDensity::Normal => {
                                for x in u.iter_mut() {
                                    *x = rng.sample(StandardNormal);
                                }
                            }
                            RadialDensity::Custom(law) => {
                                let rho = law.sample_radius(&mut rng, weights.len());
                                uniform_direction(&mut rng, &mut u);
                                u.iter_mut().for_each(|x| *x *= rho);
                            }
                        }
                        weights.iter().zip(&u).map(|(w, x)| w * x * x).sum::<f64>()
                    })
                    .collect();
                out.sort_unstable_by(f64::total_cmp);
                out
            })
            .collect();
        Ok(OracleSampler {
            replicates,
            evaluations: cfg.total_samples(),
        })
    }

    pub fn evaluate(&self, r: f64) -> TailEstimate {
        let r2 = r * r;
        let freqs: Vec<f64> = self
            .replicates
            .iter()
            .map(|q| {
                let below = q.partition_point(|&v| v < r2);
                (q.len() - below) as f64 / q.len() as f64
            })
            .collect();
        let (value, se) = replicate_mean_and_se(&freqs);
        TailEstimate {
            value,
            standard_error: se,
            method: Method::Oracle,
            evaluations: self.evaluations,
        }
        .clamped()
    }
}
