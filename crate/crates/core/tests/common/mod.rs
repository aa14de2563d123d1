#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use specgame::frontier::{AchievedObjectives, EvalPoint, ResultSet, Strategy};

pub const LAMBDA_FAIR: f64 = 0.3;
pub const LAMBDA_PRIV: f64 = 0.01;
/// Targets the constructed set is measured against.
pub const LAMBDA_TARGETS: Strategy = Strategy::new(0.1, 5.0);

/// Ten fairness levels by ten privacy levels with
/// `err = 0.5 - 0.3 ℓ_fair - 0.01 ℓ_priv` (plus Gaussian noise on `err`).
///
/// Hinge levels sit mid-bin for a bin width of 0.02, so every level set
/// holds exactly one level of the other hinge.
pub fn lambda_set(noise_sd: f64, seed: u64) -> ResultSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, noise_sd.max(f64::MIN_POSITIVE)).unwrap();
    let mut set = ResultSet::new();
    for i in 0..10 {
        for j in 0..10 {
            let lf = 0.01 + 0.05 * i as f64;
            let lp = 0.01 + 1.0 * j as f64;
            let mut err = 0.5 - LAMBDA_FAIR * lf - LAMBDA_PRIV * lp;
            if noise_sd > 0.0 {
                err += noise.sample(&mut rng);
            }
            let objectives = AchievedObjectives {
                accuracy: 1.0 - err,
                coverage: 1.0 - err,
                disparity_achieved: LAMBDA_TARGETS.fairness_param + lf,
                privacy_achieved: LAMBDA_TARGETS.privacy_param + lp,
            };
            let s = Strategy::new(0.01 + 0.1 * i as f64, 1.0 + j as f64);
            set.add(EvalPoint::seed(s, objectives));
        }
    }
    set
}

/// Indices not dominated by any other vector (all objectives minimized),
/// keeping only the first of identical vectors. Quadratic on purpose.
pub fn brute_force_front(vectors: &[[f64; 3]]) -> Vec<usize> {
    let dominated = |a: &[f64; 3], b: &[f64; 3]| {
        a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y)
    };
    (0..vectors.len())
        .filter(|&i| {
            !(0..vectors.len()).any(|j| {
                dominated(&vectors[j], &vectors[i]) || (j < i && vectors[j] == vectors[i])
            })
        })
        .collect()
}
