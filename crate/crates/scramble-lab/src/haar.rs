//! Haar-random unitaries and the reference TMI magnitude they define.
//!
//! Fully scrambling circuits approach the Haar average, so dividing a
//! measured TMI by the mean |I3| of Haar-random operators at the same
//! size gives a dimensionless signal whose maximal-scrambling value is
//! close to -1.

use std::fs;
use std::path::{Path, PathBuf};

use faer::complex_native::c64;
use faer::Mat;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::choi::{tmi, PartitionSpec, TmiSample};
use crate::error::{Error, Result};
use crate::trajectory::EvolutionOperator;

/// Stream index reserved for Haar sampling so reference draws never
/// collide with trajectory streams of the same master seed.
const HAAR_STREAM: u64 = u64::MAX;

/// Draw a Haar-distributed unitary: QR of a complex Ginibre matrix with
/// each Q column rephased by the sign of the matching R diagonal.
pub fn sample_haar_unitary(dim: usize, rng: &mut impl Rng) -> Mat<c64> {
    let mut g = Mat::<c64>::zeros(dim, dim);
    let root_half = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..dim {
        for i in 0..dim {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            g[(i, j)] = c64::new(re * root_half, im * root_half);
        }
    }
    let qr = g.qr();
    let mut q = qr.compute_thin_q();
    let r = qr.compute_thin_r();
    for k in 0..dim {
        let rkk = r[(k, k)];
        let mag = rkk.norm();
        let phase = if mag > 0.0 { rkk * c64::new(1.0 / mag, 0.0) } else { c64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, k)] = q[(i, k)] * phase;
        }
    }
    q
}

/// Mean |I3| of Haar-random operators at the equal quadripartition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HaarReference {
    pub l: usize,
    pub n_samples: usize,
    pub seed: u64,
    pub mean_abs_i3: f64,
    pub std_error: f64,
}

impl HaarReference {
    pub fn normalize_value(&self, i3: f64) -> f64 {
        i3 / self.mean_abs_i3
    }

    /// Fill the normalized field of a TMI sample taken at the same L.
    pub fn normalize_sample(&self, sample: &TmiSample) -> Result<TmiSample> {
        if sample.l != self.l {
            return Err(Error::ShapeMismatch(format!(
                "reference is for L = {} but sample has L = {}",
                self.l, sample.l
            )));
        }
        Ok(TmiSample { i3_normalized: Some(self.normalize_value(sample.i3)), ..*sample })
    }

    fn is_plausible_for(&self, l: usize, n_samples: usize, seed: u64) -> bool {
        self.l == l
            && self.n_samples == n_samples
            && self.seed == seed
            && self.mean_abs_i3.is_finite()
            && self.mean_abs_i3 > 0.0
    }
}

/// Estimate the reference by direct sampling. Deterministic in
/// (l, n_samples, seed).
pub fn haar_i3_reference(l: usize, n_samples: usize, seed: u64) -> Result<HaarReference> {
    if n_samples < 1 {
        return Err(Error::InvalidParams("reference needs at least 1 sample".into()));
    }
    let part = PartitionSpec::equal_quadripartition(l)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(HAAR_STREAM);
    let nd = 1usize << l;
    let mut values = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let u = sample_haar_unitary(nd, &mut rng);
        let op = EvolutionOperator::from_matrix(l, 0, u)?;
        values.push(tmi(&op, &part)?.i3.abs());
    }
    let mean: f64 = values.iter().sum::<f64>() / n_samples as f64;
    let std_error = if n_samples < 2 {
        0.0
    } else {
        let var: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (n_samples - 1) as f64;
        (var / n_samples as f64).sqrt()
    };
    Ok(HaarReference { l, n_samples, seed, mean_abs_i3: mean, std_error })
}

pub fn reference_cache_path(cache_dir: &Path, l: usize, n_samples: usize, seed: u64) -> PathBuf {
    cache_dir.join(format!("haar_i3_L{l}_n{n_samples}_seed{seed}.json"))
}

/// Like [`haar_i3_reference`], but backed by a JSON file in `cache_dir`.
/// A missing, stale, or corrupt cache entry triggers recomputation and a
/// rewrite; it never fails the caller.
pub fn cached_haar_i3_reference(
    l: usize,
    n_samples: usize,
    seed: u64,
    cache_dir: &Path,
) -> Result<HaarReference> {
    let path = reference_cache_path(cache_dir, l, n_samples, seed);
    if let Ok(text) = fs::read_to_string(&path) {
        if let Ok(cached) = serde_json::from_str::<HaarReference>(&text) {
            if cached.is_plausible_for(l, n_samples, seed) {
                return Ok(cached);
            }
        }
    }
    let fresh = haar_i3_reference(l, n_samples, seed)?;
    fs::create_dir_all(cache_dir)?;
    fs::write(&path, serde_json::to_string_pretty(&fresh)? + "\n")?;
    Ok(fresh)
}
