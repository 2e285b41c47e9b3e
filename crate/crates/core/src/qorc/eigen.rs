//! Smallest nonzero eigenvalue of a diagonal encoding by power iteration on
//! its pseudoinverse encoding.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::blockenc::{be_invert, Approx, BlockEncoding, Complex};

use super::PipelineError;

/// Relative width used to group numerically equal eigenvalues.
const SAME_EIGEN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenEstimate {
    /// Estimated smallest nonzero encoded eigenvalue on the start support.
    pub value: f64,
    pub iterations: usize,
    /// Norm of the start vector's component in the target eigenspace.
    pub initial_overlap: f64,
    /// Second smallest over smallest distinct nonzero eigenvalue; infinite when they all coincide.
    pub gap_proxy: f64,
    /// Rayleigh quotients of the pseudoinverse encoding, one per iteration.
    pub rq_history: Vec<f64>,
    pub converged: bool,
    /// The encoding vanishes somewhere on the support, so the minimum there is zero.
    pub zero_on_range: bool,
}

/// Power iteration on the pseudoinverse of `be` (a diagonal encoding whose
/// nonzero spectrum lies in `[1/kappa_a, 1]`), started from a seeded Gaussian
/// vector on `support`.
///
/// Stops once the extrapolated Rayleigh-quotient error `|dRQ| * max(1, r/(1-r))`,
/// with `r` the ratio of successive differences, falls below `eps * RQ`.
pub fn min_eigen_power(
    be: &BlockEncoding,
    support: &[usize],
    kappa_a: f64,
    eps: f64,
    seed: u64,
    max_iter: usize,
) -> Result<EigenEstimate, PipelineError> {
    let diag = be.encoded_diagonal().ok_or(PipelineError::NotDiagonal)?;
    if support.is_empty() {
        return Err(PipelineError::SizeMismatch { expected: 1, got: 0 });
    }
    if let Some(&bad) = support.iter().find(|&&k| k >= diag.len()) {
        return Err(PipelineError::IndexOutOfRange { index: bad, limit: diag.len() });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = vec![Complex::new(0.0, 0.0); diag.len()];
    for &k in support {
        v[k] = Complex::new(StandardNormal.sample(&mut rng), 0.0);
    }
    normalize(&mut v);

    let on_support: Vec<f64> = support.iter().map(|&k| diag[k]).collect();
    let zero_on_range = on_support.contains(&0.0);
    let mut distinct: Vec<f64> = on_support.iter().cloned().filter(|&e| e != 0.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup_by(|b, a| (*b - *a).abs() <= SAME_EIGEN * a.abs());
    let target = if zero_on_range { 0.0 } else { distinct[0] };
    let initial_overlap = support
        .iter()
        .filter(|&&k| (diag[k] - target).abs() <= SAME_EIGEN * target.abs())
        .map(|&k| v[k].norm_sqr())
        .sum::<f64>()
        .sqrt()
        .min(1.0);
    let gap_proxy = distinct.get(1).map_or(f64::INFINITY, |second| second / distinct[0]);

    if zero_on_range {
        return Ok(EigenEstimate {
            value: 0.0,
            iterations: 0,
            initial_overlap,
            gap_proxy,
            rq_history: Vec::new(),
            converged: true,
            zero_on_range,
        });
    }
    if initial_overlap == 0.0 {
        return Err(PipelineError::ZeroOverlap);
    }

    let inv = be_invert(be, kappa_a, Approx::Exact)?;
    let mut rq_history = Vec::new();
    let mut rq_prev = rayleigh(&inv, &v);
    let mut delta_prev: Option<f64> = None;
    let estimate = |rq: f64, iterations: usize, converged: bool, hist: Vec<f64>| EigenEstimate {
        value: 1.0 / (kappa_a * rq),
        iterations,
        initial_overlap,
        gap_proxy,
        rq_history: hist,
        converged,
        zero_on_range,
    };
    for it in 1..=max_iter {
        v = inv.apply_encoded(&v);
        normalize(&mut v);
        let rq = rayleigh(&inv, &v);
        rq_history.push(rq);
        let delta = rq - rq_prev;
        let ratio = delta_prev.filter(|d| *d != 0.0).map_or(0.0, |d| (delta / d).clamp(0.0, 1.0 - 1e-12));
        let extrapolated = delta.abs() * (ratio / (1.0 - ratio)).max(1.0);
        if delta == 0.0 || extrapolated < eps * rq.abs() {
            return Ok(estimate(rq, it, true, rq_history));
        }
        delta_prev = Some(delta);
        rq_prev = rq;
    }
    let best = estimate(rq_prev, max_iter, false, rq_history);
    Err(PipelineError::NoConvergence { best: Box::new(best) })
}

fn normalize(v: &mut [Complex]) {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in v.iter_mut() {
        *z /= norm;
    }
}

fn rayleigh(be: &BlockEncoding, v: &[Complex]) -> f64 {
    let w = be.apply_encoded(v);
    v.iter().zip(&w).map(|(a, b)| (a.conj() * b).re).sum()
}
