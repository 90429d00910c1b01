//! Dependent Gaussian multipliers with kernel covariance `a(h / l)`.

use rand::Rng;
use rand_distr::StandardNormal;

use super::kernel::Kernel;
use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// Anything that can fill a buffer of bootstrap multipliers from a replication stream.
///
/// Implementations must be deterministic functions of the stream so that
/// replications reproduce regardless of scheduling.
pub trait MultiplierSource: Sync {
    fn fill(&self, rng: &mut StreamRng, out: &mut [f64]);
}

/// Degenerate multipliers `W_t = value`, used to check the resampling algebra.
#[derive(Debug, Clone, Copy)]
pub struct ConstantMultipliers(pub f64);

impl MultiplierSource for ConstantMultipliers {
    fn fill(&self, _rng: &mut StreamRng, out: &mut [f64]) {
        out.fill(self.0);
    }
}

/// Lower-triangular Cholesky factor of a banded symmetric Toeplitz matrix.
///
/// Row `i` stores `L[i][i-b..=i]` in `band[i * (b + 1)..]`, left padded with
/// zeros for the first `b` rows.
#[derive(Debug, Clone)]
struct BandedCholesky {
    n: usize,
    bw: usize,
    band: Vec<f64>,
}

impl BandedCholesky {
    /// Factor the `n x n` Toeplitz matrix with first row `acov[0..=bw]` (zero beyond).
    fn factor(acov: &[f64], n: usize) -> Result<Self> {
        let bw = acov.len() - 1;
        let width = bw + 1;
        let mut band = vec![0.0; n * width];
        let idx = |i: usize, j: usize| i * width + (j + bw - i);
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let mut s = acov[i - j];
                for k in lo.max(j.saturating_sub(bw))..j {
                    s -= band[idx(i, k)] * band[idx(j, k)];
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::NonPsdCovariance { pivot: i, value: s });
                    }
                    band[idx(i, i)] = s.sqrt();
                } else {
                    band[idx(i, j)] = s / band[idx(j, j)];
                }
            }
        }
        Ok(BandedCholesky { n, bw, band })
    }

    /// `out = L * eta` for the leading `out.len()` rows.
    fn apply(&self, eta: &[f64], out: &mut [f64]) {
        let width = self.bw + 1;
        for (i, o) in out.iter_mut().enumerate() {
            let lo = i.saturating_sub(self.bw);
            let row = &self.band[i * width..(i + 1) * width];
            *o = (lo..=i).map(|j| row[j + self.bw - i] * eta[j]).sum();
        }
    }
}

/// Stationary `(l-1)`-dependent Gaussian multipliers with `cov(W_t, W_{t+h}) = a(h / l)`.
///
/// Bartlett multipliers are an exact moving average of `l` standard normals
/// scaled by `l^{-1/2}`; other kernels use a banded Cholesky factor of the
/// covariance matrix computed once for the longest series needed. With
/// `l = 1` both routes return the raw normal draws.
#[derive(Debug, Clone)]
pub struct KernelMultipliers {
    kernel: Kernel,
    l: usize,
    factor: Option<BandedCholesky>,
}

impl KernelMultipliers {
    /// Prepare multipliers for bandwidth `l` and series up to `max_len` long.
    pub fn new(kernel: Kernel, l: usize, max_len: usize) -> Result<Self> {
        if l == 0 {
            return Err(Error::InvalidConfig("bandwidth must be at least 1".into()));
        }
        let factor = match kernel {
            Kernel::Bartlett => None,
            _ => {
                let acov: Vec<f64> = (0..l).map(|h| kernel.autocovariance(h, l)).collect();
                Some(BandedCholesky::factor(&acov, max_len)?)
            }
        };
        Ok(KernelMultipliers { kernel, l, factor })
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn bandwidth(&self) -> usize {
        self.l
    }
}

impl MultiplierSource for KernelMultipliers {
    fn fill(&self, rng: &mut StreamRng, out: &mut [f64]) {
        let n = out.len();
        match &self.factor {
            None => {
                let l = self.l;
                let eta: Vec<f64> = (0..n + l - 1).map(|_| rng.sample(StandardNormal)).collect();
                if l == 1 {
                    out.copy_from_slice(&eta);
                    return;
                }
                let scale = 1.0 / (l as f64).sqrt();
                let mut window: f64 = eta[..l].iter().sum();
                out[0] = window * scale;
                for t in 1..n {
                    window += eta[t + l - 1] - eta[t - 1];
                    out[t] = window * scale;
                }
            }
            Some(chol) => {
                assert!(n <= chol.n, "multiplier factor prepared for {} draws, asked for {n}", chol.n);
                let eta: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                chol.apply(&eta, out);
            }
        }
    }
}

/// Draw one multiplier sequence of length `n`.
pub fn generate_multipliers(n: usize, l: usize, kernel: Kernel, rng: &mut StreamRng) -> Result<Vec<f64>> {
    if l == 0 || l >= n {
        return Err(Error::InvalidConfig(format!(
            "bandwidth {l} must satisfy 1 <= l < n = {n}"
        )));
    }
    let source = KernelMultipliers::new(kernel, l, n)?;
    let mut out = vec![0.0; n];
    source.fill(rng, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKey;

    fn autocov(w: &[f64], h: usize) -> f64 {
        let n = w.len();
        let mean = w.iter().sum::<f64>() / n as f64;
        w[..n - h]
            .iter()
            .zip(&w[h..])
            .map(|(a, b)| (a - mean) * (b - mean))
            .sum::<f64>()
            / n as f64
    }

    #[test]
    fn bartlett_lag_one_at_bandwidth_two() {
        let mut rng = StreamKey::root(11).rng();
        let w = generate_multipliers(100_000, 2, Kernel::Bartlett, &mut rng).unwrap();
        assert!((autocov(&w, 1) - 0.5).abs() < 0.02);
    }

    #[test]
    fn unit_bandwidth_is_white() {
        for kernel in [Kernel::Bartlett, Kernel::Parzen] {
            let mut rng = StreamKey::root(12).rng();
            let w = generate_multipliers(100_000, 1, kernel, &mut rng).unwrap();
            assert!(autocov(&w, 1).abs() < 0.02);
            assert!((autocov(&w, 0) - 1.0).abs() < 0.02);
        }
    }

    #[test]
    fn unit_bandwidth_routes_agree() {
        let a = generate_multipliers(50, 1, Kernel::Bartlett, &mut StreamKey::root(3).rng()).unwrap();
        let b = generate_multipliers(50, 1, Kernel::Parzen, &mut StreamKey::root(3).rng()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn parzen_moments() {
        let l = 5;
        let mut rng = StreamKey::root(13).rng();
        let w = generate_multipliers(100_000, l, Kernel::Parzen, &mut rng).unwrap();
        for h in 0..=l + 2 {
            let expected = Kernel::Parzen.autocovariance(h, l);
            assert!((autocov(&w, h) - expected).abs() < 0.02, "lag {h}");
        }
    }

    #[test]
    fn banded_cholesky_reconstructs_toeplitz() {
        let acov = [1.0, 0.6, 0.25, 0.05];
        let n = 12;
        let chol = BandedCholesky::factor(&acov, n).unwrap();
        // entry (i, j) of L L'
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    let lik = if k <= i && i - k <= chol.bw { chol.band[i * 4 + k + 3 - i] } else { 0.0 };
                    let ljk = if k <= j && j - k <= chol.bw { chol.band[j * 4 + k + 3 - j] } else { 0.0 };
                    s += lik * ljk;
                }
                let h = i.abs_diff(j);
                let expected = if h < acov.len() { acov[h] } else { 0.0 };
                assert!((s - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn indefinite_band_is_rejected() {
        assert!(matches!(
            BandedCholesky::factor(&[1.0, 1.2], 10),
            Err(Error::NonPsdCovariance { .. })
        ));
    }

    #[test]
    fn invalid_bandwidths() {
        let mut rng = StreamKey::root(1).rng();
        assert!(generate_multipliers(10, 0, Kernel::Bartlett, &mut rng).is_err());
        assert!(generate_multipliers(10, 10, Kernel::Bartlett, &mut rng).is_err());
    }
}
