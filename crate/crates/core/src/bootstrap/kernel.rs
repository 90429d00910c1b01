use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Covariance kernel of the dependent multipliers.
///
/// Both kernels are symmetric with support `[-1, 1]`, equal one at the origin
/// and have a nonnegative Fourier transform. Near zero, Bartlett behaves like
/// `1 - |x|` (q = 1, k_q = 1) and Parzen like `1 - 6x^2` (q = 2, k_q = 6).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    #[default]
    Bartlett,
    Parzen,
}

impl Kernel {
    pub fn eval(self, x: f64) -> f64 {
        let a = x.abs();
        match self {
            Kernel::Bartlett => {
                if a <= 1.0 {
                    1.0 - a
                } else {
                    0.0
                }
            }
            Kernel::Parzen => {
                if a <= 0.5 {
                    1.0 - 6.0 * a * a + 6.0 * a * a * a
                } else if a <= 1.0 {
                    2.0 * (1.0 - a).powi(3)
                } else {
                    0.0
                }
            }
        }
    }

    /// Multiplier autocovariance at integer lag `h` for bandwidth `l`.
    pub fn autocovariance(self, h: usize, l: usize) -> f64 {
        self.eval(h as f64 / l as f64)
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kernel::Bartlett => "bartlett",
            Kernel::Parzen => "parzen",
        })
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bartlett" => Ok(Kernel::Bartlett),
            "parzen" => Ok(Kernel::Parzen),
            other => Err(Error::InvalidConfig(format!("unknown kernel '{other}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_shape() {
        for k in [Kernel::Bartlett, Kernel::Parzen] {
            assert_eq!(k.eval(0.0), 1.0);
            assert_eq!(k.eval(1.0), 0.0);
            assert_eq!(k.eval(1.5), 0.0);
            for i in 0..=20 {
                let x = i as f64 / 20.0;
                assert_eq!(k.eval(x), k.eval(-x));
                assert!((0.0..=1.0).contains(&k.eval(x)));
            }
        }
        assert_eq!(Kernel::Bartlett.autocovariance(1, 2), 0.5);
        assert_eq!(Kernel::Bartlett.autocovariance(3, 6), 0.5);
        // the two Parzen branches meet at 1/2
        assert!((Kernel::Parzen.eval(0.5) - 0.25).abs() < 1e-15);
    }
}
