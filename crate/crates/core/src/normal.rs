//! Standard normal distribution helpers.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

fn standard() -> Normal {
    Normal::standard()
}

/// `Phi^{-1}(p)` for `p` in `(0, 1)`.
pub fn quantile(p: f64) -> f64 {
    standard().inverse_cdf(p)
}

/// `Phi(x)`.
pub fn cdf(x: f64) -> f64 {
    standard().cdf(x)
}

/// Two-sided critical value `z_{(1+level)/2}`.
pub fn two_sided_z(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidInput(format!("confidence level {level} outside (0, 1)")));
    }
    Ok(quantile(0.5 * (1.0 + level)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn familiar_quantiles() {
        assert!((quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-12);
        assert!((quantile(0.5)).abs() < 1e-15);
        assert!((quantile(0.05) + 1.644_853_626_951_472_2).abs() < 1e-12);
        assert!((two_sided_z(0.95).unwrap() - 1.959_963_984_540_054).abs() < 1e-12);
        assert!(two_sided_z(1.0).is_err());
    }

    #[test]
    fn quantile_reference_values() {
        let refs = [
            (1e-10, -6.361340902404056),
            (1e-4, -3.7190164854556804),
            (0.02, -2.053748910631823),
            (0.77, 0.7388468491852137),
            (0.999, 3.090232306167813),
            (1.0 - 1e-9, 5.997807019601637),
        ];
        for (p, q) in refs {
            assert!((quantile(p) - q).abs() < 1e-12 * q.abs().max(1.0), "p={p}");
        }
    }
}
