//! Gaussian sample pairs and their analytic density ratio.

use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian {
    pub mean: f64,
    pub std: f64,
}

impl Gaussian {
    pub fn new(mean: f64, std: f64) -> Result<Self> {
        let g = Gaussian { mean, std };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mean.is_finite() && self.std > 0.0 && self.std.is_finite() {
            Ok(())
        } else {
            Err(Error::arg(format!("invalid normal N({}, {})", self.mean, self.std)))
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.std;
        (-0.5 * z * z).exp() / (self.std * (2.0 * std::f64::consts::PI).sqrt())
    }

    fn log_pdf_unnormalised(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.std;
        -0.5 * z * z - self.std.ln()
    }

    pub fn sample_n(&self, n: usize, rng: &mut Rng) -> Vec<f64> {
        let d = Normal::new(self.mean, self.std).expect("validated");
        (0..n).map(|_| d.sample(rng)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPairSpec {
    pub p: Gaussian,
    pub q: Gaussian,
    pub n: usize,
}

/// `n` draws from each of `P` and `Q`; all `P` draws come first on the stream.
pub fn gaussian_pair_sample(spec: &GaussianPairSpec, rng: &mut Rng) -> Result<(Vec<f64>, Vec<f64>)> {
    if spec.n == 0 {
        return Err(Error::arg("sample count must be positive"));
    }
    spec.p.validate()?;
    spec.q.validate()?;
    let p = spec.p.sample_n(spec.n, rng);
    let q = spec.q.sample_n(spec.n, rng);
    Ok((p, q))
}

/// `P(x) / Q(x)`, evaluated in log space.
pub fn true_gaussian_ratio(p: &Gaussian, q: &Gaussian, x: f64) -> Result<f64> {
    p.validate()?;
    q.validate()?;
    Ok((p.log_pdf_unnormalised(x) - q.log_pdf_unnormalised(x)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn analytic_ratio_examples() {
        let p = Gaussian::new(2.0, 1.0).unwrap();
        let q = Gaussian::new(4.0, 2.0).unwrap();
        assert!((true_gaussian_ratio(&p, &q, 4.0).unwrap() - 2.0 * (-2.0f64).exp()).abs() < 1e-12);
        assert!((true_gaussian_ratio(&p, &q, 2.0).unwrap() - 2.0 * 0.5f64.exp()).abs() < 1e-12);
        assert!((true_gaussian_ratio(&p, &q, 2.0).unwrap() - 3.2974).abs() < 1e-4);
        for x in [-3.0, 0.0, 7.5] {
            assert!((true_gaussian_ratio(&q, &q, x).unwrap() - 1.0).abs() < 1e-15);
            assert!((true_gaussian_ratio(&p, &q, x).unwrap() - p.pdf(x) / q.pdf(x)).abs() < 1e-9);
        }
        assert!(Gaussian::new(0.0, 0.0).is_err());
    }

    #[test]
    fn sample_means_match() {
        let q = Gaussian::new(4.0, 2.0).unwrap();
        let n = 100_000;
        let spec = GaussianPairSpec { p: q, q, n };
        let (a, b) = gaussian_pair_sample(&spec, &mut rng::from_seed(8)).unwrap();
        let ma = a.iter().sum::<f64>() / n as f64;
        let mb = b.iter().sum::<f64>() / n as f64;
        let tol = 4.0 * 2.0 / (n as f64).sqrt();
        assert!((mb - 4.0).abs() < tol);
        assert!((ma - mb).abs() < tol * 2f64.sqrt());
        let again = gaussian_pair_sample(&spec, &mut rng::from_seed(8)).unwrap();
        assert_eq!(again.0, a);
        assert!(gaussian_pair_sample(&GaussianPairSpec { n: 0, ..spec }, &mut rng::from_seed(8)).is_err());
    }
}
