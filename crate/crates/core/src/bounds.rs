//! Closed-form finite-sample guarantees for the ratio estimator and for
//! returns evaluated with it.

use std::fmt;

use crate::error::{Error, Result};

/// Which set of constants to use for the estimation bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundMode {
    /// `K e^{d_inf} (sqrt(1/n) (mu + max(ln mu, -ln nu)) + sqrt(2 ln(1/delta) / n))`.
    #[default]
    Main,
    /// `8 K e^{d_inf} sqrt(1/n) (mu + max(ln mu, -ln nu) + mu sqrt(2 ln(1/delta)))`,
    /// the constants of the longer derivation.
    Supplementary,
}

impl std::str::FromStr for BoundMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "main" => Ok(BoundMode::Main),
            "supplementary" | "supp" => Ok(BoundMode::Supplementary),
            _ => Err(Error::arg(format!("unknown bound mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub nu: f64,
    pub mu: f64,
    pub n: f64,
    pub delta: f64,
    /// Inverse of the smallest relevant denominator mass.
    pub k: f64,
    /// Rényi-infinity divergence `ln sup P/Q`.
    pub d_inf: f64,
    pub horizon: usize,
    pub gamma: f64,
    /// Bound on `|r|`.
    pub reward_bound: f64,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu < 1.0 && self.mu > 1.0 && self.mu.is_finite()) {
            return Err(Error::arg(format!(
                "need 0 < nu < 1 < mu, got nu={}, mu={}",
                self.nu, self.mu
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::arg(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.n >= 1.0) || !self.n.is_finite() {
            return Err(Error::arg(format!("sample count must be at least 1, got {}", self.n)));
        }
        if !(self.k >= 1.0) || !self.k.is_finite() {
            return Err(Error::arg(format!("K must be at least 1, got {}", self.k)));
        }
        if !(self.d_inf >= 0.0) || !self.d_inf.is_finite() {
            return Err(Error::arg(format!(
                "d_inf must be finite and nonnegative, got {}",
                self.d_inf
            )));
        }
        if self.horizon == 0 {
            return Err(Error::arg("horizon must be positive"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::arg(format!("gamma must lie in [0, 1], got {}", self.gamma)));
        }
        if !(self.reward_bound >= 0.0) || !self.reward_bound.is_finite() {
            return Err(Error::arg("reward bound must be finite and nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub inputs: BoundInputs,
    pub mode: BoundMode,
    /// Bound on the squared sup-norm error of the ratio estimate.
    pub m: f64,
    pub zeta_err: f64,
    pub return_err_sq: f64,
    pub notes: Vec<String>,
}

pub const BOUND_CSV_HEADER: &str = "nu,mu,n,delta,K,dinf,T,gamma,R,mode,M,zeta_err,return_err_sq";

impl BoundReport {
    pub fn compute(inputs: BoundInputs, mode: BoundMode) -> Result<Self> {
        let m = estimation_bound(&inputs, mode)?;
        let zeta_err = zeta_error_bound(&inputs, m)?;
        let mut notes = Vec::new();
        let r = inputs.gamma / inputs.nu;
        if (r - 1.0).abs() < NEAR_ONE {
            notes.push(format!(
                "gamma/nu = {r} is close to 1; the series factor was summed term by term"
            ));
        }
        let return_err_sq = return_error_bound(&inputs, m)?;
        Ok(BoundReport {
            inputs,
            mode,
            m,
            zeta_err,
            return_err_sq,
            notes,
        })
    }

    pub fn csv_row(&self) -> String {
        let i = &self.inputs;
        format!(
            "{:?},{:?},{:?},{:?},{:?},{:?},{},{:?},{:?},{},{:?},{:?},{:?}",
            i.nu,
            i.mu,
            i.n,
            i.delta,
            i.k,
            i.d_inf,
            i.horizon,
            i.gamma,
            i.reward_bound,
            match self.mode {
                BoundMode::Main => "main",
                BoundMode::Supplementary => "supplementary",
            },
            self.m,
            self.zeta_err,
            self.return_err_sq
        )
    }
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "M          = {:.6}", self.m)?;
        writeln!(f, "zeta error = {:.6}", self.zeta_err)?;
        write!(f, "return err = {:.6}", self.return_err_sq)?;
        for n in &self.notes {
            write!(f, "\nnote: {n}")?;
        }
        Ok(())
    }
}

/// Estimation bound `M` on `||g_hat - g*||^2_inf`, main-text constants.
pub fn ratio_error_bound(inputs: &BoundInputs) -> Result<f64> {
    estimation_bound(inputs, BoundMode::Main)
}

pub fn estimation_bound(inputs: &BoundInputs, mode: BoundMode) -> Result<f64> {
    inputs.validate()?;
    let BoundInputs {
        nu,
        mu,
        n,
        delta,
        k,
        d_inf,
        ..
    } = *inputs;
    let scale = k * d_inf.exp();
    let complexity = mu + mu.ln().max(-nu.ln());
    let log_term = 2.0 * (1.0 / delta).ln();
    Ok(match mode {
        BoundMode::Main => scale * ((1.0 / n).sqrt() * complexity + (log_term / n).sqrt()),
        BoundMode::Supplementary => 8.0 * scale * (1.0 / n).sqrt() * (complexity + mu * log_term.sqrt()),
    })
}

/// `mu (1 + nu mu) / nu^2 * M / n^{1/4}`.
pub fn zeta_error_bound(inputs: &BoundInputs, m: f64) -> Result<f64> {
    if !(m >= 0.0) {
        return Err(Error::arg("M must be nonnegative"));
    }
    let BoundInputs { nu, mu, n, .. } = *inputs;
    if !(nu > 0.0) || !(n >= 1.0) {
        return Err(Error::arg("need nu > 0 and n >= 1"));
    }
    Ok(mu * (1.0 + nu * mu) / (nu * nu) * m / n.powf(0.25))
}

/// Below this distance from 1 the series factor is summed term by term to
/// avoid cancellation in the closed form.
const NEAR_ONE: f64 = 1e-4;

/// `T M^2 R^2 gamma / (nu sqrt n) * sum_{t=1..T} t r^{t-1}` with `r = gamma / nu`.
pub fn return_error_bound(inputs: &BoundInputs, m: f64) -> Result<f64> {
    if !(m >= 0.0) {
        return Err(Error::arg("M must be nonnegative"));
    }
    let BoundInputs {
        nu,
        n,
        horizon,
        gamma,
        reward_bound,
        ..
    } = *inputs;
    if gamma == 0.0 || m == 0.0 || reward_bound == 0.0 {
        return Ok(0.0);
    }
    let t = horizon as f64;
    let r = gamma / nu;
    let factor = if (r - 1.0).abs() < 1e-9 {
        t * (t + 1.0) / 2.0
    } else if (r - 1.0).abs() < NEAR_ONE {
        agp_loop(r, horizon) / r
    } else {
        (1.0 + r.powf(t) * (t * r - (t + 1.0))) / (1.0 - r).powi(2)
    };
    Ok(t * m * m * reward_bound * reward_bound * gamma / (nu * n.sqrt()) * factor)
}

fn agp_loop(r: f64, horizon: usize) -> f64 {
    let mut p = 1.0;
    let mut sum = 0.0;
    for t in 1..=horizon {
        p *= r;
        sum += t as f64 * p;
    }
    sum
}

/// `sum_{t=1..T} t r^t`.
pub fn agp_sum(r: f64, horizon: usize) -> Result<f64> {
    if horizon == 0 {
        return Err(Error::arg("horizon must be at least 1"));
    }
    if r == 1.0 {
        let t = horizon as f64;
        return Ok(t * (t + 1.0) / 2.0);
    }
    if (r - 1.0).abs() < NEAR_ONE {
        return Ok(agp_loop(r, horizon));
    }
    let t = horizon as f64;
    Ok((r + r.powf(t + 1.0) * (t * r - (t + 1.0))) / (1.0 - r).powi(2))
}

/// First-order error of a product: `prod x_i * sum eps_i / x_i`.
pub fn product_error_bound(values: &[f64], errors: &[f64]) -> Result<f64> {
    if values.len() != errors.len() {
        return Err(Error::Dimension {
            expected: values.len(),
            got: errors.len(),
        });
    }
    if values.contains(&0.0) {
        return Err(Error::arg("factors must be nonzero"));
    }
    let prod: f64 = values.iter().product();
    let rel: f64 = values.iter().zip(errors).map(|(x, e)| e / x).sum();
    Ok(prod * rel)
}

/// `ln max_x P(x) / Q(x)` over atoms with `P(x) > 0`.
pub fn renyi_inf_divergence_tabular(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Dimension {
            expected: p.len(),
            got: q.len(),
        });
    }
    let mut best = f64::NEG_INFINITY;
    for (i, (pi, qi)) in p.iter().zip(q).enumerate() {
        if *pi < 0.0 || *qi < 0.0 {
            return Err(Error::arg("probabilities must be nonnegative"));
        }
        if *pi > 0.0 {
            if *qi == 0.0 {
                return Err(Error::SupportViolation(format!(
                    "Q vanishes at atom {i} where P does not"
                )));
            }
            best = best.max(pi / qi);
        }
    }
    if best == f64::NEG_INFINITY {
        return Err(Error::arg("P has no mass"));
    }
    Ok(best.ln())
}

/// `1 / min Q(x)` over atoms with `Q(x) > 0`.
pub fn k_constant(q: &[f64]) -> Result<f64> {
    let min = q.iter().copied().filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
    if min.is_infinite() {
        return Err(Error::arg("Q has no mass"));
    }
    Ok(1.0 / min)
}
