use std::fmt;

use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::errors::{mean_and_sd, ErrorArray};
use crate::linalg::Ldl;
use crate::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized lower and upper incomplete gamma `(P(a, x), Q(a, x))`.
fn incomplete_gamma(a: f64, x: f64) -> (f64, f64) {
    if x <= 0.0 {
        return (0.0, 1.0);
    }
    let log_prefactor = a * x.ln() - x - ln_gamma(a);
    if x < a + 1.0 {
        // series: P = e^{-x} x^a / Γ(a+1) · Σ x^n / ((a+1)…(a+n))
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..10_000 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-17 {
                break;
            }
        }
        let p = (sum.ln() + log_prefactor).exp().min(1.0);
        (p, 1.0 - p)
    } else {
        // continued fraction for Q, modified Lentz
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-17 {
                break;
            }
        }
        let q = (h.ln() + log_prefactor).exp().min(1.0);
        (1.0 - q, q)
    }
}

/// Chi-square CDF with `dof` degrees of freedom.
pub fn chi2_cdf(x: f64, dof: usize) -> f64 {
    incomplete_gamma(dof as f64 / 2.0, x / 2.0).0
}

/// Upper `alpha` point of the chi-square distribution: the `x` with
/// `P(χ²_dof > x) = alpha`, found by bisection on the upper tail.
pub fn chi2_quantile(dof: usize, alpha: f64) -> Result<f64> {
    if dof == 0 {
        return Err(Error::Input("chi-square needs at least one degree of freedom".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Input(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let a = dof as f64 / 2.0;
    let upper = |x: f64| incomplete_gamma(a, x / 2.0).1;
    let mut lo = 0.0;
    let mut hi = (dof as f64).max(1.0);
    while upper(hi) > alpha {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Numeric("chi-square quantile bracket overflowed".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if upper(mid) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Joint region for a whole flattened field:
/// `(y − ẑ)ᵀ Σ̂⁻¹ (y − ẑ) ≤ χ²_{p, 1−α}`, with `Σ̂` the training-error
/// covariance plus `10⁻⁶·tr(Σ̂)/p` on the diagonal.
#[derive(Debug, Clone)]
pub struct ConfidenceRegion {
    covariance_estimate: Array2<f64>,
    alpha: f64,
    threshold: f64,
    factor: Ldl,
}

impl ConfidenceRegion {
    pub const RIDGE: f64 = 1e-6;

    /// Regularizes and factors `covariance`.
    pub fn new(covariance: Array2<f64>, alpha: f64) -> Result<Self> {
        let p = covariance.nrows();
        if p == 0 || covariance.ncols() != p {
            return Err(Error::shape(
                "confidence_region",
                format!("covariance is {:?}", covariance.dim()),
            ));
        }
        for i in 0..p {
            for j in 0..i {
                let (a, b) = (covariance[[i, j]], covariance[[j, i]]);
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::Numeric(format!("covariance not symmetric at ({i}, {j})")));
                }
            }
        }
        let eps = Self::RIDGE * covariance.diag().sum() / p as f64;
        let mut reg = covariance;
        for i in 0..p {
            reg[[i, i]] += eps;
        }
        let factor = Ldl::factor(&reg)
            .map_err(|e| Error::Numeric(format!("regularized covariance is not positive definite: {e}")))?;
        let threshold = chi2_quantile(p, alpha)?;
        Ok(Self {
            covariance_estimate: reg,
            alpha,
            threshold,
            factor,
        })
    }

    /// Sample covariance (`n − 1`) of the flattened training error fields.
    pub fn from_training_errors(errs: &ErrorArray, alpha: f64) -> Result<Self> {
        let t = errs.t_len();
        if t < 2 {
            return Err(Error::InsufficientData(format!(
                "covariance needs at least 2 steps, got {t}"
            )));
        }
        let (h, w) = errs.grid_shape();
        let x = errs.errors.to_shape((t, h * w)).expect("contiguous").to_owned();
        let mean = x.mean_axis(Axis(0)).expect("nonempty");
        let centered = &x - &mean.insert_axis(Axis(0));
        let cov = centered.t().dot(&centered) / (t - 1) as f64;
        Self::new(cov, alpha)
    }

    pub fn p(&self) -> usize {
        self.covariance_estimate.nrows()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `χ²_{p, 1−α}`.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// The regularized covariance.
    pub fn covariance_estimate(&self) -> &Array2<f64> {
        &self.covariance_estimate
    }
}

/// Quadratic-form statistic of `observed − corrected` and whether it lies
/// inside the region.
pub fn confidence_region(
    region: &ConfidenceRegion,
    observed: ArrayView2<f64>,
    corrected_prediction: ArrayView2<f64>,
) -> Result<(f64, bool)> {
    if observed.dim() != corrected_prediction.dim() || observed.len() != region.p() {
        return Err(Error::shape(
            "confidence_region",
            format!(
                "observed {:?}, prediction {:?}, region dimension {}",
                observed.dim(),
                corrected_prediction.dim(),
                region.p()
            ),
        ));
    }
    let diff: Array1<f64> = (&observed - &corrected_prediction).iter().copied().collect();
    let stat = region.factor.quadratic_form(diff.view());
    Ok((stat, stat <= region.threshold))
}

/// Normal-approximation 95% interval `μ̂ ± 1.96·σ̂/√n`.
pub fn paired_diff_ci(diffs: &[f64]) -> Result<(f64, f64)> {
    if diffs.len() < 2 {
        return Err(Error::Input(format!(
            "paired interval needs at least 2 differences, got {}",
            diffs.len()
        )));
    }
    if let Some(i) = diffs.iter().position(|v| !v.is_finite()) {
        return Err(Error::Validation {
            index: i,
            value: diffs[i],
        });
    }
    let (mean, sd) = mean_and_sd(ndarray::ArrayView1::from(diffs));
    let half = 1.96 * sd / (diffs.len() as f64).sqrt();
    Ok((mean - half, mean + half))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    /// The interval lies above zero.
    Positive,
    /// The interval lies below zero.
    Negative,
    /// The interval covers zero.
    Zero,
}

impl Sign {
    pub fn as_char(self) -> char {
        match self {
            Sign::Positive => '+',
            Sign::Negative => '-',
            Sign::Zero => '0',
        }
    }

    /// Accepts `+`, `0` and the ASCII hyphen, minus sign or en dash for negative.
    pub fn parse(s: &str) -> Option<Sign> {
        match s.trim() {
            "+" => Some(Sign::Positive),
            "-" | "\u{2212}" | "\u{2013}" => Some(Sign::Negative),
            "0" => Some(Sign::Zero),
            _ => None,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

pub fn classify_sign(ci: (f64, f64)) -> Sign {
    if ci.0 > 0.0 {
        Sign::Positive
    } else if ci.1 < 0.0 {
        Sign::Negative
    } else {
        Sign::Zero
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn quantile_closed_form_for_two_dof() {
        let q = chi2_quantile(2, 0.05).unwrap();
        assert!((q + 2.0 * 0.05f64.ln()).abs() < 1e-9);
        assert!((chi2_quantile(1, 0.05).unwrap() - 3.841458820694124).abs() < 1e-8);
        assert!(chi2_quantile(0, 0.05).is_err());
        assert!(chi2_quantile(3, 1.0).is_err());
    }

    #[test]
    fn cdf_inverts_quantile() {
        for dof in [1, 3, 10, 256] {
            for alpha in [0.01, 0.05, 0.5] {
                let x = chi2_quantile(dof, alpha).unwrap();
                assert!((chi2_cdf(x, dof) - (1.0 - alpha)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn identity_region_in_one_dimension() {
        let region = ConfidenceRegion::new(array![[1.0 / (1.0 + ConfidenceRegion::RIDGE)]], 0.05).unwrap();
        let (stat, inside) = confidence_region(&region, array![[1.5]].view(), array![[0.0]].view()).unwrap();
        assert!((stat - 2.25).abs() < 1e-12);
        assert!(inside);
        let (stat, inside) = confidence_region(&region, array![[0.0]].view(), array![[2.0]].view()).unwrap();
        assert!((stat - 4.0).abs() < 1e-12);
        assert!(!inside);
        let (stat, inside) = confidence_region(&region, array![[0.3]].view(), array![[0.3]].view()).unwrap();
        assert_eq!((stat, inside), (0.0, true));
    }

    #[test]
    fn zero_covariance_is_rejected() {
        assert!(matches!(
            ConfidenceRegion::new(Array2::zeros((2, 2)), 0.05),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn ci_examples() {
        assert_eq!(classify_sign((-0.0344105, -0.0055895)), Sign::Negative);
        assert_eq!(classify_sign((-1.0, 1.0)), Sign::Zero);
        assert_eq!(paired_diff_ci(&[0.1; 7]).unwrap(), (0.1, 0.1));
        assert_eq!(classify_sign(paired_diff_ci(&[0.1; 7]).unwrap()), Sign::Positive);
        assert!(paired_diff_ci(&[1.0]).is_err());
        assert_eq!(Sign::parse("\u{2013}"), Some(Sign::Negative));
        assert_eq!(Sign::Negative.to_string(), "-");
    }
}
