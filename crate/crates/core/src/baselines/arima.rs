//! ARIMA(p, d, q) by conditional sum of squares.
//!
//! The differenced series `w` follows
//! `w_t = c + Σ φ_i w_{t−i} + e_t + Σ θ_j e_{t−j}`. Innovations are
//! reconstructed for `t ≥ p` with pre-sample innovations set to zero, and
//! `Σ e_t²` is minimized by Levenberg–Marquardt on the analytic Jacobian.
//! Steps that would leave the MA polynomial non-invertible are rejected.
//!
//! BIC convention: `n·ln σ̂² + k·ln n` with `σ̂² = RSS / n`, `n = len(w) − p`
//! and `k = p + q + 1` (the intercept counts).

use ndarray::{Array1, Array2};

use crate::linalg::spd_solve;
use crate::{Error, Result};

pub const ORDER_P_MAX: usize = 5;
pub const ORDER_Q_MAX: usize = 3;

const MIN_EXTRA_POINTS: usize = 20;
const MAX_ITERATIONS: usize = 300;
const MU_CEILING: f64 = 1e16;

#[derive(Debug, Clone, PartialEq)]
pub struct ArimaFit {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub ar_coefficients: Vec<f64>,
    pub ma_coefficients: Vec<f64>,
    pub intercept: f64,
    pub innovation_variance: f64,
    pub bic: f64,
    pub n_effective: usize,
    /// AR polynomial has all roots outside the unit circle.
    pub stationary: bool,
    /// MA polynomial has all roots outside the unit circle.
    pub invertible: bool,
    pub iterations: usize,
}

/// `n·ln σ̂² + (p + q + 1)·ln n`.
pub fn bic(fit: &ArimaFit) -> f64 {
    let n = fit.n_effective as f64;
    let k = (fit.p + fit.q + 1) as f64;
    n * fit.innovation_variance.ln() + k * n.ln()
}

/// Applies the first difference `d` times.
pub fn difference(series: &[f64], d: usize) -> Vec<f64> {
    let mut w = series.to_vec();
    for _ in 0..d {
        w = w.windows(2).map(|p| p[1] - p[0]).collect();
    }
    w
}

/// `|κ_k| < 1` for every reflection coefficient of `1 − Σ a_i z^i`,
/// which holds iff all its roots lie outside the unit circle.
fn roots_outside_unit_circle(a: &[f64]) -> bool {
    let mut a = a.to_vec();
    while let Some(&kappa) = a.last() {
        if !(kappa.abs() < 1.0) {
            return false;
        }
        let k = a.len();
        let denom = 1.0 - kappa * kappa;
        let prev: Vec<f64> = (0..k - 1).map(|i| (a[i] + kappa * a[k - 2 - i]) / denom).collect();
        a = prev;
    }
    true
}

fn ma_invertible(theta: &[f64]) -> bool {
    let neg: Vec<f64> = theta.iter().map(|t| -t).collect();
    roots_outside_unit_circle(&neg)
}

/// Parameter vector layout: `[c, φ_1..φ_p, θ_1..θ_q]`.
struct Css<'a> {
    w: &'a [f64],
    p: usize,
    q: usize,
}

impl Css<'_> {
    fn k(&self) -> usize {
        1 + self.p + self.q
    }

    fn innovations(&self, beta: &[f64]) -> Vec<f64> {
        let (p, q, w) = (self.p, self.q, self.w);
        let mut e = vec![0.0; w.len()];
        for t in p..w.len() {
            let mut v = w[t] - beta[0];
            for i in 1..=p {
                v -= beta[i] * w[t - i];
            }
            for j in 1..=q.min(t) {
                v -= beta[p + j] * e[t - j];
            }
            e[t] = v;
        }
        e
    }

    fn rss(&self, beta: &[f64]) -> f64 {
        self.innovations(beta)[self.p..].iter().map(|e| e * e).sum()
    }

    /// Innovations for `t ≥ p` and their Jacobian with respect to `beta`.
    fn residuals_and_jacobian(&self, beta: &[f64]) -> (Array1<f64>, Array2<f64>) {
        let (p, q, w) = (self.p, self.q, self.w);
        let n = w.len();
        let k = self.k();
        let e = self.innovations(beta);
        let mut jac = Array2::<f64>::zeros((n, k));
        for t in p..n {
            for col in 0..k {
                let mut v = match col {
                    0 => -1.0,
                    c if c <= p => -w[t - c],
                    c => {
                        let lag = c - p;
                        if lag <= t {
                            -e[t - lag]
                        } else {
                            0.0
                        }
                    }
                };
                for j in 1..=q.min(t) {
                    v -= beta[p + j] * jac[[t - j, col]];
                }
                jac[[t, col]] = v;
            }
        }
        let rows = jac.slice(ndarray::s![p.., ..]).to_owned();
        (Array1::from(e[p..].to_vec()), rows)
    }
}

/// Least squares with a tiny ridge fallback for rank-deficient designs.
fn least_squares(x: &Array2<f64>, y: &Array1<f64>) -> Option<Array1<f64>> {
    let xtx = x.t().dot(x);
    let xty = x.t().dot(y);
    if let Ok(b) = spd_solve(&xtx, xty.view()) {
        return Some(b);
    }
    let ridge = 1e-10 * (xtx.diag().sum() / xtx.nrows() as f64).max(1e-300);
    let reg = &xtx + &(Array2::<f64>::eye(xtx.nrows()) * ridge);
    spd_solve(&reg, xty.view()).ok()
}

/// Regresses `w_t` on an intercept, `p` lags of `w` and `q` lags of `aux`
/// over `t ≥ start`.
fn lagged_regression(w: &[f64], aux: &[f64], p: usize, q: usize, start: usize) -> Option<Vec<f64>> {
    let rows = w.len().checked_sub(start)?;
    let k = 1 + p + q;
    if rows < k + 5 {
        return None;
    }
    let mut x = Array2::<f64>::zeros((rows, k));
    let mut y = Array1::<f64>::zeros(rows);
    for (r, t) in (start..w.len()).enumerate() {
        y[r] = w[t];
        x[[r, 0]] = 1.0;
        for i in 1..=p {
            x[[r, i]] = w[t - i];
        }
        for j in 1..=q {
            x[[r, p + j]] = aux[t - j];
        }
    }
    least_squares(&x, &y).map(|b| b.to_vec())
}

/// Hannan–Rissanen: a long autoregression supplies innovation proxies,
/// then the ARMA regression on lagged values and proxies.
fn hannan_rissanen(w: &[f64], p: usize, q: usize) -> Option<Vec<f64>> {
    if q == 0 {
        return lagged_regression(w, &[], p, 0, p);
    }
    let m = (p + q + 5).max(10).min(w.len() / 4);
    let long = lagged_regression(w, &[], m, 0, m)?;
    let mut proxy = vec![0.0; w.len()];
    for t in m..w.len() {
        let fitted: f64 = long[0] + (1..=m).map(|i| long[i] * w[t - i]).sum::<f64>();
        proxy[t] = w[t] - fitted;
    }
    lagged_regression(w, &proxy, p, q, (m + q).max(p))
}

fn make_invertible(beta: &mut [f64], p: usize) {
    let mut tries = 0;
    while !ma_invertible(&beta[p + 1..]) && tries < 200 {
        for t in &mut beta[p + 1..] {
            *t *= 0.9;
        }
        tries += 1;
    }
}

struct Minimum {
    beta: Vec<f64>,
    rss: f64,
    iterations: usize,
}

fn levenberg_marquardt(css: &Css, start: Vec<f64>) -> std::result::Result<Minimum, String> {
    let k = css.k();
    let mut beta = start;
    let (mut e, mut jac) = css.residuals_and_jacobian(&beta);
    let mut s = e.dot(&e);
    if !s.is_finite() {
        return Err("non-finite residuals at the starting point".into());
    }
    let mut mu = 1e-3;
    for iter in 0..MAX_ITERATIONS {
        let g = jac.t().dot(&e);
        let a = jac.t().dot(&jac);
        let g_norm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if g_norm <= 1e-10 * (1.0 + s) {
            return Ok(Minimum {
                beta,
                rss: s,
                iterations: iter,
            });
        }
        let accepted = loop {
            if mu > MU_CEILING {
                break None;
            }
            let mut m = a.clone();
            for i in 0..k {
                m[[i, i]] += mu * (a[[i, i]] + 1e-12);
            }
            let Ok(delta) = spd_solve(&m, (-&g).view()) else {
                mu *= 10.0;
                continue;
            };
            let cand: Vec<f64> = beta.iter().zip(delta.iter()).map(|(b, d)| b + d).collect();
            if css.q > 0 && !ma_invertible(&cand[1 + css.p..]) {
                mu *= 10.0;
                continue;
            }
            let sc = css.rss(&cand);
            if sc.is_finite() && sc < s {
                break Some((cand, sc));
            }
            mu *= 10.0;
        };
        let Some((cand, sc)) = accepted else {
            // no descent direction left at working precision
            return Ok(Minimum {
                beta,
                rss: s,
                iterations: iter,
            });
        };
        let reduction = s - sc;
        beta = cand;
        (e, jac) = css.residuals_and_jacobian(&beta);
        s = e.dot(&e);
        mu = (mu / 10.0).max(1e-12);
        if reduction <= 1e-14 * s.max(f64::MIN_POSITIVE) {
            return Ok(Minimum {
                beta,
                rss: s,
                iterations: iter + 1,
            });
        }
    }
    Err(format!(
        "no convergence after {MAX_ITERATIONS} iterations (rss {s:e}, damping {mu:e})"
    ))
}

/// Fits ARIMA(p, d, q) to `series` by conditional sum of squares.
pub fn arima_fit(series: &[f64], p: usize, d: usize, q: usize) -> Result<ArimaFit> {
    if let Some(i) = series.iter().position(|v| !v.is_finite()) {
        return Err(Error::Validation {
            index: i,
            value: series[i],
        });
    }
    if series.windows(2).all(|w| w[0] == w[1]) {
        return Err(Error::Input(
            "series is constant; no ARIMA model is identifiable".into(),
        ));
    }
    let w = difference(series, d);
    if w.len() < MIN_EXTRA_POINTS + p + q {
        return Err(Error::InsufficientData(format!(
            "ARIMA({p},{d},{q}) needs {} points after differencing, have {}",
            MIN_EXTRA_POINTS + p + q,
            w.len()
        )));
    }
    let css = Css { w: &w, p, q };
    let mean = w.iter().sum::<f64>() / w.len() as f64;
    let mut zero = vec![0.0; css.k()];
    zero[0] = mean;
    let mut starts = Vec::new();
    if let Some(mut hr) = hannan_rissanen(&w, p, q) {
        make_invertible(&mut hr, p);
        if hr.iter().all(|v| v.is_finite()) {
            starts.push(hr);
        }
    }
    starts.push(zero);

    let mut best: Option<Minimum> = None;
    let mut failures = Vec::new();
    for start in starts {
        match levenberg_marquardt(&css, start) {
            Ok(m) if best.as_ref().is_none_or(|b| m.rss < b.rss) => best = Some(m),
            Ok(_) => {}
            Err(reason) => failures.push(reason),
        }
    }
    let Some(best) = best else {
        return Err(Error::Fit {
            p,
            d,
            q,
            reason: failures.join("; "),
        });
    };

    let n_effective = w.len() - p;
    let scale = w.iter().map(|v| v * v).sum::<f64>() / w.len() as f64;
    let innovation_variance = (best.rss / n_effective as f64).max((f64::EPSILON * scale).max(f64::MIN_POSITIVE));
    let ar = best.beta[1..=p].to_vec();
    let ma = best.beta[p + 1..].to_vec();
    let mut fit = ArimaFit {
        p,
        d,
        q,
        stationary: roots_outside_unit_circle(&ar),
        invertible: ma_invertible(&ma),
        ar_coefficients: ar,
        ma_coefficients: ma,
        intercept: best.beta[0],
        innovation_variance,
        bic: 0.0,
        n_effective,
        iterations: best.iterations,
    };
    fit.bic = bic(&fit);
    Ok(fit)
}

/// One-step-ahead conditional mean, returned on the original scale.
///
/// `recent` holds the latest observations, oldest first; innovations are
/// reconstructed over it with zero pre-sample values, so longer histories
/// give forecasts closer to the exact conditional mean.
pub fn arima_forecast_1step(fit: &ArimaFit, recent: &[f64]) -> Result<f64> {
    let (p, d, q) = (fit.p, fit.d, fit.q);
    if fit.ar_coefficients.len() != p || fit.ma_coefficients.len() != q {
        return Err(Error::Input("coefficient counts disagree with the model order".into()));
    }
    if recent.len() < p + d {
        return Err(Error::Input(format!(
            "ARIMA({p},{d},{q}) forecast needs at least {} recent values, got {}",
            p + d,
            recent.len()
        )));
    }
    if let Some(i) = recent.iter().position(|v| !v.is_finite()) {
        return Err(Error::Validation {
            index: i,
            value: recent[i],
        });
    }
    let mut levels = vec![recent.to_vec()];
    for _ in 0..d {
        let next = difference(levels.last().unwrap(), 1);
        levels.push(next);
    }
    let w = &levels[d];
    let mut beta = vec![fit.intercept];
    beta.extend_from_slice(&fit.ar_coefficients);
    beta.extend_from_slice(&fit.ma_coefficients);
    let e = Css { w, p, q }.innovations(&beta);
    let n = w.len();
    let mut next = fit.intercept;
    for i in 1..=p {
        next += fit.ar_coefficients[i - 1] * w[n - i];
    }
    for j in 1..=q.min(n) {
        next += fit.ma_coefficients[j - 1] * e[n - j];
    }
    for level in levels[..d].iter().rev() {
        next += level[level.len() - 1];
    }
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectMode {
    /// Minimum BIC separately within each differencing order.
    PerDifference,
    /// Single minimum-BIC model across the whole grid.
    Global,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedFit {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// One winner per differencing order (ascending `d`) or a single global one.
    pub winners: Vec<ArimaFit>,
    pub skipped: Vec<SkippedFit>,
    pub candidates: usize,
}

impl Selection {
    pub fn for_d(&self, d: usize) -> Option<&ArimaFit> {
        self.winners.iter().find(|f| f.d == d)
    }

    /// Lowest-BIC winner.
    pub fn best(&self) -> &ArimaFit {
        self.winners
            .iter()
            .min_by(|a, b| a.bic.total_cmp(&b.bic))
            .expect("selection always holds a winner")
    }
}

/// Fits every order in `d_set × 0..=p_max × 0..=q_max` and keeps the
/// minimum-BIC model(s). Ties keep the candidate met first (smaller `d`,
/// then `p`, then `q`). Failed fits are recorded, not fatal.
pub fn arima_select(
    series: &[f64],
    d_set: &[usize],
    p_max: usize,
    q_max: usize,
    mode: SelectMode,
) -> Result<Selection> {
    if d_set.is_empty() {
        return Err(Error::Input("empty differencing set".into()));
    }
    let mut ds = d_set.to_vec();
    ds.sort_unstable();
    ds.dedup();
    let mut winners: Vec<ArimaFit> = Vec::new();
    let mut skipped = Vec::new();
    let mut candidates = 0;
    for &d in &ds {
        let mut best_d: Option<ArimaFit> = None;
        for p in 0..=p_max {
            for q in 0..=q_max {
                candidates += 1;
                match arima_fit(series, p, d, q) {
                    Ok(f) if f.bic.is_finite() => {
                        if best_d.as_ref().is_none_or(|b| f.bic < b.bic) {
                            best_d = Some(f);
                        }
                    }
                    Ok(f) => skipped.push(SkippedFit {
                        p,
                        d,
                        q,
                        reason: format!("non-finite BIC {}", f.bic),
                    }),
                    Err(e) => skipped.push(SkippedFit {
                        p,
                        d,
                        q,
                        reason: e.to_string(),
                    }),
                }
            }
        }
        winners.extend(best_d);
    }
    if winners.is_empty() {
        let reasons: Vec<String> = skipped
            .iter()
            .map(|s| format!("({},{},{}): {}", s.p, s.d, s.q, s.reason))
            .collect();
        return Err(Error::Selection(reasons.join("; ")));
    }
    if mode == SelectMode::Global {
        let mut best = winners.remove(0);
        for f in winners {
            if f.bic < best.bic {
                best = f;
            }
        }
        winners = vec![best];
    }
    Ok(Selection {
        winners,
        skipped,
        candidates,
    })
}
