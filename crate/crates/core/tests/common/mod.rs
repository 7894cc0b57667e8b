//! Independent numeric oracles shared by the integration tests.
#![allow(dead_code)]

use statrs::function::gamma::ln_gamma;

/// Density of `log G` with `G ~ Gamma(shape a, rate k)`.
pub fn log_gamma_pdf(x: f64, a: f64, k: f64) -> f64 {
    (a * k.ln() - ln_gamma(a) + a * x - k * x.exp()).exp()
}

/// Tabulated CDF of an unnormalized density on `[lo, hi]`, built with the
/// trapezoid rule on `n` intervals and normalized numerically.
pub struct NumericCdf {
    lo: f64,
    step: f64,
    cum: Vec<f64>,
    /// Integral of the unnormalized density over the grid.
    pub mass: f64,
}

impl NumericCdf {
    pub fn new<F: Fn(f64) -> f64>(density: F, lo: f64, hi: f64, n: usize) -> Self {
        let step = (hi - lo) / n as f64;
        let vals: Vec<f64> = (0..=n).map(|i| density(lo + i as f64 * step)).collect();
        let mut cum = vec![0.0; n + 1];
        for i in 1..=n {
            cum[i] = cum[i - 1] + 0.5 * step * (vals[i - 1] + vals[i]);
        }
        let mass = cum[n];
        cum.iter_mut().for_each(|c| *c /= mass);
        Self {
            lo,
            step,
            cum,
            mass,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let pos = (x - self.lo) / self.step;
        if pos <= 0.0 {
            return 0.0;
        }
        let i = pos.floor() as usize;
        if i + 1 >= self.cum.len() {
            return 1.0;
        }
        let frac = pos - i as f64;
        self.cum[i] + frac * (self.cum[i + 1] - self.cum[i])
    }
}

/// Unnormalized conditional MLG density for a single target coordinate:
/// `exp{sum_i alpha_i h_i y - kappa_i exp(h_i y)}`.
pub fn cmlg_slice_density(h: &[f64], alpha: &[f64], kappa: &[f64], y: f64) -> f64 {
    let mut s = 0.0;
    for i in 0..h.len() {
        s += alpha[i] * h[i] * y - kappa[i] * (h[i] * y).exp();
    }
    s.exp()
}

/// Density of `y = (w1 + w2) / 2` for independent log-gamma `w1, w2`, by
/// direct convolution: `f(y) = 2 int f1(y + s) f2(y - s) ds`.
pub fn average_of_two_density(a: [f64; 2], k: [f64; 2], y: f64) -> f64 {
    let (lo, hi, n) = (-40.0, 40.0, 8000);
    let h = (hi - lo) / n as f64;
    let mut total = 0.0;
    for i in 0..=n {
        let s = lo + i as f64 * h;
        let wgt = if i == 0 || i == n { 0.5 } else { 1.0 };
        total += wgt * log_gamma_pdf(y + s, a[0], k[0]) * log_gamma_pdf(y - s, a[1], k[1]);
    }
    2.0 * total * h
}

/// Exact Poisson pmf.
pub fn poisson_pmf(k: u64, lambda: f64) -> f64 {
    (k as f64 * lambda.ln() - lambda - ln_gamma(k as f64 + 1.0)).exp()
}

/// Sample mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}
