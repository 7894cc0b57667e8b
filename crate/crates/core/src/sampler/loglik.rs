use statrs::function::factorial::ln_factorial;

use crate::error::{Result, WapError};

/// Weibull log-likelihood with shape `rho` and scale `exp(-y_c)`:
/// `sum log(rho) + (rho - 1) log(t) + y_c - t^rho exp(y_c)`.
pub fn weibull_loglik(t: &[f64], rho: &[f64], y_c: &[f64]) -> Result<f64> {
    if t.len() != rho.len() || t.len() != y_c.len() {
        return Err(WapError::shape(format!(
            "weibull_loglik: t has {}, rho {}, y_c {} entries",
            t.len(),
            rho.len(),
            y_c.len()
        )));
    }
    let mut total = 0.0;
    for i in 0..t.len() {
        let (ti, ri) = (t[i], rho[i]);
        if !(ti > 0.0) {
            return Err(WapError::domain(format!("t[{i}] = {ti} is not positive")));
        }
        if !(ri > 0.0) {
            return Err(WapError::domain(format!("rho[{i}] = {ri} is not positive")));
        }
        let lt = ti.ln();
        total += ri.ln() + (ri - 1.0) * lt + y_c[i] - (ri * lt + y_c[i]).exp();
    }
    Ok(total)
}

/// Poisson log-likelihood with log-mean `y_d`.
pub fn poisson_loglik(z: &[u64], y_d: &[f64]) -> Result<f64> {
    if z.len() != y_d.len() {
        return Err(WapError::shape(format!(
            "poisson_loglik: {} counts but {} log-means",
            z.len(),
            y_d.len()
        )));
    }
    Ok(z.iter()
        .zip(y_d)
        .map(|(&zi, &yi)| zi as f64 * yi - yi.exp() - ln_factorial(zi))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weibull_plug_ins() {
        assert!((weibull_loglik(&[1.0], &[1.0], &[0.0]).unwrap() + 1.0).abs() < 1e-15);
        let v = weibull_loglik(&[1.0], &[2.0], &[0.0]).unwrap();
        assert!((v - (2f64.ln() - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn weibull_rho_one_is_exponential() {
        // Exponential(rate lambda): log(lambda) - lambda t.
        let t = [0.3, 1.7, 4.2, 0.01];
        let y = [-0.5, 0.2, 1.3, -2.0];
        let got = weibull_loglik(&t, &[1.0; 4], &y).unwrap();
        let want: f64 = t.iter().zip(&y).map(|(ti, yi)| yi - yi.exp() * ti).sum();
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn weibull_rejects_bad_inputs() {
        assert!(matches!(
            weibull_loglik(&[-1.0], &[1.0], &[0.0]),
            Err(WapError::Domain(_))
        ));
        assert!(matches!(
            weibull_loglik(&[1.0], &[0.0], &[0.0]),
            Err(WapError::Domain(_))
        ));
        assert!(matches!(
            weibull_loglik(&[1.0, 2.0], &[1.0], &[0.0]),
            Err(WapError::Shape(_))
        ));
    }

    #[test]
    fn poisson_plug_ins() {
        assert!((poisson_loglik(&[0], &[0.0]).unwrap() + 1.0).abs() < 1e-15);
        assert!((poisson_loglik(&[1], &[0.0]).unwrap() + 1.0).abs() < 1e-15);
        let v = poisson_loglik(&[2], &[2f64.ln()]).unwrap();
        assert!((v - (2f64.ln() - 2.0)).abs() < 1e-12);
    }
}
