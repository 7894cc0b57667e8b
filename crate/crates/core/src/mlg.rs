//! Multivariate log-gamma (MLG) distributions.
//!
//! A draw from `MLG(c, V, alpha, kappa)` is `c + V w`, where the coordinates of
//! `w` are independent logs of gamma variates with shape `alpha[i]` and *rate*
//! `kappa[i]`. Conditional MLG laws, which every full conditional of the WAP
//! sampler takes, are simulated by collapsing an augmented MLG with identity
//! mixing onto the target block (see [`sample_cmlg_collapsed`]).

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use statrs::function::gamma::{digamma, ln_gamma};

use crate::error::{Result, WapError};

/// Relative tolerance on singular values (or `R` diagonals) used to reject
/// numerically rank-deficient matrices.
pub const RANK_TOL: f64 = 1e-10;

/// Largest exponent evaluated by the density routines before giving up with
/// `-inf`.
pub const EXP_CLAMP: f64 = 700.0;

/// Shapes below this use the log-space boosting identity instead of sampling
/// the gamma variate directly.
const BOOST_BELOW: f64 = 1.0;

/// Log of a unit-rate gamma variate with shape `alpha`.
///
/// For small shapes `log G(a) = log G(a + 1) + log(U) / a`, evaluated in log
/// space so tiny shapes do not underflow to `-inf`.
pub(crate) fn log_gamma_unit<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    if alpha < BOOST_BELOW {
        let g = Gamma::new(alpha + 1.0, 1.0)
            .expect("shape validated by caller")
            .sample(rng);
        // 1 - U lies in (0, 1], so the log is finite.
        let u: f64 = 1.0 - rng.random::<f64>();
        g.ln() + u.ln() / alpha
    } else {
        Gamma::new(alpha, 1.0)
            .expect("shape validated by caller")
            .sample(rng)
            .ln()
    }
}

/// Draws `log(G)` where `G ~ Gamma(shape = alpha, rate = kappa)`.
pub fn sample_log_gamma<R: Rng + ?Sized>(alpha: f64, kappa: f64, rng: &mut R) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(WapError::domain(format!("log-gamma shape must be positive, got {alpha}")));
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(WapError::domain(format!("log-gamma rate must be positive, got {kappa}")));
    }
    Ok(log_gamma_unit(alpha, rng) - kappa.ln())
}

/// Largest singular value ratio check used for construction-time validation.
pub(crate) fn check_full_column_rank(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.ncols() == 0 {
        return Ok(());
    }
    if m.nrows() < m.ncols() {
        return Err(WapError::Rank(format!(
            "{what}: {} rows cannot have full column rank {}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(WapError::Numeric(format!("{what}: non-finite entries")));
    }
    let sv = m.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if !(max > 0.0) || min <= RANK_TOL * max {
        return Err(WapError::Rank(format!(
            "{what}: smallest singular value {min:.3e} vs largest {max:.3e}"
        )));
    }
    Ok(())
}

/// Parameters of `MLG(c, V, alpha, kappa)`.
#[derive(Debug, Clone)]
pub struct MlgParams {
    c: DVector<f64>,
    v: DMatrix<f64>,
    alpha: DVector<f64>,
    kappa: DVector<f64>,
    log_abs_det_v: f64,
}

impl MlgParams {
    pub fn new(
        c: DVector<f64>,
        v: DMatrix<f64>,
        alpha: DVector<f64>,
        kappa: DVector<f64>,
    ) -> Result<Self> {
        let m = c.len();
        if v.nrows() != m || v.ncols() != m || alpha.len() != m || kappa.len() != m {
            return Err(WapError::shape(format!(
                "MLG dimensions disagree: c {m}, V {}x{}, alpha {}, kappa {}",
                v.nrows(),
                v.ncols(),
                alpha.len(),
                kappa.len()
            )));
        }
        if let Some(a) = alpha.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(WapError::domain(format!("MLG shape must be positive, got {a}")));
        }
        if let Some(k) = kappa.iter().find(|k| !(**k > 0.0 && k.is_finite())) {
            return Err(WapError::domain(format!("MLG rate must be positive, got {k}")));
        }
        check_full_column_rank(&v, "MLG mixing matrix V")?;
        let log_abs_det_v = v.clone().lu().determinant().abs().ln();
        Ok(Self {
            c,
            v,
            alpha,
            kappa,
            log_abs_det_v,
        })
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn location(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn mixing(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn shapes(&self) -> &DVector<f64> {
        &self.alpha
    }

    pub fn rates(&self) -> &DVector<f64> {
        &self.kappa
    }
}

/// Draws `c + V w` with `w[i] ~ logGamma(alpha[i], kappa[i])` independently.
pub fn sample_mlg<R: Rng + ?Sized>(params: &MlgParams, rng: &mut R) -> DVector<f64> {
    let w = DVector::from_iterator(
        params.dim(),
        params
            .alpha
            .iter()
            .zip(params.kappa.iter())
            .map(|(&a, &k)| log_gamma_unit(a, rng) - k.ln()),
    );
    &params.c + &params.v * w
}

/// Exact log density of `MLG(c, V, alpha, kappa)` at `q`.
pub fn logpdf_mlg(q: &DVector<f64>, params: &MlgParams) -> Result<f64> {
    if q.len() != params.dim() {
        return Err(WapError::shape(format!(
            "point has length {} but MLG has dimension {}",
            q.len(),
            params.dim()
        )));
    }
    let u = params
        .v
        .clone()
        .lu()
        .solve(&(q - &params.c))
        .ok_or_else(|| WapError::Rank("MLG mixing matrix became singular".into()))?;
    let mut total = -params.log_abs_det_v;
    for i in 0..params.dim() {
        let (a, k, ui) = (params.alpha[i], params.kappa[i], u[i]);
        if ui > EXP_CLAMP {
            return Ok(f64::NEG_INFINITY);
        }
        total += a * k.ln() - ln_gamma(a) + a * ui - k * ui.exp();
    }
    Ok(total)
}

/// Conditional MLG parameters: the density is proportional to
/// `exp(alpha' H q1 - kappa_cond' exp(H q1))`.
#[derive(Debug, Clone)]
pub struct CmlgParams {
    h: DMatrix<f64>,
    kappa_cond: DVector<f64>,
    alpha: DVector<f64>,
}

impl CmlgParams {
    pub fn new(h: DMatrix<f64>, kappa_cond: DVector<f64>, alpha: DVector<f64>) -> Result<Self> {
        let n = h.nrows();
        if kappa_cond.len() != n || alpha.len() != n {
            return Err(WapError::shape(format!(
                "cMLG H has {n} rows but kappa_cond has {} and alpha {}",
                kappa_cond.len(),
                alpha.len()
            )));
        }
        if let Some(k) = kappa_cond.iter().find(|k| !(**k > 0.0 && k.is_finite())) {
            return Err(WapError::domain(format!("cMLG rate must be positive, got {k}")));
        }
        if let Some(a) = alpha.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(WapError::domain(format!("cMLG shape must be positive, got {a}")));
        }
        check_full_column_rank(&h, "cMLG matrix H")?;
        Ok(Self {
            h,
            kappa_cond,
            alpha,
        })
    }

    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn kappa_cond(&self) -> &DVector<f64> {
        &self.kappa_cond
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }
}

/// `alpha' H q1 - kappa_cond' exp(H q1)`; the normalizing constant is omitted.
pub fn logpdf_cmlg_unnormalized(q1: &DVector<f64>, params: &CmlgParams) -> Result<f64> {
    if q1.len() != params.h.ncols() {
        return Err(WapError::shape(format!(
            "cMLG block has dimension {} but point has length {}",
            params.h.ncols(),
            q1.len()
        )));
    }
    let hq = &params.h * q1;
    let mut total = 0.0;
    for i in 0..hq.len() {
        if hq[i] > EXP_CLAMP {
            return Ok(f64::NEG_INFINITY);
        }
        total += params.alpha[i] * hq[i] - params.kappa_cond[i] * hq[i].exp();
    }
    Ok(total)
}

/// Orthonormal basis of the null space of `H'`.
#[derive(Debug, Clone)]
pub struct NullBasis {
    q: DMatrix<f64>,
}

impl NullBasis {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.q
    }

    pub fn ncols(&self) -> usize {
        self.q.ncols()
    }
}

/// Least-squares machinery for one fixed `H`: a Householder QR kept around so
/// repeated collapse draws reuse the factorization.
#[derive(Debug, Clone)]
pub struct CollapseSolver {
    qr: nalgebra::linalg::QR<f64, nalgebra::Dyn, nalgebra::Dyn>,
    r: DMatrix<f64>,
    nrows: usize,
}

impl CollapseSolver {
    /// Factorizes `h`; fails when `h` is not of full column rank.
    pub fn new(h: &DMatrix<f64>) -> Result<Self> {
        Self::with_label(h, "H")
    }

    pub(crate) fn with_label(h: &DMatrix<f64>, label: &str) -> Result<Self> {
        let (n, g) = h.shape();
        if g == 0 {
            return Err(WapError::shape(format!("{label}: no columns")));
        }
        if n < g {
            return Err(WapError::Rank(format!("{label}: {n} rows < {g} columns")));
        }
        if h.iter().any(|v| !v.is_finite()) {
            return Err(WapError::Numeric(format!("{label}: non-finite entries")));
        }
        let qr = h.clone().qr();
        let r = qr.r();
        let diag = r.diagonal().map(f64::abs);
        let max = diag.max();
        let min = diag.min();
        if !(max > 0.0) || min <= RANK_TOL * max {
            return Err(WapError::Rank(format!(
                "{label}: |R| diagonal ranges {min:.3e}..{max:.3e}"
            )));
        }
        Ok(Self { qr, r, nrows: n })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.r.ncols()
    }

    /// `(H'H)^{-1} H' w`, computed as `R^{-1} (Q'w)[..g]`.
    pub fn project(&self, w: &DVector<f64>) -> DVector<f64> {
        let g = self.ncols();
        let mut b = w.clone();
        self.qr.q_tr_mul(&mut b);
        let top = b.rows(0, g).into_owned();
        self.r
            .solve_upper_triangular(&top)
            .expect("R diagonal checked at construction")
    }

    /// Draws `w` with `w[i] = log G(alpha[i], 1) - log_kappa[i]` and projects it.
    pub fn sample_log_rates<R: Rng + ?Sized>(
        &self,
        alpha: &[f64],
        log_kappa: &[f64],
        rng: &mut R,
    ) -> DVector<f64> {
        let w = DVector::from_iterator(
            self.nrows,
            alpha
                .iter()
                .zip(log_kappa)
                .map(|(&a, &lk)| log_gamma_unit(a, rng) - lk),
        );
        self.project(&w)
    }
}

/// Orthonormal basis of `null(H')` taken as the trailing `n - g` columns of
/// the full QR factor of `H`.
pub fn null_basis(h: &DMatrix<f64>) -> Result<NullBasis> {
    let (n, g) = h.shape();
    let solver = CollapseSolver::with_label(h, "null_basis H")?;
    if n == g {
        return Ok(NullBasis {
            q: DMatrix::zeros(n, 0),
        });
    }
    let mut qt = DMatrix::<f64>::identity(n, n);
    solver.qr.q_tr_mul(&mut qt);
    // Rows g.. of Q' are the trailing columns of Q.
    let q = qt.rows(g, n - g).transpose();
    Ok(NullBasis { q })
}

/// Reference route: column-pivoted QR of the projector `I - H (H'H)^{-1} H'`,
/// keeping its leading `n - g` columns. Forms an `n x n` matrix, so it is meant
/// for cross-checking [`null_basis`] on small problems.
pub fn null_basis_via_projector(h: &DMatrix<f64>) -> Result<NullBasis> {
    let (n, g) = h.shape();
    check_full_column_rank(h, "null_basis_via_projector H")?;
    let hth = h.transpose() * h;
    let chol = hth
        .cholesky()
        .ok_or_else(|| WapError::Rank("H'H is not positive definite".into()))?;
    let coef = chol.solve(&h.transpose());
    let proj = DMatrix::<f64>::identity(n, n) - h * coef;
    let q = proj.col_piv_qr().q();
    Ok(NullBasis {
        q: q.columns(0, n - g).into_owned(),
    })
}

/// Draws the target block of a conditional MLG by collapsing the augmented
/// joint: `w ~ MLG(0, I_n, alpha, kappa)` and `y = (H'H)^{-1} H' w`.
pub fn sample_cmlg_collapsed<R: Rng + ?Sized>(
    h: &DMatrix<f64>,
    alpha: &DVector<f64>,
    kappa: &DVector<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let n = h.nrows();
    if alpha.len() != n || kappa.len() != n {
        return Err(WapError::shape(format!(
            "H has {n} rows but alpha has {} and kappa {}",
            alpha.len(),
            kappa.len()
        )));
    }
    if let Some(a) = alpha.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
        return Err(WapError::domain(format!("shape must be positive, got {a}")));
    }
    if let Some(k) = kappa.iter().find(|k| !(**k > 0.0 && k.is_finite())) {
        return Err(WapError::domain(format!("rate must be positive, got {k}")));
    }
    let solver = CollapseSolver::new(h)?;
    let log_kappa: Vec<f64> = kappa.iter().map(|k| k.ln()).collect();
    Ok(solver.sample_log_rates(alpha.as_slice(), &log_kappa, rng))
}

/// Splits `w` into the collapsed block `y = (H'H)^{-1} H' w` and the augmented
/// coordinates `q = Q' w`, so that `H y + Q q = w`.
pub fn collapse_decompose(
    h: &DMatrix<f64>,
    w: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>, NullBasis)> {
    if w.len() != h.nrows() {
        return Err(WapError::shape("w length must equal H rows"));
    }
    let solver = CollapseSolver::new(h)?;
    let basis = null_basis(h)?;
    let y = solver.project(w);
    let q = basis.q.transpose() * w;
    Ok((y, q, basis))
}

/// MLG parameters whose law approaches `Normal(c, L L')` as `alpha` grows:
/// `MLG(c', sqrt(alpha) L, alpha 1, alpha 1)`. The location is shifted by the
/// exact log-gamma mean, `c' = c - sqrt(alpha) L 1 (digamma(alpha) - ln alpha)`,
/// so the mean is `c` at every `alpha` rather than only in the limit.
pub fn gaussian_limit_params(
    c: DVector<f64>,
    l: &DMatrix<f64>,
    alpha: f64,
) -> Result<MlgParams> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(WapError::domain(format!("alpha must be positive, got {alpha}")));
    }
    let m = c.len();
    let v = l * alpha.sqrt();
    let bias = digamma(alpha) - alpha.ln();
    let location = c - &v * DVector::from_element(m, bias);
    MlgParams::new(
        location,
        v,
        DVector::from_element(m, alpha),
        DVector::from_element(m, alpha),
    )
}
