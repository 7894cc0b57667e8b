use nalgebra::{DMatrix, DVector};

use super::data::ArealDataset;
use super::spec::{ModelKind, WapModelSpec};
use super::state::{StateDims, WapState};
use crate::basis::{
    bisquare, default_radius, farthest_point_knots, knot_grid, shape_indicator,
    thin_plate_spline, BasisKind, BasisMatrix, Coord, KnotSet, ShapeDesign,
};
use crate::error::{Result, WapError};
use crate::mlg::CollapseSolver;

/// Everything about a fit that stays fixed across iterations: the data, the
/// basis matrices, and factorizations that do not depend on the state.
#[derive(Debug, Clone)]
pub struct Design {
    pub kind: ModelKind,
    pub spec: WapModelSpec,
    pub data: ArealDataset,
    pub knots: KnotSet,
    /// Bisquare radius actually used (None for thin-plate splines).
    pub radius: Option<f64>,
    pub psi_c: DMatrix<f64>,
    pub psi_d: DMatrix<f64>,
    pub shape: ShapeDesign,
    pub log_t: DVector<f64>,
    /// `Z + zeta`, the count-row shapes.
    pub count_shapes: DVector<f64>,
    pub(crate) beta_c_solver: Option<CollapseSolver>,
    pub(crate) beta_d_solver: Option<CollapseSolver>,
}

/// Knot layout used when none is given: an even grid when every centroid lies
/// on one horizontal line, farthest-point selection otherwise.
pub fn default_knots(centroids: &[Coord], r: usize) -> Result<KnotSet> {
    if centroids.is_empty() {
        return Err(WapError::shape("no centroids to place knots on"));
    }
    let y0 = centroids[0].y;
    if centroids.iter().all(|c| c.y == y0) {
        let lo = centroids.iter().map(|c| c.x).fold(f64::INFINITY, f64::min);
        let hi = centroids.iter().map(|c| c.x).fold(f64::NEG_INFINITY, f64::max);
        if r == 1 {
            return KnotSet::new(vec![Coord::new(0.5 * (lo + hi), y0)]);
        }
        let grid = knot_grid(lo, hi, r)?;
        KnotSet::new(grid.knots().iter().map(|k| Coord::new(k.x, y0)).collect())
    } else {
        farthest_point_knots(centroids, r)
    }
}

impl Design {
    pub fn build(kind: ModelKind, spec: &WapModelSpec, data: &ArealDataset) -> Result<Self> {
        spec.validate()?;
        let data = match kind {
            ModelKind::Wap => data.clone(),
            ModelKind::Weibull => data.weibull_only(),
            ModelKind::Poisson => data.poisson_only(),
        };
        data.validate()?;
        if kind.uses_weibull() && !data.has_weibull() {
            return Err(WapError::shape(format!("{kind} model needs Weibull responses")));
        }
        if kind.uses_counts() && !data.has_counts() {
            return Err(WapError::shape(format!("{kind} model needs counts")));
        }
        let n = data.n_c().max(data.n_d());
        if spec.r > n {
            return Err(WapError::domain(format!(
                "basis count r = {} exceeds the {n} regions",
                spec.r
            )));
        }

        let mut all_centroids = data.centroids_c.clone();
        all_centroids.extend_from_slice(&data.centroids_d);
        let knots = match &spec.knots {
            Some(k) => k.clone(),
            None => default_knots(&all_centroids, spec.r)?,
        };
        let radius = match spec.basis {
            BasisKind::ThinPlateSpline => None,
            BasisKind::Bisquare => Some(match spec.bisquare_radius {
                Some(r) => r,
                None => default_radius(&knots)?,
            }),
        };
        let psi_c = basis_matrix(spec.basis, &data.centroids_c, &knots, radius)?.psi;
        let psi_d = basis_matrix(spec.basis, &data.centroids_d, &knots, radius)?.psi;

        let shape = shape_indicator(&data.shape_groups);
        let log_t = DVector::from_iterator(data.n_c(), data.t.iter().map(|t| t.ln()));
        let count_shapes =
            DVector::from_iterator(data.n_d(), data.z.iter().map(|&z| z as f64 + spec.zeta));

        let beta_c_solver = if kind.uses_weibull() {
            Some(CollapseSolver::with_label(
                &stack_identity(&data.x_c),
                "beta_c",
            )?)
        } else {
            None
        };
        let beta_d_solver = if kind.uses_counts() {
            Some(CollapseSolver::with_label(
                &stack_identity(&data.x_d),
                "beta_d",
            )?)
        } else {
            None
        };

        Ok(Self {
            kind,
            spec: spec.clone(),
            data,
            knots,
            radius,
            psi_c,
            psi_d,
            shape,
            log_t,
            count_shapes,
            beta_c_solver,
            beta_d_solver,
        })
    }

    pub fn dims(&self) -> StateDims {
        StateDims {
            p_c: self.data.p_c(),
            p_d: self.data.p_d(),
            r: self.spec.r,
            n_c: self.data.n_c(),
            n_d: self.data.n_d(),
            m: self.shape.n_groups(),
        }
    }

    pub fn initial_state(&self) -> WapState {
        WapState::initial(self.dims(), self.spec.shape_prior_mean())
    }

    /// Evaluates the fitted basis at new locations.
    pub fn basis_at(&self, centroids: &[Coord]) -> Result<DMatrix<f64>> {
        Ok(basis_matrix(self.spec.basis, centroids, &self.knots, self.radius)?.psi)
    }

    /// Per-region Weibull shapes `Phi delta`.
    pub fn rho(&self, delta: &DVector<f64>) -> Vec<f64> {
        self.shape.membership.iter().map(|&g| delta[g]).collect()
    }

    /// Weibull linear predictor at the observed regions.
    pub fn y_c(&self, s: &WapState) -> DVector<f64> {
        &self.data.x_c * &s.beta_c + &self.psi_c * (&s.eta + &s.eta_c) + &s.gamma_c
    }

    /// Count log-mean at the observed regions.
    pub fn y_d(&self, s: &WapState) -> DVector<f64> {
        &self.data.x_d * &s.beta_d + &self.psi_d * (&s.eta + &s.eta_d) + &s.gamma_d
    }
}

fn basis_matrix(
    kind: BasisKind,
    centroids: &[Coord],
    knots: &KnotSet,
    radius: Option<f64>,
) -> Result<BasisMatrix> {
    match kind {
        BasisKind::ThinPlateSpline => Ok(thin_plate_spline(centroids, knots)),
        BasisKind::Bisquare => bisquare(centroids, knots, radius.expect("radius set for bisquare")),
    }
}

/// `[X; I]`.
pub(crate) fn stack_identity(x: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, p) = x.shape();
    let mut h = DMatrix::zeros(n + p, p);
    h.rows_mut(0, n).copy_from(x);
    h.rows_mut(n, p).fill_with_identity();
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_knots_on_a_line_use_the_grid() {
        let c: Vec<Coord> = (1..=10).map(|i| Coord::on_line(i as f64)).collect();
        let k = default_knots(&c, 4).unwrap();
        let xs: Vec<f64> = k.knots().iter().map(|k| k.x).collect();
        assert_eq!(xs, vec![1.0, 4.0, 7.0, 10.0]);
    }

    #[test]
    fn stack_identity_layout() {
        let x = DMatrix::from_row_slice(2, 1, &[2.0, 3.0]);
        let h = stack_identity(&x);
        assert_eq!(h, DMatrix::from_row_slice(3, 1, &[2.0, 3.0, 1.0]));
    }
}
