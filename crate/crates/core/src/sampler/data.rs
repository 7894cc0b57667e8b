use nalgebra::DMatrix;

use crate::basis::Coord;
use crate::error::{Result, WapError};
use crate::mlg::check_full_column_rank;

/// Areal multi-type data: Weibull responses on one set of regions and Poisson
/// counts on another (possibly the same) set. Either side may be empty.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ArealDataset {
    pub region_ids_c: Vec<String>,
    pub t: Vec<f64>,
    pub x_c: DMatrix<f64>,
    pub centroids_c: Vec<Coord>,
    pub shape_groups: Vec<String>,

    pub region_ids_d: Vec<String>,
    pub z: Vec<u64>,
    pub x_d: DMatrix<f64>,
    pub centroids_d: Vec<Coord>,
    pub population: Option<Vec<u64>>,
}

impl ArealDataset {
    pub fn n_c(&self) -> usize {
        self.t.len()
    }

    pub fn n_d(&self) -> usize {
        self.z.len()
    }

    pub fn p_c(&self) -> usize {
        self.x_c.ncols()
    }

    pub fn p_d(&self) -> usize {
        self.x_d.ncols()
    }

    pub fn has_weibull(&self) -> bool {
        !self.t.is_empty()
    }

    pub fn has_counts(&self) -> bool {
        !self.z.is_empty()
    }

    /// Checks lengths, the positivity of `t`, and the rank of both designs.
    pub fn validate(&self) -> Result<()> {
        let n_c = self.n_c();
        if self.x_c.nrows() != n_c || self.centroids_c.len() != n_c || self.shape_groups.len() != n_c
        {
            return Err(WapError::shape(format!(
                "Weibull side: {n_c} responses, {} covariate rows, {} centroids, {} shape labels",
                self.x_c.nrows(),
                self.centroids_c.len(),
                self.shape_groups.len()
            )));
        }
        if !self.region_ids_c.is_empty() && self.region_ids_c.len() != n_c {
            return Err(WapError::shape("Weibull region id count differs from response count"));
        }
        let bad: Vec<usize> = self
            .t
            .iter()
            .enumerate()
            .filter(|(_, t)| !(**t > 0.0 && t.is_finite()))
            .map(|(i, _)| i)
            .collect();
        if !bad.is_empty() {
            return Err(WapError::domain(format!(
                "Weibull responses must be positive; offending indices {bad:?}"
            )));
        }

        let n_d = self.n_d();
        if self.x_d.nrows() != n_d || self.centroids_d.len() != n_d {
            return Err(WapError::shape(format!(
                "count side: {n_d} counts, {} covariate rows, {} centroids",
                self.x_d.nrows(),
                self.centroids_d.len()
            )));
        }
        if !self.region_ids_d.is_empty() && self.region_ids_d.len() != n_d {
            return Err(WapError::shape("count region id count differs from count length"));
        }
        if let Some(pop) = &self.population {
            if pop.len() != n_d {
                return Err(WapError::shape("population length differs from count length"));
            }
        }
        if n_c == 0 && n_d == 0 {
            return Err(WapError::shape("dataset has no responses"));
        }
        if n_c > 0 {
            if self.p_c() == 0 {
                return Err(WapError::shape("Weibull side needs at least one covariate"));
            }
            check_full_column_rank(&self.x_c, "Weibull covariate matrix")?;
        }
        if n_d > 0 {
            if self.p_d() == 0 {
                return Err(WapError::shape("count side needs at least one covariate"));
            }
            check_full_column_rank(&self.x_d, "count covariate matrix")?;
        }
        Ok(())
    }

    /// Copy retaining only the Weibull side.
    pub fn weibull_only(&self) -> Self {
        Self {
            region_ids_c: self.region_ids_c.clone(),
            t: self.t.clone(),
            x_c: self.x_c.clone(),
            centroids_c: self.centroids_c.clone(),
            shape_groups: self.shape_groups.clone(),
            x_d: DMatrix::zeros(0, self.p_d()),
            ..Default::default()
        }
    }

    /// Copy retaining only the count side.
    pub fn poisson_only(&self) -> Self {
        Self {
            x_c: DMatrix::zeros(0, self.p_c()),
            region_ids_d: self.region_ids_d.clone(),
            z: self.z.clone(),
            x_d: self.x_d.clone(),
            centroids_d: self.centroids_d.clone(),
            population: self.population.clone(),
            ..Default::default()
        }
    }
}
