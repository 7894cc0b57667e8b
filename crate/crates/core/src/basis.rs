//! Reduced-rank spatial basis functions and the shape-group design.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WapError};

/// A planar location. One-dimensional domains use `y = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coord {
    pub x: f64,
    pub y: f64,
}

impl Coord {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn on_line(x: f64) -> Self {
        Self { x, y: 0.0 }
    }

    pub fn dist(&self, other: &Coord) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnotSet {
    knots: Vec<Coord>,
}

impl KnotSet {
    pub fn new(knots: Vec<Coord>) -> Result<Self> {
        if knots.is_empty() {
            return Err(WapError::domain("a knot set needs at least one knot"));
        }
        for (i, a) in knots.iter().enumerate() {
            if !(a.x.is_finite() && a.y.is_finite()) {
                return Err(WapError::domain(format!("knot {i} is not finite")));
            }
            if knots[..i].iter().any(|b| b == a) {
                return Err(WapError::domain(format!("knot {i} duplicates an earlier knot")));
            }
        }
        Ok(Self { knots })
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    pub fn knots(&self) -> &[Coord] {
        &self.knots
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    ThinPlateSpline,
    Bisquare,
}

impl std::str::FromStr for BasisKind {
    type Err = WapError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tps" | "thin_plate_spline" => Ok(BasisKind::ThinPlateSpline),
            "bisquare" => Ok(BasisKind::Bisquare),
            other => Err(WapError::domain(format!("unknown basis kind '{other}'"))),
        }
    }
}

impl std::fmt::Display for BasisKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BasisKind::ThinPlateSpline => "tps",
            BasisKind::Bisquare => "bisquare",
        })
    }
}

#[derive(Debug, Clone)]
pub struct BasisMatrix {
    pub psi: DMatrix<f64>,
    pub kind: BasisKind,
}

/// `d^2 ln d`, continuously extended by 0 at `d = 0`.
pub fn tps_kernel(d: f64) -> f64 {
    if d == 0.0 {
        0.0
    } else {
        d * d * d.ln()
    }
}

/// `(1 - (d/r)^2)^2` inside the radius, 0 outside.
pub fn bisquare_kernel(d: f64, radius: f64) -> f64 {
    if d < radius {
        let s = d / radius;
        let t = 1.0 - s * s;
        t * t
    } else {
        0.0
    }
}

pub fn thin_plate_spline(centroids: &[Coord], knots: &KnotSet) -> BasisMatrix {
    let psi = DMatrix::from_fn(centroids.len(), knots.len(), |i, j| {
        tps_kernel(centroids[i].dist(&knots.knots[j]))
    });
    BasisMatrix {
        psi,
        kind: BasisKind::ThinPlateSpline,
    }
}

pub fn bisquare(centroids: &[Coord], knots: &KnotSet, radius: f64) -> Result<BasisMatrix> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(WapError::domain(format!("bisquare radius must be positive, got {radius}")));
    }
    let psi = DMatrix::from_fn(centroids.len(), knots.len(), |i, j| {
        bisquare_kernel(centroids[i].dist(&knots.knots[j]), radius)
    });
    let uncovered = psi
        .row_iter()
        .filter(|row| row.iter().all(|v| *v == 0.0))
        .count();
    if uncovered > 0 {
        log::warn!("bisquare basis: {uncovered} region(s) lie outside every knot radius");
    }
    Ok(BasisMatrix {
        psi,
        kind: BasisKind::Bisquare,
    })
}

/// Median of a non-empty slice; even lengths average the two middle values.
pub(crate) fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// 1.5 times the median pairwise distance between knots.
pub fn default_radius(knots: &KnotSet) -> Result<f64> {
    let k = knots.knots();
    if k.len() < 2 {
        return Err(WapError::domain("default radius needs at least two knots"));
    }
    let mut dists = Vec::with_capacity(k.len() * (k.len() - 1) / 2);
    for i in 0..k.len() {
        for j in (i + 1)..k.len() {
            dists.push(k[i].dist(&k[j]));
        }
    }
    Ok(1.5 * median(&mut dists))
}

/// `r` equally spaced knots on `[min, max]`, endpoints included. A single
/// knot sits at the midpoint.
pub fn knot_grid(domain_min: f64, domain_max: f64, r: usize) -> Result<KnotSet> {
    if r == 0 {
        return Err(WapError::domain("knot grid needs at least one knot"));
    }
    if !(domain_max > domain_min) {
        return Err(WapError::domain(format!(
            "degenerate knot interval [{domain_min}, {domain_max}]"
        )));
    }
    let knots = if r == 1 {
        vec![Coord::on_line(0.5 * (domain_min + domain_max))]
    } else {
        let step = (domain_max - domain_min) / (r - 1) as f64;
        (0..r)
            .map(|i| {
                if i == r - 1 {
                    Coord::on_line(domain_max)
                } else {
                    Coord::on_line(domain_min + step * i as f64)
                }
            })
            .collect()
    };
    KnotSet::new(knots)
}

/// Deterministic space-filling subset of `r` distinct locations: start from the
/// lexicographically smallest point and repeatedly add the point farthest from
/// the current set (ties broken by input order).
pub fn farthest_point_knots(points: &[Coord], r: usize) -> Result<KnotSet> {
    let mut distinct: Vec<Coord> = Vec::new();
    for p in points {
        if !distinct.contains(p) {
            distinct.push(*p);
        }
    }
    if r == 0 || r > distinct.len() {
        return Err(WapError::domain(format!(
            "cannot choose {r} knots from {} distinct locations",
            distinct.len()
        )));
    }
    let start = (0..distinct.len())
        .min_by(|&a, &b| {
            distinct[a]
                .x
                .total_cmp(&distinct[b].x)
                .then(distinct[a].y.total_cmp(&distinct[b].y))
        })
        .expect("non-empty");
    let mut chosen = vec![distinct[start]];
    let mut nearest: Vec<f64> = distinct.iter().map(|p| p.dist(&distinct[start])).collect();
    while chosen.len() < r {
        let mut best = 0;
        for i in 1..distinct.len() {
            if nearest[i] > nearest[best] {
                best = i;
            }
        }
        let next = distinct[best];
        chosen.push(next);
        for (i, p) in distinct.iter().enumerate() {
            nearest[i] = nearest[i].min(p.dist(&next));
        }
    }
    KnotSet::new(chosen)
}

/// Indicator matrix mapping each region to its shape group.
#[derive(Debug, Clone)]
pub struct ShapeDesign {
    pub phi: DMatrix<f64>,
    /// Group label of each column, in order of first appearance.
    pub groups: Vec<String>,
    /// Column index of each row.
    pub membership: Vec<usize>,
}

impl ShapeDesign {
    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    /// Row indices belonging to each group.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.groups.len()];
        for (i, &g) in self.membership.iter().enumerate() {
            out[g].push(i);
        }
        out
    }
}

pub fn shape_indicator<S: AsRef<str>>(labels: &[S]) -> ShapeDesign {
    let mut groups: Vec<String> = Vec::new();
    let mut membership = Vec::with_capacity(labels.len());
    for label in labels {
        let label = label.as_ref();
        let col = match groups.iter().position(|g| g == label) {
            Some(c) => c,
            None => {
                groups.push(label.to_string());
                groups.len() - 1
            }
        };
        membership.push(col);
    }
    let mut phi = DMatrix::zeros(labels.len(), groups.len());
    for (i, &c) in membership.iter().enumerate() {
        phi[(i, c)] = 1.0;
    }
    ShapeDesign {
        phi,
        groups,
        membership,
    }
}

/// Labels grouping consecutive runs of `block` regions together.
pub fn contiguous_groups(n: usize, block: usize) -> Vec<String> {
    let block = block.max(1);
    (0..n).map(|i| format!("g{}", i / block)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> Vec<Coord> {
        xs.iter().map(|&x| Coord::on_line(x)).collect()
    }

    #[test]
    fn tps_values() {
        assert_eq!(tps_kernel(1.0), 0.0);
        assert_eq!(tps_kernel(0.0), 0.0);
        let e = std::f64::consts::E;
        assert!((tps_kernel(e) - e * e).abs() < 1e-12);
    }

    #[test]
    fn tps_symmetric_on_coincident_grid() {
        let pts = line(&[0.0, 1.5, 4.0, 7.0]);
        let knots = KnotSet::new(pts.clone()).unwrap();
        let b = thin_plate_spline(&pts, &knots);
        assert!((b.psi.clone() - b.psi.transpose()).amax() < 1e-12);
    }

    #[test]
    fn bisquare_values() {
        assert_eq!(bisquare_kernel(0.0, 2.0), 1.0);
        assert_eq!(bisquare_kernel(2.0, 2.0), 0.0);
        assert!((bisquare_kernel(1.0, 2.0) - 0.5625).abs() < 1e-15);
        assert!(bisquare_kernel(1.999_999, 2.0) < 1e-10);
        let knots = KnotSet::new(line(&[0.0])).unwrap();
        assert!(bisquare(&line(&[0.0]), &knots, 0.0).is_err());
        assert!(bisquare(&line(&[0.0]), &knots, -1.0).is_err());
    }

    #[test]
    fn bisquare_entries_in_unit_interval() {
        let knots = knot_grid(0.0, 10.0, 4).unwrap();
        let r = default_radius(&knots).unwrap();
        let b = bisquare(&line(&[0.0, 0.3, 2.2, 5.0, 9.9]), &knots, r).unwrap();
        assert!(b.psi.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(b.psi.row_iter().all(|row| row.iter().any(|v| *v > 0.0)));
    }

    #[test]
    fn radius_examples() {
        let k = KnotSet::new(line(&[0.0, 1.0, 2.0])).unwrap();
        assert!((default_radius(&k).unwrap() - 1.5).abs() < 1e-15);
        let k = KnotSet::new(line(&[0.0, 2.0])).unwrap();
        assert!((default_radius(&k).unwrap() - 3.0).abs() < 1e-15);
        let k = KnotSet::new(vec![Coord::new(0.0, 0.0), Coord::new(3.0, 4.0)]).unwrap();
        assert!((default_radius(&k).unwrap() - 7.5).abs() < 1e-15);
        let k = KnotSet::new(line(&[0.0])).unwrap();
        assert!(default_radius(&k).is_err());
    }

    #[test]
    fn knot_grid_examples() {
        assert_eq!(knot_grid(0.0, 10.0, 2).unwrap().knots(), &line(&[0.0, 10.0])[..]);
        assert_eq!(knot_grid(0.0, 10.0, 3).unwrap().knots(), &line(&[0.0, 5.0, 10.0])[..]);
        assert!(knot_grid(1.0, 1.0, 1).is_err());
        assert!(knot_grid(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn duplicate_knots_rejected() {
        assert!(KnotSet::new(line(&[1.0, 1.0])).is_err());
        assert!(KnotSet::new(vec![]).is_err());
    }

    #[test]
    fn shape_indicator_examples() {
        let d = shape_indicator(&["a", "a", "b"]);
        assert_eq!(d.phi, DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 0.0, 0.0, 1.0]));
        let d = shape_indicator(&["x", "x", "x"]);
        assert_eq!(d.phi, DMatrix::from_element(3, 1, 1.0));
        let d = shape_indicator(&["p", "q", "r"]);
        assert_eq!(d.phi, DMatrix::identity(3, 3));
        assert!(d.phi.row_iter().all(|r| r.sum() == 1.0));
    }

    #[test]
    fn contiguous_blocks_of_ten() {
        let labels = contiguous_groups(25, 10);
        let d = shape_indicator(&labels);
        assert_eq!(d.n_groups(), 3);
        assert_eq!(d.members()[2], (20..25).collect::<Vec<_>>());
    }

    #[test]
    fn farthest_point_is_deterministic_and_spread() {
        let pts: Vec<Coord> = (0..10).map(|i| Coord::new(i as f64, (i % 3) as f64)).collect();
        let a = farthest_point_knots(&pts, 4).unwrap();
        let b = farthest_point_knots(&pts, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.knots()[0], Coord::new(0.0, 0.0));
        assert_eq!(a.knots()[1], Coord::new(9.0, 0.0));
        assert!(farthest_point_knots(&pts, 11).is_err());
    }
}
