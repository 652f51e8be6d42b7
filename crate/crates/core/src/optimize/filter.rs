//! Cone-weight sensitivity filter.

use crate::error::{IgaError, Result};
use crate::mesh::IgaMesh;

/// Default lower bound on the density in the filter denominator.
pub const FILTER_FLOOR: f64 = 1e-3;

/// Weights `w_es = max(0, rmin − |c_e − c_s|)` between element centroids,
/// stored as compressed rows, with row sums `Hs`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterOperator {
    rmin: f64,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    weights: Vec<f64>,
    row_sums: Vec<f64>,
}

/// Neighbours are searched within `ceil(rmin) − 1` elements along each axis.
pub fn build_filter(mesh: &IgaMesh, rmin: f64) -> Result<FilterOperator> {
    if !(rmin > 0.0 && rmin.is_finite()) {
        return Err(IgaError::Domain {
            name: "rmin",
            value: rmin,
            range: "(0, inf)",
        });
    }
    let reach = rmin.ceil() as isize - 1;
    let n = [mesh.nelx(), mesh.nely(), mesh.nelz().unwrap_or(1)];
    let window = |c: usize, len: usize| {
        let lo = (c as isize - reach).max(0) as usize;
        let hi = ((c as isize + reach) as usize).min(len - 1);
        lo..=hi
    };
    let mut row_ptr = Vec::with_capacity(mesh.n_elems() + 1);
    row_ptr.push(0);
    let mut cols = Vec::new();
    let mut weights = Vec::new();
    let mut row_sums = Vec::with_capacity(mesh.n_elems());
    for e in 0..mesh.n_elems() {
        let [i, j, k] = mesh.element_coords(e);
        let mut sum = 0.0;
        for k2 in window(k, n[2]) {
            for j2 in window(j, n[1]) {
                for i2 in window(i, n[0]) {
                    let dx = i as f64 - i2 as f64;
                    let dy = j as f64 - j2 as f64;
                    let dz = k as f64 - k2 as f64;
                    let w = rmin - (dx * dx + dy * dy + dz * dz).sqrt();
                    if w > 0.0 {
                        cols.push(mesh.element_index(i2, j2, k2));
                        weights.push(w);
                        sum += w;
                    }
                }
            }
        }
        row_sums.push(sum);
        row_ptr.push(cols.len());
    }
    Ok(FilterOperator {
        rmin,
        row_ptr,
        cols,
        weights,
        row_sums,
    })
}

impl FilterOperator {
    pub fn rmin(&self) -> f64 {
        self.rmin
    }

    pub fn n(&self) -> usize {
        self.row_sums.len()
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// `Hs`, the row sums of `H`.
    pub fn row_sums(&self) -> &[f64] {
        &self.row_sums
    }

    /// Column indices and weights of row `e`.
    pub fn row(&self, e: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[e]..self.row_ptr[e + 1];
        (&self.cols[r.clone()], &self.weights[r])
    }

    pub fn weight(&self, e: usize, s: usize) -> f64 {
        let (cols, w) = self.row(e);
        cols.binary_search(&s).map_or(0.0, |k| w[k])
    }

    /// `H v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n())
            .map(|e| {
                let (cols, w) = self.row(e);
                cols.iter().zip(w).map(|(&s, &h)| h * v[s]).sum()
            })
            .collect()
    }

    /// `dĉ_e = [H (x ⊙ dc)]_e / (Hs_e · max(floor, x_e))`.
    pub fn filter_sensitivity(&self, x: &[f64], dc: &[f64], floor: f64) -> Result<Vec<f64>> {
        if x.len() != self.n() || dc.len() != self.n() {
            return Err(IgaError::DimensionMismatch {
                what: "filter input",
                expected: self.n(),
                found: if x.len() != self.n() {
                    x.len()
                } else {
                    dc.len()
                },
            });
        }
        let weighted: Vec<f64> = x.iter().zip(dc).map(|(a, b)| a * b).collect();
        let hv = self.apply(&weighted);
        Ok(hv
            .iter()
            .zip(&self.row_sums)
            .zip(x)
            .map(|((h, hs), xe)| h / hs / xe.max(floor))
            .collect())
    }
}
