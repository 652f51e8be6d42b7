//! Open uniform knot vectors, Bernstein and B-spline bases, and the Bézier
//! extraction operators of a quadratic B-spline discretisation.
//!
//! Extraction operators follow the `b = C B` convention: a local operator
//! maps the three Bernstein polynomials of an element to the three B-spline
//! basis functions active on it. Control values travel the other way,
//! `P̄_e = C_eᵀ P_e`.

use nalgebra::Matrix3;

use crate::error::{IgaError, Result};

/// Polynomial degree used throughout the crate.
pub const DEGREE: usize = 2;

/// Open knot vector with unit interior spacing, `{0,…,0, 1, 2, …, n_el, …, n_el}`.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    degree: usize,
    n_elements: usize,
    knots: Vec<f64>,
}

impl KnotVector {
    /// Quadratic open uniform knot vector over `n_elements` unit spans.
    pub fn open_uniform(n_elements: usize) -> Result<Self> {
        Self::open_uniform_with_degree(DEGREE, n_elements)
    }

    pub fn open_uniform_with_degree(degree: usize, n_elements: usize) -> Result<Self> {
        if n_elements < 1 {
            return Err(IgaError::invalid("knot vector needs at least one element"));
        }
        let mut knots = Vec::with_capacity(n_elements + 2 * degree + 1);
        knots.extend(std::iter::repeat(0.0).take(degree));
        knots.extend((0..=n_elements).map(|k| k as f64));
        knots.extend(std::iter::repeat(n_elements as f64).take(degree));
        Ok(KnotVector {
            degree,
            n_elements,
            knots,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Number of basis functions, `n_el + p`.
    pub fn n_basis(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    pub fn first(&self) -> f64 {
        self.knots[0]
    }

    pub fn last(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    /// Index `i` of the knot span `[ξ_i, ξ_{i+1})` containing `xi`. The last
    /// non-empty span is closed on the right.
    pub fn find_span(&self, xi: f64) -> Result<usize> {
        if !(xi >= self.first() && xi <= self.last()) {
            return Err(IgaError::Domain {
                name: "xi",
                value: xi,
                range: "[first knot, last knot]",
            });
        }
        let n = self.n_basis();
        if xi >= self.knots[n] {
            return Ok(n - 1);
        }
        // Last index with knots[i] <= xi.
        let i = self.knots.partition_point(|&k| k <= xi) - 1;
        Ok(i)
    }

    /// Element (0-based) whose parametric span contains `xi`, and the local
    /// coordinate of `xi` in `[0, 1]` within that element.
    pub fn element_of(&self, xi: f64) -> Result<(usize, f64)> {
        let span = self.find_span(xi)?;
        let e = span - self.degree;
        let lo = self.knots[span];
        let hi = self.knots[span + 1];
        Ok((e, (xi - lo) / (hi - lo)))
    }
}

/// Bernstein polynomials `B_i(ξ) = C(p,i) ξ^i (1-ξ)^(p-i)` on `[0, 1]`.
pub fn bernstein_basis(p: usize, xi: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&xi) {
        return Err(IgaError::Domain {
            name: "xi",
            value: xi,
            range: "[0, 1]",
        });
    }
    let mut binom = 1.0;
    let mut out = Vec::with_capacity(p + 1);
    for i in 0..=p {
        if i > 0 {
            binom = binom * (p + 1 - i) as f64 / i as f64;
        }
        out.push(binom * xi.powi(i as i32) * (1.0 - xi).powi((p - i) as i32));
    }
    Ok(out)
}

/// Derivatives of the Bernstein polynomials with respect to `ξ`.
pub fn bernstein_derivatives(p: usize, xi: f64) -> Result<Vec<f64>> {
    if p == 0 {
        bernstein_basis(0, xi)?;
        return Ok(vec![0.0]);
    }
    let lower = bernstein_basis(p - 1, xi)?;
    let pf = p as f64;
    Ok((0..=p)
        .map(|i| {
            let left = if i > 0 { lower[i - 1] } else { 0.0 };
            let right = if i < p { lower[i] } else { 0.0 };
            pf * (left - right)
        })
        .collect())
}

/// All B-spline basis functions of `kv` at `xi`, by the Cox–de Boor recursion.
///
/// Returns a vector of length `kv.n_basis()` with at most `p + 1` nonzeros.
pub fn bspline_basis(kv: &KnotVector, xi: f64) -> Result<Vec<f64>> {
    let span = kv.find_span(xi)?;
    let u = kv.knots();
    let p = kv.degree();
    let m = u.len() - 1;
    // Degree-0 functions over every knot interval.
    let mut n: Vec<f64> = (0..m).map(|i| if i == span { 1.0 } else { 0.0 }).collect();
    for q in 1..=p {
        let mut next = vec![0.0; m - q];
        for (i, slot) in next.iter_mut().enumerate() {
            let mut v = 0.0;
            let d1 = u[i + q] - u[i];
            if d1 > 0.0 {
                v += (xi - u[i]) / d1 * n[i];
            }
            let d2 = u[i + q + 1] - u[i + 1];
            if d2 > 0.0 {
                v += (u[i + q + 1] - xi) / d2 * n[i + 1];
            }
            *slot = v;
        }
        n = next;
    }
    debug_assert_eq!(n.len(), kv.n_basis());
    Ok(n)
}

/// Derivatives of all B-spline basis functions at `xi`.
pub fn bspline_derivatives(kv: &KnotVector, xi: f64) -> Result<Vec<f64>> {
    let p = kv.degree();
    if p == 0 {
        kv.find_span(xi)?;
        return Ok(vec![0.0; kv.n_basis()]);
    }
    let u = kv.knots();
    // Degree p-1 basis on the same knots, one more function than degree p.
    let lower = KnotVector {
        degree: p - 1,
        n_elements: kv.n_elements,
        knots: u.to_vec(),
    };
    let n = bspline_basis(&lower, xi)?;
    let pf = p as f64;
    Ok((0..kv.n_basis())
        .map(|i| {
            let mut d = 0.0;
            let a = u[i + p] - u[i];
            if a > 0.0 {
                d += pf / a * n[i];
            }
            let b = u[i + p + 1] - u[i + 1];
            if b > 0.0 {
                d -= pf / b * n[i + 1];
            }
            d
        })
        .collect())
}

/// Position of an element within its parametric direction. Elements in the
/// same class share the same local extraction operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ElementClass {
    /// The only element (`n_el = 1`).
    Single,
    First,
    Interior,
    Last,
}

impl ElementClass {
    pub fn of(e: usize, n_elements: usize) -> Self {
        match (e == 0, e + 1 == n_elements) {
            (true, true) => ElementClass::Single,
            (true, false) => ElementClass::First,
            (false, true) => ElementClass::Last,
            (false, false) => ElementClass::Interior,
        }
    }

    /// The quadratic extraction operator of this class.
    pub fn operator(self) -> Matrix3<f64> {
        let mut c = Matrix3::new(0.5, 0.0, 0.0, 0.5, 1.0, 0.5, 0.0, 0.0, 0.5);
        if matches!(self, ElementClass::First | ElementClass::Single) {
            c.set_column(0, &nalgebra::Vector3::new(1.0, 0.0, 0.0));
        }
        if matches!(self, ElementClass::Last | ElementClass::Single) {
            c.set_column(2, &nalgebra::Vector3::new(0.0, 0.0, 1.0));
        }
        c
    }
}

/// Per-element extraction operators for one parametric direction.
pub fn local_extraction_operators(n_elements: usize) -> Result<Vec<Matrix3<f64>>> {
    if n_elements < 1 {
        return Err(IgaError::invalid("extraction needs at least one element"));
    }
    Ok((0..n_elements)
        .map(|e| ElementClass::of(e, n_elements).operator())
        .collect())
}

/// Sparse change of basis from B-spline control values (rows) to Bézier
/// control values (columns) in one direction. Each column holds one or two
/// entries.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalExtraction {
    n_bspline: usize,
    columns: Vec<Vec<(usize, f64)>>,
}

impl GlobalExtraction {
    pub fn n_rows(&self) -> usize {
        self.n_bspline
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    /// Entries `(row, value)` of Bézier column `c` (0-based).
    pub fn column(&self, c: usize) -> &[(usize, f64)] {
        &self.columns[c]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.columns[col]
            .iter()
            .find(|(r, _)| *r == row)
            .map_or(0.0, |&(_, v)| v)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n_rows(), self.n_cols());
        for (c, col) in self.columns.iter().enumerate() {
            for &(r, v) in col {
                m[(r, c)] = v;
            }
        }
        m
    }

    /// Bézier control values from B-spline control values, `Gᵀ · values`.
    pub fn apply_transpose(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.n_bspline {
            return Err(IgaError::DimensionMismatch {
                what: "B-spline control values",
                expected: self.n_bspline,
                found: values.len(),
            });
        }
        Ok(self
            .columns
            .iter()
            .map(|col| col.iter().map(|&(r, v)| v * values[r]).sum())
            .collect())
    }
}

/// Global extraction matrix of shape `(n_el + 2) × (2 n_el + 1)`.
///
/// Even Bézier columns (1-based `2k-2`) coincide with B-spline point `k`;
/// the two end columns coincide with the end points; every other interior
/// column sits halfway between its two neighbouring B-spline points.
pub fn global_extraction_matrix(n_elements: usize) -> Result<GlobalExtraction> {
    if n_elements < 1 {
        return Err(IgaError::invalid("extraction needs at least one element"));
    }
    let n_bspline = n_elements + 2;
    let n_bezier = 2 * n_elements + 1;
    let mut columns = vec![Vec::new(); n_bezier];
    // 0-based: column 0 <- row 0, column 2k-1 <- row k (k = 1..=n_el),
    // last column <- last row.
    columns[0].push((0, 1.0));
    for k in 1..=n_elements {
        columns[2 * k - 1].push((k, 1.0));
    }
    columns[n_bezier - 1].push((n_bspline - 1, 1.0));
    // Interfaces between elements: column 2k, k = 1..n_el-1, rows k and k+1.
    for k in 1..n_elements {
        columns[2 * k].push((k, 0.5));
        columns[2 * k].push((k + 1, 0.5));
    }
    Ok(GlobalExtraction { n_bspline, columns })
}

/// Local and global extraction data for one parametric direction.
#[derive(Debug, Clone)]
pub struct ExtractionOperatorSet {
    local: Vec<Matrix3<f64>>,
    global: GlobalExtraction,
}

impl ExtractionOperatorSet {
    pub fn new(n_elements: usize) -> Result<Self> {
        Ok(ExtractionOperatorSet {
            local: local_extraction_operators(n_elements)?,
            global: global_extraction_matrix(n_elements)?,
        })
    }

    pub fn n_elements(&self) -> usize {
        self.local.len()
    }

    pub fn local(&self, e: usize) -> &Matrix3<f64> {
        &self.local[e]
    }

    pub fn local_operators(&self) -> &[Matrix3<f64>] {
        &self.local
    }

    pub fn global(&self) -> &GlobalExtraction {
        &self.global
    }

    pub fn class(&self, e: usize) -> ElementClass {
        ElementClass::of(e, self.local.len())
    }
}
