//! Global stiffness assembly, boundary-condition reduction and the static
//! solve `K U = F`.

mod cholesky;
mod ordering;

use std::collections::HashMap;

use nalgebra::DMatrix;

pub use cholesky::{SolveReport, SparseCholesky, RESIDUAL_TOLERANCE};
pub use ordering::{dof_ordering, nested_dissection};

use crate::element::{element_stiffness, element_transform, symmetrized, BezierStiffness};
use crate::error::{IgaError, Result};
use crate::mesh::{BoundaryCase, ConnectivityTables, IgaMesh};
use crate::splines::{ElementClass, ExtractionOperatorSet};

/// Unit-modulus element matrices `C_e K⁰ C_eᵀ`, one per distinct
/// combination of per-direction element classes (at most 9 in 2D, 27 in 3D).
#[derive(Debug, Clone)]
pub struct ElementStiffnessCache {
    class_of: Vec<usize>,
    matrices: Vec<DMatrix<f64>>,
}

impl ElementStiffnessCache {
    pub fn new(mesh: &IgaMesh, k0: &BezierStiffness) -> Result<Self> {
        if k0.dim() != mesh.dim() {
            return Err(IgaError::DimensionMismatch {
                what: "Bezier element stiffness",
                expected: mesh.dim(),
                found: k0.dim(),
            });
        }
        let nel = mesh.elements_per_dir();
        let mut keys: HashMap<[ElementClass; 3], usize> = HashMap::new();
        let mut matrices = Vec::new();
        let mut class_of = Vec::with_capacity(mesh.n_elems());
        for e in 0..mesh.n_elems() {
            let c = mesh.element_coords(e);
            let mut key = [ElementClass::Single; 3];
            for d in 0..mesh.dim() {
                key[d] = ElementClass::of(c[d], nel[d]);
            }
            let idx = match keys.get(&key) {
                Some(&i) => i,
                None => {
                    let z = (mesh.dim() == 3).then(|| key[2].operator());
                    let t = element_transform(&key[0].operator(), &key[1].operator(), z.as_ref());
                    matrices.push(symmetrized(element_stiffness(&t, k0, 1.0)?));
                    keys.insert(key, matrices.len() - 1);
                    matrices.len() - 1
                }
            };
            class_of.push(idx);
        }
        Ok(ElementStiffnessCache { class_of, matrices })
    }

    pub fn n_elems(&self) -> usize {
        self.class_of.len()
    }

    /// Number of distinct matrices held.
    pub fn n_distinct(&self) -> usize {
        self.matrices.len()
    }

    /// `C_e K⁰ C_eᵀ` of element `e`.
    pub fn get(&self, e: usize) -> &DMatrix<f64> {
        &self.matrices[self.class_of[e]]
    }

    /// `u_eᵀ C_e K⁰ C_eᵀ u_e` for every element.
    pub fn element_energies(&self, conn: &ConnectivityTables, u: &[f64]) -> Vec<f64> {
        let mut ue = vec![0.0; conn.row_len()];
        (0..self.n_elems())
            .map(|e| {
                for (slot, &d) in ue.iter_mut().zip(conn.edof(e)) {
                    *slot = u[d];
                }
                let m = self.get(e);
                let mut s = 0.0;
                for (j, &uj) in ue.iter().enumerate() {
                    let col = m.column(j);
                    let mut t = 0.0;
                    for (i, &ui) in ue.iter().enumerate() {
                        t += col[i] * ui;
                    }
                    s += t * uj;
                }
                s
            })
            .collect()
    }
}

/// Symmetric sparse matrix, lower triangle stored in compressed columns
/// with sorted row indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricCsc {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SymmetricCsc {
    pub fn from_parts(
        n: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if col_ptr.len() != n + 1 || col_ptr[0] != 0 {
            return Err(IgaError::invalid(
                "column pointer array has the wrong shape",
            ));
        }
        if row_idx.len() != col_ptr[n] || values.len() != row_idx.len() {
            return Err(IgaError::invalid(
                "row index and value arrays disagree with column pointers",
            ));
        }
        for c in 0..n {
            if col_ptr[c] > col_ptr[c + 1] {
                return Err(IgaError::invalid("column pointers are not monotone"));
            }
            let rows = &row_idx[col_ptr[c]..col_ptr[c + 1]];
            if rows.iter().any(|&r| r < c || r >= n) || rows.windows(2).any(|w| w[0] >= w[1]) {
                return Err(IgaError::invalid(format!(
                    "column {c} is not a sorted lower-triangular column"
                )));
            }
        }
        Ok(SymmetricCsc {
            n,
            col_ptr,
            row_idx,
            values,
        })
    }

    /// Lower-triangle nonzeros of a dense symmetric matrix.
    pub fn from_dense(m: &DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(IgaError::invalid("matrix is not square"));
        }
        let n = m.nrows();
        let mut col_ptr = vec![0];
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        for c in 0..n {
            for r in c..n {
                if m[(r, c)] != 0.0 {
                    row_idx.push(r);
                    values.push(m[(r, c)]);
                }
            }
            col_ptr.push(row_idx.len());
        }
        Ok(SymmetricCsc {
            n,
            col_ptr,
            row_idx,
            values,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Stored entries (lower triangle including the diagonal).
    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_idx(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (r, c) = if r >= c { (r, c) } else { (c, r) };
        let range = self.col_ptr[c]..self.col_ptr[c + 1];
        match self.row_idx[range.clone()].binary_search(&r) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for c in 0..self.n {
            let xc = x[c];
            let mut acc = 0.0;
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                let r = self.row_idx[k];
                let v = self.values[k];
                y[r] += v * xc;
                if r != c {
                    acc += v * x[r];
                }
            }
            y[c] += acc;
        }
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for c in 0..self.n {
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                let r = self.row_idx[k];
                m[(r, c)] = self.values[k];
                m[(c, r)] = self.values[k];
            }
        }
        m
    }

    /// Principal submatrix on the rows and columns where `keep` is true.
    pub fn submatrix(&self, keep: &[bool]) -> Result<SymmetricCsc> {
        if keep.len() != self.n {
            return Err(IgaError::DimensionMismatch {
                what: "submatrix mask",
                expected: self.n,
                found: keep.len(),
            });
        }
        let mut new_index = vec![usize::MAX; self.n];
        let mut m = 0;
        for (i, _) in keep.iter().enumerate().filter(|(_, &k)| k) {
            new_index[i] = m;
            m += 1;
        }
        let mut col_ptr = vec![0];
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        for c in (0..self.n).filter(|&c| keep[c]) {
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                let r = self.row_idx[k];
                if keep[r] {
                    row_idx.push(new_index[r]);
                    values.push(self.values[k]);
                }
            }
            col_ptr.push(row_idx.len());
        }
        Ok(SymmetricCsc {
            n: m,
            col_ptr,
            row_idx,
            values,
        })
    }
}

/// Lower-triangle sparsity of the stiffness matrix restricted to the free
/// DOFs, together with the DOF-to-equation numbering. Equations follow the
/// natural DOF order with fixed DOFs skipped.
#[derive(Debug, Clone)]
pub struct SystemPattern {
    equation: Vec<usize>,
    dofs: Vec<usize>,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
}

impl SystemPattern {
    /// Two control points interact when some element contains both, which
    /// for quadratic tensor-product splines means every index differs by at
    /// most two.
    pub fn new(mesh: &IgaMesh, fixed: &[bool]) -> Result<Self> {
        let n_dofs = mesh.n_dofs();
        if fixed.len() != n_dofs {
            return Err(IgaError::DimensionMismatch {
                what: "fixed-DOF mask",
                expected: n_dofs,
                found: fixed.len(),
            });
        }
        let mut equation = vec![usize::MAX; n_dofs];
        let mut dofs = Vec::new();
        for d in (0..n_dofs).filter(|&d| !fixed[d]) {
            equation[d] = dofs.len();
            dofs.push(d);
        }
        let n_pts = mesh.n_ctrl_pts();
        let pts = [mesh.n_pts(0), mesh.n_pts(1), mesh.n_pts(2)];
        let window = |x: usize, n: usize| x.saturating_sub(2)..(x + 3).min(n);
        let mut col_ptr = Vec::with_capacity(dofs.len() + 1);
        col_ptr.push(0);
        let mut row_idx = Vec::new();
        let mut neighbours = Vec::with_capacity(125);
        for &dof in &dofs {
            let p = dof % n_pts;
            let [x, y, z] = mesh.point_coords(p);
            neighbours.clear();
            for zz in window(z, pts[2]) {
                for yy in window(y, pts[1]) {
                    for xx in window(x, pts[0]) {
                        neighbours.push(mesh.point_index(xx, yy, zz));
                    }
                }
            }
            let col = equation[dof];
            for block in 0..mesh.dim() {
                for &q in &neighbours {
                    let eq = equation[block * n_pts + q];
                    if eq != usize::MAX && eq >= col {
                        row_idx.push(eq);
                    }
                }
            }
            col_ptr.push(row_idx.len());
        }
        Ok(SystemPattern {
            equation,
            dofs,
            col_ptr,
            row_idx,
        })
    }

    pub fn n_free(&self) -> usize {
        self.dofs.len()
    }

    pub fn n_dofs(&self) -> usize {
        self.equation.len()
    }

    /// Equation number of a DOF, `None` if the DOF is fixed.
    pub fn equation(&self, dof: usize) -> Option<usize> {
        match self.equation[dof] {
            usize::MAX => None,
            eq => Some(eq),
        }
    }

    /// DOF carried by each equation.
    pub fn free_dofs(&self) -> &[usize] {
        &self.dofs
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    /// Scatters `E_e · C_e K⁰ C_eᵀ` into the pattern, element by element.
    pub fn assemble(
        &self,
        conn: &ConnectivityTables,
        cache: &ElementStiffnessCache,
        moduli: &[f64],
    ) -> Result<SymmetricCsc> {
        check_moduli(moduli, conn.n_elems())?;
        if cache.n_elems() != conn.n_elems() {
            return Err(IgaError::DimensionMismatch {
                what: "element stiffness cache",
                expected: conn.n_elems(),
                found: cache.n_elems(),
            });
        }
        let mut values = vec![0.0; self.row_idx.len()];
        let mut eqs = vec![usize::MAX; conn.row_len()];
        for (e, &modulus) in moduli.iter().enumerate() {
            for (slot, &d) in eqs.iter_mut().zip(conn.edof(e)) {
                *slot = self.equation[d];
            }
            let m = cache.get(e);
            for (a, &ca) in eqs.iter().enumerate() {
                if ca == usize::MAX {
                    continue;
                }
                let start = self.col_ptr[ca];
                let rows = &self.row_idx[start..self.col_ptr[ca + 1]];
                let col = m.column(a);
                for (b, &rb) in eqs.iter().enumerate() {
                    if rb == usize::MAX || rb < ca {
                        continue;
                    }
                    let k = rows
                        .binary_search(&rb)
                        .expect("element coupling outside the sparsity pattern");
                    values[start + k] += modulus * col[b];
                }
            }
        }
        Ok(SymmetricCsc {
            n: self.dofs.len(),
            col_ptr: self.col_ptr.clone(),
            row_idx: self.row_idx.clone(),
            values,
        })
    }

    /// Restricts a full-length vector to the free DOFs.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.dofs.iter().map(|&d| full[d]).collect()
    }

    /// Expands a free-DOF vector, writing zeros at fixed DOFs.
    pub fn expand(&self, free: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.equation.len()];
        for (&d, &v) in self.dofs.iter().zip(free) {
            full[d] = v;
        }
        full
    }
}

fn check_moduli(moduli: &[f64], n_elems: usize) -> Result<()> {
    if moduli.len() != n_elems {
        return Err(IgaError::DimensionMismatch {
            what: "element moduli",
            expected: n_elems,
            found: moduli.len(),
        });
    }
    if let Some((e, &v)) = moduli
        .iter()
        .enumerate()
        .find(|(_, &v)| !(v > 0.0 && v.is_finite()))
    {
        return Err(IgaError::invalid(format!(
            "element modulus must be positive and finite, element {} has {v}",
            e + 1
        )));
    }
    Ok(())
}

/// Full (unconstrained) global stiffness `K = Σ_e E_e · C_e K⁰ C_eᵀ`.
pub fn assemble(
    mesh: &IgaMesh,
    conn: &ConnectivityTables,
    cache: &ElementStiffnessCache,
    moduli: &[f64],
) -> Result<SymmetricCsc> {
    SystemPattern::new(mesh, &vec![false; mesh.n_dofs()])?.assemble(conn, cache, moduli)
}

/// Solves `K U = F` with `U = 0` on the fixed DOFs, using a minimum-degree
/// ordering. `k` is the full matrix, `fixed` holds 0-based DOF indices.
pub fn solve_displacements(k: &SymmetricCsc, f: &[f64], fixed: &[usize]) -> Result<Vec<f64>> {
    let n = k.n();
    if f.len() != n {
        return Err(IgaError::DimensionMismatch {
            what: "load vector",
            expected: n,
            found: f.len(),
        });
    }
    let mut keep = vec![true; n];
    for &d in fixed {
        if d >= n {
            return Err(IgaError::invalid(format!(
                "fixed DOF {} outside [1, {n}]",
                d + 1
            )));
        }
        keep[d] = false;
    }
    let free: Vec<usize> = (0..n).filter(|&d| keep[d]).collect();
    let reduced = k.submatrix(&keep)?;
    let rhs: Vec<f64> = free.iter().map(|&d| f[d]).collect();
    let report = SparseCholesky::analyze(&reduced, None)
        .and_then(|s| s.solve(&reduced, &rhs))
        .map_err(|e| with_total(e, n))?;
    let mut u = vec![0.0; n];
    for (&d, &v) in free.iter().zip(&report.x) {
        u[d] = v;
    }
    Ok(u)
}

fn with_total(e: IgaError, n_total: usize) -> IgaError {
    match e {
        IgaError::NotPositiveDefinite { free, detail, .. } => IgaError::NotPositiveDefinite {
            free,
            total: n_total,
            detail,
        },
        other => other,
    }
}

/// Applies `G_dᵀ` along every parametric direction of one scalar field laid
/// out x-fastest.
fn apply_along(
    data: &[f64],
    dims: [usize; 3],
    axis: usize,
    g: &crate::splines::GlobalExtraction,
) -> (Vec<f64>, [usize; 3]) {
    let mut out_dims = dims;
    out_dims[axis] = g.n_cols();
    let stride_in = [1, dims[0], dims[0] * dims[1]];
    let stride_out = [1, out_dims[0], out_dims[0] * out_dims[1]];
    let mut out = vec![0.0; out_dims.iter().product()];
    let (o1, o2) = match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    for a in 0..dims[o1] {
        for b in 0..dims[o2] {
            let base_in = a * stride_in[o1] + b * stride_in[o2];
            let base_out = a * stride_out[o1] + b * stride_out[o2];
            for c in 0..g.n_cols() {
                let v: f64 = g
                    .column(c)
                    .iter()
                    .map(|&(r, w)| w * data[base_in + r * stride_in[axis]])
                    .sum();
                out[base_out + c * stride_out[axis]] = v;
            }
        }
    }
    (out, out_dims)
}

/// Bézier control-point displacements `G_zᵀ ⊗ G_yᵀ ⊗ G_xᵀ u`, applied to
/// each displacement component.
pub fn bezier_displacements(
    mesh: &IgaMesh,
    extraction: &[ExtractionOperatorSet],
    u: &[f64],
) -> Result<Vec<f64>> {
    if u.len() != mesh.n_dofs() {
        return Err(IgaError::DimensionMismatch {
            what: "displacement vector",
            expected: mesh.n_dofs(),
            found: u.len(),
        });
    }
    if extraction.len() != mesh.dim() {
        return Err(IgaError::DimensionMismatch {
            what: "extraction operator sets",
            expected: mesh.dim(),
            found: extraction.len(),
        });
    }
    for (d, ops) in extraction.iter().enumerate() {
        if ops.n_elements() != mesh.elements_per_dir()[d] {
            return Err(IgaError::DimensionMismatch {
                what: "extraction operator elements",
                expected: mesh.elements_per_dir()[d],
                found: ops.n_elements(),
            });
        }
    }
    let n_pts = mesh.n_ctrl_pts();
    let mut out = Vec::with_capacity(mesh.n_dofs_bezier());
    for block in u.chunks(n_pts) {
        let mut data = block.to_vec();
        let mut dims = [mesh.n_pts(0), mesh.n_pts(1), mesh.n_pts(2)];
        for (axis, ops) in extraction.iter().enumerate() {
            (data, dims) = apply_along(&data, dims, axis, ops.global());
        }
        out.extend(data);
    }
    Ok(out)
}

/// Result of one static solve.
#[derive(Debug, Clone)]
pub struct Displacements {
    /// Control-point displacements on all DOFs, zero on the fixed ones.
    pub u: Vec<f64>,
    /// `‖F − K U‖ / ‖F‖` on the free DOFs.
    pub residual: f64,
    pub refinements: usize,
}

/// Everything needed to solve the static problem repeatedly for changing
/// element moduli: connectivity, cached element matrices, the reduced
/// sparsity pattern and its symbolic factorization.
pub struct StaticProblem {
    mesh: IgaMesh,
    conn: ConnectivityTables,
    extraction: Vec<ExtractionOperatorSet>,
    cache: ElementStiffnessCache,
    boundary: BoundaryCase,
    pattern: SystemPattern,
    solver: SparseCholesky,
    load: Vec<f64>,
    rhs: Vec<f64>,
}

impl StaticProblem {
    pub fn new(mesh: IgaMesh, k0: &BezierStiffness, boundary: BoundaryCase) -> Result<Self> {
        let n_dofs = mesh.n_dofs();
        if boundary.fixed_dofs().iter().any(|&d| d >= n_dofs)
            || boundary.load().iter().any(|&(d, _)| d >= n_dofs)
        {
            return Err(IgaError::invalid(format!(
                "boundary case '{}' refers to DOFs beyond the {n_dofs} of this mesh",
                boundary.name
            )));
        }
        let conn = ConnectivityTables::new(&mesh);
        let extraction = mesh
            .elements_per_dir()
            .iter()
            .map(|&n| ExtractionOperatorSet::new(n))
            .collect::<Result<Vec<_>>>()?;
        let cache = ElementStiffnessCache::new(&mesh, k0)?;
        let pattern = SystemPattern::new(&mesh, &boundary.fixed_mask(n_dofs))?;
        if pattern.n_free() == 0 {
            return Err(IgaError::invalid("every DOF is fixed; nothing to solve"));
        }
        let load = boundary.load_vector(n_dofs);
        let rhs = pattern.restrict(&load);
        let structure = SymmetricCsc {
            n: pattern.n_free(),
            col_ptr: pattern.col_ptr.clone(),
            row_idx: pattern.row_idx.clone(),
            values: vec![0.0; pattern.nnz()],
        };
        let order = dof_ordering(&mesh, &pattern);
        let solver = SparseCholesky::analyze(&structure, Some(&order))?;
        Ok(StaticProblem {
            mesh,
            conn,
            extraction,
            cache,
            boundary,
            pattern,
            solver,
            load,
            rhs,
        })
    }

    pub fn mesh(&self) -> &IgaMesh {
        &self.mesh
    }

    pub fn connectivity(&self) -> &ConnectivityTables {
        &self.conn
    }

    pub fn extraction(&self) -> &[ExtractionOperatorSet] {
        &self.extraction
    }

    pub fn cache(&self) -> &ElementStiffnessCache {
        &self.cache
    }

    pub fn boundary(&self) -> &BoundaryCase {
        &self.boundary
    }

    pub fn pattern(&self) -> &SystemPattern {
        &self.pattern
    }

    /// Global load vector on all DOFs.
    pub fn load(&self) -> &[f64] {
        &self.load
    }

    /// Reduced stiffness on the free DOFs.
    pub fn assemble_reduced(&self, moduli: &[f64]) -> Result<SymmetricCsc> {
        self.pattern.assemble(&self.conn, &self.cache, moduli)
    }

    pub fn solve(&self, moduli: &[f64]) -> Result<Displacements> {
        let k = self.assemble_reduced(moduli)?;
        let report = self
            .solver
            .solve(&k, &self.rhs)
            .map_err(|e| with_total(e, self.mesh.n_dofs()))?;
        Ok(Displacements {
            u: self.pattern.expand(&report.x),
            residual: report.residual,
            refinements: report.refinements,
        })
    }

    /// `u_eᵀ C_e K⁰ C_eᵀ u_e` for every element.
    pub fn element_energies(&self, u: &[f64]) -> Vec<f64> {
        self.cache.element_energies(&self.conn, u)
    }

    pub fn bezier_displacements(&self, u: &[f64]) -> Result<Vec<f64>> {
        bezier_displacements(&self.mesh, &self.extraction, u)
    }
}
