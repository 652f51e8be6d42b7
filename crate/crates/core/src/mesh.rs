//! Structured tensor-product meshes, DOF connectivity, and boundary cases.
//!
//! Indices are 0-based here. Control points and elements are numbered
//! x-fastest, then y, then z; each DOF vector stores all x-components,
//! then all y-components (then all z-components). The 1-based numbering of
//! the original benchmark listings maps to `index + 1`.

use crate::error::{IgaError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IgaMesh {
    dim: usize,
    nel: [usize; 3],
}

impl IgaMesh {
    pub fn new_2d(nelx: usize, nely: usize) -> Result<Self> {
        Self::new(2, &[nelx, nely])
    }

    pub fn new_3d(nelx: usize, nely: usize, nelz: usize) -> Result<Self> {
        Self::new(3, &[nelx, nely, nelz])
    }

    /// Mesh with `counts.len() == dim` element counts.
    pub fn new(dim: usize, counts: &[usize]) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(IgaError::invalid(format!(
                "dimension must be 2 or 3, got {dim}"
            )));
        }
        if counts.len() != dim {
            return Err(IgaError::DimensionMismatch {
                what: "element counts",
                expected: dim,
                found: counts.len(),
            });
        }
        if counts.iter().any(|&n| n < 1) {
            return Err(IgaError::invalid("every element count must be at least 1"));
        }
        let mut nel = [1; 3];
        nel[..dim].copy_from_slice(counts);
        Ok(IgaMesh { dim, nel })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nelx(&self) -> usize {
        self.nel[0]
    }

    pub fn nely(&self) -> usize {
        self.nel[1]
    }

    pub fn nelz(&self) -> Option<usize> {
        (self.dim == 3).then_some(self.nel[2])
    }

    /// Element counts for the active directions.
    pub fn elements_per_dir(&self) -> &[usize] {
        &self.nel[..self.dim]
    }

    /// B-spline control points along direction `d`, `nel + 2`.
    pub fn n_pts(&self, d: usize) -> usize {
        if d < self.dim {
            self.nel[d] + 2
        } else {
            1
        }
    }

    /// Bézier control points along direction `d`, `2 nel + 1`.
    pub fn n_pts_bezier(&self, d: usize) -> usize {
        if d < self.dim {
            2 * self.nel[d] + 1
        } else {
            1
        }
    }

    pub fn n_ctrl_pts(&self) -> usize {
        (0..3).map(|d| self.n_pts(d)).product()
    }

    pub fn n_ctrl_pts_bezier(&self) -> usize {
        (0..3).map(|d| self.n_pts_bezier(d)).product()
    }

    pub fn n_elems(&self) -> usize {
        self.nel.iter().product()
    }

    pub fn n_dofs(&self) -> usize {
        self.dim * self.n_ctrl_pts()
    }

    pub fn n_dofs_bezier(&self) -> usize {
        self.dim * self.n_ctrl_pts_bezier()
    }

    /// DOFs per element, `dim · 3^dim`.
    pub fn element_dofs(&self) -> usize {
        self.dim * 3usize.pow(self.dim as u32)
    }

    pub fn element_index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.nel[0] * (j + self.nel[1] * k)
    }

    /// Parametric element coordinates `(i, j, k)` of element `e`; `k = 0` in 2D.
    pub fn element_coords(&self, e: usize) -> [usize; 3] {
        let i = e % self.nel[0];
        let r = e / self.nel[0];
        [i, r % self.nel[1], r / self.nel[1]]
    }

    pub fn point_index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.n_pts(0) * (y + self.n_pts(1) * z)
    }

    pub fn point_coords(&self, p: usize) -> [usize; 3] {
        let px = self.n_pts(0);
        let py = self.n_pts(1);
        [p % px, (p / px) % py, p / (px * py)]
    }
}

/// Element-to-DOF tables for the B-spline and the decomposed Bézier mesh.
#[derive(Debug, Clone)]
pub struct ConnectivityTables {
    dim: usize,
    row_len: usize,
    edof: Vec<usize>,
    edof_bezier: Vec<usize>,
}

/// `stride` is 1 for B-spline windows and 2 for Bézier windows.
fn element_rows(
    mesh: &IgaMesh,
    stride: usize,
    row: usize,
    layer: usize,
    n_pts: usize,
) -> Vec<usize> {
    let dim = mesh.dim();
    let per = 3usize.pow(dim as u32);
    let mut out = Vec::with_capacity(mesh.n_elems() * per * dim);
    let zr = if dim == 3 { 3 } else { 1 };
    for e in 0..mesh.n_elems() {
        let [i, j, k] = mesh.element_coords(e);
        let mut pts = Vec::with_capacity(per);
        for c in 0..zr {
            for b in 0..3 {
                for a in 0..3 {
                    let x = stride * i + a;
                    let y = stride * j + b;
                    let z = stride * k + c;
                    pts.push(x + row * y + layer * z);
                }
            }
        }
        for d in 0..dim {
            out.extend(pts.iter().map(|p| p + d * n_pts));
        }
    }
    out
}

impl ConnectivityTables {
    pub fn new(mesh: &IgaMesh) -> Self {
        let px = mesh.n_pts(0);
        let py = mesh.n_pts(1);
        let bx = mesh.n_pts_bezier(0);
        let by = mesh.n_pts_bezier(1);
        ConnectivityTables {
            row_len: mesh.element_dofs(),
            dim: mesh.dim(),
            edof: element_rows(mesh, 1, px, px * py, mesh.n_ctrl_pts()),
            edof_bezier: element_rows(mesh, 2, bx, bx * by, mesh.n_ctrl_pts_bezier()),
        }
    }

    pub fn n_elems(&self) -> usize {
        self.edof.len() / self.row_len
    }

    /// Columns of each table (18 in 2D, 81 in 3D).
    pub fn row_len(&self) -> usize {
        self.row_len
    }

    /// Global B-spline DOFs of element `e`.
    pub fn edof(&self, e: usize) -> &[usize] {
        &self.edof[e * self.row_len..(e + 1) * self.row_len]
    }

    /// Global Bézier DOFs of element `e`.
    pub fn edof_bezier(&self, e: usize) -> &[usize] {
        &self.edof_bezier[e * self.row_len..(e + 1) * self.row_len]
    }

    /// Control-point indices of element `e` (the first DOF block).
    pub fn points(&self, e: usize) -> &[usize] {
        let n = self.row_len / self.dim();
        &self.edof(e)[..n]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row and column index vectors for coordinate-format assembly: element
    /// by element, local column outer, local row inner, so that the local
    /// matrix flattened column-major lines up with them.
    pub fn triplets(&self) -> (Vec<usize>, Vec<usize>) {
        let n = self.row_len;
        let total = n * n * self.n_elems();
        let mut rows = Vec::with_capacity(total);
        let mut cols = Vec::with_capacity(total);
        for e in 0..self.n_elems() {
            let dofs = self.edof(e);
            for &c in dofs {
                for &r in dofs {
                    rows.push(r);
                    cols.push(c);
                }
            }
        }
        (rows, cols)
    }
}

/// Fixed DOFs and nodal loads of one load case (0-based DOF indices).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCase {
    pub name: String,
    fixed_dofs: Vec<usize>,
    load: Vec<(usize, f64)>,
}

impl BoundaryCase {
    /// Validated boundary case. Fixed DOFs are sorted and deduplicated;
    /// repeated load indices are summed.
    pub fn new(
        mesh: &IgaMesh,
        name: impl Into<String>,
        fixed_dofs: impl IntoIterator<Item = usize>,
        load: impl IntoIterator<Item = (usize, f64)>,
    ) -> Result<Self> {
        let n = mesh.n_dofs();
        let mut fixed: Vec<usize> = fixed_dofs.into_iter().collect();
        fixed.sort_unstable();
        fixed.dedup();
        if fixed.is_empty() {
            return Err(IgaError::invalid(
                "boundary case needs at least one fixed DOF",
            ));
        }
        if let Some(&bad) = fixed.iter().find(|&&d| d >= n) {
            return Err(IgaError::invalid(format!(
                "fixed DOF {} outside [1, {n}]",
                bad + 1
            )));
        }
        let mut merged: Vec<(usize, f64)> = Vec::new();
        for (d, v) in load {
            if d >= n {
                return Err(IgaError::invalid(format!(
                    "load DOF {} outside [1, {n}]",
                    d + 1
                )));
            }
            if !v.is_finite() {
                return Err(IgaError::invalid(format!(
                    "load value at DOF {} is not finite",
                    d + 1
                )));
            }
            match merged.iter_mut().find(|(k, _)| *k == d) {
                Some(slot) => slot.1 += v,
                None => merged.push((d, v)),
            }
        }
        merged.sort_by_key(|&(d, _)| d);
        if merged.iter().all(|&(_, v)| v == 0.0) {
            return Err(IgaError::invalid("boundary case needs a nonzero load"));
        }
        Ok(BoundaryCase {
            name: name.into(),
            fixed_dofs: fixed,
            load: merged,
        })
    }

    /// Same as [`BoundaryCase::new`] with 1-based DOF numbers.
    pub fn from_one_based(
        mesh: &IgaMesh,
        name: impl Into<String>,
        fixed_dofs: &[usize],
        load: &[(usize, f64)],
    ) -> Result<Self> {
        let to0 = |d: usize| {
            d.checked_sub(1)
                .ok_or_else(|| IgaError::invalid("DOF numbers are 1-based; 0 is not a valid DOF"))
        };
        let fixed = fixed_dofs
            .iter()
            .map(|&d| to0(d))
            .collect::<Result<Vec<_>>>()?;
        let load = load
            .iter()
            .map(|&(d, v)| Ok((to0(d)?, v)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(mesh, name, fixed, load)
    }

    pub fn fixed_dofs(&self) -> &[usize] {
        &self.fixed_dofs
    }

    pub fn load(&self) -> &[(usize, f64)] {
        &self.load
    }

    /// Dense load vector of length `n_dofs`.
    pub fn load_vector(&self, n_dofs: usize) -> Vec<f64> {
        let mut f = vec![0.0; n_dofs];
        for &(d, v) in &self.load {
            f[d] += v;
        }
        f
    }

    /// `true` for every fixed DOF.
    pub fn fixed_mask(&self, n_dofs: usize) -> Vec<bool> {
        let mut m = vec![false; n_dofs];
        for &d in &self.fixed_dofs {
            m[d] = true;
        }
        m
    }
}

/// Half MBB beam: rollers along the left edge (x-DOFs), vertical support at
/// the bottom-right corner, unit downward load at the top-left corner.
pub fn boundary_half_mbb(mesh: &IgaMesh) -> Result<BoundaryCase> {
    if mesh.dim() != 2 {
        return Err(IgaError::invalid("the half-MBB case is two-dimensional"));
    }
    let n_pts = mesh.n_ctrl_pts();
    let px = mesh.n_pts(0);
    let py = mesh.n_pts(1);
    let load_dof = n_pts + px * (py - 1);
    let fixed = (0..n_pts)
        .step_by(px)
        .chain(std::iter::once(n_pts + px - 1));
    BoundaryCase::new(mesh, "mbb2d", fixed, [(load_dof, -1.0)])
}

/// 3D cantilever: the `x = 0` face is clamped, a unit load is spread over the
/// four control points nearest the centre of the opposite face and applied
/// on the third DOF block.
pub fn boundary_cantilever_3d(mesh: &IgaMesh) -> Result<BoundaryCase> {
    if mesh.dim() != 3 {
        return Err(IgaError::invalid(
            "the cantilever case is three-dimensional",
        ));
    }
    let n_pts = mesh.n_ctrl_pts();
    let px = mesh.n_pts(0);
    let pxy = px * mesh.n_pts(1);
    let hy = mesh.n_pts(1) / 2;
    let hz = mesh.n_pts(2) / 2;
    // 1-based point numbers px·y' + px·py·z', i.e. the last point of row y'-1
    // in layer z'.
    let one_based = [
        px * hy + pxy * hz,
        px * hy + pxy * (hz + 1),
        px * (hy + 1) + pxy * hz,
        px * (hy + 1) + pxy * (hz + 1),
    ];
    let share = -1.0 / one_based.len() as f64;
    let load: Vec<(usize, f64)> = one_based
        .iter()
        .map(|&p| (p - 1 + 2 * n_pts, share))
        .collect();
    let fixed = (0..mesh.n_dofs()).step_by(px);
    BoundaryCase::new(mesh, "cantilever3d", fixed, load)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::{BTreeSet, HashMap};

    #[test]
    fn mesh_counts() {
        let m = IgaMesh::new_2d(4, 2).unwrap();
        assert_eq!((m.n_pts(0), m.n_pts(1)), (6, 4));
        assert_eq!(m.n_ctrl_pts(), 24);
        assert_eq!(m.n_elems(), 8);
        assert_eq!(m.n_dofs(), 48);
        assert_eq!(m.nelz(), None);

        let one = IgaMesh::new_2d(1, 1).unwrap();
        assert_eq!((one.n_ctrl_pts(), one.n_ctrl_pts_bezier()), (9, 9));

        let m3 = IgaMesh::new_3d(40, 20, 20).unwrap();
        assert_eq!(m3.n_ctrl_pts(), 42 * 22 * 22);
        assert_eq!(m3.n_ctrl_pts(), 20328);
        assert_eq!(m3.n_dofs(), 60984);
        assert_eq!(m3.n_ctrl_pts_bezier(), 81 * 41 * 41);

        assert!(IgaMesh::new_2d(0, 3).is_err());
        assert!(IgaMesh::new(4, &[1, 1, 1, 1]).is_err());
        assert!(IgaMesh::new(3, &[1, 1]).is_err());
    }

    #[test]
    fn connectivity_examples() {
        let m = IgaMesh::new_2d(4, 2).unwrap();
        let c = ConnectivityTables::new(&m);
        let one_based: Vec<usize> = c.points(0).iter().map(|p| p + 1).collect();
        assert_eq!(one_based, vec![1, 2, 3, 7, 8, 9, 13, 14, 15]);
        assert_eq!(
            &c.edof(0)[9..],
            c.points(0)
                .iter()
                .map(|p| p + 24)
                .collect::<Vec<_>>()
                .as_slice()
        );
        let a: BTreeSet<_> = c.points(0).iter().collect();
        let b: BTreeSet<_> = c.points(1).iter().collect();
        assert_eq!(a.intersection(&b).count(), 6);
        let (rows, cols) = c.triplets();
        assert_eq!(rows.len(), 324 * m.n_elems());
        assert_eq!(cols.len(), 324 * m.n_elems());
        assert_eq!((rows[1], cols[1]), (c.edof(0)[1], c.edof(0)[0]));

        // Bézier windows: element 2 (i = 1) starts at Bézier column 2.
        let bez: Vec<usize> = c.edof_bezier(1)[..9].to_vec();
        assert_eq!(bez, vec![2, 3, 4, 11, 12, 13, 20, 21, 22]);
    }

    #[test]
    fn connectivity_3d_layout() {
        let m = IgaMesh::new_3d(2, 3, 2).unwrap();
        let c = ConnectivityTables::new(&m);
        assert_eq!(c.row_len(), 81);
        let e = m.element_index(1, 2, 1);
        let pts = c.points(e);
        assert_eq!(pts[0], m.point_index(1, 2, 1));
        assert_eq!(pts[26], m.point_index(3, 4, 3));
        assert_eq!(c.edof(e)[27 + 5], pts[5] + m.n_ctrl_pts());
        assert_eq!(c.edof(e)[54 + 5], pts[5] + 2 * m.n_ctrl_pts());
    }

    fn check_windows(m: &IgaMesh) {
        let c = ConnectivityTables::new(m);
        let n_dofs = m.n_dofs();
        for e in 0..m.n_elems() {
            let row = c.edof(e);
            let set: BTreeSet<_> = row.iter().collect();
            assert_eq!(set.len(), row.len());
            assert!(row.iter().all(|&d| d < n_dofs));
            let [i, j, k] = m.element_coords(e);
            for (n, &p) in c.points(e).iter().enumerate() {
                let [x, y, z] = m.point_coords(p);
                assert_eq!(x, i + n % 3);
                assert_eq!(y, j + (n / 3) % 3);
                assert_eq!(z, k + n / 9);
            }
        }
        // Bézier tiling: every Bézier point used, interfaces shared by 2/4/8.
        let mut count: HashMap<usize, usize> = HashMap::new();
        for e in 0..m.n_elems() {
            for &p in &c.edof_bezier(e)[..c.row_len() / m.dim()] {
                *count.entry(p).or_default() += 1;
            }
        }
        assert_eq!(count.len(), m.n_ctrl_pts_bezier());
        for (&p, &n) in &count {
            let bx = m.n_pts_bezier(0);
            let by = m.n_pts_bezier(1);
            let coords = [p % bx, (p / bx) % by, p / (bx * by)];
            let mut expected = 1;
            for d in 0..m.dim() {
                let v = coords[d];
                if v % 2 == 0 && v != 0 && v != m.n_pts_bezier(d) - 1 {
                    expected *= 2;
                }
            }
            assert_eq!(n, expected, "point {p}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn windows_2d(nx in 1usize..=8, ny in 1usize..=8) {
            check_windows(&IgaMesh::new_2d(nx, ny).unwrap());
        }

        #[test]
        fn windows_3d(nx in 1usize..=5, ny in 1usize..=5, nz in 1usize..=5) {
            check_windows(&IgaMesh::new_3d(nx, ny, nz).unwrap());
        }
    }

    #[test]
    fn adjacent_elements_share_dofs() {
        let m = IgaMesh::new_3d(3, 3, 3).unwrap();
        let c = ConnectivityTables::new(&m);
        let shared = |a: usize, b: usize| {
            let s: BTreeSet<_> = c.edof(a).iter().collect();
            c.edof(b).iter().filter(|d| s.contains(d)).count()
        };
        // Face neighbours along x share a 2 × 3 × 3 block of points.
        assert_eq!(shared(0, 1), 18 * 3);
        let m2 = IgaMesh::new_2d(3, 3).unwrap();
        let c2 = ConnectivityTables::new(&m2);
        let s: BTreeSet<_> = c2.edof(0).iter().collect();
        assert_eq!(c2.edof(3).iter().filter(|d| s.contains(d)).count(), 12);
    }

    #[test]
    fn half_mbb_on_coarse_mesh() {
        let m = IgaMesh::new_2d(4, 2).unwrap();
        let bc = boundary_half_mbb(&m).unwrap();
        assert_eq!(bc.load(), &[(42, -1.0)]); // 1-based 43
        let fixed: Vec<usize> = bc.fixed_dofs().iter().map(|d| d + 1).collect();
        assert_eq!(fixed, vec![1, 7, 13, 19, 30]);
        assert!(boundary_half_mbb(&IgaMesh::new_3d(2, 2, 2).unwrap()).is_err());
        for (nx, ny) in [(1, 1), (6, 3), (60, 20)] {
            let m = IgaMesh::new_2d(nx, ny).unwrap();
            assert_eq!(
                boundary_half_mbb(&m).unwrap().fixed_dofs().len(),
                m.n_pts(1) + 1
            );
        }
    }

    #[test]
    fn cantilever_case() {
        let m = IgaMesh::new_3d(40, 20, 20).unwrap();
        let bc = boundary_cantilever_3d(&m).unwrap();
        assert_eq!(bc.fixed_dofs().len(), 1452);
        assert_eq!(bc.load().len(), 4);
        assert!(bc.load().iter().all(|&(_, v)| v == -0.25));
        for &(d, _) in bc.load() {
            assert!(d >= 2 * m.n_ctrl_pts() && d < m.n_dofs());
            let [x, _, _] = m.point_coords(d - 2 * m.n_ctrl_pts());
            assert_eq!(x, m.n_pts(0) - 1);
        }
        // First load point, 1-based: 42·11 + 924·11 = 10626.
        assert_eq!(bc.load()[0].0 - 2 * m.n_ctrl_pts() + 1, 10626);
        for &d in bc.fixed_dofs() {
            assert_eq!(m.point_coords(d % m.n_ctrl_pts())[0], 0);
        }
        let small = IgaMesh::new_3d(2, 3, 4).unwrap();
        let bc = boundary_cantilever_3d(&small).unwrap();
        assert_eq!(bc.fixed_dofs().len(), 3 * small.n_pts(1) * small.n_pts(2));
        assert!(boundary_cantilever_3d(&IgaMesh::new_2d(2, 2).unwrap()).is_err());
    }

    #[test]
    fn custom_case_validation() {
        let m = IgaMesh::new_2d(2, 2).unwrap();
        assert!(BoundaryCase::from_one_based(&m, "x", &[], &[(1, 1.0)]).is_err());
        assert!(BoundaryCase::from_one_based(&m, "x", &[1], &[(1, 0.0)]).is_err());
        assert!(BoundaryCase::from_one_based(&m, "x", &[0], &[(1, 1.0)]).is_err());
        assert!(BoundaryCase::from_one_based(&m, "x", &[33], &[(1, 1.0)]).is_err());
        let bc = BoundaryCase::from_one_based(&m, "x", &[3, 1, 3], &[(5, 1.0), (5, 0.5)]).unwrap();
        assert_eq!(bc.fixed_dofs(), &[0, 2]);
        assert_eq!(bc.load(), &[(4, 1.5)]);
    }
}
