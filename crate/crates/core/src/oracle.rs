//! Reference computations that bypass Bézier extraction: the global
//! stiffness is integrated directly from B-spline basis functions evaluated
//! by the Cox–de Boor recursion, and solved with a dense Cholesky.
//! Intended for verification on small meshes.

use nalgebra::{DMatrix, DVector};

use crate::error::{IgaError, Result};
use crate::mesh::IgaMesh;

/// `{0, 0, 0, 1, …, n, n, n}`.
fn knots(n_el: usize) -> Vec<f64> {
    let mut k = vec![0.0, 0.0];
    k.extend((0..=n_el).map(|i| i as f64));
    k.extend([n_el as f64; 2]);
    k
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// `N_{i,p}(x)` by the plain recursive definition. The last span is closed
/// on the right so the end of the parameter range is covered.
fn cox_de_boor(k: &[f64], i: usize, p: usize, x: f64) -> f64 {
    if p == 0 {
        let last = k[k.len() - 1];
        let inside =
            (k[i] <= x && x < k[i + 1]) || (x == last && k[i] < k[i + 1] && k[i + 1] == last);
        return if inside { 1.0 } else { 0.0 };
    }
    ratio(x - k[i], k[i + p] - k[i]) * cox_de_boor(k, i, p - 1, x)
        + ratio(k[i + p + 1] - x, k[i + p + 1] - k[i + 1]) * cox_de_boor(k, i + 1, p - 1, x)
}

fn cox_de_boor_derivative(k: &[f64], i: usize, p: usize, x: f64) -> f64 {
    let pf = p as f64;
    ratio(pf, k[i + p] - k[i]) * cox_de_boor(k, i, p - 1, x)
        - ratio(pf, k[i + p + 1] - k[i + 1]) * cox_de_boor(k, i + 1, p - 1, x)
}

/// All `n_el + 2` quadratic basis values and derivatives at `x`.
pub fn basis_all(n_el: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
    let k = knots(n_el);
    let n = n_el + 2;
    (
        (0..n).map(|i| cox_de_boor(&k, i, 2, x)).collect(),
        (0..n)
            .map(|i| cox_de_boor_derivative(&k, i, 2, x))
            .collect(),
    )
}

fn gauss_points() -> [(f64, f64); 3] {
    let a = (0.6f64).sqrt() / 2.0;
    [
        (0.5 - a, 5.0 / 18.0),
        (0.5, 8.0 / 18.0),
        (0.5 + a, 5.0 / 18.0),
    ]
}

/// Dense global stiffness `Σ_e E_e ∫_e Bᵀ D B` for constitutive matrix `d`
/// (Voigt order xx, yy, xy in 2D and xx, yy, zz, xy, yz, zx in 3D).
pub fn global_stiffness(mesh: &IgaMesh, d: &DMatrix<f64>, moduli: &[f64]) -> Result<DMatrix<f64>> {
    let dim = mesh.dim();
    let nv = if dim == 2 { 3 } else { 6 };
    if d.shape() != (nv, nv) {
        return Err(IgaError::DimensionMismatch {
            what: "constitutive matrix",
            expected: nv,
            found: d.nrows(),
        });
    }
    if moduli.len() != mesh.n_elems() {
        return Err(IgaError::DimensionMismatch {
            what: "element moduli",
            expected: mesh.n_elems(),
            found: moduli.len(),
        });
    }
    let n_pts = mesh.n_ctrl_pts();
    let nel = [mesh.nelx(), mesh.nely(), mesh.nelz().unwrap_or(1)];
    let gp = gauss_points();
    let z_rule: Vec<(f64, f64)> = if dim == 3 {
        gp.to_vec()
    } else {
        vec![(0.0, 1.0)]
    };
    let mut k = DMatrix::zeros(mesh.n_dofs(), mesh.n_dofs());
    for e in 0..mesh.n_elems() {
        let [i, j, l] = mesh.element_coords(e);
        for &(gz, wz) in &z_rule {
            let (nz, dz) = if dim == 3 {
                basis_all(nel[2], l as f64 + gz)
            } else {
                (vec![1.0], vec![0.0])
            };
            for &(gy, wy) in &gp {
                let (ny, dy) = basis_all(nel[1], j as f64 + gy);
                for &(gx, wx) in &gp {
                    let (nx, dx) = basis_all(nel[0], i as f64 + gx);
                    // Strain rows over all DOFs; only the support is nonzero.
                    let mut b = DMatrix::zeros(nv, mesh.n_dofs());
                    for (c, (&vz, &gz_)) in nz.iter().zip(&dz).enumerate() {
                        for (bb, (&vy, &gy_)) in ny.iter().zip(&dy).enumerate() {
                            for (a, (&vx, &gx_)) in nx.iter().zip(&dx).enumerate() {
                                let g = [gx_ * vy * vz, vx * gy_ * vz, vx * vy * gz_];
                                if g == [0.0; 3] {
                                    continue;
                                }
                                let p = mesh.point_index(a, bb, c);
                                let ux = p;
                                let uy = n_pts + p;
                                if dim == 2 {
                                    b[(0, ux)] += g[0];
                                    b[(1, uy)] += g[1];
                                    b[(2, ux)] += g[1];
                                    b[(2, uy)] += g[0];
                                } else {
                                    let uz = 2 * n_pts + p;
                                    b[(0, ux)] += g[0];
                                    b[(1, uy)] += g[1];
                                    b[(2, uz)] += g[2];
                                    b[(3, ux)] += g[1];
                                    b[(3, uy)] += g[0];
                                    b[(4, uy)] += g[2];
                                    b[(4, uz)] += g[1];
                                    b[(5, ux)] += g[2];
                                    b[(5, uz)] += g[0];
                                }
                            }
                        }
                    }
                    let w = wx * wy * wz * moduli[e];
                    k += b.transpose() * d * &b * w;
                }
            }
        }
    }
    Ok(k)
}

/// Dense solve of `K U = F` with `U = 0` on `fixed`.
pub fn dense_solve(k: &DMatrix<f64>, f: &[f64], fixed: &[usize]) -> Result<Vec<f64>> {
    let n = k.nrows();
    let mut keep = vec![true; n];
    for &d in fixed {
        keep[d] = false;
    }
    let free: Vec<usize> = (0..n).filter(|&d| keep[d]).collect();
    let kff = DMatrix::from_fn(free.len(), free.len(), |r, c| k[(free[r], free[c])]);
    let ff = DVector::from_iterator(free.len(), free.iter().map(|&d| f[d]));
    let chol = kff.cholesky().ok_or(IgaError::NotPositiveDefinite {
        free: free.len(),
        total: n,
        detail: "dense Cholesky failed".into(),
    })?;
    let uf = chol.solve(&ff);
    let mut u = vec![0.0; n];
    for (&d, &v) in free.iter().zip(uf.iter()) {
        u[d] = v;
    }
    Ok(u)
}
