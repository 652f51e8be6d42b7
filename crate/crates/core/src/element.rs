//! Standard Bézier element stiffness and the extraction-based B-spline
//! element stiffness `K_e = E_e · C_e K⁰ C_eᵀ`.

use nalgebra::{DMatrix, Matrix3};

use crate::error::{IgaError, Result};
use crate::splines::{bernstein_basis, bernstein_derivatives};

/// Three-point Gauss–Legendre rule on `[0, 1]`, exact up to degree 5.
pub const GAUSS_3: [(f64, f64); 3] = [
    (0.112_701_665_379_258_31, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];

/// Convention for the shear terms of the 3D constitutive matrix.
///
/// With `E' = E / ((1+ν)(1-2ν))`, `Isotropic` uses `(1-2ν)/2 · E'` (shear
/// modulus `E / (2(1+ν))`). `Reference` uses `(1-2ν) · E'` and reproduces the
/// published integer tables of the 27-point element, including the
/// `5400 (1+ν)(1-2ν)` scaling. Plane stress in 2D is unaffected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShearModulus {
    Isotropic,
    #[default]
    Reference,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstitutiveModel {
    pub e0: f64,
    pub emin: f64,
    pub nu: f64,
    pub dim: usize,
    pub shear: ShearModulus,
}

impl ConstitutiveModel {
    pub fn new(dim: usize) -> Self {
        ConstitutiveModel {
            e0: 1.0,
            emin: 1e-3,
            nu: 0.3,
            dim,
            shear: ShearModulus::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 2 && self.dim != 3 {
            return Err(IgaError::invalid(format!(
                "dimension must be 2 or 3, got {}",
                self.dim
            )));
        }
        if !(self.emin > 0.0 && self.emin < self.e0 && self.e0.is_finite()) {
            return Err(IgaError::invalid(format!(
                "moduli must satisfy 0 < Emin < E0, got Emin = {}, E0 = {}",
                self.emin, self.e0
            )));
        }
        if !(self.nu > -1.0 && self.nu < 0.5) {
            return Err(IgaError::Domain {
                name: "nu",
                value: self.nu,
                range: "(-1, 0.5)",
            });
        }
        Ok(())
    }

    /// Unit-modulus Bézier stiffness for this model.
    pub fn bezier_stiffness(&self) -> Result<BezierStiffness> {
        self.validate()?;
        match self.dim {
            2 => bezier_stiffness_2d(self.nu),
            _ => bezier_stiffness_3d(self.nu, self.shear),
        }
    }
}

/// Plane-stress constitutive matrix for unit Young's modulus, Voigt order
/// `(xx, yy, xy)`.
pub fn plane_stress_matrix(nu: f64) -> Result<DMatrix<f64>> {
    let denom = 1.0 - nu * nu;
    if !nu.is_finite() || denom < 1e-8 {
        return Err(IgaError::IllConditioned { nu });
    }
    let s = 1.0 / denom;
    Ok(DMatrix::from_row_slice(
        3,
        3,
        &[
            s,
            s * nu,
            0.0,
            s * nu,
            s,
            0.0,
            0.0,
            0.0,
            s * (1.0 - nu) / 2.0,
        ],
    ))
}

/// 3D constitutive matrix for unit Young's modulus, Voigt order
/// `(xx, yy, zz, xy, yz, zx)`.
pub fn solid_matrix(nu: f64, shear: ShearModulus) -> Result<DMatrix<f64>> {
    let denom = (1.0 + nu) * (1.0 - 2.0 * nu);
    if !nu.is_finite() || nu >= 0.5 || nu <= -1.0 || denom.abs() < 1e-10 {
        return Err(IgaError::IllConditioned { nu });
    }
    let ep = 1.0 / denom;
    let g = match shear {
        ShearModulus::Isotropic => (1.0 - 2.0 * nu) / 2.0,
        ShearModulus::Reference => 1.0 - 2.0 * nu,
    };
    let mut d = DMatrix::zeros(6, 6);
    for i in 0..3 {
        for j in 0..3 {
            d[(i, j)] = if i == j { (1.0 - nu) * ep } else { nu * ep };
        }
        d[(3 + i, 3 + i)] = g * ep;
    }
    Ok(d)
}

/// Solid stiffness of the unit Bernstein element (9 × 2 or 27 × 3 DOFs).
#[derive(Debug, Clone, PartialEq)]
pub struct BezierStiffness {
    dim: usize,
    matrix: DMatrix<f64>,
}

impl BezierStiffness {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Control points per element, `3^dim`.
    pub fn n_points(&self) -> usize {
        3usize.pow(self.dim as u32)
    }

    pub fn n_dofs(&self) -> usize {
        self.matrix.nrows()
    }

    /// Element strain energy `vᵀ K⁰ v` for a Bézier displacement vector.
    pub fn energy(&self, v: &[f64]) -> f64 {
        let n = self.n_dofs();
        debug_assert_eq!(v.len(), n);
        let mut total = 0.0;
        for j in 0..n {
            let col = self.matrix.column(j);
            let kv: f64 = col.iter().zip(v).map(|(a, b)| a * b).sum();
            total += v[j] * kv;
        }
        total
    }
}

/// Strain-displacement rows for one integration point. `grads[n][d]` is the
/// derivative of shape function `n` along axis `d`; DOF blocks are
/// component-major (all x, then all y, then all z).
fn strain_displacement(dim: usize, grads: &[[f64; 3]]) -> DMatrix<f64> {
    let n = grads.len();
    let nvoigt = if dim == 2 { 3 } else { 6 };
    let mut b = DMatrix::zeros(nvoigt, dim * n);
    for (k, g) in grads.iter().enumerate() {
        for d in 0..dim {
            b[(d, d * n + k)] = g[d];
        }
        if dim == 2 {
            b[(2, k)] = g[1];
            b[(2, n + k)] = g[0];
        } else {
            // xy, yz, zx
            b[(3, k)] = g[1];
            b[(3, n + k)] = g[0];
            b[(4, n + k)] = g[2];
            b[(4, 2 * n + k)] = g[1];
            b[(5, k)] = g[2];
            b[(5, 2 * n + k)] = g[0];
        }
    }
    b
}

/// `∫ Bᵀ D B` over the unit square/cube with tensor-product Bernstein
/// shape functions, node index x-fastest.
fn bernstein_stiffness(dim: usize, d: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let npts = 3usize.pow(dim as u32);
    let mut k = DMatrix::zeros(dim * npts, dim * npts);
    let zs: &[(f64, f64)] = if dim == 3 { &GAUSS_3 } else { &[(0.0, 1.0)] };
    for &(z, wz) in zs {
        let (bz, dbz) = if dim == 3 {
            (bernstein_basis(2, z)?, bernstein_derivatives(2, z)?)
        } else {
            (vec![1.0], vec![0.0])
        };
        for &(y, wy) in &GAUSS_3 {
            let by = bernstein_basis(2, y)?;
            let dby = bernstein_derivatives(2, y)?;
            for &(x, wx) in &GAUSS_3 {
                let bx = bernstein_basis(2, x)?;
                let dbx = bernstein_derivatives(2, x)?;
                let mut grads = Vec::with_capacity(npts);
                for c in 0..bz.len() {
                    for b in 0..3 {
                        for a in 0..3 {
                            grads.push([
                                dbx[a] * by[b] * bz[c],
                                bx[a] * dby[b] * bz[c],
                                bx[a] * by[b] * dbz[c],
                            ]);
                        }
                    }
                }
                let bmat = strain_displacement(dim, &grads);
                let w = wx * wy * wz;
                k += (bmat.transpose() * d * &bmat) * w;
            }
        }
    }
    Ok(symmetrized(k))
}

pub(crate) fn symmetrized(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}

/// Biquadratic Bézier element stiffness, plane stress, `E = 1`.
pub fn bezier_stiffness_2d(nu: f64) -> Result<BezierStiffness> {
    let d = plane_stress_matrix(nu)?;
    Ok(BezierStiffness {
        dim: 2,
        matrix: bernstein_stiffness(2, &d)?,
    })
}

/// Triquadratic Bézier element stiffness, `E = 1`.
pub fn bezier_stiffness_3d(nu: f64, shear: ShearModulus) -> Result<BezierStiffness> {
    let d = solid_matrix(nu, shear)?;
    Ok(BezierStiffness {
        dim: 3,
        matrix: bernstein_stiffness(3, &d)?,
    })
}

/// Transformation `C_e` between an element's B-spline and Bézier DOFs. Only
/// the scalar block is stored; the full matrix repeats it once per
/// displacement component.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementTransform {
    dim: usize,
    block: DMatrix<f64>,
}

impl ElementTransform {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn block(&self) -> &DMatrix<f64> {
        &self.block
    }

    /// The block-diagonal matrix acting on all `dim · 3^dim` DOFs.
    pub fn full(&self) -> DMatrix<f64> {
        let n = self.block.nrows();
        let mut m = DMatrix::zeros(self.dim * n, self.dim * n);
        for d in 0..self.dim {
            m.view_mut((d * n, d * n), (n, n)).copy_from(&self.block);
        }
        m
    }

    /// Bézier DOFs of the element from its B-spline DOFs, `C_eᵀ u_e`.
    pub fn to_bezier(&self, u: &[f64]) -> Vec<f64> {
        let n = self.block.nrows();
        let mut out = vec![0.0; self.dim * n];
        for d in 0..self.dim {
            for j in 0..n {
                let col = self.block.column(j);
                out[d * n + j] = (0..n).map(|i| col[i] * u[d * n + i]).sum();
            }
        }
        out
    }
}

fn kron3(a: &Matrix3<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, c) = b.shape();
    DMatrix::from_fn(3 * r, 3 * c, |i, j| a[(i / r, j / c)] * b[(i % r, j % c)])
}

/// `C_η ⊗ C_ξ` in 2D, `C_ζ ⊗ C_η ⊗ C_ξ` in 3D (x-fastest node ordering).
pub fn element_transform(
    ops_xi: &Matrix3<f64>,
    ops_eta: &Matrix3<f64>,
    ops_zeta: Option<&Matrix3<f64>>,
) -> ElementTransform {
    let xi = DMatrix::from_iterator(3, 3, ops_xi.iter().copied());
    let block = kron3(ops_eta, &xi);
    match ops_zeta {
        Some(z) => ElementTransform {
            dim: 3,
            block: kron3(z, &block),
        },
        None => ElementTransform { dim: 2, block },
    }
}

/// `E_e · C_e K⁰ C_eᵀ`.
pub fn element_stiffness(
    transform: &ElementTransform,
    k0: &BezierStiffness,
    modulus: f64,
) -> Result<DMatrix<f64>> {
    if transform.dim != k0.dim {
        return Err(IgaError::DimensionMismatch {
            what: "element transform",
            expected: k0.dim,
            found: transform.dim,
        });
    }
    let n = transform.block.nrows();
    let dim = k0.dim;
    let c = &transform.block;
    let ct = c.transpose();
    let mut out = DMatrix::zeros(dim * n, dim * n);
    for a in 0..dim {
        for b in 0..dim {
            let kab = k0.matrix.view((a * n, b * n), (n, n));
            let prod = c * kab * &ct;
            out.view_mut((a * n, b * n), (n, n))
                .copy_from(&(prod * modulus));
        }
    }
    Ok(out)
}
