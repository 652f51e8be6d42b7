//! SIMP compliance minimization: material law, objective and sensitivities,
//! sensitivity filter, optimality-criteria update and the outer loop.

mod filter;
mod oc;

pub use filter::{build_filter, FilterOperator, FILTER_FLOOR};
pub use oc::{oc_update, OcMode, OcParameters, OcUpdate};

use crate::assembly::StaticProblem;
use crate::element::{BezierStiffness, ConstitutiveModel};
use crate::error::{IgaError, Result};
use crate::mesh::{BoundaryCase, ConnectivityTables, IgaMesh};

/// `E(x) = Emin + x^p (E0 − Emin)`.
pub fn simp_modulus(x: f64, penal: f64, e0: f64, emin: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(IgaError::Domain {
            name: "density",
            value: x,
            range: "[0, 1]",
        });
    }
    Ok(emin + x.powf(penal) * (e0 - emin))
}

/// Element densities on a structured mesh, x-fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    dims: Vec<usize>,
    values: Vec<f64>,
}

impl DensityField {
    pub fn new(dims: &[usize], values: Vec<f64>) -> Result<Self> {
        if !(dims.len() == 2 || dims.len() == 3) || dims.contains(&0) {
            return Err(IgaError::invalid(format!(
                "invalid field dimensions {dims:?}"
            )));
        }
        let n: usize = dims.iter().product();
        if values.len() != n {
            return Err(IgaError::DimensionMismatch {
                what: "density values",
                expected: n,
                found: values.len(),
            });
        }
        if let Some(&v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(IgaError::Domain {
                name: "density",
                value: v,
                range: "[0, 1]",
            });
        }
        Ok(DensityField {
            dims: dims.to_vec(),
            values,
        })
    }

    pub fn uniform(dims: &[usize], value: f64) -> Result<Self> {
        Self::new(dims, vec![value; dims.iter().product()])
    }

    /// `(nelx, nely)` or `(nelx, nely, nelz)`.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[i + self.dims[0] * (j + self.dims[1] * k)]
    }

    pub fn mean(&self) -> f64 {
        mean(&self.values)
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Objective and sensitivities at one design.
#[derive(Debug, Clone, PartialEq)]
pub struct Compliance {
    pub c: f64,
    /// `∂c/∂x_e`, never positive.
    pub dc: Vec<f64>,
    /// Unit-modulus element strain energies `u_B,eᵀ K⁰ u_B,e`.
    pub ce: Vec<f64>,
}

/// Compliance and its density gradient from the Bézier displacements
/// `u_b`, gathered element by element through the Bézier connectivity.
pub fn compliance_and_sensitivity(
    u_b: &[f64],
    conn: &ConnectivityTables,
    k0: &BezierStiffness,
    x: &[f64],
    penal: f64,
    e0: f64,
    emin: f64,
) -> Result<Compliance> {
    if x.len() != conn.n_elems() {
        return Err(IgaError::DimensionMismatch {
            what: "densities",
            expected: conn.n_elems(),
            found: x.len(),
        });
    }
    if k0.n_dofs() != conn.row_len() {
        return Err(IgaError::DimensionMismatch {
            what: "Bezier element stiffness",
            expected: conn.row_len(),
            found: k0.n_dofs(),
        });
    }
    let mut ue = vec![0.0; conn.row_len()];
    let mut ce = Vec::with_capacity(x.len());
    for e in 0..conn.n_elems() {
        for (slot, &d) in ue.iter_mut().zip(conn.edof_bezier(e)) {
            *slot = *u_b.get(d).ok_or_else(|| {
                IgaError::invalid(format!(
                    "Bezier displacement vector too short for DOF {}",
                    d + 1
                ))
            })?;
        }
        ce.push(k0.energy(&ue));
    }
    let mut c = 0.0;
    let mut dc = Vec::with_capacity(x.len());
    for (&xe, &cee) in x.iter().zip(&ce) {
        c += simp_modulus(xe, penal, e0, emin)? * cee;
        dc.push(-penal * xe.powf(penal - 1.0) * (e0 - emin) * cee);
    }
    Ok(Compliance { c, dc, ce })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationConfig {
    pub mesh: IgaMesh,
    pub volfrac: f64,
    pub penal: f64,
    pub rmin: f64,
    pub oc: OcParameters,
    /// Stop once `max |x_new − x|` is at most this.
    pub change_tol: f64,
    /// `γ` in the filter denominator `max(γ, x_e)`.
    pub filter_floor: f64,
    pub max_iter: usize,
}

impl OptimizationConfig {
    pub fn new(mesh: IgaMesh, volfrac: f64, penal: f64, rmin: f64) -> Self {
        OptimizationConfig {
            mesh,
            volfrac,
            penal,
            rmin,
            oc: OcParameters::default(),
            change_tol: 0.01,
            filter_floor: FILTER_FLOOR,
            max_iter: 1000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.volfrac > 0.0 && self.volfrac <= 1.0) {
            return Err(IgaError::Domain {
                name: "volfrac",
                value: self.volfrac,
                range: "(0, 1]",
            });
        }
        for (name, v) in [
            ("penal", self.penal),
            ("rmin", self.rmin),
            ("change tolerance", self.change_tol),
            ("filter floor", self.filter_floor),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(IgaError::Domain {
                    name,
                    value: v,
                    range: "(0, inf)",
                });
            }
        }
        if self.max_iter == 0 {
            return Err(IgaError::invalid("the iteration cap must be at least 1"));
        }
        self.oc.validate()
    }
}

/// One pass of the outer loop.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Compliance of the design entering this iteration.
    pub compliance: f64,
    /// Mean density after the update.
    pub volume: f64,
    /// `max |x_new − x|`.
    pub change: f64,
    /// Relative residual of the linear solve.
    pub residual: f64,
    /// `|c − fᵀu| / |fᵀu|`.
    pub work_gap: f64,
    pub lambda: f64,
    pub oc_mode: OcMode,
    pub clamped_sensitivities: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub density: DensityField,
    pub records: Vec<IterationRecord>,
    pub converged: bool,
}

impl OptimizationResult {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn compliance_history(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.compliance).collect()
    }

    pub fn change_history(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.change).collect()
    }

    /// Compliance reported by the last iteration.
    pub fn final_compliance(&self) -> Option<f64> {
        self.records.last().map(|r| r.compliance)
    }
}

/// Runs the optimization from the uniform design `x ≡ volfrac`, calling
/// `observer` after every iteration. Hitting the iteration cap is reported
/// through `converged = false`.
pub fn run_optimization(
    config: &OptimizationConfig,
    material: &ConstitutiveModel,
    boundary: BoundaryCase,
    mut observer: impl FnMut(&IterationRecord),
) -> Result<OptimizationResult> {
    config.validate()?;
    material.validate()?;
    if material.dim != config.mesh.dim() {
        return Err(IgaError::DimensionMismatch {
            what: "material dimension",
            expected: config.mesh.dim(),
            found: material.dim,
        });
    }
    let k0 = material.bezier_stiffness()?;
    let problem = StaticProblem::new(config.mesh.clone(), &k0, boundary)?;
    let filter = build_filter(&config.mesh, config.rmin)?;
    let n = config.mesh.n_elems();
    let dv = vec![1.0; n];
    let mut x = vec![config.volfrac; n];
    let mut records = Vec::new();
    let mut converged = false;

    for iteration in 1..=config.max_iter {
        let moduli = x
            .iter()
            .map(|&xe| simp_modulus(xe, config.penal, material.e0, material.emin))
            .collect::<Result<Vec<_>>>()?;
        let solution = problem.solve(&moduli)?;
        let u_b = problem.bezier_displacements(&solution.u)?;
        let obj = compliance_and_sensitivity(
            &u_b,
            problem.connectivity(),
            &k0,
            &x,
            config.penal,
            material.e0,
            material.emin,
        )?;
        let work: f64 = problem
            .load()
            .iter()
            .zip(&solution.u)
            .map(|(f, u)| f * u)
            .sum();
        let dc = filter.filter_sensitivity(&x, &obj.dc, config.filter_floor)?;
        let update = oc_update(&x, &dc, &dv, config.volfrac, &config.oc)?;
        let change = update
            .x
            .iter()
            .zip(&x)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        x = update.x;
        let record = IterationRecord {
            iteration,
            compliance: obj.c,
            volume: mean(&x),
            change,
            residual: solution.residual,
            work_gap: if work != 0.0 {
                (obj.c - work).abs() / work.abs()
            } else {
                obj.c.abs()
            },
            lambda: update.lambda,
            oc_mode: update.mode,
            clamped_sensitivities: update.clamped,
        };
        observer(&record);
        records.push(record);
        if change <= config.change_tol {
            converged = true;
            break;
        }
    }
    Ok(OptimizationResult {
        density: DensityField::new(&dims_of(&config.mesh), x)?,
        records,
        converged,
    })
}

fn dims_of(mesh: &IgaMesh) -> Vec<usize> {
    mesh.elements_per_dir().to_vec()
}

#[cfg(test)]
mod tests;
