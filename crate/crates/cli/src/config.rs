//! Run configuration and its key=value file format.

use std::path::PathBuf;

use igatopt_core::mesh::{boundary_cantilever_3d, boundary_half_mbb};
use igatopt_core::{BoundaryCase, ConstitutiveModel, IgaMesh, OptimizationConfig, ShearModulus};

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    Mbb2d,
    Cantilever3d,
    /// 1-based DOF numbers.
    Custom {
        fixed: Vec<usize>,
        load: Vec<(usize, f64)>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exports {
    pub csv: bool,
    pub pgm: bool,
    pub vtk: bool,
    /// Also write the `x > threshold` field to the VTK file.
    pub solid: bool,
    pub threshold: f64,
}

impl Default for Exports {
    fn default() -> Self {
        Exports {
            csv: false,
            pgm: false,
            vtk: false,
            solid: false,
            threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: Problem,
    /// `(nelx, nely)` or `(nelx, nely, nelz)`.
    pub dims: Vec<usize>,
    pub volfrac: f64,
    pub penal: f64,
    pub rmin: f64,
    pub e0: f64,
    pub emin: f64,
    pub nu: f64,
    pub shear: ShearModulus,
    pub max_iter: usize,
    pub out_dir: PathBuf,
    pub exports: Exports,
}

impl RunConfig {
    pub fn new(problem: Problem, dims: Vec<usize>, volfrac: f64, penal: f64, rmin: f64) -> Self {
        let defaults = ConstitutiveModel::new(dims.len());
        RunConfig {
            problem,
            dims,
            volfrac,
            penal,
            rmin,
            e0: defaults.e0,
            emin: defaults.emin,
            nu: defaults.nu,
            shear: defaults.shear,
            max_iter: 1000,
            out_dir: PathBuf::from("."),
            exports: Exports::default(),
        }
    }

    pub fn mesh(&self) -> Result<IgaMesh, CliError> {
        IgaMesh::new(self.dims.len(), &self.dims).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn material(&self) -> ConstitutiveModel {
        ConstitutiveModel {
            e0: self.e0,
            emin: self.emin,
            nu: self.nu,
            dim: self.dims.len(),
            shear: self.shear,
        }
    }

    pub fn optimization(&self) -> Result<OptimizationConfig, CliError> {
        let mut c = OptimizationConfig::new(self.mesh()?, self.volfrac, self.penal, self.rmin);
        c.max_iter = self.max_iter;
        Ok(c)
    }

    pub fn boundary(&self, mesh: &IgaMesh) -> Result<BoundaryCase, CliError> {
        let bc = match &self.problem {
            Problem::Mbb2d => boundary_half_mbb(mesh),
            Problem::Cantilever3d => boundary_cantilever_3d(mesh),
            Problem::Custom { fixed, load } => {
                BoundaryCase::from_one_based(mesh, "custom", fixed, load)
            }
        };
        bc.map_err(|e| CliError::Config(e.to_string()))
    }

    /// Checks everything that can be checked before the first solve.
    pub fn validate(&self) -> Result<(), CliError> {
        let config = |e: igatopt_core::IgaError| CliError::Config(e.to_string());
        if !(self.volfrac > 0.0 && self.volfrac <= 1.0) {
            return Err(CliError::Config(format!(
                "volfrac = {} is outside the admissible range (0, 1]",
                self.volfrac
            )));
        }
        let mesh = self.mesh()?;
        self.optimization()?.validate().map_err(config)?;
        self.material().validate().map_err(config)?;
        self.boundary(&mesh)?;
        let e = &self.exports;
        if !(0.0..=1.0).contains(&e.threshold) {
            return Err(CliError::Config(format!(
                "threshold = {} is outside [0, 1]",
                e.threshold
            )));
        }
        if self.dims.len() == 2 && (e.vtk || e.solid) {
            return Err(CliError::Config(
                "VTK export is only available for 3D runs".into(),
            ));
        }
        if self.dims.len() == 3 && (e.csv || e.pgm) {
            return Err(CliError::Config(
                "CSV and PGM export are only available for 2D runs".into(),
            ));
        }
        Ok(())
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(CliError::Config(format!(
            "{key}: expected true or false, got {other:?}"
        ))),
    }
}

fn items(value: &str) -> impl Iterator<Item = &str> {
    value.split([',', ' ', '\t']).filter(|s| !s.is_empty())
}

/// DOF list with optional `first:last` and `first:step:last` ranges.
fn parse_dofs(key: &str, value: &str) -> Result<Vec<usize>, CliError> {
    let mut out = Vec::new();
    for item in items(value) {
        let parts: Vec<usize> = item
            .split(':')
            .map(|p| parse_num(key, p))
            .collect::<Result<_, _>>()?;
        match parts[..] {
            [d] => out.push(d),
            [a, b] => out.extend(a..=b),
            [a, s, b] if s > 0 => out.extend((a..=b).step_by(s)),
            _ => return Err(CliError::Config(format!("{key}: invalid range {item:?}"))),
        }
    }
    Ok(out)
}

/// `dof:value` pairs.
fn parse_loads(key: &str, value: &str) -> Result<Vec<(usize, f64)>, CliError> {
    items(value)
        .map(|item| {
            let (d, v) = item.split_once(':').ok_or_else(|| {
                CliError::Config(format!("{key}: expected dof:value, got {item:?}"))
            })?;
            Ok((parse_num(key, d)?, parse_num(key, v)?))
        })
        .collect()
}

pub fn parse_shear(value: &str) -> Result<ShearModulus, CliError> {
    match value.trim() {
        "reference" => Ok(ShearModulus::Reference),
        "isotropic" => Ok(ShearModulus::Isotropic),
        other => Err(CliError::Config(format!(
            "shear: expected reference or isotropic, got {other:?}"
        ))),
    }
}

/// Parses a configuration file of `key = value` lines. `#` starts a comment.
///
/// Required keys: `problem` (`mbb2d`, `cantilever3d` or `custom`), `dims`,
/// `volfrac`, `penal`, `rmin`. Custom problems also need `fixed` (1-based
/// DOFs, ranges `a:b` or `a:step:b` allowed) and `load` (`dof:value` pairs).
pub fn parse_config_text(text: &str) -> Result<RunConfig, CliError> {
    let mut problem = None;
    let mut dims = None;
    let mut volfrac = None;
    let mut penal = None;
    let mut rmin = None;
    let mut fixed = None;
    let mut load = None;
    let mut rest: Vec<(String, String)> = Vec::new();

    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", n + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "problem" => problem = Some(value.to_string()),
            "dims" => {
                dims = Some(
                    items(value)
                        .map(|v| parse_num::<usize>(key, v))
                        .collect::<Result<Vec<_>, _>>()?,
                )
            }
            "volfrac" => volfrac = Some(parse_num(key, value)?),
            "penal" => penal = Some(parse_num(key, value)?),
            "rmin" => rmin = Some(parse_num(key, value)?),
            "fixed" => fixed = Some(parse_dofs(key, value)?),
            "load" => load = Some(parse_loads(key, value)?),
            "e0" | "emin" | "nu" | "shear" | "max_iter" | "out" | "csv" | "pgm" | "vtk"
            | "solid" | "threshold" => rest.push((key.to_string(), value.to_string())),
            other => {
                return Err(CliError::Config(format!(
                    "line {}: unknown key {other:?}",
                    n + 1
                )))
            }
        }
    }

    let missing = |k: &str| CliError::Config(format!("missing required key {k:?}"));
    let dims = dims.ok_or_else(|| missing("dims"))?;
    if !(dims.len() == 2 || dims.len() == 3) {
        return Err(CliError::Config(format!(
            "dims needs 2 or 3 entries, got {}",
            dims.len()
        )));
    }
    let problem = match problem.as_deref().ok_or_else(|| missing("problem"))? {
        "mbb2d" => Problem::Mbb2d,
        "cantilever3d" => Problem::Cantilever3d,
        "custom" => Problem::Custom {
            fixed: fixed.take().ok_or_else(|| missing("fixed"))?,
            load: load.take().ok_or_else(|| missing("load"))?,
        },
        other => return Err(CliError::Config(format!("unknown problem {other:?}"))),
    };
    if fixed.is_some() || load.is_some() {
        return Err(CliError::Config(
            "fixed and load are only valid with problem = custom".into(),
        ));
    }
    let mut cfg = RunConfig::new(
        problem,
        dims,
        volfrac.ok_or_else(|| missing("volfrac"))?,
        penal.ok_or_else(|| missing("penal"))?,
        rmin.ok_or_else(|| missing("rmin"))?,
    );
    for (key, value) in rest {
        match key.as_str() {
            "e0" => cfg.e0 = parse_num(&key, &value)?,
            "emin" => cfg.emin = parse_num(&key, &value)?,
            "nu" => cfg.nu = parse_num(&key, &value)?,
            "shear" => cfg.shear = parse_shear(&value)?,
            "max_iter" => cfg.max_iter = parse_num(&key, &value)?,
            "out" => cfg.out_dir = PathBuf::from(value),
            "csv" => cfg.exports.csv = parse_bool(&key, &value)?,
            "pgm" => cfg.exports.pgm = parse_bool(&key, &value)?,
            "vtk" => cfg.exports.vtk = parse_bool(&key, &value)?,
            "solid" => cfg.exports.solid = parse_bool(&key, &value)?,
            _ => cfg.exports.threshold = parse_num(&key, &value)?,
        }
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn custom_config() {
        let cfg = parse_config_text(
            "# short cantilever\nproblem = custom\ndims = 4, 2\nvolfrac = 0.4\npenal = 3\nrmin = 1.5\n\
             fixed = 1:6:19, 25:6:43\nload = 48:-1\nnu = 0.25\nshear = isotropic\ncsv = true\n",
        )
        .unwrap();
        assert_eq!(cfg.dims, vec![4, 2]);
        assert_eq!(
            cfg.problem,
            Problem::Custom {
                fixed: vec![1, 7, 13, 19, 25, 31, 37, 43],
                load: vec![(48, -1.0)],
            }
        );
        assert_eq!(cfg.nu, 0.25);
        assert_eq!(cfg.shear, ShearModulus::Isotropic);
        assert!(cfg.exports.csv);
        cfg.validate().unwrap();
    }

    #[test]
    fn config_errors() {
        let base = "problem = mbb2d\ndims = 6 2\nvolfrac = 0.5\npenal = 3\nrmin = 1.5\n";
        assert!(parse_config_text(base).unwrap().validate().is_ok());
        for bad in [
            "problem = mbb2d\nvolfrac = 0.5\npenal = 3\nrmin = 1.5\n",
            &format!("{base}colour = red\n"),
            &format!("{base}fixed = 1\n"),
            &format!("{base}csv = maybe\n"),
            "problem = custom\ndims = 2 2\nvolfrac = 0.5\npenal = 3\nrmin = 1.5\nfixed = 1\n",
            "problem = mbb2d\ndims = 6\nvolfrac = 0.5\npenal = 3\nrmin = 1.5\n",
            "problem = mbb2d\ndims = 6 2\nvolfrac 0.5\n",
        ] {
            assert!(parse_config_text(bad).is_err(), "{bad}");
        }
        let out_of_range = parse_config_text(&base.replace("0.5", "1.5")).unwrap();
        assert!(matches!(out_of_range.validate(), Err(CliError::Config(_))));
        let wrong_dim = parse_config_text(&base.replace("mbb2d", "cantilever3d")).unwrap();
        assert!(wrong_dim.validate().is_err());
        let bad_dof = parse_config_text(
            "problem = custom\ndims = 2 2\nvolfrac = 0.5\npenal = 3\nrmin = 1.5\nfixed = 0\nload = 3:-1\n",
        )
        .unwrap();
        assert!(bad_dof.validate().is_err());
    }
}
