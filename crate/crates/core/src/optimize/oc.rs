//! Optimality-criteria density update with a bisection on the volume
//! multiplier.

use crate::error::{IgaError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OcParameters {
    pub move_limit: f64,
    pub eta: f64,
    pub lambda_lower: f64,
    pub lambda_upper: f64,
    /// Bisection stops once `(l2 − l1) / (l1 + l2)` is at most this.
    pub bisection_tol: f64,
}

impl Default for OcParameters {
    fn default() -> Self {
        OcParameters {
            move_limit: 0.2,
            eta: 0.5,
            lambda_lower: 0.0,
            lambda_upper: 1e9,
            bisection_tol: 1e-3,
        }
    }
}

impl OcParameters {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(IgaError::Domain {
                    name,
                    value: v,
                    range: "(0, inf)",
                })
            }
        };
        positive("move limit", self.move_limit)?;
        positive("eta", self.eta)?;
        positive("bisection tolerance", self.bisection_tol)?;
        positive("bisection upper bound", self.lambda_upper)?;
        if !(self.lambda_lower >= 0.0 && self.lambda_lower < self.lambda_upper) {
            return Err(IgaError::invalid(format!(
                "bisection bracket [{}, {}] is not a valid interval",
                self.lambda_lower, self.lambda_upper
            )));
        }
        Ok(())
    }
}

/// How the multiplier was determined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OcMode {
    /// The volume constraint is active and `λ` was bisected.
    Bisection,
    /// Even the `λ → 0⁺` step satisfies the volume bound, so it is taken.
    Inactive,
    /// All sensitivities vanish; densities are rescaled toward the volume
    /// bound inside the move limits.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OcUpdate {
    pub x: Vec<f64>,
    pub lambda: f64,
    pub mode: OcMode,
    pub bisection_steps: usize,
    /// Positive sensitivities reset to zero before the update.
    pub clamped: usize,
}

fn check_inputs(x: &[f64], dc: &[f64], dv: &[f64], volfrac: f64) -> Result<()> {
    if dc.len() != x.len() || dv.len() != x.len() {
        return Err(IgaError::DimensionMismatch {
            what: "sensitivity vector",
            expected: x.len(),
            found: if dc.len() != x.len() {
                dc.len()
            } else {
                dv.len()
            },
        });
    }
    if x.is_empty() {
        return Err(IgaError::invalid("no design variables"));
    }
    if let Some(v) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(IgaError::Domain {
            name: "density",
            value: *v,
            range: "[0, 1]",
        });
    }
    if let Some(v) = dc.iter().find(|v| !v.is_finite()) {
        return Err(IgaError::invalid(format!("sensitivity {v} is not finite")));
    }
    if let Some(v) = dv.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(IgaError::invalid(format!(
            "volume sensitivity {v} must be positive"
        )));
    }
    if !(volfrac > 0.0 && volfrac <= 1.0) {
        return Err(IgaError::Domain {
            name: "volfrac",
            value: volfrac,
            range: "(0, 1]",
        });
    }
    Ok(())
}

/// `x_new = clamp(x · (−dc / (λ dv))^η)` to `[max(0, x − m), min(1, x + m)]`,
/// with `λ` chosen so that `Σ x_new ≤ volfrac · n`.
pub fn oc_update(
    x: &[f64],
    dc: &[f64],
    dv: &[f64],
    volfrac: f64,
    params: &OcParameters,
) -> Result<OcUpdate> {
    params.validate()?;
    check_inputs(x, dc, dv, volfrac)?;
    let m = params.move_limit;
    let mut clamped = 0;
    let dc: Vec<f64> = dc
        .iter()
        .map(|&v| {
            if v > 0.0 {
                clamped += 1;
                0.0
            } else {
                v
            }
        })
        .collect();
    let target = volfrac * x.len() as f64;
    let lo = |xe: f64| (xe - m).max(0.0);
    let hi = |xe: f64| (xe + m).min(1.0);

    if dc.iter().all(|&v| v == 0.0) {
        let total: f64 = x.iter().sum();
        let scale = if total > 0.0 {
            target / total
        } else {
            f64::INFINITY
        };
        let x_new = x
            .iter()
            .map(|&xe| {
                let v = if scale.is_finite() {
                    xe * scale
                } else {
                    volfrac
                };
                v.max(lo(xe)).min(hi(xe))
            })
            .collect();
        return Ok(OcUpdate {
            x: x_new,
            lambda: 0.0,
            mode: OcMode::Degenerate,
            bisection_steps: 0,
            clamped,
        });
    }

    let step = |lambda: f64| -> Vec<f64> {
        x.iter()
            .zip(&dc)
            .zip(dv)
            .map(|((&xe, &d), &v)| {
                let cand = xe * (-d / v / lambda).powf(params.eta);
                cand.min(hi(xe)).max(lo(xe))
            })
            .collect()
    };

    // λ → 0⁺: every element with a descent direction moves up fully.
    let x_inactive: Vec<f64> = x
        .iter()
        .zip(&dc)
        .map(|(&xe, &d)| if d < 0.0 { hi(xe) } else { lo(xe) })
        .collect();
    if x_inactive.iter().sum::<f64>() <= target {
        return Ok(OcUpdate {
            x: x_inactive,
            lambda: 0.0,
            mode: OcMode::Inactive,
            bisection_steps: 0,
            clamped,
        });
    }

    let (mut l1, mut l2) = (params.lambda_lower, params.lambda_upper);
    let mut steps = 0;
    let mut lambda = 0.5 * (l1 + l2);
    let mut x_new = step(lambda);
    while (l2 - l1) / (l1 + l2) > params.bisection_tol {
        lambda = 0.5 * (l1 + l2);
        x_new = step(lambda);
        steps += 1;
        if x_new.iter().sum::<f64>() > target {
            l1 = lambda;
        } else {
            l2 = lambda;
        }
    }
    // Finish on the feasible end of the bracket.
    if x_new.iter().sum::<f64>() > target {
        lambda = l2;
        x_new = step(lambda);
    }
    Ok(OcUpdate {
        x: x_new,
        lambda,
        mode: OcMode::Bisection,
        bisection_steps: steps,
        clamped,
    })
}
