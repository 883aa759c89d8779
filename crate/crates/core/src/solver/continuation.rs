use serde::Serialize;

use super::{detect_concentration, solve_critical_point, SolveConfig, SolveReport};
use crate::energy::{EnergyParams, SurfaceMap};
use crate::error::{Error, Result};

/// Decreasing sequence of `ε` values.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonSchedule {
    /// `start, start·ratio, …` while `≥ floor`, then `0`.
    Geometric { start: f64, ratio: f64, floor: f64 },
    Explicit(Vec<f64>),
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self::Geometric { start: 0.5, ratio: 0.5, floor: 1e-3 }
    }
}

impl EpsilonSchedule {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Self::Explicit(v) => v.clone(),
            &Self::Geometric { start, ratio, floor } => {
                let mut v = Vec::new();
                let mut e = start;
                while e >= floor && v.len() < 200 {
                    v.push(e);
                    e *= ratio;
                }
                v.push(0.0);
                v
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Self::Explicit(v) => {
                !v.is_empty() && v.iter().all(|e| *e >= 0.0 && e.is_finite()) && v.windows(2).all(|w| w[1] < w[0])
            }
            &Self::Geometric { start, ratio, floor } => {
                ratio > 0.0 && ratio < 1.0 && floor > 0.0 && start >= floor && start.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter("ε schedule must be non-empty, non-negative and decreasing".into()))
        }
    }
}

#[derive(Debug, Clone)]
pub struct ContinuationStage {
    pub eps: f64,
    pub map: SurfaceMap,
    pub report: SolveReport,
}

/// Solve along `cfg`'s schedule, each stage warm-started from the previous.
///
/// A failing stage returns its diagnostics together with a concentration
/// report over the stages that did converge.
pub fn continue_epsilon(
    u: &SurfaceMap,
    params: &EnergyParams,
    cfg: &SolveConfig,
) -> Result<Vec<ContinuationStage>> {
    let schedule = &cfg.eps_schedule;
    schedule.validate()?;
    let mut stages: Vec<ContinuationStage> = Vec::new();
    let mut current = u.clone();
    for eps in schedule.values() {
        let p = params.with_eps(eps);
        match solve_critical_point(&current, &p, cfg) {
            Ok((map, report)) => {
                current = map.clone();
                stages.push(ContinuationStage { eps, map, report });
            }
            Err(Error::Solve { reason, mut report }) => {
                let seq: Vec<(f64, SurfaceMap)> = stages.iter().map(|s| (s.eps, s.map.clone())).collect();
                report.concentration = detect_concentration(&seq, cfg).ok();
                return Err(Error::Solve { reason: format!("stage eps = {eps}: {reason}"), report });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(stages)
}
