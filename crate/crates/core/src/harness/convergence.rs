//! Convergence tables under simultaneous refinement of `h` and `dt`, and a
//! temporal study against a fine-step reference on a fixed mesh.

use super::norms::{compare_discrete, compute_errors, ErrorReport};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::model::PhysicalParams;
use crate::par::{map_indexed, Exec};
use crate::solver::{FieldState, Solver, SolverConfig};

/// One refinement level: `n` subdivisions per side and time step `dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub n: usize,
    pub dt: f64,
}

impl Level {
    /// `dt = 1/n`, as in the tables.
    pub fn paired(n: usize) -> Self {
        Level {
            n,
            dt: 1.0 / n as f64,
        }
    }
}

/// One table row; rates are absent on the first row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub dt: f64,
    pub inv_h: usize,
    pub e_u: f64,
    pub roc_u: Option<f64>,
    pub e_c: f64,
    pub roc_c: Option<f64>,
    pub e_p: f64,
    pub roc_p: Option<f64>,
    pub total: f64,
    pub roc_total: Option<f64>,
}

/// `log2(coarse / fine)`.
pub fn rate(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

/// Table rows from per-level reports, rates between successive levels.
pub fn build_rows(levels: &[Level], reports: &[ErrorReport]) -> Vec<ConvergenceRow> {
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(reports.len());
    for (lv, r) in levels.iter().zip(reports) {
        let prev = rows.last().copied();
        let roc = |f: fn(&ConvergenceRow) -> f64, cur: f64| prev.map(|p| rate(f(&p), cur));
        rows.push(ConvergenceRow {
            dt: lv.dt,
            inv_h: lv.n,
            e_u: r.e_u,
            roc_u: roc(|p| p.e_u, r.e_u),
            e_c: r.e_c,
            roc_c: roc(|p| p.e_c, r.e_c),
            e_p: r.e_p,
            roc_p: roc(|p| p.e_p, r.e_p),
            total: r.total,
            roc_total: roc(|p| p.total, r.total),
        });
    }
    rows
}

/// A sweep that stopped early: the rows of the levels that completed before
/// the first failing one, and its error.
#[derive(Debug, thiserror::Error)]
#[error("convergence study failed at level {level}: {source}")]
pub struct StudyError {
    pub rows: Vec<ConvergenceRow>,
    pub level: usize,
    #[source]
    pub source: Error,
}

/// Runs one level and measures it against the manufactured solution.
pub fn run_level(level: Level, cfg: &SolverConfig, params: &PhysicalParams) -> Result<ErrorReport> {
    let mesh = Mesh::unit_square(level.n)?;
    let cfg = SolverConfig {
        dt: level.dt,
        ..cfg.clone()
    };
    let solver = Solver::new(&mesh, *params, cfg.clone())?;
    let out = solver.run()?;
    log::info!(
        "{} n={} dt={}: Picard iterations {:?}",
        cfg.method,
        level.n,
        level.dt,
        out.picard_iterations
    );
    compute_errors(&mesh, &out.states, cfg.dt, cfg.theta, cfg.exec)
}

/// Runs every level (concurrently when `level_exec` allows) and returns
/// the table in level order.
pub fn convergence_study(
    levels: &[Level],
    cfg: &SolverConfig,
    params: &PhysicalParams,
    level_exec: Exec,
) -> Result<Vec<ConvergenceRow>, StudyError> {
    if levels.is_empty() {
        return Err(StudyError {
            rows: vec![],
            level: 0,
            source: Error::invalid("no levels given"),
        });
    }
    let results = map_indexed(level_exec, levels.len(), |i| {
        run_level(levels[i], cfg, params)
    });
    let mut reports = Vec::with_capacity(levels.len());
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(rep) => reports.push(rep),
            Err(source) => {
                return Err(StudyError {
                    rows: build_rows(levels, &reports),
                    level: levels[i].n,
                    source,
                })
            }
        }
    }
    Ok(build_rows(levels, &reports))
}

/// Result of a temporal study.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalStudy {
    pub dts: Vec<f64>,
    pub reports: Vec<ErrorReport>,
    /// Least-squares slope of `log(total)` against `log(dt)`.
    pub slope: f64,
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Reference states at every `stride`-th level of a fine run.
///
/// For `theta < 1` the pressure unknown of each step only enters through
/// its theta-average with the previous level, so nodal pressures of a
/// Crank-Nicolson run carry a step-to-step oscillation. The reference
/// pressure at interior levels is therefore rebuilt from the step averages
/// `W^j` as `(W^{j-1} + W^j)/2`, extrapolated linearly at the final level.
fn sample_reference(states: &[FieldState], stride: usize, theta: f64) -> Vec<FieldState> {
    let n_fine = states.len() - 1;
    let (th1, th0) = (0.5 * (1.0 + theta), 0.5 * (1.0 - theta));
    let avg = |j: usize| -> Vec<f64> {
        states[j + 1]
            .p
            .iter()
            .zip(&states[j].p)
            .map(|(a, b)| th1 * a + th0 * b)
            .collect()
    };
    (0..=n_fine)
        .step_by(stride)
        .map(|k| {
            let mut s = states[k].clone();
            if theta < 1.0 && k > 0 && n_fine >= 2 {
                s.p = if k < n_fine {
                    avg(k - 1)
                        .iter()
                        .zip(avg(k))
                        .map(|(a, b)| 0.5 * (a + b))
                        .collect()
                } else {
                    avg(k - 1)
                        .iter()
                        .zip(avg(k - 2))
                        .map(|(a, b)| 1.5 * a - 0.5 * b)
                        .collect()
                };
            }
            s
        })
        .collect()
}

/// Fixed-mesh temporal study: each `dts[i]` run is compared with a run at
/// `dt_ref` sampled at the coarse levels. Every `dts[i]` must be an integer
/// multiple of `dt_ref`.
pub fn temporal_study(
    n: usize,
    dts: &[f64],
    dt_ref: f64,
    cfg: &SolverConfig,
    params: &PhysicalParams,
) -> Result<TemporalStudy> {
    if dts.len() < 2 {
        return Err(Error::invalid(
            "temporal study needs at least two step sizes",
        ));
    }
    let mesh = Mesh::unit_square(n)?;
    let ref_cfg = SolverConfig {
        dt: dt_ref,
        ..cfg.clone()
    };
    let reference = Solver::new(&mesh, *params, ref_cfg)?.run()?;
    let mut reports = Vec::with_capacity(dts.len());
    for &dt in dts {
        let ratio = dt / dt_ref;
        let stride = ratio.round();
        if (ratio - stride).abs() > 1e-9 || stride < 1.0 {
            return Err(Error::invalid(format!(
                "dt {dt} is not a multiple of the reference step {dt_ref}"
            )));
        }
        let level_cfg = SolverConfig { dt, ..cfg.clone() };
        let run = Solver::new(&mesh, *params, level_cfg)?.run()?;
        let mut refs = sample_reference(&reference.states, stride as usize, cfg.theta);
        for s in refs.iter_mut() {
            // sampled fine levels keep their own time stamps up to rounding
            s.t = (s.t / dt).round() * dt;
        }
        reports.push(compare_discrete(
            &mesh,
            &run.states,
            &refs,
            dt,
            cfg.theta,
            cfg.exec,
        )?);
    }
    let totals: Vec<f64> = reports.iter().map(|r| r.total).collect();
    Ok(TemporalStudy {
        dts: dts.to_vec(),
        slope: log_log_slope(dts, &totals),
        reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halving_errors_give_unit_rates() {
        let levels = [Level::paired(10), Level::paired(20), Level::paired(40)];
        let reports: Vec<_> = [8e-3, 4e-3, 2e-3]
            .iter()
            .map(|&e| ErrorReport::new(e, e, e))
            .collect();
        let rows = build_rows(&levels, &reports);
        assert_eq!(rows[0].roc_u, None);
        for r in &rows[1..] {
            for roc in [r.roc_u, r.roc_c, r.roc_p, r.roc_total] {
                assert!((roc.unwrap() - 1.0).abs() < 1e-12);
            }
        }
        assert_eq!(rows[2].inv_h, 40);
    }

    #[test]
    fn slope_of_power_law() {
        let x = [0.1, 0.05, 0.025];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.7)).collect();
        assert!((log_log_slope(&x, &y) - 1.7).abs() < 1e-12);
    }

    #[test]
    fn reference_pressure_smooths_alternation() {
        // pressure averages W^j = j, with a superposed alternation in the nodal values
        let mut states = Vec::new();
        let mut p = 0.0;
        for j in 0..=8 {
            let mut s = FieldState::zeros(1, j as f64);
            if j > 0 {
                // (p_j + p_{j-1})/2 = j - 1/2
                p = 2.0 * (j as f64 - 0.5) - p;
            }
            s.p[0] = p;
            states.push(s);
        }
        let r = sample_reference(&states, 2, 0.0);
        assert_eq!(r.len(), 5);
        for (k, s) in r.iter().enumerate().skip(1) {
            assert!(
                (s.p[0] - 2.0 * k as f64).abs() < 1e-12,
                "level {k}: {}",
                s.p[0]
            );
        }
    }
}
