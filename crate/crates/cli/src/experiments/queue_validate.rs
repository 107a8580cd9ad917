//! Closed-form M/M/m waiting metrics against long simulator runs.

use rayon::prelude::*;

use cybertwin::queueing::{analyze, QueueError, QueueParams};
use cybertwin::rng::stream_rng;
use cybertwin::sim::{empirical_metrics, run as simulate, Scenario};
use rand::RngCore;

use crate::config::{Config, GridPoint};
use crate::report::{f6, Report};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub analytic_t_q: f64,
    pub empirical_t_q: f64,
    pub analytic_n_q: f64,
    pub empirical_n_q: f64,
    pub completed: usize,
}

impl Comparison {
    pub fn rel_err_t_q(&self) -> f64 {
        rel_err(self.empirical_t_q, self.analytic_t_q)
    }

    pub fn rel_err_n_q(&self) -> f64 {
        rel_err(self.empirical_n_q, self.analytic_n_q)
    }
}

fn rel_err(empirical: f64, analytic: f64) -> f64 {
    (empirical - analytic).abs() / analytic.abs()
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueueRow {
    pub point: GridPoint,
    pub rho: f64,
    /// `None` for unstable points.
    pub result: Option<Comparison>,
}

fn point_seed(seed: u64, index: usize) -> u64 {
    stream_rng(seed, 0xC0FFEE + index as u64).next_u64()
}

pub fn run(cfg: &Config) -> Result<Vec<QueueRow>, CliError> {
    let qv = &cfg.queue_validate;
    qv.grid
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let params = QueueParams {
                lambda_r: p.lambda_r,
                mu: p.mu,
                m: p.m,
            };
            let rho = params.lambda_r / (f64::from(params.m) * params.mu);
            let metrics = match analyze(&params) {
                Ok(m) => m,
                Err(QueueError::Unstable { .. }) => {
                    return Ok(QueueRow {
                        point: *p,
                        rho,
                        result: None,
                    })
                }
                Err(e) => return Err(CliError::Config(format!("grid point {i}: {e}"))),
            };
            let duration = 1.05 * qv.min_completions as f64 / params.lambda_r;
            let trace = simulate(&Scenario::new(params, duration, point_seed(cfg.seed, i)))?;
            let emp = empirical_metrics(&trace)?;
            Ok(QueueRow {
                point: *p,
                rho,
                result: Some(Comparison {
                    analytic_t_q: metrics.t_q,
                    empirical_t_q: emp.t_q,
                    analytic_n_q: metrics.n_q,
                    empirical_n_q: emp.n_q,
                    completed: emp.completed,
                }),
            })
        })
        .collect()
}

pub fn report(rows: &[QueueRow]) -> Report {
    let mut r = Report::new(&[
        "lambda_r",
        "mu",
        "m",
        "rho",
        "status",
        "analytic_t_q",
        "empirical_t_q",
        "rel_err_t_q",
        "analytic_n_q",
        "empirical_n_q",
        "rel_err_n_q",
        "completed",
    ]);
    for row in rows {
        let mut cells = vec![
            f6(row.point.lambda_r),
            f6(row.point.mu),
            row.point.m.to_string(),
            f6(row.rho),
        ];
        match &row.result {
            Some(c) => cells.extend([
                "ok".to_string(),
                f6(c.analytic_t_q),
                f6(c.empirical_t_q),
                f6(c.rel_err_t_q()),
                f6(c.analytic_n_q),
                f6(c.empirical_n_q),
                f6(c.rel_err_n_q()),
                c.completed.to_string(),
            ]),
            None => {
                cells.push("unstable".into());
                cells.extend(std::iter::repeat_n(String::new(), 7));
            }
        }
        r.push(cells);
    }
    r
}
