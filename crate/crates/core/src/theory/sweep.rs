use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::solver::{run_sd_red, IterateTrace, Problem, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCell {
    pub tau: f64,
    pub sigma: f64,
    pub epsilon: f64,
}

impl SweepCell {
    /// Cartesian product in `tau`-major order.
    pub fn grid(taus: &[f64], sigmas: &[f64], epsilons: &[f64]) -> Vec<SweepCell> {
        let mut cells = Vec::with_capacity(taus.len() * sigmas.len() * epsilons.len());
        for &tau in taus {
            for &sigma in sigmas {
                for &epsilon in epsilons {
                    cells.push(SweepCell { tau, sigma, epsilon });
                }
            }
        }
        cells
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub tau: f64,
    pub sigma: f64,
    pub epsilon: f64,
    /// Final over initial `||G||^2`.
    pub g_norm_sq_ratio: f64,
    pub dist_to_ref: Option<f64>,
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub cell: SweepCell,
    pub result: Result<(SweepRow, IterateTrace)>,
}

/// Runs every cell on the rayon pool; results come back in cell order.
pub fn run_sweep<F>(cells: &[SweepCell], build: F) -> Vec<SweepOutcome>
where
    F: Fn(&SweepCell) -> Result<(Problem, SolverConfig)> + Sync,
{
    cells
        .par_iter()
        .map(|cell| {
            let result = build(cell).and_then(|(problem, config)| {
                let trace = run_sd_red(&problem, &config)?;
                let first = trace.records.first().expect("trace has records");
                let last = trace.records.last().expect("trace has records");
                let row = SweepRow {
                    tau: cell.tau,
                    sigma: cell.sigma,
                    epsilon: cell.epsilon,
                    g_norm_sq_ratio: last.g_norm_sq / first.g_norm_sq,
                    dist_to_ref: last.dist_to_ref,
                };
                Ok((row, trace))
            });
            SweepOutcome { cell: *cell, result }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::priors::PerturbationMode;
    use crate::theory::{FamilyParams, InstanceFamily, LinearGaussianFamily};

    #[test]
    fn grid_runs_in_order() {
        let cells = SweepCell::grid(&[0.5, 1.0, 2.0], &[0.5, 1.0, 1.5], &[0.0, 0.3]);
        assert_eq!(cells.len(), 18);
        let out = run_sweep(&cells, |c| {
            let inst = LinearGaussianFamily {
                params: FamilyParams {
                    tau: Some(c.tau),
                    sigma: Some(c.sigma),
                    epsilon: Some(c.epsilon),
                    lambda: Some(0.5),
                    iterations: Some(50),
                    mode: Some(PerturbationMode::FixedDirection),
                    ..Default::default()
                },
            }
            .instance(4)?;
            Ok((inst.problem, inst.config))
        });
        assert_eq!(out.len(), 18);
        for (o, c) in out.iter().zip(&cells) {
            assert_eq!(o.cell, *c);
            let (row, trace) = o.result.as_ref().unwrap();
            assert_eq!(trace.records.len(), 51);
            assert!(row.g_norm_sq_ratio.is_finite());
        }
    }
}
