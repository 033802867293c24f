//! Size growth of branch and trunk networks against the target accuracy.

use rand::Rng;

use super::{linear_fit, Fit, StudyError, StudyReport};
use crate::onet::{build_onet, Calibration, PlanSpec};
use crate::problem::OnetProblem;

/// Build one operator network per target accuracy and record component
/// sizes; fit the slopes of `log size` against `log |log eps|`.
pub fn size_scaling_study(
    problem: &OnetProblem,
    eps_range: &[f64],
    calibration: Calibration,
    rng: &mut impl Rng,
    seed: u64,
) -> Result<StudyReport, StudyError> {
    let mut report = StudyReport::new(
        "size_scaling",
        seed,
        &[
            "eps",
            "p",
            "n_b",
            "branch_size",
            "branch_depth",
            "trunk_size",
            "trunk_depth",
            "input_layer_size",
        ],
    );
    for &eps in eps_range {
        let spec = PlanSpec::Target { eps, calibration };
        match build_onet(problem, &spec, rng) {
            Ok(onet) => {
                let r = &onet.report;
                report.rows.push(vec![
                    eps,
                    r.plan.p as f64,
                    r.plan.n_b as f64,
                    r.branch_size as f64,
                    r.branch_depth as f64,
                    r.trunk_size as f64,
                    r.trunk_depth as f64,
                    r.input_layer_size as f64,
                ]);
            }
            Err(e) => report.failures.push(format!("eps={eps}: {e}")),
        }
    }
    if report.rows.len() >= 2 {
        let xs: Vec<f64> = report
            .rows
            .iter()
            .map(|r| r[0].ln().abs().ln())
            .collect();
        let branch_logs: Vec<f64> = report.rows.iter().map(|r| r[3].ln()).collect();
        let trunk_logs: Vec<f64> = report.rows.iter().map(|r| r[5].ln()).collect();
        let branch_fit = linear_fit(&xs, &branch_logs)?;
        let trunk_fit = linear_fit(&xs, &trunk_logs)?;
        report.fits.push(Fit {
            name: "branch_slope".into(),
            value: branch_fit.slope,
        });
        report.fits.push(Fit {
            name: "trunk_slope".into(),
            value: trunk_fit.slope,
        });
    }
    Ok(report)
}
