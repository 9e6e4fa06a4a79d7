//! Progressive layer-by-layer compression and the quantile sweep.

use std::fmt;

use serde::Serialize;

use super::distill::{fit, DistillParams, FitConfig};
use super::net::DenseNet;
use super::projection::{
    causal_projection, collect_activations, insert_projection, orthonormality_error,
    select_outliers,
};
use super::task::TaskData;
use crate::error::{invalid, Result};
use crate::linalg::{column_covariance, sorted_symmetric_eigen};
use crate::optim::Parameters;
use crate::rmt::{fit_mp, EigenSpectrum, DEFAULT_FIT_BINS};

#[derive(Debug, Clone, PartialEq)]
pub struct CompressionPlan {
    /// Hidden layers to visit; `None` means every hidden layer, shallow to
    /// deep.
    pub layer_order: Option<Vec<usize>>,
    pub tau: f64,
    pub calibration_fraction: f64,
    pub alpha: f64,
    pub temperature: f64,
    pub rho_min: f64,
    /// Largest tolerated validation-accuracy drop per stage, as a fraction.
    pub epsilon_acc: f64,
    pub param_target: Option<usize>,
    /// Fraction of the starting validation accuracy a stage must recover
    /// before the schedule moves on. Fine-tuning also continues, up to
    /// `max_recovery_rounds` extra rounds, while the stage is outside
    /// `epsilon_acc` of its teacher.
    pub stability_fraction: f64,
    pub max_recovery_rounds: usize,
    pub fit_bins: usize,
    pub finetune: FitConfig,
    pub seed: u64,
}

impl Default for CompressionPlan {
    fn default() -> Self {
        Self {
            layer_order: None,
            tau: 0.45,
            calibration_fraction: 0.1,
            alpha: 0.7,
            temperature: 1.0,
            rho_min: 0.02,
            epsilon_acc: 0.02,
            param_target: None,
            stability_fraction: 0.9,
            max_recovery_rounds: 4,
            fit_bins: DEFAULT_FIT_BINS,
            finetune: FitConfig {
                epochs: 5,
                ..FitConfig::default()
            },
            seed: 0,
        }
    }
}

impl CompressionPlan {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(invalid("tau", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(invalid("alpha", "must lie in [0, 1]"));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(invalid("temperature", "must be positive"));
        }
        if !(self.rho_min > 0.0 && self.rho_min < 1.0) {
            return Err(invalid("rho_min", "must lie in (0, 1)"));
        }
        if !(self.epsilon_acc >= 0.0) {
            return Err(invalid("epsilon_acc", "must be non-negative"));
        }
        if !(self.calibration_fraction > 0.0 && self.calibration_fraction <= 1.0) {
            return Err(invalid("calibration_fraction", "must lie in (0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.stability_fraction) {
            return Err(invalid("stability_fraction", "must lie in [0, 1]"));
        }
        Ok(())
    }

    fn distill(&self) -> DistillParams {
        DistillParams {
            alpha: self.alpha,
            temperature: self.temperature,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StopReason {
    #[serde(rename = "outlier-ratio")]
    OutlierRatio,
    #[serde(rename = "accuracy")]
    Accuracy,
    #[serde(rename = "target met")]
    TargetMet,
    #[serde(rename = "layers exhausted")]
    LayersExhausted,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::OutlierRatio => "outlier-ratio",
            Self::Accuracy => "accuracy",
            Self::TargetMet => "target met",
            Self::LayersExhausted => "layers exhausted",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Continue,
    Stop(StopReason),
}

/// First firing criterion in the order outlier ratio, accuracy, target.
/// `delta_val_acc` is a fraction (student minus teacher).
pub fn stopping_check(
    k: usize,
    d: usize,
    delta_val_acc: f64,
    params: usize,
    plan: &CompressionPlan,
) -> StopDecision {
    if (k as f64) < plan.rho_min * d as f64 {
        StopDecision::Stop(StopReason::OutlierRatio)
    } else if delta_val_acc < -plan.epsilon_acc {
        StopDecision::Stop(StopReason::Accuracy)
    } else if plan.param_target.is_some_and(|t| params <= t) {
        StopDecision::Stop(StopReason::TargetMet)
    } else {
        StopDecision::Continue
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageStatus {
    Applied,
    /// Reverted after the accuracy criterion fired.
    Reverted,
    /// Not applied because the outlier ratio was too small.
    Rejected,
    SkippedNoOutliers,
    SkippedFullRank,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageRecord {
    pub stage: usize,
    pub layer: usize,
    pub d: usize,
    pub k: usize,
    pub n_calibration: usize,
    pub sigma2: f64,
    pub lambda_plus: f64,
    pub kept_eigenvalues: Vec<f64>,
    pub val_acc_before: f64,
    pub val_acc_after: f64,
    pub params_before: usize,
    pub params_after: usize,
    pub orthonormality_error: f64,
    pub finetune_epochs: usize,
    pub status: StageStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompressionReport {
    pub stages: Vec<StageRecord>,
    pub stop_reason: StopReason,
    pub params_initial: usize,
    pub params_final: usize,
    pub val_acc_initial: f64,
    pub val_acc_final: f64,
    pub widths_final: Vec<usize>,
}

impl CompressionReport {
    pub fn reduction_pct(&self) -> f64 {
        100.0 * (1.0 - self.params_final as f64 / self.params_initial as f64)
    }

    pub fn applied(&self) -> impl Iterator<Item = &StageRecord> {
        self.stages
            .iter()
            .filter(|s| s.status == StageStatus::Applied)
    }
}

/// Runs the progressive schedule on a copy of `model`.
pub fn rmtkd_schedule(
    model: &DenseNet,
    data: &TaskData,
    plan: &CompressionPlan,
) -> Result<(DenseNet, CompressionReport)> {
    plan.validate()?;
    let hidden = model.layers().len() - 1;
    let order: Vec<usize> = plan
        .layer_order
        .clone()
        .unwrap_or_else(|| (0..hidden).collect());
    if let Some(&bad) = order.iter().find(|&&l| l >= hidden) {
        return Err(invalid(
            "layer_order",
            format!("layer {bad} is not a hidden layer"),
        ));
    }
    let calib = data.calibration(plan.calibration_fraction, plan.seed)?;
    let val_acc = |net: &DenseNet| net.accuracy(&data.validation.x, &data.validation.labels);

    let mut net = model.clone();
    let params_initial = net.parameter_count();
    let val_acc_initial = val_acc(&net)?;
    let stability_floor = plan.stability_fraction * val_acc_initial;
    let mut stages = Vec::new();
    let mut stop_reason = StopReason::LayersExhausted;

    for (stage, &layer) in order.iter().enumerate() {
        let params_before = net.parameter_count();
        if plan.param_target.is_some_and(|t| params_before <= t) {
            stop_reason = StopReason::TargetMet;
            break;
        }
        let acts = collect_activations(&net, &calib.x, layer)?;
        let (d, n) = acts.shape();
        let cov = column_covariance(&acts);
        let (values, _) = sorted_symmetric_eigen(cov.clone());
        let spectrum = EigenSpectrum::from_eigenvalues(values, n, d)?;
        let mp = fit_mp(&spectrum, d as f64 / n as f64, plan.tau, plan.fit_bins)?;
        let outliers = select_outliers(&spectrum, &mp);
        let k = outliers.len();
        let teacher_acc = val_acc(&net)?;
        let mut record = StageRecord {
            stage,
            layer,
            d,
            k,
            n_calibration: n,
            sigma2: mp.sigma2(),
            lambda_plus: mp.lambda_plus(),
            kept_eigenvalues: outliers.iter().map(|&i| spectrum.values()[i]).collect(),
            val_acc_before: teacher_acc,
            val_acc_after: teacher_acc,
            params_before,
            params_after: params_before,
            orthonormality_error: 0.0,
            finetune_epochs: 0,
            status: StageStatus::SkippedNoOutliers,
        };
        if k == 0 {
            stages.push(record);
            continue;
        }
        if k >= d {
            record.status = StageStatus::SkippedFullRank;
            stages.push(record);
            continue;
        }
        if let StopDecision::Stop(reason @ StopReason::OutlierRatio) =
            stopping_check(k, d, 0.0, params_before, plan)
        {
            record.status = StageStatus::Rejected;
            stages.push(record);
            stop_reason = reason;
            break;
        }

        let p = causal_projection(&cov, &outliers)?;
        record.orthonormality_error = orthonormality_error(&p);
        let mut student = insert_projection(&net, layer, &p)?;
        let mut cfg = plan.finetune;
        cfg.seed = plan.seed.wrapping_add(1000 + stage as u64);
        let teacher = (&net, plan.distill());
        fit(
            &mut student,
            &data.train.x,
            &data.train.labels,
            Some(teacher),
            &cfg,
        )?;
        record.finetune_epochs = cfg.epochs;
        let mut acc = val_acc(&student)?;
        let recovery_target = stability_floor.max(teacher_acc - plan.epsilon_acc);
        for round in 0..plan.max_recovery_rounds {
            if acc >= recovery_target {
                break;
            }
            cfg.seed = cfg.seed.wrapping_add(round as u64 + 1);
            fit(
                &mut student,
                &data.train.x,
                &data.train.labels,
                Some(teacher),
                &cfg,
            )?;
            record.finetune_epochs += cfg.epochs;
            acc = val_acc(&student)?;
        }
        record.val_acc_after = acc;
        let params_after = student.parameter_count();
        match stopping_check(k, d, acc - teacher_acc, params_after, plan) {
            StopDecision::Stop(StopReason::Accuracy) => {
                record.status = StageStatus::Reverted;
                stages.push(record);
                stop_reason = StopReason::Accuracy;
                break;
            }
            decision => {
                record.status = StageStatus::Applied;
                record.params_after = params_after;
                stages.push(record);
                net = student;
                if let StopDecision::Stop(reason) = decision {
                    stop_reason = reason;
                    break;
                }
            }
        }
    }

    let report = CompressionReport {
        stages,
        stop_reason,
        params_initial,
        params_final: net.parameter_count(),
        val_acc_initial,
        val_acc_final: val_acc(&net)?,
        widths_final: net.widths(),
    };
    Ok((net, report))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub tau: f64,
    pub reduction_pct: f64,
    pub val_acc: f64,
    pub test_acc: f64,
    pub params: usize,
    pub stop_reason: StopReason,
}

/// One schedule per `tau`, each from the same starting model and seed.
pub fn quantile_sweep(
    model: &DenseNet,
    data: &TaskData,
    taus: &[f64],
    template: &CompressionPlan,
) -> Result<Vec<SweepPoint>> {
    taus.iter()
        .map(|&tau| {
            let plan = CompressionPlan {
                tau,
                ..template.clone()
            };
            let (net, report) = rmtkd_schedule(model, data, &plan)?;
            Ok(SweepPoint {
                tau,
                reduction_pct: report.reduction_pct(),
                val_acc: report.val_acc_final,
                test_acc: net.accuracy(&data.test.x, &data.test.labels)?,
                params: report.params_final,
                stop_reason: report.stop_reason,
            })
        })
        .collect()
}

/// Template for sweeps: the accuracy and outlier-ratio stops are disabled so
/// every point runs the full layer order.
pub fn sweep_template(base: &CompressionPlan) -> CompressionPlan {
    CompressionPlan {
        epsilon_acc: f64::INFINITY,
        rho_min: 1e-9,
        param_target: None,
        ..base.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kd::task::GaussianMixtureTask;

    #[test]
    fn stopping_order() {
        let plan = CompressionPlan {
            rho_min: 0.1,
            epsilon_acc: 0.02,
            param_target: Some(100),
            ..Default::default()
        };
        assert_eq!(
            stopping_check(5, 100, 0.0, 1000, &plan),
            StopDecision::Stop(StopReason::OutlierRatio)
        );
        assert_eq!(
            stopping_check(5, 100, -0.05, 10, &plan),
            StopDecision::Stop(StopReason::OutlierRatio)
        );
        assert_eq!(
            stopping_check(20, 100, -0.05, 10, &plan),
            StopDecision::Stop(StopReason::Accuracy)
        );
        assert_eq!(
            stopping_check(20, 100, -0.01, 10, &plan),
            StopDecision::Stop(StopReason::TargetMet)
        );
        assert_eq!(
            stopping_check(20, 100, -0.01, 1000, &plan),
            StopDecision::Continue
        );
    }

    #[test]
    fn target_at_current_size_runs_no_stage() {
        let task = GaussianMixtureTask {
            train: 60,
            validation: 20,
            test: 20,
            ..Default::default()
        };
        let data = task.generate(0).unwrap();
        let net = DenseNet::new(&[32, 16, 16, 10], 0).unwrap();
        let plan = CompressionPlan {
            param_target: Some(net.parameter_count()),
            ..Default::default()
        };
        let (out, report) = rmtkd_schedule(&net, &data, &plan).unwrap();
        assert!(report.stages.is_empty());
        assert_eq!(report.stop_reason, StopReason::TargetMet);
        assert_eq!(report.stop_reason.to_string(), "target met");
        assert_eq!(out, net);
    }

    #[test]
    fn plan_validation() {
        assert!(CompressionPlan {
            tau: 1.5,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(CompressionPlan {
            rho_min: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(CompressionPlan::default().validate().is_ok());
    }
}
