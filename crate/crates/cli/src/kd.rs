//! Compression runs and quantile sweeps.

use serde::Serialize;
use spectral_core::kd::{
    checkpoint, pretrain, quantile_sweep, rmtkd_schedule, sweep_template, CompressionPlan,
    DenseNet, FitConfig, GaussianMixtureTask, StageRecord, StopReason, TaskData,
};
use spectral_core::optim::{AdamConfig, Parameters};

use crate::args::{CompressArgs, PlanArgs, SweepArgs, TaskArgs};
use crate::error::{CliError, CliResult};
use crate::io::{emit, finish, open_in, open_out, write_bytes};

fn task_data(a: &TaskArgs, seed: u64) -> CliResult<TaskData> {
    let task = GaussianMixtureTask {
        input_dim: a.input_dim,
        classes: a.classes,
        mean_scale: a.mean_scale,
        train: a.train_size,
        validation: a.validation_size,
        test: a.test_size,
    };
    Ok(task.generate(seed)?)
}

fn fit_config(plan: &PlanArgs, epochs: usize) -> FitConfig {
    FitConfig {
        epochs,
        batch_size: plan.batch_size,
        adam: AdamConfig {
            learning_rate: plan.learning_rate,
            weight_decay: 0.0,
            ..AdamConfig::default()
        },
        seed: plan.seed,
    }
}

fn starting_model(a: &TaskArgs, plan: &PlanArgs, data: &TaskData) -> CliResult<DenseNet> {
    let net = match &a.model {
        Some(path) => {
            let net = checkpoint::read(open_in(path)?).map_err(|e| CliError::at(path, e))?;
            if net.input_width() != a.input_dim || net.classes() != a.classes {
                return Err(CliError::Data(format!(
                    "{}: network is {}->{}, task is {}->{}",
                    path.display(),
                    net.input_width(),
                    net.classes(),
                    a.input_dim,
                    a.classes
                )));
            }
            net
        }
        None => {
            if a.hidden_widths.is_empty() {
                return Err(CliError::config("hidden-widths: need at least one layer"));
            }
            let widths: Vec<usize> = std::iter::once(a.input_dim)
                .chain(a.hidden_widths.iter().copied())
                .chain(std::iter::once(a.classes))
                .collect();
            pretrain(&widths, data, &fit_config(plan, a.pretrain_epochs))?
        }
    };
    if let Some(path) = &a.save_teacher {
        write_bytes(path, &checkpoint::encode(&net))?;
    }
    Ok(net)
}

fn plan(p: &PlanArgs, tau: f64, param_target: Option<usize>) -> CompressionPlan {
    CompressionPlan {
        layer_order: p.layers.clone(),
        tau,
        calibration_fraction: p.calibration_fraction,
        alpha: p.alpha,
        temperature: p.temperature,
        rho_min: p.rho_min,
        epsilon_acc: p.epsilon_acc,
        param_target,
        stability_fraction: p.stability_fraction,
        max_recovery_rounds: p.max_recovery_rounds,
        fit_bins: p.fit_bins,
        finetune: fit_config(p, p.finetune_epochs),
        seed: p.seed,
    }
}

#[derive(Serialize)]
struct StageLine<'a> {
    record: &'static str,
    #[serde(flatten)]
    stage: &'a StageRecord,
}

#[derive(Serialize)]
struct Summary {
    record: &'static str,
    stop_reason: StopReason,
    params_initial: usize,
    params_final: usize,
    reduction_pct: f64,
    val_acc_initial: f64,
    val_acc_final: f64,
    test_acc_initial: f64,
    test_acc_final: f64,
    widths_final: Vec<usize>,
}

enum Target {
    Current,
    Count(usize),
}

fn parse_target(s: &str) -> CliResult<Target> {
    if s == "current" {
        return Ok(Target::Current);
    }
    s.parse().map(Target::Count).map_err(|_| {
        CliError::config(format!(
            "param-target: expected `current` or a count, got `{s}`"
        ))
    })
}

pub fn compress(a: &CompressArgs) -> CliResult<()> {
    let target = a.param_target.as_deref().map(parse_target).transpose()?;
    // reject bad plan fields before the costly pretraining
    plan(&a.plan, a.tau, None).validate()?;
    let data = task_data(&a.task, a.plan.seed)?;
    let model = starting_model(&a.task, &a.plan, &data)?;
    let param_target = target.map(|t| match t {
        Target::Current => model.parameter_count(),
        Target::Count(n) => n,
    });
    let (net, report) = rmtkd_schedule(&model, &data, &plan(&a.plan, a.tau, param_target))?;
    let mut out = open_out(&a.report)?;
    for stage in &report.stages {
        emit(
            &mut *out,
            &a.report,
            &StageLine {
                record: "stage",
                stage,
            },
        )?;
    }
    let test = |n: &DenseNet| n.accuracy(&data.test.x, &data.test.labels);
    emit(
        &mut *out,
        &a.report,
        &Summary {
            record: "summary",
            stop_reason: report.stop_reason,
            params_initial: report.params_initial,
            params_final: report.params_final,
            reduction_pct: report.reduction_pct(),
            val_acc_initial: report.val_acc_initial,
            val_acc_final: report.val_acc_final,
            test_acc_initial: test(&model)?,
            test_acc_final: test(&net)?,
            widths_final: report.widths_final.clone(),
        },
    )?;
    finish(&mut *out, &a.report)?;
    if let Some(path) = &a.out_model {
        write_bytes(path, &checkpoint::encode(&net))?;
    }
    Ok(())
}

pub fn sweep_quantile(a: &SweepArgs) -> CliResult<()> {
    if a.taus.is_empty() {
        return Err(CliError::config("taus: need at least one value"));
    }
    let base = plan(&a.plan, a.taus[0], None);
    base.validate()?;
    for &tau in &a.taus {
        if !(0.0..=1.0).contains(&tau) {
            return Err(CliError::config(format!("taus: {tau} outside [0, 1]")));
        }
    }
    let data = task_data(&a.task, a.plan.seed)?;
    let model = starting_model(&a.task, &a.plan, &data)?;
    let points = quantile_sweep(&model, &data, &a.taus, &sweep_template(&base))?;
    let mut out = open_out(&a.out)?;
    for p in &points {
        emit(&mut *out, &a.out, p)?;
    }
    finish(&mut *out, &a.out)
}
