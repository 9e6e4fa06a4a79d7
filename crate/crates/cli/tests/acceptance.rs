//! Acceptance report: one PASS/FAIL line per criterion, exit status 1 if any
//! fails. Extra non-flag arguments select criteria by name substring.

use std::f64::consts::FRAC_PI_2;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spectral_core::container::ActivationContainer;
use spectral_core::dataset::{synthetic_detection_set, Positive};
use spectral_core::features::*;
use spectral_core::head::{
    backward, bce_loss, head_forward, train, CellKind, HeadParams, LabeledSeries, LossReduction,
    TrainConfig,
};
use spectral_core::kd::*;
use spectral_core::linalg::sample_covariance_spectrum;
use spectral_core::optim::Parameters;
use spectral_core::rmt::*;
use spectral_core::stream::WindowConfig;
use spectral_core::synth::{generate_sequence, SequenceKind, SequenceSpec};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn fmt_list(v: &[f64], digits: usize) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.digits$}")).collect();
    format!("[{}]", parts.join(", "))
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Tanh-sinh quadrature, independent of the library's angular table.
fn tanh_sinh(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let h = 1.0 / 128.0;
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let mut sum = 0.0;
    for k in -(6 * 128)..=(6 * 128) {
        let t = k as f64 * h;
        let u = FRAC_PI_2 * t.sinh();
        let w = FRAC_PI_2 * t.cosh() / u.cosh().powi(2);
        let x = mid + half * u.tanh();
        if w < 1e-300 || x <= a || x >= b {
            continue;
        }
        sum += w * f(x);
    }
    sum * h * half
}

fn rmt_laws() -> Check {
    let mut worst: f64 = 0.0;
    for q in [0.1, 0.5, 1.0, 2.0, 4.0] {
        let p = MpParams::new(1.0, q).map_err(err)?;
        let mass = tanh_sinh(p.lambda_minus(), p.lambda_plus(), |l| {
            mp_density(l, &p).unwrap()
        });
        let dev = (mass - 1f64.min(1.0 / q)).abs();
        ensure(dev < 1e-4, || format!("MP mass q={q}: {mass}"))?;
        worst = worst.max(dev);
    }
    for (s2, q, want) in [
        (1.0, 1.0, (0.0, 4.0)),
        (1.0, 0.25, (0.25, 2.25)),
        (2.0, 1.0, (0.0, 8.0)),
        (1.0, 4.0, (1.0, 9.0)),
    ] {
        let got = mp_support(s2, q).map_err(err)?;
        ensure(got == want, || format!("support({s2}, {q}) = {got:?}"))?;
    }
    let mut wworst: f64 = 0.0;
    for s2 in [0.25, 1.0, 3.0] {
        let r = 2.0 * f64::sqrt(s2);
        let mass = tanh_sinh(-r, r, |l| wigner_density(l, s2).unwrap());
        ensure((mass - 1.0).abs() < 1e-4, || {
            format!("Wigner s2={s2}: {mass}")
        })?;
        wworst = wworst.max((mass - 1.0).abs());
    }
    Ok(format!(
        "MP mass max dev {worst:.1e}, support exact, Wigner max dev {wworst:.1e}"
    ))
}

fn gaussian_spectrum(n: usize, d: usize, seed: u64) -> Result<EigenSpectrum, String> {
    let x = spiked_sample(&SpikedModelSpec::noise(d, n, 1.0), seed).map_err(err)?;
    sample_covariance_spectrum(&x).map_err(err)
}

fn mp_fit() -> Check {
    let (n, d) = (2000, 500);
    let mut fitted = Vec::new();
    for seed in 0..10 {
        let s = gaussian_spectrum(n, d, seed)?;
        let p = fit_mp(&s, d as f64 / n as f64, 0.5, DEFAULT_FIT_BINS).map_err(err)?;
        fitted.push(p.sigma2());
    }
    let med = median(fitted.clone());
    ensure((med - 1.0).abs() <= 0.05, || {
        format!("median sigma2 {med:.4}, fits {}", fmt_list(&fitted, 4))
    })?;
    Ok(format!("median fitted sigma2 {med:.4} (truth 1, 10 seeds)"))
}

fn bbp() -> Check {
    let (d, n) = (200, 2000);
    let c = d as f64 / n as f64;
    let threshold = bbp_threshold(1.0, c).map_err(err)?;
    let ratios = [0.5, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3, 1.5, 2.0];
    let mut rates = Vec::new();
    for &r in &ratios {
        let mut hits = 0;
        for seed in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let spec =
                SpikedModelSpec::with_random_directions(d, n, 1.0, &[r * threshold], &mut rng)
                    .map_err(err)?;
            let x = spiked_sample(&spec, 10_000 + seed).map_err(err)?;
            let s = sample_covariance_spectrum(&x).map_err(err)?;
            let mp = fit_mp(&s, c, 0.5, DEFAULT_FIT_BINS).map_err(err)?;
            if s.largest().unwrap_or(0.0) > mp.lambda_plus() {
                hits += 1;
            }
        }
        rates.push(hits as f64 / 100.0);
    }
    let crossing = (1..ratios.len())
        .find(|&i| rates[i - 1] < 0.5 && rates[i] >= 0.5)
        .map(|i| {
            let t = (0.5 - rates[i - 1]) / (rates[i] - rates[i - 1]);
            ratios[i - 1] + t * (ratios[i] - ratios[i - 1])
        });
    let detail = format!(
        "rates at theta/theta_BBP {} = {}",
        fmt_list(&ratios, 1),
        fmt_list(&rates, 2)
    );
    match crossing {
        Some(x) if (0.9..=1.3).contains(&x) => Ok(format!("50% crossing at {x:.3}; {detail}")),
        Some(x) => Err(format!("50% crossing at {x:.3}; {detail}")),
        None => Err(format!("no 50% crossing; {detail}")),
    }
}

fn random_window(n: usize, d: usize, seed: u64) -> ActivationWindow {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..n * d).map(|_| rng.random_range(-2.0..2.0)).collect();
    ActivationWindow::new(data, n, d).unwrap()
}

/// Exponent `e` of each slot under `H -> a H`: the slot scales by `a^(2e)`.
const SCALE_EXPONENT: [i32; FEATURE_COUNT] = [
    0, 0, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 1, 1,
];

fn descriptors() -> Check {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9;
    let sp = |v: &[f64]| EigenSpectrum::from_values(v.to_vec()).unwrap();
    let mut trivial = 0;
    let mut expect = |ok: bool, what: &str| -> Result<(), String> {
        trivial += 1;
        ensure(ok, || format!("trivial example failed: {what}"))
    };
    expect(
        close(leading_sum(&sp(&[4.0, 3.0, 2.0, 1.0]), 2), 7.0),
        "leading sum",
    )?;
    expect(
        close(leading_sum(&sp(&[4.0, 3.0, 2.0, 1.0]), 5), 10.0),
        "leading sum k>len",
    )?;
    expect(
        close(spectral_entropy(&sp(&[2.0; 4])).map_err(err)?, 4f64.ln()),
        "uniform entropy",
    )?;
    expect(
        close(spectral_entropy(&sp(&[3.0, 0.0, 0.0])).map_err(err)?, 0.0),
        "rank-one entropy",
    )?;
    expect(
        gap_ratios(&sp(&[4.0, 2.0, 1.0]), 2) == vec![2.0, 2.0],
        "gap ratios",
    )?;
    expect(
        gap_ratios(&sp(&[5.0; 6]), 3) == vec![1.0; 3],
        "flat gap ratios",
    )?;
    expect(
        close(
            spectral_moments(&sp(&[1.0, 2.0, 3.0]))
                .map_err(err)?
                .skewness,
            0.0,
        ),
        "skewness",
    )?;
    let p = MpParams::new(1.0, 0.5).map_err(err)?;
    let qs: Vec<f64> = (1..=400)
        .map(|i| mp_quantile((i as f64 - 0.5) / 400.0, &p).unwrap())
        .collect();
    let qspec = EigenSpectrum::from_eigenvalues(qs, 800, 400).map_err(err)?;
    expect(
        wasserstein_to_mp(&qspec, &p).map_err(err)? < 1e-9,
        "W1 of quantile spectrum",
    )?;
    let id = eigenspectrum(&ActivationWindow::new(vec![1.0, 0.0, 0.0, 1.0], 2, 2).map_err(err)?)
        .map_err(err)?;
    expect(id.values() == [0.5, 0.5], "identity window spectrum")?;

    let mut worst_trace: f64 = 0.0;
    for (i, (n, d)) in [(8, 20), (32, 64), (40, 10), (16, 16)]
        .into_iter()
        .enumerate()
    {
        let w = random_window(n, d, i as u64);
        let fro2: f64 = w.data().iter().map(|v| v * v).sum();
        let s = eigenspectrum(&w).map_err(err)?;
        worst_trace = worst_trace.max((s.trace() - fro2 / n as f64).abs() / fro2);
    }
    ensure(worst_trace <= 1e-8, || {
        format!("trace rel err {worst_trace:e}")
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..500 {
        let m = rng.random_range(2..60);
        let mut v: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..50.0)).collect();
        v[0] += 0.01;
        let s = sp(&v);
        let h = spectral_entropy(&s).map_err(err)?;
        ensure(h >= 0.0 && h <= (m as f64).ln() + 1e-12, || {
            format!("entropy {h} for m={m}")
        })?;
        let p = MpParams::new(rng.random_range(0.05..10.0), rng.random_range(0.05..4.0))
            .map_err(err)?;
        let kl = kl_to_mp(&s, &p, rng.random_range(16..80)).map_err(err)?;
        let w1 = wasserstein_to_mp(&s, &p).map_err(err)?;
        ensure(kl >= 0.0 && w1 >= 0.0, || format!("KL {kl}, W1 {w1}"))?;
    }

    for (n, d, seed) in [(32, 64, 1u64), (40, 20, 2), (16, 16, 3)] {
        let w = random_window(n, d, seed);
        let base = descriptor_vector(&w, 64).map_err(err)?;
        for a in [2.0f64, 0.37, 5.5] {
            let scaled: Vec<f64> = w.data().iter().map(|x| a * x).collect();
            let v = descriptor_vector(&ActivationWindow::new(scaled, n, d).map_err(err)?, 64)
                .map_err(err)?;
            for i in 0..FEATURE_COUNT {
                let want = base.values[i] * (a * a).powi(SCALE_EXPONENT[i]);
                ensure(
                    (v.values[i] - want).abs() <= 1e-9 * (1.0 + want.abs()),
                    || format!("slot {} under a={a}: {} vs {want}", i + 1, v.values[i]),
                )?;
            }
        }
    }
    Ok(format!(
        "{trivial} trivial examples exact, trace rel err {worst_trace:.1e}, 500 random spectra \
         within entropy bounds with KL, W1 >= 0, scale table holds for 22 slots"
    ))
}

fn gradient_fidelity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for kind in CellKind::ALL {
        for hidden in [4, 16] {
            for len in [1, 5, 17] {
                let p = HeadParams::init(kind, hidden, 100 + len as u64).map_err(err)?;
                let series: Vec<Vec<f64>> = (0..len)
                    .map(|_| {
                        (0..FEATURE_COUNT)
                            .map(|_| rng.random_range(-2.0..2.0))
                            .collect()
                    })
                    .collect();
                let label = len % 2 == 1;
                let (_, g) = backward(&p, &series, label, LossReduction::FinalStep).map_err(err)?;
                let analytic = g.flatten();
                let base = p.flatten();
                let loss_at = |k: usize, value: f64| {
                    let mut q = p.clone();
                    let mut idx = k;
                    for t in q.tensors_mut() {
                        if idx < t.len() {
                            t[idx] = value;
                            break;
                        }
                        idx -= t.len();
                    }
                    let probs = head_forward(&q, &series).unwrap();
                    bce_loss(&probs, label, LossReduction::FinalStep).unwrap()
                };
                for k in 0..base.len() {
                    let fd = (loss_at(k, base[k] + 1e-5) - loss_at(k, base[k] - 1e-5)) / 2e-5;
                    let e = (fd - analytic[k]).abs() / fd.abs().max(analytic[k].abs()).max(1e-6);
                    worst = worst.max(e);
                }
                checked += base.len();
            }
        }
    }
    ensure(worst < 1e-4, || format!("worst rel err {worst:.2e}"))?;
    Ok(format!(
        "{checked} partials over 18 configurations, worst rel err {worst:.2e}"
    ))
}

fn relabel(data: &mut [LabeledSeries], seed: u64) {
    let mut labels: Vec<bool> = data.iter().map(|s| s.label).collect();
    labels.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    data.iter_mut().zip(labels).for_each(|(s, l)| s.label = l);
}

fn detection() -> Check {
    let spec = SequenceSpec::default();
    let window = WindowConfig::default();
    let (mut gru, mut vanilla, mut null) = (Vec::new(), Vec::new(), Vec::new());
    for seed in 0..5u64 {
        let train_set =
            synthetic_detection_set(400, &spec, &window, 1000 + seed, Positive::Structured)
                .map_err(err)?;
        let held_out =
            synthetic_detection_set(200, &spec, &window, 2000 + seed, Positive::Structured)
                .map_err(err)?;
        let cfg = |cell| TrainConfig {
            cell,
            seed,
            ..TrainConfig::default()
        };
        let g = train(&train_set, &cfg(CellKind::Gru)).map_err(err)?;
        gru.push(g.head.auroc(&held_out).map_err(err)?);
        let v = train(&train_set, &cfg(CellKind::Vanilla)).map_err(err)?;
        vanilla.push(v.head.auroc(&held_out).map_err(err)?);
        let (mut tr, mut ho) = (train_set, held_out);
        relabel(&mut tr, 3000 + seed);
        relabel(&mut ho, 4000 + seed);
        let n = train(&tr, &cfg(CellKind::Gru)).map_err(err)?;
        null.push(n.head.auroc(&ho).map_err(err)?);
    }
    let (mg, mv, mn) = (
        median(gru.clone()),
        median(vanilla.clone()),
        median(null.clone()),
    );
    let detail = format!(
        "held-out AUROC median GRU {mg:.4} {}, vanilla {mv:.4} {}, permuted-label null {mn:.4} {}",
        fmt_list(&gru, 3),
        fmt_list(&vanilla, 3),
        fmt_list(&null, 3)
    );
    if mg >= 0.90 && (0.35..=0.65).contains(&mn) && mg >= mv {
        Ok(detail)
    } else {
        Err(detail)
    }
}

struct KdRun {
    model: DenseNet,
    data: TaskData,
}

fn pretrained(seed: u64) -> Result<KdRun, String> {
    let data = GaussianMixtureTask::default().generate(seed).map_err(err)?;
    let cfg = FitConfig {
        epochs: 15,
        seed,
        ..FitConfig::default()
    };
    let model = pretrain(&[32, 256, 256, 256, 10], &data, &cfg).map_err(err)?;
    Ok(KdRun { model, data })
}

fn rmt_kd(runs: &mut Vec<KdRun>) -> Check {
    let (mut reductions, mut drops) = (Vec::new(), Vec::new());
    let mut worst_ortho: f64 = 0.0;
    for seed in 0..5u64 {
        let run = pretrained(seed)?;
        let plan = CompressionPlan {
            seed,
            ..CompressionPlan::default()
        };
        let (net, report) = rmtkd_schedule(&run.model, &run.data, &plan).map_err(err)?;
        let test = |n: &DenseNet| n.accuracy(&run.data.test.x, &run.data.test.labels);
        let before = test(&run.model).map_err(err)?;
        let after = test(&net).map_err(err)?;
        ensure(report.params_final == net.parameter_count(), || {
            "params_final mismatch".into()
        })?;
        ensure(report.params_initial == run.model.parameter_count(), || {
            "params_initial mismatch".into()
        })?;
        ensure(report.widths_final == net.widths(), || {
            "widths mismatch".into()
        })?;
        let mut chain = report.params_initial;
        for s in &report.stages {
            if s.status == StageStatus::Applied {
                ensure(
                    s.params_before == chain && s.params_after < s.params_before,
                    || format!("stage {} parameter chain broken", s.stage),
                )?;
                chain = s.params_after;
                worst_ortho = worst_ortho.max(s.orthonormality_error);
            }
        }
        ensure(chain == report.params_final, || {
            "stage chain does not end at params_final".into()
        })?;
        reductions.push(report.reduction_pct());
        drops.push(100.0 * (before - after));
        runs.push(run);
    }
    ensure(worst_ortho <= 1e-8, || {
        format!("orthonormality error {worst_ortho:e}")
    })?;
    let (mr, md) = (median(reductions.clone()), median(drops.clone()));
    let detail = format!(
        "median reduction {mr:.1}% {}, median test-accuracy drop {md:.2} points {}, \
         report arithmetic consistent, max |PP^T - I| {worst_ortho:.1e}",
        fmt_list(&reductions, 1),
        fmt_list(&drops, 2)
    );
    if mr >= 30.0 && md <= 2.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn sweep(runs: &mut Vec<KdRun>) -> Check {
    let taus = [0.0, 0.25, 0.45, 0.7, 0.9];
    let mut lines = Vec::new();
    let mut monotone = true;
    for seed in 0..3u64 {
        if runs.len() <= seed as usize {
            runs.push(pretrained(seed)?);
        }
        let run = &runs[seed as usize];
        let template = sweep_template(&CompressionPlan {
            seed,
            ..CompressionPlan::default()
        });
        let points = quantile_sweep(&run.model, &run.data, &taus, &template).map_err(err)?;
        let r: Vec<f64> = points.iter().map(|p| p.reduction_pct).collect();
        monotone &= r.windows(2).all(|w| w[1] >= w[0]);
        lines.push(format!("seed {seed}: {}", fmt_list(&r, 1)));
    }
    let detail = format!(
        "reduction % over tau {}: {}",
        fmt_list(&taus, 2),
        lines.join("; ")
    );
    if monotone {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn format_determinism() -> Check {
    let bin = env!("CARGO_BIN_EXE_spectral");
    let dir = tempfile::TempDir::new().map_err(err)?;
    let at = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let run = |args: &[String]| -> Result<Vec<u8>, String> {
        let out = Command::new(bin).args(args).output().map_err(err)?;
        ensure(out.status.success(), || {
            format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr))
        })?;
        Ok(out.stdout)
    };
    let files = |paths: &[String]| -> Result<Vec<Vec<u8>>, String> {
        paths
            .iter()
            .map(|p| std::fs::read(p).map_err(err))
            .collect()
    };
    let v = |s: &str| -> Vec<String> { s.split_whitespace().map(str::to_string).collect() };

    let (data, seq, frames) = (at("data"), at("seq.spac"), at("seq.frames"));
    let (head, metrics, model) = (at("h.sphd"), at("m.ndjson"), at("kd.spkd"));
    let small_kd = "--hidden-widths 24,24 --train-size 300 --validation-size 100 --test-size 100 \
                    --pretrain-epochs 2 --finetune-epochs 1 --max-recovery-rounds 0";
    let commands: Vec<(Vec<String>, Vec<String>)> = vec![
        (
            v(&format!(
                "gen-synth --kind structured --steps 40 --width 24 --seed 4 --out {seq}"
            )),
            vec![seq.clone()],
        ),
        (
            v(&format!(
                "gen-synth --kind spiked --theta 6,9 --steps 40 --width 24 --frames --out {frames}"
            )),
            vec![frames.clone()],
        ),
        (
            v(&format!(
                "gen-dataset --count 20 --steps 40 --width 24 --seed 3 --out {data}"
            )),
            (0..20).map(|i| format!("{data}/seq_{i:05}.spac")).collect(),
        ),
        (v("schema"), vec![]),
        (v(&format!("analyze --input {seq} --window 12")), vec![]),
        (
            v(&format!(
                "analyze --input {frames} --frames --window 12 --stride 2"
            )),
            vec![],
        ),
        (v(&format!("fit-mp --input {seq}")), vec![]),
        (v("tw-table --draws 500 --n 30 --d 20"), vec![]),
        (
            v(&format!(
                "train-head --data {data} --window 12 --epochs 3 --out {head} --metrics {metrics}"
            )),
            vec![head.clone(), metrics.clone()],
        ),
        (
            v(&format!("score --head {head} --input {seq} --window 12")),
            vec![],
        ),
        (
            v(&format!("score --head {head} --data {data} --window 12")),
            vec![],
        ),
        (
            v(&format!(
                "monitor --head {head} --input {frames} --window 12 --tau 0.01"
            )),
            vec![],
        ),
        (
            v(&format!("compress {small_kd} --out-model {model}")),
            vec![model.clone()],
        ),
        (
            v(&format!("sweep-quantile {small_kd} --taus 0.2,0.8")),
            vec![],
        ),
    ];
    for (args, outputs) in &commands {
        let first = run(args)?;
        let written = files(outputs)?;
        ensure(first == run(args)?, || {
            format!("stdout differs on rerun: {args:?}")
        })?;
        ensure(written == files(outputs)?, || {
            format!("files differ on rerun: {args:?}")
        })?;
    }

    let bytes = std::fs::read(&seq).map_err(err)?;
    let parsed = ActivationContainer::from_bytes(&bytes).map_err(err)?;
    ensure(parsed.to_bytes() == bytes, || {
        "container re-encode differs".into()
    })?;
    let fresh = generate_sequence(
        &SequenceSpec {
            steps: 40,
            width: 24,
            ..SequenceSpec::default()
        },
        SequenceKind::Structured,
        4,
    )
    .map_err(err)?;
    ensure(fresh == parsed, || {
        "library and CLI containers differ".into()
    })?;
    ensure(bytes.len() == 16 + 40 * 24 * 4, || {
        format!("container size {}", bytes.len())
    })?;
    Ok(format!(
        "{} commands byte-identical on rerun, container round trip exact",
        commands.len()
    ))
}

fn main() {
    let filters: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let selected =
        |name: &str| filters.is_empty() || filters.iter().any(|f| name.contains(f.as_str()));
    let mut runs = Vec::new();
    let mut failed = 0;
    let mut report = |name: &str, budget: Option<Duration>, f: &mut dyn FnMut() -> Check| {
        if !selected(name) {
            return;
        }
        let start = Instant::now();
        let result = f();
        let elapsed = start.elapsed();
        let (ok, detail) = match result {
            Ok(d) => match budget {
                Some(b) if elapsed > b => (false, format!("{d}; over the {}s budget", b.as_secs())),
                _ => (true, d),
            },
            Err(d) => (false, d),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} {name} ({:.1}s): {detail}",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    };
    let secs = |s| Some(Duration::from_secs(s));
    report("rmt-laws", secs(5), &mut rmt_laws);
    report("mp-fit", secs(30), &mut mp_fit);
    report("bbp-transition", secs(120), &mut bbp);
    report("descriptors", None, &mut descriptors);
    report("gradient-fidelity", secs(60), &mut gradient_fidelity);
    report("synthetic-detection", secs(300), &mut detection);
    report("rmt-kd", secs(600), &mut || rmt_kd(&mut runs));
    report("quantile-sweep", secs(1200), &mut || sweep(&mut runs));
    report("format-determinism", None, &mut format_determinism);
    if failed > 0 {
        std::process::exit(1);
    }
}
