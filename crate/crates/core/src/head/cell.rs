//! Forward pass, loss and backpropagation through time.

use super::params::{CellKind, Gate, HeadParams};
use crate::error::{Error, Result};

pub const PROB_CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LossReduction {
    /// BCE of the last step only.
    #[default]
    FinalStep,
    /// BCE averaged over every step.
    MeanOverSteps,
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `out = m x + out`, `m` is `rows x x.len()` row-major.
fn gemv_acc(out: &mut [f64], m: &[f64], x: &[f64]) {
    let cols = x.len();
    for (o, row) in out.iter_mut().zip(m.chunks_exact(cols)) {
        *o += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// `out += m^T y`.
fn gemv_t_acc(out: &mut [f64], m: &[f64], y: &[f64]) {
    let cols = out.len();
    for (yi, row) in y.iter().zip(m.chunks_exact(cols)) {
        if *yi != 0.0 {
            out.iter_mut().zip(row).for_each(|(o, a)| *o += yi * a);
        }
    }
}

/// `m += y x^T`.
fn ger(m: &mut [f64], y: &[f64], x: &[f64]) {
    let cols = x.len();
    for (yi, row) in y.iter().zip(m.chunks_exact_mut(cols)) {
        if *yi != 0.0 {
            row.iter_mut().zip(x).for_each(|(a, b)| *a += yi * b);
        }
    }
}

/// Pre-activation `W f + U h + b` of one gate.
fn preact(g: &Gate, f: &[f64], h: &[f64]) -> Vec<f64> {
    let mut a = g.b.clone();
    gemv_acc(&mut a, &g.w, f);
    gemv_acc(&mut a, &g.u, h);
    a
}

/// Recurrent state; `c` is empty except for LSTM cells.
#[derive(Debug, Clone, PartialEq)]
pub struct CellState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl CellState {
    pub fn zeros(kind: CellKind, hidden: usize) -> Self {
        Self {
            h: vec![0.0; hidden],
            c: if kind == CellKind::Lstm {
                vec![0.0; hidden]
            } else {
                Vec::new()
            },
        }
    }
}

/// Everything backward needs from one step.
#[derive(Debug, Clone)]
struct StepCache {
    f: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    /// Post-nonlinearity gate values in gate order.
    gates: Vec<Vec<f64>>,
    /// GRU: `r * h_prev`. LSTM: `tanh(c)`.
    aux: Vec<f64>,
    h: Vec<f64>,
}

fn step_cached(p: &HeadParams, f: &[f64], state: &CellState) -> Result<(CellState, StepCache)> {
    let h = p.hidden();
    if f.len() != h || state.h.len() != h {
        return Err(Error::ShapeMismatch {
            context: "cell input",
            expected: h,
            actual: if f.len() != h { f.len() } else { state.h.len() },
        });
    }
    let hp = &state.h;
    let (new, gates, aux) = match p.kind() {
        CellKind::Vanilla => {
            let a: Vec<f64> = preact(&p.gates[0], f, hp)
                .into_iter()
                .map(f64::tanh)
                .collect();
            (
                CellState {
                    h: a.clone(),
                    c: Vec::new(),
                },
                vec![a],
                Vec::new(),
            )
        }
        CellKind::Gru => {
            let r: Vec<f64> = preact(&p.gates[0], f, hp)
                .into_iter()
                .map(sigmoid)
                .collect();
            let z: Vec<f64> = preact(&p.gates[1], f, hp)
                .into_iter()
                .map(sigmoid)
                .collect();
            let rh: Vec<f64> = r.iter().zip(hp).map(|(a, b)| a * b).collect();
            let cand: Vec<f64> = preact(&p.gates[2], f, &rh)
                .into_iter()
                .map(f64::tanh)
                .collect();
            let hn: Vec<f64> = (0..h)
                .map(|j| (1.0 - z[j]) * hp[j] + z[j] * cand[j])
                .collect();
            (
                CellState {
                    h: hn,
                    c: Vec::new(),
                },
                vec![r, z, cand],
                rh,
            )
        }
        CellKind::Lstm => {
            if state.c.len() != h {
                return Err(Error::ShapeMismatch {
                    context: "lstm cell state",
                    expected: h,
                    actual: state.c.len(),
                });
            }
            let i: Vec<f64> = preact(&p.gates[0], f, hp)
                .into_iter()
                .map(sigmoid)
                .collect();
            let fg: Vec<f64> = preact(&p.gates[1], f, hp)
                .into_iter()
                .map(sigmoid)
                .collect();
            let o: Vec<f64> = preact(&p.gates[2], f, hp)
                .into_iter()
                .map(sigmoid)
                .collect();
            let g: Vec<f64> = preact(&p.gates[3], f, hp)
                .into_iter()
                .map(f64::tanh)
                .collect();
            let c: Vec<f64> = (0..h).map(|j| fg[j] * state.c[j] + i[j] * g[j]).collect();
            let tc: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
            let hn: Vec<f64> = (0..h).map(|j| o[j] * tc[j]).collect();
            (CellState { h: hn, c }, vec![i, fg, o, g], tc)
        }
    };
    let cache = StepCache {
        f: f.to_vec(),
        h_prev: state.h.clone(),
        c_prev: state.c.clone(),
        gates,
        aux,
        h: new.h.clone(),
    };
    Ok((new, cache))
}

/// One recurrent update from a projected input `f`.
pub fn cell_step(p: &HeadParams, f: &[f64], state: &CellState) -> Result<CellState> {
    step_cached(p, f, state).map(|(s, _)| s)
}

/// Linear input projection of one descriptor.
pub fn project(p: &HeadParams, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != p.input() {
        return Err(Error::ShapeMismatch {
            context: "head input",
            expected: p.input(),
            actual: x.len(),
        });
    }
    let mut f = p.proj_b.clone();
    gemv_acc(&mut f, &p.proj_w, x);
    Ok(f)
}

fn output_logit(p: &HeadParams, h: &[f64]) -> f64 {
    p.out_b[0] + p.out_w.iter().zip(h).map(|(a, b)| a * b).sum::<f64>()
}

/// `sigmoid(W h + b)` of the output head.
pub fn output_probability(p: &HeadParams, h: &[f64]) -> f64 {
    sigmoid(output_logit(p, h))
}

/// Per-step anomaly probabilities, starting from a zero state.
pub fn head_forward<S: AsRef<[f64]>>(p: &HeadParams, series: &[S]) -> Result<Vec<f64>> {
    if series.is_empty() {
        return Err(Error::Empty("descriptor series"));
    }
    let mut state = CellState::zeros(p.kind(), p.hidden());
    let mut out = Vec::with_capacity(series.len());
    for x in series {
        let f = project(p, x.as_ref())?;
        state = cell_step(p, &f, &state)?;
        out.push(output_probability(p, &state.h));
    }
    Ok(out)
}

fn bce(prob: f64, label: bool) -> f64 {
    let p = prob.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    if label {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Derivative of `bce(sigmoid(logit))` with respect to the logit; zero
/// where the clamp is active.
fn bce_logit_grad(prob: f64, label: bool) -> f64 {
    if !(PROB_CLAMP..=1.0 - PROB_CLAMP).contains(&prob) {
        return 0.0;
    }
    prob - if label { 1.0 } else { 0.0 }
}

pub fn bce_loss(probs: &[f64], label: bool, reduction: LossReduction) -> Result<f64> {
    let last = *probs.last().ok_or(Error::Empty("probability sequence"))?;
    Ok(match reduction {
        LossReduction::FinalStep => bce(last, label),
        LossReduction::MeanOverSteps => {
            probs.iter().map(|&p| bce(p, label)).sum::<f64>() / probs.len() as f64
        }
    })
}

/// Loss of one labelled series and its exact gradient, accumulated into
/// `grads` (which must have the same shape as `p`).
pub fn backward_into<S: AsRef<[f64]>>(
    p: &HeadParams,
    series: &[S],
    label: bool,
    reduction: LossReduction,
    grads: &mut HeadParams,
) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::Empty("descriptor series"));
    }
    let hd = p.hidden();
    let steps = series.len();
    let mut state = CellState::zeros(p.kind(), hd);
    let mut caches = Vec::with_capacity(steps);
    let mut probs = Vec::with_capacity(steps);
    for x in series {
        let f = project(p, x.as_ref())?;
        let (next, cache) = step_cached(p, &f, &state)?;
        probs.push(sigmoid(output_logit(p, &next.h)));
        caches.push(cache);
        state = next;
    }
    let loss = bce_loss(&probs, label, reduction)?;

    let dlogit: Vec<f64> = match reduction {
        LossReduction::FinalStep => {
            let mut v = vec![0.0; steps];
            v[steps - 1] = bce_logit_grad(probs[steps - 1], label);
            v
        }
        LossReduction::MeanOverSteps => probs
            .iter()
            .map(|&q| bce_logit_grad(q, label) / steps as f64)
            .collect(),
    };

    let mut dh_next = vec![0.0; hd];
    let mut dc_next = vec![0.0; hd];
    for t in (0..steps).rev() {
        let cache = &caches[t];
        let mut dh = std::mem::take(&mut dh_next);
        if dlogit[t] != 0.0 {
            grads.out_b[0] += dlogit[t];
            grads
                .out_w
                .iter_mut()
                .zip(&cache.h)
                .for_each(|(g, h)| *g += dlogit[t] * h);
            dh.iter_mut()
                .zip(&p.out_w)
                .for_each(|(d, w)| *d += dlogit[t] * w);
        }
        let mut df = vec![0.0; hd];
        let mut dh_prev = vec![0.0; hd];
        let mut dc_prev = Vec::new();
        let mut gate_back =
            |gi: usize, da: &[f64], rec_in: &[f64], dh_acc: &mut [f64], df: &mut [f64]| {
                let (pg, gg) = (&p.gates[gi], &mut grads.gates[gi]);
                ger(&mut gg.w, da, &cache.f);
                ger(&mut gg.u, da, rec_in);
                gg.b.iter_mut().zip(da).for_each(|(g, d)| *g += d);
                gemv_t_acc(df, &pg.w, da);
                gemv_t_acc(dh_acc, &pg.u, da);
            };
        match p.kind() {
            CellKind::Vanilla => {
                let a = &cache.gates[0];
                let da: Vec<f64> = (0..hd).map(|j| dh[j] * (1.0 - a[j] * a[j])).collect();
                gate_back(0, &da, &cache.h_prev, &mut dh_prev, &mut df);
            }
            CellKind::Gru => {
                let (r, z, cand) = (&cache.gates[0], &cache.gates[1], &cache.gates[2]);
                let hp = &cache.h_prev;
                for j in 0..hd {
                    dh_prev[j] = dh[j] * (1.0 - z[j]);
                }
                let da_h: Vec<f64> = (0..hd)
                    .map(|j| dh[j] * z[j] * (1.0 - cand[j] * cand[j]))
                    .collect();
                let mut drh = vec![0.0; hd];
                gate_back(2, &da_h, &cache.aux, &mut drh, &mut df);
                for j in 0..hd {
                    dh_prev[j] += drh[j] * r[j];
                }
                let da_z: Vec<f64> = (0..hd)
                    .map(|j| dh[j] * (cand[j] - hp[j]) * z[j] * (1.0 - z[j]))
                    .collect();
                gate_back(1, &da_z, hp, &mut dh_prev, &mut df);
                let da_r: Vec<f64> = (0..hd)
                    .map(|j| drh[j] * hp[j] * r[j] * (1.0 - r[j]))
                    .collect();
                gate_back(0, &da_r, hp, &mut dh_prev, &mut df);
            }
            CellKind::Lstm => {
                let (i, fg, o, g) = (
                    &cache.gates[0],
                    &cache.gates[1],
                    &cache.gates[2],
                    &cache.gates[3],
                );
                let tc = &cache.aux;
                let dc: Vec<f64> = (0..hd)
                    .map(|j| dc_next[j] + dh[j] * o[j] * (1.0 - tc[j] * tc[j]))
                    .collect();
                let da_i: Vec<f64> = (0..hd)
                    .map(|j| dc[j] * g[j] * i[j] * (1.0 - i[j]))
                    .collect();
                let da_f: Vec<f64> = (0..hd)
                    .map(|j| dc[j] * cache.c_prev[j] * fg[j] * (1.0 - fg[j]))
                    .collect();
                let da_o: Vec<f64> = (0..hd)
                    .map(|j| dh[j] * tc[j] * o[j] * (1.0 - o[j]))
                    .collect();
                let da_g: Vec<f64> = (0..hd)
                    .map(|j| dc[j] * i[j] * (1.0 - g[j] * g[j]))
                    .collect();
                let hp = &cache.h_prev;
                gate_back(0, &da_i, hp, &mut dh_prev, &mut df);
                gate_back(1, &da_f, hp, &mut dh_prev, &mut df);
                gate_back(2, &da_o, hp, &mut dh_prev, &mut df);
                gate_back(3, &da_g, hp, &mut dh_prev, &mut df);
                dc_prev = (0..hd).map(|j| dc[j] * fg[j]).collect();
            }
        }
        grads.proj_b.iter_mut().zip(&df).for_each(|(g, d)| *g += d);
        ger(&mut grads.proj_w, &df, series[t].as_ref());
        dh_next = dh_prev;
        if p.kind() == CellKind::Lstm {
            dc_next = dc_prev;
        }
    }
    Ok(loss)
}

/// Loss and gradient of one labelled series.
pub fn backward<S: AsRef<[f64]>>(
    p: &HeadParams,
    series: &[S],
    label: bool,
    reduction: LossReduction,
) -> Result<(f64, HeadParams)> {
    let mut grads = p.zeros_like();
    let loss = backward_into(p, series, label, reduction, &mut grads)?;
    Ok((loss, grads))
}
