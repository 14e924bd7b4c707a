//! Batched LSTM and GRU cells unrolled over a fixed window, with
//! backpropagation through time.
//!
//! LSTM:
//!   i = σ(z·W_i + b_i), f = σ(z·W_f + b_f), o = σ(z·W_o + b_o),
//!   q = tanh(z·W_q + b_q), c = f⊙c' + i⊙q, h = o⊙tanh(c), with z = [x, h'].
//!
//! GRU:
//!   r = σ(z·W_r + b_r), u = σ(z·W_u + b_u),
//!   c = tanh([x, r⊙h']·W_c + b_c), h = u⊙h' + (1−u)⊙c.

use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};

use super::params::{CellParams, GruParams, LstmParams};

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn affine(z: &Array2<f64>, w: &Array2<f64>, b: &Array1<f64>) -> Array2<f64> {
    let mut a = z.dot(w);
    a += b;
    a
}

fn join(x: &Array2<f64>, h: &Array2<f64>) -> Array2<f64> {
    concatenate![Axis(1), x.view(), h.view()]
}

pub(crate) struct LstmStep {
    z: Array2<f64>,
    i: Array2<f64>,
    f: Array2<f64>,
    o: Array2<f64>,
    q: Array2<f64>,
    c_prev: Array2<f64>,
    tanh_c: Array2<f64>,
}

pub(crate) struct GruStep {
    z: Array2<f64>,
    zc: Array2<f64>,
    h_prev: Array2<f64>,
    r: Array2<f64>,
    u: Array2<f64>,
    c: Array2<f64>,
}

pub(crate) enum CellCache {
    Lstm(Vec<LstmStep>),
    Gru(Vec<GruStep>),
}

/// Runs the cell over `xs` (one `batch × embed_dim` matrix per time step)
/// from zero state and returns the final hidden state.
pub(crate) fn forward(params: &CellParams, xs: &[Array2<f64>], keep: bool) -> (Array2<f64>, Option<CellCache>) {
    match params {
        CellParams::Lstm(p) => {
            let (h, steps) = lstm_forward(p, xs, keep);
            (h, keep.then_some(CellCache::Lstm(steps)))
        }
        CellParams::Gru(p) => {
            let (h, steps) = gru_forward(p, xs, keep);
            (h, keep.then_some(CellCache::Gru(steps)))
        }
    }
}

fn lstm_forward(p: &LstmParams, xs: &[Array2<f64>], keep: bool) -> (Array2<f64>, Vec<LstmStep>) {
    let batch = xs[0].nrows();
    let hidden = p.b_i.len();
    let mut h = Array2::zeros((batch, hidden));
    let mut c = Array2::zeros((batch, hidden));
    let mut steps = Vec::new();
    for x in xs {
        let z = join(x, &h);
        let i = affine(&z, &p.w_i, &p.b_i).mapv_into(sigmoid);
        let f = affine(&z, &p.w_f, &p.b_f).mapv_into(sigmoid);
        let o = affine(&z, &p.w_o, &p.b_o).mapv_into(sigmoid);
        let q = affine(&z, &p.w_q, &p.b_q).mapv_into(f64::tanh);
        let c_next = &f * &c + &i * &q;
        let tanh_c = c_next.mapv(f64::tanh);
        h = &o * &tanh_c;
        let c_prev = std::mem::replace(&mut c, c_next);
        if keep {
            steps.push(LstmStep {
                z,
                i,
                f,
                o,
                q,
                c_prev,
                tanh_c,
            });
        }
    }
    (h, steps)
}

fn gru_forward(p: &GruParams, xs: &[Array2<f64>], keep: bool) -> (Array2<f64>, Vec<GruStep>) {
    let batch = xs[0].nrows();
    let hidden = p.b_r.len();
    let mut h = Array2::zeros((batch, hidden));
    let mut steps = Vec::new();
    for x in xs {
        let z = join(x, &h);
        let r = affine(&z, &p.w_r, &p.b_r).mapv_into(sigmoid);
        let u = affine(&z, &p.w_u, &p.b_u).mapv_into(sigmoid);
        let zc = join(x, &(&r * &h));
        let c = affine(&zc, &p.w_c, &p.b_c).mapv_into(f64::tanh);
        let h_next = &u * &h + &(1.0 - &u) * &c;
        let h_prev = std::mem::replace(&mut h, h_next);
        if keep {
            steps.push(GruStep { z, zc, h_prev, r, u, c });
        }
    }
    (h, steps)
}

/// Accumulates `z^T · delta` into `dw` and column sums into `db`.
fn accumulate(dw: &mut Array2<f64>, db: &mut Array1<f64>, z: &Array2<f64>, delta: &Array2<f64>) {
    *dw += &z.t().dot(delta);
    *db += &delta.sum_axis(Axis(0));
}

fn split(dz: &Array2<f64>, embed: usize) -> (ArrayView2<'_, f64>, ArrayView2<'_, f64>) {
    (dz.slice(s![.., ..embed]), dz.slice(s![.., embed..]))
}

/// Backpropagates `dh_last` through the unrolled window. Parameter gradients
/// are added to `grad`; the per-step input gradients are returned.
pub(crate) fn backward(
    params: &CellParams,
    cache: &CellCache,
    dh_last: Array2<f64>,
    grad: &mut CellParams,
) -> Vec<Array2<f64>> {
    match (params, cache, grad) {
        (CellParams::Lstm(p), CellCache::Lstm(steps), CellParams::Lstm(g)) => lstm_backward(p, steps, dh_last, g),
        (CellParams::Gru(p), CellCache::Gru(steps), CellParams::Gru(g)) => gru_backward(p, steps, dh_last, g),
        _ => unreachable!("cell kinds of parameters, cache and gradient agree"),
    }
}

fn lstm_backward(p: &LstmParams, steps: &[LstmStep], mut dh: Array2<f64>, g: &mut LstmParams) -> Vec<Array2<f64>> {
    let embed = p.w_i.nrows() - p.b_i.len();
    let mut dc = Array2::<f64>::zeros(dh.raw_dim());
    let mut dxs = vec![Array2::zeros((0, 0)); steps.len()];
    for (t, st) in steps.iter().enumerate().rev() {
        let d_o = &dh * &st.tanh_c;
        dc += &(&dh * &st.o * &st.tanh_c.mapv(|v| 1.0 - v * v));
        let d_i = &dc * &st.q;
        let d_q = &dc * &st.i;
        let d_f = &dc * &st.c_prev;
        dc *= &st.f;

        let da_i = d_i * &st.i.mapv(|v| v * (1.0 - v));
        let da_f = d_f * &st.f.mapv(|v| v * (1.0 - v));
        let da_o = d_o * &st.o.mapv(|v| v * (1.0 - v));
        let da_q = d_q * &st.q.mapv(|v| 1.0 - v * v);

        accumulate(&mut g.w_i, &mut g.b_i, &st.z, &da_i);
        accumulate(&mut g.w_f, &mut g.b_f, &st.z, &da_f);
        accumulate(&mut g.w_o, &mut g.b_o, &st.z, &da_o);
        accumulate(&mut g.w_q, &mut g.b_q, &st.z, &da_q);

        let dz = da_i.dot(&p.w_i.t()) + da_f.dot(&p.w_f.t()) + da_o.dot(&p.w_o.t()) + da_q.dot(&p.w_q.t());
        let (dx, dh_prev) = split(&dz, embed);
        dxs[t] = dx.to_owned();
        dh = dh_prev.to_owned();
    }
    dxs
}

fn gru_backward(p: &GruParams, steps: &[GruStep], mut dh: Array2<f64>, g: &mut GruParams) -> Vec<Array2<f64>> {
    let embed = p.w_r.nrows() - p.b_r.len();
    let mut dxs = vec![Array2::zeros((0, 0)); steps.len()];
    for (t, st) in steps.iter().enumerate().rev() {
        let du = &dh * &(&st.h_prev - &st.c);
        let d_c = &dh * &(1.0 - &st.u);
        let mut dh_prev = &dh * &st.u;

        let da_c = d_c * &st.c.mapv(|v| 1.0 - v * v);
        accumulate(&mut g.w_c, &mut g.b_c, &st.zc, &da_c);
        let dzc = da_c.dot(&p.w_c.t());
        let (dx_c, d_rh) = split(&dzc, embed);
        let dr = &d_rh * &st.h_prev;
        dh_prev += &(&d_rh * &st.r);

        let da_u = du * &st.u.mapv(|v| v * (1.0 - v));
        let da_r = dr * &st.r.mapv(|v| v * (1.0 - v));
        accumulate(&mut g.w_u, &mut g.b_u, &st.z, &da_u);
        accumulate(&mut g.w_r, &mut g.b_r, &st.z, &da_r);
        let dz = da_u.dot(&p.w_u.t()) + da_r.dot(&p.w_r.t());
        let (dx_g, dh_g) = split(&dz, embed);

        dxs[t] = &dx_c + &dx_g;
        dh = dh_prev + dh_g;
    }
    dxs
}
