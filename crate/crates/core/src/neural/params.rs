//! Parameter tensors of the recurrent language model.
//!
//! Gate matrices act on the concatenation `[x_s, h_{s-1}]` and are stored
//! input-major, `(embed_dim + hidden_dim) × hidden_dim`, so a batch of row
//! vectors is multiplied as `z · W`.

use ndarray::{Array1, Array2};
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CellKind, NeuralConfig};

/// Half-width of the uniform embedding initializer.
pub const EMBEDDING_INIT: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub w_i: Array2<f64>,
    pub w_f: Array2<f64>,
    pub w_o: Array2<f64>,
    pub w_q: Array2<f64>,
    pub b_i: Array1<f64>,
    pub b_f: Array1<f64>,
    pub b_o: Array1<f64>,
    pub b_q: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GruParams {
    pub w_r: Array2<f64>,
    pub w_u: Array2<f64>,
    pub w_c: Array2<f64>,
    pub b_r: Array1<f64>,
    pub b_u: Array1<f64>,
    pub b_c: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellParams {
    Lstm(LstmParams),
    Gru(GruParams),
}

/// Every trainable tensor. Gradients use the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    pub embeddings: Array2<f64>,
    pub cell: CellParams,
    pub ff_w: Array2<f64>,
    pub ff_b: Array1<f64>,
    pub out_w: Array2<f64>,
    pub out_b: Array1<f64>,
}

impl Parameters {
    pub fn zeros(config: &NeuralConfig, vocab_size: usize) -> Self {
        let (d, h, f) = (config.embed_dim, config.hidden_dim, config.ff_dim);
        let gate = || Array2::zeros((d + h, h));
        let bias = || Array1::zeros(h);
        let cell = match config.cell {
            CellKind::Lstm => CellParams::Lstm(LstmParams {
                w_i: gate(),
                w_f: gate(),
                w_o: gate(),
                w_q: gate(),
                b_i: bias(),
                b_f: bias(),
                b_o: bias(),
                b_q: bias(),
            }),
            CellKind::Gru => CellParams::Gru(GruParams {
                w_r: gate(),
                w_u: gate(),
                w_c: gate(),
                b_r: bias(),
                b_u: bias(),
                b_c: bias(),
            }),
        };
        Self {
            embeddings: Array2::zeros((vocab_size, d)),
            cell,
            ff_w: Array2::zeros((h, f)),
            ff_b: Array1::zeros(f),
            out_w: Array2::zeros((f, vocab_size)),
            out_b: Array1::zeros(vocab_size),
        }
    }

    /// Uniform embeddings, Glorot-uniform weight matrices, zero biases.
    pub fn init(config: &NeuralConfig, vocab_size: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = Self::zeros(config, vocab_size);
        let emb = Uniform::new_inclusive(-EMBEDDING_INIT, EMBEDDING_INIT).expect("valid range");
        p.embeddings.mapv_inplace(|_| emb.sample(&mut rng));
        let mut glorot = |w: &mut Array2<f64>| {
            let (fan_in, fan_out) = w.dim();
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let dist = Uniform::new_inclusive(-limit, limit).expect("valid range");
            w.mapv_inplace(|_| dist.sample(&mut rng));
        };
        match &mut p.cell {
            CellParams::Lstm(c) => {
                for w in [&mut c.w_i, &mut c.w_f, &mut c.w_o, &mut c.w_q] {
                    glorot(w);
                }
            }
            CellParams::Gru(c) => {
                for w in [&mut c.w_r, &mut c.w_u, &mut c.w_c] {
                    glorot(w);
                }
            }
        }
        glorot(&mut p.ff_w);
        glorot(&mut p.out_w);
        p
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.1.fill(0.0);
        }
        z
    }

    /// Named flat views in the canonical (serialization) order.
    pub fn tensors(&self) -> Vec<(&'static str, &[f64])> {
        fn flat2(a: &Array2<f64>) -> &[f64] {
            a.as_slice().expect("standard layout")
        }
        fn flat1(a: &Array1<f64>) -> &[f64] {
            a.as_slice().expect("standard layout")
        }
        let mut out = vec![("embeddings", flat2(&self.embeddings))];
        match &self.cell {
            CellParams::Lstm(c) => out.extend([
                ("w_i", flat2(&c.w_i)),
                ("w_f", flat2(&c.w_f)),
                ("w_o", flat2(&c.w_o)),
                ("w_q", flat2(&c.w_q)),
                ("b_i", flat1(&c.b_i)),
                ("b_f", flat1(&c.b_f)),
                ("b_o", flat1(&c.b_o)),
                ("b_q", flat1(&c.b_q)),
            ]),
            CellParams::Gru(c) => out.extend([
                ("w_r", flat2(&c.w_r)),
                ("w_u", flat2(&c.w_u)),
                ("w_c", flat2(&c.w_c)),
                ("b_r", flat1(&c.b_r)),
                ("b_u", flat1(&c.b_u)),
                ("b_c", flat1(&c.b_c)),
            ]),
        }
        out.extend([
            ("ff_w", flat2(&self.ff_w)),
            ("ff_b", flat1(&self.ff_b)),
            ("out_w", flat2(&self.out_w)),
            ("out_b", flat1(&self.out_b)),
        ]);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        fn flat2(a: &mut Array2<f64>) -> &mut [f64] {
            a.as_slice_mut().expect("standard layout")
        }
        fn flat1(a: &mut Array1<f64>) -> &mut [f64] {
            a.as_slice_mut().expect("standard layout")
        }
        let mut out = vec![("embeddings", flat2(&mut self.embeddings))];
        match &mut self.cell {
            CellParams::Lstm(c) => out.extend([
                ("w_i", flat2(&mut c.w_i)),
                ("w_f", flat2(&mut c.w_f)),
                ("w_o", flat2(&mut c.w_o)),
                ("w_q", flat2(&mut c.w_q)),
                ("b_i", flat1(&mut c.b_i)),
                ("b_f", flat1(&mut c.b_f)),
                ("b_o", flat1(&mut c.b_o)),
                ("b_q", flat1(&mut c.b_q)),
            ]),
            CellParams::Gru(c) => out.extend([
                ("w_r", flat2(&mut c.w_r)),
                ("w_u", flat2(&mut c.w_u)),
                ("w_c", flat2(&mut c.w_c)),
                ("b_r", flat1(&mut c.b_r)),
                ("b_u", flat1(&mut c.b_u)),
                ("b_c", flat1(&mut c.b_c)),
            ]),
        }
        out.extend([
            ("ff_w", flat2(&mut self.ff_w)),
            ("ff_b", flat1(&mut self.ff_b)),
            ("out_w", flat2(&mut self.out_w)),
            ("out_b", flat1(&mut self.out_b)),
        ]);
        out
    }

    pub fn count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    /// Number of gate weight matrices in the recurrent cell.
    pub fn gate_matrices(&self) -> usize {
        match self.cell {
            CellParams::Lstm(_) => 4,
            CellParams::Gru(_) => 3,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }
}
