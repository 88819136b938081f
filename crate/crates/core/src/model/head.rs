//! Scoring heads over a `rows × cols` input matrix, each ending in a single
//! logit. Parameters live in one flat vector; gradients are hand-derived.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::encoder::Unit;
use crate::error::{Error, Result};
use crate::rng::{seeded, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadKind {
    FcOnly,
    Cnn,
    Lstm,
}

impl std::fmt::Display for HeadKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            HeadKind::FcOnly => "fc_only",
            HeadKind::Cnn => "cnn",
            HeadKind::Lstm => "lstm",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeadConfig {
    pub kind: HeadKind,
    #[serde(default = "defaults::fc_hidden")]
    pub fc_hidden: usize,
    #[serde(default = "defaults::cnn_filters")]
    pub cnn_filters: usize,
    #[serde(default = "defaults::cnn_kernel_rows")]
    pub cnn_kernel_rows: usize,
    #[serde(default = "defaults::lstm_units")]
    pub lstm_units: usize,
}

mod defaults {
    pub fn fc_hidden() -> usize {
        128
    }
    pub fn cnn_filters() -> usize {
        128
    }
    pub fn cnn_kernel_rows() -> usize {
        5
    }
    pub fn lstm_units() -> usize {
        128
    }
}

impl HeadConfig {
    pub fn new(kind: HeadKind) -> Self {
        Self {
            kind,
            fc_hidden: defaults::fc_hidden(),
            cnn_filters: defaults::cnn_filters(),
            cnn_kernel_rows: defaults::cnn_kernel_rows(),
            lstm_units: defaults::lstm_units(),
        }
    }

    /// Default sizes, with 25 LSTM units for word rows and 128 otherwise.
    pub fn for_unit(kind: HeadKind, unit: Unit) -> Self {
        let mut c = Self::new(kind);
        if unit == Unit::Word {
            c.lstm_units = 25;
        }
        c
    }

    pub fn validate(&self, rows: usize, cols: usize) -> Result<()> {
        if rows == 0 || cols == 0 {
            return Err(Error::Config(format!("empty input shape {rows}x{cols}")));
        }
        let size = match self.kind {
            HeadKind::FcOnly => self.fc_hidden,
            HeadKind::Cnn => self.cnn_filters.min(self.cnn_kernel_rows),
            HeadKind::Lstm => self.lstm_units,
        };
        if size == 0 {
            return Err(Error::Config(format!("{} head sizes must be positive", self.kind)));
        }
        if self.kind == HeadKind::Cnn && self.cnn_kernel_rows > rows {
            return Err(Error::Config(format!(
                "kernel of {} rows exceeds the {rows} input rows",
                self.cnn_kernel_rows
            )));
        }
        Ok(())
    }

    pub fn param_count(&self, rows: usize, cols: usize) -> usize {
        match self.kind {
            HeadKind::FcOnly => {
                let h = self.fc_hidden;
                h * rows * cols + 2 * h + 1
            }
            HeadKind::Cnn => {
                let f = self.cnn_filters;
                f * self.cnn_kernel_rows * cols + 2 * f + 1
            }
            HeadKind::Lstm => {
                let u = self.lstm_units;
                4 * u * (cols + u + 1) + u + 1
            }
        }
    }
}

/// A head bound to an input shape, with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Head {
    pub config: HeadConfig,
    pub rows: usize,
    pub cols: usize,
    pub params: Vec<f64>,
}

fn glorot(rng: &mut Rng, out: &mut [f64], fan_in: usize, fan_out: usize) {
    let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for w in out {
        *w = rng.random_range(-a..a);
    }
}

impl Head {
    /// Builds a head for `(rows, cols)` inputs with parameters drawn from `seed`.
    pub fn build(shape: (usize, usize), config: HeadConfig, seed: u64) -> Result<Self> {
        let (rows, cols) = shape;
        config.validate(rows, cols)?;
        let mut params = vec![0.0; config.param_count(rows, cols)];
        let mut rng = seeded(seed);
        match config.kind {
            HeadKind::FcOnly => {
                let (n, h) = (rows * cols, config.fc_hidden);
                glorot(&mut rng, &mut params[..h * n], n, h);
                glorot(&mut rng, &mut params[h * n + h..h * n + 2 * h], h, 1);
            }
            HeadKind::Cnn => {
                let (f, k) = (config.cnn_filters, config.cnn_kernel_rows);
                let w = f * k * cols;
                glorot(&mut rng, &mut params[..w], k * cols, f);
                glorot(&mut rng, &mut params[w + f..w + 2 * f], f, 1);
            }
            HeadKind::Lstm => {
                let u = config.lstm_units;
                let l = LstmLayout::new(u, cols);
                glorot(&mut rng, &mut params[..l.wh], cols, 4 * u);
                glorot(&mut rng, &mut params[l.wh..l.b], u, 4 * u);
                // forget-gate bias starts at one
                params[l.b + u..l.b + 2 * u].iter_mut().for_each(|b| *b = 1.0);
                glorot(&mut rng, &mut params[l.v..l.c0], u, 1);
            }
        }
        Ok(Self {
            config,
            rows,
            cols,
            params,
        })
    }

    pub fn logit(&self, x: &[f64]) -> f64 {
        self.logit_with(&self.params, x)
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }

    /// Logit under an arbitrary parameter vector of the right length.
    pub fn logit_with(&self, params: &[f64], x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.rows * self.cols);
        match self.config.kind {
            HeadKind::FcOnly => fc(self, params, x, None),
            HeadKind::Cnn => cnn(self, params, x, None),
            HeadKind::Lstm => lstm(self, params, x, None),
        }
    }

    /// Adds `d loss / d params` for one input to `grad` and returns the loss.
    /// `loss_of` maps the logit to `(loss, d loss / d logit)`.
    pub fn accumulate_gradient(&self, x: &[f64], loss_of: impl FnOnce(f64) -> (f64, f64), grad: &mut [f64]) -> f64 {
        let mut loss = 0.0;
        let mut loss_of = Some(loss_of);
        let mut back = |z: f64| {
            let (l, dz) = loss_of.take().expect("logit is produced once")(z);
            loss = l;
            dz
        };
        let sink = Backward {
            grad,
            dlogit: &mut back,
        };
        match self.config.kind {
            HeadKind::FcOnly => fc(self, &self.params, x, Some(sink)),
            HeadKind::Cnn => cnn(self, &self.params, x, Some(sink)),
            HeadKind::Lstm => lstm(self, &self.params, x, Some(sink)),
        };
        loss
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

struct Backward<'a> {
    grad: &'a mut [f64],
    dlogit: &'a mut dyn FnMut(f64) -> f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn fc(head: &Head, p: &[f64], x: &[f64], back: Option<Backward>) -> f64 {
    let n = x.len();
    let h = head.config.fc_hidden;
    let (w1, rest) = p.split_at(h * n);
    let (b1, rest) = rest.split_at(h);
    let (w2, b2) = rest.split_at(h);
    // padded rows are zero; skip them
    let nz: Vec<usize> = (0..n).filter(|&i| x[i] != 0.0).collect();
    let pre: Vec<f64> = (0..h)
        .map(|j| {
            let row = &w1[j * n..(j + 1) * n];
            b1[j] + nz.iter().map(|&i| row[i] * x[i]).sum::<f64>()
        })
        .collect();
    let z = b2[0] + pre.iter().zip(w2).map(|(a, w)| a.max(0.0) * w).sum::<f64>();
    if let Some(Backward { grad, dlogit }) = back {
        let g = dlogit(z);
        let (gw1, rest) = grad.split_at_mut(h * n);
        let (gb1, rest) = rest.split_at_mut(h);
        let (gw2, gb2) = rest.split_at_mut(h);
        gb2[0] += g;
        for j in 0..h {
            if pre[j] > 0.0 {
                gw2[j] += g * pre[j];
                let d = g * w2[j];
                gb1[j] += d;
                let row = &mut gw1[j * n..(j + 1) * n];
                for &i in &nz {
                    row[i] += d * x[i];
                }
            }
        }
    }
    z
}

/// Kernels span all `cols`, so a window never mixes across an embedding;
/// they slide over rows only, with stride one and no padding.
fn cnn(head: &Head, p: &[f64], x: &[f64], back: Option<Backward>) -> f64 {
    let d = head.cols;
    let (f, k) = (head.config.cnn_filters, head.config.cnn_kernel_rows);
    let span = k * d;
    let positions = head.rows - k + 1;
    let (w, rest) = p.split_at(f * span);
    let (b, rest) = rest.split_at(f);
    let (v, c0) = rest.split_at(f);
    // per filter: (pre-activation max, argmax position)
    let pooled: Vec<(f64, usize)> = (0..f)
        .map(|fi| {
            let kernel = &w[fi * span..(fi + 1) * span];
            (0..positions)
                .map(|pos| (b[fi] + dot(kernel, &x[pos * d..pos * d + span]), pos))
                .fold((f64::NEG_INFINITY, 0), |best, c| if c.0 > best.0 { c } else { best })
        })
        .collect();
    let z = c0[0] + pooled.iter().zip(v).map(|((c, _), vf)| c.max(0.0) * vf).sum::<f64>();
    if let Some(Backward { grad, dlogit }) = back {
        let g = dlogit(z);
        let (gw, rest) = grad.split_at_mut(f * span);
        let (gb, rest) = rest.split_at_mut(f);
        let (gv, gc0) = rest.split_at_mut(f);
        gc0[0] += g;
        for (fi, &(c, pos)) in pooled.iter().enumerate() {
            if c > 0.0 {
                gv[fi] += g * c;
                let dm = g * v[fi];
                gb[fi] += dm;
                let window = &x[pos * d..pos * d + span];
                for (gk, xk) in gw[fi * span..(fi + 1) * span].iter_mut().zip(window) {
                    *gk += dm * xk;
                }
            }
        }
    }
    z
}

/// Offsets into the LSTM parameter vector. Gate blocks are ordered
/// input, forget, candidate, output.
struct LstmLayout {
    u: usize,
    d: usize,
    wh: usize,
    b: usize,
    v: usize,
    c0: usize,
}

impl LstmLayout {
    fn new(u: usize, d: usize) -> Self {
        let wh = 4 * u * d;
        let b = wh + 4 * u * u;
        let v = b + 4 * u;
        Self {
            u,
            d,
            wh,
            b,
            v,
            c0: v + u,
        }
    }
}

fn lstm(head: &Head, p: &[f64], x: &[f64], back: Option<Backward>) -> f64 {
    let l = LstmLayout::new(head.config.lstm_units, head.cols);
    let (u, d, steps) = (l.u, l.d, head.rows);
    let wx = &p[..l.wh];
    let wh = &p[l.wh..l.b];
    let bias = &p[l.b..l.v];
    // gates[t] holds activated i, f, g, o; cells[t] and hidden[t] are states after step t
    let mut gates = vec![0.0; steps * 4 * u];
    let mut cells = vec![0.0; (steps + 1) * u];
    let mut hidden = vec![0.0; (steps + 1) * u];
    for t in 0..steps {
        let xt = &x[t * d..(t + 1) * d];
        let h_prev = hidden[t * u..(t + 1) * u].to_vec();
        let gt = &mut gates[t * 4 * u..(t + 1) * 4 * u];
        for r in 0..4 * u {
            let a = bias[r] + dot(&wx[r * d..(r + 1) * d], xt) + dot(&wh[r * u..(r + 1) * u], &h_prev);
            gt[r] = if (2 * u..3 * u).contains(&r) { a.tanh() } else { sigmoid(a) };
        }
        for j in 0..u {
            let (i, f, g, o) = (gt[j], gt[u + j], gt[2 * u + j], gt[3 * u + j]);
            let c = f * cells[t * u + j] + i * g;
            cells[(t + 1) * u + j] = c;
            hidden[(t + 1) * u + j] = o * c.tanh();
        }
    }
    let h_last = &hidden[steps * u..];
    let z = p[l.c0] + dot(&p[l.v..l.c0], h_last);
    if let Some(Backward { grad, dlogit }) = back {
        let g = dlogit(z);
        grad[l.c0] += g;
        for j in 0..u {
            grad[l.v + j] += g * h_last[j];
        }
        let mut dh: Vec<f64> = p[l.v..l.c0].iter().map(|v| g * v).collect();
        let mut dc = vec![0.0; u];
        let mut da = vec![0.0; 4 * u];
        for t in (0..steps).rev() {
            let gt = &gates[t * 4 * u..(t + 1) * 4 * u];
            let c_prev = &cells[t * u..(t + 1) * u];
            for j in 0..u {
                let (i, f, gg, o) = (gt[j], gt[u + j], gt[2 * u + j], gt[3 * u + j]);
                let tc = cells[(t + 1) * u + j].tanh();
                let d_o = dh[j] * tc;
                let dcj = dc[j] + dh[j] * o * (1.0 - tc * tc);
                da[j] = dcj * gg * i * (1.0 - i);
                da[u + j] = dcj * c_prev[j] * f * (1.0 - f);
                da[2 * u + j] = dcj * i * (1.0 - gg * gg);
                da[3 * u + j] = d_o * o * (1.0 - o);
                dc[j] = dcj * f;
            }
            let xt = &x[t * d..(t + 1) * d];
            let h_prev = &hidden[t * u..(t + 1) * u];
            for r in 0..4 * u {
                let a = da[r];
                if a == 0.0 {
                    continue;
                }
                grad[l.b + r] += a;
                for (gw, xv) in grad[r * d..(r + 1) * d].iter_mut().zip(xt) {
                    *gw += a * xv;
                }
                for (gw, hv) in grad[l.wh + r * u..l.wh + (r + 1) * u].iter_mut().zip(h_prev) {
                    *gw += a * hv;
                }
            }
            for (j, dhj) in dh.iter_mut().enumerate() {
                *dhj = (0..4 * u).map(|r| wh[r * u + j] * da[r]).sum();
            }
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(kind: HeadKind) -> HeadConfig {
        HeadConfig {
            kind,
            fc_hidden: 4,
            cnn_filters: 3,
            cnn_kernel_rows: 2,
            lstm_units: 3,
        }
    }

    #[test]
    fn param_counts() {
        let fc = HeadConfig::new(HeadKind::FcOnly);
        assert_eq!(fc.param_count(1, 128), 128 * 128 + 128 + 128 + 1);
        let cnn = HeadConfig::new(HeadKind::Cnn);
        assert_eq!(cnn.param_count(50, 512), 128 * 5 * 512 + 128 + 128 + 1);
        let lstm = HeadConfig::for_unit(HeadKind::Lstm, Unit::Word);
        assert_eq!(lstm.lstm_units, 25);
        assert_eq!(lstm.param_count(10, 4), 4 * 25 * (4 + 25 + 1) + 26);
    }

    #[test]
    fn kernel_taller_than_input_is_rejected() {
        let e = Head::build((4, 8), HeadConfig::new(HeadKind::Cnn), 0).unwrap_err();
        assert!(matches!(e, Error::Config(_)));
    }

    #[test]
    fn build_is_seeded() {
        for kind in [HeadKind::FcOnly, HeadKind::Cnn, HeadKind::Lstm] {
            let a = Head::build((5, 3), tiny(kind), 9).unwrap();
            let b = Head::build((5, 3), tiny(kind), 9).unwrap();
            let c = Head::build((5, 3), tiny(kind), 10).unwrap();
            assert_eq!(a, b);
            assert_ne!(a.params, c.params);
        }
    }

    #[test]
    fn cnn_windows_are_whole_rows() {
        let cfg = HeadConfig {
            cnn_filters: 1,
            cnn_kernel_rows: 1,
            ..tiny(HeadKind::Cnn)
        };
        let head = Head::build((3, 2), cfg, 4).unwrap();
        let (w, b, v, c0) = (&head.params[..2], head.params[2], head.params[3], head.params[4]);
        let x = [0.3, -0.2, 0.9, 0.4, -0.5, 0.1];
        let best = x
            .chunks(2)
            .map(|row| b + w[0] * row[0] + w[1] * row[1])
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((head.logit(&x) - (c0 + v * best.max(0.0))).abs() < 1e-15);
    }
}
