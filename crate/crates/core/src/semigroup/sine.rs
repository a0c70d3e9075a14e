use std::f64::consts::PI;

/// Discrete sine basis `s_k(x_i) = sin(k pi x_i / L)`, `k = 1..=n`, on the
/// interior grid. Transforms are direct `O(n^2)` sums over a cached table.
#[derive(Debug)]
pub(crate) struct SineBasis {
    n: usize,
    length: f64,
    // row k - 1 holds s_k at all grid points
    table: Vec<f64>,
}

impl SineBasis {
    pub(crate) fn new(length: f64, n: usize) -> Self {
        let denom = n as f64 + 1.0;
        let mut table = Vec::with_capacity(n * n);
        for k in 1..=n {
            for i in 1..=n {
                table.push(((k * i) as f64 * PI / denom).sin());
            }
        }
        SineBasis { n, length, table }
    }

    /// Continuous Dirichlet eigenvalue magnitude `(k pi / L)^2`.
    pub(crate) fn decay_rate(&self, k: usize) -> f64 {
        (k as f64 * PI / self.length).powi(2)
    }

    pub(crate) fn forward(&self, values: &[f64]) -> Vec<f64> {
        let scale = 2.0 / (self.n as f64 + 1.0);
        self.table
            .chunks_exact(self.n)
            .map(|row| scale * row.iter().zip(values).map(|(s, v)| s * v).sum::<f64>())
            .collect()
    }

    pub(crate) fn inverse(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (row, c) in self.table.chunks_exact(self.n).zip(coeffs) {
            if *c == 0.0 {
                continue;
            }
            for (o, s) in out.iter_mut().zip(row) {
                *o += c * s;
            }
        }
        out
    }
}
