//! Dense matrix exponential by scaling-and-squaring with the [13/13] Padé
//! approximant (Higham 2005), plus the two Dirichlet Laplacian generators the
//! oracle semigroup can exponentiate.

use nalgebra::DMatrix;

const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

const THETA_13: f64 = 5.371_920_351_148_152;

fn norm_1(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(a)` for a square matrix.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }

    let norm = norm_1(a);
    let squarings = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = a * 2f64.powi(-squarings);

    let b = &PADE13;
    let ident = DMatrix::<f64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let inner_u = &a6 * b[13] + &a4 * b[11] + &a2 * b[9];
    let u = &a * (&a6 * inner_u + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &ident * b[1]);
    let inner_v = &a6 * b[12] + &a4 * b[10] + &a2 * b[8];
    let v = &a6 * inner_v + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &ident * b[0];

    let numerator = &v + &u;
    let denominator = v - u;
    let mut result = denominator
        .lu()
        .solve(&numerator)
        .expect("Padé denominator is nonsingular for scaled arguments");

    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Second-order finite-difference Dirichlet Laplacian `(1/h^2) tridiag(1, -2, 1)`
/// on `n` interior points of `[0, length]`.
pub fn finite_difference_laplacian(length: f64, n: usize) -> DMatrix<f64> {
    let h = length / (n as f64 + 1.0);
    let inv_h2 = 1.0 / (h * h);
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            -2.0 * inv_h2
        } else if i.abs_diff(j) == 1 {
            inv_h2
        } else {
            0.0
        }
    })
}

/// Sine-collocation Dirichlet Laplacian on `n` interior points of `[0, length]`.
///
/// Built from the closed-form second-derivative matrix of trigonometric
/// interpolation on `2(n + 1)` periodic points applied to the odd extension,
/// so it does not share code with the sine-transform semigroup. On the grid
/// it maps `sin(k pi x / L)` to `-(k pi / L)^2 sin(k pi x / L)` for
/// `k = 1..=n`.
pub fn sine_collocation_laplacian(length: f64, n: usize) -> DMatrix<f64> {
    let big_n = n + 1;
    let period_points = 2 * big_n;
    let hp = std::f64::consts::PI / big_n as f64;
    let periodic = |k: usize| -> f64 {
        let k = k % period_points;
        if k == 0 {
            -std::f64::consts::PI.powi(2) / (3.0 * hp * hp) - 1.0 / 6.0
        } else {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            -sign / (2.0 * (k as f64 * hp / 2.0).sin().powi(2))
        }
    };
    let scale = (std::f64::consts::PI / length).powi(2);
    // grid index i in 0..n is periodic node i + 1; the odd image of node l
    // sits at 2N - l
    DMatrix::from_fn(n, n, |i, l| {
        let (a, b) = (i + 1, l + 1);
        let diff = (a + period_points - b) % period_points;
        scale * (periodic(diff) - periodic(a + b))
    })
}
