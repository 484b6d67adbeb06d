#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use soak::{Dataset, Matrix};

/// Random dataset with every class and subset present. Groups, when asked
/// for, never straddle subsets.
pub fn random_dataset(seed: u64, n: usize, p: usize, s: usize, c: usize, grouped: bool) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = n.max(s * c);
    let mut subsets: Vec<usize> = (0..n).map(|i| if i < s { i } else { rng.gen_range(0..s) }).collect();
    let mut labels: Vec<usize> = (0..n).map(|i| if i < c { i } else { rng.gen_range(0..c) }).collect();
    // every (subset, class) pair among the first s*c rows
    for i in 0..s * c {
        subsets[i] = i % s;
        labels[i] = i / s;
    }
    let data: Vec<f64> = (0..n * p).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let groups = grouped.then(|| {
        let per_subset = rng.gen_range(1..=8usize);
        subsets.iter().map(|&sub| sub * 100 + rng.gen_range(0..per_subset)).collect()
    });
    Dataset::new(
        format!("random{seed}"),
        Matrix::new(n, p, data).unwrap(),
        vec![],
        labels,
        (0..c).map(|k| format!("class{k}")).collect(),
        subsets,
        (0..s).map(|k| format!("subset{k}")).collect(),
        groups,
    )
    .unwrap()
}

/// Directory holding the benchmark CSV files.
pub fn data_dir() -> PathBuf {
    match std::env::var_os("SOAK_DATA_DIR") {
        Some(d) => PathBuf::from(d),
        None => PathBuf::from(env!("CARGO_MANIFEST_DIR")).ancestors().nth(2).unwrap().join("data"),
    }
}

/// Adaptive Simpson quadrature with Richardson correction.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, 50)
}

/// Γ(n/2) for integer n ≥ 1 by the recursion Γ(x+1) = xΓ(x).
pub fn gamma_half_int(n: u32) -> f64 {
    let (mut x, mut g) = if n.is_multiple_of(2) { (1.0, 1.0) } else { (0.5, std::f64::consts::PI.sqrt()) };
    while x < n as f64 / 2.0 - 1e-9 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Student-t density for integer degrees of freedom.
pub fn t_density(t: f64, df: u32) -> f64 {
    let nu = df as f64;
    let norm = gamma_half_int(df + 1) / ((nu * std::f64::consts::PI).sqrt() * gamma_half_int(df));
    norm * (1.0 + t * t / nu).powf(-(nu + 1.0) / 2.0)
}

/// Student-t CDF by quadrature of the density from 0.
pub fn t_cdf_oracle(x: f64, df: u32) -> f64 {
    let half = adaptive_simpson(&|t| t_density(t, df), 0.0, x.abs(), 1e-13);
    if x >= 0.0 {
        0.5 + half
    } else {
        0.5 - half
    }
}
