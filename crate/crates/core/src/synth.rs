//! Seeded synthetic data sets with a known relationship between subsets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{Dataset, Matrix};
use crate::error::Result;

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Binary Gaussian classes: class `k` has mean `±separation/2` on the first
/// feature, unit noise everywhere.
fn draw(rng: &mut ChaCha8Rng, n: usize, p: usize, separation: f64, shift: f64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let y = i % 2;
        let sign = if y == 1 { 1.0 } else { -1.0 };
        let row: Vec<f64> = (0..p)
            .map(|j| {
                let mean = if j == 0 { sign * separation / 2.0 } else { 0.0 };
                mean + shift + normal(rng)
            })
            .collect();
        rows.push(row);
        labels.push(y);
    }
    (rows, labels)
}

fn assemble(name: &str, rows: Vec<Vec<f64>>, labels: Vec<usize>, subsets: Vec<usize>) -> Result<Dataset> {
    Dataset::new(
        name,
        Matrix::from_rows(&rows)?,
        vec![],
        labels,
        vec!["0".into(), "1".into()],
        subsets,
        vec!["A".into(), "B".into()],
        None,
    )
}

/// Two subsets of `n_rows / 2` rows each. With `flip`, subset B repeats the
/// rows of A with every label flipped; otherwise B is an independent draw
/// from the same distribution as A.
pub fn label_flip_pair(n_rows: usize, p: usize, separation: f64, flip: bool, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = n_rows / 2;
    let (mut rows, mut labels) = draw(&mut rng, half, p, separation, 0.0);
    if flip {
        let copy = rows.clone();
        let flipped: Vec<usize> = labels.iter().map(|y| 1 - y).collect();
        rows.extend(copy);
        labels.extend(flipped);
    } else {
        let (r, l) = draw(&mut rng, half, p, separation, 0.0);
        rows.extend(r);
        labels.extend(l);
    }
    let subsets = (0..2 * half).map(|i| usize::from(i >= half)).collect();
    assemble(if flip { "label_flip" } else { "iid_control" }, rows, labels, subsets)
}

/// Two subsets where B has a fraction `flip` of its labels flipped and a
/// feature-space offset `shift`.
pub fn shifted_pair(n_per_subset: usize, p: usize, separation: f64, flip: f64, shift: f64, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut rows, mut labels) = draw(&mut rng, n_per_subset, p, separation, 0.0);
    let (r, l) = draw(&mut rng, n_per_subset, p, separation, shift);
    rows.extend(r);
    for y in l {
        labels.push(if rng.gen::<f64>() < flip { 1 - y } else { y });
    }
    let subsets = (0..2 * n_per_subset).map(|i| usize::from(i >= n_per_subset)).collect();
    assemble("shifted_pair", rows, labels, subsets)
}
