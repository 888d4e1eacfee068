#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ultraclust::{DissimMatrix, ExtValue, Matrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy)]
pub enum Entries {
    /// Small integers, so ties are common.
    Integer,
    /// Uniform floats in (0, 100].
    Float,
}

/// Random dissimilarity matrix of order `n`. `inf_prob` is the chance each
/// off-diagonal pair is infinite.
pub fn random_dissim(rng: &mut ChaCha8Rng, n: usize, entries: Entries, inf_prob: f64) -> DissimMatrix {
    let mut m = Matrix::filled(n, n, ExtValue::ZERO);
    let max_int = rng.random_range(2..=20u32);
    for i in 0..n {
        for j in i + 1..n {
            let v = if rng.random_bool(inf_prob) {
                ExtValue::INFINITY
            } else {
                match entries {
                    Entries::Integer => ExtValue::from(rng.random_range(1..=max_int)),
                    Entries::Float => {
                        let x: f64 = rng.random_range(0.0..100.0);
                        ExtValue::new(100.0 - x).unwrap()
                    }
                }
            };
            m.set(i, j, v);
            m.set(j, i, v);
        }
    }
    DissimMatrix::new(m).unwrap()
}

/// The `index`-th member of a mixed corpus: orders 2..=64, integer and
/// float entries, a third of them with infinite entries.
pub fn corpus_instance(rng: &mut ChaCha8Rng, index: usize) -> DissimMatrix {
    let n = rng.random_range(2..=64usize);
    let entries = if index % 2 == 0 { Entries::Integer } else { Entries::Float };
    let inf_prob = match index % 3 {
        0 => 0.0,
        1 => 0.1,
        _ => rng.random_range(0.5..0.95),
    };
    random_dissim(rng, n, entries, inf_prob)
}

/// Entrywise reduction `A' ≤ A`: each pair is kept, scaled down, or (if
/// infinite) made finite.
pub fn random_reduction(rng: &mut ChaCha8Rng, a: &DissimMatrix) -> DissimMatrix {
    let n = a.order();
    let mut m = a.as_matrix().clone();
    for i in 0..n {
        for j in i + 1..n {
            let old = a.get(i, j);
            if rng.random_bool(0.5) {
                continue;
            }
            let new = if old.is_infinite() {
                ExtValue::new(rng.random_range(1.0..200.0)).unwrap()
            } else {
                let f: f64 = rng.random_range(0.01..=1.0);
                ExtValue::new((old.get() * f).max(f64::MIN_POSITIVE)).unwrap().min(old)
            };
            m.set(i, j, new);
            m.set(j, i, new);
        }
    }
    DissimMatrix::new(m).unwrap()
}

/// Minimax path values by Floyd–Warshall relaxation over the bottleneck
/// semiring, straight from the path definition.
pub fn floyd_minimax(a: &DissimMatrix) -> Vec<Vec<ExtValue>> {
    let n = a.order();
    let mut d: Vec<Vec<ExtValue>> = (0..n).map(|i| (0..n).map(|j| a.get(i, j)).collect()).collect();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k].max(d[k][j]);
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// Strong triangle inequality checked triple by triple.
pub fn triples_ok(a: &DissimMatrix) -> bool {
    let n = a.order();
    (0..n).all(|i| {
        (0..n).all(|j| (0..n).all(|k| a.get(i, j) <= a.get(i, k).max(a.get(k, j))))
    })
}
