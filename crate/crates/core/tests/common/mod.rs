#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use topiary_core::{Kernel, KernelOptions, Psi};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `B B^T` for a random `n x r` factor, scaled to unit max diagonal.
pub fn random_gram(rng: &mut impl Rng, n: usize, rank: usize) -> Vec<Vec<f64>> {
    let b: Vec<Vec<f64>> = (0..n).map(|_| (0..rank).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let mut g: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| b[i].iter().zip(&b[j]).map(|(x, y)| x * y).sum()).collect())
        .collect();
    let m = (0..n).map(|i| g[i][i]).fold(0.0_f64, f64::max);
    if m > 0.0 {
        g.iter_mut().flatten().for_each(|v| *v /= m);
    }
    g
}

pub fn random_psi(rng: &mut impl Rng, n: usize) -> Psi {
    Psi::new((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// A random PSD instance with `n` points and random rank.
pub fn random_instance(rng: &mut impl Rng, n: usize) -> (Kernel, Psi) {
    let rank = rng.gen_range(1..=n);
    let g = random_gram(rng, n, rank);
    (Kernel::from_gram(g, None, KernelOptions::default()).unwrap(), random_psi(rng, n))
}

/// A full-rank random instance.
pub fn full_rank_instance(rng: &mut impl Rng, n: usize) -> (Kernel, Psi) {
    let g = random_gram(rng, n, n + 2);
    (Kernel::from_gram(g, None, KernelOptions::default()).unwrap(), random_psi(rng, n))
}

pub fn identity(n: usize) -> Kernel {
    Kernel::from_gram(
        (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect(),
        None,
        KernelOptions::default(),
    )
    .unwrap()
}

pub fn zigzag() -> Kernel {
    Kernel::euclidean(vec![vec![-3.0, 1.0], vec![0.0, 2.0], vec![2.0, 1.0]]).unwrap()
}
