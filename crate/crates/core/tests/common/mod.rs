//! Seeded generators shared by the integration tests.
#![allow(dead_code)]

use num_complex::Complex64;
use num_rational::BigRational;
use ppt_moments::{BipartiteState, CoherentSuperposition, FockSuperposition, GaussianRational};
use rand::Rng;

pub fn small_rational<R: Rng>(rng: &mut R, span: i64) -> BigRational {
    BigRational::new(rng.random_range(-span..=span).into(), rng.random_range(1..=3i64).into())
}

pub fn gaussian_rational<R: Rng>(rng: &mut R, span: i64) -> GaussianRational {
    GaussianRational::new(small_rational(rng, span), small_rational(rng, span))
}

/// One to four Fock terms with occupations `≤ max_occupation`.
pub fn random_fock<R: Rng>(rng: &mut R, max_occupation: u32) -> FockSuperposition {
    loop {
        let k = rng.random_range(1..=4);
        let terms: Vec<_> = (0..k)
            .map(|_| {
                (
                    gaussian_rational(rng, 3),
                    rng.random_range(0..=max_occupation),
                    rng.random_range(0..=max_occupation),
                )
            })
            .collect();
        if let Ok(psi) = FockSuperposition::new(terms) {
            return psi;
        }
    }
}

fn in_disk<R: Rng>(rng: &mut R, radius: f64) -> Complex64 {
    let r = radius * rng.random::<f64>().sqrt();
    Complex64::from_polar(r, rng.random_range(0.0..std::f64::consts::TAU))
}

/// One to three coherent terms with `|α|, |β| ≤ max_amplitude`.
pub fn random_coherent<R: Rng>(rng: &mut R, max_amplitude: f64) -> CoherentSuperposition {
    loop {
        let k = rng.random_range(1..=3);
        let terms: Vec<_> = (0..k)
            .map(|_| {
                let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                (c, in_disk(rng, max_amplitude), in_disk(rng, max_amplitude))
            })
            .collect();
        if let Ok(psi) = CoherentSuperposition::new(terms) {
            return psi;
        }
    }
}

/// Row-major Hermitian `n × n` matrix with small Gaussian-rational entries.
pub fn random_hermitian<R: Rng>(rng: &mut R, n: usize) -> Vec<GaussianRational> {
    let mut m = vec![GaussianRational::zero(); n * n];
    for r in 0..n {
        m[r * n + r] = GaussianRational::from_real(small_rational(rng, 5));
        for c in r + 1..n {
            let z = gaussian_rational(rng, 4);
            m[c * n + r] = z.conj();
            m[r * n + c] = z;
        }
    }
    m
}

/// `G† G` for a random rank-`rank` integer matrix `G`: PSD by construction.
pub fn random_gram<R: Rng>(rng: &mut R, n: usize, rank: usize) -> Vec<GaussianRational> {
    let g: Vec<GaussianRational> = (0..rank * n)
        .map(|_| GaussianRational::new(
            BigRational::from_integer(rng.random_range(-3..=3i64).into()),
            BigRational::from_integer(rng.random_range(-3..=3i64).into()),
        ))
        .collect();
    let mut m = vec![GaussianRational::zero(); n * n];
    for r in 0..n {
        for c in 0..n {
            let mut acc = GaussianRational::zero();
            for k in 0..rank {
                acc += &(&g[k * n + r].conj() * &g[k * n + c]);
            }
            m[r * n + c] = acc;
        }
    }
    m
}

pub fn mixed_states<R: Rng>(rng: &mut R, count: usize) -> Vec<BipartiteState> {
    (0..count)
        .map(|k| if k % 2 == 0 { random_fock(rng, 2).into() } else { random_coherent(rng, 1.5).into() })
        .collect()
}
