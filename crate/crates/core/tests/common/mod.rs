#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fifdim_core::fif::{normalize, InterpolationProblem, NormalizedSystem};
use fifdim_core::scaling::ScalingFunction;

pub fn q(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn example() -> NormalizedSystem {
    normalize(&InterpolationProblem::three_branch_example()).unwrap()
}

/// Continuous piecewise quadratic with values in `[0.05, 0.95]`.
pub fn random_scaling(rng: &mut ChaCha8Rng) -> ScalingFunction {
    let pieces = rng.gen_range(1..=3);
    let mut cuts: Vec<i64> = Vec::new();
    while cuts.len() < pieces - 1 {
        let c = rng.gen_range(1..12);
        if !cuts.contains(&c) {
            cuts.push(c);
        }
    }
    cuts.sort_unstable();
    let breaks: Vec<BigRational> = std::iter::once(q(0, 1))
        .chain(cuts.iter().map(|&c| q(c, 12)))
        .chain(std::iter::once(q(1, 1)))
        .collect();
    let knot_values: Vec<BigRational> = (0..=pieces).map(|_| q(rng.gen_range(15..=85), 100)).collect();
    let coeffs = (0..pieces)
        .map(|p| {
            let (a, b) = (&breaks[p], &breaks[p + 1]);
            let (va, vb) = (&knot_values[p], &knot_values[p + 1]);
            let width = b - a;
            // |c (x - a)(x - b)| <= |c| width^2 / 4 <= 0.1
            let c = q(rng.gen_range(-40..=40), 100) / (&width * &width);
            let slope = (vb - va) / &width;
            let c0 = va - a * &slope + &c * a * b;
            let c1 = &slope - &c * (a + b);
            vec![c0, c1, c]
        })
        .collect();
    ScalingFunction::new(breaks, coeffs, None).unwrap()
}

pub fn random_problem(rng: &mut ChaCha8Rng, n: usize) -> InterpolationProblem {
    let knots = (0..=n).map(|i| q(i as i64, n as i64)).collect();
    let values = (0..=n).map(|_| q(rng.gen_range(-20..=20), 10)).collect();
    InterpolationProblem::new(knots, values, random_scaling(rng)).unwrap()
}

pub fn random_system(rng: &mut ChaCha8Rng, n: usize) -> NormalizedSystem {
    normalize(&random_problem(rng, n)).unwrap()
}
