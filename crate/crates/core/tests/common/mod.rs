//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

/// Fraction bits of the fixed-point oracle.
pub const FRAC_BITS: u64 = 320;

/// Exact fixed-point image of a finite non-negative `f64` (truncated below
/// `2^-FRAC_BITS`).
fn to_fixed(x: f64) -> BigUint {
    assert!(x.is_finite() && x >= 0.0);
    if x == 0.0 {
        return BigUint::zero();
    }
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e) = if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp - 1075)
    };
    let shift = e + FRAC_BITS as i64;
    let m = BigUint::from(mant);
    if shift >= 0 {
        m << shift as u64
    } else {
        m >> (-shift) as u64
    }
}

fn mul(a: &BigUint, b: &BigUint) -> BigUint {
    (a * b) >> FRAC_BITS
}

fn to_f64(x: &BigUint) -> f64 {
    // keep 64 significant bits, then scale
    let bits = x.bits();
    if bits <= 64 {
        return x.to_f64().unwrap() * (-(FRAC_BITS as f64)).exp2();
    }
    let drop = bits - 64;
    let top = (x >> drop).to_u64().unwrap() as f64;
    top * (drop as f64 - FRAC_BITS as f64).exp2()
}

/// `sum_{n>=1} s^{2n} gamma^{2^{n-1}}` in 320-bit fixed point, starting from
/// the exact binary values of `gamma` and `s`. Summation continues until
/// terms are decreasing and below `2^-120` of the partial sum.
pub fn cauchy_series_oracle(gamma: f64, s: f64) -> f64 {
    let g0 = to_fixed(gamma);
    let s2 = mul(&to_fixed(s), &to_fixed(s));
    let mut g = g0; // gamma^{2^{n-1}}
    let mut sp = s2.clone(); // s^{2n}
    let mut sum = BigUint::zero();
    let mut prev = BigUint::zero();
    for n in 1..=200 {
        let term = mul(&sp, &g);
        sum += &term;
        if n > 1 && term <= prev && (&term << 120u64) <= sum {
            break;
        }
        if term.is_zero() && n > 1 {
            break;
        }
        prev = term;
        g = mul(&g, &g);
        sp = mul(&sp, &s2);
    }
    to_f64(&sum)
}

use bmfix::{BMetricSpace, Point, PointSet, SplitMix64};

/// A 1-d power-space sequence whose step distances shrink by at most `gamma`
/// per step: `d_{n+1} = w_n gamma d_n` with `w_n` in `[0.5, 1]`, exactly 1
/// half the time. Steps mostly point the same way, which is the worst case
/// for accumulated distance. Points are laid out backwards from 0 so the
/// smallest steps sit next to the smallest coordinates and keep full
/// precision.
pub fn decaying_sequence(
    rng: &mut SplitMix64,
    len: usize,
    gamma: f64,
    p: f64,
) -> (BMetricSpace, Vec<Point>) {
    let space = BMetricSpace::power(1, p).unwrap();
    let mut d = 0.5 + rng.next_f64();
    let mut steps = Vec::with_capacity(len - 1);
    for _ in 1..len {
        let sign = if rng.bernoulli(0.8) { 1.0 } else { -1.0 };
        steps.push(sign * d.powf(1.0 / p));
        let w = if rng.bernoulli(0.5) {
            1.0
        } else {
            0.5 + 0.5 * rng.next_f64()
        };
        d *= gamma * w;
    }
    let mut xs = vec![0.0; len];
    for n in (0..len - 1).rev() {
        xs[n] = xs[n + 1] - steps[n];
    }
    (space, xs.into_iter().map(Point::scalar).collect())
}

/// Largest measured `d_{n+1} / d_n` along `pts`.
pub fn measured_ratio(space: &BMetricSpace, pts: &[Point]) -> f64 {
    pts.windows(3)
        .map(|w| space.dist(&w[1], &w[2]) / space.dist(&w[0], &w[1]))
        .fold(0.0, f64::max)
}

/// A random nonempty subset of the ids `0..n`.
pub fn random_id_set(rng: &mut SplitMix64, space: &BMetricSpace, n: usize) -> PointSet {
    let k = 1 + rng.below(n.min(5));
    let mut ids: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut ids);
    PointSet::new(space, ids[..k].iter().map(|&i| Point::Id(i)).collect()).unwrap()
}
