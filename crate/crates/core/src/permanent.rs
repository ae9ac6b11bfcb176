//! Matrix permanents.
//!
//! `permanent` uses Ryser's inclusion-exclusion formula with the column
//! subsets visited in Gray-code order, so each step updates the row sums with
//! a single column add or subtract: `O(2^k k)` time, `O(k)` extra memory.
//! `permanent_by_permutations` is the textbook `O(k! k)` sum and is kept as a
//! reference to check the fast path against.

use std::ops::{Add, Mul, Neg, Sub};

use ndarray::ArrayView2;
use num_traits::{One, Zero};

use crate::error::{invalid, Error, Result};

/// Largest matrix order accepted by [`permanent`].
pub const DEFAULT_PERMANENT_CAP: usize = 20;

/// Scalar types the permanent can be evaluated over.
pub trait PermanentScalar:
    Copy
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
}

impl<T> PermanentScalar for T where
    T: Copy + Zero + One + Add<Output = T> + Sub<Output = T> + Mul<Output = T> + Neg<Output = T>
{
}

pub fn permanent<T: PermanentScalar>(m: ArrayView2<'_, T>) -> Result<T> {
    permanent_capped(m, DEFAULT_PERMANENT_CAP)
}

pub fn permanent_capped<T: PermanentScalar>(m: ArrayView2<'_, T>, cap: usize) -> Result<T> {
    let k = check_square(&m)?;
    if k > cap {
        return Err(Error::ResourceLimit {
            what: "permanent order",
            requested: k as u128,
            cap: cap as u128,
        });
    }
    Ok(match k {
        0 => T::one(),
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] + m[(0, 1)] * m[(1, 0)],
        _ => ryser_gray(&m, k),
    })
}

fn check_square<T>(m: &ArrayView2<'_, T>) -> Result<usize> {
    let (r, c) = m.dim();
    if r != c {
        return Err(invalid(format!(
            "permanent needs a square matrix, got {r}x{c}"
        )));
    }
    Ok(r)
}

fn ryser_gray<T: PermanentScalar>(m: &ArrayView2<'_, T>, k: usize) -> T {
    let mut row_sums = vec![T::zero(); k];
    let mut in_subset = vec![false; k];
    let mut total = T::zero();
    let mut odd_size = false;

    for step in 1u64..(1u64 << k) {
        let col = step.trailing_zeros() as usize;
        let adding = !in_subset[col];
        in_subset[col] = adding;
        odd_size = !odd_size;
        for (i, sum) in row_sums.iter_mut().enumerate() {
            *sum = if adding {
                *sum + m[(i, col)]
            } else {
                *sum - m[(i, col)]
            };
        }
        let prod = row_sums.iter().fold(T::one(), |acc, &s| acc * s);
        // (-1)^{|S|}
        total = if odd_size { total - prod } else { total + prod };
    }
    if k % 2 == 1 {
        -total
    } else {
        total
    }
}

/// Sum over all `k!` permutations (Heap's algorithm). Reference only.
pub fn permanent_by_permutations<T: PermanentScalar>(m: ArrayView2<'_, T>) -> Result<T> {
    let k = check_square(&m)?;
    if k > 12 {
        return Err(Error::ResourceLimit {
            what: "reference permanent order",
            requested: k as u128,
            cap: 12,
        });
    }
    if k == 0 {
        return Ok(T::one());
    }
    let term = |sigma: &[usize]| {
        sigma
            .iter()
            .enumerate()
            .fold(T::one(), |acc, (i, &j)| acc * m[(i, j)])
    };
    let mut sigma: Vec<usize> = (0..k).collect();
    let mut counters = vec![0usize; k];
    let mut total = term(&sigma);
    let mut i = 1;
    while i < k {
        if counters[i] < i {
            if i % 2 == 0 {
                sigma.swap(0, i);
            } else {
                sigma.swap(counters[i], i);
            }
            total = total + term(&sigma);
            counters[i] += 1;
            i = 1;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
    Ok(total)
}
