//! Fock-basis labels and enumeration of the output space.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default cap on the number of enumerated output states.
pub const DEFAULT_STATE_CAP: u128 = 10_000_000;

/// Photon counts per optical mode, `(s_1, ..., s_m)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OccupationState(Vec<usize>);

impl OccupationState {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() {
            return Err(invalid("an occupation state needs at least one mode"));
        }
        Ok(Self(counts))
    }

    /// One photon in each of `modes` modes.
    pub fn ones(modes: usize) -> Self {
        Self(vec![1; modes.max(1)])
    }

    pub fn modes(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn counts(&self) -> &[usize] {
        &self.0
    }

    /// Mode index of every photon, in mode order; mode `j` appears `s_j` times.
    pub fn photon_modes(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .flat_map(|(mode, &count)| std::iter::repeat_n(mode, count))
            .collect()
    }

    /// `prod_j s_j!` as a float.
    pub fn factorial_product(&self) -> f64 {
        self.0.iter().map(|&c| factorial(c)).product()
    }

    /// Relabel modes: photon count of mode `j` moves to mode `sigma[j]`.
    pub fn permuted(&self, sigma: &[usize]) -> Self {
        let mut out = vec![0; self.0.len()];
        for (j, &c) in self.0.iter().enumerate() {
            out[sigma[j]] = c;
        }
        Self(out)
    }

    /// Space-separated counts, e.g. `3 0 0`.
    pub fn label(&self) -> String {
        let parts: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        parts.join(" ")
    }

    pub fn parse_label(s: &str) -> Result<Self> {
        let counts = s
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| invalid(format!("bad occupation count {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(counts)
    }
}

impl fmt::Display for OccupationState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// `C(n + m - 1, m - 1)`, saturating at `u128::MAX`.
pub fn composition_count(photons: usize, modes: usize) -> u128 {
    if modes == 0 {
        return 0;
    }
    let k = (modes - 1).min(photons) as u128;
    let top = (photons + modes - 1) as u128;
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul(top - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// All compositions of `photons` into `modes` parts, lexicographically descending.
pub fn enumerate_output_states(photons: usize, modes: usize) -> Result<Vec<OccupationState>> {
    enumerate_output_states_capped(photons, modes, DEFAULT_STATE_CAP)
}

pub fn enumerate_output_states_capped(
    photons: usize,
    modes: usize,
    cap: u128,
) -> Result<Vec<OccupationState>> {
    if modes == 0 {
        return Err(invalid("mode count must be at least 1"));
    }
    let count = composition_count(photons, modes);
    if count > cap {
        return Err(Error::ResourceLimit {
            what: "output state count",
            requested: count,
            cap,
        });
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut current = vec![0; modes];
    fill(&mut current, 0, photons, &mut out);
    Ok(out)
}

fn fill(current: &mut [usize], pos: usize, remaining: usize, out: &mut Vec<OccupationState>) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(OccupationState(current.to_vec()));
        return;
    }
    for k in (0..=remaining).rev() {
        current[pos] = k;
        fill(current, pos + 1, remaining - k, out);
    }
    current[pos] = 0;
}
