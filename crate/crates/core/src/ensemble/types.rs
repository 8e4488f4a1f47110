use std::fmt;

use serde::{Deserialize, Serialize};

/// Occurrence counts of each alphabet symbol in a vector.
///
/// For the binary alphabet `{0, 1}` the second entry is the Hamming weight.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TypeVector {
    counts: Vec<usize>,
}

impl TypeVector {
    pub fn new(counts: Vec<usize>) -> Self {
        Self { counts }
    }

    /// Binary type `(len - weight, weight)`.
    pub fn binary(len: usize, weight: usize) -> Self {
        debug_assert!(weight <= len);
        Self::new(vec![len - weight, weight])
    }

    /// Type of a vector of symbol indices over an alphabet of size `alphabet_size`.
    pub fn of_indices(indices: &[usize], alphabet_size: usize) -> Self {
        let mut counts = vec![0; alphabet_size];
        for &i in indices {
            counts[i] += 1;
        }
        Self { counts }
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn alphabet_size(&self) -> usize {
        self.counts.len()
    }

    /// Length of the vector this type describes.
    pub fn len(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// A canonical vector of symbol indices with this type: all `a_1` first, then `a_2`, ...
    pub fn canonical_vector(&self) -> Vec<usize> {
        self.counts
            .iter()
            .enumerate()
            .flat_map(|(sym, &c)| std::iter::repeat_n(sym, c))
            .collect()
    }

    /// Every type of length `len` over `alphabet_size` symbols, in lexicographic order.
    pub fn all(alphabet_size: usize, len: usize) -> Vec<TypeVector> {
        let mut out = Vec::new();
        if alphabet_size == 0 {
            return out;
        }
        let mut current = vec![0; alphabet_size];
        fill_compositions(&mut current, 0, len, &mut out);
        out
    }
}

fn fill_compositions(current: &mut Vec<usize>, pos: usize, remaining: usize, out: &mut Vec<TypeVector>) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(TypeVector::new(current.clone()));
        return;
    }
    for c in 0..=remaining {
        current[pos] = c;
        fill_compositions(current, pos + 1, remaining - c, out);
    }
}

impl fmt::Display for TypeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.counts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}
