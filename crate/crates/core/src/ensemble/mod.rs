//! The `(l, r, n)`-regular pooling graph ensemble.
//!
//! A graph is a permutation of the `n*l` left sockets onto the `n*l` right
//! sockets. Left socket `k` belongs to object `k / l`; right socket `k`
//! belongs to test `k / r`. Every permutation is one graph, so two sockets
//! of the same object may land in the same test (parallel edges). Those are
//! kept: the uniform measure over `(nl)!` wirings is what the ensemble
//! averages are computed against.

mod test_function;
mod types;

pub use test_function::TestFunction;
pub use types::TypeVector;

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest socket count `enumerate_ensemble` will walk (10! wirings).
pub const MAX_ENUMERATION_SOCKETS: usize = 10;

/// Problem configuration: degrees, size, defect and noise probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemParams {
    l: usize,
    r: usize,
    n: usize,
    m: usize,
    p: f64,
    q: f64,
}

fn check_probability(name: &str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} = {x} is not a probability")))
    }
}

impl SystemParams {
    pub fn new(l: usize, r: usize, n: usize, p: f64, q: f64) -> Result<Self> {
        if l == 0 || r == 0 || n == 0 {
            return Err(Error::Config(format!(
                "degrees and size must be positive (l={l}, r={r}, n={n})"
            )));
        }
        if !(n * l).is_multiple_of(r) {
            return Err(Error::Config(format!("r={r} does not divide n*l={}", n * l)));
        }
        check_probability("p", p)?;
        check_probability("q", q)?;
        Ok(Self {
            l,
            r,
            n,
            m: n * l / r,
            p,
            q,
        })
    }

    /// Shape only, with `p = q = 0`.
    pub fn shape(l: usize, r: usize, n: usize) -> Result<Self> {
        Self::new(l, r, n, 0.0, 0.0)
    }

    pub fn with_p(self, p: f64) -> Result<Self> {
        Self::new(self.l, self.r, self.n, p, self.q)
    }

    pub fn with_q(self, q: f64) -> Result<Self> {
        Self::new(self.l, self.r, self.n, self.p, q)
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of tests, `n*l/r`.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Number of edges (sockets on either side), `n*l`.
    pub fn sockets(&self) -> usize {
        self.n * self.l
    }
}

/// One member of the ensemble.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolingGraph {
    l: usize,
    r: usize,
    n: usize,
    m: usize,
    wiring: Vec<usize>,
    /// `pools[j]` lists the objects behind the `r` sockets of test `j`, with repeats.
    pools: Vec<Vec<usize>>,
}

/// JSON form `{"l":..,"r":..,"n":..,"wiring":[..]}`.
#[derive(Serialize, Deserialize)]
struct GraphJson {
    l: usize,
    r: usize,
    n: usize,
    wiring: Vec<usize>,
}

impl Serialize for PoolingGraph {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        GraphJson {
            l: self.l,
            r: self.r,
            n: self.n,
            wiring: self.wiring.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PoolingGraph {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = GraphJson::deserialize(deserializer)?;
        let params = SystemParams::shape(raw.l, raw.r, raw.n).map_err(serde::de::Error::custom)?;
        PoolingGraph::from_wiring(&params, raw.wiring).map_err(serde::de::Error::custom)
    }
}

impl PoolingGraph {
    /// `wiring[k]` is the right socket that left socket `k` connects to.
    pub fn from_wiring(params: &SystemParams, wiring: Vec<usize>) -> Result<Self> {
        let sockets = params.sockets();
        if wiring.len() != sockets {
            return Err(Error::Input(format!(
                "wiring has {} entries, expected {sockets}",
                wiring.len()
            )));
        }
        let mut seen = vec![false; sockets];
        for (k, &s) in wiring.iter().enumerate() {
            if s >= sockets || std::mem::replace(&mut seen[s], true) {
                return Err(Error::Input(format!("wiring is not a permutation (entry {k} = {s})")));
            }
        }
        let (l, r) = (params.l(), params.r());
        let mut pools = vec![vec![0; r]; params.m()];
        for (k, &s) in wiring.iter().enumerate() {
            pools[s / r][s % r] = k / l;
        }
        Ok(Self {
            l,
            r,
            n: params.n(),
            m: params.m(),
            wiring,
            pools,
        })
    }

    /// Uniform draw from the `(nl)!` wirings, deterministic in `seed`.
    pub fn sample(params: &SystemParams, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::sample_with(params, &mut rng)
    }

    /// Fisher-Yates shuffle of the socket array.
    pub fn sample_with<R: Rng + ?Sized>(params: &SystemParams, rng: &mut R) -> Self {
        let mut wiring: Vec<usize> = (0..params.sockets()).collect();
        wiring.shuffle(rng);
        Self::from_wiring(params, wiring).expect("a shuffled identity is a permutation")
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn wiring(&self) -> &[usize] {
        &self.wiring
    }

    /// Objects pooled into test `j`, one entry per socket.
    pub fn pool(&self, j: usize) -> &[usize] {
        &self.pools[j]
    }

    /// Degrees measured from the wiring, counting parallel edges.
    pub fn left_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for pool in &self.pools {
            for &i in pool {
                deg[i] += 1;
            }
        }
        deg
    }

    pub fn right_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.m];
        for &s in &self.wiring {
            deg[s / self.r] += 1;
        }
        deg
    }

    /// `y = F_G(x)` for the OR test.
    pub fn forward_or(&self, x: &[bool]) -> Result<Vec<bool>> {
        if x.len() != self.n {
            return Err(Error::Input(format!(
                "input has length {}, expected n = {}",
                x.len(),
                self.n
            )));
        }
        Ok(self.pools.iter().map(|pool| pool.iter().any(|&i| x[i])).collect())
    }

    /// Applies `f` to each pool, with inputs given as alphabet symbols.
    pub fn forward_general(&self, f: &TestFunction, x: &[f64]) -> Result<Vec<f64>> {
        let indices = x
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                f.symbol_index(a)
                    .ok_or_else(|| Error::Input(format!("x[{i}] = {a} is not in the input alphabet")))
            })
            .collect::<Result<Vec<_>>>()?;
        let out = self.forward_general_indices(f, &indices)?;
        Ok(out.into_iter().map(|k| f.output_alphabet()[k]).collect())
    }

    /// As [`forward_general`](Self::forward_general) with inputs and outputs as alphabet indices.
    pub fn forward_general_indices(&self, f: &TestFunction, x: &[usize]) -> Result<Vec<usize>> {
        if f.arity() != self.r {
            return Err(Error::Input(format!(
                "function arity {} does not match r = {}",
                f.arity(),
                self.r
            )));
        }
        if x.len() != self.n {
            return Err(Error::Input(format!(
                "input has length {}, expected n = {}",
                x.len(),
                self.n
            )));
        }
        let u = f.input_size();
        if let Some(i) = x.iter().position(|&a| a >= u) {
            return Err(Error::Input(format!(
                "x[{i}] = {} is not a symbol index below {u}",
                x[i]
            )));
        }
        let mut counts = vec![0usize; u];
        self.pools
            .iter()
            .map(|pool| {
                counts.iter_mut().for_each(|c| *c = 0);
                for &i in pool {
                    counts[x[i]] += 1;
                }
                f.output_index(&TypeVector::new(counts.clone()))
            })
            .collect()
    }

    /// Bitmask form of the OR map, if `n <= 64` and `m <= 128`.
    pub fn or_masks(&self) -> Option<OrMasks> {
        if self.n > 64 || self.m > 128 {
            return None;
        }
        let masks = self
            .pools
            .iter()
            .map(|pool| pool.iter().fold(0u64, |acc, &i| acc | (1u64 << i)))
            .collect();
        Some(OrMasks { masks })
    }
}

/// Per-test object masks; bit `i` of `x` is object `i`, bit `j` of the result is test `j`.
#[derive(Debug, Clone)]
pub struct OrMasks {
    masks: Vec<u64>,
}

impl OrMasks {
    #[inline]
    pub fn forward(&self, x: u64) -> u128 {
        self.masks
            .iter()
            .enumerate()
            .fold(0u128, |y, (j, &mask)| if x & mask != 0 { y | (1u128 << j) } else { y })
    }
}

/// Every wiring of the ensemble, once each. Refuses above [`MAX_ENUMERATION_SOCKETS`].
pub fn enumerate_ensemble(params: &SystemParams) -> Result<impl Iterator<Item = PoolingGraph>> {
    let sockets = params.sockets();
    if sockets > MAX_ENUMERATION_SOCKETS {
        return Err(Error::Guard(format!(
            "enumerating ({sockets})! wirings is infeasible; n*l must be at most {MAX_ENUMERATION_SOCKETS}"
        )));
    }
    let params = *params;
    Ok((0..sockets)
        .permutations(sockets)
        .map(move |w| PoolingGraph::from_wiring(&params, w).expect("permutation")))
}

pub fn bits_to_mask(x: &[bool]) -> u64 {
    x.iter().enumerate().fold(0, |acc, (i, &b)| acc | (u64::from(b) << i))
}

pub fn mask_to_bits(x: u128, len: usize) -> Vec<bool> {
    (0..len).map(|i| (x >> i) & 1 == 1).collect()
}
