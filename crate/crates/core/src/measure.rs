//! Finite measure spaces and their partitions.

use std::collections::BTreeMap;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::{from_reprs, sum, to_reprs, Scalar, ScalarRepr, Tolerance};

/// Float-mode tolerance for the total mass of a space.
const MASS_TOLERANCE: Tolerance = Tolerance(1e-12);

/// A finite measure space: atoms `0..m` with positive masses summing to one.
/// Labels are cosmetic; atom identity is positional.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteSpace<S> {
    weights: Vec<S>,
    labels: Option<Vec<String>>,
}

impl<S: Scalar> FiniteSpace<S> {
    pub fn new(weights: Vec<S>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidSpace("a space needs at least one atom".into()));
        }
        if let Some(i) = weights.iter().position(|w| *w <= S::zero()) {
            return Err(Error::InvalidSpace(format!(
                "atom {i} has non-positive mass {}",
                weights[i].render()
            )));
        }
        let total = sum(&weights);
        if !total.approx_eq(&S::one(), MASS_TOLERANCE) {
            return Err(Error::InvalidSpace(format!(
                "masses sum to {}, not 1",
                total.render()
            )));
        }
        Ok(FiniteSpace {
            weights,
            labels: None,
        })
    }

    pub fn uniform(m: usize) -> Self {
        assert!(m > 0, "uniform space needs at least one atom");
        FiniteSpace {
            weights: vec![S::from_ratio(1, m as i64); m],
            labels: None,
        }
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.weights.len() {
            return Err(Error::InvalidSpace(format!(
                "{} labels for {} atoms",
                labels.len(),
                self.weights.len()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> &S {
        &self.weights[i]
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, i: usize) -> String {
        self.labels
            .as_ref()
            .map_or_else(|| i.to_string(), |l| l[i].clone())
    }

    pub fn label_list(&self) -> Vec<String> {
        (0..self.len()).map(|i| self.label(i)).collect()
    }

    pub fn is_uniform(&self) -> bool {
        let u = S::from_ratio(1, self.len() as i64);
        self.weights.iter().all(|w| *w == u)
    }

    /// Same atom count and masses equal within `tol`.
    pub fn same_measure(&self, other: &FiniteSpace<S>, tol: Tolerance) -> bool {
        self.len() == other.len()
            && self
                .weights
                .iter()
                .zip(&other.weights)
                .all(|(a, b)| a.approx_eq(b, tol))
    }

    pub fn convert<T: Scalar>(&self) -> FiniteSpace<T> {
        FiniteSpace {
            weights: self
                .weights
                .iter()
                .map(|w| T::from_rational(&w.to_rational()))
                .collect(),
            labels: self.labels.clone(),
        }
    }

    /// μ-weighted inner product.
    pub fn inner(&self, f: &[S], g: &[S]) -> S {
        self.weights
            .iter()
            .zip(f.iter().zip(g))
            .fold(S::zero(), |acc, (w, (a, b))| {
                acc + w.clone() * a.clone() * b.clone()
            })
    }

    /// μ-weighted mean of a function.
    pub fn mean(&self, f: &[S]) -> S {
        self.weights
            .iter()
            .zip(f)
            .fold(S::zero(), |acc, (w, a)| acc + w.clone() * a.clone())
    }

    /// μ-weighted L² norm, in floating point.
    pub fn norm(&self, f: &[S]) -> f64 {
        self.inner(f, f).to_f64().max(0.0).sqrt()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceRepr {
    weights: Vec<ScalarRepr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

impl<S: Scalar> Serialize for FiniteSpace<S> {
    fn serialize<Z: Serializer>(&self, s: Z) -> std::result::Result<Z::Ok, Z::Error> {
        SpaceRepr {
            weights: to_reprs(&self.weights),
            labels: self.labels.clone(),
        }
        .serialize(s)
    }
}

impl<'de, S: Scalar> Deserialize<'de> for FiniteSpace<S> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = SpaceRepr::deserialize(d)?;
        let weights = from_reprs(&raw.weights).map_err(D::Error::custom)?;
        let space = FiniteSpace::new(weights).map_err(D::Error::custom)?;
        match raw.labels {
            Some(l) => space.with_labels(l).map_err(D::Error::custom),
            None => Ok(space),
        }
    }
}

/// A partition of the atoms `0..n` into disjoint nonempty blocks.
///
/// Stored canonically: each block sorted ascending, blocks ordered by their
/// smallest atom. Structural equality is therefore partition equality.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    atoms: usize,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new(atoms: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; atoms];
        for block in &blocks {
            if block.is_empty() {
                return Err(Error::InvalidPartition("empty block".into()));
            }
            for &a in block {
                if a >= atoms {
                    return Err(Error::InvalidPartition(format!(
                        "atom {a} out of range for {atoms} atoms"
                    )));
                }
                if seen[a] {
                    return Err(Error::InvalidPartition(format!(
                        "atom {a} appears in more than one block"
                    )));
                }
                seen[a] = true;
            }
        }
        if let Some(a) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!("atom {a} is not covered")));
        }
        Ok(Self::canonical(atoms, blocks))
    }

    fn canonical(atoms: usize, mut blocks: Vec<Vec<usize>>) -> Self {
        for b in &mut blocks {
            b.sort_unstable();
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        Partition { atoms, blocks }
    }

    /// Builds a partition from a block label per atom.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut map: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (atom, &l) in labels.iter().enumerate() {
            map.entry(l).or_default().push(atom);
        }
        Self::canonical(labels.len(), map.into_values().collect())
    }

    pub fn singletons(n: usize) -> Self {
        Partition {
            atoms: n,
            blocks: (0..n).map(|i| vec![i]).collect(),
        }
    }

    /// The one-block partition.
    pub fn trivial(n: usize) -> Self {
        Partition {
            atoms: n,
            blocks: vec![(0..n).collect()],
        }
    }

    /// `{{0,1},{2,3},...}` on an even number of atoms.
    pub fn dyadic_pairs(n: usize) -> Result<Self> {
        if !n.is_multiple_of(2) || n == 0 {
            return Err(Error::InvalidPartition(format!(
                "dyadic pairing needs an even positive atom count, got {n}"
            )));
        }
        Ok(Partition {
            atoms: n,
            blocks: (0..n / 2).map(|i| vec![2 * i, 2 * i + 1]).collect(),
        })
    }

    pub fn atoms(&self) -> usize {
        self.atoms
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.blocks.len() == 1
    }

    pub fn is_discrete(&self) -> bool {
        self.blocks.len() == self.atoms
    }

    /// Block index of every atom.
    pub fn block_of(&self) -> Vec<usize> {
        let mut out = vec![0; self.atoms];
        for (b, block) in self.blocks.iter().enumerate() {
            for &a in block {
                out[a] = b;
            }
        }
        out
    }

    /// `true` if every block of `self` lies inside a block of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        if self.atoms != coarser.atoms {
            return false;
        }
        let outer = coarser.block_of();
        self.blocks
            .iter()
            .all(|b| b.iter().all(|&a| outer[a] == outer[b[0]]))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartitionRepr {
    blocks: Vec<Vec<usize>>,
}

impl Serialize for Partition {
    fn serialize<Z: Serializer>(&self, s: Z) -> std::result::Result<Z::Ok, Z::Error> {
        PartitionRepr {
            blocks: self.blocks.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Partition {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = PartitionRepr::deserialize(d)?;
        let atoms = raw.blocks.iter().map(Vec::len).sum();
        Partition::new(atoms, raw.blocks).map_err(D::Error::custom)
    }
}

/// Quotient space: one atom per block, mass = sum of member masses.
pub fn quotient<S: Scalar>(space: &FiniteSpace<S>, part: &Partition) -> Result<FiniteSpace<S>> {
    if part.atoms() != space.len() {
        return Err(Error::PartitionMismatch {
            left: space.len(),
            right: part.atoms(),
        });
    }
    let weights = part
        .blocks()
        .iter()
        .map(|b| b.iter().fold(S::zero(), |acc, &a| acc + space.weight(a).clone()))
        .collect();
    Ok(FiniteSpace {
        weights,
        labels: None,
    })
}

/// Common refinement: blocks are the nonempty pairwise intersections.
pub fn refine(p1: &Partition, p2: &Partition) -> Result<Partition> {
    if p1.atoms() != p2.atoms() {
        return Err(Error::PartitionMismatch {
            left: p1.atoms(),
            right: p2.atoms(),
        });
    }
    let (a, b) = (p1.block_of(), p2.block_of());
    let mut keys: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let labels: Vec<usize> = (0..p1.atoms())
        .map(|i| {
            let n = keys.len();
            *keys.entry((a[i], b[i])).or_insert(n)
        })
        .collect();
    Ok(Partition::from_labels(&labels))
}

/// Every partition of `n` atoms, enumerated by restricted growth strings.
/// There are Bell(n) of them; callers cap `n`.
pub fn all_partitions(n: usize) -> impl Iterator<Item = Partition> {
    let mut state: Option<Vec<usize>> = if n == 0 { None } else { Some(vec![0; n]) };
    std::iter::from_fn(move || {
        let current = state.take()?;
        let out = Partition::from_labels(&current);
        // Advance: rightmost position that can be incremented.
        let mut next = current;
        let mut i = n;
        let mut advanced = false;
        while i > 1 {
            i -= 1;
            let max_prefix = next[..i].iter().copied().max().unwrap_or(0);
            if next[i] <= max_prefix {
                next[i] += 1;
                for x in &mut next[i + 1..] {
                    *x = 0;
                }
                advanced = true;
                break;
            }
        }
        if advanced {
            state = Some(next);
        }
        Some(out)
    })
}
