//! Fixed and invariant partitions, ergodicity, mixing and primality.
//!
//! Everything here depends only on the support graph of the kernel
//! (`x -> y` when `nu_xy > 0`), except the numerical mixing residual.

use num_integer::Integer;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use petgraph::unionfind::UnionFind;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{all_partitions, Partition};
use crate::scalar::{Scalar, Tolerance};
use crate::semigroup::Polymorphism;

fn check_partition<S: Scalar>(p: &Polymorphism<S>, part: &Partition) -> Result<()> {
    p.require_square()?;
    if part.atoms() != p.size() {
        return Err(Error::InvalidPartition(format!(
            "partition covers {} atoms, polymorphism has {}",
            part.atoms(),
            p.size()
        )));
    }
    Ok(())
}

/// Every block is closed: supports of its atoms stay inside it.
pub fn is_fixed_partition<S: Scalar>(p: &Polymorphism<S>, part: &Partition, tol: Tolerance) -> Result<bool> {
    check_partition(p, part)?;
    let block = part.block_of();
    let supp = p.supports(tol);
    Ok((0..p.size()).all(|x| supp[x].iter().all(|&y| block[y] == block[x])))
}

/// Block map `C -> D` witnessing invariance, if one exists.
pub fn invariant_block_map<S: Scalar>(
    p: &Polymorphism<S>,
    part: &Partition,
    tol: Tolerance,
) -> Result<Option<Vec<usize>>> {
    check_partition(p, part)?;
    Ok(block_map(&p.supports(tol), part))
}

fn block_map(supp: &[Vec<usize>], part: &Partition) -> Option<Vec<usize>> {
    let block = part.block_of();
    let mut image: Vec<Option<usize>> = vec![None; part.num_blocks()];
    for (x, s) in supp.iter().enumerate() {
        for &y in s {
            match image[block[x]] {
                None => image[block[x]] = Some(block[y]),
                Some(d) if d != block[y] => return None,
                Some(_) => {}
            }
        }
    }
    image.into_iter().collect()
}

pub fn is_invariant_partition<S: Scalar>(p: &Polymorphism<S>, part: &Partition, tol: Tolerance) -> Result<bool> {
    Ok(invariant_block_map(p, part, tol)?.is_some())
}

/// Finest fixed partition: connected components of the support graph.
/// For bistochastic kernels these are exactly the communicating classes.
pub fn maximal_fixed_partition<S: Scalar>(p: &Polymorphism<S>, tol: Tolerance) -> Result<Partition> {
    p.require_square()?;
    let m = p.size();
    let mut uf = UnionFind::<usize>::new(m);
    for (x, s) in p.supports(tol).iter().enumerate() {
        for &y in s {
            uf.union(x, y);
        }
    }
    Ok(Partition::from_labels(&(0..m).map(|x| uf.find(x)).collect::<Vec<_>>()))
}

pub fn is_ergodic<S: Scalar>(p: &Polymorphism<S>, tol: Tolerance) -> Result<bool> {
    Ok(maximal_fixed_partition(p, tol)?.is_trivial())
}

/// A strongly connected component with its period and cyclic classes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Component {
    pub atoms: Vec<usize>,
    pub period: usize,
    /// Atoms grouped by BFS level modulo the period.
    pub cyclic_classes: Vec<Vec<usize>>,
}

/// Strongly connected components of the support graph, each with its period
/// (gcd of `level(u) + 1 - level(v)` over internal edges).
pub fn components<S: Scalar>(p: &Polymorphism<S>, tol: Tolerance) -> Result<Vec<Component>> {
    p.require_square()?;
    let supp = p.supports(tol);
    Ok(components_of(&supp))
}

fn components_of(supp: &[Vec<usize>]) -> Vec<Component> {
    let m = supp.len();
    let mut g = DiGraph::<(), ()>::with_capacity(m, 0);
    let nodes: Vec<_> = (0..m).map(|_| g.add_node(())).collect();
    for (x, s) in supp.iter().enumerate() {
        for &y in s {
            g.add_edge(nodes[x], nodes[y], ());
        }
    }
    let mut comp_of = vec![usize::MAX; m];
    let mut sccs: Vec<Vec<usize>> = tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut v: Vec<usize> = c.into_iter().map(|n| n.index()).collect();
            v.sort_unstable();
            v
        })
        .collect();
    sccs.sort();
    for (k, c) in sccs.iter().enumerate() {
        for &x in c {
            comp_of[x] = k;
        }
    }
    sccs.into_iter()
        .enumerate()
        .map(|(k, atoms)| {
            let mut level = vec![usize::MAX; m];
            let root = atoms[0];
            level[root] = 0;
            let mut queue = std::collections::VecDeque::from([root]);
            while let Some(u) = queue.pop_front() {
                for &v in &supp[u] {
                    if comp_of[v] == k && level[v] == usize::MAX {
                        level[v] = level[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
            let mut period = 0usize;
            for &u in &atoms {
                for &v in &supp[u] {
                    if comp_of[v] == k {
                        let diff = (level[u] + 1).abs_diff(level[v]);
                        period = period.gcd(&diff);
                    }
                }
            }
            // A single atom without a self-loop never returns; treat as
            // period 1 so the class structure stays well defined.
            let period = period.max(1);
            let mut cyclic_classes = vec![Vec::new(); period];
            for &u in &atoms {
                cyclic_classes[level[u] % period].push(u);
            }
            Component {
                atoms,
                period,
                cyclic_classes,
            }
        })
        .collect()
}

/// Irreducible and aperiodic support graph.
pub fn is_mixing<S: Scalar>(p: &Polymorphism<S>, tol: Tolerance) -> Result<bool> {
    let comps = components(p, tol)?;
    Ok(comps.len() == 1 && comps[0].period == 1)
}

/// `sum |nu^(n) - mu x mu|` in float arithmetic, where `nu^(n)` is the
/// measure of the `n`-th power. Numerical cross-check for [`is_mixing`].
pub fn mixing_residual<S: Scalar>(p: &Polymorphism<S>, n: usize) -> Result<f64> {
    p.require_square()?;
    let pf = p.convert::<f64>();
    let power = pf.power(n)?;
    let theta = Polymorphism::zero(pf.source());
    Ok(power
        .nu()
        .entries()
        .iter()
        .zip(theta.nu().entries())
        .map(|(a, b)| (a - b).abs())
        .sum())
}

/// Outcome of a primality search.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Primality {
    Prime,
    /// A nontrivial invariant partition exists; `witness` is the finest one.
    NotPrime { witness: Partition },
    Inconclusive { candidates_checked: usize },
}

impl Primality {
    pub fn is_prime(&self) -> Option<bool> {
        match self {
            Primality::Prime => Some(true),
            Primality::NotPrime { .. } => Some(false),
            Primality::Inconclusive { .. } => None,
        }
    }
}

/// Primality via the finest invariant partition.
///
/// Candidates are produced by closing the singleton partition under the two
/// forced merges (each support lies in one block; related atoms have their
/// supports in one block). Each round yields a coarser candidate, which is
/// checked for invariance. `budget` caps the number of candidates; running
/// out returns [`Primality::Inconclusive`].
pub fn is_prime<S: Scalar>(p: &Polymorphism<S>, budget: usize, tol: Tolerance) -> Result<Primality> {
    p.require_square()?;
    let supp = p.supports(tol);
    let m = p.size();
    let mut labels: Vec<usize> = (0..m).collect();
    for checked in 0..budget {
        let part = Partition::from_labels(&labels);
        if block_map(&supp, &part).is_some() {
            return Ok(if part.is_trivial() {
                Primality::Prime
            } else {
                Primality::NotPrime { witness: part }
            });
        }
        labels = forced_merges(&supp, &part);
        debug_assert!(checked < m);
    }
    Ok(Primality::Inconclusive {
        candidates_checked: budget,
    })
}

/// One round of merges every invariant partition coarser than `part` must
/// contain.
fn forced_merges(supp: &[Vec<usize>], part: &Partition) -> Vec<usize> {
    let m = supp.len();
    let mut uf = UnionFind::<usize>::new(m);
    for b in part.blocks() {
        for w in b.windows(2) {
            uf.union(w[0], w[1]);
        }
        // All atoms of a block must send their supports into one block.
        let mut first: Option<usize> = None;
        for &x in b {
            for &y in &supp[x] {
                match first {
                    None => first = Some(y),
                    Some(f) => {
                        uf.union(f, y);
                    }
                }
            }
        }
    }
    (0..m).map(|x| uf.find(x)).collect()
}

/// Exhaustive primality check over all set partitions (Bell-number many),
/// for `size <= max_atoms`. The witness is the first nontrivial invariant
/// partition in enumeration order.
pub fn is_prime_exhaustive<S: Scalar>(p: &Polymorphism<S>, max_atoms: usize, tol: Tolerance) -> Result<Primality> {
    p.require_square()?;
    let m = p.size();
    if m > max_atoms {
        return Ok(Primality::Inconclusive { candidates_checked: 0 });
    }
    let supp = p.supports(tol);
    let parts: Vec<Partition> = all_partitions(m).filter(|q| !q.is_trivial()).collect();
    Ok(
        match parts.par_iter().position_first(|q| block_map(&supp, q).is_some()) {
            Some(i) => Primality::NotPrime {
                witness: parts[i].clone(),
            },
            None => Primality::Prime,
        },
    )
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub ergodic: bool,
    pub mixing: bool,
    pub prime: bool,
    pub maximal_fixed_partition: Partition,
    pub invariant_partitions_found: Vec<Partition>,
    /// Least common multiple of the component periods.
    pub peripheral_period: usize,
    /// Finest nontrivial invariant partition when not prime.
    pub witness: Option<Partition>,
}

/// Full dynamical classification. Fails with [`Error::Inconclusive`] when
/// the primality search runs out of budget.
pub fn classify<S: Scalar>(p: &Polymorphism<S>, budget: usize, tol: Tolerance) -> Result<ClassificationReport> {
    let fixed = maximal_fixed_partition(p, tol)?;
    let comps = components(p, tol)?;
    let mixing = comps.len() == 1 && comps[0].period == 1;
    let peripheral_period = comps.iter().fold(1usize, |acc, c| acc.lcm(&c.period));
    let supp = p.supports(tol);

    let primality = is_prime(p, budget, tol)?;
    let witness = match primality {
        Primality::Prime => None,
        Primality::NotPrime { witness } => Some(witness),
        Primality::Inconclusive { candidates_checked } => {
            return Err(Error::Inconclusive(format!(
                "primality undecided after {candidates_checked} candidate partitions"
            )))
        }
    };

    let mut found: Vec<Partition> = Vec::new();
    let mut push = |q: Partition| {
        if !q.is_trivial() && block_map(&supp, &q).is_some() && !found.contains(&q) {
            found.push(q);
        }
    };
    push(fixed.clone());
    let cyclic: Vec<Vec<usize>> = comps.iter().flat_map(|c| c.cyclic_classes.clone()).collect();
    if let Ok(q) = Partition::new(p.size(), cyclic) {
        push(q);
    }
    if let Some(w) = &witness {
        push(w.clone());
    }

    Ok(ClassificationReport {
        ergodic: fixed.is_trivial(),
        mixing,
        prime: witness.is_none(),
        maximal_fixed_partition: fixed,
        invariant_partitions_found: found,
        peripheral_period,
        witness,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TheoremCheck {
    pub mixing: bool,
    pub prime: bool,
    pub consistent: bool,
}

/// Finite-state equivalence of mixing and primality.
pub fn finite_chain_theorem_check<S: Scalar>(p: &Polymorphism<S>, budget: usize, tol: Tolerance) -> Result<TheoremCheck> {
    let mixing = is_mixing(p, tol)?;
    let prime = match is_prime(p, budget, tol)? {
        Primality::Inconclusive { candidates_checked } => {
            return Err(Error::Inconclusive(format!(
                "primality undecided after {candidates_checked} candidate partitions"
            )))
        }
        v => v.is_prime() == Some(true),
    };
    Ok(TheoremCheck {
        mixing,
        prime,
        consistent: mixing == prime,
    })
}
