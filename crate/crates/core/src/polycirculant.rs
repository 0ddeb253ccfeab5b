//! Orbitals, stabilizer conditions on an elementary abelian subgroup `E`, and
//! a prime-order derangement in the 2-closure of `E` built classwise from
//! elements of `E`.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constructions::{elementary_abelian_rank, ConstructedGroup};
use crate::error::{Error, Result};
use crate::group::{orbits, PermGroup};
use crate::perm::Permutation;

/// Largest number of ordered pairs for a materialized orbital map.
pub const ORBITAL_PAIR_CAP: u64 = 100_000_000;

/// Default number of per-class choice combinations tried.
pub const WITNESS_BUDGET: u64 = 10_000;

/// Cap on `|E|` for the element scans.
pub const E_ORDER_CAP: u128 = 100_000;

/// Orbits of a group on ordered pairs; ids follow the least pair of each orbital.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitalPartition {
    pub degree: usize,
    ids: Vec<u32>,
    pub rank: usize,
}

impl OrbitalPartition {
    pub fn id(&self, a: usize, b: usize) -> u32 {
        self.ids[a * self.degree + b]
    }

    /// Number of orbitals contained in the diagonal.
    pub fn diagonal_orbitals(&self) -> usize {
        let mut ids: Vec<u32> = (0..self.degree).map(|a| self.id(a, a)).collect();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    }

    /// Number of orbitals through point `a`, i.e. suborbits of its stabilizer.
    pub fn row_classes(&self, a: usize) -> usize {
        let mut ids: Vec<u32> = (0..self.degree).map(|b| self.id(a, b)).collect();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    }
}

pub fn orbitals(generators: &[Permutation], degree: usize) -> Result<OrbitalPartition> {
    let pairs = (degree as u64).saturating_mul(degree as u64);
    if pairs > ORBITAL_PAIR_CAP {
        return Err(Error::CapExceeded {
            what: "orbital pairs",
            cap: ORBITAL_PAIR_CAP,
            needed: pairs,
        });
    }
    for g in generators {
        if g.degree() != degree {
            return Err(Error::DegreeMismatch(degree, g.degree()));
        }
    }
    let n = degree;
    let mut ids = vec![u32::MAX; n * n];
    let mut rank = 0u32;
    let mut stack = Vec::new();
    for start in 0..n * n {
        if ids[start] != u32::MAX {
            continue;
        }
        ids[start] = rank;
        stack.push(start);
        while let Some(x) = stack.pop() {
            let (a, b) = (x / n, x % n);
            for g in generators {
                let y = g.image(a) * n + g.image(b);
                if ids[y] == u32::MAX {
                    ids[y] = rank;
                    stack.push(y);
                }
            }
        }
        rank += 1;
    }
    Ok(OrbitalPartition {
        degree,
        ids,
        rank: rank as usize,
    })
}

/// First pair `(a, b)` whose orbital is not preserved by `sigma`, or `None`.
pub fn first_closure_violation(sigma: &Permutation, partition: &OrbitalPartition) -> Result<Option<(usize, usize)>> {
    let n = partition.degree;
    if sigma.degree() != n {
        return Err(Error::DegreeMismatch(n, sigma.degree()));
    }
    Ok((0..n).into_par_iter().find_map_first(|a| {
        let sa = sigma.image(a);
        (0..n)
            .find(|&b| partition.id(sa, sigma.image(b)) != partition.id(a, b))
            .map(|b| (a, b))
    }))
}

pub fn verify_in_closure(sigma: &Permutation, partition: &OrbitalPartition) -> Result<bool> {
    Ok(first_closure_violation(sigma, partition)?.is_none())
}

/// Elements of `E` in enumeration order with per-point stabilizers as bitsets.
struct StabilizerTable {
    elements: Vec<Permutation>,
    index: HashMap<Permutation, usize>,
    /// Distinct stabilizers, in order of first point.
    stabilizers: Vec<Vec<u64>>,
    /// Stabilizer id of each point.
    point_class: Vec<usize>,
}

fn bit(set: &[u64], i: usize) -> bool {
    set[i / 64] >> (i % 64) & 1 == 1
}

fn popcount(set: &[u64]) -> u64 {
    set.iter().map(|w| w.count_ones() as u64).sum()
}

impl StabilizerTable {
    fn new(e_gens: &[Permutation], degree: usize) -> Result<Self> {
        let e = if e_gens.is_empty() {
            PermGroup::trivial(degree)
        } else {
            PermGroup::new(e_gens)?
        };
        let elements: Vec<Permutation> = e.elements(E_ORDER_CAP)?.collect();
        let index = elements.iter().cloned().enumerate().map(|(i, g)| (g, i)).collect();
        let words = elements.len().div_ceil(64);
        let mut stabilizers: Vec<Vec<u64>> = Vec::new();
        let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut point_class = Vec::with_capacity(degree);
        for v in 0..degree {
            let mut set = vec![0u64; words];
            for (i, g) in elements.iter().enumerate() {
                if g.image(v) == v {
                    set[i / 64] |= 1 << (i % 64);
                }
            }
            let id = *seen.entry(set.clone()).or_insert_with(|| {
                stabilizers.push(set);
                stabilizers.len() - 1
            });
            point_class.push(id);
        }
        Ok(StabilizerTable {
            elements,
            index,
            stabilizers,
            point_class,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub e_order: u64,
    pub distinct_stabilizers: usize,
    pub stabilizer_orders: Vec<u64>,
    pub orbit_sizes: Vec<u64>,
    /// Every point stabilizer is normal in `E`.
    pub stabilizers_normal: bool,
    /// Equal stabilizer orders, and any two stabilizers are equal or their product is `E`.
    pub stabilizers_equal_or_cover: bool,
    pub failures: Vec<String>,
}

impl ConditionReport {
    pub fn holds(&self) -> bool {
        self.stabilizers_normal && self.stabilizers_equal_or_cover
    }
}

/// Checks, by direct scan of `E`, that each `E_v` is normal in `E` and that
/// any two stabilizers either coincide or multiply to `E`.
pub fn check_stabilizer_conditions(e_gens: &[Permutation], degree: usize) -> Result<ConditionReport> {
    let t = StabilizerTable::new(e_gens, degree)?;
    let e_order = t.elements.len() as u64;
    let mut failures = Vec::new();
    let mut normal = true;
    for (s, set) in t.stabilizers.iter().enumerate() {
        'outer: for (i, h) in t.elements.iter().enumerate() {
            if !bit(set, i) {
                continue;
            }
            for g in e_gens {
                let c = h.conjugate(g);
                let j = t.index[&c];
                if !bit(set, j) {
                    normal = false;
                    failures.push(format!("stabilizer class {s} is not normal"));
                    break 'outer;
                }
            }
        }
    }
    let orders: Vec<u64> = t.stabilizers.iter().map(|s| popcount(s)).collect();
    let mut cover = true;
    if orders.windows(2).any(|w| w[0] != w[1]) {
        cover = false;
        failures.push(format!("stabilizer orders differ: {orders:?}"));
    }
    for i in 0..t.stabilizers.len() {
        for j in i + 1..t.stabilizers.len() {
            let inter: u64 = t.stabilizers[i]
                .iter()
                .zip(&t.stabilizers[j])
                .map(|(a, b)| (a & b).count_ones() as u64)
                .sum();
            if orders[i] * orders[j] / inter != e_order {
                cover = false;
                failures.push(format!("stabilizer classes {i} and {j} neither coincide nor cover E"));
            }
        }
    }
    let mut orbit_sizes: Vec<u64> = orbits(e_gens, degree).iter().map(|o| o.len() as u64).collect();
    orbit_sizes.sort_unstable();
    orbit_sizes.dedup();
    let mut stabilizer_orders = orders.clone();
    stabilizer_orders.sort_unstable();
    stabilizer_orders.dedup();
    Ok(ConditionReport {
        e_order,
        distinct_stabilizers: t.stabilizers.len(),
        stabilizer_orders,
        orbit_sizes,
        stabilizers_normal: normal,
        stabilizers_equal_or_cover: cover,
        failures,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassChoice {
    pub representative: usize,
    pub size: usize,
    /// The element of `E` applied on this class, as an image array.
    pub element: Permutation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessChecks {
    pub order: u64,
    pub fixed_points: usize,
    pub preserves_e_orbitals: bool,
    pub attempts: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DissectionWitness {
    pub prime: u64,
    pub sigma: Permutation,
    pub classes: Vec<ClassChoice>,
    pub checks: WitnessChecks,
}

/// Splits the points by equality of `E_v` and applies, on each class, an
/// element of `E` outside that stabilizer. Choices are tried in lexicographic
/// order of per-class candidate lists until one yields a fixed-point-free
/// permutation of order `r` preserving every orbital of `E`.
pub fn dissection_witness(e_gens: &[Permutation], degree: usize, budget: u64) -> Result<DissectionWitness> {
    let (r, _) = elementary_abelian_rank(e_gens)
        .ok_or_else(|| Error::Precondition("E is not elementary abelian of prime exponent".into()))?;
    let conditions = check_stabilizer_conditions(e_gens, degree)?;
    if !conditions.holds() {
        return Err(Error::Precondition(format!("stabilizer conditions fail: {:?}", conditions.failures)));
    }
    let t = StabilizerTable::new(e_gens, degree)?;
    let partition = orbitals(e_gens, degree)?;
    let candidates: Vec<Vec<usize>> = t
        .stabilizers
        .iter()
        .map(|set| (0..t.elements.len()).filter(|&i| !bit(set, i)).collect())
        .collect();
    if candidates.iter().any(Vec::is_empty) {
        return Err(Error::Verification("some stabilizer is all of E".into()));
    }
    let classes = t.stabilizers.len();
    let mut choice = vec![0usize; classes];
    let mut attempts = 0u64;
    loop {
        if attempts >= budget {
            return Err(Error::Verification(format!(
                "no valid witness within {budget} combinations"
            )));
        }
        attempts += 1;
        let images: Vec<u32> = (0..degree)
            .map(|v| {
                let c = t.point_class[v];
                t.elements[candidates[c][choice[c]]].image(v) as u32
            })
            .collect();
        if let Ok(sigma) = Permutation::from_images(images) {
            let order = sigma.order();
            let fixed = sigma.fixed_points().len();
            if order == r && fixed == 0 && verify_in_closure(&sigma, &partition)? {
                let classes = (0..classes)
                    .map(|c| ClassChoice {
                        representative: t.point_class.iter().position(|&x| x == c).expect("nonempty class"),
                        size: t.point_class.iter().filter(|&&x| x == c).count(),
                        element: t.elements[candidates[c][choice[c]]].clone(),
                    })
                    .collect();
                return Ok(DissectionWitness {
                    prime: r,
                    sigma,
                    classes,
                    checks: WitnessChecks {
                        order,
                        fixed_points: fixed,
                        preserves_e_orbitals: true,
                        attempts,
                    },
                });
            }
        }
        // next combination, last class varying fastest
        let mut c = classes;
        loop {
            if c == 0 {
                return Err(Error::Verification(format!(
                    "no valid witness among all {attempts} combinations"
                )));
            }
            c -= 1;
            choice[c] += 1;
            if choice[c] < candidates[c].len() {
                break;
            }
            choice[c] = 0;
        }
    }
}

/// Everything the witness command reports for one bundle and one `E`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub subject: String,
    pub hash: String,
    pub e_choice: String,
    pub conditions: ConditionReport,
    pub witness: DissectionWitness,
    pub preserves_x_orbitals: bool,
    pub in_x: bool,
    pub x_rank: usize,
    pub x_suborbits: usize,
    pub e_rank: usize,
}

impl WitnessReport {
    pub fn passed(&self) -> bool {
        self.conditions.holds() && self.preserves_x_orbitals && !self.in_x && self.x_rank == self.x_suborbits
    }
}

pub fn witness_for(g: &ConstructedGroup, e_choice: Option<&str>, budget: u64) -> Result<WitnessReport> {
    g.verify_hash()?;
    let e_gens = g.e_generators(e_choice)?;
    let key = e_choice.or(g.default_e.as_deref()).unwrap_or_default().to_string();
    let conditions = check_stabilizer_conditions(e_gens, g.degree)?;
    let witness = dissection_witness(e_gens, g.degree, budget)?;
    let x = g.build_group()?;
    let x_orbitals = orbitals(&g.generators, g.degree)?;
    let e_orbitals = orbitals(e_gens, g.degree)?;
    let preserves_x_orbitals = verify_in_closure(&witness.sigma, &x_orbitals)?;
    let stab = x.stabilizer_generators();
    let x_suborbits = if stab.is_empty() {
        g.degree
    } else {
        orbits(&stab, g.degree).len()
    };
    Ok(WitnessReport {
        subject: g.name.clone(),
        hash: g.hash.clone(),
        e_choice: key,
        conditions,
        in_x: x.contains(&witness.sigma),
        preserves_x_orbitals,
        x_rank: x_orbitals.rank,
        x_suborbits,
        e_rank: e_orbitals.rank,
        witness,
    })
}

/// Orbit sizes of `E` keyed by size, for reports.
pub fn orbit_size_histogram(e_gens: &[Permutation], degree: usize) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for o in orbits(e_gens, degree) {
        *h.entry(o.len()).or_insert(0) += 1;
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{a5_on_15, build_a5_mixed, build_sl2_quotient};

    #[test]
    fn trivial_and_regular_orbitals() {
        let t = orbitals(&[Permutation::identity(4)], 4).unwrap();
        assert_eq!(t.rank, 16);
        let c5 = Permutation::parse_cycles("(1,2,3,4,5)", 5).unwrap();
        let o = orbitals(std::slice::from_ref(&c5), 5).unwrap();
        assert_eq!(o.rank, 5);
        assert_eq!(o.diagonal_orbitals(), 1);
        assert!(verify_in_closure(&c5, &o).unwrap());
    }

    #[test]
    fn a5_15_rank_matches_suborbits() {
        let g = a5_on_15().unwrap();
        let o = orbitals(&g.generators, 15).unwrap();
        let x = g.build_group().unwrap();
        let sub = orbits(&x.stabilizer_generators(), 15).len();
        assert_eq!(o.rank, sub);
        assert_eq!(o.row_classes(0), sub);
        for e in x.elements(100).unwrap() {
            assert!(verify_in_closure(&e, &o).unwrap());
        }
    }

    #[test]
    fn regular_e_gives_its_own_element() {
        let c5 = Permutation::parse_cycles("(1,2,3,4,5)", 5).unwrap();
        let w = dissection_witness(&[c5], 5, 10).unwrap();
        assert_eq!(w.classes.len(), 1);
        assert_eq!(w.prime, 5);
    }

    #[test]
    fn sl2_degree_196_witness() {
        let g = build_sl2_quotient(7, 2).unwrap();
        let c = check_stabilizer_conditions(g.e_generators(None).unwrap(), 196).unwrap();
        assert!(c.holds());
        assert_eq!(c.stabilizer_orders, vec![49]);
        assert_eq!(c.orbit_sizes, vec![7]);
        let r = witness_for(&g, None, WITNESS_BUDGET).unwrap();
        assert_eq!(r.witness.prime, 7);
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn a5_mixed_witnesses() {
        let g = build_a5_mixed("Y").unwrap();
        let c = check_stabilizer_conditions(g.e_generators(Some("U")).unwrap(), 225).unwrap();
        assert!(c.holds());
        assert_eq!(c.stabilizer_orders, vec![27]);
        for (e, r) in [("U", 3), ("V", 5)] {
            let rep = witness_for(&g, Some(e), WITNESS_BUDGET).unwrap();
            assert_eq!(rep.witness.prime, r);
            assert!(rep.passed(), "{rep:?}");
        }
    }

    #[test]
    fn shift_is_not_in_the_closure() {
        let g = build_sl2_quotient(7, 2).unwrap();
        let o = orbitals(&g.generators, 196).unwrap();
        let shift = Permutation::from_images((0..196u32).map(|i| (i + 1) % 196).collect::<Vec<_>>()).unwrap();
        let v = first_closure_violation(&shift, &o).unwrap();
        assert_eq!(v, Some((0, 2)));
    }
}
