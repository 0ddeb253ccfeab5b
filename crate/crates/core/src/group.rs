//! Permutation groups backed by a stabilizer chain (base and strong generating set).
//!
//! The chain is built by a deterministic Schreier–Sims procedure: the base is
//! extended with the least point moved by whichever element first needs a new
//! level, orbits are explored breadth-first in generator order, and Schreier
//! generators are sifted in orbit order. Groups whose order is known in advance
//! may instead use [`PermGroup::with_known_order`], which sifts a fixed
//! pseudo-random product sequence until the chain reaches that order.

use std::collections::HashMap;
use std::ops::ControlFlow;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::perm::Permutation;
use crate::presentation::Word;

const NONE: u32 = u32::MAX;

/// Transversal entries stored explicitly when `orbit * degree` stays below this.
const EXPLICIT_TRANSVERSAL_LIMIT: usize = 1 << 24;

/// Default cap on the number of elements an enumeration may produce.
pub const DEFAULT_ENUMERATION_CAP: u128 = 100_000_000;

#[derive(Clone, Debug)]
struct Level {
    base_point: usize,
    gens: Vec<usize>,
    orbit: Vec<u32>,
    pos: Vec<u32>,
    parent: Vec<u32>,
    via: Vec<u32>,
    reps: Option<Vec<Permutation>>,
    inv_reps: Option<Vec<Permutation>>,
}

#[derive(Clone, Debug)]
pub struct PermGroup {
    degree: usize,
    generators: Vec<Permutation>,
    strong: Vec<Permutation>,
    strong_inv: Vec<Permutation>,
    levels: Vec<Level>,
}

impl PermGroup {
    /// Deterministic Schreier–Sims on the given generators.
    pub fn new(generators: &[Permutation]) -> Result<Self> {
        let mut g = PermGroup::empty_chain(generators)?;
        g.schreier_sims();
        Ok(g)
    }

    /// Trivial group of the given degree.
    pub fn trivial(degree: usize) -> Self {
        PermGroup {
            degree,
            generators: vec![Permutation::identity(degree)],
            strong: Vec::new(),
            strong_inv: Vec::new(),
            levels: Vec::new(),
        }
    }

    fn empty_chain(generators: &[Permutation]) -> Result<Self> {
        let first = generators
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty generator list".into()))?;
        let degree = first.degree();
        for g in generators {
            if g.degree() != degree {
                return Err(Error::DegreeMismatch(degree, g.degree()));
            }
        }
        let mut group = PermGroup {
            degree,
            generators: generators.to_vec(),
            strong: Vec::new(),
            strong_inv: Vec::new(),
            levels: Vec::new(),
        };
        for g in generators {
            if !g.is_identity() && !group.strong.contains(g) {
                group.strong_inv.push(g.inverse());
                group.strong.push(g.clone());
            }
        }
        Ok(group)
    }

    /// Builds the chain by sifting a deterministic pseudo-random product
    /// sequence until the order reaches `order`. Fails if the chain overshoots
    /// or `max_sifts` products do not suffice.
    pub fn with_known_order(generators: &[Permutation], order: u128, max_sifts: usize) -> Result<Self> {
        let mut group = PermGroup::empty_chain(generators)?;
        let gens = group.strong.clone();
        group.strong.clear();
        group.strong_inv.clear();
        for g in &gens {
            group.add_residue(g.clone(), 0);
        }
        if gens.is_empty() {
            return if order == 1 {
                Ok(group)
            } else {
                Err(Error::Verification(format!("trivial group cannot have order {order}")))
            };
        }
        // product replacement on a fixed seed
        let mut rng = ChaCha8Rng::seed_from_u64(0x9E37_79B9_7F4A_7C15);
        let mut next = move || rng.next_u64();
        let mut slots: Vec<Permutation> = (0..10).map(|i| gens[i % gens.len()].clone()).collect();
        let mut acc = Permutation::identity(group.degree);
        for _ in 0..50 {
            let i = (next() % 10) as usize;
            let mut j = (next() % 9) as usize;
            if j >= i {
                j += 1;
            }
            slots[i] = slots[i].mul(&slots[j]);
        }
        let mut sifts = 0;
        while group.order() < order {
            if sifts >= max_sifts {
                return Err(Error::Verification(format!(
                    "random Schreier-Sims stalled at order {} (target {order}) after {sifts} sifts",
                    group.order()
                )));
            }
            let i = (next() % 10) as usize;
            let mut j = (next() % 9) as usize;
            if j >= i {
                j += 1;
            }
            slots[i] = slots[i].mul(&slots[j]);
            acc = acc.mul(&slots[i]);
            let (residue, level) = group.sift(&acc, 0);
            if !residue.is_identity() || level < group.levels.len() {
                group.add_residue(residue, level);
            }
            sifts += 1;
        }
        if group.order() != order {
            return Err(Error::Verification(format!(
                "group order {} exceeds expected {order}",
                group.order()
            )));
        }
        Ok(group)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn generators(&self) -> &[Permutation] {
        &self.generators
    }

    pub fn base(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.base_point).collect()
    }

    pub fn strong_generators(&self) -> &[Permutation] {
        &self.strong
    }

    /// Orbit lengths along the stabilizer chain.
    pub fn orbit_lengths(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.orbit.len()).collect()
    }

    pub fn order(&self) -> u128 {
        self.levels
            .iter()
            .fold(1u128, |acc, l| acc.saturating_mul(l.orbit.len() as u128))
    }

    pub fn is_trivial(&self) -> bool {
        self.levels.is_empty()
    }

    /// Sift `g` through the chain from `from`; returns the residue and the
    /// level at which sifting stopped (`levels.len()` if it passed all levels).
    fn sift(&self, g: &Permutation, from: usize) -> (Permutation, usize) {
        let mut h = g.clone();
        for l in from..self.levels.len() {
            let level = &self.levels[l];
            let beta = h.image(level.base_point);
            let idx = level.pos[beta];
            if idx == NONE {
                return (h, l);
            }
            h = self.divide_by_rep(&h, l, idx as usize);
        }
        (h, self.levels.len())
    }

    /// `h * u^-1` where `u` is the transversal element at orbit index `idx`.
    fn divide_by_rep(&self, h: &Permutation, l: usize, idx: usize) -> Permutation {
        let level = &self.levels[l];
        if let Some(inv) = &level.inv_reps {
            return h.mul(&inv[idx]);
        }
        let mut h = h.clone();
        let mut i = idx;
        while i != 0 {
            h = h.mul(&self.strong_inv[level.via[i] as usize]);
            i = level.parent[i] as usize;
        }
        h
    }

    fn rep(&self, l: usize, idx: usize) -> Permutation {
        let level = &self.levels[l];
        if let Some(reps) = &level.reps {
            return reps[idx].clone();
        }
        let mut path = Vec::new();
        let mut i = idx;
        while i != 0 {
            path.push(level.via[i] as usize);
            i = level.parent[i] as usize;
        }
        let mut u = Permutation::identity(self.degree);
        for &s in path.iter().rev() {
            u = u.mul(&self.strong[s]);
        }
        u
    }

    pub fn contains(&self, g: &Permutation) -> bool {
        if g.degree() != self.degree {
            return false;
        }
        let (residue, level) = self.sift(g, 0);
        level == self.levels.len() && residue.is_identity()
    }

    fn build_level(&self, base_point: usize, gens: Vec<usize>) -> Level {
        let n = self.degree;
        let mut pos = vec![NONE; n];
        let mut orbit = vec![base_point as u32];
        let mut parent = vec![NONE];
        let mut via = vec![NONE];
        pos[base_point] = 0;
        let mut head = 0;
        while head < orbit.len() {
            let pt = orbit[head] as usize;
            for &s in &gens {
                let img = self.strong[s].image(pt);
                if pos[img] == NONE {
                    pos[img] = orbit.len() as u32;
                    orbit.push(img as u32);
                    parent.push(head as u32);
                    via.push(s as u32);
                }
            }
            head += 1;
        }
        let (reps, inv_reps) = if orbit.len().saturating_mul(n) <= EXPLICIT_TRANSVERSAL_LIMIT {
            let mut reps: Vec<Permutation> = Vec::with_capacity(orbit.len());
            reps.push(Permutation::identity(n));
            for i in 1..orbit.len() {
                let r = reps[parent[i] as usize].mul(&self.strong[via[i] as usize]);
                reps.push(r);
            }
            let inv = reps.iter().map(Permutation::inverse).collect();
            (Some(reps), Some(inv))
        } else {
            (None, None)
        };
        Level {
            base_point,
            gens,
            orbit,
            pos,
            parent,
            via,
            reps,
            inv_reps,
        }
    }

    fn fixes_prefix(&self, s: &Permutation, upto: usize) -> bool {
        self.levels[..upto]
            .iter()
            .all(|l| s.image(l.base_point) == l.base_point)
    }

    /// Adds a sifted residue that stopped at `level` as a strong generator.
    fn add_residue(&mut self, residue: Permutation, level: usize) {
        if residue.is_identity() {
            return;
        }
        let idx = self.strong.len();
        self.strong_inv.push(residue.inverse());
        self.strong.push(residue);
        if level == self.levels.len() || self.fixes_prefix(&self.strong[idx], self.levels.len()) {
            let s = &self.strong[idx];
            if self.fixes_prefix(s, self.levels.len()) {
                let bp = s.first_moved().expect("non-identity residue");
                let lvl = self.build_level(bp, Vec::new());
                self.levels.push(lvl);
            }
        }
        for l in 0..self.levels.len() {
            if self.fixes_prefix(&self.strong[idx], l) {
                let mut gens = self.levels[l].gens.clone();
                gens.push(idx);
                let bp = self.levels[l].base_point;
                self.levels[l] = self.build_level(bp, gens);
            }
        }
    }

    fn schreier_sims(&mut self) {
        // initial base: every strong generator must move some base point
        for s in 0..self.strong.len() {
            if self.fixes_prefix(&self.strong[s], self.levels.len()) {
                let bp = self.strong[s].first_moved().expect("non-identity");
                let lvl = self.build_level(bp, Vec::new());
                self.levels.push(lvl);
            }
        }
        for l in 0..self.levels.len() {
            let gens: Vec<usize> = (0..self.strong.len())
                .filter(|&s| self.fixes_prefix(&self.strong[s], l))
                .collect();
            let bp = self.levels[l].base_point;
            self.levels[l] = self.build_level(bp, gens);
        }
        if self.levels.is_empty() {
            return;
        }
        let mut i = self.levels.len() as isize - 1;
        while i >= 0 {
            let l = i as usize;
            match self.find_failing_schreier_generator(l) {
                Some((residue, j)) => {
                    let new_level = j == self.levels.len();
                    self.add_residue(residue, j);
                    debug_assert!(!new_level || self.levels.len() == j + 1);
                    i = j.min(self.levels.len() - 1) as isize;
                }
                None => i -= 1,
            }
        }
    }

    fn find_failing_schreier_generator(&self, l: usize) -> Option<(Permutation, usize)> {
        let level = &self.levels[l];
        for (bi, &beta) in level.orbit.iter().enumerate() {
            let u_beta = self.rep(l, bi);
            for &s in &level.gens {
                let gamma = self.strong[s].image(beta as usize);
                let gi = level.pos[gamma] as usize;
                let h = self.divide_by_rep(&u_beta.mul(&self.strong[s]), l, gi);
                if h.is_identity() {
                    continue;
                }
                let (residue, j) = self.sift(&h, l + 1);
                if j < self.levels.len() || !residue.is_identity() {
                    return Some((residue, j));
                }
            }
        }
        None
    }

    /// Inverted transversals for every level: each element is uniquely
    /// `v_0 * v_1 * ... * v_{m-1}` with `v_l` the inverse of a level-`l`
    /// coset representative.
    fn transversals(&self) -> Vec<Vec<Permutation>> {
        (0..self.levels.len())
            .map(|l| {
                (0..self.levels[l].orbit.len())
                    .map(|i| match &self.levels[l].inv_reps {
                        Some(inv) => inv[i].clone(),
                        None => self.rep(l, i).inverse(),
                    })
                    .collect()
            })
            .collect()
    }

    /// Every element exactly once, in a fixed order: level 0 is the slowest
    /// coordinate and the deepest level the fastest.
    pub fn elements(&self, cap: u128) -> Result<ElementIter> {
        let t = self.block_transversals(cap)?;
        Ok(ElementIter::new(self.degree, Permutation::identity(self.degree), t))
    }

    /// Number of enumeration blocks (the level-0 orbit length).
    pub fn block_count(&self) -> usize {
        self.levels.first().map_or(1, |l| l.orbit.len())
    }

    /// Visits the elements of one enumeration block, i.e. those whose level-0
    /// coordinate is `block`. Concatenating blocks in index order reproduces
    /// [`PermGroup::elements`].
    pub fn for_each_in_block<F>(&self, transversals: &[Vec<Permutation>], block: usize, mut f: F) -> ControlFlow<()>
    where
        F: FnMut(&Permutation) -> ControlFlow<()>,
    {
        if transversals.is_empty() {
            return f(&Permutation::identity(self.degree));
        }
        let head = transversals[0][block].clone();
        for e in ElementIter::new(self.degree, head, transversals[1..].to_vec()) {
            f(&e)?;
        }
        ControlFlow::Continue(())
    }

    /// Transversals for block-wise enumeration, after the cap check.
    pub fn block_transversals(&self, cap: u128) -> Result<Vec<Vec<Permutation>>> {
        if self.order() > cap {
            return Err(Error::CapExceeded {
                what: "group order for enumeration",
                cap: cap.min(u64::MAX as u128) as u64,
                needed: self.order().min(u64::MAX as u128) as u64,
            });
        }
        Ok(self.transversals())
    }

    /// Generators of the stabilizer of the first base point (empty if trivial).
    pub fn stabilizer_generators(&self) -> Vec<Permutation> {
        match self.levels.get(1) {
            Some(l) => l.gens.iter().map(|&s| self.strong[s].clone()).collect(),
            None => Vec::new(),
        }
    }

    /// Order of the stabilizer of `point`, via orbit–stabilizer.
    pub fn point_stabilizer_order(&self, point: usize) -> u128 {
        let orbit = orbit_of(&self.generators, self.degree, point).len() as u128;
        self.order() / orbit
    }

    pub fn is_transitive(&self) -> bool {
        orbits(&self.generators, self.degree).len() == 1
    }

    /// True if every generator of `sub` conjugated by every generator of
    /// `self` lies in `sub`.
    pub fn normalizes(&self, sub: &PermGroup) -> bool {
        self.generators.iter().all(|g| {
            sub.generators
                .iter()
                .all(|h| h.is_identity() || sub.contains(&h.conjugate(g)))
        })
    }
}

/// Odometer over a chain of transversals; see [`PermGroup::elements`].
pub struct ElementIter {
    transversals: Vec<Vec<Permutation>>,
    idx: Vec<usize>,
    // prefix[l] = head * v_0 * ... * v_{l-1}
    prefix: Vec<Permutation>,
    done: bool,
}

impl ElementIter {
    fn new(degree: usize, head: Permutation, transversals: Vec<Vec<Permutation>>) -> Self {
        debug_assert_eq!(head.degree(), degree);
        let m = transversals.len();
        let mut prefix = Vec::with_capacity(m + 1);
        prefix.push(head);
        for l in 0..m {
            let next = prefix[l].mul(&transversals[l][0]);
            prefix.push(next);
        }
        ElementIter {
            transversals,
            idx: vec![0; m],
            prefix,
            done: false,
        }
    }
}

impl Iterator for ElementIter {
    type Item = Permutation;

    fn next(&mut self) -> Option<Permutation> {
        if self.done {
            return None;
        }
        let out = self.prefix.last().expect("prefix").clone();
        let m = self.transversals.len();
        let mut l = m;
        loop {
            if l == 0 {
                self.done = true;
                return Some(out);
            }
            l -= 1;
            self.idx[l] += 1;
            if self.idx[l] < self.transversals[l].len() {
                break;
            }
            self.idx[l] = 0;
        }
        for lv in l..m {
            let next = self.prefix[lv].mul(&self.transversals[lv][self.idx[lv]]);
            self.prefix[lv + 1] = next;
        }
        Some(out)
    }
}

/// The orbit of `point`, in breadth-first discovery order.
pub fn orbit_of(generators: &[Permutation], degree: usize, point: usize) -> Vec<usize> {
    let mut seen = vec![false; degree];
    let mut orbit = vec![point];
    seen[point] = true;
    let mut head = 0;
    while head < orbit.len() {
        let pt = orbit[head];
        for g in generators {
            let img = g.image(pt);
            if !seen[img] {
                seen[img] = true;
                orbit.push(img);
            }
        }
        head += 1;
    }
    orbit
}

/// Orbit partition, blocks sorted internally and ordered by least element.
pub fn orbits(generators: &[Permutation], degree: usize) -> Vec<Vec<usize>> {
    let mut seen = vec![false; degree];
    let mut out = Vec::new();
    for start in 0..degree {
        if seen[start] {
            continue;
        }
        let mut orbit = orbit_of(generators, degree, start);
        for &p in &orbit {
            seen[p] = true;
        }
        orbit.sort_unstable();
        out.push(orbit);
    }
    out
}

/// A transitive action on the right cosets of a subgroup.
#[derive(Clone, Debug)]
pub struct CosetAction {
    pub degree: usize,
    /// Images of the ambient group's generators, in order.
    pub images: Vec<Permutation>,
    reps: Vec<Permutation>,
    index: HashMap<Vec<u32>, u32>,
    subgroup: Vec<Permutation>,
}

impl CosetAction {
    fn canonical(&self, x: &Permutation) -> Vec<u32> {
        canonical_coset_rep(&self.subgroup, x)
    }

    /// The permutation induced on cosets by an element of the ambient group.
    pub fn image_of(&self, g: &Permutation) -> Result<Permutation> {
        let mut images = Vec::with_capacity(self.degree);
        for r in &self.reps {
            let key = self.canonical(&r.mul(g));
            let i = self
                .index
                .get(&key)
                .ok_or_else(|| Error::NotMember("element outside the ambient group".into()))?;
            images.push(*i);
        }
        Permutation::from_images(images)
    }

    pub fn representatives(&self) -> &[Permutation] {
        &self.reps
    }
}

/// Lexicographically least element of the coset `H x`.
fn canonical_coset_rep(subgroup: &[Permutation], x: &Permutation) -> Vec<u32> {
    let xi = x.images();
    let mut best: Vec<u32> = xi.to_vec(); // identity is in H
    for h in subgroup {
        let hi = h.images();
        let mut better = false;
        for i in 0..hi.len() {
            let v = xi[hi[i] as usize];
            if better {
                best[i] = v;
            } else if v < best[i] {
                better = true;
                best[i] = v;
            } else if v > best[i] {
                break;
            }
        }
    }
    best
}

/// Cap on the subgroup size for the enumerated-subgroup canonicalization.
pub const COSET_SUBGROUP_CAP: u128 = 1_000_000;

/// Action of `group`'s generators on the right cosets of `⟨subgroup_gens⟩`.
/// Point 0 is the subgroup itself.
pub fn coset_action(group: &PermGroup, subgroup_gens: &[Permutation], index_cap: u64) -> Result<CosetAction> {
    for h in subgroup_gens {
        if !group.contains(h) {
            return Err(Error::NotMember(format!("subgroup generator {h}")));
        }
    }
    let sub = if subgroup_gens.is_empty() {
        PermGroup::trivial(group.degree())
    } else {
        PermGroup::new(subgroup_gens)?
    };
    if sub.order() > COSET_SUBGROUP_CAP {
        return Err(Error::CapExceeded {
            what: "subgroup order for coset canonicalization",
            cap: COSET_SUBGROUP_CAP as u64,
            needed: sub.order() as u64,
        });
    }
    let index = group.order() / sub.order();
    if index > index_cap as u128 {
        return Err(Error::CapExceeded {
            what: "coset index",
            cap: index_cap,
            needed: index.min(u64::MAX as u128) as u64,
        });
    }
    let elements: Vec<Permutation> = sub
        .elements(COSET_SUBGROUP_CAP)?
        .filter(|h| !h.is_identity())
        .collect();
    let gens = group.generators().to_vec();
    let id = Permutation::identity(group.degree());
    let mut reps = vec![id.clone()];
    let mut map: HashMap<Vec<u32>, u32> = HashMap::new();
    map.insert(id.images().to_vec(), 0);
    let mut images: Vec<Vec<u32>> = vec![Vec::new(); gens.len()];
    let mut head = 0;
    while head < reps.len() {
        for (gi, s) in gens.iter().enumerate() {
            let y = reps[head].mul(s);
            let key = canonical_coset_rep(&elements, &y);
            let next = reps.len() as u32;
            let j = *map.entry(key.clone()).or_insert_with(|| {
                reps.push(Permutation::from_images_unchecked(key));
                next
            });
            images[gi].push(j);
        }
        head += 1;
    }
    let images = images
        .into_iter()
        .map(Permutation::from_images)
        .collect::<Result<Vec<_>>>()?;
    Ok(CosetAction {
        degree: reps.len(),
        images,
        reps,
        index: map,
        subgroup: elements,
    })
}

/// Shortest word in the generators (positive letters only) equal to `target`,
/// found by breadth-first search over at most `cap` group elements.
pub fn factor_word(generators: &[Permutation], target: &Permutation, cap: usize) -> Result<Word> {
    let id = Permutation::identity(target.degree());
    let mut parent: HashMap<Permutation, (usize, usize)> = HashMap::new();
    let mut order = vec![id.clone()];
    parent.insert(id, (usize::MAX, usize::MAX));
    let mut head = 0;
    while head < order.len() {
        if order[head] == *target {
            let mut letters = Vec::new();
            let mut cur = head;
            while let Some(&(prev, g)) = parent.get(&order[cur]) {
                if prev == usize::MAX {
                    break;
                }
                letters.push(g as i32 + 1);
                cur = prev;
            }
            letters.reverse();
            return Ok(Word(letters));
        }
        for (gi, g) in generators.iter().enumerate() {
            let next = order[head].mul(g);
            if !parent.contains_key(&next) {
                if order.len() >= cap {
                    return Err(Error::CapExceeded {
                        what: "word search",
                        cap: cap as u64,
                        needed: order.len() as u64 + 1,
                    });
                }
                parent.insert(next.clone(), (head, gi));
                order.push(next);
            }
        }
        head += 1;
    }
    Err(Error::NotMember(format!("{target}")))
}
