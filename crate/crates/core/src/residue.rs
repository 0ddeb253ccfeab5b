//! 2x2 matrices over `Z/p^k`, the groups `SL2(Z/p^k)`, the congruence
//! filtration `N_l = {A : A = I mod p^l}`, the stabilizer `Yhat = P:Q` and the
//! action of `SL2(Z/p^k)` on right cosets of a matrix subgroup.

use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::catalog::require_odd_prime;
use crate::error::{Error, Result};
use crate::perm::Permutation;
use crate::presentation::GroupElem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResidueRingContext {
    p: u64,
    k: u32,
    modulus: u64,
    w: u64,
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    acc
}

fn inv_mod(a: u64, m: u64) -> Option<u64> {
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    (r0 == 1).then(|| t0.rem_euclid(m as i128) as u64)
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

impl ResidueRingContext {
    /// `p` an odd prime, `k >= 1`, `p^k < 2^20`.
    pub fn new(p: u64, k: u32) -> Result<Self> {
        require_odd_prime(p)?;
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        let modulus = p
            .checked_pow(k)
            .filter(|&m| m < 1 << 20)
            .ok_or_else(|| Error::InvalidParameter(format!("{p}^{k} is too large")))?;
        let factors = prime_factors(p - 1);
        let g = (2..p)
            .find(|&g| factors.iter().all(|&q| pow_mod(g, (p - 1) / q, p) != 1))
            .expect("primitive root exists");
        let w = pow_mod(g, p.pow(k - 1), modulus);
        Ok(ResidueRingContext { p, k, modulus, w })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// A unit of multiplicative order exactly `p - 1`.
    pub fn w(&self) -> u64 {
        self.w
    }

    pub fn p_pow(&self, l: u32) -> u64 {
        self.p.pow(l)
    }

    /// `|SL2(Z/p^k)| = p^(3k-2) (p^2 - 1)`.
    pub fn sl2_order(&self) -> u128 {
        (self.p as u128).pow(3 * self.k - 2) * (self.p as u128 * self.p as u128 - 1)
    }

    pub fn matrix(&self, a: i64, b: i64, c: i64, d: i64) -> RMatrix {
        let m = self.modulus as i64;
        RMatrix {
            m: self.modulus,
            e: [a, b, c, d].map(|x| x.rem_euclid(m) as u64),
        }
    }

    pub fn identity(&self) -> RMatrix {
        self.matrix(1, 0, 0, 1)
    }

    /// `I + p^l X` for an integer matrix `X`.
    pub fn congruence(&self, l: u32, x: [i64; 4]) -> RMatrix {
        let q = self.p_pow(l) as i64;
        self.matrix(1 + q * x[0], q * x[1], q * x[2], 1 + q * x[3])
    }

    pub fn a_level(&self, l: u32) -> RMatrix {
        self.congruence(l, [1, 1, -1, -1])
    }

    pub fn b_level(&self, l: u32) -> RMatrix {
        self.congruence(l, [0, 1, 0, 0])
    }

    pub fn c_level(&self, l: u32) -> RMatrix {
        self.congruence(l, [0, 0, 1, 0])
    }

    /// Largest `l <= k` with `A = I mod p^l`, or 0.
    pub fn filtration_level(&self, a: &RMatrix) -> u32 {
        let off = [a.e[0] + self.modulus - 1, a.e[1], a.e[2], a.e[3] + self.modulus - 1].map(|x| x % self.modulus);
        let mut l = 0;
        while l < self.k && off.iter().all(|&x| x % self.p_pow(l + 1) == 0) {
            l += 1;
        }
        l
    }

    /// `{[[1,1],[0,1]], [[1,0],[1,1]]}`, which generate `SL2(Z/p^k)`.
    pub fn sl2_generators(&self) -> Vec<RMatrix> {
        vec![self.matrix(1, 1, 0, 1), self.matrix(1, 0, 1, 1)]
    }

    /// Generators of `P`: `I + p^(k-1) [[0,1],[0,0]]` and `I + p^(k-1) [[0,0],[1,0]]`.
    pub fn p_generators(&self) -> Vec<RMatrix> {
        vec![self.b_level(self.k - 1), self.c_level(self.k - 1)]
    }

    /// Generators of `Q = <diag(w, w^-1), [[0,1],[-1,0]]>`.
    pub fn q_generators(&self) -> Vec<RMatrix> {
        let winv = inv_mod(self.w, self.modulus).expect("w is a unit") as i64;
        vec![self.matrix(self.w as i64, 0, 0, winv), self.matrix(0, 1, -1, 0)]
    }

    pub fn yhat_generators(&self) -> Vec<RMatrix> {
        let mut g = self.p_generators();
        g.extend(self.q_generators());
        g
    }

    pub fn yhat_order(&self) -> u64 {
        2 * self.p * self.p * (self.p - 1)
    }

    /// Is `A` in `P`, i.e. `A = I + p^(k-1) antidiag(b, c)`?
    pub fn in_p(&self, a: &RMatrix) -> bool {
        let q = self.p_pow(self.k - 1);
        a.e[0] == 1 % self.modulus && a.e[3] == 1 % self.modulus && a.e[1].is_multiple_of(q) && a.e[2].is_multiple_of(q)
    }

    /// The nonidentity elements of `N_(k-1)`, listed as `I + p^(k-1) [[a,b],[c,-a]]`
    /// with `a,b,c` in `0..p`. For `p >= 5` these are exactly the elements of
    /// order `p`; for `p = 3` there are others (see
    /// [`verify_order_p_characterization`](Self::verify_order_p_characterization)).
    pub fn order_p_elements(&self) -> Result<Vec<RMatrix>> {
        if self.k < 2 {
            return Err(Error::Precondition("order-p characterization needs k >= 2".into()));
        }
        let p = self.p as i64;
        let mut out = Vec::with_capacity((self.p.pow(3) - 1) as usize);
        for a in 0..p {
            for b in 0..p {
                for c in 0..p {
                    if a == 0 && b == 0 && c == 0 {
                        continue;
                    }
                    out.push(self.congruence(self.k - 1, [a, b, c, -a]));
                }
            }
        }
        Ok(out)
    }

    /// `D` with `D^-1 A D` in `P`, for `A` of order `p`.
    pub fn conjugator_into_yhat(&self, a: &RMatrix) -> Result<RMatrix> {
        if a.is_identity() {
            return Err(Error::Precondition("identity has no order-p conjugator".into()));
        }
        if self.k < 2 || self.filtration_level(a) < self.k - 1 || !a.pow(self.p as i64).is_identity() {
            return Err(Error::Precondition("matrix does not have order p".into()));
        }
        let q = self.p_pow(self.k - 1);
        let m = self.modulus;
        let coef = |x: u64| x / q % self.p;
        let (ea, eb, ec) = (coef((a.e[0] + m - 1) % m), coef(a.e[1]), coef(a.e[2]));
        let d = if eb != 0 {
            let e = inv_mod(eb, m).expect("unit");
            self.matrix(1, 0, -((ea * e % m) as i64), 1)
        } else if ec != 0 {
            let f = inv_mod(ec, m).expect("unit");
            self.matrix(1, (ea * f % m) as i64, 0, 1)
        } else {
            let u = self.matrix(1, 1, 0, 1);
            let inner = self.conjugator_into_yhat(&a.conjugate(&u))?;
            u.mul(&inner)
        };
        let conj = a.conjugate(&d);
        if !self.in_p(&conj) {
            return Err(Error::InvariantBreach(format!("conjugate {conj:?} not in P")));
        }
        Ok(d)
    }

    /// All elements of `SL2(Z/p^k)`, by brute force over `p^(4k)` matrices.
    pub fn sl2_elements_bruteforce(&self, cap: u64) -> Result<Vec<RMatrix>> {
        let m = self.modulus;
        let total = m.saturating_pow(4);
        if total > cap {
            return Err(Error::CapExceeded {
                what: "matrix brute force",
                cap,
                needed: total,
            });
        }
        let mut out = Vec::new();
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    for d in 0..m {
                        if (a * d + m * m - b * c % m) % m == 1 % m {
                            out.push(RMatrix { m, e: [a, b, c, d] });
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Elements of `N_1`: `I + p X` with `X` running over residues mod `p^(k-1)`.
    pub fn level_one_elements(&self) -> Vec<RMatrix> {
        let m = self.modulus;
        let r = self.p_pow(self.k - 1);
        let mut out = Vec::new();
        for a in 0..r {
            for b in 0..r {
                for c in 0..r {
                    // solve (1+pa)(1+pd) - p^2 bc = 1 for d: (1+pa) is a unit
                    let lead = (1 + self.p * a) % m;
                    let inv = inv_mod(lead, m).expect("unit");
                    let d_entry = (1 + self.p * self.p % m * (b * c % m)) % m * inv % m;
                    out.push(RMatrix {
                        m,
                        e: [lead, self.p * b % m, self.p * c % m, d_entry],
                    });
                }
            }
        }
        out
    }

    /// Cross-checks the order-`p` characterization; returns the number of
    /// order-`p` elements found.
    ///
    /// Inside `N_1` this scans every element; outside it checks over
    /// `SL2(Z/p^2)` that no element with nontrivial reduction mod `p` has
    /// `A^p = I mod p^2` (any order-`p` element reduces to such a matrix).
    pub fn verify_order_p_characterization(&self, cap: u64) -> Result<OrderPReport> {
        if self.k < 2 {
            return Err(Error::Precondition("order-p characterization needs k >= 2".into()));
        }
        let inner = self.p_pow(3 * (self.k - 1));
        if inner > cap {
            return Err(Error::CapExceeded {
                what: "level-one scan",
                cap,
                needed: inner,
            });
        }
        let structural: HashSet<RMatrix> = self.order_p_elements()?.into_iter().collect();
        let mut inside = 0u64;
        for a in self.level_one_elements() {
            let is_order_p = !a.is_identity() && a.pow(self.p as i64).is_identity();
            if is_order_p != structural.contains(&a) {
                return Err(Error::Verification(format!("order-p mismatch at {a:?}")));
            }
            inside += u64::from(is_order_p);
        }
        let ctx2 = ResidueRingContext::new(self.p, 2)?;
        let mut lifts_of_unipotent = 0u64;
        let mut outside = 0u64;
        for a in ctx2.sl2_elements_bruteforce(cap)? {
            if ctx2.filtration_level(&a) >= 1 {
                continue;
            }
            if a.pow(self.p as i64).is_identity() {
                outside += 1;
                if a.reduce_mod(self.p) == ResidueRingContext::new(self.p, 1)?.matrix(1, 1, 0, 1) {
                    lifts_of_unipotent += 1;
                }
            }
        }
        if outside != 0 {
            return Err(Error::Verification(format!(
                "{outside} order-p elements mod p^2 with nontrivial reduction"
            )));
        }
        Ok(OrderPReport {
            order_p_count: inside,
            level_one_scanned: inner,
            unipotent_lifts_of_order_p: lifts_of_unipotent,
        })
    }

    /// All elements of `Yhat`, closed from its generators.
    pub fn yhat_elements(&self) -> Vec<RMatrix> {
        closure(&self.yhat_generators(), &self.identity())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderPReport {
    pub order_p_count: u64,
    pub level_one_scanned: u64,
    pub unipotent_lifts_of_order_p: u64,
}

/// Elements of the group generated by `gens`, in BFS order from the identity.
pub fn closure(gens: &[RMatrix], identity: &RMatrix) -> Vec<RMatrix> {
    let mut seen: HashSet<RMatrix> = HashSet::from([identity.clone()]);
    let mut out = vec![identity.clone()];
    let mut i = 0;
    while i < out.len() {
        for g in gens {
            let h = out[i].mul(g);
            if seen.insert(h.clone()) {
                out.push(h);
            }
        }
        i += 1;
    }
    out
}

/// A 2x2 matrix over `Z/m`, entries `[a, b, c, d]` for `[[a, b], [c, d]]`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RMatrix {
    m: u64,
    e: [u64; 4],
}

impl std::fmt::Debug for RMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let [a, b, c, d] = self.e;
        write!(f, "[[{a},{b}],[{c},{d}]] mod {}", self.m)
    }
}

impl Serialize for RMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.e.serialize(s)
    }
}

impl RMatrix {
    pub fn modulus(&self) -> u64 {
        self.m
    }

    pub fn entries(&self) -> [u64; 4] {
        self.e
    }

    pub fn is_identity(&self) -> bool {
        self.e == [1 % self.m, 0, 0, 1 % self.m]
    }

    pub fn mul(&self, o: &RMatrix) -> RMatrix {
        debug_assert_eq!(self.m, o.m);
        let m = self.m;
        let [a, b, c, d] = self.e;
        let [x, y, z, w] = o.e;
        RMatrix {
            m,
            e: [
                (a * x + b * z) % m,
                (a * y + b * w) % m,
                (c * x + d * z) % m,
                (c * y + d * w) % m,
            ],
        }
    }

    pub fn det(&self) -> u64 {
        let m = self.m;
        let [a, b, c, d] = self.e;
        (a * d % m + m - b * c % m) % m
    }

    pub fn inverse(&self) -> Result<RMatrix> {
        let m = self.m;
        let dinv = inv_mod(self.det(), m)
            .ok_or_else(|| Error::InvalidParameter(format!("{self:?} is not invertible")))?;
        let [a, b, c, d] = self.e;
        Ok(RMatrix {
            m,
            e: [d * dinv % m, (m - b) % m * dinv % m, (m - c) % m * dinv % m, a * dinv % m],
        })
    }

    pub fn neg(&self) -> RMatrix {
        RMatrix {
            m: self.m,
            e: self.e.map(|x| (self.m - x) % self.m),
        }
    }

    pub fn pow(&self, exp: i64) -> RMatrix {
        let base = if exp < 0 {
            self.inverse().expect("invertible")
        } else {
            self.clone()
        };
        let mut acc = RMatrix {
            m: self.m,
            e: [1 % self.m, 0, 0, 1 % self.m],
        };
        let mut sq = base;
        let mut e = exp.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&sq);
            }
            sq = sq.mul(&sq);
            e >>= 1;
        }
        acc
    }

    /// `g^-1 A g`.
    pub fn conjugate(&self, g: &RMatrix) -> RMatrix {
        g.inverse().expect("invertible").mul(self).mul(g)
    }

    pub fn order(&self) -> u64 {
        let mut x = self.clone();
        let mut n = 1;
        while !x.is_identity() {
            x = x.mul(self);
            n += 1;
        }
        n
    }

    /// Dense integer code `((a m + b) m + c) m + d`.
    pub fn encode(&self) -> u64 {
        self.e.iter().fold(0, |acc, &x| acc * self.m + x)
    }

    /// Of `{A, -A}`, the one whose first nonzero entry lies in `1..=(m-1)/2`.
    pub fn projective_canonical(&self) -> RMatrix {
        let first = self.e.iter().copied().find(|&x| x != 0).unwrap_or(0);
        if first > (self.m - 1) / 2 {
            self.neg()
        } else {
            self.clone()
        }
    }

    /// Entrywise reduction modulo a divisor of the modulus.
    pub fn reduce_mod(&self, q: u64) -> RMatrix {
        debug_assert_eq!(self.m % q, 0);
        RMatrix {
            m: q,
            e: self.e.map(|x| x % q),
        }
    }
}

impl GroupElem for RMatrix {
    fn op(&self, other: &Self) -> Self {
        self.mul(other)
    }

    fn inv(&self) -> Self {
        self.inverse().expect("invertible")
    }
}

/// `SL2(Z/m)` acting on right cosets `K h` of a subgroup `K`, with `K` itself
/// as point 0.
pub struct MatrixCosetSpace {
    subgroup: Vec<RMatrix>,
    reps: Vec<RMatrix>,
    index: HashMap<u64, u32>,
}

impl MatrixCosetSpace {
    /// Explores cosets from `K` under `generators`; `cap` bounds the index.
    pub fn new(subgroup: Vec<RMatrix>, generators: &[RMatrix], cap: usize) -> Result<Self> {
        let identity = subgroup
            .iter()
            .find(|x| x.is_identity())
            .cloned()
            .ok_or_else(|| Error::InvalidParameter("subgroup must contain the identity".into()))?;
        let mut space = MatrixCosetSpace {
            subgroup,
            reps: Vec::new(),
            index: HashMap::new(),
        };
        let key = space.key(&identity);
        space.index.insert(key, 0);
        space.reps.push(identity);
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            for g in generators {
                let h = space.reps[i].mul(g);
                let key = space.key(&h);
                if !space.index.contains_key(&key) {
                    if space.reps.len() >= cap {
                        return Err(Error::CapExceeded {
                            what: "coset index",
                            cap: cap as u64,
                            needed: space.reps.len() as u64 + 1,
                        });
                    }
                    space.index.insert(key, space.reps.len() as u32);
                    queue.push_back(space.reps.len());
                    space.reps.push(h);
                }
            }
        }
        Ok(space)
    }

    fn key(&self, h: &RMatrix) -> u64 {
        self.subgroup
            .iter()
            .map(|y| y.mul(h).encode())
            .min()
            .expect("nonempty subgroup")
    }

    pub fn degree(&self) -> usize {
        self.reps.len()
    }

    pub fn representatives(&self) -> &[RMatrix] {
        &self.reps
    }

    pub fn coset_of(&self, h: &RMatrix) -> Option<usize> {
        self.index.get(&self.key(h)).map(|&i| i as usize)
    }

    /// The permutation induced by right multiplication by `g`.
    pub fn perm_of(&self, g: &RMatrix) -> Result<Permutation> {
        let images = self
            .reps
            .iter()
            .map(|h| {
                self.coset_of(&h.mul(g))
                    .map(|i| i as u32)
                    .ok_or_else(|| Error::NotMember(format!("{g:?} leaves the explored cosets")))
            })
            .collect::<Result<Vec<u32>>>()?;
        Permutation::from_images(images)
    }

    /// Does `g` fix every coset? Stops at the first moved coset.
    pub fn acts_trivially(&self, g: &RMatrix) -> bool {
        self.reps
            .iter()
            .enumerate()
            .all(|(i, h)| self.coset_of(&h.mul(g)) == Some(i))
    }

    /// Elements of the subgroup lying in the kernel of the action (its core).
    pub fn core_in_subgroup(&self) -> Vec<RMatrix> {
        self.subgroup
            .iter()
            .filter(|y| self.acts_trivially(y))
            .cloned()
            .collect()
    }
}

/// Matrices with a `p, k` header, for JSON output.
#[derive(Clone, Debug, Serialize)]
pub struct MatrixList {
    pub p: u64,
    pub k: u32,
    pub matrices: Vec<RMatrix>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn w_has_order_p_minus_one() {
        for (p, k) in [(3, 2), (5, 2), (7, 2), (7, 3), (31, 2)] {
            let ctx = ResidueRingContext::new(p, k).unwrap();
            let m = ctx.modulus();
            assert_eq!(pow_mod(ctx.w(), p - 1, m), 1);
            for e in 1..p - 1 {
                assert_ne!(pow_mod(ctx.w(), e, m), 1, "p={p} k={k} e={e}");
            }
        }
    }

    #[test]
    fn sl2_orders_match_brute_force() {
        for (p, k) in [(3, 1), (3, 2), (5, 1)] {
            let ctx = ResidueRingContext::new(p, k).unwrap();
            let n = ctx.sl2_elements_bruteforce(1 << 24).unwrap().len() as u128;
            assert_eq!(n, ctx.sl2_order());
        }
        assert_eq!(ResidueRingContext::new(3, 1).unwrap().sl2_order(), 24);
        assert_eq!(ResidueRingContext::new(3, 2).unwrap().sl2_order(), 648);
        assert_eq!(ResidueRingContext::new(7, 2).unwrap().sl2_order(), 115248);
    }

    #[test]
    fn reduction_examples() {
        let ctx = ResidueRingContext::new(3, 2).unwrap();
        let a1 = ctx.matrix(4, 3, -3, -2);
        assert_eq!(a1, ctx.a_level(1));
        assert!(a1.reduce_mod(3).is_identity());
        assert_eq!(ctx.filtration_level(&a1), 1);
        assert_eq!(ctx.filtration_level(&ctx.identity()), 2);
        assert_eq!(ctx.filtration_level(&ctx.matrix(1, 1, 0, 1)), 0);
    }

    #[test]
    fn level_one_has_expected_size() {
        let ctx = ResidueRingContext::new(3, 2).unwrap();
        let all = ctx.sl2_elements_bruteforce(1 << 24).unwrap();
        let n1 = all.iter().filter(|a| ctx.filtration_level(a) >= 1).count();
        assert_eq!(n1, 27);
        let mut listed = ctx.level_one_elements();
        listed.sort();
        let mut brute: Vec<_> = all.into_iter().filter(|a| ctx.filtration_level(a) >= 1).collect();
        brute.sort();
        assert_eq!(listed, brute);
    }

    fn brute_order_p(ctx: &ResidueRingContext) -> Vec<RMatrix> {
        let p = ctx.p() as i64;
        let mut v: Vec<RMatrix> = ctx
            .sl2_elements_bruteforce(1 << 30)
            .unwrap()
            .into_iter()
            .filter(|a| !a.is_identity() && a.pow(p).is_identity())
            .collect();
        v.sort();
        v
    }

    #[test]
    fn order_p_elements_match_brute_force() {
        for (p, expect) in [(5u64, 124usize), (7, 342)] {
            let ctx = ResidueRingContext::new(p, 2).unwrap();
            let mut listed = ctx.order_p_elements().unwrap();
            listed.sort();
            assert_eq!(listed.len(), expect);
            assert_eq!(listed, brute_order_p(&ctx));
            for a in &listed {
                let tr_off = (a.entries()[0] + a.entries()[3] + ctx.modulus() - 2) % ctx.modulus();
                assert_eq!(tr_off / p % p, 0);
                assert!(a.reduce_mod(p).is_identity());
            }
        }
    }

    #[test]
    fn order_three_elements_escape_the_kernel_mod_nine() {
        // [[0,1],[-1,-1]] has order 3 over the integers, so for p = 3 the
        // order-p elements are not confined to N_(k-1).
        let ctx = ResidueRingContext::new(3, 2).unwrap();
        let brute = brute_order_p(&ctx);
        let inside: Vec<RMatrix> = brute.iter().filter(|a| ctx.filtration_level(a) >= 1).cloned().collect();
        let mut listed = ctx.order_p_elements().unwrap();
        listed.sort();
        assert_eq!(listed.len(), 26);
        assert_eq!(inside, listed);
        assert!(brute.contains(&ctx.matrix(0, 1, -1, -1)));
        assert_eq!(brute.len(), 98);
        assert!(matches!(
            ctx.verify_order_p_characterization(1 << 24),
            Err(Error::Verification(_))
        ));
        let ctx5 = ResidueRingContext::new(5, 2).unwrap();
        assert_eq!(ctx5.verify_order_p_characterization(1 << 24).unwrap().order_p_count, 124);
    }

    #[test]
    fn order_p_characterization_report() {
        let ctx = ResidueRingContext::new(7, 3).unwrap();
        let r = ctx.verify_order_p_characterization(1 << 24).unwrap();
        assert_eq!(r.order_p_count, 342);
        assert_eq!(r.unipotent_lifts_of_order_p, 0);
    }

    #[test]
    fn conjugator_example() {
        let ctx = ResidueRingContext::new(3, 2).unwrap();
        let a = ctx.congruence(1, [1, 1, 0, -1]);
        let d = ctx.conjugator_into_yhat(&a).unwrap();
        assert_eq!(d, ctx.matrix(1, 0, -1, 1));
        assert_eq!(a.conjugate(&d), ctx.congruence(1, [0, 1, 1, 0]));
        let in_p = ctx.congruence(1, [0, 2, 1, 0]);
        assert!(ctx.conjugator_into_yhat(&in_p).unwrap().is_identity());
        assert!(ctx.conjugator_into_yhat(&ctx.identity()).is_err());
        assert!(ctx.conjugator_into_yhat(&ctx.matrix(1, 1, 0, 1)).is_err());
        let diag = ctx.congruence(1, [2, 0, 0, -2]);
        let d = ctx.conjugator_into_yhat(&diag).unwrap();
        assert!(ctx.in_p(&diag.conjugate(&d)));
    }

    #[test]
    fn conjugators_exist_for_every_order_p_element() {
        for p in [3, 5, 7] {
            for k in [2, 3] {
                let ctx = ResidueRingContext::new(p, k).unwrap();
                for a in ctx.order_p_elements().unwrap() {
                    let d = ctx.conjugator_into_yhat(&a).unwrap();
                    assert_eq!(d.det(), 1);
                    assert!(ctx.in_p(&a.conjugate(&d)));
                }
            }
        }
    }

    #[test]
    fn filtration_quotients_are_elementary_abelian() {
        let ctx = ResidueRingContext::new(3, 3).unwrap();
        let p = 3i64;
        for a in ctx.level_one_elements() {
            let l = ctx.filtration_level(&a);
            if l >= ctx.k() {
                continue;
            }
            let q = ctx.p_pow(l);
            let m = ctx.modulus();
            let coef = |x: u64| ((x / q) % 3) as i64;
            let [ea, eb, ec, _] = a.entries();
            let (x, y, z) = (coef((ea + m - 1) % m), coef(eb), coef(ec));
            let approx = ctx
                .a_level(l)
                .pow(x)
                .mul(&ctx.b_level(l).pow((y - x).rem_euclid(p)))
                .mul(&ctx.c_level(l).pow((z + x).rem_euclid(p)));
            let rest = approx.inverse().unwrap().mul(&a);
            assert!(ctx.filtration_level(&rest) > l);
            assert!(ctx.filtration_level(&a.pow(p)) > l);
        }
        for l in 1..3 {
            assert_eq!(ctx.filtration_level(&ctx.a_level(l).pow(p)), l + 1);
            assert_eq!(ctx.filtration_level(&ctx.b_level(l).pow(p)), l + 1);
            assert_eq!(ctx.filtration_level(&ctx.c_level(l).pow(p)), l + 1);
        }
    }

    #[test]
    fn yhat_structure() {
        for (p, k) in [(3, 2), (5, 2), (7, 2), (7, 3)] {
            let ctx = ResidueRingContext::new(p, k).unwrap();
            let y = ctx.yhat_elements();
            assert_eq!(y.len() as u64, ctx.yhat_order());
            assert!(y.contains(&ctx.identity().neg()));
            let in_p = y.iter().filter(|a| ctx.in_p(a)).count() as u64;
            assert_eq!(in_p, p * p);
        }
    }

    #[test]
    fn coset_action_degrees_and_core() {
        for (p, k, deg) in [(3, 2, 18usize), (5, 2, 75), (7, 2, 196)] {
            let ctx = ResidueRingContext::new(p, k).unwrap();
            let space = MatrixCosetSpace::new(ctx.yhat_elements(), &ctx.sl2_generators(), 1 << 20).unwrap();
            assert_eq!(space.degree(), deg);
            let core = space.core_in_subgroup();
            assert_eq!(core.len(), 2);
            assert!(core.contains(&ctx.identity().neg()));
        }
    }

    #[test]
    fn projective_form_picks_one_sign() {
        let ctx = ResidueRingContext::new(7, 2).unwrap();
        let a = ctx.matrix(48, 3, 0, 1);
        let c = a.projective_canonical();
        assert_eq!(c, a.neg().projective_canonical());
        assert_eq!(c.entries()[0], 1);
    }
}
