//! Linear actions over `F_p` (row vectors, `v -> v M`), quadratic forms,
//! subspaces, and the coverage checks over the modules `F_p^3`, `F_3^4`, `F_5^3`.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::catalog::{a5, require_odd_prime};
use crate::error::{Error, Result};
use crate::group::factor_word;
use crate::perm::Permutation;
use crate::presentation::{verify_map_satisfies, GroupElem};

/// Largest `p^d` accepted by exhaustive vector scans.
pub const VECTOR_SCAN_CAP: u64 = 10_000_000;

fn vector_count(p: u64, d: usize) -> Result<u64> {
    let n = p
        .checked_pow(d as u32)
        .ok_or_else(|| Error::InvalidParameter("vector space too large".into()))?;
    if n > VECTOR_SCAN_CAP {
        return Err(Error::CapExceeded {
            what: "vector scan",
            cap: VECTOR_SCAN_CAP,
            needed: n,
        });
    }
    Ok(n)
}

/// Base-`p` code of a vector, first coordinate most significant.
pub fn encode(v: &[u64], p: u64) -> u64 {
    v.iter().fold(0, |acc, &x| acc * p + x)
}

pub fn decode(mut code: u64, p: u64, d: usize) -> Vec<u64> {
    let mut v = vec![0; d];
    for i in (0..d).rev() {
        v[i] = code % p;
        code /= p;
    }
    v
}

fn inv_mod_p(a: u64, p: u64) -> u64 {
    // p prime
    let mut acc = 1;
    let mut b = a % p;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    acc
}

/// A `d x d` matrix over `F_p`; row `i` is the image of the `i`-th basis vector.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FpMatrix {
    p: u64,
    d: usize,
    entries: Vec<u64>,
}

impl std::fmt::Debug for FpMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let rows: Vec<&[u64]> = self.entries.chunks(self.d).collect();
        write!(f, "{rows:?} mod {}", self.p)
    }
}

impl FpMatrix {
    pub fn new(p: u64, d: usize, rows: &[&[i64]]) -> Result<Self> {
        if rows.len() != d || rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidParameter(format!("expected a {d}x{d} matrix")));
        }
        let entries = rows
            .iter()
            .flat_map(|r| r.iter().map(|&x| x.rem_euclid(p as i64) as u64))
            .collect();
        Ok(FpMatrix { p, d, entries })
    }

    pub fn identity(p: u64, d: usize) -> Self {
        let mut entries = vec![0; d * d];
        for i in 0..d {
            entries[i * d + i] = 1;
        }
        FpMatrix { p, d, entries }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn entry(&self, i: usize, j: usize) -> u64 {
        self.entries[i * self.d + j]
    }

    pub fn mul(&self, o: &FpMatrix) -> FpMatrix {
        let d = self.d;
        let mut entries = vec![0; d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.entries[i * d + k];
                if a == 0 {
                    continue;
                }
                for j in 0..d {
                    entries[i * d + j] = (entries[i * d + j] + a * o.entries[k * d + j]) % self.p;
                }
            }
        }
        FpMatrix { p: self.p, d, entries }
    }

    /// `v M` for a row vector `v`.
    pub fn apply(&self, v: &[u64]) -> Vec<u64> {
        let d = self.d;
        (0..d)
            .map(|j| (0..d).map(|i| v[i] * self.entries[i * d + j]).sum::<u64>() % self.p)
            .collect()
    }

    pub fn rank(&self) -> usize {
        let rows: Vec<Vec<u64>> = self.entries.chunks(self.d).map(<[u64]>::to_vec).collect();
        echelon(&rows, self.p).len()
    }

    pub fn is_invertible(&self) -> bool {
        self.rank() == self.d
    }

    pub fn inverse(&self) -> Result<FpMatrix> {
        let d = self.d;
        let p = self.p;
        let mut a: Vec<Vec<u64>> = (0..d)
            .map(|i| {
                let mut row = self.entries[i * d..(i + 1) * d].to_vec();
                row.extend((0..d).map(|j| u64::from(i == j)));
                row
            })
            .collect();
        for col in 0..d {
            let piv = (col..d)
                .find(|&r| a[r][col] != 0)
                .ok_or_else(|| Error::InvalidParameter(format!("{self:?} is singular")))?;
            a.swap(col, piv);
            let inv = inv_mod_p(a[col][col], p);
            for x in a[col].iter_mut() {
                *x = *x * inv % p;
            }
            for r in 0..d {
                if r != col && a[r][col] != 0 {
                    let f = a[r][col];
                    for c in 0..2 * d {
                        a[r][c] = (a[r][c] + p * p - f * a[col][c] % p) % p;
                    }
                }
            }
        }
        let entries = a.iter().flat_map(|r| r[d..].iter().copied()).collect();
        Ok(FpMatrix { p, d, entries })
    }

    pub fn pow(&self, e: u64) -> FpMatrix {
        let mut acc = FpMatrix::identity(self.p, self.d);
        let mut sq = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&sq);
            }
            sq = sq.mul(&sq);
            e >>= 1;
        }
        acc
    }

    pub fn is_identity(&self) -> bool {
        *self == FpMatrix::identity(self.p, self.d)
    }
}

impl GroupElem for FpMatrix {
    fn op(&self, other: &Self) -> Self {
        self.mul(other)
    }

    fn inv(&self) -> Self {
        self.inverse().expect("invertible")
    }
}

/// Reduced row echelon basis of the span of `vectors`.
fn echelon(vectors: &[Vec<u64>], p: u64) -> Vec<Vec<u64>> {
    let mut rows: Vec<Vec<u64>> = vectors.iter().map(|v| v.iter().map(|x| x % p).collect()).collect();
    let d = rows.first().map_or(0, Vec::len);
    let mut basis: Vec<Vec<u64>> = Vec::new();
    let mut pivots: Vec<usize> = Vec::new();
    for col in 0..d {
        let Some(r) = rows.iter().position(|row| row[col] != 0) else {
            continue;
        };
        let mut row = rows.swap_remove(r);
        let inv = inv_mod_p(row[col], p);
        for x in row.iter_mut() {
            *x = *x * inv % p;
        }
        for other in rows.iter_mut().chain(basis.iter_mut()) {
            let f = other[col];
            if f != 0 {
                for c in 0..d {
                    other[c] = (other[c] + p - f * row[c] % p) % p;
                }
            }
        }
        basis.push(row);
        pivots.push(col);
    }
    basis
}

/// A subspace of `F_p^d`, stored by its reduced row echelon basis.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Subspace {
    pub p: u64,
    pub d: usize,
    pub basis: Vec<Vec<u64>>,
}

impl Subspace {
    pub fn span(p: u64, d: usize, vectors: &[Vec<i64>]) -> Self {
        let v: Vec<Vec<u64>> = vectors
            .iter()
            .map(|v| v.iter().map(|&x| x.rem_euclid(p as i64) as u64).collect())
            .collect();
        Subspace::from_vectors(p, d, &v)
    }

    pub fn from_vectors(p: u64, d: usize, vectors: &[Vec<u64>]) -> Self {
        let basis = if vectors.is_empty() {
            Vec::new()
        } else {
            echelon(vectors, p)
        };
        Subspace { p, d, basis }
    }

    pub fn whole(p: u64, d: usize) -> Self {
        let vectors: Vec<Vec<u64>> = (0..d).map(|i| (0..d).map(|j| u64::from(i == j)).collect()).collect();
        Subspace::from_vectors(p, d, &vectors)
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn order(&self) -> u64 {
        self.p.pow(self.dim() as u32)
    }

    pub fn contains(&self, v: &[u64]) -> bool {
        let mut rows = self.basis.clone();
        rows.push(v.to_vec());
        echelon(&rows, self.p).len() == self.dim()
    }

    /// Every vector of the subspace, as base-`p` codes in ascending order.
    pub fn codes(&self) -> Vec<u64> {
        let n = self.order();
        let mut out: Vec<u64> = (0..n)
            .map(|c| {
                let coeffs = decode(c, self.p, self.dim());
                let mut v = vec![0u64; self.d];
                for (k, b) in coeffs.iter().zip(&self.basis) {
                    for j in 0..self.d {
                        v[j] = (v[j] + k * b[j]) % self.p;
                    }
                }
                encode(&v, self.p)
            })
            .collect();
        out.sort_unstable();
        out
    }

    pub fn image(&self, g: &FpMatrix) -> Subspace {
        let imgs: Vec<Vec<u64>> = self.basis.iter().map(|b| g.apply(b)).collect();
        Subspace::from_vectors(self.p, self.d, &imgs)
    }

    pub fn is_invariant(&self, g: &FpMatrix) -> bool {
        self.basis.iter().all(|b| self.contains(&g.apply(b)))
    }
}

/// `Q(v) = sum_{i <= j} c_ij v_i v_j`, coefficients keyed by `(i, j)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadraticForm {
    pub terms: Vec<((usize, usize), i64)>,
}

impl QuadraticForm {
    /// `Q(a, b, c) = 4ac + b^2`.
    pub fn orthogonal_three() -> Self {
        QuadraticForm {
            terms: vec![((0, 2), 4), ((1, 1), 1)],
        }
    }

    pub fn eval(&self, v: &[u64], p: u64) -> u64 {
        let pi = p as i64;
        self.terms
            .iter()
            .map(|&((i, j), c)| c.rem_euclid(pi) as u64 * v[i] % p * v[j] % p)
            .sum::<u64>()
            % p
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VectorSpaceAction {
    pub p: u64,
    pub d: usize,
    pub generators: Vec<FpMatrix>,
    pub form: Option<QuadraticForm>,
}

impl VectorSpaceAction {
    /// Checks that every generator is invertible and, exhaustively, preserves the form.
    pub fn new(p: u64, d: usize, generators: Vec<FpMatrix>, form: Option<QuadraticForm>) -> Result<Self> {
        require_odd_prime(p)?;
        for g in &generators {
            if g.p() != p || g.dim() != d || !g.is_invertible() {
                return Err(Error::InvalidParameter(format!("bad generator {g:?}")));
            }
        }
        let action = VectorSpaceAction {
            p,
            d,
            generators,
            form,
        };
        if let Some((g, v)) = action.form_violation()? {
            return Err(Error::Verification(format!("generator {g} does not preserve the form at {v:?}")));
        }
        Ok(action)
    }

    /// First `(generator, vector)` with `Q(v g) != Q(v)`, scanning every vector.
    pub fn form_violation(&self) -> Result<Option<(usize, Vec<u64>)>> {
        let Some(form) = &self.form else {
            return Ok(None);
        };
        let n = vector_count(self.p, self.d)?;
        for code in 0..n {
            let v = decode(code, self.p, self.d);
            let q = form.eval(&v, self.p);
            for (i, g) in self.generators.iter().enumerate() {
                if form.eval(&g.apply(&v), self.p) != q {
                    return Ok(Some((i, v)));
                }
            }
        }
        Ok(None)
    }

    /// Number of vectors checked by [`form_violation`](Self::form_violation).
    pub fn vector_count(&self) -> Result<u64> {
        vector_count(self.p, self.d)
    }

    /// Elements of the generated matrix group, in BFS order.
    pub fn group_elements(&self, cap: usize) -> Result<Vec<FpMatrix>> {
        matrix_closure(&self.generators, &FpMatrix::identity(self.p, self.d), cap)
    }
}

pub fn matrix_closure(gens: &[FpMatrix], identity: &FpMatrix, cap: usize) -> Result<Vec<FpMatrix>> {
    let mut seen: HashSet<FpMatrix> = HashSet::from([identity.clone()]);
    let mut out = vec![identity.clone()];
    let mut i = 0;
    while i < out.len() {
        for g in gens {
            let h = out[i].mul(g);
            if !seen.contains(&h) {
                if out.len() >= cap {
                    return Err(Error::CapExceeded {
                        what: "matrix group order",
                        cap: cap as u64,
                        needed: out.len() as u64 + 1,
                    });
                }
                seen.insert(h.clone());
                out.push(h);
            }
        }
        i += 1;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitWitness {
    pub representative: Vec<u64>,
    pub orbit_size: u64,
    /// Generator indices whose product maps the representative into the target.
    pub word: Vec<usize>,
    pub image: Option<Vec<u64>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub covered: bool,
    pub orbits: Vec<OrbitWitness>,
}

impl CoverageReport {
    /// Replays every witness word and checks the image lies in `target`.
    pub fn replay(&self, action: &VectorSpaceAction, target: &Subspace) -> bool {
        self.orbits.iter().all(|o| match &o.image {
            None => false,
            Some(img) => {
                let v = o
                    .word
                    .iter()
                    .fold(o.representative.clone(), |v, &g| action.generators[g].apply(&v));
                v == *img && target.contains(img)
            }
        })
    }
}

/// Does every orbit on nonzero vectors meet `target`? Orbits are explored by
/// BFS from their least vector; each witness is a path in that BFS tree.
pub fn orbit_coverage_check(action: &VectorSpaceAction, target: &Subspace) -> Result<CoverageReport> {
    let n = vector_count(action.p, action.d)? as usize;
    let in_target: HashSet<u64> = target.codes().into_iter().collect();
    let mut seen = vec![false; n];
    let mut parent = vec![(u32::MAX, u32::MAX); n];
    let mut orbits = Vec::new();
    let mut covered = true;
    for start in 1..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut order = vec![start];
        let mut head = 0;
        let mut hit: Option<usize> = None;
        while head < order.len() {
            let c = order[head];
            if hit.is_none() && in_target.contains(&(c as u64)) {
                hit = Some(c);
            }
            let v = decode(c as u64, action.p, action.d);
            for (gi, g) in action.generators.iter().enumerate() {
                let w = encode(&g.apply(&v), action.p) as usize;
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = (c as u32, gi as u32);
                    order.push(w);
                }
            }
            head += 1;
        }
        let (word, image) = match hit {
            Some(h) => {
                let mut word = Vec::new();
                let mut cur = h;
                while cur != start {
                    let (prev, g) = parent[cur];
                    word.push(g as usize);
                    cur = prev as usize;
                }
                word.reverse();
                (word, Some(decode(h as u64, action.p, action.d)))
            }
            None => {
                covered = false;
                (Vec::new(), None)
            }
        };
        orbits.push(OrbitWitness {
            representative: decode(start as u64, action.p, action.d),
            orbit_size: order.len() as u64,
            word,
            image,
        });
    }
    Ok(CoverageReport { covered, orbits })
}

pub fn form_values_on_subspace(action: &VectorSpaceAction, sub: &Subspace) -> Result<BTreeSet<u64>> {
    let form = action
        .form
        .as_ref()
        .ok_or_else(|| Error::Precondition("action carries no quadratic form".into()))?;
    Ok(sub
        .codes()
        .into_iter()
        .map(|c| form.eval(&decode(c, sub.p, sub.d), sub.p))
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlaneType {
    Plus,
    Minus,
    Degenerate,
}

/// Number of nonzero vectors `v` in `sub` with `Q(v) = 0`.
pub fn singular_count(form: &QuadraticForm, sub: &Subspace) -> u64 {
    sub.codes()
        .into_iter()
        .filter(|&c| c != 0 && form.eval(&decode(c, sub.p, sub.d), sub.p) == 0)
        .count() as u64
}

pub fn plane_type(form: &QuadraticForm, sub: &Subspace) -> PlaneType {
    match singular_count(form, sub) {
        0 => PlaneType::Minus,
        n if n == 2 * (sub.p - 1) => PlaneType::Plus,
        _ => PlaneType::Degenerate,
    }
}

/// All 2-subspaces of `F_p^3`, as kernels of the functionals `v . n` with `n`
/// running over normalized nonzero vectors (first nonzero coordinate 1).
pub fn all_planes(p: u64) -> Vec<Subspace> {
    let mut out = Vec::new();
    for code in 1..p.pow(3) {
        let n = decode(code, p, 3);
        if n.iter().find(|&&x| x != 0) != Some(&1) {
            continue;
        }
        let members: Vec<Vec<u64>> = (0..p.pow(3))
            .map(|c| decode(c, p, 3))
            .filter(|v| v.iter().zip(&n).map(|(a, b)| a * b).sum::<u64>() % p == 0)
            .collect();
        out.push(Subspace::from_vectors(p, 3, &members));
    }
    out
}

/// 2-subspaces invariant under every matrix in `subgroup_gens`, with their types.
pub fn invariant_two_subspaces(
    action: &VectorSpaceAction,
    subgroup_gens: &[FpMatrix],
) -> Result<Vec<(Subspace, PlaneType)>> {
    if action.d != 3 {
        return Err(Error::Precondition("plane scan needs dimension 3".into()));
    }
    let form = action
        .form
        .as_ref()
        .ok_or_else(|| Error::Precondition("action carries no quadratic form".into()))?;
    Ok(all_planes(action.p)
        .into_iter()
        .filter(|s| subgroup_gens.iter().all(|g| s.is_invariant(g)))
        .map(|s| {
            let t = plane_type(form, &s);
            (s, t)
        })
        .collect())
}

/// No proper nonzero invariant subspace: every cyclic submodule is the whole space.
pub fn is_irreducible(action: &VectorSpaceAction) -> Result<bool> {
    let n = vector_count(action.p, action.d)?;
    for code in 1..n {
        let v = decode(code, action.p, action.d);
        let mut span = Subspace::from_vectors(action.p, action.d, &[v]);
        loop {
            let mut vecs = span.basis.clone();
            for b in &span.basis {
                for g in &action.generators {
                    vecs.push(g.apply(b));
                }
            }
            let next = Subspace::from_vectors(action.p, action.d, &vecs);
            if next.dim() == span.dim() {
                break;
            }
            span = next;
        }
        if span.dim() < action.d {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The matrices of the two generators of the orthogonal action on `F_p^3`:
/// `S = [[1,0,0],[1,1,0],[-1,-2,1]]`, `T = [[0,0,-1],[0,-1,0],[-1,0,0]]`.
pub fn psi_generators(p: u64) -> Vec<FpMatrix> {
    vec![
        FpMatrix::new(p, 3, &[&[1, 0, 0], &[1, 1, 0], &[-1, -2, 1]]).expect("3x3"),
        FpMatrix::new(p, 3, &[&[0, 0, -1], &[0, -1, 0], &[-1, 0, 0]]).expect("3x3"),
    ]
}

pub fn psi_action(p: u64) -> Result<VectorSpaceAction> {
    VectorSpaceAction::new(p, 3, psi_generators(p), Some(QuadraticForm::orthogonal_three()))
}

/// A5 generators `x = (1,2)(3,4)`, `y = (1,3,5)` on five points.
pub fn a5_points() -> [Permutation; 2] {
    [
        Permutation::parse_cycles("(1,2)(3,4)", 5).expect("valid"),
        Permutation::parse_cycles("(1,3,5)", 5).expect("valid"),
    ]
}

/// Matrices of `x`, `y` on `U = F_3^4` with basis `u_i = e_i - e_5`.
pub fn u_generators() -> Vec<FpMatrix> {
    vec![
        FpMatrix::new(3, 4, &[&[0, 1, 0, 0], &[1, 0, 0, 0], &[0, 0, 0, 1], &[0, 0, 1, 0]]).expect("4x4"),
        FpMatrix::new(3, 4, &[&[-1, 0, 1, 0], &[-1, 1, 0, 0], &[-1, 0, 0, 0], &[-1, 0, 0, 1]]).expect("4x4"),
    ]
}

/// Matrices of `x`, `y` on `V = F_5^3` with basis `v_i = e_i - e_5` modulo the all-ones vector.
pub fn v_generators() -> Vec<FpMatrix> {
    vec![
        FpMatrix::new(5, 3, &[&[0, 1, 0], &[1, 0, 0], &[-1, -1, -1]]).expect("3x3"),
        FpMatrix::new(5, 3, &[&[-1, 0, 1], &[-1, 1, 0], &[-1, 0, 0]]).expect("3x3"),
    ]
}

/// Matrix of a permutation of five points on the deleted permutation module:
/// `u_i -> u_(i^g) - u_(5^g)` with `u_5 = 0`, and over `F_5` additionally
/// `u_4 = -(u_1 + u_2 + u_3)`.
pub fn deleted_module_matrix(g: &Permutation, p: u64) -> FpMatrix {
    let d = if p == 5 { 3 } else { 4 };
    let basis_vec = |i: usize| -> Vec<i64> {
        let mut v = vec![0i64; d];
        if i < d {
            v[i] = 1;
        } else if i == 3 {
            v = vec![-1; d];
        }
        v
    };
    let rows: Vec<Vec<i64>> = (0..d)
        .map(|i| {
            let a = basis_vec(g.image(i));
            let b = basis_vec(g.image(4));
            a.iter().zip(&b).map(|(x, y)| x - y).collect()
        })
        .collect();
    let refs: Vec<&[i64]> = rows.iter().map(Vec::as_slice).collect();
    FpMatrix::new(p, d, &refs).expect("square")
}

pub fn u_action() -> VectorSpaceAction {
    VectorSpaceAction::new(3, 4, u_generators(), None).expect("valid")
}

pub fn v_action() -> VectorSpaceAction {
    VectorSpaceAction::new(5, 3, v_generators(), None).expect("valid")
}

/// `M n U = <u1 u2, u2 u3^-1, u3 u4>`.
pub fn m_cap_u() -> Subspace {
    Subspace::span(3, 4, &[vec![1, 1, 0, 0], vec![0, 1, -1, 0], vec![0, 0, 1, 1]])
}

/// `M n V = <v1 v2, v2 v3^-1>`.
pub fn m_cap_v() -> Subspace {
    Subspace::span(5, 3, &[vec![1, 1, 0], vec![0, 1, -1]])
}

/// Conjugating elements for the six translates `U_1..U_6` of `M n U`.
pub const U_TRANSLATORS: [&str; 6] = ["()", "(1,4,5)", "(2,4,5)", "(3,4,5)", "(4,2,5)", "(4,3,5)"];

/// Triples of translates whose intersection has order 9 (1-based).
pub const U_LARGE_TRIPLES: [[usize; 3]; 4] = [[1, 3, 5], [1, 4, 6], [2, 3, 6], [2, 4, 5]];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct A5CoverageReport {
    /// Words in `x`, `y` (letters 1, 2) for each translator.
    pub translator_words: Vec<String>,
    pub subspace_orders: Vec<u64>,
    /// Intersection orders keyed by 1-based index sets.
    pub intersections: BTreeMap<String, u64>,
    pub union_order: u64,
    pub inclusion_exclusion: i64,
    pub passed: bool,
    pub failures: Vec<String>,
}

/// Translates `M n U` by the six listed elements and checks every intersection
/// order and the union.
pub fn a5_u_coverage() -> Result<A5CoverageReport> {
    let gens = a5_points();
    let id5 = Permutation::identity(5);
    let umats = u_generators();
    let id_u = FpMatrix::identity(3, 4);
    let base = m_cap_u();
    let mut failures = Vec::new();
    let mut words = Vec::new();
    let mut sets: Vec<BTreeSet<u64>> = Vec::new();
    for t in U_TRANSLATORS {
        let g = Permutation::parse_cycles(t, 5)?;
        let w = factor_word(&gens, &g, 60)?;
        if w.evaluate(&gens, &id5) != g {
            return Err(Error::InvariantBreach(format!("word for {t} does not evaluate back")));
        }
        let mat = w.evaluate(&umats, &id_u);
        if mat != deleted_module_matrix(&g, 3) {
            failures.push(format!("matrix of {t} disagrees with the permutation module"));
        }
        words.push(w.display(&["x".to_string(), "y".to_string()]));
        sets.push(base.image(&mat).codes().into_iter().collect());
    }
    let subspace_orders: Vec<u64> = sets.iter().map(|s| s.len() as u64).collect();
    if subspace_orders.iter().any(|&o| o != 27) {
        failures.push(format!("translate orders {subspace_orders:?}, expected 27"));
    }
    let mut intersections = BTreeMap::new();
    let mut ie: i64 = 0;
    for mask in 1u32..64 {
        let idx: Vec<usize> = (0..6).filter(|i| mask >> i & 1 == 1).collect();
        let mut inter = sets[idx[0]].clone();
        for &i in &idx[1..] {
            inter = inter.intersection(&sets[i]).copied().collect();
        }
        let order = inter.len() as u64;
        let sign = if idx.len() % 2 == 1 { 1 } else { -1 };
        ie += sign * order as i64;
        let key = idx.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(",");
        let expected = match idx.len() {
            1 => 27,
            2 => 9,
            3 => {
                let one_based = [idx[0] + 1, idx[1] + 1, idx[2] + 1];
                if U_LARGE_TRIPLES.contains(&one_based) {
                    9
                } else {
                    3
                }
            }
            4..=6 => 3,
            _ => unreachable!(),
        };
        if idx.len() <= 4 && order != expected {
            failures.push(format!("|U_{{{key}}}| = {order}, expected {expected}"));
        }
        if idx.len() >= 2 {
            intersections.insert(key, order);
        }
    }
    let union: BTreeSet<u64> = sets.iter().flatten().copied().collect();
    let union_order = union.len() as u64;
    if union_order != 81 {
        failures.push(format!("union has order {union_order}, expected 81"));
    }
    if ie != union_order as i64 {
        failures.push(format!("inclusion-exclusion gives {ie}, union has {union_order}"));
    }
    Ok(A5CoverageReport {
        translator_words: words,
        subspace_orders,
        intersections,
        union_order,
        inclusion_exclusion: ie,
        passed: failures.is_empty(),
        failures,
    })
}

/// Checks that `x -> X`, `y -> Y` satisfies `x^2 = y^3 = (xy)^5 = 1`.
pub fn satisfies_a5_relators(mats: &[FpMatrix]) -> Result<bool> {
    let id = FpMatrix::identity(mats[0].p(), mats[0].dim());
    Ok(verify_map_satisfies(&a5(), mats, &id)?.satisfied)
}

/// Breadth-first queue helper for orbit scans on plane sets.
pub fn plane_orbit(gens: &[FpMatrix], start: &Subspace) -> Vec<Subspace> {
    let mut seen: HashSet<Subspace> = HashSet::from([start.clone()]);
    let mut out = vec![start.clone()];
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        for g in gens {
            let img = out[i].image(g);
            if seen.insert(img.clone()) {
                queue.push_back(out.len());
                out.push(img);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_inverse_and_apply() {
        let [s, t] = <[FpMatrix; 2]>::try_from(psi_generators(7)).unwrap();
        assert!(s.mul(&s.inverse().unwrap()).is_identity());
        assert!(t.mul(&t).is_identity());
        assert_eq!(s.apply(&[0, 1, 0]), vec![1, 1, 0]);
        assert_eq!(s.pow(7), FpMatrix::identity(7, 3));
    }

    #[test]
    fn psi_preserves_form_on_every_vector() {
        let action = psi_action(7).unwrap();
        assert_eq!(action.vector_count().unwrap(), 343);
        assert_eq!(action.form_violation().unwrap(), None);
        let bad = FpMatrix::new(7, 3, &[&[2, 0, 0], &[0, 1, 0], &[0, 0, 1]]).unwrap();
        assert!(VectorSpaceAction::new(7, 3, vec![bad], Some(QuadraticForm::orthogonal_three())).is_err());
    }

    #[test]
    fn psi_satisfies_quotient_relators() {
        for p in [7u64, 31] {
            let pres = crate::catalog::mersenne_quotient(p).unwrap();
            let g = psi_generators(p);
            let id = FpMatrix::identity(p, 3);
            assert!(verify_map_satisfies(&pres, &g, &id).unwrap().satisfied);
        }
    }

    #[test]
    fn psi_group_orders() {
        assert_eq!(psi_action(7).unwrap().group_elements(1 << 20).unwrap().len(), 168);
        assert_eq!(psi_action(5).unwrap().group_elements(1 << 20).unwrap().len(), 60);
    }

    #[test]
    fn form_values() {
        let action = psi_action(7).unwrap();
        let zero = Subspace::from_vectors(7, 3, &[]);
        assert_eq!(form_values_on_subspace(&action, &zero).unwrap(), BTreeSet::from([0]));
        let line = Subspace::span(7, 3, &[vec![1, 0, 0]]);
        assert_eq!(form_values_on_subspace(&action, &line).unwrap(), BTreeSet::from([0]));
        let plain = u_action();
        assert!(form_values_on_subspace(&plain, &m_cap_u()).is_err());
    }

    #[test]
    fn plane_scan_counts() {
        let action = psi_action(7).unwrap();
        assert_eq!(invariant_two_subspaces(&action, &[]).unwrap().len(), 57);
        assert!(invariant_two_subspaces(&action, &action.generators).unwrap().is_empty());
        let planes = all_planes(7);
        let plus = planes
            .iter()
            .filter(|s| plane_type(action.form.as_ref().unwrap(), s) == PlaneType::Plus)
            .count();
        assert_eq!(plus, 28);
    }

    #[test]
    fn plus_planes_realize_every_norm() {
        let action = psi_action(7).unwrap();
        let form = action.form.clone().unwrap();
        for s in all_planes(7) {
            if plane_type(&form, &s) == PlaneType::Plus {
                assert_eq!(form_values_on_subspace(&action, &s).unwrap().len(), 7);
            }
        }
    }

    #[test]
    fn coverage_of_whole_space_and_witness_replay() {
        let action = psi_action(7).unwrap();
        let whole = Subspace::whole(7, 3);
        let r = orbit_coverage_check(&action, &whole).unwrap();
        assert!(r.covered);
        assert!(r.replay(&action, &whole));
        let line = Subspace::span(7, 3, &[vec![1, 0, 0]]);
        let r = orbit_coverage_check(&action, &line).unwrap();
        assert!(!r.covered);
        assert_eq!(r.orbits.iter().map(|o| o.orbit_size).sum::<u64>(), 342);
    }

    #[test]
    fn module_matrices_match_permutation_module() {
        let [x, y] = a5_points();
        assert_eq!(deleted_module_matrix(&x, 3), u_generators()[0]);
        assert_eq!(deleted_module_matrix(&y, 3), u_generators()[1]);
        assert_eq!(deleted_module_matrix(&x, 5), v_generators()[0]);
        assert_eq!(deleted_module_matrix(&y, 5), v_generators()[1]);
        assert!(satisfies_a5_relators(&u_generators()).unwrap());
        assert!(satisfies_a5_relators(&v_generators()).unwrap());
    }

    #[test]
    fn deleted_modules_are_irreducible() {
        assert!(is_irreducible(&u_action()).unwrap());
        assert!(is_irreducible(&v_action()).unwrap());
        let t = VectorSpaceAction::new(3, 2, vec![FpMatrix::new(3, 2, &[&[1, 1], &[0, 1]]).unwrap()], None).unwrap();
        assert!(!is_irreducible(&t).unwrap());
    }

    #[test]
    fn v_coverage_by_m() {
        let r = orbit_coverage_check(&v_action(), &m_cap_v()).unwrap();
        assert!(r.covered);
        assert!(r.replay(&v_action(), &m_cap_v()));
    }

    #[test]
    fn u_translates_cover_u() {
        let r = a5_u_coverage().unwrap();
        assert!(r.passed, "{:?}", r.failures);
        assert_eq!(r.union_order, 81);
        assert_eq!(r.intersections["1,3,5"], 9);
        assert_eq!(r.intersections["1,2,3"], 3);
        assert_eq!(r.intersections.iter().filter(|(k, _)| k.matches(',').count() == 1).count(), 15);
        let r2 = orbit_coverage_check(&u_action(), &m_cap_u()).unwrap();
        assert!(r2.covered);
    }
}
