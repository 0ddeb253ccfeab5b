//! The transitive groups studied here, assembled into uniform bundles: an
//! action on points, the distinguished normal subgroup `N`, candidate
//! elementary abelian subgroups `E`, and the expected verdicts.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::catalog::{self, is_mersenne_prime, is_prime};
use crate::error::{Error, Result};
use crate::group::{coset_action, PermGroup};
use crate::linear::{
    self, all_planes, encode, decode, matrix_closure, plane_type, psi_action, FpMatrix,
    PlaneType, QuadraticForm, Subspace,
};
use crate::perm::Permutation;
use crate::presentation::{action_from_table, coset_enumerate, Presentation, DEFAULT_MAX_COSETS};
use crate::residue::{closure, MatrixCosetSpace, ResidueRingContext};

/// Largest degree for which the deterministic Schreier–Sims is used.
pub const DETERMINISTIC_BSGS_DEGREE: usize = 5_000;

/// Largest point count for matrix coset spaces built here.
pub const DEGREE_CAP: usize = 1_000_000;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Params {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub k: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub stab: Option<String>,
}

/// What a verifier should find.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expectation {
    /// `None` when no verdict is claimed.
    pub elusive: Option<bool>,
    /// Primes with a prime-order derangement.
    pub non_elusive_primes: Vec<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metadata {
    pub degree_formula: String,
    pub claimed_order: u64,
    /// `"split"`, `"non-split"`, or absent.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub extension: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mersenne: Option<bool>,
    pub expectation: Expectation,
}

/// A transitive permutation group with its distinguished subgroups.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstructedGroup {
    pub name: String,
    pub params: Params,
    pub degree: usize,
    pub generators: Vec<Permutation>,
    pub order: u64,
    pub stabilizer_order: u64,
    pub n_generators: Vec<Permutation>,
    pub n_order: u64,
    pub e_choices: BTreeMap<String, Vec<Permutation>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub default_e: Option<String>,
    pub metadata: Metadata,
    #[serde(default)]
    pub hash: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Chain for a group of known order: deterministic when the degree is small,
/// otherwise seeded random sifting validated against the order.
pub fn bsgs_known_order(generators: &[Permutation], order: u64) -> Result<PermGroup> {
    let degree = generators.first().map_or(0, Permutation::degree);
    let g = if degree <= DETERMINISTIC_BSGS_DEGREE {
        PermGroup::new(generators)?
    } else {
        PermGroup::with_known_order(generators, order as u128, 1_000_000)?
    };
    if g.order() != order as u128 {
        return Err(Error::Verification(format!("group order {} differs from {order}", g.order())));
    }
    Ok(g)
}

impl ConstructedGroup {
    /// SHA-256 of the canonical JSON with the hash field emptied.
    pub fn content_hash(&self) -> String {
        let mut c = self.clone();
        c.hash = String::new();
        sha256_hex(serde_json::to_string(&c).expect("serializes").as_bytes())
    }

    pub fn seal(mut self) -> Self {
        self.hash = self.content_hash();
        self
    }

    pub fn verify_hash(&self) -> Result<()> {
        let h = self.content_hash();
        if h != self.hash {
            return Err(Error::Verification(format!("content hash {h} does not match recorded {}", self.hash)));
        }
        Ok(())
    }

    pub fn build_group(&self) -> Result<PermGroup> {
        bsgs_known_order(&self.generators, self.order)
    }

    pub fn n_group(&self) -> Result<PermGroup> {
        if self.n_generators.is_empty() {
            return Ok(PermGroup::trivial(self.degree));
        }
        bsgs_known_order(&self.n_generators, self.n_order)
    }

    pub fn e_generators(&self, choice: Option<&str>) -> Result<&[Permutation]> {
        let key = choice
            .or(self.default_e.as_deref())
            .ok_or_else(|| Error::InvalidParameter(format!("{} has no designated E", self.name)))?;
        self.e_choices
            .get(key)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::InvalidParameter(format!("{} has no E named {key}", self.name)))
    }

    /// Transitivity, orbit-stabilizer, normality of `N` and the shape of every `E`.
    pub fn check_invariants(&self, group: &PermGroup) -> Result<()> {
        if !group.is_transitive() {
            return Err(Error::InvariantBreach(format!("{} is not transitive", self.name)));
        }
        if group.order() != self.order as u128 || self.degree as u64 * self.stabilizer_order != self.order {
            return Err(Error::InvariantBreach(format!("{}: degree times stabilizer order is not the order", self.name)));
        }
        if !self.n_generators.is_empty() {
            let n = self.n_group()?;
            if !group.normalizes(&n) {
                return Err(Error::InvariantBreach(format!("{}: N is not normal", self.name)));
            }
        }
        for (key, gens) in &self.e_choices {
            elementary_abelian_rank(gens)
                .ok_or_else(|| Error::InvariantBreach(format!("{}: E {key} is not elementary abelian", self.name)))?;
        }
        Ok(())
    }
}

/// `(r, rank)` if the generators commute pairwise and have a common prime
/// order `r`; the rank is computed from the generated group's order.
pub fn elementary_abelian_rank(gens: &[Permutation]) -> Option<(u64, u32)> {
    let r = gens.first()?.order();
    if !is_prime(r) || gens.iter().any(|g| g.order() != r) {
        return None;
    }
    for (i, a) in gens.iter().enumerate() {
        for b in &gens[i + 1..] {
            if a.mul(b) != b.mul(a) {
                return None;
            }
        }
    }
    let order = PermGroup::new(gens).ok()?.order();
    let mut rank = 0;
    let mut o = order;
    while o > 1 {
        if o % r as u128 != 0 {
            return None;
        }
        o /= r as u128;
        rank += 1;
    }
    Some((r, rank))
}

fn sl2_expectation(p: u64) -> Expectation {
    if is_mersenne_prime(p) && p >= 7 {
        Expectation {
            elusive: Some(true),
            non_elusive_primes: Vec::new(),
        }
    } else if p == 5 {
        Expectation {
            elusive: Some(false),
            non_elusive_primes: vec![3],
        }
    } else {
        Expectation::default()
    }
}

/// `SL2(Z/p^k)` on the right cosets of `Yhat`, i.e. `X = SL2(Z/p^k)/{+-I}`
/// of degree `p^(3k-4)(p+1)/2`.
pub fn build_sl2_quotient(p: u64, k: u32) -> Result<ConstructedGroup> {
    if k < 2 {
        return Err(Error::InvalidParameter("k must be at least 2".into()));
    }
    let ctx = ResidueRingContext::new(p, k)?;
    let degree = p.pow(3 * k - 4) * (p + 1) / 2;
    if degree > DEGREE_CAP as u64 {
        return Err(Error::CapExceeded {
            what: "sl2-quotient degree",
            cap: DEGREE_CAP as u64,
            needed: degree,
        });
    }
    let space = MatrixCosetSpace::new(ctx.yhat_elements(), &ctx.sl2_generators(), DEGREE_CAP)?;
    if space.degree() as u64 != degree {
        return Err(Error::InvariantBreach(format!("coset count {} differs from {degree}", space.degree())));
    }
    let perms = |ms: Vec<_>| ms.iter().map(|m| space.perm_of(m)).collect::<Result<Vec<_>>>();
    let generators = perms(ctx.sl2_generators())?;
    let n_generators = perms(vec![ctx.a_level(1), ctx.b_level(1), ctx.c_level(1)])?;
    let bottom = perms(vec![ctx.a_level(k - 1), ctx.b_level(k - 1), ctx.c_level(k - 1)])?;
    let order = (ctx.sl2_order() / 2) as u64;
    Ok(ConstructedGroup {
        name: "sl2-quotient".into(),
        params: Params {
            p: Some(p),
            k: Some(k),
            stab: None,
        },
        degree: degree as usize,
        generators,
        order,
        stabilizer_order: ctx.yhat_order() / 2,
        n_generators,
        n_order: p.pow(3 * (k - 1)),
        e_choices: BTreeMap::from([("bottom".to_string(), bottom)]),
        default_e: Some("bottom".into()),
        metadata: Metadata {
            degree_formula: "p^(3k-4)(p+1)/2".into(),
            claimed_order: order,
            extension: Some("non-split".into()),
            mersenne: Some(is_mersenne_prime(p)),
            expectation: sl2_expectation(p),
        },
        hash: String::new(),
    }
    .seal())
}

/// The `(C_3^4 x C_5^3).A5` extension acting on the cosets of `Y` (225 points)
/// or `W` (450 points).
pub fn build_a5_mixed(stab: &str) -> Result<ConstructedGroup> {
    build_a5_mixed_with(stab, DEFAULT_MAX_COSETS)
}

pub fn build_a5_mixed_with(stab: &str, max_cosets: usize) -> Result<ConstructedGroup> {
    let words = match stab {
        "Y" => catalog::a5_extension_y_words(),
        "W" => catalog::a5_extension_w_words(),
        other => return Err(Error::InvalidParameter(format!("stabilizer choice {other} is not Y or W"))),
    };
    let pres = catalog::a5_extension();
    let sub = catalog::parse_words(&pres, &words)?;
    let table = coset_enumerate(&pres, &sub, max_cosets)?;
    let generators = action_from_table(&table);
    let degree = table.count();
    let order = 607_500u64;
    let group = bsgs_known_order(&generators, order)?;
    let n_generators = generators[..7].to_vec();
    let e_choices = BTreeMap::from([
        ("U".to_string(), generators[..4].to_vec()),
        ("V".to_string(), generators[4..7].to_vec()),
    ]);
    Ok(ConstructedGroup {
        name: "a5-mixed".into(),
        params: Params {
            stab: Some(stab.into()),
            ..Params::default()
        },
        degree,
        generators,
        order,
        stabilizer_order: (group.order() / degree as u128) as u64,
        n_generators,
        n_order: 81 * 125,
        e_choices,
        default_e: Some("U".into()),
        metadata: Metadata {
            degree_formula: if stab == "Y" { "5^2 3^2" } else { "5^2 3^2 2" }.into(),
            claimed_order: order,
            extension: Some("non-split".into()),
            mersenne: None,
            expectation: Expectation {
                elusive: Some(true),
                non_elusive_primes: Vec::new(),
            },
        },
        hash: String::new(),
    }
    .seal())
}

/// Inputs for the certificate of the `C_p^3 . PSL2(p)` extension; no
/// permutation action of the extension itself is built.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MersenneFpBundle {
    pub name: String,
    pub p: u64,
    pub degree: u64,
    pub presentation: Presentation,
    pub quotient: Presentation,
    pub sylow: Presentation,
    pub psi: Vec<FpMatrix>,
    pub form: QuadraticForm,
    pub plane_m: Subspace,
    pub plane_stabilizer: Vec<FpMatrix>,
    /// The quotient acting on the orbit of `M` (images of the `psi` generators).
    pub plane_action: Vec<Permutation>,
    pub metadata: Metadata,
    #[serde(default)]
    pub hash: String,
}

impl MersenneFpBundle {
    pub fn content_hash(&self) -> String {
        let mut c = self.clone();
        c.hash = String::new();
        sha256_hex(serde_json::to_string(&c).expect("serializes").as_bytes())
    }

    pub fn verify_hash(&self) -> Result<()> {
        let h = self.content_hash();
        if h != self.hash {
            return Err(Error::Verification(format!("content hash {h} does not match recorded {}", self.hash)));
        }
        Ok(())
    }

    /// Parsed relators are not serialized; call after loading from JSON.
    pub fn reparse(mut self) -> Result<Self> {
        self.presentation = self.presentation.reparse()?;
        self.quotient = self.quotient.reparse()?;
        self.sylow = self.sylow.reparse()?;
        Ok(self)
    }
}

/// Gathers the presentation, the orthogonal action and the plus plane `M`
/// with its stabilizer `H`.
pub fn build_mersenne_fp(p: u64) -> Result<MersenneFpBundle> {
    catalog::require_odd_prime(p)?;
    if p < 5 {
        return Err(Error::InvalidParameter(format!("p = {p} is too small")));
    }
    let presentation = catalog::mersenne_extension(p)?;
    let quotient = presentation.quotient_killing(&["a", "b", "c"])?;
    let action = psi_action(p)?;
    let form = action.form.clone().expect("orthogonal form");
    let id = FpMatrix::identity(p, 3);
    let elements = matrix_closure(&action.generators, &id, 100_000)?;
    let plane_m = all_planes(p)
        .into_iter()
        .find(|s| plane_type(&form, s) == PlaneType::Plus)
        .ok_or_else(|| Error::InvariantBreach("no plus-type plane".into()))?;
    let plane_stabilizer: Vec<FpMatrix> = elements.iter().filter(|g| plane_m.is_invariant(g)).cloned().collect();
    let orbit = linear::plane_orbit(&action.generators, &plane_m);
    let index: BTreeMap<Vec<Vec<u64>>, u32> =
        orbit.iter().enumerate().map(|(i, s)| (s.basis.clone(), i as u32)).collect();
    let plane_action = action
        .generators
        .iter()
        .map(|g| {
            Permutation::from_images(orbit.iter().map(|s| index[&s.image(g).basis]).collect::<Vec<u32>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let order = p.pow(3) * p * (p * p - 1) / 2;
    let mut b = MersenneFpBundle {
        name: "mersenne-fp".into(),
        p,
        degree: p * p * (p + 1) / 2,
        presentation,
        quotient,
        sylow: catalog::sylow_asc(p)?,
        psi: action.generators.clone(),
        form,
        plane_m,
        plane_stabilizer,
        plane_action,
        metadata: Metadata {
            degree_formula: "p^2(p+1)/2".into(),
            claimed_order: order,
            extension: Some("non-split".into()),
            mersenne: Some(is_mersenne_prime(p)),
            expectation: if is_mersenne_prime(p) {
                Expectation {
                    elusive: Some(true),
                    non_elusive_primes: Vec::new(),
                }
            } else {
                Expectation::default()
            },
        },
        hash: String::new(),
    };
    b.hash = b.content_hash();
    Ok(b)
}

/// The split extension `F_p^3 : Omega_3(p)` acting affinely on `p^3` vectors.
pub fn affine_split_group(p: u64) -> Result<(Vec<Permutation>, Vec<Permutation>, Vec<FpMatrix>)> {
    let action = psi_action(p)?;
    let n = (p * p * p) as usize;
    let linear_perm = |g: &FpMatrix| {
        Permutation::from_images(
            (0..n as u64)
                .map(|c| encode(&g.apply(&decode(c, p, 3)), p) as u32)
                .collect::<Vec<_>>(),
        )
    };
    let translation = |t: &[u64]| {
        Permutation::from_images(
            (0..n as u64)
                .map(|c| {
                    let v: Vec<u64> = decode(c, p, 3).iter().zip(t).map(|(a, b)| (a + b) % p).collect();
                    encode(&v, p) as u32
                })
                .collect::<Vec<_>>(),
        )
    };
    let linear = action.generators.iter().map(linear_perm).collect::<Result<Vec<_>>>()?;
    let translations = (0..3)
        .map(|i| {
            let mut e = vec![0u64; 3];
            e[i] = 1;
            translation(&e)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((linear, translations, action.generators))
}

/// Negative control: the split extension re-based on the cosets of `M:H`,
/// giving the same degree and order as the non-split group but a
/// fixed-point-free element of order `p`.
pub fn build_split_control(p: u64) -> Result<ConstructedGroup> {
    if !(p == 5 || p == 7) {
        return Err(Error::InvalidParameter(format!("split control supports p = 5 or 7, got {p}")));
    }
    let fp = build_mersenne_fp(p)?;
    let (linear, translations, _) = affine_split_group(p)?;
    let n = (p * p * p) as usize;
    let mut gens = linear.clone();
    gens.extend(translations.iter().cloned());
    let psl_order = p * (p * p - 1) / 2;
    let affine = bsgs_known_order(&gens, p.pow(3) * psl_order)?;
    let to_perm = |g: &FpMatrix| {
        Permutation::from_images(
            (0..n as u64)
                .map(|c| encode(&g.apply(&decode(c, p, 3)), p) as u32)
                .collect::<Vec<_>>(),
        )
    };
    let mut y0 = Vec::new();
    for b in &fp.plane_m.basis {
        y0.push(Permutation::from_images(
            (0..n as u64)
                .map(|c| {
                    let v: Vec<u64> = decode(c, p, 3).iter().zip(b).map(|(a, x)| (a + x) % p).collect();
                    encode(&v, p) as u32
                })
                .collect::<Vec<_>>(),
        )?);
    }
    for h in &fp.plane_stabilizer {
        if !h.is_identity() {
            y0.push(to_perm(h)?);
        }
    }
    let ca = coset_action(&affine, &y0, DEGREE_CAP as u64)?;
    let generators = ca.images.clone();
    let n_generators = generators[linear.len()..].to_vec();
    let order = p.pow(3) * psl_order;
    let degree = ca.degree;
    Ok(ConstructedGroup {
        name: "split-control".into(),
        params: Params {
            p: Some(p),
            ..Params::default()
        },
        degree,
        generators,
        order,
        stabilizer_order: order / degree as u64,
        n_generators: n_generators.clone(),
        n_order: p.pow(3),
        e_choices: BTreeMap::from([("bottom".to_string(), n_generators)]),
        default_e: Some("bottom".into()),
        metadata: Metadata {
            degree_formula: "p^2(p+1)/2".into(),
            claimed_order: order,
            extension: Some("split".into()),
            mersenne: Some(is_mersenne_prime(p)),
            expectation: Expectation {
                elusive: Some(false),
                non_elusive_primes: vec![p],
            },
        },
        hash: String::new(),
    }
    .seal())
}

fn reference(name: &str, params: Params, generators: Vec<Permutation>, order: u64, formula: &str, expectation: Expectation) -> Result<ConstructedGroup> {
    let degree = generators[0].degree();
    let group = PermGroup::new(&generators)?;
    if group.order() != order as u128 {
        return Err(Error::Verification(format!("{name} has order {}, expected {order}", group.order())));
    }
    Ok(ConstructedGroup {
        name: name.into(),
        params,
        degree,
        generators,
        order,
        stabilizer_order: order / degree as u64,
        n_generators: Vec::new(),
        n_order: 1,
        e_choices: BTreeMap::new(),
        default_e: None,
        metadata: Metadata {
            degree_formula: formula.into(),
            claimed_order: order,
            extension: None,
            mersenne: None,
            expectation,
        },
        hash: String::new(),
    }
    .seal())
}

/// `PSL2(p)` on the cosets of the dihedral image of `Q`, degree `p(p+1)/2`.
pub fn psl2_dihedral(p: u64) -> Result<ConstructedGroup> {
    let ctx = ResidueRingContext::new(p, 1)?;
    let sub = closure(&ctx.q_generators(), &ctx.identity());
    let space = MatrixCosetSpace::new(sub, &ctx.sl2_generators(), DEGREE_CAP)?;
    let generators = ctx
        .sl2_generators()
        .iter()
        .map(|m| space.perm_of(m))
        .collect::<Result<Vec<_>>>()?;
    reference(
        "psl2-dihedral",
        Params {
            p: Some(p),
            ..Params::default()
        },
        generators,
        p * (p * p - 1) / 2,
        "p(p+1)/2",
        Expectation {
            elusive: Some(false),
            non_elusive_primes: vec![p],
        },
    )
}

/// `A5` on the 15 cosets of a Klein four-group.
pub fn a5_on_15() -> Result<ConstructedGroup> {
    let gens = linear::a5_points().to_vec();
    let a5 = PermGroup::new(&gens)?;
    let klein = [
        Permutation::parse_cycles("(1,2)(3,4)", 5)?,
        Permutation::parse_cycles("(1,3)(2,4)", 5)?,
    ];
    let ca = coset_action(&a5, &klein, 1000)?;
    reference(
        "a5-15",
        Params::default(),
        ca.images,
        60,
        "15",
        Expectation {
            elusive: Some(false),
            non_elusive_primes: vec![3, 5],
        },
    )
}

pub const M11_GENERATORS: [&str; 2] = ["(1,2,3,4,5,6,7,8,9,10,11)", "(3,7,11,8)(4,10,5,6)"];

/// `M11` on 12 points: its action on the cosets of the first subgroup
/// `<a, g>` of order 660 found by scanning the elements `g` in order.
pub fn m11_on_12() -> Result<ConstructedGroup> {
    let gens = M11_GENERATORS
        .iter()
        .map(|c| Permutation::parse_cycles(c, 11))
        .collect::<Result<Vec<_>>>()?;
    let m11 = PermGroup::new(&gens)?;
    if m11.order() != 7920 {
        return Err(Error::Verification(format!("M11 generators give order {}", m11.order())));
    }
    let mut sub = None;
    for g in m11.elements(10_000)? {
        let cand = [gens[0].clone(), g];
        if PermGroup::new(&cand)?.order() == 660 {
            sub = Some(cand);
            break;
        }
    }
    let sub = sub.ok_or_else(|| Error::Verification("no subgroup of index 12 found".into()))?;
    let ca = coset_action(&m11, &sub, 100)?;
    reference(
        "m11-12",
        Params::default(),
        ca.images,
        7920,
        "12",
        Expectation {
            elusive: Some(true),
            non_elusive_primes: Vec::new(),
        },
    )
}

pub fn build_reference_groups() -> Result<Vec<ConstructedGroup>> {
    Ok(vec![psl2_dihedral(7)?, psl2_dihedral(31)?, a5_on_15()?, m11_on_12()?])
}

/// Prime divisors of `n`, ascending.
pub fn prime_divisors(mut n: u64) -> Vec<u64> {
    let mut out = BTreeSet::new();
    let mut d = 2;
    while d * d <= n {
        while n.is_multiple_of(d) {
            out.insert(d);
            n /= d;
        }
        d += 1;
    }
    if n > 1 {
        out.insert(n);
    }
    out.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sl2_quotient_at_7_2() {
        let g = build_sl2_quotient(7, 2).unwrap();
        assert_eq!(g.degree, 196);
        assert_eq!(g.order, 57624);
        assert_eq!(g.stabilizer_order, 294);
        let x = g.build_group().unwrap();
        g.check_invariants(&x).unwrap();
        assert_eq!(elementary_abelian_rank(g.e_generators(None).unwrap()), Some((7, 3)));
        g.verify_hash().unwrap();
    }

    #[test]
    fn sl2_quotient_at_5_2_is_flagged() {
        let g = build_sl2_quotient(5, 2).unwrap();
        assert_eq!(g.degree, 75);
        assert_eq!(g.metadata.mersenne, Some(false));
        assert_eq!(g.metadata.expectation.non_elusive_primes, vec![3]);
        assert!(build_sl2_quotient(4, 2).is_err());
        assert!(build_sl2_quotient(7, 1).is_err());
    }

    #[test]
    fn a5_mixed_degrees() {
        for (stab, degree, stab_order) in [("Y", 225, 2700), ("W", 450, 1350)] {
            let g = build_a5_mixed(stab).unwrap();
            assert_eq!(g.degree, degree);
            assert_eq!(g.stabilizer_order, stab_order);
            let x = g.build_group().unwrap();
            g.check_invariants(&x).unwrap();
            assert_eq!(elementary_abelian_rank(g.e_generators(Some("U")).unwrap()), Some((3, 4)));
            assert_eq!(elementary_abelian_rank(g.e_generators(Some("V")).unwrap()), Some((5, 3)));
            let n = g.n_group().unwrap();
            assert_eq!(x.order() / n.order(), 60);
        }
    }

    #[test]
    fn mersenne_fp_inputs() {
        let b = build_mersenne_fp(7).unwrap();
        assert_eq!(b.degree, 196);
        assert_eq!(b.plane_stabilizer.len(), 6);
        assert_eq!(b.plane_action[0].degree(), 28);
        assert_eq!(PermGroup::new(&b.plane_action).unwrap().order(), 168);
        let back: MersenneFpBundle = serde_json::from_str(&serde_json::to_string(&b).unwrap()).unwrap();
        let back = back.reparse().unwrap();
        back.verify_hash().unwrap();
        assert_eq!(back.presentation.relators(), b.presentation.relators());
    }

    #[test]
    fn split_control_at_7() {
        let g = build_split_control(7).unwrap();
        assert_eq!(g.degree, 196);
        assert_eq!(g.order, 57624);
        let x = g.build_group().unwrap();
        g.check_invariants(&x).unwrap();
    }

    #[test]
    fn reference_groups() {
        let refs = build_reference_groups().unwrap();
        let degrees: Vec<usize> = refs.iter().map(|g| g.degree).collect();
        assert_eq!(degrees, vec![28, 496, 15, 12]);
        for g in &refs {
            let x = g.build_group().unwrap();
            g.check_invariants(&x).unwrap();
        }
        assert_eq!(refs[3].order, 7920);
    }

    #[test]
    fn tampering_breaks_the_hash() {
        let mut g = a5_on_15().unwrap();
        g.verify_hash().unwrap();
        g.order += 1;
        assert!(g.verify_hash().is_err());
    }

    #[test]
    fn divisors() {
        assert_eq!(prime_divisors(57624), vec![2, 3, 7]);
        assert_eq!(prime_divisors(1), Vec::<u64>::new());
    }
}
