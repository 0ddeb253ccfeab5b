//! Built-in presentations, with relations written out as text.
//!
//! Catalog names:
//! - `mersenne-extension(p)`: `C_p^3 . PSL2(p)` on generators `a,b,c,s,t`
//! - `mersenne-quotient(p)`: its quotient by `<a,b,c>` on `S,T`
//! - `sylow-asc(p)`: the order-`p^4` subgroup on `a,b,c,s`
//! - `sylow-xyz(p)`: the same group on `x,y,z`
//! - `a5`: `<x,y | x^2 = y^3 = (xy)^5 = 1>`
//! - `a5-extension`: `(C_3^4 x C_5^3) . A5` on `u1..u4,v1..v3,x,y`

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::presentation::{Presentation, Word};

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

pub fn is_mersenne_prime(p: u64) -> bool {
    is_prime(p) && (p + 1).is_power_of_two()
}

pub(crate) fn require_odd_prime(p: u64) -> Result<()> {
    if p.is_multiple_of(2) || !is_prime(p) {
        return Err(Error::InvalidParameter(format!("{p} is not an odd prime")));
    }
    Ok(())
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn elementary_abelian_relations(names: &[&str], order: u64) -> Vec<String> {
    let mut rels: Vec<String> = names.iter().map(|n| format!("{n}^{order}=1")).collect();
    for i in 0..names.len() {
        for j in i + 1..names.len() {
            rels.push(format!("[{},{}]=1", names[i], names[j]));
        }
    }
    rels
}

pub fn mersenne_extension(p: u64) -> Result<Presentation> {
    require_odd_prime(p)?;
    let h = p.div_ceil(2);
    let rels = vec![
        format!("a^{p}=b^{p}=c^{p}=[a,b]=[b,c]=[c,a]=t^2=(st)^3=(s^2ts^{h}t)^3=1"),
        format!("s^{p}=a"),
        "a^s=a".into(),
        "b^s=ab".into(),
        "c^s=a^-1b^-2c".into(),
        "a^t=c^-1".into(),
        "b^t=b^-1".into(),
        "c^t=a^-1".into(),
    ];
    Presentation::new(&["a", "b", "c", "s", "t"], &rels)
}

pub fn mersenne_quotient(p: u64) -> Result<Presentation> {
    require_odd_prime(p)?;
    let h = p.div_ceil(2);
    Presentation::new(&["S", "T"], &[format!("S^{p}=T^2=(ST)^3=(S^2TS^{h}T)^3=1")])
}

pub fn sylow_asc(p: u64) -> Result<Presentation> {
    require_odd_prime(p)?;
    let rels = vec![
        format!("a^{p}=b^{p}=c^{p}=[a,b]=[b,c]=[c,a]=1"),
        format!("s^{p}=a"),
        "a^s=a".into(),
        "b^s=ab".into(),
        "c^s=a^-1b^-2c".into(),
    ];
    Presentation::new(&["a", "b", "c", "s"], &rels)
}

pub fn sylow_xyz(p: u64) -> Result<Presentation> {
    require_odd_prime(p)?;
    let rels = vec![
        format!("x^{}=y^{p}=z^{p}=[y,z]=1", p * p),
        format!("[x,y]=x^{p}"),
        "[x,z]=y".into(),
    ];
    Presentation::new(&["x", "y", "z"], &rels)
}

/// Images of `a,b,c,s` as words in `x,y,z`.
pub fn sylow_forward_images(p: u64) -> Vec<String> {
    vec![
        format!("x^{p}"),
        format!("x^{}y^-1", p * (p - 1) / 2),
        "z^-2".into(),
        "x".into(),
    ]
}

/// Images of `x,y,z` as words in `a,b,c,s`.
pub fn sylow_backward_images(p: u64) -> Vec<String> {
    let h = (p - 1) / 2;
    vec!["s".into(), format!("a^{h}b^-1"), format!("c^{h}")]
}

pub fn a5() -> Presentation {
    Presentation::new(&["x", "y"], &strings(&["x^2=y^3=(xy)^5=1"])).expect("static presentation")
}

pub const A5_EXTENSION_GENERATORS: [&str; 9] = ["u1", "u2", "u3", "u4", "v1", "v2", "v3", "x", "y"];

pub fn a5_extension() -> Presentation {
    let us = ["u1", "u2", "u3", "u4"];
    let vs = ["v1", "v2", "v3"];
    let mut rels = elementary_abelian_relations(&us, 3);
    rels.extend(elementary_abelian_relations(&vs, 5));
    for u in us {
        for v in vs {
            rels.push(format!("[{u},{v}]=1"));
        }
    }
    rels.extend(strings(&[
        "x^2=1",
        "y^3=u2u4^-1",
        "(xy)^5=v1^-2v2^2v3",
        "u1^x=u2",
        "u2^x=u1",
        "u3^x=u4",
        "u4^x=u3",
        "u1^y=u1^-1u3",
        "u2^y=u1^-1u2",
        "u3^y=u1^-1",
        "u4^y=u1^-1u4",
        "v1^x=v2",
        "v2^x=v1",
        "v3^x=v1^-1v2^-1v3^-1",
        "v1^y=v1^-1v3",
        "v2^y=v1^-1v2",
        "v3^y=v1^-1",
    ]));
    Presentation::new(&A5_EXTENSION_GENERATORS, &rels).expect("static presentation")
}

/// Generators of the subgroup `M` of the A5 extension.
pub const A5_EXTENSION_M: [&str; 5] = ["u1u2", "u2u3^-1", "u3u4", "v1v2", "v2v3^-1"];

/// Point stabilizer `M:C_2^2` for the degree-225 action.
pub fn a5_extension_y_words() -> Vec<String> {
    let mut v = strings(&A5_EXTENSION_M);
    v.push("x".into());
    v.push("u1^-1u2^-1u3u4v1^-1v2^-2v3^2y[x,y]^2".into());
    v
}

/// Point stabilizer `M:<x>` for the degree-450 action.
pub fn a5_extension_w_words() -> Vec<String> {
    let mut v = strings(&A5_EXTENSION_M);
    v.push("x".into());
    v
}

pub fn parse_words(pres: &Presentation, words: &[String]) -> Result<Vec<Word>> {
    words.iter().map(|w| pres.word(w)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub name: String,
    #[serde(flatten)]
    pub presentation: Presentation,
    pub subgroups: BTreeMap<String, Vec<String>>,
}

/// Every catalog entry, with parameterized families instantiated at `p`.
pub fn entries(p: u64) -> Result<Vec<CatalogEntry>> {
    let plain = |name: String, presentation: Presentation| CatalogEntry {
        name,
        presentation,
        subgroups: BTreeMap::new(),
    };
    let mut a5x = plain("a5-extension".into(), a5_extension());
    a5x.subgroups.insert("Y".into(), a5_extension_y_words());
    a5x.subgroups.insert("W".into(), a5_extension_w_words());
    a5x.subgroups.insert("M".into(), strings(&A5_EXTENSION_M));
    let mut a5e = plain("a5".into(), a5());
    a5e.subgroups.insert("x".into(), strings(&["x"]));
    Ok(vec![
        plain(format!("mersenne-extension({p})"), mersenne_extension(p)?),
        plain(format!("mersenne-quotient({p})"), mersenne_quotient(p)?),
        plain(format!("sylow-asc({p})"), sylow_asc(p)?),
        plain(format!("sylow-xyz({p})"), sylow_xyz(p)?),
        a5e,
        a5x,
    ])
}

pub fn entries_to_json(entries: &[CatalogEntry]) -> String {
    serde_json::to_string_pretty(entries).expect("catalog serializes")
}

pub fn entries_from_json(text: &str) -> Result<Vec<CatalogEntry>> {
    let raw: Vec<CatalogEntry> =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    raw.into_iter()
        .map(|mut e| {
            e.presentation = e.presentation.reparse()?;
            Ok(e)
        })
        .collect()
}


#[cfg(test)]
mod enumeration {
    use super::*;
    use crate::presentation::coset_enumerate;

    #[test]
    fn a5_extension_stabilizer_indices() {
        let p = a5_extension();
        let y = parse_words(&p, &a5_extension_y_words()).unwrap();
        assert_eq!(coset_enumerate(&p, &y, 1_000_000).unwrap().count(), 225);
        let w = parse_words(&p, &a5_extension_w_words()).unwrap();
        assert_eq!(coset_enumerate(&p, &w, 1_000_000).unwrap().count(), 450);
    }

    #[test]
    fn mersenne_extension_order_at_7() {
        let m = mersenne_extension(7).unwrap();
        assert_eq!(coset_enumerate(&m, &[], 1_000_000).unwrap().count(), 57624);
    }
}
