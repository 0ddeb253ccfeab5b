//! Known degrees of elusive groups: the two classical families, the degrees
//! of the `SL2(Z/p^k)` quotients, 225 and 450, and products of these.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::catalog::is_mersenne_prime;
use crate::constructions::prime_divisors;
use crate::error::{Error, Result};

pub const MAX_BOUND: u64 = 1_000_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Provenance {
    /// `p^k 2^n m` with `p` a Mersenne prime, `2^n > p`, and every prime
    /// factor of `m` dividing `p - 1`.
    MersenneTwoPower { p: u64, k: u32, n: u32, m: u64 },
    /// `12 * 7^k`.
    TwelveSevenPower { k: u32 },
    /// `p^(3k-4)(p+1)/2`.
    Sl2Quotient { p: u64, k: u32 },
    /// 225 or 450.
    A5Mixed { stab: String },
    Product { a: u64, b: u64 },
}

impl Provenance {
    /// Recomputes the value from the parameters.
    pub fn value(&self) -> Option<u64> {
        match self {
            Provenance::MersenneTwoPower { p, k, n, m } => {
                let ok = is_mersenne_prime(*p)
                    && *k >= 1
                    && 1u64.checked_shl(*n)? > *p
                    && prime_divisors(*m).iter().all(|s| (p - 1) % s == 0);
                ok.then(|| p.checked_pow(*k)?.checked_mul(1 << n)?.checked_mul(*m))?
            }
            Provenance::TwelveSevenPower { k } => (*k >= 1).then(|| 7u64.checked_pow(*k)?.checked_mul(12))?,
            Provenance::Sl2Quotient { p, k } => (is_mersenne_prime(*p) && *p >= 7 && *k >= 2)
                .then(|| Some(p.checked_pow(3 * k - 4)?.checked_mul(p + 1)? / 2))?,
            Provenance::A5Mixed { stab } => match stab.as_str() {
                "Y" => Some(225),
                "W" => Some(450),
                _ => None,
            },
            Provenance::Product { a, b } => a.checked_mul(*b),
        }
    }

    /// Does the value come from one of the two classical families?
    pub fn is_classical(&self) -> bool {
        matches!(
            self,
            Provenance::MersenneTwoPower { .. } | Provenance::TwelveSevenPower { .. }
        )
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::MersenneTwoPower { p, k, n, m } => write!(f, "mersenne-two-power(p={p},k={k},n={n},m={m})"),
            Provenance::TwelveSevenPower { k } => write!(f, "twelve-seven-power(k={k})"),
            Provenance::Sl2Quotient { p, k } => write!(f, "sl2-quotient(p={p},k={k})"),
            Provenance::A5Mixed { stab } => write!(f, "a5-mixed({stab})"),
            Provenance::Product { a, b } => write!(f, "product({a}*{b})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeEntry {
    pub value: u64,
    pub provenance: Provenance,
    pub factorization: String,
}

pub fn factorization(mut n: u64) -> String {
    let mut parts = Vec::new();
    for q in prime_divisors(n) {
        let mut e = 0;
        while n.is_multiple_of(q) {
            n /= q;
            e += 1;
        }
        parts.push(if e == 1 { q.to_string() } else { format!("{q}^{e}") });
    }
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("*")
    }
}

fn smooth_numbers(primes: &[u64], bound: u64) -> Vec<u64> {
    let mut out = vec![1u64];
    for &q in primes {
        let mut next = Vec::new();
        for &x in &out {
            let mut y = x;
            while y <= bound {
                next.push(y);
                match y.checked_mul(q) {
                    Some(z) => y = z,
                    None => break,
                }
            }
        }
        out = next;
    }
    out.sort_unstable();
    out
}

fn mersenne_primes(bound: u64) -> Vec<u64> {
    (2..64)
        .map(|t| (1u64 << t) - 1)
        .take_while(|&p| p <= bound)
        .filter(|&p| is_mersenne_prime(p))
        .collect()
}

fn base_entries(bound: u64) -> Vec<(u64, Provenance)> {
    let mut out = Vec::new();
    for p in mersenne_primes(bound) {
        let primes = prime_divisors(p - 1);
        let mut pk = p;
        let mut k = 1;
        while pk <= bound {
            let mut n = 64 - p.leading_zeros();
            while n < 63 && pk.checked_mul(1 << n).is_some_and(|v| v <= bound) {
                let base = pk * (1 << n);
                for m in smooth_numbers(&primes, bound / base).into_iter().filter(|m| m % 2 == 1) {
                    out.push((base * m, Provenance::MersenneTwoPower { p, k, n, m }));
                }
                n += 1;
            }
            pk = match pk.checked_mul(p) {
                Some(v) => v,
                None => break,
            };
            k += 1;
        }
    }
    let mut k = 1;
    while let Some(v) = 7u64.checked_pow(k).and_then(|x| x.checked_mul(12)).filter(|&v| v <= bound) {
        out.push((v, Provenance::TwelveSevenPower { k }));
        k += 1;
    }
    for p in mersenne_primes(bound).into_iter().filter(|&p| p >= 7) {
        let mut k = 2;
        while let Some(v) = (Provenance::Sl2Quotient { p, k }).value().filter(|&v| v <= bound) {
            out.push((v, Provenance::Sl2Quotient { p, k }));
            k += 1;
        }
    }
    for stab in ["Y", "W"] {
        let prov = Provenance::A5Mixed { stab: stab.into() };
        let v = prov.value().expect("fixed degree");
        if v <= bound {
            out.push((v, prov));
        }
    }
    out
}

/// All known degrees up to `bound`, closed under products within the bound.
/// Each value keeps its first derivation: base families before products, and
/// among products the one with the smallest first factor.
pub fn generate_catalog(bound: u64) -> Result<Vec<DegreeEntry>> {
    if bound > MAX_BOUND {
        return Err(Error::CapExceeded {
            what: "catalog bound",
            cap: MAX_BOUND,
            needed: bound,
        });
    }
    let mut map: BTreeMap<u64, Provenance> = BTreeMap::new();
    for (v, prov) in base_entries(bound) {
        map.entry(v).or_insert(prov);
    }
    loop {
        let values: Vec<u64> = map.keys().copied().collect();
        let mut added = Vec::new();
        for (i, &a) in values.iter().enumerate() {
            if a.saturating_mul(a) > bound {
                break;
            }
            for &b in &values[i..] {
                let Some(v) = a.checked_mul(b).filter(|&v| v <= bound) else {
                    break;
                };
                if !map.contains_key(&v) {
                    added.push((v, Provenance::Product { a, b }));
                }
            }
        }
        if added.is_empty() {
            break;
        }
        for (v, prov) in added {
            map.entry(v).or_insert(prov);
        }
    }
    Ok(map
        .into_iter()
        .map(|(value, provenance)| DegreeEntry {
            value,
            factorization: factorization(value),
            provenance,
        })
        .collect())
}

/// Statistics over the known degrees; these bound the set of elusive degrees
/// from below and say nothing about degrees not yet found.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub label: String,
    pub bound: u64,
    pub count: u64,
    pub ratio: f64,
    pub smallest_odd: Option<u64>,
    pub smallest_twice_odd: Option<u64>,
}

pub fn density_report(bound: u64) -> Result<DensityReport> {
    let cat = generate_catalog(bound)?;
    Ok(DensityReport {
        label: "known elusive degrees".into(),
        bound,
        count: cat.len() as u64,
        ratio: if bound == 0 { 0.0 } else { cat.len() as f64 / bound as f64 },
        smallest_odd: cat.iter().map(|e| e.value).find(|v| v % 2 == 1),
        smallest_twice_odd: cat.iter().map(|e| e.value).find(|v| v % 4 == 2),
    })
}
