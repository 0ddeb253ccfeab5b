//! Words, finite presentations and Todd–Coxeter coset enumeration.
//!
//! Relation syntax: generator names (matched longest-first), `^n` and `^-1`
//! powers (braces allowed, `^{-1}`), `^g` for conjugation `g^-1 . g`,
//! `[u,v]` for `u^-1 v^-1 u v`, parentheses, and `1` for the identity.
//! A chain `u=v=...=1` yields one relator per term; any other chain
//! `u=v=...=w` yields the relators `u w^-1`, `v w^-1`, ...

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perm::Permutation;

/// A word in the generators; letter `i+1` is generator `i`, `-(i+1)` its inverse.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Word(pub Vec<i32>);

impl Word {
    pub fn identity() -> Self {
        Word(Vec::new())
    }

    pub fn generator(index: usize) -> Self {
        Word(vec![index as i32 + 1])
    }

    pub fn letters(&self) -> &[i32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|&l| -l).collect())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v).reduced()
    }

    pub fn pow(&self, e: i64) -> Word {
        let base = if e < 0 { self.inverse() } else { self.clone() };
        let mut v = Vec::with_capacity(base.len() * e.unsigned_abs() as usize);
        for _ in 0..e.unsigned_abs() {
            v.extend_from_slice(&base.0);
        }
        Word(v).reduced()
    }

    /// Free reduction: cancel adjacent `g g^-1` pairs.
    pub fn reduced(&self) -> Word {
        let mut out: Vec<i32> = Vec::with_capacity(self.0.len());
        for &l in &self.0 {
            if out.last() == Some(&-l) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word(out)
    }

    /// Largest generator index referenced, plus one.
    pub fn max_generator(&self) -> usize {
        self.0.iter().map(|l| l.unsigned_abs() as usize).max().unwrap_or(0)
    }

    /// Evaluates the word on generator images.
    pub fn evaluate<G: GroupElem>(&self, images: &[G], identity: &G) -> G {
        let mut acc = identity.clone();
        for &l in &self.0 {
            let g = &images[(l.unsigned_abs() - 1) as usize];
            acc = if l > 0 { acc.op(g) } else { acc.op(&g.inv()) };
        }
        acc
    }

    pub fn display(&self, names: &[String]) -> String {
        if self.0.is_empty() {
            return "1".into();
        }
        let mut s = String::new();
        let mut i = 0;
        while i < self.0.len() {
            let l = self.0[i];
            let mut run = 1;
            while i + run < self.0.len() && self.0[i + run] == l {
                run += 1;
            }
            let name = &names[(l.unsigned_abs() - 1) as usize];
            s.push_str(name);
            let e = if l > 0 { run as i64 } else { -(run as i64) };
            if e != 1 {
                s.push_str(&format!("^{e}"));
            }
            i += run;
        }
        s
    }
}

/// Minimal group interface for evaluating words.
pub trait GroupElem: Clone + PartialEq {
    fn op(&self, other: &Self) -> Self;
    fn inv(&self) -> Self;
}

impl GroupElem for Permutation {
    fn op(&self, other: &Self) -> Self {
        self.mul(other)
    }

    fn inv(&self) -> Self {
        self.inverse()
    }
}

struct Parser<'a> {
    chars: Vec<char>,
    pos: usize,
    names: &'a [String],
    text: &'a str,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse(format!("{msg} at offset {} in {:?}", self.pos, self.text))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && (self.chars[self.pos].is_whitespace() || self.chars[self.pos] == '·' || self.chars[self.pos] == '*') {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn generator(&mut self) -> Option<usize> {
        self.skip_ws();
        let mut best: Option<(usize, usize)> = None;
        for (i, name) in self.names.iter().enumerate() {
            let n: Vec<char> = name.chars().collect();
            if self.chars[self.pos..].starts_with(&n) && best.is_none_or(|(_, len)| n.len() > len) {
                best = Some((i, n.len()));
            }
        }
        best.map(|(i, len)| {
            self.pos += len;
            i
        })
    }

    fn integer(&mut self) -> Option<i64> {
        self.skip_ws();
        let start = self.pos;
        let mut neg = false;
        if self.chars.get(self.pos) == Some(&'-') {
            neg = true;
            self.pos += 1;
        }
        let digits_start = self.pos;
        while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == digits_start {
            self.pos = start;
            return None;
        }
        let s: String = self.chars[digits_start..self.pos].iter().collect();
        let v: i64 = s.parse().ok()?;
        Some(if neg { -v } else { v })
    }

    fn expr(&mut self) -> Result<Word> {
        let mut w = Word::identity();
        loop {
            match self.peek() {
                None | Some('=') | Some(')') | Some(',') | Some(']') | Some('}') => return Ok(w),
                _ => {
                    let t = self.term()?;
                    w = w.concat(&t);
                }
            }
        }
    }

    fn term(&mut self) -> Result<Word> {
        let mut base = self.primary()?;
        while self.peek() == Some('^') {
            self.pos += 1;
            let braced = self.peek() == Some('{');
            if braced {
                self.pos += 1;
            }
            if let Some(e) = self.integer() {
                base = base.pow(e);
            } else if let Some(g) = self.generator() {
                let c = Word::generator(g);
                base = c.inverse().concat(&base).concat(&c);
            } else {
                return Err(self.err("expected exponent"));
            }
            if braced {
                if self.peek() != Some('}') {
                    return Err(self.err("expected '}'"));
                }
                self.pos += 1;
            }
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Word> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let w = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(w)
            }
            Some('[') => {
                self.pos += 1;
                let a = self.expr()?;
                if self.peek() != Some(',') {
                    return Err(self.err("expected ','"));
                }
                self.pos += 1;
                let b = self.expr()?;
                if self.peek() != Some(']') {
                    return Err(self.err("expected ']'"));
                }
                self.pos += 1;
                Ok(a.inverse().concat(&b.inverse()).concat(&a).concat(&b))
            }
            Some('1') => {
                self.pos += 1;
                Ok(Word::identity())
            }
            _ => self
                .generator()
                .map(Word::generator)
                .ok_or_else(|| self.err("unknown generator")),
        }
    }
}

/// Parses a single word (no `=`).
pub fn parse_word(text: &str, names: &[String]) -> Result<Word> {
    let mut p = Parser {
        chars: text.chars().collect(),
        pos: 0,
        names,
        text,
    };
    let w = p.expr()?;
    if p.peek().is_some() {
        return Err(p.err("trailing input"));
    }
    Ok(w)
}

/// Parses a relation chain into relators.
pub fn parse_relation(text: &str, names: &[String]) -> Result<Vec<Word>> {
    let mut p = Parser {
        chars: text.chars().collect(),
        pos: 0,
        names,
        text,
    };
    let mut terms = vec![p.expr()?];
    while p.peek() == Some('=') {
        p.pos += 1;
        terms.push(p.expr()?);
    }
    if p.peek().is_some() {
        return Err(p.err("trailing input"));
    }
    if terms.len() == 1 {
        return Ok(terms);
    }
    let last = terms.pop().expect("nonempty");
    let inv = last.inverse();
    Ok(terms
        .into_iter()
        .map(|t| t.concat(&inv))
        .filter(|w| !w.is_empty())
        .collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Presentation {
    pub generator_names: Vec<String>,
    /// Relation strings as written.
    pub relations: Vec<String>,
    #[serde(skip)]
    relators: Vec<Word>,
}

impl Presentation {
    pub fn new(generator_names: &[&str], relations: &[String]) -> Result<Self> {
        let names: Vec<String> = generator_names.iter().map(|s| s.to_string()).collect();
        let mut relators = Vec::new();
        for r in relations {
            relators.extend(parse_relation(r, &names)?);
        }
        Ok(Presentation {
            generator_names: names,
            relations: relations.to_vec(),
            relators,
        })
    }

    /// Rebuilds the parsed relators after deserialization.
    pub fn reparse(self) -> Result<Self> {
        let names: Vec<&str> = self.generator_names.iter().map(String::as_str).collect();
        Presentation::new(&names, &self.relations)
    }

    pub fn generator_count(&self) -> usize {
        self.generator_names.len()
    }

    pub fn relators(&self) -> &[Word] {
        &self.relators
    }

    pub fn word(&self, text: &str) -> Result<Word> {
        parse_word(text, &self.generator_names)
    }

    pub fn generator_index(&self, name: &str) -> Option<usize> {
        self.generator_names.iter().position(|n| n == name)
    }

    /// Same generators and relators, relators in the given order.
    pub fn with_relator_order(&self, order: &[usize]) -> Presentation {
        let mut p = self.clone();
        p.relators = order.iter().map(|&i| self.relators[i].clone()).collect();
        p
    }

    /// Adds relators killing the named generators.
    pub fn quotient_killing(&self, names: &[&str]) -> Result<Presentation> {
        let mut p = self.clone();
        for n in names {
            let i = self
                .generator_index(n)
                .ok_or_else(|| Error::InvalidParameter(format!("unknown generator {n}")))?;
            p.relations.push(format!("{n}=1"));
            p.relators.push(Word::generator(i));
        }
        Ok(p)
    }
}

pub const DEFAULT_MAX_COSETS: usize = 10_000_000;

const NONE: u32 = u32::MAX;

/// A closed coset table; row 0 is the subgroup coset. Column `2g` holds the
/// image under generator `g`, column `2g+1` the image under its inverse.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CosetTable {
    generators: usize,
    rows: Vec<u32>,
}

impl CosetTable {
    pub fn count(&self) -> usize {
        self.rows.len() / (2 * self.generators).max(1)
    }

    pub fn generator_count(&self) -> usize {
        self.generators
    }

    pub fn image(&self, coset: usize, letter: i32) -> usize {
        let g = (letter.unsigned_abs() - 1) as usize;
        let col = 2 * g + usize::from(letter < 0);
        self.rows[coset * 2 * self.generators + col] as usize
    }

    /// Coset reached from `coset` by reading `word`.
    pub fn trace(&self, coset: usize, word: &Word) -> usize {
        word.letters().iter().fold(coset, |c, &l| self.image(c, l))
    }
}

struct Enumerator {
    cols: usize,
    table: Vec<u32>,
    parent: Vec<u32>,
    max: usize,
    live: usize,
    high_water: usize,
}

impl Enumerator {
    #[inline]
    fn get(&self, c: usize, x: usize) -> u32 {
        self.table[c * self.cols + x]
    }

    #[inline]
    fn set(&mut self, c: usize, x: usize, v: u32) {
        self.table[c * self.cols + x] = v;
    }

    fn define(&mut self, c: usize, x: usize) -> Result<()> {
        let n = self.parent.len();
        if n >= self.max {
            return Err(Error::CosetLimit {
                limit: self.max,
                high_water: self.high_water.max(n),
            });
        }
        self.parent.push(n as u32);
        self.table.extend(std::iter::repeat_n(NONE, self.cols));
        self.live += 1;
        self.high_water = self.high_water.max(self.live);
        self.set(c, x, n as u32);
        self.set(n, x ^ 1, c as u32);
        Ok(())
    }

    fn rep(&mut self, c: usize) -> usize {
        let mut r = c;
        while self.parent[r] as usize != r {
            r = self.parent[r] as usize;
        }
        let mut i = c;
        while self.parent[i] as usize != r {
            let next = self.parent[i] as usize;
            self.parent[i] = r as u32;
            i = next;
        }
        r
    }

    fn merge(&mut self, a: usize, b: usize, queue: &mut Vec<usize>) {
        let (x, y) = (self.rep(a), self.rep(b));
        if x != y {
            let (lo, hi) = (x.min(y), x.max(y));
            self.parent[hi] = lo as u32;
            self.live -= 1;
            queue.push(hi);
        }
    }

    fn coincidence(&mut self, a: usize, b: usize) {
        let mut queue = Vec::new();
        self.merge(a, b, &mut queue);
        let mut i = 0;
        while i < queue.len() {
            let g = queue[i];
            i += 1;
            for x in 0..self.cols {
                let d = self.get(g, x);
                if d == NONE {
                    continue;
                }
                let d = d as usize;
                self.set(d, x ^ 1, NONE);
                let mu = self.rep(g);
                let nu = self.rep(d);
                let mx = self.get(mu, x);
                if mx != NONE {
                    self.merge(nu, mx as usize, &mut queue);
                } else {
                    let nx = self.get(nu, x ^ 1);
                    if nx != NONE {
                        self.merge(mu, nx as usize, &mut queue);
                    } else {
                        self.set(mu, x, nu as u32);
                        self.set(nu, x ^ 1, mu as u32);
                    }
                }
            }
        }
    }

    fn scan_and_fill(&mut self, a: usize, word: &[usize]) -> Result<()> {
        if word.is_empty() {
            return Ok(());
        }
        let mut f = a;
        let mut b = a;
        let mut i = 0usize;
        let mut j = word.len() as isize - 1;
        loop {
            while (i as isize) <= j {
                let v = self.get(f, word[i]);
                if v == NONE {
                    break;
                }
                f = v as usize;
                i += 1;
            }
            if (i as isize) > j {
                if f != b {
                    self.coincidence(f, b);
                }
                return Ok(());
            }
            while j >= i as isize {
                let v = self.get(b, word[j as usize] ^ 1);
                if v == NONE {
                    break;
                }
                b = v as usize;
                j -= 1;
            }
            if j < i as isize {
                self.coincidence(f, b);
                return Ok(());
            } else if j == i as isize {
                self.set(f, word[i], b as u32);
                self.set(b, word[i] ^ 1, f as u32);
                return Ok(());
            } else {
                self.define(f, word[i])?;
            }
        }
    }
}

fn columns(w: &Word) -> Vec<usize> {
    w.letters()
        .iter()
        .map(|&l| 2 * (l.unsigned_abs() as usize - 1) + usize::from(l < 0))
        .collect()
}

/// HLT coset enumeration of the subgroup generated by `subgroup` words.
pub fn coset_enumerate(pres: &Presentation, subgroup: &[Word], max_cosets: usize) -> Result<CosetTable> {
    if max_cosets == 0 {
        return Err(Error::InvalidParameter("max_cosets must be at least 1".into()));
    }
    let ngens = pres.generator_count();
    for w in pres.relators().iter().chain(subgroup) {
        if w.max_generator() > ngens {
            return Err(Error::InvalidParameter("word references undeclared generator".into()));
        }
    }
    let cols = 2 * ngens;
    let mut e = Enumerator {
        cols,
        table: vec![NONE; cols],
        parent: vec![0],
        max: max_cosets,
        live: 1,
        high_water: 1,
    };
    let rels: Vec<Vec<usize>> = pres.relators().iter().map(columns).collect();
    for w in subgroup {
        e.scan_and_fill(0, &columns(w))?;
    }
    let mut a = 0;
    while a < e.parent.len() {
        for r in &rels {
            if e.parent[a] as usize != a {
                break;
            }
            e.scan_and_fill(a, r)?;
        }
        if e.parent[a] as usize == a {
            for x in 0..cols {
                if e.get(a, x) == NONE {
                    e.define(a, x)?;
                }
            }
        }
        a += 1;
    }
    // compact live cosets
    let n = e.parent.len();
    let mut newid = vec![NONE; n];
    let mut count = 0u32;
    for c in 0..n {
        if e.parent[c] as usize == c {
            newid[c] = count;
            count += 1;
        }
    }
    let mut rows = Vec::with_capacity(count as usize * cols);
    for c in 0..n {
        if e.parent[c] as usize != c {
            continue;
        }
        for x in 0..cols {
            let v = e.get(c, x);
            if v == NONE {
                return Err(Error::InvariantBreach("coset table not closed".into()));
            }
            let r = e.rep(v as usize);
            rows.push(newid[r]);
        }
    }
    Ok(CosetTable {
        generators: ngens,
        rows,
    })
}

/// One permutation per generator, acting on the cosets of the table.
pub fn action_from_table(table: &CosetTable) -> Vec<Permutation> {
    let n = table.count();
    (0..table.generators)
        .map(|g| {
            let images = (0..n).map(|c| table.image(c, g as i32 + 1) as u32).collect();
            Permutation::from_images_unchecked(images)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MapCheck {
    pub satisfied: bool,
    /// Index (into the parsed relators) and text of the first relator that fails.
    pub first_failure: Option<(usize, String)>,
}

/// Checks that the generator images satisfy every relator.
pub fn verify_map_satisfies<G: GroupElem>(pres: &Presentation, images: &[G], identity: &G) -> Result<MapCheck> {
    if images.len() != pres.generator_count() {
        return Err(Error::Arity {
            expected: pres.generator_count(),
            got: images.len(),
        });
    }
    for (i, r) in pres.relators().iter().enumerate() {
        if r.evaluate(images, identity) != *identity {
            return Ok(MapCheck {
                satisfied: false,
                first_failure: Some((i, r.display(&pres.generator_names))),
            });
        }
    }
    Ok(MapCheck {
        satisfied: true,
        first_failure: None,
    })
}
