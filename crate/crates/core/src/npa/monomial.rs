use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bell::Scenario;
use crate::error::{Error, Result};

/// Default cap on the size of a monomial basis.
pub const DEFAULT_BASIS_CAP: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Party {
    A,
    B,
}

/// Projector M_{output|input} of one party. Only outputs below d−1 occur;
/// the last projector is 𝕀 minus the others.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OperatorSymbol {
    pub party: Party,
    pub input: usize,
    pub output: usize,
}

impl OperatorSymbol {
    pub fn a(output: usize, input: usize) -> Self {
        OperatorSymbol {
            party: Party::A,
            input,
            output,
        }
    }

    pub fn b(output: usize, input: usize) -> Self {
        OperatorSymbol {
            party: Party::B,
            input,
            output,
        }
    }

    /// All symbols of a scenario: Alice's first, each ordered by (input, output).
    pub fn all(s: Scenario) -> Vec<OperatorSymbol> {
        let mut out = Vec::new();
        for x in 0..s.inputs_a() {
            for a in 0..s.outputs_a() - 1 {
                out.push(Self::a(a, x));
            }
        }
        for y in 0..s.inputs_b() {
            for b in 0..s.outputs_b() - 1 {
                out.push(Self::b(b, y));
            }
        }
        out
    }
}

impl fmt::Display for OperatorSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = match self.party {
            Party::A => 'A',
            Party::B => 'B',
        };
        write!(f, "{p}{}|{}", self.output, self.input)
    }
}

/// Canonical product of projectors: Alice's word followed by Bob's, each
/// free of adjacent repeats of the same input. The empty product is 𝕀.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Monomial {
    ops: Vec<OperatorSymbol>,
}

impl Monomial {
    pub fn identity() -> Self {
        Monomial { ops: Vec::new() }
    }

    pub fn ops(&self) -> &[OperatorSymbol] {
        &self.ops
    }

    pub fn degree(&self) -> usize {
        self.ops.len()
    }

    pub fn is_identity(&self) -> bool {
        self.ops.is_empty()
    }

    fn split(&self) -> usize {
        self.ops
            .iter()
            .position(|o| o.party == Party::B)
            .unwrap_or(self.ops.len())
    }

    /// Alice's and Bob's words.
    pub fn words(&self) -> (&[OperatorSymbol], &[OperatorSymbol]) {
        self.ops.split_at(self.split())
    }

    /// Adjoint: each party's word reversed.
    pub fn adjoint(&self) -> Monomial {
        let (a, b) = self.words();
        Monomial {
            ops: a.iter().rev().chain(b.iter().rev()).copied().collect(),
        }
    }

    /// Canonical form of `self · other`, `None` when the product vanishes.
    pub fn times(&self, other: &Monomial) -> Option<Monomial> {
        let (a1, b1) = self.words();
        let (a2, b2) = other.words();
        let ops: Vec<OperatorSymbol> = a1.iter().chain(a2).chain(b1).chain(b2).copied().collect();
        canonicalize(&ops)
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.degree(), &self.ops).cmp(&(other.degree(), &other.ops))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ops.is_empty() {
            return f.write_str("1");
        }
        for (k, o) in self.ops.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{o}")?;
        }
        Ok(())
    }
}

fn reduce_word(word: impl Iterator<Item = OperatorSymbol>, out: &mut Vec<OperatorSymbol>) -> bool {
    let start = out.len();
    for op in word {
        match out[start..].last() {
            Some(top) if top.input == op.input => {
                if top.output != op.output {
                    return false;
                }
            }
            _ => out.push(op),
        }
    }
    true
}

/// Apply M² = M, M_{a|x}M_{a'|x} = 0 (a ≠ a') and cross-party commutation.
/// Returns `None` for the zero operator.
pub fn canonicalize(ops: &[OperatorSymbol]) -> Option<Monomial> {
    let mut out = Vec::with_capacity(ops.len());
    let a = ops.iter().filter(|o| o.party == Party::A).copied();
    let b = ops.iter().filter(|o| o.party == Party::B).copied();
    if reduce_word(a, &mut out) && reduce_word(b, &mut out) {
        Some(Monomial { ops: out })
    } else {
        None
    }
}

/// Which monomials span the moment matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Level {
    /// All products of degree ≤ k.
    Npa(usize),
    /// Level k plus every product of an Alice word and a Bob word of degree
    /// ≤ k each ("1+AB" for k = 1).
    PlusAb(usize),
    /// An explicit list; the identity is prepended if absent.
    Explicit(Vec<Monomial>),
}

impl Level {
    /// Hierarchy depth used for reporting; explicit lists report their
    /// largest degree.
    pub fn depth(&self) -> usize {
        match self {
            Level::Npa(k) | Level::PlusAb(k) => *k,
            Level::Explicit(list) => list.iter().map(Monomial::degree).max().unwrap_or(0),
        }
    }
}

impl Default for Level {
    fn default() -> Self {
        Level::Npa(2)
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Npa(k) => write!(f, "{k}"),
            Level::PlusAb(k) => write!(f, "{k}+AB"),
            Level::Explicit(list) => write!(f, "explicit({})", list.len()),
        }
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let bad = || Error::Parse(format!("level {s:?}: expected `k` or `k+AB`"));
        let (num, plus) = match t.strip_suffix("+AB").or_else(|| t.strip_suffix("+ab")) {
            Some(n) => (n, true),
            None => (t, false),
        };
        let k: usize = num.trim().parse().map_err(|_| bad())?;
        if k == 0 {
            return Err(bad());
        }
        Ok(if plus {
            Level::PlusAb(k)
        } else {
            Level::Npa(k)
        })
    }
}

fn words_up_to(symbols: &[OperatorSymbol], k: usize, cap: usize) -> Result<Vec<Monomial>> {
    let mut all = vec![Monomial::identity()];
    let mut frontier = vec![Monomial::identity()];
    for deg in 1..=k {
        let mut next = Vec::new();
        for m in &frontier {
            for s in symbols {
                let mut ops = m.ops.clone();
                ops.push(*s);
                if let Some(c) = canonicalize(&ops) {
                    if c.degree() == deg {
                        next.push(c);
                    }
                }
            }
        }
        next.sort();
        next.dedup();
        if all.len() + next.len() > cap {
            return Err(Error::ResourceLimit(format!(
                "monomial basis exceeds {cap} entries at degree {deg}"
            )));
        }
        all.extend(next.iter().cloned());
        frontier = next;
    }
    Ok(all)
}

/// Canonical nonzero monomials spanning the given level, identity first,
/// sorted by degree and then lexicographically.
pub fn generate_monomials(s: Scenario, level: &Level) -> Result<Vec<Monomial>> {
    generate_monomials_with_cap(s, level, DEFAULT_BASIS_CAP)
}

pub fn generate_monomials_with_cap(
    s: Scenario,
    level: &Level,
    cap: usize,
) -> Result<Vec<Monomial>> {
    let symbols = OperatorSymbol::all(s);
    let mut basis = match level {
        Level::Npa(k) => {
            if *k == 0 {
                return Err(Error::InvalidArgument("level must be at least 1".into()));
            }
            words_up_to(&symbols, *k, cap)?
        }
        Level::PlusAb(k) => {
            if *k == 0 {
                return Err(Error::InvalidArgument("level must be at least 1".into()));
            }
            let mut basis = words_up_to(&symbols, *k, cap)?;
            let (sa, sb): (Vec<_>, Vec<_>) = symbols.iter().partition(|o| o.party == Party::A);
            let wa = words_up_to(&sa, *k, cap)?;
            let wb = words_up_to(&sb, *k, cap)?;
            if wa.len().saturating_mul(wb.len()) > cap {
                return Err(Error::ResourceLimit(format!(
                    "monomial basis exceeds {cap} entries"
                )));
            }
            for a in &wa {
                for b in &wb {
                    basis.push(a.times(b).expect("products across parties never vanish"));
                }
            }
            basis
        }
        Level::Explicit(list) => {
            let mut basis = vec![Monomial::identity()];
            for m in list {
                let c = canonicalize(&m.ops)
                    .ok_or_else(|| Error::InvalidArgument(format!("basis element {m} is zero")))?;
                for o in c.ops() {
                    let d = match o.party {
                        Party::A => (s.inputs_a(), s.outputs_a()),
                        Party::B => (s.inputs_b(), s.outputs_b()),
                    };
                    if o.input >= d.0 || o.output + 1 >= d.1 {
                        return Err(Error::InvalidArgument(format!(
                            "symbol {o} does not fit {s}"
                        )));
                    }
                }
                basis.push(c);
            }
            basis
        }
    };
    basis.sort();
    basis.dedup();
    if basis.len() > cap {
        return Err(Error::ResourceLimit(format!(
            "monomial basis exceeds {cap} entries"
        )));
    }
    Ok(basis)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rewrite_rules() {
        let a11 = OperatorSymbol::a(0, 0);
        let a21 = OperatorSymbol::a(1, 0);
        let a12 = OperatorSymbol::a(0, 1);
        let b11 = OperatorSymbol::b(0, 0);
        assert_eq!(canonicalize(&[a11, a11]).unwrap().ops(), &[a11]);
        assert_eq!(canonicalize(&[a11, a21]), None);
        assert_eq!(canonicalize(&[b11, a12]).unwrap().ops(), &[a12, b11]);
        assert_eq!(canonicalize(&[a11, b11, a11]).unwrap().ops(), &[a11, b11]);
        assert_eq!(canonicalize(&[a11, a12, a11]).unwrap().degree(), 3);
    }

    #[test]
    fn basis_sizes() {
        let chsh = Scenario::chsh();
        let qutrit = Scenario::symmetric(2, 3).unwrap();
        assert_eq!(generate_monomials(chsh, &Level::Npa(1)).unwrap().len(), 5);
        assert_eq!(generate_monomials(chsh, &Level::Npa(2)).unwrap().len(), 13);
        assert_eq!(
            generate_monomials(chsh, &Level::PlusAb(1)).unwrap().len(),
            9
        );
        assert_eq!(generate_monomials(qutrit, &Level::Npa(1)).unwrap().len(), 9);
        assert_eq!(
            generate_monomials(qutrit, &Level::Npa(2)).unwrap().len(),
            41
        );
    }

    #[test]
    fn level_two_contents() {
        let basis = generate_monomials(Scenario::chsh(), &Level::Npa(2)).unwrap();
        let names: Vec<String> = basis.iter().map(|m| m.to_string()).collect();
        assert_eq!(names[0], "1");
        for want in [
            "A0|0 A0|1",
            "A0|1 A0|0",
            "B0|0 B0|1",
            "B0|1 B0|0",
            "A0|1 B0|0",
        ] {
            assert!(
                names.iter().any(|n| n == want),
                "{want} missing from {names:?}"
            );
        }
    }

    #[test]
    fn cap_is_enforced() {
        let s = Scenario::symmetric(3, 3).unwrap();
        assert!(matches!(
            generate_monomials_with_cap(s, &Level::Npa(3), 100),
            Err(Error::ResourceLimit(_))
        ));
    }

    #[test]
    fn level_strings() {
        assert_eq!("3".parse::<Level>().unwrap(), Level::Npa(3));
        assert_eq!("1+AB".parse::<Level>().unwrap(), Level::PlusAb(1));
        assert!("0".parse::<Level>().is_err());
        assert_eq!(Level::PlusAb(1).to_string(), "1+AB");
    }
}
