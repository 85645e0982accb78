use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;

use super::monomial::{generate_monomials, Level, Monomial, OperatorSymbol};
use crate::bell::{Behavior, NsBasis, NsCoord, Scenario};
use crate::error::{Error, Result};
use crate::solver::Entry;

/// Upper-triangle positions of Γ holding the same moment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentClass {
    /// The moment as a canonical monomial, the smaller of m and m†.
    pub key: Monomial,
    /// Positions (i, j), i ≤ j, in row-major order.
    pub entries: Vec<(usize, usize)>,
}

/// Level-k moment matrix layout: which entries coincide, which vanish, and
/// which carry the behavior's no-signaling coordinates.
#[derive(Debug, Clone)]
pub struct MomentStructure {
    scenario: Scenario,
    level: Level,
    normalized: bool,
    basis: Vec<Monomial>,
    classes: Vec<MomentClass>,
    zeros: Vec<(usize, usize)>,
    /// Class per upper-triangle cell, `None` for vanishing entries.
    cell: Vec<Option<usize>>,
    ns: NsBasis,
    /// Class carrying each no-signaling coordinate, in `NsBasis` order.
    links: Vec<usize>,
}

impl MomentStructure {
    pub fn build(scenario: Scenario, level: &Level, normalized: bool) -> Result<Self> {
        let basis = generate_monomials(scenario, level)?;
        let n = basis.len();
        let adjoints: Vec<Monomial> = basis.iter().map(Monomial::adjoint).collect();
        let mut index: HashMap<Monomial, usize> = HashMap::new();
        let mut classes: Vec<MomentClass> = Vec::new();
        let mut zeros = Vec::new();
        let mut cell = vec![None; n * n];
        for i in 0..n {
            for j in i..n {
                match adjoints[i].times(&basis[j]) {
                    None => zeros.push((i, j)),
                    Some(m) => {
                        let adj = m.adjoint();
                        let key = if adj < m { adj } else { m };
                        let id = *index.entry(key.clone()).or_insert_with(|| {
                            classes.push(MomentClass {
                                key,
                                entries: Vec::new(),
                            });
                            classes.len() - 1
                        });
                        classes[id].entries.push((i, j));
                        cell[i * n + j] = Some(id);
                    }
                }
            }
        }

        let ns = NsBasis::new(scenario);
        let mut links = Vec::with_capacity(ns.len());
        for coord in ns.coords() {
            let m = match *coord {
                NsCoord::Trace => Monomial::identity(),
                NsCoord::MarginalA { a, x } => single(OperatorSymbol::a(a, x)),
                NsCoord::MarginalB { b, y } => single(OperatorSymbol::b(b, y)),
                NsCoord::Joint { a, b, x, y } => single(OperatorSymbol::a(a, x))
                    .times(&single(OperatorSymbol::b(b, y)))
                    .expect("cross-party product"),
            };
            let id = index.get(&m).ok_or_else(|| {
                Error::InvalidArgument(format!("moment basis never produces <{m}>"))
            })?;
            links.push(*id);
        }
        Ok(MomentStructure {
            scenario,
            level: level.clone(),
            normalized,
            basis,
            classes,
            zeros,
            cell,
            ns,
            links,
        })
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn level(&self) -> &Level {
        &self.level
    }

    pub fn normalized(&self) -> bool {
        self.normalized
    }

    pub fn size(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Monomial] {
        &self.basis
    }

    pub fn classes(&self) -> &[MomentClass] {
        &self.classes
    }

    pub fn zero_entries(&self) -> &[(usize, usize)] {
        &self.zeros
    }

    pub fn ns_basis(&self) -> &NsBasis {
        &self.ns
    }

    /// Class of Γ[i, j], `None` if the entry vanishes identically.
    pub fn class_at(&self, i: usize, j: usize) -> Option<usize> {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.cell[i * self.size() + j]
    }

    /// Class carrying each no-signaling coordinate, in `ns_basis()` order.
    pub fn links(&self) -> &[usize] {
        &self.links
    }

    /// Links tying Γ to the behavior. The normalized variant drops the trace
    /// link, which is replaced by the pin Γ₁₁ = 1.
    pub fn behavior_links(&self) -> Vec<(NsCoord, usize)> {
        self.ns
            .coords()
            .iter()
            .copied()
            .zip(self.links.iter().copied())
            .filter(|(c, _)| !(self.normalized && *c == NsCoord::Trace))
            .collect()
    }

    /// Coefficient reading the moment of class `id` from `block`, times `w`.
    pub fn class_entry(&self, block: usize, id: usize, w: f64) -> Entry {
        let (i, j) = self.classes[id].entries[0];
        Entry::element(block, i, j, w)
    }

    /// Entries of the functional Σ_k g_k·c_k on the no-signaling coordinates.
    pub fn functional_entries(&self, block: usize, g: &[f64]) -> Vec<Entry> {
        g.iter()
            .zip(&self.links)
            .filter(|(w, _)| **w != 0.0)
            .map(|(w, &id)| self.class_entry(block, id, *w))
            .collect()
    }

    /// Homogeneous equalities of the moment structure: equal entries within a
    /// class, vanishing entries; plus Γ₁₁ = 1 when normalized.
    pub fn constraint_rows(&self, block: usize) -> Vec<(Vec<Entry>, f64)> {
        let mut rows = Vec::new();
        for class in &self.classes {
            let (i0, j0) = class.entries[0];
            for &(i, j) in &class.entries[1..] {
                rows.push((
                    vec![
                        Entry::element(block, i0, j0, 1.0),
                        Entry::element(block, i, j, -1.0),
                    ],
                    0.0,
                ));
            }
        }
        for &(i, j) in &self.zeros {
            rows.push((vec![Entry::element(block, i, j, 1.0)], 0.0));
        }
        if self.normalized {
            rows.push((vec![Entry::new(block, 0, 0, 1.0)], 1.0));
        }
        rows
    }

    /// No-signaling coordinates read off a moment matrix.
    pub fn coordinates(&self, gamma: &DMatrix<f64>) -> Vec<f64> {
        self.links
            .iter()
            .map(|&id| {
                let (i, j) = self.classes[id].entries[0];
                0.5 * (gamma[(i, j)] + gamma[(j, i)])
            })
            .collect()
    }

    /// Behavior encoded by a moment matrix.
    pub fn behavior(&self, gamma: &DMatrix<f64>) -> Result<Behavior> {
        if gamma.nrows() != self.size() || gamma.ncols() != self.size() {
            return Err(Error::Dimension(format!(
                "moment matrix is {}x{}, structure has size {}",
                gamma.nrows(),
                gamma.ncols(),
                self.size()
            )));
        }
        self.ns.behavior(&self.coordinates(gamma))
    }

    /// Stable text dump: basis, classes with their positions, vanishing
    /// entries and behavior links.
    pub fn debug_dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "scenario {} level {} normalized {}",
            self.scenario, self.level, self.normalized
        );
        let _ = writeln!(out, "basis {}", self.size());
        for (k, m) in self.basis.iter().enumerate() {
            let _ = writeln!(out, "  {k:4} {m}");
        }
        let _ = writeln!(out, "classes {}", self.classes.len());
        for (k, c) in self.classes.iter().enumerate() {
            let pos: Vec<String> = c
                .entries
                .iter()
                .map(|(i, j)| format!("({i},{j})"))
                .collect();
            let _ = writeln!(out, "  c{k} <{}> {}", c.key, pos.join(" "));
        }
        let pos: Vec<String> = self
            .zeros
            .iter()
            .map(|(i, j)| format!("({i},{j})"))
            .collect();
        let _ = writeln!(out, "zero {} {}", self.zeros.len(), pos.join(" "));
        let _ = writeln!(out, "links");
        for (coord, id) in self.ns.coords().iter().zip(&self.links) {
            let _ = writeln!(out, "  {coord:?} -> c{id}");
        }
        out
    }
}

fn single(o: OperatorSymbol) -> Monomial {
    super::monomial::canonicalize(&[o]).expect("single projector")
}
