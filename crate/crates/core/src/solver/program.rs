use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cone of one variable block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockKind {
    /// n×n real symmetric positive semidefinite matrix.
    Psd(usize),
    /// Nonnegative vector of the given length.
    Nonneg(usize),
}

impl BlockKind {
    pub fn size(&self) -> usize {
        match *self {
            BlockKind::Psd(n) | BlockKind::Nonneg(n) => n,
        }
    }
}

/// One stored coefficient of a symmetric coefficient matrix.
///
/// Only the upper triangle is stored (`row <= col`) and the entry stands for
/// both (row, col) and (col, row), as in SDPA files. The inner product with a
/// variable block is therefore Σ_diag v·X_ii + Σ_offdiag 2·v·X_ij: to read
/// the single entry X_ij (i ≠ j) use v = ½. Nonnegative blocks only use
/// diagonal positions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub block: usize,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

impl Entry {
    pub fn new(block: usize, row: usize, col: usize, value: f64) -> Self {
        let (row, col) = if row <= col { (row, col) } else { (col, row) };
        Entry {
            block,
            row,
            col,
            value,
        }
    }

    /// Coefficient that reads the matrix element (row, col) itself.
    pub fn element(block: usize, row: usize, col: usize, weight: f64) -> Self {
        let w = if row == col { weight } else { 0.5 * weight };
        Self::new(block, row, col, w)
    }

    fn key(&self) -> (usize, usize, usize) {
        (self.block, self.row, self.col)
    }
}

/// Sorted, duplicate-free list of entries.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseSym {
    entries: Vec<Entry>,
}

impl SparseSym {
    pub fn new(mut entries: Vec<Entry>) -> Self {
        entries.sort_by_key(Entry::key);
        let mut merged: Vec<Entry> = Vec::with_capacity(entries.len());
        for e in entries {
            match merged.last_mut() {
                Some(last) if last.key() == e.key() => last.value += e.value,
                _ => merged.push(e),
            }
        }
        merged.retain(|e| e.value != 0.0);
        SparseSym { entries: merged }
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub coeffs: SparseSym,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Maximize,
    Minimize,
}

/// optimize ⟨C, X⟩ subject to ⟨A_i, X⟩ = b_i, X in a product of PSD cones
/// and nonnegative orthants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConicProgram {
    blocks: Vec<BlockKind>,
    constraints: Vec<Constraint>,
    objective: SparseSym,
    sense: Sense,
}

impl ConicProgram {
    pub fn new(
        blocks: Vec<BlockKind>,
        constraints: Vec<Constraint>,
        objective: SparseSym,
        sense: Sense,
    ) -> Result<Self> {
        let p = ConicProgram {
            blocks,
            constraints,
            objective,
            sense,
        };
        p.check()?;
        Ok(p)
    }

    fn check(&self) -> Result<()> {
        let check_entry = |e: &Entry| -> Result<()> {
            let kind = self.blocks.get(e.block).ok_or_else(|| {
                Error::Dimension(format!("entry refers to missing block {}", e.block))
            })?;
            let ok = match *kind {
                BlockKind::Psd(n) => e.row <= e.col && e.col < n,
                BlockKind::Nonneg(n) => e.row == e.col && e.col < n,
            };
            if !ok || !e.value.is_finite() {
                return Err(Error::Dimension(format!(
                    "entry {e:?} does not fit block {kind:?}"
                )));
            }
            Ok(())
        };
        for e in self.objective.entries() {
            check_entry(e)?;
        }
        for c in &self.constraints {
            for e in c.coeffs.entries() {
                check_entry(e)?;
            }
            if !c.rhs.is_finite() {
                return Err(Error::InvalidArgument("non-finite right-hand side".into()));
            }
        }
        Ok(())
    }

    pub fn blocks(&self) -> &[BlockKind] {
        &self.blocks
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &SparseSym {
        &self.objective
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Number of PSD blocks.
    pub fn num_psd_blocks(&self) -> usize {
        self.blocks
            .iter()
            .filter(|b| matches!(b, BlockKind::Psd(_)))
            .count()
    }
}

/// Incremental construction of a [`ConicProgram`].
#[derive(Debug, Clone)]
pub struct ProgramBuilder {
    blocks: Vec<BlockKind>,
    constraints: Vec<Constraint>,
    objective: Vec<Entry>,
    sense: Sense,
}

impl ProgramBuilder {
    pub fn new(sense: Sense) -> Self {
        ProgramBuilder {
            blocks: Vec::new(),
            constraints: Vec::new(),
            objective: Vec::new(),
            sense,
        }
    }

    /// Add a block and return its index.
    pub fn add_block(&mut self, kind: BlockKind) -> usize {
        self.blocks.push(kind);
        self.blocks.len() - 1
    }

    /// Add an equality constraint and return its row index.
    pub fn add_constraint(&mut self, coeffs: Vec<Entry>, rhs: f64) -> usize {
        self.constraints.push(Constraint {
            coeffs: SparseSym::new(coeffs),
            rhs,
        });
        self.constraints.len() - 1
    }

    pub fn add_objective(&mut self, entries: impl IntoIterator<Item = Entry>) {
        self.objective.extend(entries);
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn build(self) -> Result<ConicProgram> {
        ConicProgram::new(
            self.blocks,
            self.constraints,
            SparseSym::new(self.objective),
            self.sense,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_sym_sorts_merges_and_drops_zeros() {
        let s = SparseSym::new(vec![
            Entry::new(0, 2, 1, 1.0),
            Entry::new(0, 0, 0, 2.0),
            Entry::new(0, 1, 2, -1.0),
            Entry::new(1, 0, 0, 3.0),
        ]);
        assert_eq!(
            s.entries(),
            &[Entry::new(0, 0, 0, 2.0), Entry::new(1, 0, 0, 3.0)]
        );
    }

    #[test]
    fn element_halves_off_diagonal() {
        assert_eq!(Entry::element(0, 1, 0, 1.0).value, 0.5);
        assert_eq!(Entry::element(0, 1, 1, 1.0).value, 1.0);
    }

    #[test]
    fn out_of_block_entries_are_rejected() {
        let mut b = ProgramBuilder::new(Sense::Maximize);
        let k = b.add_block(BlockKind::Nonneg(2));
        b.add_constraint(vec![Entry::new(k, 0, 1, 1.0)], 0.0);
        assert!(b.build().is_err());
        let mut b = ProgramBuilder::new(Sense::Maximize);
        b.add_block(BlockKind::Psd(2));
        b.add_objective([Entry::new(0, 0, 2, 1.0)]);
        assert!(b.build().is_err());
    }
}
