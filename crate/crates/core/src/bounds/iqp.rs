//! Exhaustive solver for the assignment IQP, used as a test oracle.

use crate::error::{Error, Result};

/// Largest disc count [`iqp_exact`] accepts.
pub const MAX_IQP_DISCS: usize = 12;
const NODE_BUDGET: u64 = 200_000_000;

/// Exact optimum of
/// `max sum_k (sum_i Z_ik)^2` with each disc assigned to exactly one column
/// that contains it, by depth-first enumeration with a convexity bound.
///
/// `columns` are sets of disc indices in `0..n`. Exponential by design.
pub fn iqp_exact(columns: &[Vec<u32>], n: usize) -> Result<u64> {
    if n > MAX_IQP_DISCS {
        return Err(Error::InstanceTooLarge(format!("{n} discs (limit {MAX_IQP_DISCS})")));
    }
    let mut choices = vec![Vec::new(); n];
    for (k, col) in columns.iter().enumerate() {
        for &i in col {
            let i = i as usize;
            if i >= n {
                return Err(Error::InvalidArgument(format!("column {k} names disc {i} of {n}")));
            }
            choices[i].push(k);
        }
    }
    if let Some(i) = choices.iter().position(Vec::is_empty) {
        return Err(Error::InvalidArgument(format!("disc {i} appears in no column")));
    }
    let mut search = Search {
        choices: &choices,
        sizes: vec![0u64; columns.len()],
        best: 0,
        nodes: 0,
    };
    search.descend(0, 0)?;
    Ok(search.best)
}

struct Search<'a> {
    choices: &'a [Vec<usize>],
    sizes: Vec<u64>,
    best: u64,
    nodes: u64,
}

impl Search<'_> {
    fn descend(&mut self, disc: usize, value: u64) -> Result<()> {
        self.nodes += 1;
        if self.nodes > NODE_BUDGET {
            return Err(Error::InstanceTooLarge("node budget exhausted".into()));
        }
        let remaining = (self.choices.len() - disc) as u64;
        if remaining == 0 {
            self.best = self.best.max(value);
            return Ok(());
        }
        // Placing all remaining discs in the largest cluster is optimistic.
        let largest = self.sizes.iter().copied().max().unwrap_or(0);
        if value + 2 * largest * remaining + remaining * remaining <= self.best {
            return Ok(());
        }
        for &k in &self.choices[disc] {
            let s = self.sizes[k];
            self.sizes[k] = s + 1;
            self.descend(disc + 1, value + 2 * s + 1)?;
            self.sizes[k] = s;
        }
        Ok(())
    }
}
