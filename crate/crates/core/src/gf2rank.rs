//! Streaming rank over GF(2) for block incidence matrices.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::UnitalDesign;

const NONE: u32 = u32::MAX;

/// A row over GF(2); column i is bit i % 64 of word i / 64.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitRow {
    width: usize,
    words: Vec<u64>,
}

impl BitRow {
    pub fn zeros(width: usize) -> Self {
        BitRow {
            width,
            words: vec![0; width.div_ceil(64)],
        }
    }

    pub fn from_columns(width: usize, cols: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut row = BitRow::zeros(width);
        for c in cols {
            if c >= width {
                return Err(Error::InvalidArgument(format!("column {c} outside width {width}")));
            }
            row.toggle(c);
        }
        Ok(row)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn get(&self, c: usize) -> bool {
        self.words[c / 64] >> (c % 64) & 1 == 1
    }

    pub fn toggle(&mut self, c: usize) {
        self.words[c / 64] ^= 1 << (c % 64);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }
}

fn lowest_bit_from(words: &[u64], start_word: usize) -> Option<(usize, usize)> {
    words[start_word..]
        .iter()
        .position(|&w| w != 0)
        .map(|k| {
            let wi = start_word + k;
            (wi, wi * 64 + words[wi].trailing_zeros() as usize)
        })
}

/// Row basis keyed by pivot column (the lowest set bit of each basis row).
#[derive(Clone, Debug)]
pub struct RankAccumulator {
    width: usize,
    stride: usize,
    basis: Vec<u64>,
    pivot_row: Vec<u32>,
    rank: usize,
    early_stop: Option<usize>,
}

impl RankAccumulator {
    pub fn new(width: usize) -> Self {
        RankAccumulator {
            width,
            stride: width.div_ceil(64),
            basis: Vec::new(),
            pivot_row: vec![NONE; width],
            rank: 0,
            early_stop: None,
        }
    }

    /// Once `threshold` is reached further rows are ignored.
    pub fn with_early_stop(mut self, threshold: usize) -> Self {
        self.early_stop = Some(threshold);
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_stopped(&self) -> bool {
        self.early_stop.is_some_and(|t| self.rank >= t)
    }

    fn basis_row(&self, r: u32) -> &[u64] {
        let start = r as usize * self.stride;
        &self.basis[start..start + self.stride]
    }

    /// Clears pivot columns from the lowest bit upward until the lowest set
    /// bit is not a pivot. Returns that bit, or `None` if the row vanished.
    fn reduce(&self, words: &mut [u64]) -> Option<usize> {
        let mut from = 0;
        while let Some((wi, c)) = lowest_bit_from(words, from) {
            let r = self.pivot_row[c];
            if r == NONE {
                return Some(c);
            }
            let b = self.basis_row(r);
            for k in wi..self.stride {
                words[k] ^= b[k];
            }
            from = wi;
        }
        None
    }

    fn insert(&mut self, words: &[u64], pivot: usize) {
        self.pivot_row[pivot] = self.rank as u32;
        self.basis.extend_from_slice(words);
        self.rank += 1;
    }

    /// Adds a row; returns whether the rank grew.
    pub fn absorb(&mut self, row: &BitRow) -> Result<bool> {
        if row.width != self.width {
            return Err(Error::WidthMismatch {
                expected: self.width,
                got: row.width,
            });
        }
        if self.is_stopped() {
            return Ok(false);
        }
        let mut words = row.words.clone();
        Ok(match self.reduce(&mut words) {
            Some(p) => {
                self.insert(&words, p);
                true
            }
            None => false,
        })
    }

    /// Absorbs rows in parallel batches: each batch is reduced against the
    /// current basis concurrently, then the residues are inserted in order.
    pub fn absorb_batch(&mut self, rows: &[BitRow]) -> Result<usize> {
        if let Some(r) = rows.iter().find(|r| r.width != self.width) {
            return Err(Error::WidthMismatch {
                expected: self.width,
                got: r.width,
            });
        }
        let before = self.rank;
        let residues: Vec<Vec<u64>> = rows
            .par_iter()
            .filter_map(|r| {
                let mut w = r.words.clone();
                self.reduce(&mut w).map(|_| w)
            })
            .collect();
        for mut w in residues {
            if self.is_stopped() {
                break;
            }
            if let Some(p) = self.reduce(&mut w) {
                self.insert(&w, p);
            }
        }
        Ok(self.rank - before)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankOutcome {
    pub rank: usize,
    pub rows_absorbed: usize,
    pub stopped_early: bool,
    pub include_infinity: bool,
}

/// q³ - q + 1.
pub fn oval_upper_bound(q: u32) -> usize {
    let q = q as usize;
    q * q * q - q + 1
}

const BATCH: usize = 512;

/// 2-rank of the block incidence matrix of U_θ. Without ∞ the last column is
/// dropped and ∞ removed from every B_a. With `early_stop` the stream ends
/// once q³ - q + 1 is reached.
pub fn rank2_of_unital(design: &UnitalDesign, include_infinity: bool, early_stop: bool) -> Result<RankOutcome> {
    let width = if include_infinity {
        design.num_points()
    } else {
        design.num_points() - 1
    };
    let bound = oval_upper_bound(design.q);
    let mut acc = RankAccumulator::new(width);
    if early_stop {
        acc = acc.with_early_stop(bound);
    }
    let inf = design.infinity() as usize;
    let mut rows_absorbed = 0;
    let n = design.num_blocks();
    let mut start = 0;
    while start < n && !acc.is_stopped() {
        let end = (start + BATCH).min(n);
        let rows: Vec<BitRow> = (start..end)
            .into_par_iter()
            .map(|i| {
                let cols = design.block(i).iter().map(|&c| c as usize);
                let cols: Vec<usize> = if include_infinity {
                    cols.collect()
                } else {
                    cols.filter(|&c| c != inf).collect()
                };
                BitRow::from_columns(width, cols).expect("block points lie inside the width")
            })
            .collect();
        acc.absorb_batch(&rows)?;
        rows_absorbed += rows.len();
        start = end;
    }
    let rank = acc.rank();
    if design.normal && rank > bound {
        return Err(Error::UpperBoundExceeded { rank, bound });
    }
    Ok(RankOutcome {
        rank,
        rows_absorbed,
        stopped_early: acc.is_stopped() && start < n,
        include_infinity,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualOvalReport {
    pub ovals: usize,
    pub blocks_checked: usize,
    /// Number of (block, oval) pairs meeting in 0 and in 2 points.
    pub meets_zero: usize,
    pub meets_two: usize,
    pub oval_rank: usize,
    pub implied_upper_bound: usize,
}

/// Every block meets every oval O_{tθ} in an even number of points (B_a in
/// exactly two), and the q oval vectors are independent.
pub fn verify_dual_ovals(design: &UnitalDesign) -> Result<DualOvalReport> {
    if !design.normal {
        return Err(Error::NotNormal(design.f_id.clone()));
    }
    let q = design.q as usize;
    let inf = design.infinity();
    let (mut zero, mut two) = (0usize, 0usize);
    let mut meets = vec![0usize; q];
    for (bi, blk) in design.blocks().enumerate() {
        meets.iter_mut().for_each(|m| *m = 0);
        let has_inf = blk.last() == Some(&inf);
        for &pt in blk {
            if pt != inf {
                meets[design.affine_coords(pt).1.index()] += 1;
            }
        }
        for (t, &m) in meets.iter().enumerate() {
            let total = m + has_inf as usize;
            let ok = if bi < design.num_b_a() { total == 2 } else { total == 0 || total == 2 };
            if !ok {
                return Err(Error::violation(
                    "blocks meet ovals evenly",
                    format!("block {bi} meets O_{t}theta in {total} points"),
                ));
            }
            if total == 0 {
                zero += 1;
            } else {
                two += 1;
            }
        }
    }
    let width = design.num_points();
    let mut acc = RankAccumulator::new(width);
    for t in 0..design.q {
        let cols = (0..design.q * design.q)
            .map(|x| (x * design.q + t) as usize)
            .chain(std::iter::once(inf as usize));
        acc.absorb(&BitRow::from_columns(width, cols)?)?;
    }
    if acc.rank() != q {
        return Err(Error::violation(
            "oval vectors independent",
            format!("rank {} of {q} oval vectors", acc.rank()),
        ));
    }
    Ok(DualOvalReport {
        ovals: q,
        blocks_checked: design.num_blocks(),
        meets_zero: zero,
        meets_two: two,
        oval_rank: q,
        implied_upper_bound: width - q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const FANO: [[usize; 3]; 7] = [[0, 1, 2], [0, 3, 4], [0, 5, 6], [1, 3, 5], [1, 4, 6], [2, 3, 6], [2, 4, 5]];

    fn brute_rank(rows: &[u64]) -> usize {
        let mut span = std::collections::HashSet::new();
        for mask in 0u32..(1 << rows.len()) {
            let v = (0..rows.len()).filter(|i| mask >> i & 1 == 1).fold(0u64, |a, i| a ^ rows[i]);
            span.insert(v);
        }
        span.len().trailing_zeros() as usize
    }

    #[test]
    fn fano_rank_four() {
        let masks: Vec<u64> = FANO.iter().map(|l| l.iter().map(|&c| 1u64 << c).sum()).collect();
        assert_eq!(brute_rank(&masks), 4);
        let mut acc = RankAccumulator::new(7);
        for l in FANO {
            acc.absorb(&BitRow::from_columns(7, l).unwrap()).unwrap();
        }
        assert_eq!(acc.rank(), 4);
    }

    #[test]
    fn duplicates_identity_and_width() {
        let mut acc = RankAccumulator::new(130);
        let r = BitRow::from_columns(130, [3, 70, 129]).unwrap();
        assert!(acc.absorb(&r).unwrap());
        assert!(!acc.absorb(&r).unwrap());
        let mut id = RankAccumulator::new(130);
        for c in 0..130 {
            assert!(id.absorb(&BitRow::from_columns(130, [c]).unwrap()).unwrap());
        }
        assert_eq!(id.rank(), 130);
        assert!(matches!(acc.absorb(&BitRow::zeros(7)), Err(Error::WidthMismatch { expected: 130, got: 7 })));
    }

    #[test]
    fn early_stop_ignores_rows() {
        let mut acc = RankAccumulator::new(10).with_early_stop(3);
        for c in 0..10 {
            acc.absorb(&BitRow::from_columns(10, [c]).unwrap()).unwrap();
        }
        assert_eq!(acc.rank(), 3);
        assert!(acc.is_stopped());
    }

    #[test]
    fn batch_matches_sequential_on_random_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut rows: Vec<BitRow> = Vec::new();
        for _ in 0..300 {
            let cols: Vec<usize> = (0..200).filter(|_| rand::RngExt::random_bool(&mut rng, 0.05)).collect();
            rows.push(BitRow::from_columns(200, cols).unwrap());
        }
        let mut seq = RankAccumulator::new(200);
        for r in &rows {
            seq.absorb(r).unwrap();
        }
        rows.shuffle(&mut rng);
        let mut bat = RankAccumulator::new(200);
        for chunk in rows.chunks(37) {
            bat.absorb_batch(chunk).unwrap();
        }
        assert_eq!(seq.rank(), bat.rank());
    }
}
