//! XOR codec for HRAID with at most one check class per level.
//!
//! An inter-node check strip is the XOR of the data strips at the same
//! `(row, pos)` in the other nodes. An intra-node check strip is the XOR of
//! every other strip of its node row, inter-node checks included. Recovery
//! solves the full set of parity equations over GF(2), so a strip is rebuilt
//! exactly when the surviving strips determine it.

use std::collections::BTreeSet;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use super::{generate_layout, Cell, LayoutGrid, StripRole};
use crate::config::HraidConfig;
use crate::error::{Error, Result};

pub const DEFAULT_STRIP_SIZE: usize = 4096;

/// Strip payloads for every cell of a layout grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StripeContent {
    config: HraidConfig,
    grid: LayoutGrid,
    strip_size: usize,
    strips: Vec<Vec<u8>>,
}

impl StripeContent {
    pub fn config(&self) -> &HraidConfig {
        &self.config
    }

    pub fn grid(&self) -> &LayoutGrid {
        &self.grid
    }

    pub fn strip_size(&self) -> usize {
        self.strip_size
    }

    pub fn strip(&self, cell: Cell) -> &[u8] {
        &self.strips[self.grid.index(cell)]
    }

    /// Overwrite a strip in place, e.g. to simulate corruption.
    pub fn strip_mut(&mut self, cell: Cell) -> &mut [u8] {
        let i = self.grid.index(cell);
        &mut self.strips[i]
    }

    /// Data payloads in `(row, node, pos)` order, as accepted by [`encode_stripes`].
    pub fn data_payloads(&self) -> Vec<Vec<u8>> {
        self.grid
            .cells()
            .zip(&self.strips)
            .filter(|((_, role), _)| role.is_data())
            .map(|(_, s)| s.clone())
            .collect()
    }

    /// True when every check strip matches the XOR of what it covers.
    pub fn verify_parity(&self) -> bool {
        parity_equations(&self.grid).iter().all(|eq| {
            let mut acc = vec![0u8; self.strip_size];
            for &i in eq {
                xor_into(&mut acc, &self.strips[i]);
            }
            acc.iter().all(|&b| b == 0)
        })
    }

    pub fn node_cells(&self, node: usize) -> Vec<Cell> {
        self.grid.cells().map(|(c, _)| c).filter(|c| c.node == node).collect()
    }

    pub fn disk_cells(&self, node: usize, pos: usize) -> Vec<Cell> {
        (1..=self.grid.rows()).map(|row| Cell::new(row, node, pos)).collect()
    }

    /// Relative path of a strip file.
    pub fn strip_path(cell: Cell) -> PathBuf {
        PathBuf::from(format!("node{}", cell.node))
            .join(format!("disk{}", cell.pos))
            .join(format!("row{}.bin", cell.row))
    }

    /// Write one raw file per strip under `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> io::Result<()> {
        for ((cell, _), bytes) in self.grid.cells().zip(&self.strips) {
            let path = dir.join(Self::strip_path(cell));
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(path, bytes)?;
        }
        Ok(())
    }

    /// Read strips written by [`StripeContent::write_to_dir`]. Missing files
    /// are returned as erasures (their strips read as zeros); a file with the
    /// wrong length is an error.
    pub fn read_from_dir(
        dir: &Path,
        config: &HraidConfig,
        strip_size: usize,
    ) -> std::result::Result<(StripeContent, Vec<Cell>), ReadError> {
        let grid = generate_layout(config)?;
        let mut strips = Vec::with_capacity(grid.cells().count());
        let mut missing = Vec::new();
        for (cell, _) in grid.cells() {
            match fs::read(dir.join(Self::strip_path(cell))) {
                Ok(bytes) if bytes.len() == strip_size => strips.push(bytes),
                Ok(bytes) => {
                    return Err(ReadError::Layout(Error::Dimension(format!(
                        "{cell} holds {} bytes, expected {strip_size}",
                        bytes.len()
                    ))))
                }
                Err(e) if e.kind() == io::ErrorKind::NotFound => {
                    missing.push(cell);
                    strips.push(vec![0; strip_size]);
                }
                Err(e) => return Err(ReadError::Io(e)),
            }
        }
        Ok((
            StripeContent {
                config: *config,
                grid,
                strip_size,
                strips,
            },
            missing,
        ))
    }
}

#[derive(Debug)]
pub enum ReadError {
    Io(io::Error),
    Layout(Error),
}

impl From<Error> for ReadError {
    fn from(e: Error) -> Self {
        ReadError::Layout(e)
    }
}

impl std::fmt::Display for ReadError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ReadError::Io(e) => write!(f, "{e}"),
            ReadError::Layout(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ReadError {}

fn require_xor(config: &HraidConfig) -> Result<()> {
    if config.k() > 1 || config.l() > 1 {
        return Err(Error::UnsupportedCodec {
            k: config.k(),
            l: config.l(),
        });
    }
    Ok(())
}

fn xor_into(acc: &mut [u8], src: &[u8]) {
    for (a, b) in acc.iter_mut().zip(src) {
        *a ^= b;
    }
}

/// What an inter-node check at `cell` covers: data at its `(row, pos)` elsewhere.
fn inter_cover(grid: &LayoutGrid, cell: Cell) -> Vec<usize> {
    (1..=grid.nodes())
        .filter(|&n| n != cell.node)
        .map(|n| Cell::new(cell.row, n, cell.pos))
        .filter(|&c| grid.role(c).is_data())
        .map(|c| grid.index(c))
        .collect()
}

/// What an intra-node check at `cell` covers: the rest of its node row.
fn intra_cover(grid: &LayoutGrid, cell: Cell) -> Vec<usize> {
    (1..=grid.positions())
        .filter(|&p| p != cell.pos)
        .map(|p| grid.index(Cell::new(cell.row, cell.node, p)))
        .collect()
}

/// Each equation lists cells whose strips XOR to zero, check strip first.
fn parity_equations(grid: &LayoutGrid) -> Vec<Vec<usize>> {
    grid.cells()
        .filter_map(|(cell, role)| {
            let cover = match role {
                StripRole::Data => return None,
                StripRole::InterCheck(_) => inter_cover(grid, cell),
                StripRole::IntraCheck(_) => intra_cover(grid, cell),
            };
            let mut eq = Vec::with_capacity(cover.len() + 1);
            eq.push(grid.index(cell));
            eq.extend(cover);
            Some(eq)
        })
        .collect()
}

/// Lay `data` (payloads for every data cell, in `(row, node, pos)` order)
/// into the layout and compute all check strips.
pub fn encode_stripes(config: &HraidConfig, data: &[Vec<u8>]) -> Result<StripeContent> {
    require_xor(config)?;
    let grid = generate_layout(config)?;
    let data_cells = grid.cells().filter(|(_, r)| r.is_data()).count();
    if data.len() != data_cells {
        return Err(Error::Dimension(format!(
            "{} data payloads for {data_cells} data strips",
            data.len()
        )));
    }
    let strip_size = data.first().map_or(0, Vec::len);
    if let Some(bad) = data.iter().position(|d| d.len() != strip_size) {
        return Err(Error::Dimension(format!(
            "payload {bad} has {} bytes, expected {strip_size}",
            data[bad].len()
        )));
    }
    let mut payloads = data.iter();
    let strips: Vec<Vec<u8>> = grid
        .cells()
        .map(|(_, role)| match role {
            StripRole::Data => payloads.next().expect("counted above").clone(),
            _ => vec![0; strip_size],
        })
        .collect();
    let mut content = StripeContent {
        config: *config,
        grid,
        strip_size,
        strips,
    };
    fill_checks(&mut content);
    Ok(content)
}

fn fill_checks(content: &mut StripeContent) {
    let grid = &content.grid;
    // Inter-node checks cover data only, so they go first.
    for pass in [0, 1] {
        for (cell, role) in grid.cells() {
            let cover = match (pass, role) {
                (0, StripRole::InterCheck(_)) => inter_cover(grid, cell),
                (1, StripRole::IntraCheck(_)) => intra_cover(grid, cell),
                _ => continue,
            };
            let mut acc = vec![0u8; content.strip_size];
            for i in cover {
                xor_into(&mut acc, &content.strips[i]);
            }
            let target = grid.index(cell);
            content.strips[target] = acc;
        }
    }
}

/// Result of a recovery attempt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Recovery {
    Recovered(StripeContent),
    /// Data strips the survivors do not determine.
    DataLoss { lost: Vec<Cell> },
}

/// Rebuild the strips at `erased` (their current bytes are ignored).
pub fn recover(content: &StripeContent, erased: &[Cell]) -> Result<Recovery> {
    require_xor(&content.config)?;
    let grid = &content.grid;
    let erased: BTreeSet<usize> = erased.iter().map(|&c| grid.index(c)).collect();
    let unknowns: Vec<usize> = erased.iter().copied().collect();
    let slot = |cell: usize| unknowns.binary_search(&cell).ok();

    let words = unknowns.len().div_ceil(64);
    let mut rows: Vec<(Vec<u64>, Vec<u8>)> = Vec::new();
    for eq in parity_equations(grid) {
        let mut mask = vec![0u64; words];
        let mut rhs = vec![0u8; content.strip_size];
        for i in eq {
            match slot(i) {
                Some(u) => mask[u / 64] ^= 1 << (u % 64),
                None => xor_into(&mut rhs, &content.strips[i]),
            }
        }
        if mask.iter().any(|&w| w != 0) {
            rows.push((mask, rhs));
        }
    }

    // Gauss-Jordan elimination over GF(2).
    let mut pivot_of = vec![None; unknowns.len()];
    let mut rank = 0;
    for u in 0..unknowns.len() {
        let bit = |m: &[u64]| m[u / 64] >> (u % 64) & 1 == 1;
        let Some(p) = (rank..rows.len()).find(|&r| bit(&rows[r].0)) else {
            continue;
        };
        rows.swap(rank, p);
        let (pivot_mask, pivot_rhs) = rows[rank].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && bit(&row.0) {
                for (a, b) in row.0.iter_mut().zip(&pivot_mask) {
                    *a ^= b;
                }
                xor_into(&mut row.1, &pivot_rhs);
            }
        }
        pivot_of[u] = Some(rank);
        rank += 1;
    }

    let mut solved = content.clone();
    let mut lost = Vec::new();
    for (u, &cell_index) in unknowns.iter().enumerate() {
        let determined = pivot_of[u].filter(|&r| {
            rows[r].0.iter().map(|w| w.count_ones()).sum::<u32>() == 1
        });
        match determined {
            Some(r) => solved.strips[cell_index] = rows[r].1.clone(),
            None => {
                let (cell, role) = grid.cells().nth(cell_index).expect("in grid");
                if role.is_data() {
                    lost.push(cell);
                }
            }
        }
    }
    if !lost.is_empty() {
        return Ok(Recovery::DataLoss { lost });
    }
    // Every data strip is known now; undetermined checks are recomputed.
    fill_checks(&mut solved);
    Ok(Recovery::Recovered(solved))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_content(config: &HraidConfig, seed: u64, size: usize) -> StripeContent {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = generate_layout(config).unwrap();
        let count = grid.cells().filter(|(_, r)| r.is_data()).count();
        let data: Vec<Vec<u8>> = (0..count)
            .map(|_| (0..size).map(|_| rng.gen()).collect())
            .collect();
        encode_stripes(config, &data).unwrap()
    }

    fn wipe(content: &StripeContent, cells: &[Cell]) -> StripeContent {
        let mut c = content.clone();
        for &cell in cells {
            c.strip_mut(cell).fill(0xA5);
        }
        c
    }

    fn c11() -> HraidConfig {
        HraidConfig::new(4, 4, 1, 1).unwrap()
    }

    #[test]
    fn zeros_encode_to_zeros() {
        let c = c11();
        let data = vec![vec![0u8; 16]; 32];
        let content = encode_stripes(&c, &data).unwrap();
        let grid = content.grid().clone();
        assert!(grid.cells().all(|(cell, _)| content.strip(cell).iter().all(|&b| b == 0)));
    }

    #[test]
    fn encode_is_deterministic_and_consistent() {
        let c = c11();
        let a = random_content(&c, 42, 64);
        let b = encode_stripes(&c, &a.data_payloads()).unwrap();
        assert_eq!(a, b);
        assert!(a.verify_parity());
    }

    #[test]
    fn checks_follow_their_definitions() {
        let c = c11();
        let content = random_content(&c, 1, 8);
        // Row 1: node 1 has Q at pos 4; the other nodes at pos 4 hold D, D, P.
        let mut expect = content.strip(Cell::new(1, 2, 4)).to_vec();
        xor_into(&mut expect, content.strip(Cell::new(1, 3, 4)));
        assert_eq!(content.strip(Cell::new(1, 1, 4)), &expect[..]);
        // Node 1 P at pos 3 covers D, D and Q.
        let mut expect = vec![0u8; 8];
        for pos in [1, 2, 4] {
            xor_into(&mut expect, content.strip(Cell::new(1, 1, pos)));
        }
        assert_eq!(content.strip(Cell::new(1, 1, 3)), &expect[..]);
    }

    #[test]
    fn whole_node_rebuilt_from_inter_checks() {
        let c = c11();
        let original = random_content(&c, 42, 256);
        let erased = original.node_cells(3);
        match recover(&wipe(&original, &erased), &erased).unwrap() {
            Recovery::Recovered(r) => assert_eq!(r, original),
            Recovery::DataLoss { lost } => panic!("lost {lost:?}"),
        }
    }

    #[test]
    fn single_strip_from_row_parity() {
        let c = HraidConfig::new(4, 4, 0, 1).unwrap();
        let original = random_content(&c, 3, 32);
        let erased = [Cell::new(2, 3, 1)];
        let r = recover(&wipe(&original, &erased), &erased).unwrap();
        assert_eq!(r, Recovery::Recovered(original));
    }

    #[test]
    fn two_disks_in_one_node() {
        let c = c11();
        let original = random_content(&c, 9, 32);
        let mut erased = original.disk_cells(2, 1);
        erased.extend(original.disk_cells(2, 3));
        let r = recover(&wipe(&original, &erased), &erased).unwrap();
        assert_eq!(r, Recovery::Recovered(original));
    }

    #[test]
    fn two_nodes_lose_data() {
        let c = c11();
        let original = random_content(&c, 5, 32);
        for a in 1..=4 {
            for b in a + 1..=4 {
                let mut erased = original.node_cells(a);
                erased.extend(original.node_cells(b));
                assert!(matches!(
                    recover(&original, &erased).unwrap(),
                    Recovery::DataLoss { .. }
                ));
            }
        }
    }

    #[test]
    fn no_inter_code_loses_a_node() {
        let c = HraidConfig::new(3, 3, 0, 1).unwrap();
        let original = random_content(&c, 5, 4);
        let erased = original.node_cells(1);
        let Recovery::DataLoss { lost } = recover(&original, &erased).unwrap() else {
            panic!("expected loss");
        };
        assert_eq!(lost.len(), 6);
    }

    #[test]
    fn rejects_multi_check_codes() {
        let c = HraidConfig::new(5, 5, 2, 1).unwrap();
        assert_eq!(
            encode_stripes(&c, &[]),
            Err(Error::UnsupportedCodec { k: 2, l: 1 })
        );
    }

    #[test]
    fn payload_shape_errors() {
        let c = c11();
        assert!(matches!(encode_stripes(&c, &[vec![0; 4]]), Err(Error::Dimension(_))));
        let mut data = vec![vec![0u8; 4]; 32];
        data[7] = vec![0; 5];
        assert!(matches!(encode_stripes(&c, &data), Err(Error::Dimension(_))));
    }

    #[test]
    fn directory_round_trip_with_missing_files() {
        let c = c11();
        let original = random_content(&c, 11, 64);
        let dir = std::env::temp_dir().join(format!("hraid-codec-{}", std::process::id()));
        original.write_to_dir(&dir).unwrap();
        fs::remove_dir_all(dir.join("node2")).unwrap();
        let (read, missing) = StripeContent::read_from_dir(&dir, &c, 64).unwrap();
        assert_eq!(missing.len(), 16);
        assert!(missing.iter().all(|c| c.node == 2));
        let r = recover(&read, &missing).unwrap();
        assert_eq!(r, Recovery::Recovered(original));
        fs::remove_dir_all(&dir).unwrap();
    }
}
