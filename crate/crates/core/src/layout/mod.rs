//! Strip layouts for HRAID k/ℓ.
//!
//! Each node row holds its `k + ℓ` check strips in a run of consecutive
//! (cyclic) disk positions. The run starts at position
//! `((-(i + n)) mod M) + 1` for row `i` and node `n` (both 1-based), intra-node
//! checks first, so the run shifts left by one from node to node and from row
//! to row. The pattern repeats every `M` rows.
//!
//! Check classes are lettered in run order: with `ℓ = 1, k = 1` the intra-node
//! check is `P` and the inter-node check is `Q`; with `ℓ = 2, k = 1` the
//! intra-node checks are `P`, `Q` and the inter-node check is `R`.

mod codec;
mod cost;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use codec::{encode_stripes, recover, ReadError, Recovery, StripeContent, DEFAULT_STRIP_SIZE};
pub use cost::{small_write_cost, WorkloadParams};

use crate::config::HraidConfig;
use crate::error::{Error, Result};

const CHECK_LETTERS: [char; 6] = ['P', 'Q', 'R', 'S', 'T', 'U'];

/// What a strip holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StripRole {
    Data,
    /// Intra-node check of the given class (0-based, `< ℓ`).
    IntraCheck(u8),
    /// Inter-node check of the given class (0-based, `< k`).
    InterCheck(u8),
}

impl StripRole {
    pub fn is_data(self) -> bool {
        self == StripRole::Data
    }

    pub fn is_check(self) -> bool {
        !self.is_data()
    }

    /// Cell letter: `D` for data, otherwise the check class letter.
    pub fn letter(self, l: usize) -> char {
        match self {
            StripRole::Data => 'D',
            StripRole::IntraCheck(c) => CHECK_LETTERS[c as usize],
            StripRole::InterCheck(c) => CHECK_LETTERS[l + c as usize],
        }
    }

    pub fn from_letter(letter: char, k: usize, l: usize) -> Option<Self> {
        if letter == 'D' {
            return Some(StripRole::Data);
        }
        let t = CHECK_LETTERS.iter().position(|&c| c == letter)?;
        if t < l {
            Some(StripRole::IntraCheck(t as u8))
        } else if t < l + k {
            Some(StripRole::InterCheck((t - l) as u8))
        } else {
            None
        }
    }
}

/// A strip coordinate. All indices are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub node: usize,
    pub pos: usize,
}

impl Cell {
    pub fn new(row: usize, node: usize, pos: usize) -> Self {
        Cell { row, node, pos }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(row {}, node {}, pos {})", self.row, self.node, self.pos)
    }
}

/// Role of every strip in `rows` stripe rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayoutGrid {
    rows: usize,
    nodes: usize,
    positions: usize,
    cells: Vec<StripRole>,
}

impl LayoutGrid {
    /// A grid with every strip set to `Data`.
    pub fn all_data(rows: usize, nodes: usize, positions: usize) -> Self {
        LayoutGrid {
            rows,
            nodes,
            positions,
            cells: vec![StripRole::Data; rows * nodes * positions],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn positions(&self) -> usize {
        self.positions
    }

    pub(crate) fn index(&self, cell: Cell) -> usize {
        assert!(
            (1..=self.rows).contains(&cell.row)
                && (1..=self.nodes).contains(&cell.node)
                && (1..=self.positions).contains(&cell.pos),
            "{cell} outside a {}x{}x{} grid",
            self.rows,
            self.nodes,
            self.positions
        );
        ((cell.row - 1) * self.nodes + (cell.node - 1)) * self.positions + (cell.pos - 1)
    }

    /// Panics if `cell` lies outside the grid.
    pub fn role(&self, cell: Cell) -> StripRole {
        self.cells[self.index(cell)]
    }

    pub fn set(&mut self, cell: Cell, role: StripRole) {
        let i = self.index(cell);
        self.cells[i] = role;
    }

    /// All cells in row-major `(row, node, pos)` order.
    pub fn cells(&self) -> impl Iterator<Item = (Cell, StripRole)> + '_ {
        let (nodes, positions) = (self.nodes, self.positions);
        self.cells.iter().enumerate().map(move |(i, &role)| {
            let pos = i % positions + 1;
            let node = (i / positions) % nodes + 1;
            let row = i / (positions * nodes) + 1;
            (Cell { row, node, pos }, role)
        })
    }

    /// Roles of one node's strips in one row, by position.
    pub fn node_row(&self, row: usize, node: usize) -> &[StripRole] {
        let start = self.index(Cell::new(row, node, 1));
        &self.cells[start..start + self.positions]
    }

    /// Render in the cell notation `X_{row,pos}^node`, one line per row with
    /// nodes separated by `||`.
    pub fn to_text(&self, config: &HraidConfig) -> String {
        let mut out = String::new();
        let cell_w = format!("D_{{{},{}}}^{}", self.rows, self.positions, self.nodes).len();
        let mut header = String::from("|");
        for node in 1..=self.nodes {
            let width = self.positions * (cell_w + 3) - 1;
            header.push_str(&format!(" {:<w$}|", format!("Node {node}"), w = width - 1));
            if node < self.nodes {
                header.push('|');
            }
        }
        out.push_str(&header);
        out.push('\n');
        for row in 1..=self.rows {
            out.push('|');
            for node in 1..=self.nodes {
                for pos in 1..=self.positions {
                    let letter = self.role(Cell::new(row, node, pos)).letter(config.l());
                    let text = format!("{letter}_{{{row},{pos}}}^{node}");
                    out.push_str(&format!(" {text:<cell_w$} |"));
                }
                if node < self.nodes {
                    out.push('|');
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn to_document(&self, config: &HraidConfig) -> LayoutDocument {
        let rows = (1..=self.rows)
            .map(|row| {
                (1..=self.nodes)
                    .map(|node| {
                        self.node_row(row, node)
                            .iter()
                            .map(|r| r.letter(config.l()).to_string())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        LayoutDocument {
            n: config.n(),
            m: config.m(),
            k: config.k(),
            l: config.l(),
            rows,
        }
    }
}

/// Machine-readable layout: `rows[row][node][pos]` cell letters, 0-based
/// array indices, together with the configuration that names the letters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutDocument {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub l: usize,
    pub rows: Vec<Vec<Vec<String>>>,
}

impl LayoutDocument {
    pub fn config(&self) -> Result<HraidConfig> {
        HraidConfig::new(self.n, self.m, self.k, self.l)
    }

    /// Rebuild the grid. Ragged arrays and unknown letters are dimension errors.
    pub fn to_grid(&self) -> Result<(HraidConfig, LayoutGrid)> {
        let config = self.config()?;
        let rows = self.rows.len();
        let nodes = self.rows.first().map_or(0, Vec::len);
        let positions = self
            .rows
            .first()
            .and_then(|r| r.first())
            .map_or(0, Vec::len);
        let mut grid = LayoutGrid::all_data(rows, nodes, positions);
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != nodes {
                return Err(Error::Dimension(format!(
                    "row {} has {} nodes, expected {nodes}",
                    i + 1,
                    row.len()
                )));
            }
            for (n, strips) in row.iter().enumerate() {
                if strips.len() != positions {
                    return Err(Error::Dimension(format!(
                        "row {} node {} has {} strips, expected {positions}",
                        i + 1,
                        n + 1,
                        strips.len()
                    )));
                }
                for (j, token) in strips.iter().enumerate() {
                    let mut chars = token.chars();
                    let role = match (chars.next(), chars.next()) {
                        (Some(c), None) => StripRole::from_letter(c, config.k(), config.l()),
                        _ => None,
                    }
                    .ok_or_else(|| {
                        Error::Dimension(format!(
                            "unknown cell `{token}` at {}",
                            Cell::new(i + 1, n + 1, j + 1)
                        ))
                    })?;
                    grid.set(Cell::new(i + 1, n + 1, j + 1), role);
                }
            }
        }
        Ok((config, grid))
    }
}

/// Role of any strip, for any row (the layout has period `M` in rows).
pub fn role_at(config: &HraidConfig, cell: Cell) -> StripRole {
    let m = config.m();
    let (k, l) = (config.k(), config.l());
    let anchor0 = (m - (cell.row + cell.node) % m) % m;
    let offset = (cell.pos - 1 + m - anchor0) % m;
    if offset < l {
        StripRole::IntraCheck(offset as u8)
    } else if offset < l + k {
        StripRole::InterCheck((offset - l) as u8)
    } else {
        StripRole::Data
    }
}

/// The first `M` stripe rows of the HRAID k/ℓ layout.
pub fn generate_layout(config: &HraidConfig) -> Result<LayoutGrid> {
    config.require_layout()?;
    let m = config.m();
    let mut grid = LayoutGrid::all_data(m, config.n(), m);
    for i in 0..grid.cells.len() {
        let pos = i % m + 1;
        let node = (i / m) % config.n() + 1;
        let row = i / (m * config.n()) + 1;
        grid.cells[i] = role_at(config, Cell { row, node, pos });
    }
    Ok(grid)
}

/// A single broken layout invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// A node row without exactly one strip of each check class.
    NodeRow {
        row: usize,
        node: usize,
        intra: Vec<u8>,
        inter: Vec<u8>,
    },
    /// A disk whose check-strip count over the `M` rows is not `k + ℓ`.
    Disk { node: usize, pos: usize, checks: usize },
    /// With `N = M`: a `(row, pos)` column without `ℓ` intra and `k` inter checks.
    Column {
        row: usize,
        pos: usize,
        intra: usize,
        inter: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NodeRow {
                row,
                node,
                intra,
                inter,
            } => write!(
                f,
                "node row (row {row}, node {node}): intra classes {intra:?}, inter classes {inter:?}"
            ),
            Violation::Disk { node, pos, checks } => {
                write!(f, "disk (node {node}, pos {pos}): {checks} check strips")
            }
            Violation::Column {
                row,
                pos,
                intra,
                inter,
            } => write!(
                f,
                "column (row {row}, pos {pos}): {intra} intra and {inter} inter checks"
            ),
        }
    }
}

/// Everything wrong with a grid; empty when the grid is a valid layout.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LayoutReport {
    pub violations: Vec<Violation>,
}

impl LayoutReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check the three layout invariants: per node row, per disk, and (for
/// `N = M`) per column.
pub fn verify_layout(grid: &LayoutGrid, config: &HraidConfig) -> Result<LayoutReport> {
    let (n, m, k, l) = (config.n(), config.m(), config.k(), config.l());
    if grid.rows != m || grid.nodes != n || grid.positions != m {
        return Err(Error::Dimension(format!(
            "grid is {}x{}x{} (rows x nodes x positions), config needs {m}x{n}x{m}",
            grid.rows, grid.nodes, grid.positions
        )));
    }
    let want_intra: Vec<u8> = (0..l as u8).collect();
    let want_inter: Vec<u8> = (0..k as u8).collect();
    let mut report = LayoutReport::default();

    for row in 1..=m {
        for node in 1..=n {
            let mut intra = Vec::new();
            let mut inter = Vec::new();
            for role in grid.node_row(row, node) {
                match *role {
                    StripRole::IntraCheck(c) => intra.push(c),
                    StripRole::InterCheck(c) => inter.push(c),
                    StripRole::Data => {}
                }
            }
            intra.sort_unstable();
            inter.sort_unstable();
            if intra != want_intra || inter != want_inter {
                report.violations.push(Violation::NodeRow {
                    row,
                    node,
                    intra,
                    inter,
                });
            }
        }
    }

    for node in 1..=n {
        for pos in 1..=m {
            let checks = (1..=m)
                .filter(|&row| grid.role(Cell::new(row, node, pos)).is_check())
                .count();
            if checks != k + l {
                report.violations.push(Violation::Disk { node, pos, checks });
            }
        }
    }

    if n == m {
        for row in 1..=m {
            for pos in 1..=m {
                let (mut intra, mut inter) = (0, 0);
                for node in 1..=n {
                    match grid.role(Cell::new(row, node, pos)) {
                        StripRole::IntraCheck(_) => intra += 1,
                        StripRole::InterCheck(_) => inter += 1,
                        StripRole::Data => {}
                    }
                }
                if intra != l || inter != k {
                    report.violations.push(Violation::Column {
                        row,
                        pos,
                        intra,
                        inter,
                    });
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// The 4x4 HRAID1/1 grid, one string per row, nodes separated by spaces.
    const ANCHOR_PATTERN_4X4: [&str; 4] = [
        "DDPQ DPQD PQDD QDDP",
        "DPQD PQDD QDDP DDPQ",
        "PQDD QDDP DDPQ DPQD",
        "QDDP DDPQ DPQD PQDD",
    ];

    fn anchor_pattern() -> (HraidConfig, LayoutGrid) {
        let doc = LayoutDocument {
            n: 4,
            m: 4,
            k: 1,
            l: 1,
            rows: ANCHOR_PATTERN_4X4
                .iter()
                .map(|r| {
                    r.split(' ')
                        .map(|node| node.chars().map(|c| c.to_string()).collect())
                        .collect()
                })
                .collect(),
        };
        doc.to_grid().unwrap()
    }

    #[test]
    fn first_and_last_node_rows() {
        let c = HraidConfig::new(4, 4, 1, 1).unwrap();
        let g = generate_layout(&c).unwrap();
        use StripRole::*;
        assert_eq!(
            g.node_row(1, 1),
            &[Data, Data, IntraCheck(0), InterCheck(0)]
        );
        assert_eq!(
            g.node_row(4, 4),
            &[IntraCheck(0), InterCheck(0), Data, Data]
        );
    }

    #[test]
    fn generated_matches_anchor_pattern() {
        let (c, grid) = anchor_pattern();
        assert_eq!(generate_layout(&c).unwrap(), grid);
        assert!(verify_layout(&grid, &c).unwrap().is_valid());
    }

    #[test]
    fn no_redundancy_is_all_data() {
        let c = HraidConfig::new(4, 4, 0, 0).unwrap();
        let g = generate_layout(&c).unwrap();
        assert!(g.cells().all(|(_, r)| r.is_data()));
    }

    #[test]
    fn five_by_five_two_one_disk_balance() {
        let c = HraidConfig::new(5, 5, 2, 1).unwrap();
        let g = generate_layout(&c).unwrap();
        for node in 1..=5 {
            for pos in 1..=5 {
                let checks = (1..=5)
                    .filter(|&row| g.role(Cell::new(row, node, pos)).is_check())
                    .count();
                assert_eq!(checks, 3, "node {node} pos {pos}");
            }
        }
    }

    #[test]
    fn moved_parity_breaks_column() {
        let (c, mut grid) = anchor_pattern();
        grid.set(Cell::new(1, 1, 1), StripRole::IntraCheck(0));
        grid.set(Cell::new(1, 1, 3), StripRole::Data);
        let report = verify_layout(&grid, &c).unwrap();
        assert!(!report.is_valid());
        assert!(report.violations.contains(&Violation::Column {
            row: 1,
            pos: 3,
            intra: 0,
            inter: 1
        }));
        assert!(report.violations.contains(&Violation::Column {
            row: 1,
            pos: 1,
            intra: 2,
            inter: 1
        }));
        assert!(report
            .violations
            .contains(&Violation::Disk { node: 1, pos: 1, checks: 3 }));
    }

    #[test]
    fn dimension_mismatch() {
        let c = HraidConfig::new(4, 4, 1, 1).unwrap();
        let g = LayoutGrid::all_data(4, 3, 4);
        assert!(matches!(verify_layout(&g, &c), Err(Error::Dimension(_))));
    }

    #[test]
    fn layout_needs_a_data_strip() {
        let c = HraidConfig::new(3, 3, 1, 2).unwrap();
        assert!(generate_layout(&c).is_err());
    }

    #[test]
    fn rows_repeat_with_period_m() {
        let c = HraidConfig::new(5, 5, 1, 2).unwrap();
        for row in 1..=5 {
            for node in 1..=5 {
                for pos in 1..=5 {
                    assert_eq!(
                        role_at(&c, Cell::new(row, node, pos)),
                        role_at(&c, Cell::new(row + 5, node, pos))
                    );
                }
            }
        }
    }

    #[test]
    fn text_uses_cell_notation() {
        let c = HraidConfig::new(4, 4, 1, 1).unwrap();
        let text = generate_layout(&c).unwrap().to_text(&c);
        let first = text.lines().nth(1).unwrap();
        assert!(first.starts_with("| D_{1,1}^1 | D_{1,2}^1 | P_{1,3}^1 | Q_{1,4}^1 ||"));
        assert!(text.lines().nth(4).unwrap().ends_with("| D_{4,4}^4 |"));
    }

    #[test]
    fn letters_follow_run_order() {
        let c = HraidConfig::new(5, 5, 1, 2).unwrap();
        let g = generate_layout(&c).unwrap();
        let doc = g.to_document(&c);
        // Row 1 node 1 anchors at position 4: P, Q intra then R inter, wrapping.
        assert_eq!(doc.rows[0][0], vec!["R", "D", "D", "P", "Q"]);
        let (_, back) = doc.to_grid().unwrap();
        assert_eq!(back, g);
    }

    proptest! {
        #[test]
        fn generated_layouts_verify(nm in 1usize..=8, k in 0usize..=3, l in 0usize..=3) {
            prop_assume!(k < nm && k + l < nm);
            let c = HraidConfig::new(nm, nm, k, l).unwrap();
            let g = generate_layout(&c).unwrap();
            let report = verify_layout(&g, &c).unwrap();
            prop_assert!(report.is_valid(), "{:?}", report.violations);
        }

        #[test]
        fn unequal_geometry_keeps_row_and_disk_balance(n in 1usize..=8, m in 1usize..=8, k in 0usize..=3, l in 0usize..=3) {
            prop_assume!(k < n && l < m && k + l < m);
            let c = HraidConfig::new(n, m, k, l).unwrap();
            let g = generate_layout(&c).unwrap();
            prop_assert!(verify_layout(&g, &c).unwrap().is_valid());
        }
    }
}
