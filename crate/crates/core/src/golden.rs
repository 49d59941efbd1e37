//! Reference tables shipped verbatim as data files.
//!
//! These numbers are never computed here; the rest of the crate recomputes
//! what it can and the report module compares the two.

use std::sync::OnceLock;

const TABLE_2_1: &str = include_str!("../data/table_2_1.tsv");
const TABLE_3_1: &str = include_str!("../data/table_3_1.tsv");
const TABLE_3_2: &str = include_str!("../data/table_3_2.tsv");

/// One band of the stage-count table: every `m` in `lo..=hi` reduces through
/// the listed row counts in `stages` steps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageBand {
    pub lo: u32,
    pub hi: u32,
    /// `m_(2), m_(3), ...` up to and including the final 2.
    pub next_rows: Vec<u32>,
    pub stages: u32,
}

/// One band of the adder delay table: `and_levels * t_and + t_cc`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DelayBand {
    pub lo: u32,
    pub hi: u32,
    pub and_levels: u32,
}

/// One column of the gate-count table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CostColumn {
    pub m: u32,
    /// Count of tables `M1..M6`; `None` where the source shows a dash.
    pub tables: [Option<u32>; 6],
    pub sigma_and: u32,
}

fn data_lines(text: &str) -> impl Iterator<Item = Vec<&str>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.split('\t').map(str::trim).collect())
}

fn cell(s: &str) -> Option<u32> {
    if s == "-" {
        None
    } else {
        Some(s.parse().expect("reference table cell"))
    }
}

pub fn stage_bands() -> &'static [StageBand] {
    static CELL: OnceLock<Vec<StageBand>> = OnceLock::new();
    CELL.get_or_init(|| {
        data_lines(TABLE_2_1)
            .map(|f| StageBand {
                lo: f[0].parse().unwrap(),
                hi: f[1].parse().unwrap(),
                next_rows: f[2..5].iter().filter_map(|s| cell(s)).collect(),
                stages: f[5].parse().unwrap(),
            })
            .collect()
    })
}

pub fn delay_bands() -> &'static [DelayBand] {
    static CELL: OnceLock<Vec<DelayBand>> = OnceLock::new();
    CELL.get_or_init(|| {
        data_lines(TABLE_3_1)
            .map(|f| DelayBand {
                lo: f[0].parse().unwrap(),
                hi: f[1].parse().unwrap(),
                and_levels: f[2].parse().unwrap(),
            })
            .collect()
    })
}

pub fn cost_columns() -> &'static [CostColumn] {
    static CELL: OnceLock<Vec<CostColumn>> = OnceLock::new();
    CELL.get_or_init(|| {
        data_lines(TABLE_3_2)
            .map(|f| {
                let mut tables = [None; 6];
                for (t, slot) in tables.iter_mut().enumerate() {
                    *slot = cell(f[1 + t]);
                }
                CostColumn {
                    m: f[0].parse().unwrap(),
                    tables,
                    sigma_and: f[7].parse().unwrap(),
                }
            })
            .collect()
    })
}

/// Raw file contents, for reports that echo the source data.
pub fn raw(table: &str) -> Option<&'static str> {
    match table {
        "2.1" => Some(TABLE_2_1),
        "3.1" => Some(TABLE_3_1),
        "3.2" => Some(TABLE_3_2),
        _ => None,
    }
}

/// Per-stage delays of the 24-bit matrix processor as quoted in the source:
/// `(t_and, t_q, t_s, t_p)`, totalling 14.
pub const MAP24_STAGE_DELAYS: (u32, u32, u32, u32) = (1, 6, 4, 3);

/// Quoted AND-element count of the 24-bit matrix processor ("approximately").
pub const MAP24_AND_ELEMENTS_APPROX: u64 = 12_500;

/// Quoted switch count of the three-input table adder; no breakdown given.
pub const SWITCHES_3_TO_2: u32 = 26;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables_parse() {
        assert_eq!(stage_bands().len(), 6);
        assert_eq!(stage_bands()[2].next_rows, vec![4, 3, 2]);
        assert_eq!(delay_bands().len(), 6);
        assert_eq!(delay_bands()[5].and_levels, 7);
        let cols = cost_columns();
        assert_eq!(cols.len(), 17);
        assert_eq!(cols[0].sigma_and, 10);
        assert_eq!(cols.last().unwrap().sigma_and, 2463);
        assert_eq!(cols[11].m, 24);
        assert_eq!(
            cols[11].tables,
            [Some(12), Some(6), Some(3), Some(1), Some(1), None]
        );
    }
}
