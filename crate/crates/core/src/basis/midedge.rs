//! Closed-form basis data at the midpoint `ξ = (1/2, 0)` of the edge leaving
//! the patch origin.
//!
//! Row `i` (1-based) belongs to patch point `i - 1`; the last two patch points
//! vanish at the midpoint together with all their derivatives.

use std::collections::HashMap;
use std::io::Write;
use std::sync::{Arc, OnceLock, RwLock};

use super::Jet;
use crate::error::{Error, Result};
use crate::topology::beta;

#[derive(Clone, Debug, PartialEq)]
pub struct MidEdgeTable {
    valence: usize,
    rows: Vec<Jet>,
}

impl MidEdgeTable {
    pub fn new(valence: usize) -> Result<Self> {
        let b = beta(valence)?;
        let n = valence;
        let nb = n as f64 * b;
        let mut rows = vec![[0.0; 6]; n + 4];
        let mut set = |i: usize, row: Jet| rows[i - 1] = row;

        set(1, [(69.0 - 16.0 * nb) / 192.0, (-19.0 + 16.0 * nb) / 24.0, (-19.0 + 16.0 * nb) / 48.0,
                (5.0 - 16.0 * nb) / 4.0, (5.0 - 16.0 * nb) / 8.0, -1.0]);
        set(2, [(62.0 + 16.0 * b) / 192.0, (14.0 - 16.0 * b) / 24.0, (14.0 - 16.0 * b) / 48.0,
                (-2.0 + 16.0 * b) / 4.0, (-1.0 + 8.0 * b) / 4.0, -1.0]);
        set(3, [(25.0 + 16.0 * b) / 192.0, (1.0 - 16.0 * b) / 24.0, (19.0 - 16.0 * b) / 48.0,
                (-3.0 + 16.0 * b) / 4.0, (-3.0 + 16.0 * b) / 8.0, 0.5]);
        set(4, [(2.0 + 16.0 * b) / 192.0, (-1.0 - 16.0 * b) / 24.0, (2.0 - 16.0 * b) / 48.0,
                4.0 * b, (-1.0 + 8.0 * b) / 4.0, 0.0]);
        for i in 5..n {
            set(i, [16.0 * b / 192.0, -2.0 * b / 3.0, -b / 3.0, 4.0 * b, 2.0 * b, 0.0]);
        }
        set(n, [(2.0 + 16.0 * b) / 192.0, (-1.0 - 16.0 * b) / 24.0, (-4.0 - 16.0 * b) / 48.0,
                4.0 * b, (1.0 + 8.0 * b) / 4.0, 0.5]);
        set(n + 1, [(25.0 + 16.0 * b) / 192.0, (1.0 - 16.0 * b) / 24.0, (-17.0 - 16.0 * b) / 48.0,
                    (-3.0 + 16.0 * b) / 4.0, (-3.0 + 16.0 * b) / 8.0, 0.5]);
        set(n + 2, [3.0 / 192.0, 1.0 / 12.0, -1.0 / 48.0, 0.25, -0.125, 0.0]);
        set(n + 3, [1.0 / 192.0, 1.0 / 24.0, 1.0 / 48.0, 0.25, 0.125, 0.0]);
        set(n + 4, [3.0 / 192.0, 1.0 / 12.0, 5.0 / 48.0, 0.25, 0.375, 0.5]);

        // Low valences: the ring closes before the generic rows apply.
        match n {
            3 => {
                set(3, [(27.0 + 16.0 * b) / 192.0, -2.0 * b / 3.0, (15.0 - 16.0 * b) / 48.0,
                        (-3.0 + 16.0 * b) / 4.0, (-1.0 + 16.0 * b) / 8.0, 1.0]);
                set(4, [(27.0 + 16.0 * b) / 192.0, -2.0 * b / 3.0, (-15.0 - 16.0 * b) / 48.0,
                        (-3.0 + 16.0 * b) / 4.0, (-5.0 + 16.0 * b) / 8.0, 0.5]);
            }
            4 => {
                set(3, [(25.0 + 16.0 * b) / 192.0, (1.0 - 16.0 * b) / 24.0, (19.0 - 16.0 * b) / 48.0,
                        (-3.0 + 16.0 * b) / 4.0, (-3.0 + 16.0 * b) / 8.0, 0.5]);
                set(4, [(4.0 + 16.0 * b) / 192.0, (-2.0 - 16.0 * b) / 24.0, (-2.0 - 16.0 * b) / 48.0,
                        4.0 * b, 2.0 * b, 0.5]);
                set(5, [(25.0 + 16.0 * b) / 192.0, (1.0 - 16.0 * b) / 24.0, (-17.0 - 16.0 * b) / 48.0,
                        (-3.0 + 16.0 * b) / 4.0, (-3.0 + 16.0 * b) / 8.0, 0.5]);
            }
            _ => {}
        }
        Ok(Self { valence, rows })
    }

    pub fn valence(&self) -> usize {
        self.valence
    }

    /// The `N + 4` table rows.
    pub fn rows(&self) -> &[Jet] {
        &self.rows
    }

    /// Row `i`, 1-based as in the published table.
    pub fn row(&self, i: usize) -> Result<&Jet> {
        self.rows
            .get(i.wrapping_sub(1))
            .ok_or(Error::InvalidIndex { index: i, count: self.rows.len() })
    }

    /// Jets for all `N + 6` patch points, the last two being zero.
    pub fn patch_jets(&self) -> Vec<Jet> {
        let mut out = self.rows.clone();
        out.extend([[0.0; 6]; 2]);
        out
    }

    /// Writes the table as CSV with a header line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "i,phi,phi_1,phi_2,phi_11,phi_12,phi_22")?;
        for (i, r) in self.rows.iter().enumerate() {
            writeln!(out, "{},{},{},{},{},{},{}", i + 1, r[0], r[1], r[2], r[3], r[4], r[5])?;
        }
        Ok(())
    }
}

/// Memoized [`MidEdgeTable::new`].
pub fn midedge_table(valence: usize) -> Result<Arc<MidEdgeTable>> {
    static CACHE: OnceLock<RwLock<HashMap<usize, Arc<MidEdgeTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(t) = cache.read().expect("cache poisoned").get(&valence) {
        return Ok(t.clone());
    }
    let t = Arc::new(MidEdgeTable::new(valence)?);
    Ok(cache.write().expect("cache poisoned").entry(valence).or_insert(t).clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regular_first_row() {
        let t = midedge_table(6).unwrap();
        assert!((t.row(1).unwrap()[0] - 63.0 / 192.0).abs() < 1e-15);
        assert!(t.row(0).is_err());
        assert!(t.row(11).is_err());
    }

    #[test]
    fn regular_value_column_hand_sum() {
        // 63 + 63 + 26 + 3 + 1 + 3 + 26 + 3 + 1 + 3 = 192
        let expected = [63., 63., 26., 3., 1., 3., 26., 3., 1., 3.];
        let t = MidEdgeTable::new(6).unwrap();
        for (row, e) in t.rows().iter().zip(expected) {
            assert!((row[0] * 192.0 - e).abs() < 1e-12);
        }
    }

    #[test]
    fn valence_three_modified_row() {
        // β(3) = 3/16, so (27 + 16 β) / 192 = 30 / 192.
        let t = MidEdgeTable::new(3).unwrap();
        assert!((t.row(3).unwrap()[0] - 30.0 / 192.0).abs() < 1e-15);
    }

    #[test]
    fn columns_sum_to_partition_of_unity() {
        for n in 3..=20 {
            let t = MidEdgeTable::new(n).unwrap();
            for d in 0..6 {
                let s: f64 = t.rows().iter().map(|r| r[d]).sum();
                let expected = if d == 0 { 1.0 } else { 0.0 };
                assert!((s - expected).abs() < 1e-13, "N={n} column {d}: {s}");
            }
        }
    }

    #[test]
    fn csv_has_one_line_per_row() {
        let mut buf = Vec::new();
        MidEdgeTable::new(5).unwrap().write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + 9);
    }
}
