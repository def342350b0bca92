use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::DataError;

/// Operating regimes detected by rounding the three settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionTable {
    /// Decimal places kept when rounding settings.
    pub precision: u32,
    /// Rounded settings scaled by `10^precision`, in ascending order; the
    /// position of a key is its condition id.
    pub keys: Vec<[i64; 3]>,
    /// Mean settings of the rows that formed each condition.
    pub centroids: Vec<[f64; 3]>,
}

fn key(row: &[f64; 3], precision: u32) -> [i64; 3] {
    let scale = 10f64.powi(precision as i32);
    // +0.0 folds negative zero produced by rounding tiny negative settings.
    row.map(|v| ((v * scale).round() + 0.0) as i64)
}

impl ConditionTable {
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Condition id of a settings row, if its rounded key is known.
    pub fn assign(&self, row: &[f64; 3]) -> Option<usize> {
        self.keys.binary_search(&key(row, self.precision)).ok()
    }
}

/// Groups settings rows into conditions; ids follow sorted key order.
pub fn cluster_conditions(
    rows: &[[f64; 3]],
    precision: u32,
    max_conditions: usize,
) -> Result<(ConditionTable, Vec<usize>), DataError> {
    let mut groups: BTreeMap<[i64; 3], ([f64; 3], usize)> = BTreeMap::new();
    for row in rows {
        let entry = groups.entry(key(row, precision)).or_insert(([0.0; 3], 0));
        for (sum, v) in entry.0.iter_mut().zip(row) {
            *sum += v;
        }
        entry.1 += 1;
    }
    if groups.len() > max_conditions {
        return Err(DataError::TooManyConditions { found: groups.len(), max: max_conditions });
    }
    let keys: Vec<[i64; 3]> = groups.keys().copied().collect();
    let centroids = groups.values().map(|(sum, n)| sum.map(|s| s / *n as f64)).collect();
    let table = ConditionTable { precision, keys, centroids };
    let ids = rows.iter().map(|r| table.assign(r).expect("key was inserted above")).collect();
    Ok((table, ids))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn near_identical_settings_collapse() {
        let rows = [[-0.0007, -0.0004, 100.0], [0.0019, -0.0003, 100.0], [0.0, 0.0002, 100.0]];
        let (table, ids) = cluster_conditions(&rows, 1, 10).unwrap();
        assert_eq!(table.len(), 1);
        assert_eq!(ids, vec![0, 0, 0]);
    }

    #[test]
    fn six_regimes_sorted() {
        let regimes = [[42.0049, 0.8403, 100.0], [0.0011, 0.0, 100.0], [20.0072, 0.7, 100.0], [10.0045, 0.25, 100.0], [25.0014, 0.6216, 60.0], [35.0031, 0.8412, 100.0]];
        let rows: Vec<[f64; 3]> = (0..60).map(|k| regimes[k % 6]).collect();
        let (table, ids) = cluster_conditions(&rows, 1, 10).unwrap();
        assert_eq!(table.len(), 6);
        assert_eq!(ids[1], 0);
        assert_eq!(ids[0], 5);
        assert_eq!(ids[6], ids[0]);
        assert!(table.keys.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(table.assign(&[20.0, 0.7001, 100.0]), Some(ids[2]));
        assert_eq!(table.assign(&[15.0, 0.7, 100.0]), None);
    }

    #[test]
    fn cap_on_condition_count() {
        let rows: Vec<[f64; 3]> = (0..20).map(|k| [k as f64, 0.0, 100.0]).collect();
        assert!(matches!(cluster_conditions(&rows, 1, 10), Err(DataError::TooManyConditions { found: 20, max: 10 })));
    }
}
