//! Conditional-independence testing on discrete sample tables.
//!
//! Pearson's X² summed over the realized strata of the conditioning set is
//! the default statistic; the likelihood-ratio G² is available behind a
//! parameter. Degrees of freedom drop rows and columns with zero marginal
//! within each stratum, which keeps structural zeros created by hard
//! interventions from inflating the test.

use std::collections::BTreeMap;

use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::bayesnet::SampleTable;

/// Below `10 * dof` effective observations the test refuses to reject.
const SPARSE_DATA_FACTOR: usize = 10;

/// Dense per-stratum counting is used while the full count array stays
/// under this many cells.
const DENSE_CELL_CAP: usize = 1 << 22;

#[derive(Debug, Error, PartialEq)]
pub enum CiError {
    #[error("variable index {0} out of range")]
    UnknownVariable(usize),
    #[error("x and y must be distinct")]
    IdenticalVariables,
    #[error("conditioning set contains a tested variable")]
    OverlappingConditioningSet,
    #[error("significance level must lie in (0, 1), got {0}")]
    BadAlpha(f64),
}

/// Statistic used by [`chi_square_ci_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TestStatistic {
    #[default]
    Pearson,
    GSquared,
}

impl TestStatistic {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "pearson" => Some(Self::Pearson),
            "g2" | "gsquared" => Some(Self::GSquared),
            _ => None,
        }
    }
}

/// Degrees-of-freedom convention per realized stratum.
///
/// `FullTable` charges `(|x|-1)(|y|-1)` for every realized stratum, the
/// convention of the common R test implementations; it is deliberately
/// conservative when tables are sparse and is what the structure learners
/// here default to. `ObservedMargins` counts only rows and columns with a
/// nonzero marginal, which buys power on tables full of structural zeros at
/// the price of a heavier type-I tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DofPolicy {
    #[default]
    FullTable,
    ObservedMargins,
}

impl DofPolicy {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "full" => Some(Self::FullTable),
            "observed" => Some(Self::ObservedMargins),
            _ => None,
        }
    }
}

/// Outcome of one conditional-independence test.
#[derive(Debug, Clone, PartialEq)]
pub struct CiResult {
    pub independent: bool,
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub effective_n: usize,
    /// Set when the decision was forced by the sparse-data rule.
    pub underpowered: bool,
    /// Set when fewer than two categories were observed for `x` or `y`,
    /// or no stratum contributed any degree of freedom.
    pub degenerate: bool,
}

/// Counts of one realized conditioning-set stratum.
#[derive(Debug, Clone, PartialEq)]
pub struct StratumCounts {
    /// States of the conditioning variables identifying this stratum.
    pub s_config: Vec<u8>,
    /// Row-major `|x| x |y|` count matrix.
    pub counts: Vec<u32>,
    pub total: u32,
}

fn check_args(data: &SampleTable, x: usize, y: usize, s: &[usize]) -> Result<(), CiError> {
    let p = data.variable_count();
    for &v in [x, y].iter().chain(s) {
        if v >= p {
            return Err(CiError::UnknownVariable(v));
        }
    }
    if x == y {
        return Err(CiError::IdenticalVariables);
    }
    if s.contains(&x) || s.contains(&y) {
        return Err(CiError::OverlappingConditioningSet);
    }
    Ok(())
}

/// `|x| x |y|` count matrices keyed by the mixed-radix stratum code of the
/// conditioning states (last variable fastest). Dense while the full array
/// is small, a map otherwise.
enum Counts {
    Dense { cells: Vec<u32>, strata: usize },
    Sparse(BTreeMap<usize, Vec<u32>>),
}

fn count_flat(data: &SampleTable, x: usize, y: usize, s: &[usize]) -> (Counts, usize, usize) {
    let cx = data.cardinality(x);
    let cy = data.cardinality(y);
    let cs = s
        .iter()
        .map(|&v| data.cardinality(v))
        .try_fold(1usize, |a, c| a.checked_mul(c));
    let cell = cx * cy;

    let n = data.row_count();
    let xcol = data.column(x);
    let ycol = data.column(y);
    match cs {
        Some(cs) if cs.saturating_mul(cell) <= DENSE_CELL_CAP => {
            let mut cells = vec![0u32; cs * cell];
            match s.len() {
                0 => {
                    for r in 0..n {
                        cells[usize::from(xcol[r]) * cy + usize::from(ycol[r])] += 1;
                    }
                }
                1 => {
                    let s0 = data.column(s[0]);
                    for r in 0..n {
                        let idx = usize::from(s0[r]) * cell
                            + usize::from(xcol[r]) * cy
                            + usize::from(ycol[r]);
                        cells[idx] += 1;
                    }
                }
                _ => {
                    let cols: Vec<&[u8]> = s.iter().map(|&v| data.column(v)).collect();
                    let cards: Vec<usize> = s.iter().map(|&v| data.cardinality(v)).collect();
                    for r in 0..n {
                        let mut stratum = 0usize;
                        for (col, &card) in cols.iter().zip(&cards) {
                            stratum = stratum * card + usize::from(col[r]);
                        }
                        cells[stratum * cell + usize::from(xcol[r]) * cy + usize::from(ycol[r])] +=
                            1;
                    }
                }
            }
            (Counts::Dense { cells, strata: cs }, cx, cy)
        }
        _ => {
            let cols: Vec<&[u8]> = s.iter().map(|&v| data.column(v)).collect();
            let cards: Vec<usize> = s.iter().map(|&v| data.cardinality(v)).collect();
            let mut map: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
            for r in 0..n {
                let mut stratum = 0usize;
                for (col, &card) in cols.iter().zip(&cards) {
                    stratum = stratum * card + usize::from(col[r]);
                }
                let cells = map.entry(stratum).or_insert_with(|| vec![0u32; cell]);
                cells[usize::from(xcol[r]) * cy + usize::from(ycol[r])] += 1;
            }
            (Counts::Sparse(map), cx, cy)
        }
    }
}

fn for_each_realized<F: FnMut(usize, &[u32])>(counts: &Counts, cell: usize, mut f: F) {
    match counts {
        Counts::Dense { cells, strata } => {
            for stratum in 0..*strata {
                let slice = &cells[stratum * cell..(stratum + 1) * cell];
                if slice.iter().any(|&c| c > 0) {
                    f(stratum, slice);
                }
            }
        }
        Counts::Sparse(map) => {
            for (&stratum, slice) in map {
                f(stratum, slice);
            }
        }
    }
}

fn decode_stratum(code: usize, cards: &[usize]) -> Vec<u8> {
    let mut out = vec![0u8; cards.len()];
    let mut rest = code;
    for k in (0..cards.len()).rev() {
        out[k] = (rest % cards[k]) as u8;
        rest /= cards[k];
    }
    out
}

/// One `|x| x |y|` count matrix per realized configuration of `s`,
/// in ascending stratum order. Unrealized strata are omitted.
pub fn contingency_counts(
    data: &SampleTable,
    x: usize,
    y: usize,
    s: &[usize],
) -> Result<Vec<StratumCounts>, CiError> {
    check_args(data, x, y, s)?;
    let cards: Vec<usize> = s.iter().map(|&v| data.cardinality(v)).collect();
    let (counts, cx, cy) = count_flat(data, x, y, s);
    let mut out = Vec::new();
    for_each_realized(&counts, cx * cy, |stratum, cells| {
        out.push(StratumCounts {
            s_config: decode_stratum(stratum, &cards),
            counts: cells.to_vec(),
            total: cells.iter().sum(),
        });
    });
    Ok(out)
}

/// Upper-tail probability of the χ² distribution with `dof` degrees of
/// freedom. Callers handle `dof = 0` themselves.
pub fn chi_square_sf(statistic: f64, dof: usize) -> f64 {
    debug_assert!(dof >= 1);
    if statistic <= 0.0 {
        return 1.0;
    }
    ChiSquared::new(dof as f64)
        .expect("dof >= 1")
        .sf(statistic)
}

/// Pearson χ² conditional-independence test at significance level `alpha`,
/// with per-stratum degrees of freedom reduced to the observed margins.
pub fn chi_square_ci(
    data: &SampleTable,
    x: usize,
    y: usize,
    s: &[usize],
    alpha: f64,
) -> Result<CiResult, CiError> {
    chi_square_ci_with(
        data,
        x,
        y,
        s,
        alpha,
        TestStatistic::Pearson,
        DofPolicy::ObservedMargins,
    )
}

pub fn chi_square_ci_with(
    data: &SampleTable,
    x: usize,
    y: usize,
    s: &[usize],
    alpha: f64,
    kind: TestStatistic,
    dof_policy: DofPolicy,
) -> Result<CiResult, CiError> {
    check_args(data, x, y, s)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CiError::BadAlpha(alpha));
    }
    let (counts, cx, cy) = count_flat(data, x, y, s);
    let effective_n = data.row_count();

    let mut x_seen = vec![false; cx];
    let mut y_seen = vec![false; cy];
    let mut statistic = 0.0f64;
    let mut dof = 0usize;
    let mut row_sums = vec![0u32; cx];
    let mut col_sums = vec![0u32; cy];

    for_each_realized(&counts, cx * cy, |_, cells| {
        row_sums.iter_mut().for_each(|r| *r = 0);
        col_sums.iter_mut().for_each(|c| *c = 0);
        let mut total = 0u32;
        for xv in 0..cx {
            for yv in 0..cy {
                let c = cells[xv * cy + yv];
                if c > 0 {
                    x_seen[xv] = true;
                    y_seen[yv] = true;
                }
                row_sums[xv] += c;
                col_sums[yv] += c;
                total += c;
            }
        }
        let rx = row_sums.iter().filter(|&&r| r > 0).count();
        let ry = col_sums.iter().filter(|&&c| c > 0).count();
        // A stratum where x or y is degenerate carries no signal either way.
        if rx < 2 || ry < 2 {
            return;
        }
        dof += match dof_policy {
            DofPolicy::FullTable => (cx - 1) * (cy - 1),
            DofPolicy::ObservedMargins => (rx - 1) * (ry - 1),
        };
        let n = f64::from(total);
        for xv in 0..cx {
            if row_sums[xv] == 0 {
                continue;
            }
            for yv in 0..cy {
                if col_sums[yv] == 0 {
                    continue;
                }
                let observed = f64::from(cells[xv * cy + yv]);
                let expected = f64::from(row_sums[xv]) * f64::from(col_sums[yv]) / n;
                match kind {
                    TestStatistic::Pearson => {
                        let d = observed - expected;
                        statistic += d * d / expected;
                    }
                    TestStatistic::GSquared => {
                        if observed > 0.0 {
                            statistic += 2.0 * observed * (observed / expected).ln();
                        }
                    }
                }
            }
        }
    });

    let x_cats = x_seen.iter().filter(|&&b| b).count();
    let y_cats = y_seen.iter().filter(|&&b| b).count();
    if x_cats < 2 || y_cats < 2 || dof == 0 {
        return Ok(CiResult {
            independent: true,
            statistic: 0.0,
            dof: 0,
            p_value: 1.0,
            effective_n,
            underpowered: false,
            degenerate: true,
        });
    }

    let p_value = chi_square_sf(statistic, dof);
    if effective_n < SPARSE_DATA_FACTOR * dof {
        return Ok(CiResult {
            independent: true,
            statistic,
            dof,
            p_value,
            effective_n,
            underpowered: true,
            degenerate: false,
        });
    }
    Ok(CiResult {
        independent: p_value > alpha,
        statistic,
        dof,
        p_value,
        effective_n,
        underpowered: false,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayesnet::SampleTable;

    fn table(columns: Vec<Vec<u8>>, cards: Vec<usize>) -> SampleTable {
        let variables = (0..columns.len()).map(|i| format!("v{i}")).collect();
        let states = cards
            .iter()
            .map(|&c| (0..c).map(|s| format!("s{s}")).collect())
            .collect();
        SampleTable::new(variables, states, columns, None).unwrap()
    }

    #[test]
    fn hand_tallied_contingency_counts() {
        // Three binary variables, eight hand-written rows.
        let data = table(
            vec![
                vec![0, 0, 1, 1, 0, 1, 1, 0],
                vec![0, 1, 0, 1, 1, 1, 0, 0],
                vec![0, 0, 0, 0, 1, 1, 1, 1],
            ],
            vec![2, 2, 2],
        );
        let strata = contingency_counts(&data, 0, 1, &[2]).unwrap();
        assert_eq!(strata.len(), 2);
        // Stratum v2 = 0 holds rows 0..4: (0,0), (0,1), (1,0), (1,1).
        assert_eq!(strata[0].s_config, vec![0]);
        assert_eq!(strata[0].counts, vec![1, 1, 1, 1]);
        // Stratum v2 = 1 holds rows 4..8: (0,1), (1,1), (1,0), (0,0).
        assert_eq!(strata[1].s_config, vec![1]);
        assert_eq!(strata[1].counts, vec![1, 1, 1, 1]);
        assert_eq!(strata.iter().map(|s| s.total).sum::<u32>(), 8);
    }

    #[test]
    fn unconditional_single_stratum() {
        let data = table(vec![vec![0, 1, 0, 1], vec![0, 1, 1, 0]], vec![2, 2]);
        let strata = contingency_counts(&data, 0, 1, &[]).unwrap();
        assert_eq!(strata.len(), 1);
        assert_eq!(strata[0].total, 4);
    }

    #[test]
    fn constant_conditioning_variable_yields_one_stratum() {
        let data = table(
            vec![vec![0, 1, 0, 1], vec![0, 1, 1, 0], vec![1, 1, 1, 1]],
            vec![2, 2, 2],
        );
        let strata = contingency_counts(&data, 0, 1, &[2]).unwrap();
        assert_eq!(strata.len(), 1);
        assert_eq!(strata[0].s_config, vec![1]);
    }

    #[test]
    fn argument_validation() {
        let data = table(vec![vec![0, 1], vec![1, 0]], vec![2, 2]);
        assert_eq!(
            contingency_counts(&data, 0, 0, &[]).unwrap_err(),
            CiError::IdenticalVariables
        );
        assert_eq!(
            contingency_counts(&data, 0, 5, &[]).unwrap_err(),
            CiError::UnknownVariable(5)
        );
        assert_eq!(
            contingency_counts(&data, 0, 1, &[1]).unwrap_err(),
            CiError::OverlappingConditioningSet
        );
        assert_eq!(
            chi_square_ci(&data, 0, 1, &[], 0.0).unwrap_err(),
            CiError::BadAlpha(0.0)
        );
    }

    #[test]
    fn perfect_dependence_statistic_equals_n() {
        // y duplicates x: the 2x2 Pearson statistic equals the sample size.
        let n = 1000;
        let x: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let data = table(vec![x.clone(), x], vec![2, 2]);
        let res = chi_square_ci(&data, 0, 1, &[], 0.01).unwrap();
        assert!(!res.independent);
        assert!((res.statistic - n as f64).abs() < 1e-9);
        assert_eq!(res.dof, 1);
    }

    #[test]
    fn constant_variable_is_degenerate() {
        let data = table(vec![vec![0; 50], vec![1; 50]], vec![2, 2]);
        let res = chi_square_ci(&data, 0, 1, &[], 0.01).unwrap();
        assert!(res.independent);
        assert!(res.degenerate);
        assert_eq!(res.dof, 0);
        assert_eq!(res.p_value, 1.0);
    }

    #[test]
    fn sparse_data_rule_forces_independence() {
        // Perfectly dependent but only 8 records with dof 1: 8 < 10 * 1.
        let x = vec![0u8, 1, 0, 1, 0, 1, 0, 1];
        let data = table(vec![x.clone(), x], vec![2, 2]);
        let res = chi_square_ci(&data, 0, 1, &[], 0.01).unwrap();
        assert!(res.independent);
        assert!(res.underpowered);
    }

    #[test]
    fn survival_function_checkpoints() {
        assert_eq!(chi_square_sf(0.0, 1), 1.0);
        assert_eq!(chi_square_sf(0.0, 7), 1.0);
        // Frozen from the quadrature oracle in the calibration suite.
        assert!((chi_square_sf(3.841, 1) - 0.0500).abs() < 1e-3);
        assert!((chi_square_sf(9.210, 2) - 0.0100).abs() < 1e-3);
    }

    #[test]
    fn g_squared_agrees_on_strong_dependence() {
        let n = 1000;
        let x: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let data = table(vec![x.clone(), x], vec![2, 2]);
        let res = chi_square_ci_with(
            &data,
            0,
            1,
            &[],
            0.01,
            TestStatistic::GSquared,
            DofPolicy::default(),
        )
        .unwrap();
        assert!(!res.independent);
        assert!(res.statistic > 100.0);
    }

    #[test]
    fn dof_policies_differ_only_on_sparse_margins() {
        // v2 never takes its third state, so the 3x3 table has an empty
        // column: observed-margin dof is 2, full-table dof is 4.
        let data = table(
            vec![vec![0, 1, 2, 0, 1, 2, 0, 1, 2, 0, 1, 2, 0, 1, 2], {
                let v: Vec<u8> = vec![0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0];
                v
            }],
            vec![3, 3],
        );
        let reduced = chi_square_ci(&data, 0, 1, &[], 0.05).unwrap();
        let full = chi_square_ci_with(
            &data,
            0,
            1,
            &[],
            0.05,
            TestStatistic::Pearson,
            DofPolicy::FullTable,
        )
        .unwrap();
        assert_eq!(reduced.dof, 2);
        assert_eq!(full.dof, 4);
        assert_eq!(reduced.statistic, full.statistic);
        assert!(full.p_value > reduced.p_value);
    }
}
