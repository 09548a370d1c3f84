//! CSV serialization of sample tables.
//!
//! Format: a header row with the network's variable names (plus an optional
//! trailing `__intervention` column), then one row per record with category
//! values written as the state names of the network. UTF-8, comma-separated,
//! no quoting — state names in the supported networks never contain commas.

use thiserror::Error;

use crate::bayesnet::{DiscreteBayesNet, NetError, SampleTable};

/// Name of the optional intervention-label column.
pub const INTERVENTION_COLUMN: &str = "__intervention";

#[derive(Debug, Error)]
pub enum SamplesError {
    #[error("row {row}, column `{column}`: unknown state `{state}`")]
    UnknownState {
        row: usize,
        column: String,
        state: String,
    },
    #[error("row {row}: expected {expected} fields, found {found}")]
    FieldCount {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}, column `{column}`: bad intervention label `{value}`")]
    BadLabel {
        row: usize,
        column: String,
        value: String,
    },
    #[error("header does not match the network variables (expected `{expected}`)")]
    HeaderMismatch { expected: String },
    #[error("input is empty")]
    Empty,
    #[error(transparent)]
    Net(#[from] NetError),
}

/// Writes a sample table as CSV text.
pub fn write_samples(table: &SampleTable) -> String {
    let mut out = String::new();
    out.push_str(&table.variables().join(","));
    if table.labels().is_some() {
        out.push(',');
        out.push_str(INTERVENTION_COLUMN);
    }
    out.push('\n');
    let states = table.states();
    for row in 0..table.row_count() {
        for v in 0..table.variable_count() {
            if v > 0 {
                out.push(',');
            }
            out.push_str(&states[v][usize::from(table.column(v)[row])]);
        }
        if let Some(labels) = table.labels() {
            out.push(',');
            out.push_str(&labels[row].to_string());
        }
        out.push('\n');
    }
    out
}

/// Reads CSV text produced by [`write_samples`], validating state names
/// against the given network. The header must list the network's variables
/// in order, optionally followed by `__intervention`.
pub fn read_samples(text: &str, net: &DiscreteBayesNet) -> Result<SampleTable, SamplesError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or(SamplesError::Empty)?;
    let fields: Vec<&str> = header.split(',').collect();
    let names: Vec<&str> = net.dag().names().iter().map(String::as_str).collect();
    let labeled = match fields.as_slice() {
        f if f == names.as_slice() => false,
        f if f.len() == names.len() + 1
            && f[..names.len()] == names[..]
            && f[names.len()] == INTERVENTION_COLUMN =>
        {
            true
        }
        _ => {
            return Err(SamplesError::HeaderMismatch {
                expected: names.join(","),
            })
        }
    };

    let p = net.vertex_count();
    let expected = p + usize::from(labeled);
    let mut columns: Vec<Vec<u8>> = vec![Vec::new(); p];
    let mut labels: Vec<u32> = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let row = i + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != expected {
            return Err(SamplesError::FieldCount {
                row,
                expected,
                found: fields.len(),
            });
        }
        for (v, &field) in fields[..p].iter().enumerate() {
            let state = net.states()[v]
                .iter()
                .position(|s| s == field)
                .ok_or_else(|| SamplesError::UnknownState {
                    row,
                    column: net.dag().name_of(v).to_string(),
                    state: field.to_string(),
                })?;
            columns[v].push(state as u8);
        }
        if labeled {
            let value = fields[p];
            let label = value.parse::<u32>().map_err(|_| SamplesError::BadLabel {
                row,
                column: INTERVENTION_COLUMN.to_string(),
                value: value.to_string(),
            })?;
            labels.push(label);
        }
    }
    Ok(SampleTable::new(
        net.dag().names().as_ref().clone(),
        net.states().to_vec(),
        columns,
        labeled.then_some(labels),
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::bif::parse_bif;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny_net() -> DiscreteBayesNet {
        parse_bif(
            "network t { }\n\
             variable A { type discrete [ 2 ] { lo, hi }; }\n\
             variable B { type discrete [ 3 ] { x, y, z }; }\n\
             probability ( A ) { table 0.4, 0.6; }\n\
             probability ( B | A ) { (lo) 0.2, 0.3, 0.5; (hi) 0.6, 0.2, 0.2; }\n",
        )
        .unwrap()
    }

    #[test]
    fn empty_table_writes_header_only() {
        let net = tiny_net();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let table = net.sample(0, &mut rng);
        assert_eq!(write_samples(&table), "A,B\n");
    }

    #[test]
    fn round_trip_is_identity() {
        let net = tiny_net();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let table = net.sample(100, &mut rng).with_label(3);
        let text = write_samples(&table);
        let back = read_samples(&text, &net).unwrap();
        assert_eq!(back, table);
    }

    #[test]
    fn unknown_state_names_row_and_column() {
        let net = tiny_net();
        let text = "A,B\nlo,x\nhi,zz\n";
        match read_samples(text, &net) {
            Err(SamplesError::UnknownState { row, column, state }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "B");
                assert_eq!(state, "zz");
            }
            other => panic!("expected UnknownState, got {other:?}"),
        }
    }

    #[test]
    fn header_and_field_mismatches_are_rejected() {
        let net = tiny_net();
        assert!(matches!(
            read_samples("B,A\nx,lo\n", &net),
            Err(SamplesError::HeaderMismatch { .. })
        ));
        assert!(matches!(
            read_samples("A,B\nlo\n", &net),
            Err(SamplesError::FieldCount { row: 1, .. })
        ));
        assert!(matches!(
            read_samples("A,B,__intervention\nlo,x,abc\n", &net),
            Err(SamplesError::BadLabel { .. })
        ));
        assert!(matches!(read_samples("", &net), Err(SamplesError::Empty)));
    }
}
