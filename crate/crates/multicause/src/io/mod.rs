//! Parsers and serializers: the BIF network subset, sample-table CSV, the
//! JSON report schema, and intervention-spec JSON.

pub mod bif;
pub mod intervention;
pub mod report;
pub mod samples;

pub use bif::{parse_bif, BifError};
pub use intervention::{read_intervention_spec, write_intervention_spec, InterventionIoError};
pub use report::{read_report, write_report, Report, ReportError, SCHEMA_VERSION};
pub use samples::{read_samples, write_samples, SamplesError, INTERVENTION_COLUMN};
