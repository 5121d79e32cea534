//! Filters, distributions and export over a snapshot.

mod distribution;
mod export;
mod filter;

pub use distribution::{distribution, Bar, Distribution};
pub use export::{all_columns, export_csv};
pub use filter::{apply_filter, owned_labels, CriterionFilter, FilterSpec};
