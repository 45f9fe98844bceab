//! The ordered distance on key-sorted trees: an upper bound on JEDI that
//! only needs sequence matchings, and a threshold filter for it that runs
//! in time linear in the tree size for a fixed threshold.

mod exact;
mod filter;

pub use exact::{jedi_order_exact, jedi_order_tables, sed_matrix};
pub use filter::{jofilter, jofilter_with_stats, tau_sed_cells, FilterOutcome, SedCell};
