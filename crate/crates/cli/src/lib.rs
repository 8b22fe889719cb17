//! Scenario files, report rendering, and the bounds-table certification
//! behind the `arsim` command-line tool.

pub mod file;
pub mod output;
pub mod table;
