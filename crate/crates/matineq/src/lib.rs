//! SDPA file I/O, solver reports, instance descriptions and the
//! command-line front end of `matineq-core`.

pub mod cli;
pub mod error;
pub mod instance;
pub mod report;
pub mod sdpa;

pub use error::{IoError, ParseError};
pub use instance::{load_problem, read_instance, write_instance, Instance, Named};
pub use report::{read_report, write_report};
pub use sdpa::{parse_sdpa, write_sdpa};
