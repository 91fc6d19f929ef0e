//! Library side of the command-line tool: output documents and the scenario
//! file loader, shared with the integration tests.

pub mod report;
pub mod scenario_file;
