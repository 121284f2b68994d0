//! Command-line front end: `split`, `embed`, `linkpred` and `fetch`.

pub mod cli;
pub mod fetch;
pub mod manifest;
pub mod mat;
