//! Reachability analysis of vulnerable third-party library calls in Java
//! projects, with generation of exploit-confirmation unit tests.

pub mod call_graph;
pub mod cli;
pub mod confirm;
pub mod diag;
pub mod java;
pub mod pipeline;
pub mod ptg;
pub mod testgen;
pub mod vuln_report;
