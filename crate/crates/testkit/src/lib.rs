//! Reference oracles and random generators shared by the test suites. None
//! of this code calls into the implementations it is used to check, other
//! than to build inputs.

pub mod csv_reader;
pub mod cypher;
pub mod enumerate;
pub mod formulas;
pub mod gen;
pub mod incident;
pub mod ltlf;
pub mod queries;
pub mod store_eq;
