pub mod boundary;
pub mod cli;
pub mod elem;
pub mod error;
pub mod functional_calculus;
pub mod kproducts;
pub mod loop_algebra;
pub mod matrix;
pub mod random;
pub mod scenario;
pub mod star_algebra;
pub mod sweep;
pub mod wedderburn;
