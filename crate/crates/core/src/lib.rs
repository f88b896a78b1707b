pub mod analytic;
pub mod bregman;
pub mod cli;
pub mod dct;
pub mod decompose;
pub mod error;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod noise;
pub mod ops;
pub mod phantom;
pub mod prox;
pub mod solver;
