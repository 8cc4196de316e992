pub mod cli;
pub mod config;
pub mod io;
pub mod manifest;
pub mod report;
pub mod run;
pub mod tables;
