//! The book's chapters, compiled so that every code listing runs as a doc test.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/kernels.md")]
pub mod kernels {}
#[doc = include_str!("../../../book/src/assembly.md")]
pub mod assembly {}
#[doc = include_str!("../../../book/src/time_stepping.md")]
pub mod time_stepping {}
#[doc = include_str!("../../../book/src/manufactured_solutions.md")]
pub mod manufactured_solutions {}
#[doc = include_str!("../../../book/src/spectral_oracle.md")]
pub mod spectral_oracle {}
#[doc = include_str!("../../../book/src/pulses.md")]
pub mod pulses {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
