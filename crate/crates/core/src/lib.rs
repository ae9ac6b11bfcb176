pub mod circuits;
pub mod cli;
pub mod emulator;
pub mod error;
pub mod fock;
pub mod interference;
pub mod io;
pub mod metrology;
pub mod permanent;
pub mod state;
pub mod unitary;
