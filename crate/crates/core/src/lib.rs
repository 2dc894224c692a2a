pub mod bench;
pub mod clock;
pub mod cnf;
pub mod instance;
pub mod oracle;
pub mod sat;
pub mod solver;
pub mod teg;
