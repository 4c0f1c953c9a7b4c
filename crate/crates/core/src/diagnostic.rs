//! Non-fatal conditions reported alongside results.

use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Diagnostic {
    /// Instance has no pixel with a differing neighbor (it fills the grid);
    /// its energy is set to 1 everywhere.
    EmptyBoundary { id: u32 },
    /// Decoding found no pixel above the seed threshold.
    NoSeeds,
    /// Foreground pixels no seed could reach; they stay background.
    Unreachable { pixels: usize },
    /// Both maps were empty; a conventional metric value was returned.
    EmptyMaps { metric: &'static str },
    /// Hausdorff pairing fell back to the image frame because the opposing map is empty.
    FramePairing { id: u32 },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::EmptyBoundary { id } => {
                write!(f, "instance {id} has no boundary; energy set to 1")
            }
            Diagnostic::NoSeeds => write!(f, "no seed pixels above threshold"),
            Diagnostic::Unreachable { pixels } => {
                write!(f, "{pixels} foreground pixels unreachable from any seed")
            }
            Diagnostic::EmptyMaps { metric } => {
                write!(f, "{metric}: both maps empty, conventional value used")
            }
            Diagnostic::FramePairing { id } => {
                write!(f, "instance {id} paired against the image frame")
            }
        }
    }
}
