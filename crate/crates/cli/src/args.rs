use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "lattice-spectra",
    version,
    about = "Spectra of a periodic mass-spring lattice with line and point defects"
)]
pub struct Cli {
    /// TOML run configuration
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Write output to this file instead of stdout
    #[arg(long, global = true, value_name = "FILE")]
    pub out: Option<PathBuf>,

    /// Cap the worker-thread count
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    /// Recorded in output headers; reserved for stochastic components
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,

    /// Single-node cell shortcut: strip mass perturbation
    #[arg(long, global = true, allow_negative_numbers = true, value_name = "M1")]
    pub m1: Option<f64>,

    /// Single-node cell shortcut: point mass perturbation
    #[arg(long, global = true, allow_negative_numbers = true, value_name = "M2")]
    pub m2: Option<f64>,

    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Dispersion branches on a wavevector grid (CSV)
    Bands {
        #[arg(long, value_name = "N")]
        n_k1: Option<usize>,
        #[arg(long, value_name = "N")]
        n_k2: Option<usize>,
    },

    /// Propagating-band projection at each k1 (CSV)
    Project {
        /// Samples along the k1 axis
        #[arg(long, value_name = "N")]
        points: Option<usize>,
    },

    /// Guided dispersion curve along the defect line (CSV)
    Guided {
        /// Samples along the k1 axis
        #[arg(long, value_name = "N")]
        points: Option<usize>,
    },

    /// Frequencies trapped by the point defect (JSON)
    Localized,

    /// Existence-region boundary over the reduced strip mass (CSV)
    RegionMap {
        #[arg(long, allow_negative_numbers = true, value_name = "X")]
        min: Option<f64>,
        #[arg(long, allow_negative_numbers = true, value_name = "X")]
        max: Option<f64>,
        #[arg(long, value_name = "N")]
        points: Option<usize>,
    },

    /// Localization determinant traced across the spectral gaps (CSV)
    DlocTrace {
        /// Samples per gap
        #[arg(long, value_name = "N")]
        points: Option<usize>,
    },

    /// Finite-block eigensolve cross-check (JSON)
    Oracle {
        #[arg(long, value_name = "NODES")]
        width: Option<usize>,
        #[arg(long, value_name = "NODES")]
        height: Option<usize>,
    },

    /// Real-space window of one reconstructed mode (CSV)
    Modeshape {
        #[arg(long, value_enum)]
        kind: ShapeKind,
        /// Wavevector along the strip (guided modes only)
        #[arg(long, allow_negative_numbers = true, value_name = "K1")]
        k1: Option<f64>,
        /// Select the root closest to this frequency
        #[arg(long, value_name = "OMEGA")]
        omega: Option<f64>,
        /// Select the n-th root at k1 when --omega is absent (guided only)
        #[arg(long, value_name = "N")]
        branch: Option<usize>,
        /// Window half-extent in cells along each axis
        #[arg(long, value_name = "CELLS")]
        half_x: Option<usize>,
        #[arg(long, value_name = "CELLS")]
        half_y: Option<usize>,
    },

    /// Closed-form existence verdict for the single-node cell (JSON)
    Classify,

    /// Regenerate a reference dataset (CSV)
    Repro {
        /// 1 = guided curves, 2 = determinant traces, 3 = region boundary
        #[arg(long, value_name = "N")]
        figure: u8,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ShapeKind {
    Guided,
    Localized,
}
