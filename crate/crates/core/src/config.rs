//! Run configuration: one strict TOML document naming the lattice, the
//! sampling grids and the tolerances a command run uses. Unknown keys are
//! rejected so a typo cannot silently fall back to a default, and every
//! lattice is funneled through the validating constructor.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::finite::MIN_ORACLE_SIDE;
use crate::lattice::{LatticeSpec, Link};

/// Lattice description as written in a config file. Omitted defect layers
/// default to zero; omitted adjacency defaults to nearest-neighbour square
/// coordination on the cell.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub n1: usize,
    pub n2: usize,
    pub masses: Vec<f64>,
    #[serde(default)]
    pub strip: Option<Vec<f64>>,
    #[serde(default)]
    pub point: Option<Vec<f64>>,
    /// Explicit adjacency. An empty list is kept as given (and rejected by
    /// validation), only an absent key falls back to square coordination.
    #[serde(default)]
    pub links: Option<Vec<LinkConfig>>,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    pub a: usize,
    pub b: usize,
    pub offset: [i32; 2],
}

impl LatticeConfig {
    pub fn build(&self) -> Result<LatticeSpec> {
        if self.n1 == 0 || self.n2 == 0 {
            return Err(Error::InvalidLattice("cell dimensions must be positive".into()));
        }
        let dim = self.n1 * self.n2;
        let links: Vec<Link> = match &self.links {
            Some(ls) => ls.iter().map(|l| Link { a: l.a, b: l.b, offset: l.offset }).collect(),
            None => LatticeSpec::square(self.n1, self.n2).links().to_vec(),
        };
        LatticeSpec::new(
            self.n1,
            self.n2,
            self.masses.clone(),
            self.strip.clone().unwrap_or_else(|| vec![0.0; dim]),
            self.point.clone().unwrap_or_else(|| vec![0.0; dim]),
            links,
        )
    }
}

/// Sampling grid sizes, one field per consumer. Defaults are sized for
/// publication-quality output; validation enforces each consumer's minimum.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Wavevector samples per axis for dispersion tables.
    pub n_k1: usize,
    pub n_k2: usize,
    /// Samples along the k1 axis for projection and guided-curve sweeps.
    pub curve_points: usize,
    /// Frequency samples per spectral gap for determinant traces.
    pub trace_points: usize,
    /// Strip-mass samples for the existence-region boundary sweep.
    pub region_points: usize,
    /// Initial sign-scan grid per gap in root searches.
    pub scan_points: usize,
    /// Finite cross-check block, in nodes per side.
    pub oracle_width: usize,
    pub oracle_height: usize,
    /// Mode-window half-extent, in cells per axis around the defect.
    pub half_x: usize,
    pub half_y: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            n_k1: 65,
            n_k2: 65,
            curve_points: 257,
            trace_points: 160,
            region_points: 120,
            scan_points: 128,
            oracle_width: 61,
            oracle_height: 61,
            half_x: 10,
            half_y: 10,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceConfig {
    /// Endpoint-movement stop for spectral projections.
    pub projection: f64,
    /// Quadrature refinement stop for resolvent averages and determinants.
    pub quadrature: f64,
    /// Root bracket width, relative to the frequency scale.
    pub root_xtol: f64,
    /// Looser quadrature stop used by plotting traces.
    pub trace: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            projection: crate::tolerances::QUAD_TOL,
            quadrature: crate::tolerances::QUAD_TOL,
            root_xtol: crate::tolerances::ROOT_XTOL,
            trace: 1e-7,
        }
    }
}

/// Everything a run reads from disk. `lattice` and `lattice_file` are
/// alternative sources for the same table and cannot both be present.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub lattice: Option<LatticeConfig>,
    #[serde(default)]
    pub lattice_file: Option<PathBuf>,
    /// Reserved for stochastic components; recorded in output headers so a
    /// run is reproducible from its artifacts alone.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub grids: GridConfig,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
}

impl RunConfig {
    pub fn from_str(text: &str) -> Result<RunConfig> {
        // toml's Display includes line/column positions
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        RunConfig::from_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lattice.is_some() && self.lattice_file.is_some() {
            return Err(Error::Config("lattice and lattice_file are mutually exclusive".into()));
        }
        let tols = [
            ("tolerances.projection", self.tolerances.projection),
            ("tolerances.quadrature", self.tolerances.quadrature),
            ("tolerances.root_xtol", self.tolerances.root_xtol),
            ("tolerances.trace", self.tolerances.trace),
        ];
        for (name, v) in tols {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        let g = &self.grids;
        let mins = [
            ("grids.n_k1", g.n_k1, 2),
            ("grids.n_k2", g.n_k2, 2),
            ("grids.curve_points", g.curve_points, 2),
            ("grids.trace_points", g.trace_points, 2),
            ("grids.region_points", g.region_points, 2),
            ("grids.scan_points", g.scan_points, 8),
            ("grids.oracle_width", g.oracle_width, MIN_ORACLE_SIDE),
            ("grids.oracle_height", g.oracle_height, MIN_ORACLE_SIDE),
            ("grids.half_x", g.half_x, 1),
            ("grids.half_y", g.half_y, 1),
        ];
        for (name, v, min) in mins {
            if v < min {
                return Err(Error::Config(format!("{name} must be at least {min}, got {v}")));
            }
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        Ok(())
    }

    /// Lattice named by the config, if any. File contents use the same
    /// strict table shape as the inline `[lattice]` block.
    pub fn resolve_lattice(&self) -> Result<Option<LatticeSpec>> {
        if let Some(lc) = &self.lattice {
            return Ok(Some(lc.build()?));
        }
        if let Some(path) = &self.lattice_file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            let lc: LatticeConfig = toml::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            return Ok(Some(lc.build()?));
        }
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
        RunConfig::from_str("").unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected_with_position() {
        let err = RunConfig::from_str("send = 7\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("send"), "{msg}");
        assert!(msg.contains("line 1"), "{msg}");

        let err = RunConfig::from_str("[grids]\nn_k3 = 5\n").unwrap_err();
        assert!(err.to_string().contains("n_k3"));
    }

    #[test]
    fn bad_tolerances_and_grids_are_rejected() {
        for text in [
            "[tolerances]\nquadrature = 0.0\n",
            "[tolerances]\ntrace = -1e-7\n",
            "[tolerances]\nprojection = inf\n",
            "[grids]\nn_k1 = 1\n",
            "[grids]\noracle_width = 21\n",
            "[grids]\nhalf_x = 0\n",
            "threads = 0\n",
        ] {
            assert!(RunConfig::from_str(text).is_err(), "accepted: {text}");
        }
    }

    #[test]
    fn inline_lattice_builds_the_validated_spec() {
        let cfg = RunConfig::from_str(
            "[lattice]\nn1 = 1\nn2 = 1\nmasses = [1.0]\nstrip = [-0.9]\npoint = [0.1]\n",
        )
        .unwrap();
        let built = cfg.resolve_lattice().unwrap().unwrap();
        let direct = LatticeSpec::uniform_with_defects(-0.9, 0.1).unwrap();
        assert_eq!(built.digest(), direct.digest());
    }

    #[test]
    fn empty_adjacency_is_an_error_not_a_default() {
        let cfg =
            RunConfig::from_str("[lattice]\nn1 = 1\nn2 = 1\nmasses = [1.0]\nlinks = []\n").unwrap();
        let err = cfg.resolve_lattice().unwrap_err();
        assert!(err.to_string().contains("degree"), "{err}");
    }

    #[test]
    fn exclusive_lattice_sources() {
        let err = RunConfig::from_str(
            "lattice_file = \"x.toml\"\n[lattice]\nn1 = 1\nn2 = 1\nmasses = [1.0]\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("mutually exclusive"));
    }

    #[test]
    fn invalid_masses_are_rejected_at_build() {
        let cfg =
            RunConfig::from_str("[lattice]\nn1 = 1\nn2 = 1\nmasses = [1.0]\nstrip = [-1.5]\n")
                .unwrap();
        assert!(cfg.resolve_lattice().is_err());
    }
}
