//! Run configuration: JSON file with complete defaults, overridable by flags.

use genfunc::grid::{FitOptions, GridBox, Ladder, Scheme, SubBox};
use genfunc::microlocal::{Cone, CutoffFamily, DecisionParams};
use genfunc::mollifier::MollifierParams;
use genfunc::scales::{default_a_grid, FamilyName, MembershipParams};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderRange {
    pub k_min: u32,
    pub k_max: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MollifierConfig {
    pub r1: f64,
    pub r2: f64,
    pub moments: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub tol: f64,
    pub b_max: f64,
    pub a_grid: Vec<f64>,
    pub m_max: usize,
    pub floor: f64,
}

/// The compact set `K` as a box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// Weight and derivative orders of a two-index profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexRange {
    pub q_max: usize,
    pub l_max: usize,
}

/// Global classification: profile orders and the radial plateau cutoff
/// `κ` (1 inside `kappa_inner`, 0 outside `kappa_outer`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalConfig {
    pub q_max: usize,
    pub l_max: usize,
    pub kappa_inner: f64,
    pub kappa_outer: f64,
}

/// Cutoff centers on a square lattice `lo..=hi` with the given spacing.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeConfig {
    pub lo: f64,
    pub hi: f64,
    pub spacing: f64,
    /// Largest cutoff radius; the radii are `r0, r0/2, r0/4`.
    pub r0: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MicrolocalConfig {
    /// Angular sectors in two dimensions; one dimension always uses `±`.
    pub cones: usize,
    pub lattice: LatticeConfig,
    pub q_max: usize,
    /// Ladder index window for cone fits; overrides `fit_window`.
    pub fit_window: Option<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dim: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Samples per axis.
    pub n: usize,
    pub precision: Precision,
    pub ladder: LadderRange,
    pub mollifier: MollifierConfig,
    /// Half-open range of ladder indices used by every fit.
    pub fit_window: Option<(usize, usize)>,
    /// Differentiation scheme for seminorms.
    pub scheme: Scheme,
    pub tolerances: Tolerances,
    pub family: String,
    pub k: KBox,
    /// Derivative orders of space profiles on `k`.
    pub l_max: usize,
    /// Orders for the lemma-bound and exchange checks.
    pub two_index: IndexRange,
    pub global: GlobalConfig,
    pub microlocal: MicrolocalConfig,
    pub out: String,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("resolvability constraint h ≤ ε_min/r2 violated on axis {axis}: h = {h:.4e}, ε_min = {eps_min:.4e}, r2 = {r2} (refine n or raise k_min..k_max)")]
    Unresolved { axis: usize, h: f64, eps_min: f64, r2: f64 },
}

impl RunConfig {
    /// Complete defaults for `dim` (1 or 2).
    pub fn defaults(dim: usize) -> Self {
        let one = dim == 1;
        Self {
            dim,
            lo: vec![if one { -8.0 } else { -4.0 }; dim],
            hi: vec![if one { 8.0 } else { 4.0 }; dim],
            n: if one { 1 << 16 } else { 2048 },
            precision: Precision::F64,
            ladder: if one { LadderRange { k_min: 4, k_max: 11 } } else { LadderRange { k_min: 1, k_max: 7 } },
            mollifier: MollifierConfig { r1: 1.0, r2: 2.0, moments: 6 },
            fit_window: None,
            scheme: Scheme::Fd4,
            tolerances: Tolerances { tol: 0.25, b_max: 20.0, a_grid: default_a_grid(), m_max: 4, floor: genfunc::grid::DEFAULT_FLOOR },
            family: "r1".into(),
            k: KBox { lo: vec![-1.0; dim], hi: vec![1.0; dim] },
            l_max: 3,
            two_index: IndexRange { q_max: 3, l_max: 2 },
            global: GlobalConfig { q_max: 6, l_max: 4, kappa_inner: 1.0, kappa_outer: 2.0 },
            microlocal: MicrolocalConfig {
                cones: genfunc::microlocal::DEFAULT_SECTORS,
                lattice: if one {
                    LatticeConfig { lo: -1.0, hi: 1.0, spacing: 0.25, r0: 0.5 }
                } else {
                    LatticeConfig { lo: -1.5, hi: 1.5, spacing: 0.5, r0: 1.0 }
                },
                q_max: if one { 6 } else { 3 },
                fit_window: Some(if one { (3, 8) } else { (2, 7) }),
            },
            out: "out".into(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if !(1..=2).contains(&self.dim) {
            return bad(format!("dim must be 1 or 2, got {}", self.dim));
        }
        if self.lo.len() != self.dim || self.hi.len() != self.dim || self.k.lo.len() != self.dim || self.k.hi.len() != self.dim {
            return bad("lo, hi, k.lo and k.hi need one entry per dimension".into());
        }
        self.grid().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let ladder = self.ladder().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if ladder.len() < 6 {
            return bad(format!("ladder needs at least 6 values, k_min..k_max gives {}", ladder.len()));
        }
        for (name, w) in [("fit_window", self.fit_window), ("microlocal.fit_window", self.microlocal.fit_window)] {
            if let Some((a, b)) = w {
                if !(a < b && b <= ladder.len() && b - a >= 4) {
                    return bad(format!("{name} ({a}, {b}) must select at least 4 of the {} ladder indices", ladder.len()));
                }
            }
        }
        if !(self.mollifier.r1 > 0.0 && self.mollifier.r2 > self.mollifier.r1) {
            return bad(format!("mollifier radii need 0 < r1 < r2, got ({}, {})", self.mollifier.r1, self.mollifier.r2));
        }
        let eps_min = ladder.min();
        for axis in 0..self.dim {
            let h = (self.hi[axis] - self.lo[axis]) / self.n as f64;
            if h * self.mollifier.r2 > eps_min * (1.0 + 1e-12) {
                return Err(ConfigError::Unresolved { axis, h, eps_min, r2: self.mollifier.r2 });
            }
        }
        let (inside, outside) = (self.k.lo.iter().zip(&self.lo).all(|(k, l)| k >= l), self.k.hi.iter().zip(&self.hi).all(|(k, h)| k <= h));
        if !(inside && outside) || self.k.lo.iter().zip(&self.k.hi).any(|(a, b)| a >= b) {
            return bad("k must be a nonempty sub-box of the grid box".into());
        }
        if !(self.global.kappa_inner > 0.0 && self.global.kappa_outer > self.global.kappa_inner) {
            return bad("global cutoff needs 0 < kappa_inner < kappa_outer".into());
        }
        let t = &self.tolerances;
        if !(t.tol > 0.0 && t.b_max >= 0.0 && t.floor > 0.0) {
            return bad("tolerances tol and floor must be positive, b_max nonnegative".into());
        }
        let l = &self.microlocal.lattice;
        if !(l.spacing > 0.0 && l.hi >= l.lo && l.r0 > 0.0) {
            return bad("microlocal lattice needs spacing > 0, hi ≥ lo and r0 > 0".into());
        }
        if self.dim == 2 && self.microlocal.cones < 4 {
            return bad("need at least 4 cones in two dimensions".into());
        }
        self.family_name()?;
        Ok(())
    }

    pub fn grid(&self) -> Result<GridBox, genfunc::grid::GridError> {
        GridBox::new(self.lo.clone(), self.hi.clone(), vec![self.n; self.dim])
    }

    pub fn ladder(&self) -> Result<Ladder, genfunc::grid::GridError> {
        Ladder::dyadic(self.ladder.k_min, self.ladder.k_max)
    }

    pub fn family_name(&self) -> Result<FamilyName, ConfigError> {
        FamilyName::parse(&self.family).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn k_box(&self) -> SubBox {
        SubBox::new(self.k.lo.clone(), self.k.hi.clone())
    }

    pub fn membership(&self) -> MembershipParams {
        MembershipParams { tol: self.tolerances.tol, b_max: self.tolerances.b_max }
    }

    pub fn fit(&self) -> FitOptions {
        FitOptions { floor: self.tolerances.floor, window: self.fit_window, scheme: self.scheme, ..FitOptions::default() }
    }

    pub fn mollifier_params(&self) -> MollifierParams {
        let m = self.mollifier;
        MollifierParams { r1: m.r1, r2: m.r2, moments: m.moments, ..MollifierParams::default() }
    }

    pub fn cones(&self) -> Vec<Cone> {
        if self.dim == 1 {
            Cone::signs()
        } else {
            Cone::sectors(self.microlocal.cones)
        }
    }

    pub fn cutoffs(&self) -> CutoffFamily {
        let l = self.microlocal.lattice;
        CutoffFamily::lattice(self.dim, l.lo, l.hi, l.spacing, l.r0)
    }

    pub fn decision_params(&self, family: FamilyName) -> DecisionParams {
        let mut p = DecisionParams::new(family, self.dim);
        p.membership = self.membership();
        p.a_grid = self.tolerances.a_grid.clone();
        p.q_max = self.microlocal.q_max;
        p.l_max = self.l_max;
        p.fit = self.fit();
        if self.microlocal.fit_window.is_some() {
            p.fit.window = self.microlocal.fit_window;
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_in_both_dimensions() {
        RunConfig::defaults(1).validate().unwrap();
        RunConfig::defaults(2).validate().unwrap();
    }

    #[test]
    fn coarse_grid_names_the_resolvability_constraint() {
        let mut c = RunConfig::defaults(1);
        c.n = 2048;
        let err = c.validate().unwrap_err();
        assert!(matches!(err, ConfigError::Unresolved { axis: 0, .. }));
        assert!(err.to_string().contains("h ≤ ε_min/r2"));
    }

    #[test]
    fn short_ladder_and_bad_window_are_rejected() {
        let mut c = RunConfig::defaults(1);
        c.ladder = LadderRange { k_min: 4, k_max: 8 };
        assert!(c.validate().unwrap_err().to_string().contains("at least 6"));
        let mut c = RunConfig::defaults(1);
        c.fit_window = Some((5, 8));
        assert!(c.validate().unwrap_err().to_string().contains("fit_window"));
    }

    #[test]
    fn json_round_trip_keeps_every_field() {
        let c = RunConfig::defaults(2);
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), c);
    }
}
