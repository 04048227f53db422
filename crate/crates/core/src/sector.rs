//! Fixed-particle-number two-mode Fock states and block-diagonal mixtures.
//!
//! A sector collects all two-mode Fock states `|n, M-n>` with a fixed total
//! particle number `M`; the basis index `n` is the occupation of mode `a`.
//! States without a definite particle number (e.g. after a loss channel) are
//! probability-weighted collections of per-sector density operators: photon
//! loss carries no cross-sector coherence, so this representation is exact.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type C64 = num_complex::Complex64;

/// Construction-time normalization handling: deviations below `NORM_TOL` are
/// accepted as-is, deviations below `NORM_REPAIR` are renormalized, anything
/// larger is rejected.
pub const NORM_TOL: f64 = 1e-12;
pub const NORM_REPAIR: f64 = 1e-6;

/// Pure state of one particle-number sector: a complex amplitude vector over
/// the Fock basis `|n, M-n>`, `n = 0..=M`.
#[derive(Debug, Clone)]
pub struct SectorPureState {
    total_particles: usize,
    amplitudes: DVector<C64>,
}

impl SectorPureState {
    pub fn new(total_particles: usize, mut amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != total_particles + 1 {
            return Err(Error::InvalidArgument(format!(
                "amplitude vector length {} does not match sector dimension {}",
                amplitudes.len(),
                total_particles + 1
            )));
        }
        let norm_sq: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        let dev = (norm_sq - 1.0).abs();
        if dev > NORM_TOL {
            if dev > NORM_REPAIR {
                return Err(Error::BadNormalization(dev));
            }
            amplitudes /= C64::from(norm_sq.sqrt());
        }
        Ok(Self { total_particles, amplitudes })
    }

    /// Vacuum for `M = 0`, otherwise amplitude 1 on the given basis index.
    pub fn basis_state(total_particles: usize, n: usize) -> Self {
        assert!(n <= total_particles);
        let mut amplitudes = DVector::zeros(total_particles + 1);
        amplitudes[n] = C64::new(1.0, 0.0);
        Self { total_particles, amplitudes }
    }

    pub fn total_particles(&self) -> usize {
        self.total_particles
    }

    pub fn dim(&self) -> usize {
        self.total_particles + 1
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    /// Occupation probabilities `|c_n|^2`.
    pub fn probabilities(&self) -> DVector<f64> {
        self.amplitudes.map(|a| a.norm_sqr())
    }

    pub fn density_matrix(&self) -> SectorDensityMatrix {
        let c = &self.amplitudes;
        let mat = c * c.adjoint();
        SectorDensityMatrix { total_particles: self.total_particles, matrix: mat }
    }

    /// Overlap fidelity `|<self|other>|^2`.
    pub fn fidelity(&self, other: &Self) -> f64 {
        assert_eq!(self.total_particles, other.total_particles);
        self.amplitudes.dotc(&other.amplitudes).norm_sqr()
    }
}

/// Density operator restricted to one particle-number sector.
#[derive(Debug, Clone)]
pub struct SectorDensityMatrix {
    total_particles: usize,
    matrix: DMatrix<C64>,
}

impl SectorDensityMatrix {
    pub fn new(total_particles: usize, mut matrix: DMatrix<C64>) -> Result<Self> {
        let dim = total_particles + 1;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::InvalidArgument(format!(
                "matrix is {}x{}, sector dimension is {}",
                matrix.nrows(),
                matrix.ncols(),
                dim
            )));
        }
        let mut herm_dev = 0.0f64;
        for i in 0..dim {
            for j in i..dim {
                let d = (matrix[(i, j)] - matrix[(j, i)].conj()).norm();
                herm_dev = herm_dev.max(d);
            }
        }
        if herm_dev > NORM_TOL {
            return Err(Error::InvalidArgument(format!(
                "matrix is not Hermitian: max deviation {herm_dev:.3e}"
            )));
        }
        let tr: C64 = (0..dim).map(|i| matrix[(i, i)]).sum();
        let dev = (tr.re - 1.0).abs().max(tr.im.abs());
        if dev > NORM_TOL {
            if dev > NORM_REPAIR {
                return Err(Error::BadNormalization(dev));
            }
            matrix /= C64::from(tr.re);
        }
        Ok(Self { total_particles, matrix })
    }

    /// Trusted constructor for matrices produced by internal unitary maps.
    pub(crate) fn from_parts_unchecked(total_particles: usize, matrix: DMatrix<C64>) -> Self {
        Self { total_particles, matrix }
    }

    pub fn total_particles(&self) -> usize {
        self.total_particles
    }

    pub fn dim(&self) -> usize {
        self.total_particles + 1
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).sum()
    }

    /// Smallest eigenvalue; used to verify positive semi-definiteness.
    pub fn min_eigenvalue(&self) -> f64 {
        let eig = self.matrix.clone().symmetric_eigen();
        eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// True when all off-diagonal elements vanish within `tol`.
    pub fn is_diagonal(&self, tol: f64) -> bool {
        let dim = self.dim();
        for i in 0..dim {
            for j in 0..dim {
                if i != j && self.matrix[(i, j)].norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn diagonal_probabilities(&self) -> DVector<f64> {
        DVector::from_iterator(self.dim(), (0..self.dim()).map(|i| self.matrix[(i, i)].re))
    }
}

/// Internal representation of one sector's state. `Diagonal` holds a
/// classical mixture of Fock basis states, which loss channels produce from
/// Fock-product inputs; keeping it explicit lets the estimators skip an
/// eigendecomposition.
#[derive(Debug, Clone)]
pub enum SectorContent {
    Pure(SectorPureState),
    Diagonal(DVector<f64>),
    Mixed(SectorDensityMatrix),
}

impl SectorContent {
    pub fn dim(&self) -> usize {
        match self {
            SectorContent::Pure(p) => p.dim(),
            SectorContent::Diagonal(d) => d.len(),
            SectorContent::Mixed(m) => m.dim(),
        }
    }

    pub fn total_particles(&self) -> usize {
        self.dim() - 1
    }

    /// Materialize the sector density matrix.
    pub fn density_matrix(&self) -> SectorDensityMatrix {
        match self {
            SectorContent::Pure(p) => p.density_matrix(),
            SectorContent::Diagonal(d) => {
                let m = d.len() - 1;
                let mut mat = DMatrix::zeros(d.len(), d.len());
                for (i, &w) in d.iter().enumerate() {
                    mat[(i, i)] = C64::from(w);
                }
                SectorDensityMatrix { total_particles: m, matrix: mat }
            }
            SectorContent::Mixed(m) => m.clone(),
        }
    }

    /// Diagonal of the density matrix (occupation probabilities).
    pub fn occupation_probabilities(&self) -> DVector<f64> {
        match self {
            SectorContent::Pure(p) => p.probabilities(),
            SectorContent::Diagonal(d) => d.clone(),
            SectorContent::Mixed(m) => m.diagonal_probabilities(),
        }
    }
}

/// Probability-weighted mixture of per-sector states, block-diagonal in the
/// total particle number.
#[derive(Debug, Clone)]
pub struct SectoredState {
    sectors: BTreeMap<usize, (f64, SectorContent)>,
    source_particles: usize,
}

impl SectoredState {
    /// Wrap a fixed-number pure state as a single sector of weight 1.
    pub fn from_pure(state: SectorPureState) -> Self {
        let n = state.total_particles();
        let mut sectors = BTreeMap::new();
        sectors.insert(n, (1.0, SectorContent::Pure(state)));
        Self { sectors, source_particles: n }
    }

    pub fn from_sectors(
        source_particles: usize,
        parts: Vec<(usize, f64, SectorContent)>,
    ) -> Result<Self> {
        let mut sectors = BTreeMap::new();
        let mut total = 0.0;
        for (m, w, content) in parts {
            if w < 0.0 {
                return Err(Error::InvalidArgument(format!("negative sector weight {w}")));
            }
            if content.total_particles() != m {
                return Err(Error::InvalidArgument(format!(
                    "sector content dimension {} does not match label M={m}",
                    content.dim()
                )));
            }
            total += w;
            if sectors.insert(m, (w, content)).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate sector M={m}")));
            }
        }
        let dev = (total - 1.0).abs();
        if dev > NORM_TOL {
            if dev > NORM_REPAIR {
                return Err(Error::BadNormalization(dev));
            }
            for (w, _) in sectors.values_mut() {
                *w /= total;
            }
        }
        Ok(Self { sectors, source_particles })
    }

    /// Particle number before any channel was applied.
    pub fn source_particles(&self) -> usize {
        self.source_particles
    }

    pub fn sectors(&self) -> impl Iterator<Item = (usize, f64, &SectorContent)> {
        self.sectors.iter().map(|(&m, (w, c))| (m, *w, c))
    }

    pub fn sector_count(&self) -> usize {
        self.sectors.len()
    }

    pub fn weight_sum(&self) -> f64 {
        self.sectors.values().map(|(w, _)| w).sum()
    }

    /// Weighted mean of the total particle number over sectors.
    pub fn mean_particles(&self) -> f64 {
        self.sectors.iter().map(|(&m, (w, _))| w * m as f64).sum()
    }

    /// Largest particle number carried by any sector.
    pub fn max_particles(&self) -> usize {
        self.sectors.keys().next_back().copied().unwrap_or(0)
    }

    /// The single-sector pure state, if that is what this is.
    pub fn as_single_pure(&self) -> Option<&SectorPureState> {
        if self.sectors.len() != 1 {
            return None;
        }
        match self.sectors.values().next() {
            Some((_, SectorContent::Pure(p))) => Some(p),
            _ => None,
        }
    }

    pub(crate) fn map_sectors<F>(&self, f: F) -> Self
    where
        F: Fn(usize, &SectorContent) -> SectorContent,
    {
        let sectors = self
            .sectors
            .iter()
            .map(|(&m, (w, c))| (m, (*w, f(m, c))))
            .collect();
        Self { sectors, source_particles: self.source_particles }
    }
}

impl From<SectorPureState> for SectoredState {
    fn from(state: SectorPureState) -> Self {
        SectoredState::from_pure(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pure_state_checks_length() {
        let amps = DVector::from_vec(vec![C64::new(1.0, 0.0); 3]);
        assert!(SectorPureState::new(1, amps).is_err());
    }

    #[test]
    fn pure_state_renormalizes_small_deviation() {
        let eps = 1e-8;
        let amps = DVector::from_vec(vec![C64::new((1.0f64 + eps).sqrt(), 0.0), C64::new(0.0, 0.0)]);
        let s = SectorPureState::new(1, amps).unwrap();
        let norm: f64 = s.amplitudes().iter().map(|a| a.norm_sqr()).sum();
        assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn pure_state_rejects_large_deviation() {
        let amps = DVector::from_vec(vec![C64::new(2.0, 0.0), C64::new(0.0, 0.0)]);
        match SectorPureState::new(1, amps) {
            Err(Error::BadNormalization(_)) => {}
            other => panic!("expected BadNormalization, got {other:?}"),
        }
    }

    #[test]
    fn density_matrix_rejects_non_hermitian() {
        let mut mat = DMatrix::zeros(2, 2);
        mat[(0, 0)] = C64::new(0.5, 0.0);
        mat[(1, 1)] = C64::new(0.5, 0.0);
        mat[(0, 1)] = C64::new(0.3, 0.0);
        mat[(1, 0)] = C64::new(-0.3, 0.0);
        assert!(SectorDensityMatrix::new(1, mat).is_err());
    }

    #[test]
    fn sectored_state_weights_must_sum_to_one() {
        let p0 = SectorPureState::basis_state(0, 0);
        let p2 = SectorPureState::basis_state(2, 1);
        let bad = SectoredState::from_sectors(
            2,
            vec![
                (0, 0.3, SectorContent::Pure(p0.clone())),
                (2, 0.3, SectorContent::Pure(p2.clone())),
            ],
        );
        assert!(bad.is_err());
        let good = SectoredState::from_sectors(
            2,
            vec![
                (0, 0.25, SectorContent::Pure(p0)),
                (2, 0.75, SectorContent::Pure(p2)),
            ],
        )
        .unwrap();
        assert_abs_diff_eq!(good.weight_sum(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(good.mean_particles(), 1.5, epsilon = 1e-15);
    }

    #[test]
    fn single_pure_sector_roundtrip() {
        let s = SectorPureState::basis_state(4, 2);
        let st = SectoredState::from_pure(s);
        assert_eq!(st.source_particles(), 4);
        assert_eq!(st.sector_count(), 1);
        assert!(st.as_single_pure().is_some());
        assert_abs_diff_eq!(st.mean_particles(), 4.0, epsilon = 1e-15);
    }
}
