//! Collective spin operators on a fixed-number sector, rotations about J_y,
//! the beam-splitter basis change and collective moments.
//!
//! In the Schwinger representation a two-mode sector of `M` particles carries
//! the maximal spin `j = M/2`, with `J_z |n, M-n> = (n - M/2) |n, M-n>`.
//! Rotations `U(theta) = exp(-i theta J_y)` are evaluated through a cached
//! eigendecomposition of `J_y` per sector size, which stays accurate for
//! sector dimensions in the thousands and is reused across angle grids.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::{DMatrix, DVector};

use crate::sector::{C64, SectorContent, SectorDensityMatrix, SectorPureState, SectoredState};

/// Dense matrix representations of the collective spin operators on the
/// sector with total particle number `M` (dimension `M+1`).
#[derive(Debug, Clone)]
pub struct SpinOperators {
    pub total_particles: usize,
    pub jx: DMatrix<C64>,
    pub jy: DMatrix<C64>,
    pub jz: DMatrix<C64>,
    pub jplus: DMatrix<C64>,
    pub jminus: DMatrix<C64>,
}

/// Ladder coefficient `<m+1|J_+|m>` with `m = n - M/2`.
#[inline]
pub(crate) fn ladder_coeff(m_total: usize, n: usize) -> f64 {
    let j = m_total as f64 / 2.0;
    let m = n as f64 - j;
    (j * (j + 1.0) - m * (m + 1.0)).sqrt()
}

/// J_z eigenvalue of basis index `n` in the sector of `M` particles.
#[inline]
pub(crate) fn jz_value(m_total: usize, n: usize) -> f64 {
    n as f64 - m_total as f64 / 2.0
}

/// Build J_x, J_y, J_z and the ladder operators for one sector.
pub fn build_sector_operators(m_total: usize) -> SpinOperators {
    let dim = m_total + 1;
    let mut jplus = DMatrix::zeros(dim, dim);
    let mut jz = DMatrix::zeros(dim, dim);
    for n in 0..dim {
        jz[(n, n)] = C64::from(jz_value(m_total, n));
        if n + 1 < dim {
            jplus[(n + 1, n)] = C64::from(ladder_coeff(m_total, n));
        }
    }
    let jminus = jplus.adjoint();
    let jx = (&jplus + &jminus).scale(0.5);
    let jy = (&jplus - &jminus) * C64::new(0.0, -0.5);
    SpinOperators { total_particles: m_total, jx, jy, jz, jplus, jminus }
}

/// Eigenbasis of J_y for one sector: `jy = vecs * diag(eigvals) * vecs^H`.
///
/// The eigenvalues are snapped to the exact lattice `-j..=j`; the snap is
/// validated against the solver output during construction.
#[derive(Debug)]
pub struct JyBasis {
    pub total_particles: usize,
    /// Exact eigenvalues `p - j`, ascending.
    pub eigvals: DVector<f64>,
    pub vecs: DMatrix<C64>,
}

impl JyBasis {
    fn build(m_total: usize) -> Self {
        let dim = m_total + 1;
        let j = m_total as f64 / 2.0;
        // Similarity by D = diag(i^n) turns J_y into a real symmetric
        // tridiagonal matrix with entries -c_n/2, which the real solver
        // handles faster and more accurately than the complex one.
        let mut real = DMatrix::<f64>::zeros(dim, dim);
        for n in 0..dim.saturating_sub(1) {
            let v = -0.5 * ladder_coeff(m_total, n);
            real[(n + 1, n)] = v;
            real[(n, n + 1)] = v;
        }
        let eig = real.symmetric_eigen();
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());

        let mut eigvals = DVector::zeros(dim);
        let mut vecs = DMatrix::<C64>::zeros(dim, dim);
        let phases: Vec<C64> = (0..dim)
            .map(|n| C64::new(0.0, 1.0).powu(n as u32 % 4))
            .collect();
        for (p, &src) in order.iter().enumerate() {
            let exact = p as f64 - j;
            debug_assert!(
                (eig.eigenvalues[src] - exact).abs() < 1e-8 * (1.0 + j),
                "J_y eigenvalue off lattice: {} vs {}",
                eig.eigenvalues[src],
                exact
            );
            eigvals[p] = exact;
            for n in 0..dim {
                vecs[(n, p)] = phases[n] * eig.eigenvectors[(n, src)];
            }
        }
        Self { total_particles: m_total, eigvals, vecs }
    }
}

fn jy_cache() -> &'static RwLock<HashMap<usize, Arc<JyBasis>>> {
    static CACHE: OnceLock<RwLock<HashMap<usize, Arc<JyBasis>>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Shared J_y eigenbasis for the sector of `M` particles.
pub fn jy_basis(m_total: usize) -> Arc<JyBasis> {
    if let Some(b) = jy_cache().read().unwrap().get(&m_total) {
        return Arc::clone(b);
    }
    let built = Arc::new(JyBasis::build(m_total));
    let mut guard = jy_cache().write().unwrap();
    Arc::clone(guard.entry(m_total).or_insert(built))
}

/// Dense `U(theta) = exp(-i theta J_y)` for one sector.
pub fn rotation_matrix(m_total: usize, theta: f64) -> DMatrix<C64> {
    let basis = jy_basis(m_total);
    let dim = m_total + 1;
    let mut scaled = basis.vecs.clone();
    for p in 0..dim {
        let ph = C64::new(0.0, -theta * basis.eigvals[p]).exp();
        for n in 0..dim {
            scaled[(n, p)] *= ph;
        }
    }
    scaled * basis.vecs.adjoint()
}

/// Apply `U(theta) = exp(-i theta J_y)` to a pure sector state.
pub fn rotate_pure(state: &SectorPureState, theta: f64) -> SectorPureState {
    let basis = jy_basis(state.total_particles());
    let mut w = basis.vecs.adjoint() * state.amplitudes();
    for p in 0..w.len() {
        w[p] *= C64::new(0.0, -theta * basis.eigvals[p]).exp();
    }
    let amps = &basis.vecs * w;
    SectorPureState::new(state.total_particles(), amps)
        .expect("unitary rotation preserves the norm")
}

/// Conjugate a sector density matrix by `U(theta)`.
pub fn rotate_density(rho: &SectorDensityMatrix, theta: f64) -> SectorDensityMatrix {
    let basis = jy_basis(rho.total_particles());
    let dim = rho.dim();
    let mut a = basis.vecs.adjoint() * rho.matrix() * &basis.vecs;
    for p in 0..dim {
        for q in 0..dim {
            let ph = C64::new(0.0, -theta * (basis.eigvals[p] - basis.eigvals[q])).exp();
            a[(p, q)] *= ph;
        }
    }
    let out = &basis.vecs * a * basis.vecs.adjoint();
    SectorDensityMatrix::from_parts_unchecked(rho.total_particles(), out)
}

fn rotate_content(content: &SectorContent, theta: f64) -> SectorContent {
    match content {
        SectorContent::Pure(p) => SectorContent::Pure(rotate_pure(p, theta)),
        SectorContent::Diagonal(_) | SectorContent::Mixed(_) => {
            SectorContent::Mixed(rotate_density(&content.density_matrix(), theta))
        }
    }
}

/// Apply `U(theta)` to every sector of a state.
pub fn rotate_y(state: &SectoredState, theta: f64) -> SectoredState {
    state.map_sectors(|_, c| rotate_content(c, theta))
}

/// Express a state in the Fock basis of the interferometer arm modes
/// `a_+ = (a + b)/sqrt(2)`, `a_- = (-a + b)/sqrt(2)`.
///
/// The mode map is realized by the sector rotation `U(-pi/2)`: conjugation by
/// it sends the input annihilation operators to the arm operators, so the
/// amplitude vector in the arm basis is `U(-pi/2)` applied to the input one.
pub fn to_pm_basis(state: &SectoredState) -> SectoredState {
    rotate_y(state, -std::f64::consts::FRAC_PI_2)
}

/// Arm-basis transform of a single pure sector.
pub fn to_pm_basis_pure(state: &SectorPureState) -> SectorPureState {
    rotate_pure(state, -std::f64::consts::FRAC_PI_2)
}

/// Collective first and second moments of a sectored state.
#[derive(Debug, Clone, Copy)]
pub struct MomentRecord {
    pub mean_jx: f64,
    pub mean_jy: f64,
    pub mean_jz: f64,
    pub var_jz: f64,
    pub mean_jx2_plus_jy2: f64,
    pub mean_particles: f64,
}

/// Spin component selector for axis-resolved moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// `J_a |psi>` evaluated from the ladder structure, without building the
/// dense operator.
fn apply_axis(m_total: usize, axis: Axis, v: &DVector<C64>) -> DVector<C64> {
    let dim = m_total + 1;
    let mut out = DVector::zeros(dim);
    match axis {
        Axis::Z => {
            for n in 0..dim {
                out[n] = v[n] * C64::from(jz_value(m_total, n));
            }
        }
        Axis::X => {
            for n in 0..dim.saturating_sub(1) {
                let c = C64::from(0.5 * ladder_coeff(m_total, n));
                out[n + 1] += c * v[n];
                out[n] += c * v[n + 1];
            }
        }
        Axis::Y => {
            for n in 0..dim.saturating_sub(1) {
                let c = C64::new(0.0, -0.5 * ladder_coeff(m_total, n));
                out[n + 1] += c * v[n];
                out[n] -= c * v[n + 1];
            }
        }
    }
    out
}

/// Per-sector `(<J_a>, <J_a^2>)`.
fn sector_axis_moments(content: &SectorContent, axis: Axis) -> (f64, f64) {
    let m_total = content.total_particles();
    match content {
        SectorContent::Pure(p) => {
            let jv = apply_axis(m_total, axis, p.amplitudes());
            let mean = p.amplitudes().dotc(&jv).re;
            let second = jv.dotc(&jv).re;
            (mean, second)
        }
        SectorContent::Diagonal(d) => match axis {
            Axis::Z => {
                let mean = d.iter().enumerate().map(|(n, w)| w * jz_value(m_total, n)).sum();
                let second = d
                    .iter()
                    .enumerate()
                    .map(|(n, w)| w * jz_value(m_total, n).powi(2))
                    .sum();
                (mean, second)
            }
            // A Fock-diagonal mixture has no transverse coherence, so
            // <J_x> = <J_y> = 0 and <J_x^2> follows from the ladder products.
            Axis::X | Axis::Y => {
                let mut second = 0.0;
                for (n, w) in d.iter().enumerate() {
                    let up = if n + 1 <= m_total { ladder_coeff(m_total, n).powi(2) } else { 0.0 };
                    let down = if n > 0 { ladder_coeff(m_total, n - 1).powi(2) } else { 0.0 };
                    second += w * 0.25 * (up + down);
                }
                (0.0, second)
            }
        },
        SectorContent::Mixed(rho) => {
            let dim = rho.dim();
            let mat = rho.matrix();
            match axis {
                Axis::Z => {
                    let mut mean = 0.0;
                    let mut second = 0.0;
                    for n in 0..dim {
                        let m = jz_value(m_total, n);
                        let w = mat[(n, n)].re;
                        mean += w * m;
                        second += w * m * m;
                    }
                    (mean, second)
                }
                Axis::X | Axis::Y => {
                    // tr(rho J) and tr(rho J^2) via one sparse operator pass:
                    // J rho has the same band structure as rho.
                    let dense = match axis {
                        Axis::X => {
                            let mut jm = DMatrix::zeros(dim, dim);
                            for n in 0..dim - 1 {
                                let c = C64::from(0.5 * ladder_coeff(m_total, n));
                                jm[(n + 1, n)] = c;
                                jm[(n, n + 1)] = c;
                            }
                            jm
                        }
                        Axis::Y => {
                            let mut jm = DMatrix::zeros(dim, dim);
                            for n in 0..dim - 1 {
                                let c = C64::new(0.0, -0.5 * ladder_coeff(m_total, n));
                                jm[(n + 1, n)] = c;
                                jm[(n, n + 1)] = -c;
                            }
                            jm
                        }
                        Axis::Z => unreachable!(),
                    };
                    let jrho = &dense * mat;
                    let mean = (0..dim).map(|i| jrho[(i, i)].re).sum();
                    let second = {
                        let j2rho = &dense * &jrho;
                        (0..dim).map(|i| j2rho[(i, i)].re).sum()
                    };
                    (mean, second)
                }
            }
        }
    }
}

/// Axis-resolved `(<J_a>, <J_a^2>)` combined over sector weights.
pub fn axis_moments(state: &SectoredState, axis: Axis) -> (f64, f64) {
    let mut mean = 0.0;
    let mut second = 0.0;
    for (_, w, content) in state.sectors() {
        let (m1, m2) = sector_axis_moments(content, axis);
        mean += w * m1;
        second += w * m2;
    }
    (mean, second)
}

/// Collective moments entering the squeezing metrics. Within a sector the
/// transverse second moment uses `<J_x^2 + J_y^2> = j(j+1) - <J_z^2>`, which
/// is exact because two-mode bosonic sectors occupy the maximal-j
/// representation.
pub fn collective_moments(state: &SectoredState) -> MomentRecord {
    let mut mean_jx = 0.0;
    let mut mean_jy = 0.0;
    let mut mean_jz = 0.0;
    let mut mean_jz2 = 0.0;
    let mut trans = 0.0;
    for (m, w, content) in state.sectors() {
        let j = m as f64 / 2.0;
        let (z1, z2) = sector_axis_moments(content, Axis::Z);
        let (x1, _) = match content {
            SectorContent::Diagonal(_) => (0.0, 0.0),
            _ => sector_axis_moments(content, Axis::X),
        };
        let (y1, _) = match content {
            SectorContent::Diagonal(_) => (0.0, 0.0),
            _ => sector_axis_moments(content, Axis::Y),
        };
        mean_jx += w * x1;
        mean_jy += w * y1;
        mean_jz += w * z1;
        mean_jz2 += w * z2;
        trans += w * (j * (j + 1.0) - z2);
    }
    MomentRecord {
        mean_jx,
        mean_jy,
        mean_jz,
        var_jz: mean_jz2 - mean_jz * mean_jz,
        mean_jx2_plus_jy2: trans,
        mean_particles: state.mean_particles(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn max_entry(m: &DMatrix<C64>) -> f64 {
        m.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn single_spin_half_matrices() {
        let ops = build_sector_operators(1);
        assert_abs_diff_eq!(ops.jz[(0, 0)].re, -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(ops.jz[(1, 1)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(ops.jx[(0, 1)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(ops.jx[(1, 0)].re, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn ladder_entries_m2() {
        // j = 1: <m+1|J+|m> = sqrt(2) for both m = -1, 0.
        let ops = build_sector_operators(2);
        assert_abs_diff_eq!(ops.jplus[(1, 0)].re, 2.0f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(ops.jplus[(2, 1)].re, 2.0f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn commutator_and_casimir() {
        for m in [0usize, 1, 3, 12, 40] {
            let ops = build_sector_operators(m);
            let comm = &ops.jx * &ops.jy - &ops.jy * &ops.jx;
            let diff = &comm - &ops.jz * C64::new(0.0, 1.0);
            assert!(max_entry(&diff) < 1e-10, "commutator failed at M={m}");
            let j = m as f64 / 2.0;
            let casimir = &ops.jx * &ops.jx + &ops.jy * &ops.jy + &ops.jz * &ops.jz;
            let expect = DMatrix::identity(m + 1, m + 1) * C64::from(j * (j + 1.0));
            assert!(max_entry(&(&casimir - &expect)) < 1e-10, "casimir failed at M={m}");
        }
    }

    #[test]
    fn m_zero_is_trivial() {
        let ops = build_sector_operators(0);
        assert_eq!(ops.jx.nrows(), 1);
        assert_abs_diff_eq!(ops.jx[(0, 0)].norm(), 0.0, epsilon = 1e-15);
        // rotations on the vacuum are the identity
        let v = SectorPureState::basis_state(0, 0);
        let r = rotate_pure(&v, 0.7);
        assert_abs_diff_eq!(r.amplitudes()[0].re, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn rotation_identity_at_zero() {
        let s = SectorPureState::basis_state(6, 2);
        let r = rotate_pure(&s, 0.0);
        for n in 0..=6 {
            assert_abs_diff_eq!(
                (r.amplitudes()[n] - s.amplitudes()[n]).norm(),
                0.0,
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn rotation_pi_flips_single_particle() {
        // M=1: |1,0> -> -|0,1> under exp(-i pi J_y) (global sign allowed).
        let s = SectorPureState::basis_state(1, 1);
        let r = rotate_pure(&s, std::f64::consts::PI);
        assert_abs_diff_eq!(r.amplitudes()[1].norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.amplitudes()[0].norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rotation_against_series_exponential() {
        // Taylor-series exponential as an independent oracle.
        fn expm(a: &DMatrix<C64>) -> DMatrix<C64> {
            let n = a.nrows();
            let norm = a.iter().map(|c| c.norm()).fold(0.0, f64::max) * n as f64;
            let k = norm.log2().ceil().max(0.0) as u32 + 1;
            let scaled = a / C64::from(2f64.powi(k as i32));
            let mut term = DMatrix::<C64>::identity(n, n);
            let mut sum = term.clone();
            for i in 1..40 {
                term = &term * &scaled / C64::from(i as f64);
                sum += &term;
            }
            let mut out = sum;
            for _ in 0..k {
                out = &out * &out;
            }
            out
        }
        let m = 20;
        let ops = build_sector_operators(m);
        for &theta in &[0.3, -1.1, 2.7] {
            let direct = expm(&(&ops.jy * C64::new(0.0, -theta)));
            let fast = rotation_matrix(m, theta);
            assert!(max_entry(&(&direct - &fast)) < 1e-9, "theta={theta}");
        }
    }

    #[test]
    fn rotation_composes() {
        let raw: DVector<C64> =
            DVector::from_fn(9, |n, _| C64::new(0.3 * (n as f64 + 1.0).sin(), 0.1 * n as f64));
        let nrm: f64 = raw.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let s = SectorPureState::new(8, raw / C64::from(nrm)).unwrap();
        let a = rotate_pure(&rotate_pure(&s, 0.4), -1.3);
        let b = rotate_pure(&s, 0.4 - 1.3);
        for n in 0..9 {
            assert!((a.amplitudes()[n] - b.amplitudes()[n]).norm() < 1e-9);
        }
    }

    #[test]
    fn pm_basis_single_particle() {
        // |1,0>_ab -> (|1,0> - |0,1>)/sqrt(2) in the arm basis.
        let s = SectorPureState::basis_state(1, 1);
        let t = to_pm_basis_pure(&s);
        let r = 1.0 / 2.0f64.sqrt();
        assert_abs_diff_eq!(t.amplitudes()[1].re, r, epsilon = 1e-12);
        assert_abs_diff_eq!(t.amplitudes()[0].re, -r, epsilon = 1e-12);
    }

    #[test]
    fn pm_basis_dicke_two() {
        // |1,1>_ab -> (|2,0> - |0,2>)/sqrt(2).
        let s = SectorPureState::basis_state(2, 1);
        let t = to_pm_basis_pure(&s);
        let r = 1.0 / 2.0f64.sqrt();
        assert_abs_diff_eq!(t.amplitudes()[2].re, r, epsilon = 1e-12);
        assert_abs_diff_eq!(t.amplitudes()[1].norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.amplitudes()[0].re, -r, epsilon = 1e-12);
    }

    #[test]
    fn pm_basis_vacuum() {
        let s = SectorPureState::basis_state(0, 0);
        let t = to_pm_basis_pure(&s);
        assert_abs_diff_eq!(t.amplitudes()[0].norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn dicke_two_moments() {
        let s = SectoredState::from_pure(SectorPureState::basis_state(2, 1));
        let m = collective_moments(&s);
        assert_abs_diff_eq!(m.mean_jz, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m.var_jz, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m.mean_jx2_plus_jy2, 2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(m.mean_particles, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn moments_linear_in_sector_weights() {
        let p0 = SectorContent::Pure(SectorPureState::basis_state(2, 1));
        let p1 = SectorContent::Pure(SectorPureState::basis_state(4, 0));
        let mix = SectoredState::from_sectors(4, vec![(2, 0.3, p0.clone()), (4, 0.7, p1.clone())])
            .unwrap();
        let only0 = SectoredState::from_sectors(2, vec![(2, 1.0, p0)]).unwrap();
        let only1 = SectoredState::from_sectors(4, vec![(4, 1.0, p1)]).unwrap();
        let mm = collective_moments(&mix);
        let m0 = collective_moments(&only0);
        let m1 = collective_moments(&only1);
        assert_abs_diff_eq!(
            mm.mean_jx2_plus_jy2,
            0.3 * m0.mean_jx2_plus_jy2 + 0.7 * m1.mean_jx2_plus_jy2,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            mm.mean_jz,
            0.3 * m0.mean_jz + 0.7 * m1.mean_jz,
            epsilon = 1e-12
        );
    }

    #[test]
    fn axis_moments_match_dense_operators() {
        let raw: DVector<C64> =
            DVector::from_fn(7, |n, _| C64::new((n as f64 * 0.9).cos(), (n as f64 * 0.4).sin()));
        let nrm: f64 = raw.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let s = SectorPureState::new(6, raw / C64::from(nrm)).unwrap();
        let st = SectoredState::from_pure(s.clone());
        let ops = build_sector_operators(6);
        for (axis, op) in [(Axis::X, &ops.jx), (Axis::Y, &ops.jy), (Axis::Z, &ops.jz)] {
            let (mean, second) = axis_moments(&st, axis);
            let jv = op * s.amplitudes();
            let want_mean = s.amplitudes().dotc(&jv).re;
            let want_second = jv.dotc(&jv).re;
            assert_abs_diff_eq!(mean, want_mean, epsilon = 1e-12);
            assert_abs_diff_eq!(second, want_second, epsilon = 1e-12);
        }
    }
}
