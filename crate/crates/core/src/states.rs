//! Constructors for the input-state families: ideal Dicke states, Gaussian
//! superpositions around the Dicke point, spin-coherent benchmarks, lossy
//! Dicke mixtures and the constrained minimum-variance squeezed state.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::math::ln_binomial;
use crate::noise::loss_channel;
use crate::operators::{jz_value, ladder_coeff};
use crate::sector::{C64, SectorPureState, SectoredState};

/// Parameters of the Gaussian-weighted Dicke superposition
/// `a_n ~ exp(-(n - N/2)^2 / sigma^2) exp(i pi (n - N/2)/4)`.
#[derive(Debug, Clone, Copy)]
pub struct GaussianDickeParams {
    pub n: usize,
    pub sigma: f64,
}

impl GaussianDickeParams {
    pub fn new(n: usize, sigma: f64) -> Result<Self> {
        if n == 0 || n % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "particle number must be even and positive, got {n}"
            )));
        }
        if !(sigma >= 0.0) {
            return Err(Error::InvalidArgument(format!("sigma must be >= 0, got {sigma}")));
        }
        Ok(Self { n, sigma })
    }
}

/// Search parameters for the minimum-variance spin-squeezed state: the ground
/// state of `J_z^2 - lambda J_x` with `lambda` tuned so that
/// `<J_x> = jx_fraction * N/2`.
#[derive(Debug, Clone, Copy)]
pub struct SqueezedSearchParams {
    pub n: usize,
    pub jx_fraction: f64,
    pub lambda_bracket: (f64, f64),
    pub constraint_tol: f64,
}

impl SqueezedSearchParams {
    pub fn new(n: usize, jx_fraction: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("particle number must be positive".into()));
        }
        if !(jx_fraction > 0.0 && jx_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "jx_fraction must lie in (0,1), got {jx_fraction}"
            )));
        }
        Ok(Self {
            n,
            jx_fraction,
            lambda_bracket: (1e-8, 10.0 * n as f64),
            constraint_tol: 1e-6,
        })
    }

    pub fn with_bracket(mut self, lo: f64, hi: f64) -> Self {
        self.lambda_bracket = (lo, hi);
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.constraint_tol = tol;
        self
    }
}

/// Ideal Dicke state `|N/2, N/2>`: equal occupation of both modes.
pub fn dicke_state(n: usize) -> Result<SectorPureState> {
    if n == 0 || n % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "Dicke state needs an even positive particle number, got {n}"
        )));
    }
    Ok(SectorPureState::basis_state(n, n / 2))
}

/// Spin-coherent state fully polarized along +x:
/// `a_n = sqrt(C(N,n)) / 2^{N/2}`.
pub fn spin_coherent_x(n: usize) -> Result<SectorPureState> {
    if n == 0 {
        return Err(Error::InvalidArgument("particle number must be positive".into()));
    }
    let half_log2 = n as f64 / 2.0 * std::f64::consts::LN_2;
    let amps = DVector::from_iterator(
        n + 1,
        (0..=n).map(|k| C64::from((0.5 * ln_binomial(n, k) - half_log2).exp())),
    );
    SectorPureState::new(n, amps)
}

/// Gaussian-weighted Dicke superposition; `sigma = 0` degenerates to the
/// ideal Dicke state. Amplitudes are assembled in log space so large `N`
/// with small `sigma` cannot underflow before normalization.
pub fn gaussian_dicke(params: GaussianDickeParams) -> Result<SectorPureState> {
    let GaussianDickeParams { n, sigma } = params;
    if sigma == 0.0 {
        return dicke_state(n);
    }
    let half = n as f64 / 2.0;
    let log_weights: Vec<f64> = (0..=n)
        .map(|k| {
            let m = k as f64 - half;
            -m * m / (sigma * sigma)
        })
        .collect();
    let max_lw = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let amps = DVector::from_iterator(
        n + 1,
        log_weights.iter().enumerate().map(|(k, &lw)| {
            let m = k as f64 - half;
            let phase = C64::new(0.0, std::f64::consts::FRAC_PI_4 * m).exp();
            phase * (lw - max_lw).exp()
        }),
    );
    let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    SectorPureState::new(n, amps / C64::from(norm))
}

/// Dicke state degraded by a particle-loss channel of rate `eta`.
pub fn lossy_dicke(n: usize, eta: f64) -> Result<SectoredState> {
    let ideal = dicke_state(n)?;
    loss_channel(&SectoredState::from_pure(ideal), eta)
}

/// Ground state of `H(lambda) = J_z^2 - lambda J_x` with `lambda` chosen by
/// bisection so that `<J_x> = jx_fraction * N/2` within `constraint_tol`.
///
/// `<J_x>` of the ground state grows monotonically with `lambda`, so a sign
/// change of the constraint across the bracket pins the multiplier. By
/// parity, the ground state has `<J_z> = 0`, making `<J_z^2>` the variance.
pub fn min_variance_squeezed_state(params: SqueezedSearchParams) -> Result<SectorPureState> {
    let n = params.n;
    let target = params.jx_fraction * n as f64 / 2.0;
    let (lo0, hi0) = params.lambda_bracket;
    if !(lo0 > 0.0 && hi0 > lo0) {
        return Err(Error::InvalidArgument(format!("bad lambda bracket [{lo0}, {hi0}]")));
    }

    let ground = |lambda: f64| ground_state_of_constrained(n, lambda);
    let jx_of = |state: &DVector<f64>| jx_expectation(n, state);

    let (mut lo, mut hi) = (lo0, hi0);
    let f_lo = jx_of(&ground(lo)) - target;
    let f_hi = jx_of(&ground(hi)) - target;
    if f_lo > 0.0 || f_hi < 0.0 {
        return Err(Error::NoConvergence(format!(
            "lambda bracket [{lo0:.3e}, {hi0:.3e}] does not straddle <J_x> = {target}: \
             f(lo) = {f_lo:.3e}, f(hi) = {f_hi:.3e}"
        )));
    }

    let mut state = ground(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        state = ground(mid);
        let f_mid = jx_of(&state) - target;
        if f_mid.abs() <= params.constraint_tol {
            break;
        }
        if f_mid < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let achieved = jx_of(&state);
    if (achieved - target).abs() > params.constraint_tol {
        return Err(Error::NoConvergence(format!(
            "bisection stalled: <J_x> = {achieved} vs target {target} \
             (final bracket [{lo:.6e}, {hi:.6e}])"
        )));
    }

    let amps = DVector::from_iterator(n + 1, state.iter().map(|&x| C64::from(x)));
    SectorPureState::new(n, amps)
}

/// Dense real-symmetric ground state of `J_z^2 - lambda J_x` for one sector.
/// Degenerate ground levels (possible as `lambda -> 0`) are resolved by
/// picking the eigenvector with maximal `<J_x>`; the returned vector has its
/// largest-magnitude entry made positive.
fn ground_state_of_constrained(n: usize, lambda: f64) -> DVector<f64> {
    let dim = n + 1;
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for k in 0..dim {
        let m = jz_value(n, k);
        h[(k, k)] = m * m;
        if k + 1 < dim {
            let c = -lambda * 0.5 * ladder_coeff(n, k);
            h[(k + 1, k)] = c;
            h[(k, k + 1)] = c;
        }
    }
    let eig = h.symmetric_eigen();
    let min_val = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = eig.eigenvalues.iter().copied().fold(0.0f64, |a, b| a.max(b.abs())).max(1.0);
    let mut best: Option<(f64, DVector<f64>)> = None;
    for i in 0..dim {
        if eig.eigenvalues[i] - min_val <= 1e-12 * scale {
            let v: DVector<f64> = eig.eigenvectors.column(i).into();
            let jx = jx_expectation(n, &v);
            if best.as_ref().map_or(true, |(b, _)| jx > *b) {
                best = Some((jx, v));
            }
        }
    }
    let (_, mut v) = best.expect("symmetric eigenproblem yields at least one level");
    let k_max = (0..dim).max_by(|&a, &b| v[a].abs().partial_cmp(&v[b].abs()).unwrap()).unwrap();
    if v[k_max] < 0.0 {
        v = -v;
    }
    v
}

fn jx_expectation(n: usize, v: &DVector<f64>) -> f64 {
    let mut acc = 0.0;
    for k in 0..n {
        acc += ladder_coeff(n, k) * v[k] * v[k + 1];
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{Axis, axis_moments, collective_moments};
    use approx::assert_abs_diff_eq;

    #[test]
    fn dicke_two_amplitudes() {
        let s = dicke_state(2).unwrap();
        assert_abs_diff_eq!(s.amplitudes()[0].norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitudes()[1].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitudes()[2].norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn dicke_rejects_odd_or_zero() {
        assert!(dicke_state(3).is_err());
        assert!(dicke_state(0).is_err());
    }

    #[test]
    fn spin_coherent_two_amplitudes() {
        let s = spin_coherent_x(2).unwrap();
        assert_abs_diff_eq!(s.amplitudes()[0].re, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(s.amplitudes()[1].re, 1.0 / 2f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(s.amplitudes()[2].re, 0.5, epsilon = 1e-14);
    }

    #[test]
    fn spin_coherent_mean_spin() {
        let s = SectoredState::from_pure(spin_coherent_x(50).unwrap());
        let m = collective_moments(&s);
        assert_abs_diff_eq!(m.mean_jx, 25.0, epsilon = 1e-10);
        assert_abs_diff_eq!(m.var_jz, 12.5, epsilon = 1e-10);
    }

    #[test]
    fn gaussian_sigma_zero_is_dicke() {
        let g = gaussian_dicke(GaussianDickeParams::new(40, 0.0).unwrap()).unwrap();
        let d = dicke_state(40).unwrap();
        assert_abs_diff_eq!(g.fidelity(&d), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn gaussian_var_matches_scalar_oracle() {
        // direct weighted-sum oracle over w_m = exp(-2 m^2 / sigma^2)
        let n = 1000;
        let sigma = 1.0f64;
        let g = gaussian_dicke(GaussianDickeParams::new(n, sigma).unwrap()).unwrap();
        let st = SectoredState::from_pure(g);
        let m = collective_moments(&st);
        let half = n as f64 / 2.0;
        let mut num = 0.0;
        let mut den = 0.0;
        for k in 0..=n {
            let mm = k as f64 - half;
            let w = (-2.0 * mm * mm / (sigma * sigma)).exp();
            num += mm * mm * w;
            den += w;
        }
        assert_abs_diff_eq!(m.var_jz, num / den, epsilon = 1e-10);
    }

    #[test]
    fn gaussian_phase_does_not_enter_transverse_moment() {
        // <Jx^2 + Jy^2> must equal j(j+1) - <Jz^2> regardless of the phase
        // gradient; compare against a zero-phase variant.
        let n = 60;
        let sigma = 2.0;
        let g = gaussian_dicke(GaussianDickeParams::new(n, sigma).unwrap()).unwrap();
        let zero_phase = {
            let amps = DVector::from_iterator(
                n + 1,
                g.amplitudes().iter().map(|a| C64::from(a.norm())),
            );
            SectorPureState::new(n, amps).unwrap()
        };
        let m1 = collective_moments(&SectoredState::from_pure(g));
        let m2 = collective_moments(&SectoredState::from_pure(zero_phase));
        assert_abs_diff_eq!(m1.mean_jx2_plus_jy2, m2.mean_jx2_plus_jy2, epsilon = 1e-9);
    }

    #[test]
    fn lossy_dicke_endpoints() {
        let s0 = lossy_dicke(4, 0.0).unwrap();
        assert_eq!(s0.sector_count(), 1);
        assert_eq!(s0.max_particles(), 4);
        let s1 = lossy_dicke(4, 1.0).unwrap();
        assert_eq!(s1.sector_count(), 1);
        assert_eq!(s1.max_particles(), 0);
    }

    #[test]
    fn lossy_dicke_two_sector_weights() {
        // independent binomial survival per mode
        let eta = 0.3;
        let s = lossy_dicke(2, eta).unwrap();
        let mut weights = std::collections::BTreeMap::new();
        for (m, w, _) in s.sectors() {
            weights.insert(m, w);
        }
        assert_abs_diff_eq!(weights[&2], (1.0 - eta) * (1.0 - eta), epsilon = 1e-12);
        assert_abs_diff_eq!(weights[&1], 2.0 * eta * (1.0 - eta), epsilon = 1e-12);
        assert_abs_diff_eq!(weights[&0], eta * eta, epsilon = 1e-12);
    }

    #[test]
    fn lossy_dicke_mean_particles() {
        for eta in [0.0, 0.15, 0.5, 0.85] {
            let s = lossy_dicke(20, eta).unwrap();
            assert_abs_diff_eq!(s.mean_particles(), 20.0 * (1.0 - eta), epsilon = 1e-10);
        }
    }

    #[test]
    fn squeezed_state_hits_polarization_target() {
        let params = SqueezedSearchParams::new(100, 0.1).unwrap();
        let s = min_variance_squeezed_state(params).unwrap();
        let st = SectoredState::from_pure(s);
        let (jx, _) = axis_moments(&st, Axis::X);
        assert_abs_diff_eq!(jx, 5.0, epsilon = 1e-6);
        let (jz, _) = axis_moments(&st, Axis::Z);
        assert_abs_diff_eq!(jz, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn squeezed_state_matches_lambda_scan_oracle() {
        // brute-force: scan lambda on a fine grid, pick the scan point whose
        // <J_x> is closest to the target, compare fidelity.
        let n = 4;
        let c = 0.1;
        let target = c * n as f64 / 2.0;
        let mut best: Option<(f64, DVector<f64>)> = None;
        let mut lam = 1e-6;
        while lam < 10.0 {
            let v = ground_state_of_constrained(n, lam);
            let err = (jx_expectation(n, &v) - target).abs();
            if best.as_ref().map_or(true, |(e, _)| err < *e) {
                best = Some((err, v));
            }
            lam *= 1.002;
        }
        let (_, oracle) = best.unwrap();
        let s = min_variance_squeezed_state(
            SqueezedSearchParams::new(n, c).unwrap().with_tolerance(1e-9),
        )
        .unwrap();
        let overlap: f64 = (0..=n).map(|k| oracle[k] * s.amplitudes()[k].re).sum();
        assert!(overlap.powi(2) > 1.0 - 1e-8, "fidelity {}", overlap.powi(2));
    }

    #[test]
    fn squeezed_variance_grows_with_polarization() {
        let n = 40;
        let mut last = -1.0;
        for c in [0.05, 0.1, 0.2] {
            let s = min_variance_squeezed_state(SqueezedSearchParams::new(n, c).unwrap()).unwrap();
            let st = SectoredState::from_pure(s);
            let m = collective_moments(&st);
            assert!(m.var_jz >= last, "variance not monotone at c={c}");
            last = m.var_jz;
        }
    }

    #[test]
    fn squeezed_bad_bracket_reports_diagnostics() {
        let params = SqueezedSearchParams::new(20, 0.9)
            .unwrap()
            .with_bracket(1e-9, 1e-8);
        match min_variance_squeezed_state(params) {
            Err(crate::error::Error::NoConvergence(msg)) => {
                assert!(msg.contains("bracket"), "message: {msg}");
            }
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }
}
