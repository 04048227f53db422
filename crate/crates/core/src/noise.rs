//! Photon loss on two-mode sectored states and the qubit dephasing model.
//!
//! Loss is evaluated by exact Kraus summation per mode: the amplitude-damping
//! operators `A_k` with `<n-k| A_k |n> = sqrt(C(n,k) eta^k (1-eta)^{n-k})`
//! act independently on modes `a` and `b`. Distinct Kraus labels never
//! interfere, so the output carries no coherence between different remaining
//! particle numbers and the sectored representation is lossless.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::math::kraus_coeff;
use crate::sector::{C64, SectorContent, SectorDensityMatrix, SectoredState};

/// Numerical floor below which an output sector is dropped; far below every
/// tolerance used by the metrics.
const WEIGHT_FLOOR: f64 = 1e-300;

/// Off-diagonal magnitude below which an output block is stored as a
/// classical Fock mixture.
const DIAG_TOL: f64 = 1e-14;

/// Apply the particle-loss channel of rate `eta` to every sector.
pub fn loss_channel(state: &SectoredState, eta: f64) -> Result<SectoredState> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidArgument(format!("loss rate must be in [0,1], got {eta}")));
    }
    if eta == 0.0 {
        return Ok(state.clone());
    }

    let max_m = state.max_particles();
    let mut blocks: Vec<Option<DMatrix<C64>>> = vec![None; max_m + 1];

    for (m_in, w_in, content) in state.sectors() {
        match content {
            SectorContent::Pure(p) => {
                accumulate_pure(&mut blocks, m_in, w_in, p.amplitudes(), eta);
            }
            SectorContent::Diagonal(d) => {
                accumulate_diagonal(&mut blocks, m_in, w_in, d, eta);
            }
            SectorContent::Mixed(rho) => {
                accumulate_mixed(&mut blocks, m_in, w_in, rho.matrix(), eta);
            }
        }
    }

    let mut parts = Vec::new();
    for (m_out, block) in blocks.into_iter().enumerate() {
        let Some(mat) = block else { continue };
        let weight: f64 = (0..=m_out).map(|i| mat[(i, i)].re).sum();
        if weight <= WEIGHT_FLOOR {
            continue;
        }
        // real unscale: complex division would square the (possibly
        // subnormal-scale) trace and underflow to NaN
        let normalized = mat.unscale(weight);
        let content = compact_block(m_out, normalized);
        parts.push((m_out, weight, content));
    }
    SectoredState::from_sectors(state.source_particles(), parts)
}

/// Composition of two loss channels equals one channel with transmissivity
/// product: `1 - eta = (1 - eta1)(1 - eta2)`.
pub fn compose_loss_rates(eta1: f64, eta2: f64) -> f64 {
    1.0 - (1.0 - eta1) * (1.0 - eta2)
}

fn compact_block(m_out: usize, mat: DMatrix<C64>) -> SectorContent {
    let dim = m_out + 1;
    let mut diag = true;
    'scan: for i in 0..dim {
        for j in 0..dim {
            if i != j && mat[(i, j)].norm() > DIAG_TOL {
                diag = false;
                break 'scan;
            }
        }
    }
    if diag {
        SectorContent::Diagonal(DVector::from_iterator(dim, (0..dim).map(|i| mat[(i, i)].re)))
    } else {
        SectorContent::Mixed(SectorDensityMatrix::from_parts_unchecked(m_out, mat))
    }
}

/// Kraus pass for a pure input sector: applies `A_{ka} (x) A_{kb}` to the
/// amplitude vector and accumulates the rank-1 outer products.
fn accumulate_pure(
    blocks: &mut [Option<DMatrix<C64>>],
    m_in: usize,
    w_in: f64,
    amps: &DVector<C64>,
    eta: f64,
) {
    for ka in 0..=m_in {
        for kb in 0..=(m_in - ka) {
            let m_out = m_in - ka - kb;
            let mut out = DVector::<C64>::zeros(m_out + 1);
            let mut any = false;
            // input |n, m_in - n> maps to |n - ka, m_in - n - kb>
            for n_out in 0..=m_out {
                let n_in = n_out + ka;
                let nb_in = m_in - n_in;
                if nb_in < kb {
                    continue;
                }
                let c = kraus_coeff(n_in, ka, eta) * kraus_coeff(nb_in, kb, eta);
                if c != 0.0 {
                    out[n_out] = amps[n_in] * C64::from(c);
                    any = true;
                }
            }
            if !any {
                continue;
            }
            let block = blocks[m_out].get_or_insert_with(|| DMatrix::zeros(m_out + 1, m_out + 1));
            block.gerc(C64::from(w_in), &out, &out, C64::from(1.0));
        }
    }
}

/// Kraus pass for a Fock-diagonal input: classical binomial redistribution of
/// the occupation probabilities per mode.
fn accumulate_diagonal(
    blocks: &mut [Option<DMatrix<C64>>],
    m_in: usize,
    w_in: f64,
    probs: &DVector<f64>,
    eta: f64,
) {
    for (n_in, &p) in probs.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let nb_in = m_in - n_in;
        for ka in 0..=n_in {
            let pa = kraus_coeff(n_in, ka, eta).powi(2);
            if pa == 0.0 {
                continue;
            }
            for kb in 0..=nb_in {
                let pb = kraus_coeff(nb_in, kb, eta).powi(2);
                if pb == 0.0 {
                    continue;
                }
                let m_out = m_in - ka - kb;
                let n_out = n_in - ka;
                let block =
                    blocks[m_out].get_or_insert_with(|| DMatrix::zeros(m_out + 1, m_out + 1));
                block[(n_out, n_out)] += C64::from(w_in * p * pa * pb);
            }
        }
    }
}

/// Kraus pass for a general density block.
fn accumulate_mixed(
    blocks: &mut [Option<DMatrix<C64>>],
    m_in: usize,
    w_in: f64,
    rho: &DMatrix<C64>,
    eta: f64,
) {
    for ka in 0..=m_in {
        for kb in 0..=(m_in - ka) {
            let m_out = m_in - ka - kb;
            let dim_out = m_out + 1;
            // T rho T^H with T the (sparse) shift-and-scale Kraus product.
            let coeffs: Vec<f64> = (0..dim_out)
                .map(|n_out| {
                    let n_in = n_out + ka;
                    let nb_in = m_in - n_in;
                    if nb_in < kb {
                        0.0
                    } else {
                        kraus_coeff(n_in, ka, eta) * kraus_coeff(nb_in, kb, eta)
                    }
                })
                .collect();
            if coeffs.iter().all(|&c| c == 0.0) {
                continue;
            }
            let block = blocks[m_out].get_or_insert_with(|| DMatrix::zeros(dim_out, dim_out));
            for i_out in 0..dim_out {
                if coeffs[i_out] == 0.0 {
                    continue;
                }
                for j_out in 0..dim_out {
                    if coeffs[j_out] == 0.0 {
                        continue;
                    }
                    let v = rho[(i_out + ka, j_out + ka)];
                    block[(i_out, j_out)] += v * C64::from(w_in * coeffs[i_out] * coeffs[j_out]);
                }
            }
        }
    }
}

/// Closed-form Dicke squeezing of an N-particle Dicke state after per-qubit
/// dephasing with rate `p`: `xi_D = 1 / [N(1-p) + 2 - p^2]`.
pub fn dephased_dicke_xi(n: usize, p: f64) -> Result<f64> {
    if n == 0 || n % 2 != 0 {
        return Err(Error::InvalidArgument(format!("particle number must be even, got {n}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("dephasing rate must be in [0,1], got {p}")));
    }
    Ok(1.0 / (n as f64 * (1.0 - p) + 2.0 - p * p))
}

/// Brute-force qubit-space check of the dephased-Dicke squeezing.
///
/// Builds the N-qubit Dicke state on 2^N basis states, applies the channel
/// `rho -> (1-p) rho + p (P_a rho P_a + P_b rho P_b)` to every qubit (the
/// dephased state leaves the symmetric subspace, so the two-mode sector
/// representation deliberately plays no part here) and evaluates Eq.-(2)
/// moments from the collective operators.
pub fn dephasing_qubit_oracle(n: usize, p: f64) -> Result<f64> {
    if n == 0 || n % 2 != 0 {
        return Err(Error::InvalidArgument(format!("particle number must be even, got {n}")));
    }
    if n > 12 {
        return Err(Error::ResourceLimit(format!(
            "qubit oracle is dense in 2^N; N={n} exceeds the N<=12 budget"
        )));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("dephasing rate must be in [0,1], got {p}")));
    }

    let dim: usize = 1 << n;
    let ones_target = n / 2;

    // Dicke state vector: equal weight on all strings with N/2 set bits
    // (bit set = mode a).
    let mut psi = vec![0.0f64; dim];
    let mut count = 0usize;
    for (r, slot) in psi.iter_mut().enumerate() {
        if (r as u64).count_ones() as usize == ones_target {
            *slot = 1.0;
            count += 1;
        }
    }
    let norm = (count as f64).sqrt();
    for a in psi.iter_mut() {
        *a /= norm;
    }

    // rho = |psi><psi|, then per-qubit dephasing scales every element by
    // (1-p) once per qubit on which row and column differ.
    let mut rho = vec![C64::new(0.0, 0.0); dim * dim];
    for r in 0..dim {
        if psi[r] == 0.0 {
            continue;
        }
        for c in 0..dim {
            if psi[c] != 0.0 {
                rho[r * dim + c] = C64::from(psi[r] * psi[c]);
            }
        }
    }
    for qubit in 0..n {
        let mask = 1usize << qubit;
        let damp = C64::from(1.0 - p);
        for r in 0..dim {
            for c in 0..dim {
                if (r ^ c) & mask != 0 {
                    rho[r * dim + c] *= damp;
                }
            }
        }
    }

    // <J_z>, <J_z^2> from the diagonal.
    let mut mz = 0.0;
    let mut mz2 = 0.0;
    for r in 0..dim {
        let w = rho[r * dim + r].re;
        let m = (r as u64).count_ones() as f64 - n as f64 / 2.0;
        mz += w * m;
        mz2 += w * m * m;
    }

    // <J_x^2 + J_y^2> = (<J_+ J_-> + <J_- J_+>)/2, with
    // J_+ J_- = sum_{i,k} sigma_+^i sigma_-^k evaluated element by element.
    let mut jpjm = 0.0;
    let mut jmjp = 0.0;
    for r in 0..dim {
        for k in 0..n {
            let bk = (r >> k) & 1;
            // sigma_+^i sigma_-^k |r>: needs bit k set
            if bk == 1 {
                let r1 = r & !(1 << k);
                for i in 0..n {
                    if i == k {
                        jpjm += rho[r * dim + r].re;
                        continue;
                    }
                    if (r1 >> i) & 1 == 0 {
                        let rp = r1 | (1 << i);
                        jpjm += rho[rp * dim + r].re;
                    }
                }
            } else {
                // sigma_-^i sigma_+^k |r>: needs bit k clear
                let r1 = r | (1 << k);
                for i in 0..n {
                    if i == k {
                        jmjp += rho[r * dim + r].re;
                        continue;
                    }
                    if (r1 >> i) & 1 == 1 {
                        let rp = r1 & !(1 << i);
                        jmjp += rho[rp * dim + r].re;
                    }
                }
            }
        }
    }
    let transverse = 0.5 * (jpjm + jmjp);
    if transverse <= 0.0 {
        return Err(Error::UndefinedMetric("vanishing <Jx^2 + Jy^2>".into()));
    }
    let var = mz2 - mz * mz;
    Ok(n as f64 * (var + 0.25) / transverse)
}

/// Total-probability check helper used by property tests.
pub fn weight_deviation(state: &SectoredState) -> f64 {
    (state.weight_sum() - 1.0).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::binomial_pmf;
    use crate::sector::SectorPureState;
    use crate::states::{dicke_state, lossy_dicke};
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_at_zero_loss() {
        let s = SectoredState::from_pure(dicke_state(6).unwrap());
        let out = loss_channel(&s, 0.0).unwrap();
        assert_eq!(out.sector_count(), 1);
        assert_eq!(out.max_particles(), 6);
    }

    #[test]
    fn dicke_two_loses_to_balanced_mixture() {
        // M=1 sector of a lossy N=2 Dicke state is diag(1/2, 1/2).
        let s = lossy_dicke(2, 0.25).unwrap();
        for (m, _, content) in s.sectors() {
            if m == 1 {
                let d = content.occupation_probabilities();
                assert_abs_diff_eq!(d[0], 0.5, epsilon = 1e-12);
                assert_abs_diff_eq!(d[1], 0.5, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn sector_weights_follow_product_binomials() {
        for &n in &[2usize, 10, 50] {
            let n0 = n / 2;
            for &eta in &[0.1, 0.3, 0.5] {
                let s = lossy_dicke(n, eta).unwrap();
                let mut got = vec![0.0; n + 1];
                for (m, w, _) in s.sectors() {
                    got[m] = w;
                }
                for m in 0..=n {
                    let mut want = 0.0;
                    // lose ka from mode a and kb from mode b, ka + kb = n - m
                    let lost = n - m;
                    for ka in 0..=lost.min(n0) {
                        let kb = lost - ka;
                        if kb > n0 {
                            continue;
                        }
                        want += binomial_pmf(n0, ka, eta) * binomial_pmf(n0, kb, eta);
                    }
                    assert_abs_diff_eq!(got[m], want, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn probability_preserved_across_eta_grid() {
        for i in 0..=10 {
            let eta = i as f64 / 10.0;
            let s = lossy_dicke(12, eta).unwrap();
            assert!(weight_deviation(&s) < 1e-12, "eta={eta}");
        }
    }

    #[test]
    fn channel_composition_law() {
        let s = SectoredState::from_pure(dicke_state(10).unwrap());
        let eta1 = 0.15;
        let eta2 = 0.25;
        let twice = loss_channel(&loss_channel(&s, eta1).unwrap(), eta2).unwrap();
        let once = loss_channel(&s, compose_loss_rates(eta1, eta2)).unwrap();
        let mut w_twice = vec![0.0; 11];
        let mut w_once = vec![0.0; 11];
        for (m, w, _) in twice.sectors() {
            w_twice[m] = w;
        }
        for (m, w, _) in once.sectors() {
            w_once[m] = w;
        }
        for m in 0..=10 {
            assert_abs_diff_eq!(w_twice[m], w_once[m], epsilon = 1e-10);
        }
        // block contents must agree too
        for ((m1, _, c1), (_, _, c2)) in twice.sectors().zip(once.sectors()) {
            let d1 = c1.occupation_probabilities();
            let d2 = c2.occupation_probabilities();
            for i in 0..=m1 {
                assert_abs_diff_eq!(d1[i], d2[i], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn loss_keeps_coherent_sector_coherent() {
        // a superposition state keeps off-diagonal structure in the top block
        let amps = nalgebra::DVector::from_vec(vec![
            C64::from(1.0 / 2f64.sqrt()),
            C64::new(0.0, 0.0),
            C64::from(1.0 / 2f64.sqrt()),
        ]);
        let s = SectoredState::from_pure(SectorPureState::new(2, amps).unwrap());
        let out = loss_channel(&s, 0.2).unwrap();
        for (m, _, content) in out.sectors() {
            if m == 2 {
                match content {
                    SectorContent::Mixed(rho) => {
                        assert!(rho.matrix()[(0, 2)].norm() > 0.1);
                    }
                    other => panic!("expected coherent block, got {other:?}"),
                }
            }
        }
    }

    #[test]
    fn closed_form_limits() {
        assert_abs_diff_eq!(dephased_dicke_xi(8, 0.0).unwrap(), 1.0 / 10.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dephased_dicke_xi(8, 1.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            dephased_dicke_xi(8, 0.3).unwrap(),
            1.0 / (8.0 * 0.7 + 2.0 - 0.09),
            epsilon = 1e-15
        );
    }

    #[test]
    fn closed_form_monotone_in_p() {
        for n in [4usize, 10, 100] {
            let mut last = 0.0;
            for i in 0..=10 {
                let p = i as f64 / 10.0;
                let v = dephased_dicke_xi(n, p).unwrap();
                assert!(v >= last, "not monotone at n={n}, p={p}");
                last = v;
            }
        }
    }

    #[test]
    fn oracle_no_noise_matches_ideal_dicke() {
        assert_abs_diff_eq!(dephasing_qubit_oracle(6, 0.0).unwrap(), 1.0 / 8.0, epsilon = 1e-10);
        assert_abs_diff_eq!(dephasing_qubit_oracle(4, 0.0).unwrap(), 1.0 / 6.0, epsilon = 1e-10);
    }

    #[test]
    fn oracle_matches_channel_algebra() {
        // For the per-qubit channel rho -> (1-p) rho + p diag_qubit(rho),
        // every two-bit coherence entering <Jx^2+Jy^2> is damped by (1-p)^2,
        // giving xi = 1 / (2 + N (1-p)^2). The oracle must reproduce this;
        // see the decisions ledger for how this relates to the closed form.
        for &(n, p) in &[(4usize, 0.25), (6, 0.5), (8, 0.75), (4, 1.0)] {
            let want = 1.0 / (2.0 + n as f64 * (1.0 - p) * (1.0 - p));
            assert_abs_diff_eq!(dephasing_qubit_oracle(n, p).unwrap(), want, epsilon = 1e-10);
        }
    }

    #[test]
    fn oracle_rejects_large_n() {
        match dephasing_qubit_oracle(14, 0.5) {
            Err(Error::ResourceLimit(_)) => {}
            other => panic!("expected ResourceLimit, got {other:?}"),
        }
    }
}
