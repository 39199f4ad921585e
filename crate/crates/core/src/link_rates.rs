//! Link-level SINRs and spectral efficiencies of the cooperative downlink.
//!
//! User N first decodes user F's message (then removes it via SIC) while
//! suffering residual full-duplex self-interference from its own relay
//! transmission; user F combines the BS and device-link branches with MRC.
//! The rate user F actually gets is bottlenecked by N's ability to decode
//! F's message.

use num_complex::Complex;

use crate::channel::{ChannelSet, MaPosition, SystemConfig};
use crate::error::{Error, Result};
use crate::problem::ConstraintSlacks;
use crate::scalar::Scalar;

/// The decision vector: two BS beamformers, the relay power at user N and
/// the three MA positions.
///
/// Raw RL proposals may violate the power budget or the mobility regions;
/// feasibility is judged by the constraint slacks, not here.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSolution<T> {
    /// Beamformer for user F's stream, one entry per BS antenna.
    pub w_f: Vec<Complex<T>>,
    /// Beamformer for user N's stream.
    pub w_n: Vec<Complex<T>>,
    /// Relay transmit power at user N \[W\].
    pub p_n: T,
    /// Transmit MA position at user N.
    pub t_d: MaPosition<T>,
    /// Receive MA position at user N.
    pub r_n: MaPosition<T>,
    /// Receive MA position at user F.
    pub r_f: MaPosition<T>,
}

impl<T: Scalar> CandidateSolution<T> {
    /// Total BS transmit power `‖w_F‖² + ‖w_N‖²`.
    pub fn bs_power(&self) -> T {
        vector_power(&self.w_f) + vector_power(&self.w_n)
    }
}

/// Squared norm of a complex vector.
pub fn vector_power<T: Scalar>(w: &[Complex<T>]) -> T {
    w.iter().map(|z| z.norm_sqr()).sum()
}

/// `|h^H w|²`: beamforming gain of `w` over channel `h`.
pub fn bf_gain<T: Scalar>(h: &[Complex<T>], w: &[Complex<T>]) -> T {
    debug_assert_eq!(h.len(), w.len());
    h.iter()
        .zip(w)
        .map(|(hi, wi)| hi.conj() * wi)
        .sum::<Complex<T>>()
        .norm_sqr()
}

/// SINR at user N decoding user F's message, before SIC: the own-stream
/// beam and the residual self-interference both act as noise.
pub fn sinr_decode_f_at_n<T: Scalar>(
    h_n: &[Complex<T>],
    w_f: &[Complex<T>],
    w_n: &[Complex<T>],
    p_n: T,
    h_si: Complex<T>,
    sigma2: T,
) -> T {
    bf_gain(h_n, w_f) / (bf_gain(h_n, w_n) + p_n * h_si.norm_sqr() + sigma2)
}

/// SINR at user N decoding its own message after SIC removed user F's
/// stream; only self-interference and noise remain.
pub fn sinr_own_at_n<T: Scalar>(
    h_n: &[Complex<T>],
    w_n: &[Complex<T>],
    p_n: T,
    h_si: Complex<T>,
    sigma2: T,
) -> T {
    bf_gain(h_n, w_n) / (p_n * h_si.norm_sqr() + sigma2)
}

/// MRC-combined SINR at user F: the BS branch (own beam over interference
/// from user N's beam) plus the device-link branch, added.
pub fn sinr_mrc_at_f<T: Scalar>(
    h_f: &[Complex<T>],
    w_f: &[Complex<T>],
    w_n: &[Complex<T>],
    p_n: T,
    h_d: Complex<T>,
    sigma2: T,
) -> T {
    bf_gain(h_f, w_f) / (bf_gain(h_f, w_n) + sigma2) + p_n * h_d.norm_sqr() / sigma2
}

/// Spectral efficiency `log₂(1 + Λ)` \[bits/s/Hz\].
pub fn rate<T: Scalar>(sinr: T) -> Result<T> {
    if sinr < T::zero() {
        return Err(Error::Domain("rate requires a non-negative SINR"));
    }
    Ok((T::one() + sinr).log2())
}

/// Every SINR, rate, constraint slack and the feasibility verdict for one
/// (channels, solution) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkEvaluation<T> {
    pub sinr_nf: T,
    pub sinr_nn: T,
    pub sinr_mrc: T,
    pub r_nf: T,
    pub r_nn: T,
    pub r_mrc: T,
    /// Rate actually delivered to user F: `min(r_mrc, r_nf)`.
    pub r_ff: T,
    /// Objective value `r_nn + r_ff`.
    pub sum_rate: T,
    pub slacks: ConstraintSlacks<T>,
    pub feasible: bool,
}

/// Evaluate all link rates and constraint slacks for one solution.
///
/// `h_si` is the scenario's self-interference channel (the one channel the
/// MA positions do not touch). A negative proposed relay power cannot be
/// transmitted, so the SINRs use the power clamped at zero while the slacks
/// keep the raw value and still flag the budget violation.
pub fn evaluate_links<T: Scalar>(
    channels: &ChannelSet<T>,
    sol: &CandidateSolution<T>,
    h_si: Complex<T>,
    config: &SystemConfig<T>,
) -> Result<LinkEvaluation<T>> {
    let n = config.n_bs_antennas;
    for (context, len) in [
        ("h_n", channels.h_n.len()),
        ("h_f", channels.h_f.len()),
        ("w_f", sol.w_f.len()),
        ("w_n", sol.w_n.len()),
    ] {
        if len != n {
            return Err(Error::ShapeMismatch {
                context,
                expected: n,
                got: len,
            });
        }
    }
    let p_phys = sol.p_n.max(T::zero());
    let sinr_nf = sinr_decode_f_at_n(&channels.h_n, &sol.w_f, &sol.w_n, p_phys, h_si, config.sigma2);
    let sinr_nn = sinr_own_at_n(&channels.h_n, &sol.w_n, p_phys, h_si, config.sigma2);
    let sinr_mrc = sinr_mrc_at_f(
        &channels.h_f,
        &sol.w_f,
        &sol.w_n,
        p_phys,
        channels.h_d,
        config.sigma2,
    );
    let r_nf = rate(sinr_nf)?;
    let r_nn = rate(sinr_nn)?;
    let r_mrc = rate(sinr_mrc)?;
    let r_ff = r_mrc.min(r_nf);
    let sum_rate = r_nn + r_ff;
    let slacks = crate::problem::slacks_from_rates(r_nn, r_ff, r_nf, sol, config);
    let feasible = slacks.is_feasible();
    Ok(LinkEvaluation {
        sinr_nf,
        sinr_nn,
        sinr_mrc,
        r_nf,
        r_nn,
        r_mrc,
        r_ff,
        sum_rate,
        slacks,
        feasible,
    })
}
