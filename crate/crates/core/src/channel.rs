//! Field-response channel synthesis.
//!
//! A frozen [`ScenarioRealization`] pins the path angles, the path response
//! matrices (PRMs) and the self-interference channel of the three links
//! (BS→N, BS→F, N→F). Moving an antenna within a scenario only changes the
//! field response vectors; angles and path gains stay fixed, which is what
//! makes per-episode antenna placement a well-posed optimization variable.

use ndarray::{Array1, Array2};
use num_complex::Complex;
use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Static system parameters: geometry, path counts, budgets, noise.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig<T> {
    /// Number of BS antennas.
    pub n_bs_antennas: usize,
    /// Carrier wavelength \[m\].
    pub wavelength: T,
    /// Transmit path count of the BS→user links.
    pub l_b: usize,
    /// Transmit path count of the N→F device link.
    pub l_a: usize,
    /// Receive path count at both users.
    pub l_r: usize,
    /// Side of each MA mobility square \[m\].
    pub region_side: T,
    /// Path-loss exponent.
    pub alpha: T,
    /// Total noise power \[W\].
    pub sigma2: T,
    /// BS transmit power budget \[W\].
    pub p_t: T,
    /// Relay transmit power budget at user N \[W\].
    pub p_nf: T,
    /// Per-user QoS rate threshold \[bits/s/Hz\].
    pub r_th: T,
    /// Reference path gain at 1 m (linear).
    pub g0: T,
    /// Residual self-interference variance (linear).
    pub omega_si2: T,
    /// BS→N link distance \[m\].
    pub d_bn: T,
    /// BS→F link distance \[m\].
    pub d_bf: T,
    /// N→F link distance \[m\].
    pub d_nf: T,
}

impl<T: Scalar> Default for SystemConfig<T> {
    /// Desk-scale defaults: 4-antenna BS, 6 paths per link end, 2λ mobility
    /// squares, 15 dBm BS budget, 10 dBm relay budget, −100 dBm noise.
    fn default() -> Self {
        let wavelength = T::of(0.01);
        SystemConfig {
            n_bs_antennas: 4,
            wavelength,
            l_b: 6,
            l_a: 6,
            l_r: 6,
            region_side: T::of(2.0) * wavelength,
            alpha: T::of(3.9),
            sigma2: crate::units::dbm_to_watts(T::of(-100.0)),
            p_t: crate::units::dbm_to_watts(T::of(15.0)),
            p_nf: crate::units::dbm_to_watts(T::of(10.0)),
            r_th: T::of(0.7),
            g0: crate::units::db_to_linear(T::of(-40.0)),
            // full relay power puts residual self-interference at the noise
            // floor, which keeps cooperation a live trade-off
            omega_si2: crate::units::db_to_linear(T::of(-110.0)),
            d_bn: T::of(50.0),
            d_bf: T::of(100.0),
            d_nf: T::of(50.0),
        }
    }
}

impl<T: Scalar> SystemConfig<T> {
    pub fn validate(&self) -> Result<()> {
        fn err(msg: impl Into<String>) -> Result<()> {
            Err(Error::Config(msg.into()))
        }
        if self.n_bs_antennas < 1 {
            return err("n_bs_antennas must be >= 1");
        }
        if self.l_b < 1 || self.l_a < 1 || self.l_r < 1 {
            return err("path counts l_b, l_a, l_r must be >= 1");
        }
        let zero = T::zero();
        if !(self.wavelength > zero) {
            return err("wavelength must be > 0");
        }
        if !(self.region_side > zero) {
            return err("region_side must be > 0");
        }
        if !(self.alpha > T::of(2.0)) {
            return err("alpha must be > 2");
        }
        if !(self.sigma2 > zero) || !(self.p_t > zero) || !(self.p_nf > zero) {
            return err("sigma2, p_t and p_nf must be > 0");
        }
        if !(self.r_th >= zero) {
            return err("r_th must be >= 0");
        }
        if !(self.g0 > zero) || !(self.omega_si2 > zero) {
            return err("g0 and omega_si2 must be > 0");
        }
        if !(self.d_bn > zero) || !(self.d_bf > zero) || !(self.d_nf > zero) {
            return err("link distances must be > 0");
        }
        Ok(())
    }

    /// Mean channel gain per BS antenna (or per device link) at distance `d`.
    pub fn link_gain(&self, d: T) -> T {
        self.g0 * d.powf(-self.alpha)
    }

    /// Fixed BS array: uniform linear, λ/2 spacing along x.
    pub fn bs_array(&self) -> Vec<MaPosition<T>> {
        let half = self.wavelength / T::of(2.0);
        (0..self.n_bs_antennas)
            .map(|n| MaPosition::new(T::of(n as f64) * half, T::zero()))
            .collect()
    }

    /// Center of the mobility square.
    pub fn region_center(&self) -> MaPosition<T> {
        let half = self.region_side / T::of(2.0);
        MaPosition::new(half, half)
    }
}

/// 2-D antenna position \[m\].
///
/// No intrinsic invariant: the reward design deliberately permits infeasible
/// proposals, so membership in the mobility square is checked downstream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaPosition<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> MaPosition<T> {
    pub fn new(x: T, y: T) -> Self {
        MaPosition { x, y }
    }

    pub fn origin() -> Self {
        MaPosition::new(T::zero(), T::zero())
    }

    pub fn distance(&self, other: &Self) -> T {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }
}

/// Elevation/azimuth angles of the paths at one end of a link.
#[derive(Debug, Clone, PartialEq)]
pub struct PathAngleSet<T> {
    /// Elevation per path, in \[0, π).
    pub elevation: Vec<T>,
    /// Azimuth per path, in \[0, 2π).
    pub azimuth: Vec<T>,
}

impl<T: Scalar> PathAngleSet<T> {
    pub fn new(elevation: Vec<T>, azimuth: Vec<T>) -> Result<Self> {
        if elevation.len() != azimuth.len() {
            return Err(Error::ShapeMismatch {
                context: "path angle set",
                expected: elevation.len(),
                got: azimuth.len(),
            });
        }
        Ok(PathAngleSet { elevation, azimuth })
    }

    pub fn len(&self) -> usize {
        self.elevation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elevation.is_empty()
    }

    /// i.i.d. uniform draw: elevation over \[0, π), azimuth over \[0, 2π).
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, paths: usize) -> Self {
        let elevation = (0..paths).map(|_| rng.random_range(T::zero()..T::PI())).collect();
        let azimuth = (0..paths)
            .map(|_| rng.random_range(T::zero()..T::of(2.0) * T::PI()))
            .collect();
        PathAngleSet { elevation, azimuth }
    }

    fn iter(&self) -> impl Iterator<Item = (T, T)> + '_
    where
        T: Copy,
    {
        self.elevation.iter().copied().zip(self.azimuth.iter().copied())
    }
}

/// The transmit- and receive-side angle sets of one link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkAngles<T> {
    pub tx: PathAngleSet<T>,
    pub rx: PathAngleSet<T>,
}

impl<T: Scalar> LinkAngles<T> {
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, tx_paths: usize, rx_paths: usize) -> Self {
        LinkAngles {
            tx: PathAngleSet::sample(rng, tx_paths),
            rx: PathAngleSet::sample(rng, rx_paths),
        }
    }
}

/// One frozen random draw of everything the environment holds fixed within an
/// episode: angles, PRMs, the self-interference channel and the BS array.
///
/// Constructed through [`ScenarioRealization::new`] (or [`sample_scenario`]),
/// which also precomputes the position-independent `Σ·G` products of the two
/// BS links; the fields themselves are read-only.
#[derive(Debug, Clone)]
pub struct ScenarioRealization<T> {
    pub angles_bn: LinkAngles<T>,
    pub angles_bf: LinkAngles<T>,
    pub angles_nf: LinkAngles<T>,
    /// PRM of the BS→N link, `l_r × l_b`.
    pub prm_bn: Array2<Complex<T>>,
    /// PRM of the BS→F link, `l_r × l_b`.
    pub prm_bf: Array2<Complex<T>>,
    /// PRM of the N→F link, `l_r × l_a`.
    pub prm_nf: Array2<Complex<T>>,
    /// Self-interference channel at user N.
    pub h_si: Complex<T>,
    /// Fixed BS antenna positions.
    pub bs_antenna_positions: Vec<MaPosition<T>>,
    // Σ·G for the two BS links (`l_r × n`); G only involves the fixed BS
    // array, so these never change within a scenario.
    prm_g_bn: Array2<Complex<T>>,
    prm_g_bf: Array2<Complex<T>>,
}

/// Which BS→user link to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UserLink {
    Near,
    Far,
}

impl<T: Scalar> ScenarioRealization<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        angles_bn: LinkAngles<T>,
        angles_bf: LinkAngles<T>,
        angles_nf: LinkAngles<T>,
        prm_bn: Array2<Complex<T>>,
        prm_bf: Array2<Complex<T>>,
        prm_nf: Array2<Complex<T>>,
        h_si: Complex<T>,
        bs_antenna_positions: Vec<MaPosition<T>>,
        wavelength: T,
    ) -> Result<Self> {
        check_link_shapes("BS→N", &angles_bn, &prm_bn)?;
        check_link_shapes("BS→F", &angles_bf, &prm_bf)?;
        check_link_shapes("N→F", &angles_nf, &prm_nf)?;
        if prm_bn.ncols() != prm_bf.ncols() || prm_bn.nrows() != prm_bf.nrows() {
            return Err(Error::Config("BS links must share path counts".into()));
        }
        let prm_g_bn = prm_g_product(&prm_bn, &angles_bn.tx, &bs_antenna_positions, wavelength);
        let prm_g_bf = prm_g_product(&prm_bf, &angles_bf.tx, &bs_antenna_positions, wavelength);
        Ok(ScenarioRealization {
            angles_bn,
            angles_bf,
            angles_nf,
            prm_bn,
            prm_bf,
            prm_nf,
            h_si,
            bs_antenna_positions,
            prm_g_bn,
            prm_g_bf,
        })
    }

    fn check_against(&self, config: &SystemConfig<T>) -> Result<()> {
        let checks = [
            ("BS antennas", self.bs_antenna_positions.len(), config.n_bs_antennas),
            ("BS→N tx paths", self.prm_bn.ncols(), config.l_b),
            ("BS→N rx paths", self.prm_bn.nrows(), config.l_r),
            ("BS→F tx paths", self.prm_bf.ncols(), config.l_b),
            ("BS→F rx paths", self.prm_bf.nrows(), config.l_r),
            ("N→F tx paths", self.prm_nf.ncols(), config.l_a),
            ("N→F rx paths", self.prm_nf.nrows(), config.l_r),
        ];
        for (context, got, expected) in checks {
            if got != expected {
                return Err(Error::ShapeMismatch { context, expected, got });
            }
        }
        Ok(())
    }
}

fn check_link_shapes<T: Scalar>(
    link: &'static str,
    angles: &LinkAngles<T>,
    prm: &Array2<Complex<T>>,
) -> Result<()> {
    if angles.tx.len() != prm.ncols() {
        return Err(Error::ShapeMismatch {
            context: link,
            expected: prm.ncols(),
            got: angles.tx.len(),
        });
    }
    if angles.rx.len() != prm.nrows() {
        return Err(Error::ShapeMismatch {
            context: link,
            expected: prm.nrows(),
            got: angles.rx.len(),
        });
    }
    Ok(())
}

fn prm_g_product<T: Scalar>(
    prm: &Array2<Complex<T>>,
    tx_angles: &PathAngleSet<T>,
    bs_positions: &[MaPosition<T>],
    wavelength: T,
) -> Array2<Complex<T>> {
    let mut out = Array2::zeros((prm.nrows(), bs_positions.len()));
    for (n, antenna) in bs_positions.iter().enumerate() {
        let g = frv(*antenna, tx_angles, wavelength);
        let col = prm.dot(&g);
        out.column_mut(n).assign(&col);
    }
    out
}

/// The three synthesized channels at a given set of MA positions.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet<T> {
    /// BS→N channel, one entry per BS antenna.
    pub h_n: Vec<Complex<T>>,
    /// BS→F channel, one entry per BS antenna.
    pub h_f: Vec<Complex<T>>,
    /// N→F device-to-device channel.
    pub h_d: Complex<T>,
}

/// Signal propagation difference of one path for an antenna displaced to
/// `pos` from its origin: `x·cos(θ)·sin(φ) + y·sin(θ)`.
pub fn propagation_difference<T: Scalar>(pos: MaPosition<T>, elevation: T, azimuth: T) -> T {
    pos.x * elevation.cos() * azimuth.sin() + pos.y * elevation.sin()
}

/// Field response vector at `pos`: entry k is `exp(-j·2π/λ·ρ_k)`, one per
/// path. Every entry has unit modulus by construction.
pub fn frv<T: Scalar>(pos: MaPosition<T>, angles: &PathAngleSet<T>, wavelength: T) -> Array1<Complex<T>> {
    let wavenumber = T::of(2.0) * T::PI() / wavelength;
    angles
        .iter()
        .map(|(elevation, azimuth)| {
            let rho = propagation_difference(pos, elevation, azimuth);
            Complex::from_polar(T::one(), -wavenumber * rho)
        })
        .collect()
}

/// Draw a fresh scenario: uniform path angles, complex-Gaussian PRM entries
/// scaled so the expected per-antenna channel gain equals `g0·d^(−α)`, and a
/// complex-Gaussian self-interference channel of variance `omega_si2`.
///
/// Deterministic given the RNG state; the draw order is part of the
/// reproducibility contract.
pub fn sample_scenario<T: Scalar, R: Rng + ?Sized>(
    config: &SystemConfig<T>,
    rng: &mut R,
) -> ScenarioRealization<T> {
    let angles_bn = LinkAngles::sample(rng, config.l_b, config.l_r);
    let angles_bf = LinkAngles::sample(rng, config.l_b, config.l_r);
    let angles_nf = LinkAngles::sample(rng, config.l_a, config.l_r);
    let prm_bn = sample_prm(rng, config.l_r, config.l_b, config.link_gain(config.d_bn));
    let prm_bf = sample_prm(rng, config.l_r, config.l_b, config.link_gain(config.d_bf));
    let prm_nf = sample_prm(rng, config.l_r, config.l_a, config.link_gain(config.d_nf));
    let h_si = complex_gaussian(rng, config.omega_si2);
    ScenarioRealization::new(
        angles_bn,
        angles_bf,
        angles_nf,
        prm_bn,
        prm_bf,
        prm_nf,
        h_si,
        config.bs_array(),
        config.wavelength,
    )
    .expect("sampled scenario is shape-consistent")
}

/// PRM with i.i.d. circularly-symmetric complex Gaussian entries of total
/// link variance `gain`, i.e. per-entry variance `gain/(rows·cols)`.
fn sample_prm<T: Scalar, R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    gain: T,
) -> Array2<Complex<T>> {
    let entry_var = gain / T::of((rows * cols) as f64);
    let data: Vec<Complex<T>> = (0..rows * cols)
        .map(|_| complex_gaussian(rng, entry_var))
        .collect();
    Array2::from_shape_vec((rows, cols), data).expect("rows*cols entries")
}

/// Circularly-symmetric complex Gaussian with variance `var`.
fn complex_gaussian<T: Scalar, R: Rng + ?Sized>(rng: &mut R, var: T) -> Complex<T> {
    let comp_std = (var / T::of(2.0)).sqrt();
    let re = T::standard_normal(rng) * comp_std;
    let im = T::standard_normal(rng) * comp_std;
    Complex::new(re, im)
}

/// Assemble one BS→user channel at the user's receive MA position:
/// `h = fᵀ·Σ·G`, one complex entry per BS antenna.
pub fn assemble_bs_user_channel<T: Scalar>(
    scenario: &ScenarioRealization<T>,
    user_rx_pos: MaPosition<T>,
    link: UserLink,
    config: &SystemConfig<T>,
) -> Result<Vec<Complex<T>>> {
    scenario.check_against(config)?;
    let (angles, prm_g) = match link {
        UserLink::Near => (&scenario.angles_bn, &scenario.prm_g_bn),
        UserLink::Far => (&scenario.angles_bf, &scenario.prm_g_bf),
    };
    let f = frv(user_rx_pos, &angles.rx, config.wavelength);
    Ok(f.dot(prm_g).to_vec())
}

/// Assemble the device-to-device channel `h_d = f̂ᵀ·Σ·g` for the given
/// transmit (user N) and receive (user F) MA positions.
pub fn assemble_d2d_channel<T: Scalar>(
    scenario: &ScenarioRealization<T>,
    tx_pos: MaPosition<T>,
    rx_pos: MaPosition<T>,
    config: &SystemConfig<T>,
) -> Result<Complex<T>> {
    scenario.check_against(config)?;
    let f = frv(rx_pos, &scenario.angles_nf.rx, config.wavelength);
    let g = frv(tx_pos, &scenario.angles_nf.tx, config.wavelength);
    Ok(f.dot(&scenario.prm_nf.dot(&g)))
}

/// All three channels for one (t_d, r_N, r_F) placement.
pub fn assemble_channels<T: Scalar>(
    scenario: &ScenarioRealization<T>,
    t_d: MaPosition<T>,
    r_n: MaPosition<T>,
    r_f: MaPosition<T>,
    config: &SystemConfig<T>,
) -> Result<ChannelSet<T>> {
    Ok(ChannelSet {
        h_n: assemble_bs_user_channel(scenario, r_n, UserLink::Near, config)?,
        h_f: assemble_bs_user_channel(scenario, r_f, UserLink::Far, config)?,
        h_d: assemble_d2d_channel(scenario, t_d, r_f, config)?,
    })
}
