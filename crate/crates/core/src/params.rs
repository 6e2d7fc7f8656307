//! Mapping from microscopic cavity/atom parameters to the effective
//! Bose-Hubbard parameters of the dark-state polariton, plus the validity
//! diagnostics of that mapping and the drive ramp.

use crate::error::{Error, Result};

/// Default threshold for the "much smaller than one" validity ratios.
pub const DEFAULT_VALIDITY_THRESHOLD: f64 = 0.25;

/// Ratios above the threshold but below this limit are reported as marginal.
pub const VALIDITY_WARN_LIMIT: f64 = 1.0;

/// Microscopic parameters of one cavity and its atomic ensemble. Rates in 1/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Cavity mode frequency ω_C. Only enters the bare photonic Hamiltonian.
    pub omega_c: f64,
    /// Photon hopping prefactor 2ω_Cα.
    pub two_omega_alpha: f64,
    pub g13: f64,
    pub g24: f64,
    /// Laser Rabi frequency Ω_L.
    pub omega_l: f64,
    /// Level-4 detuning Δ.
    pub delta_cap: f64,
    /// Level-3 detuning δ.
    pub delta_small: f64,
    /// Two-photon detuning ε.
    pub epsilon: f64,
    pub n_atoms: u64,
    pub gamma_c: f64,
    pub gamma3: f64,
    pub gamma4: f64,
    /// Optional decay rate of the atomic (level 2) component of the dark polariton.
    pub gamma_dephase: f64,
}

impl PhysicalParams {
    /// Toroidal micro-cavity parameter set with Cs atoms.
    ///
    /// The level-3 detuning δ is not part of the published set; it is chosen
    /// so that the bright pair p₊p₋ (energy δ) is far from resonance with two
    /// dark polaritons (energy 0). ω_C is the Cs D2 line.
    pub fn toroidal_2005() -> Self {
        Self {
            omega_c: 2.21e15,
            two_omega_alpha: 1.1e7,
            g13: 2.5e9,
            g24: 2.5e9,
            omega_l: 7.8e10,
            delta_cap: -2.0e10,
            delta_small: -1.0e10,
            epsilon: 0.0,
            n_atoms: 1000,
            gamma_c: 0.4e5,
            gamma3: 1.6e7,
            gamma4: 1.6e7,
            gamma_dephase: 0.0,
        }
    }

    pub fn with_omega_l(self, omega_l: f64) -> Self {
        Self { omega_l, ..self }
    }

    /// Collective coupling g = √N·g13.
    pub fn collective_coupling(&self) -> f64 {
        (self.n_atoms as f64).sqrt() * self.g13
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("omega_c", self.omega_c),
            ("two_omega_alpha", self.two_omega_alpha),
            ("g13", self.g13),
            ("g24", self.g24),
            ("omega_l", self.omega_l),
            ("delta_cap", self.delta_cap),
            ("delta_small", self.delta_small),
            ("epsilon", self.epsilon),
            ("gamma_c", self.gamma_c),
            ("gamma3", self.gamma3),
            ("gamma4", self.gamma4),
            ("gamma_dephase", self.gamma_dephase),
        ];
        if let Some((name, _)) = named.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("{name} is not finite")));
        }
        if self.n_atoms == 0 {
            return Err(Error::InvalidParameter("n_atoms must be at least 1".into()));
        }
        for (name, v) in [
            ("gamma_c", self.gamma_c),
            ("gamma3", self.gamma3),
            ("gamma4", self.gamma4),
            ("gamma_dephase", self.gamma_dephase),
            ("omega_l", self.omega_l),
            ("g13", self.g13),
        ] {
            if v < 0.0 {
                return Err(Error::InvalidParameter(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self::toroidal_2005()
    }
}

/// Derived polariton quantities. Rates in 1/s; amplitudes dimensionless.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveParams {
    pub omega_l: f64,
    /// g = √N·g13
    pub g: f64,
    /// B = √(g² + Ω_L²)
    pub b: f64,
    /// A = √(4B² + δ²)
    pub a: f64,
    pub mu0: f64,
    pub mu_plus: f64,
    pub mu_minus: f64,
    /// On-site interaction κ; the interaction energy is κ·n(n−1).
    pub kappa: f64,
    /// Inter-cavity hopping J.
    pub hopping: f64,
    /// Dark-polariton loss rate Γ.
    pub gamma: f64,
    /// Energy shift ε·g²/B² per polariton.
    pub chem_shift: f64,
    /// Amplitude g/B of the collective atomic excitation in p0†.
    pub dark_atomic_amp: f64,
    /// Amplitude −Ω_L/B of the photon in p0†.
    pub dark_photonic_amp: f64,
}

impl EffectiveParams {
    pub fn kappa_over_gamma(&self) -> f64 {
        self.kappa / self.gamma
    }

    /// Photonic weight Ω_L²/B² of the dark polariton.
    pub fn photonic_weight(&self) -> f64 {
        self.dark_photonic_amp * self.dark_photonic_amp
    }
}

pub fn effective_parameters(p: &PhysicalParams) -> Result<EffectiveParams> {
    p.validate()?;
    let g = p.collective_coupling();
    let g_sq = g * g;
    let om_sq = p.omega_l * p.omega_l;
    let b_sq = g_sq + om_sq;
    if b_sq == 0.0 {
        return Err(Error::DegenerateCoupling);
    }
    let b = b_sq.sqrt();
    let a = (4.0 * b_sq + p.delta_small * p.delta_small).sqrt();

    let kappa = if p.g24 == 0.0 {
        0.0
    } else if p.delta_cap == 0.0 {
        return Err(Error::SingularDetuning);
    } else {
        -(p.g24 * p.g24 / p.delta_cap) * (g_sq * om_sq) / (b_sq * b_sq)
    };

    let photonic = om_sq / b_sq;
    let atomic = g_sq / b_sq;
    Ok(EffectiveParams {
        omega_l: p.omega_l,
        g,
        b,
        a,
        mu0: 0.0,
        mu_plus: (p.delta_small - a) / 2.0,
        mu_minus: (p.delta_small + a) / 2.0,
        kappa,
        hopping: p.two_omega_alpha * photonic,
        gamma: photonic * p.gamma_c + atomic * p.gamma_dephase,
        chem_shift: p.epsilon * atomic,
        dark_atomic_amp: g / b,
        dark_photonic_amp: -p.omega_l / b,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Valid,
    Marginal,
    Invalid,
}

/// Dimensionless ratios that must all be ≪ 1 for the polariton mapping to hold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidityReport {
    /// max(|g24|, |ε|, |Δ|) / min(|μ+|, |μ−|): no inter-species interaction.
    pub species_mixing: f64,
    /// √(n_p(n_p−1))·|g24| / |Δ|: level 4 treated perturbatively.
    pub perturbative: f64,
    /// |2ω_Cα| / min(|μ+|, |μ−|): hopping does not mix species.
    pub hopping_mixing: f64,
    /// 2|κ| / |δ|: two dark polaritons stay off resonance with the p₊p₋ pair,
    /// whose energy is μ₊ + μ₋ = δ.
    pub pair_resonance: f64,
    pub threshold: f64,
}

impl ValidityReport {
    pub fn max_ratio(&self) -> f64 {
        [
            self.species_mixing,
            self.perturbative,
            self.hopping_mixing,
            self.pair_resonance,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn verdict(&self) -> Verdict {
        let worst = self.max_ratio();
        if worst <= self.threshold {
            Verdict::Valid
        } else if worst <= VALIDITY_WARN_LIMIT {
            Verdict::Marginal
        } else {
            Verdict::Invalid
        }
    }

    pub fn passes(&self) -> bool {
        self.verdict() == Verdict::Valid
    }
}

pub fn validity_report(p: &PhysicalParams, n_p: u32) -> Result<ValidityReport> {
    validity_report_with(p, n_p, DEFAULT_VALIDITY_THRESHOLD)
}

pub fn validity_report_with(p: &PhysicalParams, n_p: u32, threshold: f64) -> Result<ValidityReport> {
    let eff = effective_parameters(p)?;
    let gap = eff.mu_plus.abs().min(eff.mu_minus.abs());
    let perturbation = p.g24.abs().max(p.epsilon.abs()).max(p.delta_cap.abs());
    let perturbative = if n_p < 2 || p.g24 == 0.0 {
        0.0
    } else {
        let n = n_p as f64;
        (n * (n - 1.0)).sqrt() * p.g24.abs() / p.delta_cap.abs()
    };
    let pair_resonance = if n_p < 2 || eff.kappa == 0.0 {
        0.0
    } else if p.delta_small == 0.0 {
        f64::INFINITY
    } else {
        2.0 * eff.kappa.abs() / p.delta_small.abs()
    };
    Ok(ValidityReport {
        species_mixing: perturbation / gap,
        perturbative,
        hopping_mixing: p.two_omega_alpha.abs() / gap,
        pair_resonance,
        threshold,
    })
}

/// Adiabaticity ratio (g/B²)·|dΩ_L/dt| / min(|μ+|, |μ−|) for switching the drive;
/// the switch is adiabatic when this is ≪ 1.
pub fn adiabatic_margin(p: &PhysicalParams, omega_slope: f64) -> Result<f64> {
    let eff = effective_parameters(p)?;
    let gap = eff.mu_plus.abs().min(eff.mu_minus.abs());
    Ok(eff.g / (eff.b * eff.b) * omega_slope.abs() / gap)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RampShape {
    Linear,
    /// Log-linear in time.
    #[default]
    Exponential,
}

/// Time-dependent Rabi frequency Ω_L(t) on `[0, duration]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RampSchedule {
    pub omega_start: f64,
    pub omega_end: f64,
    pub duration: f64,
    pub shape: RampShape,
}

/// Default ramp duration in seconds.
pub const DEFAULT_RAMP_DURATION: f64 = 1e-6;

impl RampSchedule {
    pub fn new(omega_start: f64, omega_end: f64, duration: f64, shape: RampShape) -> Result<Self> {
        if !(duration > 0.0) || !duration.is_finite() {
            return Err(Error::NonPositiveDuration(duration));
        }
        for (name, v) in [("omega_start", omega_start), ("omega_end", omega_end)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self {
            omega_start,
            omega_end,
            duration,
            shape,
        })
    }

    /// Exponential ramp 7.8e10 → 1.1e12 /s over 1 µs.
    pub fn toroidal_default() -> Self {
        Self {
            omega_start: 7.8e10,
            omega_end: 1.1e12,
            duration: DEFAULT_RAMP_DURATION,
            shape: RampShape::Exponential,
        }
    }

    fn check_time(&self, t: f64) -> Result<f64> {
        // stage times can overshoot the end by a rounding error
        let slack = self.duration * 1e-12;
        if !(t >= -slack && t <= self.duration + slack) {
            return Err(Error::TimeOutOfRange {
                t,
                duration: self.duration,
            });
        }
        Ok(t.clamp(0.0, self.duration))
    }

    pub fn omega_at(&self, t: f64) -> Result<f64> {
        let t = self.check_time(t)?;
        if t == self.duration {
            return Ok(self.omega_end);
        }
        let s = t / self.duration;
        Ok(match self.shape {
            RampShape::Linear => self.omega_start + (self.omega_end - self.omega_start) * s,
            RampShape::Exponential => self.omega_start * (self.omega_end / self.omega_start).powf(s),
        })
    }

    /// dΩ_L/dt at time `t`.
    pub fn slope_at(&self, t: f64) -> Result<f64> {
        Ok(match self.shape {
            RampShape::Linear => {
                self.check_time(t)?;
                (self.omega_end - self.omega_start) / self.duration
            }
            RampShape::Exponential => {
                self.omega_at(t)? * (self.omega_end / self.omega_start).ln() / self.duration
            }
        })
    }
}

pub fn make_ramp(omega_start: f64, omega_end: f64, duration: f64, shape: RampShape) -> Result<RampSchedule> {
    RampSchedule::new(omega_start, omega_end, duration, shape)
}

/// Effective parameters with the drive frozen at Ω_L(t); everything else constant.
pub fn params_at_time(p: &PhysicalParams, ramp: &RampSchedule, t: f64) -> Result<EffectiveParams> {
    effective_parameters(&p.with_omega_l(ramp.omega_at(t)?))
}
