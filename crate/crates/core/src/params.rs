//! Physical parameters of the two-mode device and the pump-laser drive.
//!
//! Every rate is stored as an angular frequency (rad/s). Values quoted in
//! cyclic units go through [`to_angular`] exactly once, at the boundary.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant (CODATA 2018), J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Converts a cyclic frequency (Hz) to an angular frequency (rad/s).
pub fn to_angular(cyclic: f64) -> Result<f64> {
    if !cyclic.is_finite() || cyclic < 0.0 {
        return Err(Error::param(
            "frequency",
            format!("expected finite non-negative Hz, got {cyclic}"),
        ));
    }
    Ok(2.0 * PI * cyclic)
}

/// Pump amplitude `|E| = sqrt(2 P kappa / (hbar omega))` for a laser of
/// power `power` (W) and angular frequency `omega_laser` driving a cavity of
/// total linewidth `kappa`.
pub fn drive_amplitude(power: f64, kappa: f64, omega_laser: f64) -> Result<f64> {
    AmplitudeConvention::Literal.amplitude(power, kappa, omega_laser)
}

/// How pump power maps onto the drive amplitude `E`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AmplitudeConvention {
    /// `|E|^2 = 2 P kappa / (hbar omega)`.
    #[default]
    Literal,
    /// `|E|^2 = P / (hbar omega)`, the incident photon flux.
    Flux,
}

impl AmplitudeConvention {
    pub fn amplitude(self, power: f64, kappa: f64, omega_laser: f64) -> Result<f64> {
        if !power.is_finite() || power < 0.0 {
            return Err(Error::param("power", format!("expected finite P >= 0, got {power}")));
        }
        if !kappa.is_finite() || kappa <= 0.0 {
            return Err(Error::param("kappa", format!("expected finite kappa > 0, got {kappa}")));
        }
        if !omega_laser.is_finite() || omega_laser <= 0.0 {
            return Err(Error::param(
                "omega_laser",
                format!("expected finite laser frequency > 0, got {omega_laser}"),
            ));
        }
        let flux = power / (HBAR * omega_laser);
        Ok(match self {
            AmplitudeConvention::Literal => (2.0 * kappa * flux).sqrt(),
            AmplitudeConvention::Flux => flux.sqrt(),
        })
    }
}

/// Sign with which the second cavity's intensity enters the mechanical force.
///
/// `Plus` is the physical radiation-pressure balance. `MinusAsPrinted`
/// reproduces the `(g1 n1 - g2 n2)` combination of the printed photon-number
/// equations, for comparison only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignConvention {
    #[default]
    Plus,
    #[serde(rename = "minus")]
    MinusAsPrinted,
}

impl SignConvention {
    /// Factor multiplying the `g2 n2` term.
    pub fn second_cavity_factor(self) -> f64 {
        match self {
            SignConvention::Plus => 1.0,
            SignConvention::MinusAsPrinted => -1.0,
        }
    }
}

/// Whether the quoted `kappa2 = 1.73 GHz` carries an implicit 2π.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kappa2Interpretation {
    /// `kappa2 = 2π × 1.73e9 rad/s`, like every other quoted rate.
    #[default]
    Angular,
    /// `kappa2 = 1.73e9 rad/s`, the number exactly as written.
    Literal,
}

/// Fixed physical rates of the device. All frequencies in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub omega1: f64,
    pub omega2: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa_e1: f64,
    pub kappa_e2: f64,
    pub g1: f64,
    pub g2: f64,
    pub omega_m: f64,
    pub q_m: f64,
    gamma_m: f64,
    pub sign: SignConvention,
    pub amplitude: AmplitudeConvention,
}

impl SystemParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        omega1: f64,
        omega2: f64,
        kappa1: f64,
        kappa2: f64,
        kappa_e1: f64,
        kappa_e2: f64,
        g1: f64,
        g2: f64,
        omega_m: f64,
        q_m: f64,
    ) -> Result<Self> {
        let p = SystemParams {
            omega1,
            omega2,
            kappa1,
            kappa2,
            kappa_e1,
            kappa_e2,
            g1,
            g2,
            omega_m,
            q_m,
            gamma_m: omega_m / q_m,
            sign: SignConvention::Plus,
            amplitude: AmplitudeConvention::Literal,
        };
        p.validate()?;
        Ok(p)
    }

    /// Re-derives `gamma_m` and checks every invariant. Call after mutating
    /// public fields.
    pub fn revalidated(mut self) -> Result<Self> {
        self.gamma_m = self.omega_m / self.q_m;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let positive = [
            ("omega1", self.omega1),
            ("omega2", self.omega2),
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
            ("kappa_e1", self.kappa_e1),
            ("kappa_e2", self.kappa_e2),
            ("omega_m", self.omega_m),
            ("q_m", self.q_m),
        ];
        for (name, v) in positive {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::param(name, format!("must be finite and > 0, got {v}")));
            }
        }
        // Couplings may be switched off for decoupled controls.
        for (name, v) in [("g1", self.g1), ("g2", self.g2)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::param(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        if self.kappa_e1 > self.kappa1 {
            return Err(Error::param("kappa_e1", "external rate exceeds total linewidth"));
        }
        if self.kappa_e2 > self.kappa2 {
            return Err(Error::param("kappa_e2", "external rate exceeds total linewidth"));
        }
        Ok(())
    }

    /// Mechanical damping `omega_m / q_m`.
    pub fn gamma_m(&self) -> f64 {
        self.gamma_m
    }

    /// True when both cavities are in the good-cavity limit `omega_m > kappa_k`.
    pub fn resolved_sideband(&self) -> bool {
        self.omega_m > self.kappa1 && self.omega_m > self.kappa2
    }

    pub fn with_sign(mut self, sign: SignConvention) -> Self {
        self.sign = sign;
        self
    }

    pub fn with_amplitude(mut self, amplitude: AmplitudeConvention) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn with_couplings(mut self, g1: f64, g2: f64) -> Result<Self> {
        self.g1 = g1;
        self.g2 = g2;
        self.revalidated()
    }
}

/// The device of the cited two-mode experiment.
pub fn preset_hill_params() -> SystemParams {
    preset_hill_params_with(Kappa2Interpretation::Angular)
}

pub fn preset_hill_params_with(kappa2: Kappa2Interpretation) -> SystemParams {
    let tp = 2.0 * PI;
    let kappa1 = tp * 520e6;
    let kappa2 = match kappa2 {
        Kappa2Interpretation::Angular => tp * 1.73e9,
        Kappa2Interpretation::Literal => 1.73e9,
    };
    SystemParams::new(
        tp * 205.3e12,
        tp * 194.1e12,
        kappa1,
        kappa2,
        0.2 * kappa1,
        0.42 * kappa2,
        tp * 960e3,
        tp * 430e3,
        tp * 4e9,
        87e3,
    )
    .expect("preset parameters are valid")
}

/// One operating point of the two pump lasers.
///
/// Amplitudes are derived from the powers and the pump frequencies
/// `omega_k - delta_k`, so a `DrivePoint` is tied to the [`SystemParams`] it
/// was built with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrivePoint {
    delta1: f64,
    delta2: f64,
    power_l: f64,
    power_r: f64,
    amp_l: f64,
    amp_r: f64,
}

impl DrivePoint {
    pub fn new(
        params: &SystemParams,
        delta1: f64,
        delta2: f64,
        power_l: f64,
        power_r: f64,
    ) -> Result<Self> {
        for (name, v) in [("delta1", delta1), ("delta2", delta2)] {
            if !v.is_finite() {
                return Err(Error::param(name, format!("must be finite, got {v}")));
            }
        }
        let conv = params.amplitude;
        let amp_l = conv.amplitude(power_l, params.kappa1, params.omega1 - delta1)?;
        let amp_r = conv.amplitude(power_r, params.kappa2, params.omega2 - delta2)?;
        Ok(DrivePoint {
            delta1,
            delta2,
            power_l,
            power_r,
            amp_l,
            amp_r,
        })
    }

    /// Rebuilds the point against (possibly different) parameters.
    pub fn rebind(&self, params: &SystemParams) -> Result<Self> {
        DrivePoint::new(params, self.delta1, self.delta2, self.power_l, self.power_r)
    }

    pub fn delta1(&self) -> f64 {
        self.delta1
    }
    pub fn delta2(&self) -> f64 {
        self.delta2
    }
    pub fn power_l(&self) -> f64 {
        self.power_l
    }
    pub fn power_r(&self) -> f64 {
        self.power_r
    }
    pub fn amp_l(&self) -> f64 {
        self.amp_l
    }
    pub fn amp_r(&self) -> f64 {
        self.amp_r
    }

    pub fn with_delta1(&self, params: &SystemParams, v: f64) -> Result<Self> {
        DrivePoint::new(params, v, self.delta2, self.power_l, self.power_r)
    }
    pub fn with_delta2(&self, params: &SystemParams, v: f64) -> Result<Self> {
        DrivePoint::new(params, self.delta1, v, self.power_l, self.power_r)
    }
    pub fn with_power_l(&self, params: &SystemParams, v: f64) -> Result<Self> {
        DrivePoint::new(params, self.delta1, self.delta2, v, self.power_r)
    }
    pub fn with_power_r(&self, params: &SystemParams, v: f64) -> Result<Self> {
        DrivePoint::new(params, self.delta1, self.delta2, self.power_l, v)
    }

    pub fn is_undriven(&self) -> bool {
        self.amp_l == 0.0 && self.amp_r == 0.0
    }
}
