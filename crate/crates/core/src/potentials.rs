//! Pair weights Φ and their tail dominators.
//!
//! Energies are `f64` with `f64::INFINITY` standing for +∞. Sums of
//! nonnegative terms never produce NaN, and [`boltzmann`] maps +∞ to an
//! exact zero.

use crate::error::{domain, Result};
use serde::{Deserialize, Serialize};

/// Shipped potential families.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    /// Φ ≡ 0.
    None,
    /// +∞ below `a`, 0 beyond.
    HardCore { a: f64 },
    /// `amplitude · exp(-x²/(2σ²))`.
    Gaussian { amplitude: f64, sigma: f64 },
    /// `amplitude` on `[0, a)`, 0 beyond.
    CompactBump { amplitude: f64, a: f64 },
}

/// An evaluable interaction weight with optional cutoff.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Potential {
    family: Family,
    r_cut: Option<f64>,
}

impl Potential {
    /// Validate parameters. `r_cut` defaults to none for gaussian and to `a`
    /// for the compact families.
    pub fn new(family: Family, r_cut: Option<f64>) -> Result<Self> {
        let pos = |name: &str, v: f64| -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                domain(format!("potential parameter {name} must be positive and finite, got {v}"))
            }
        };
        match family {
            Family::None => {}
            Family::HardCore { a } => pos("a", a)?,
            Family::Gaussian { amplitude, sigma } => {
                pos("amplitude", amplitude)?;
                pos("sigma", sigma)?;
            }
            Family::CompactBump { amplitude, a } => {
                pos("amplitude", amplitude)?;
                pos("a", a)?;
            }
        }
        if let Some(r) = r_cut {
            pos("r_cut", r)?;
        }
        let r_cut = r_cut.or(match family {
            Family::None => Some(0.0),
            Family::HardCore { a } | Family::CompactBump { a, .. } => Some(a),
            Family::Gaussian { .. } => None,
        });
        Ok(Self { family, r_cut })
    }

    pub fn zero() -> Self {
        Self { family: Family::None, r_cut: Some(0.0) }
    }

    pub fn hard_core(a: f64) -> Result<Self> {
        Self::new(Family::HardCore { a }, None)
    }

    pub fn gaussian(amplitude: f64, sigma: f64) -> Result<Self> {
        Self::new(Family::Gaussian { amplitude, sigma }, None)
    }

    pub fn compact_bump(amplitude: f64, a: f64) -> Result<Self> {
        Self::new(Family::CompactBump { amplitude, a }, None)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Distance beyond which Φ is treated as exactly 0.
    pub fn r_cut(&self) -> Option<f64> {
        self.r_cut
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.family, Family::None)
    }

    /// Φ at squared distance `r2`.
    #[inline]
    pub fn phi_sq(&self, r2: f64) -> f64 {
        if let Some(rc) = self.r_cut {
            if r2 >= rc * rc {
                return 0.0;
            }
        }
        match self.family {
            Family::None => 0.0,
            Family::HardCore { a } => {
                if r2 < a * a {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            Family::Gaussian { amplitude, sigma } => amplitude * (-r2 / (2.0 * sigma * sigma)).exp(),
            Family::CompactBump { amplitude, a } => {
                if r2 < a * a {
                    amplitude
                } else {
                    0.0
                }
            }
        }
    }

    pub fn phi(&self, r: f64) -> f64 {
        self.phi_sq(r * r)
    }

    /// Radius `R` beyond which [`Self::tail_psi`] dominates Φ.
    pub fn tail_r(&self) -> f64 {
        match self.family {
            Family::None => 1.0,
            Family::HardCore { a } | Family::CompactBump { a, .. } => a,
            Family::Gaussian { sigma, .. } => sigma,
        }
    }

    /// Decreasing dominator Ψ of Φ beyond [`Self::tail_r`].
    pub fn tail_psi(&self, r: f64) -> f64 {
        match self.family {
            Family::Gaussian { amplitude, sigma } => amplitude * (-r * r / (2.0 * sigma * sigma)).exp(),
            _ => 0.0,
        }
    }

    /// `∫_R^∞ Ψ(x) x^{d-1} dx`, the interaction mass neglected by a cutoff at `R`.
    pub fn tail_integral(&self, dim: usize, from: f64) -> f64 {
        match self.family {
            Family::Gaussian { .. } => {
                // Simpson on [from, from + 40σ]; the integrand is negligible beyond.
                let sigma = match self.family {
                    Family::Gaussian { sigma, .. } => sigma,
                    _ => unreachable!(),
                };
                let hi = from + 40.0 * sigma;
                let n = 4000;
                let h = (hi - from) / n as f64;
                let f = |x: f64| self.tail_psi(x) * x.powi(dim as i32 - 1);
                let mut s = f(from) + f(hi);
                for k in 1..n {
                    s += f(from + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
                }
                s * h / 3.0
            }
            _ => 0.0,
        }
    }
}

/// `exp(-β·e)` with `exp(-β·∞) = 0` exactly.
#[inline]
pub fn boltzmann(beta: f64, e: f64) -> f64 {
    if e == f64::INFINITY {
        0.0
    } else {
        (-beta * e).exp()
    }
}

/// Physical parameters shared by every sampler.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub dim: usize,
    pub beta: f64,
    pub mu: f64,
    pub potential: Potential,
}

impl ModelParams {
    pub fn new(dim: usize, beta: f64, mu: f64, potential: Potential) -> Result<Self> {
        if dim < 3 {
            return domain(format!("dimension must be at least 3, got {dim}"));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return domain(format!("beta must be positive and finite, got {beta}"));
        }
        if mu.is_nan() || mu == f64::INFINITY {
            return domain(format!("mu must be a real number or -inf, got {mu}"));
        }
        Ok(Self { dim, beta, mu, potential })
    }

    /// Same parameters with another chemical potential.
    pub fn with_mu(&self, mu: f64) -> Self {
        Self { mu, ..*self }
    }

    /// Same parameters with another potential.
    pub fn with_potential(&self, potential: Potential) -> Self {
        Self { potential, ..*self }
    }

    /// Warn when βμ reaches the supplied estimate of the decay rate.
    pub fn check_mu_against(&self, cphi_estimate: f64) -> bool {
        let ok = self.beta * self.mu < cphi_estimate;
        if !ok {
            log::warn!(
                "beta*mu = {} is not below the c_phi estimate {}; the infinite-volume construction is not covered",
                self.beta * self.mu,
                cphi_estimate
            );
        }
        ok
    }
}
