//! Shock algebra: end states from (P⁻, ε, s), Rankine–Hugoniot relations,
//! the flux constants A and B, the profile nonlinearity f(P), its critical
//! point P0 and the subsonicity conditions.

use serde::Serialize;

use crate::error::{Error, Result};

/// Physical constants and shock data. All end-state quantities derive from these.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShockParams {
    pub gamma: f64,
    pub mu: f64,
    pub k: f64,
    pub p_minus: f64,
    pub epsilon: f64,
    pub s: f64,
}

impl ShockParams {
    pub fn new(gamma: f64, mu: f64, k: f64, p_minus: f64, epsilon: f64, s: f64) -> Result<Self> {
        let p = ShockParams { gamma, mu, k, p_minus, epsilon, s };
        p.validate()?;
        Ok(p)
    }

    /// Builds the parameters from right-state data (P⁺, J⁺) as commonly quoted,
    /// solving J⁺ = sP⁺ − A for the speed.
    pub fn from_right_state(gamma: f64, mu: f64, k: f64, p_plus: f64, epsilon: f64, j_plus: f64) -> Result<Self> {
        if !(p_plus > 0.0) {
            return Err(Error::InvalidParams(format!("P_plus must be > 0, got {p_plus}")));
        }
        let p_minus = p_plus + epsilon;
        let a = flux_constant_a(p_minus, epsilon, gamma)?;
        Self::new(gamma, mu, k, p_minus, epsilon, (j_plus + a) / p_plus)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        let all = [self.gamma, self.mu, self.k, self.p_minus, self.epsilon, self.s];
        if all.iter().any(|v| !v.is_finite()) {
            return bad(format!("non-finite parameter in {self:?}"));
        }
        if self.gamma < 1.0 {
            return bad(format!("gamma must be >= 1, got {}", self.gamma));
        }
        if self.mu <= 0.0 {
            return bad(format!("mu must be > 0, got {}", self.mu));
        }
        if self.k <= 0.0 {
            return bad(format!("k must be > 0, got {}", self.k));
        }
        if self.p_minus <= 0.0 {
            return bad(format!("P_minus must be > 0, got {}", self.p_minus));
        }
        if !(self.epsilon > 0.0 && self.epsilon < self.p_minus) {
            return bad(format!(
                "epsilon must satisfy 0 < epsilon < P_minus, got epsilon = {} with P_minus = {}",
                self.epsilon, self.p_minus
            ));
        }
        if self.s <= 0.0 {
            return bad(format!("s must be > 0, got {}", self.s));
        }
        Ok(())
    }

    pub fn p_plus(&self) -> f64 {
        self.p_minus - self.epsilon
    }

    /// Same shock family (P⁻, s, γ, μ, k) at a different amplitude.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(self.gamma, self.mu, self.k, self.p_minus, epsilon, self.s)
    }
}

/// c_s(ρ) = √(γ ρ^(γ−1)).
pub fn sound_speed(rho: f64, gamma: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::Domain(format!("sound speed needs rho > 0, got {rho}")));
    }
    if gamma < 1.0 {
        return Err(Error::Domain(format!("sound speed needs gamma >= 1, got {gamma}")));
    }
    Ok((gamma * rho.powf(gamma - 1.0)).sqrt())
}

/// Mass-flux constant A = √(P⁻P⁺) · √((P⁻^γ − P⁺^γ)/ε) with P⁺ = P⁻ − ε.
pub fn flux_constant_a(p_minus: f64, epsilon: f64, gamma: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < p_minus) {
        return Err(Error::Domain(format!(
            "flux constant needs 0 < epsilon < P_minus, got epsilon = {epsilon}, P_minus = {p_minus}"
        )));
    }
    let p_plus = p_minus - epsilon;
    Ok((p_minus * p_plus).sqrt() * ((p_minus.powf(gamma) - p_plus.powf(gamma)) / epsilon).sqrt())
}

/// Leading terms of A for small ε: P⁻c_s − (γ+1)/4 · c_s · ε.
pub fn flux_constant_a_expansion(p_minus: f64, epsilon: f64, gamma: f64) -> Result<f64> {
    let cs = sound_speed(p_minus, gamma)?;
    Ok(p_minus * cs - 0.25 * (gamma + 1.0) * cs * epsilon)
}

/// Leading terms of P0 for small ε: P⁻ − ε/2.
pub fn critical_point_expansion(p_minus: f64, epsilon: f64) -> f64 {
    p_minus - 0.5 * epsilon
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EndStates {
    pub gamma: f64,
    pub s: f64,
    pub p_plus: f64,
    pub p_minus: f64,
    pub j_plus: f64,
    pub j_minus: f64,
    pub a: f64,
    pub b: f64,
    pub u_plus: f64,
    pub u_minus: f64,
    pub cs_plus: f64,
    pub cs_minus: f64,
    pub s_bar: f64,
    pub subsonic_minus: bool,
    pub subsonic_plus: bool,
    pub lax2: bool,
}

/// End states on the admissible branch J⁻ = sP⁻ − A.
pub fn lax_end_states(params: &ShockParams) -> Result<EndStates> {
    params.validate()?;
    let ShockParams { gamma, s, p_minus, epsilon, .. } = *params;
    let p_plus = p_minus - epsilon;
    let a = flux_constant_a(p_minus, epsilon, gamma)?;
    let j_minus = s * p_minus - a;
    let j_plus = s * p_plus - a;
    let b = -s * j_plus + j_plus * j_plus / p_plus + p_plus.powf(gamma);
    let (u_plus, u_minus) = (j_plus / p_plus, j_minus / p_minus);
    let cs_plus = sound_speed(p_plus, gamma)?;
    let cs_minus = sound_speed(p_minus, gamma)?;
    let s_bar = (2.0 * cs_minus).min(0.5 * (gamma + 1.0) * cs_minus);
    let lax2 = u_plus + cs_plus < s && s < u_minus + cs_minus && u_plus - cs_plus < s;
    Ok(EndStates {
        gamma,
        s,
        p_plus,
        p_minus,
        j_plus,
        j_minus,
        a,
        b,
        u_plus,
        u_minus,
        cs_plus,
        cs_minus,
        s_bar,
        subsonic_minus: u_minus.abs() < cs_minus,
        subsonic_plus: u_plus.abs() < cs_plus,
        lax2,
    })
}

impl EndStates {
    /// Relative Rankine–Hugoniot residuals (mass, momentum), each scaled by
    /// the magnitude of the terms entering it.
    pub fn rh_residuals(&self) -> (f64, f64) {
        let g = self.gamma;
        let (pp, pm, jp, jm, s) = (self.p_plus, self.p_minus, self.j_plus, self.j_minus, self.s);
        let mass = (s * (pp - pm) - (jp - jm)).abs();
        let mass_scale = s * (pp + pm) + jp.abs() + jm.abs();
        let q = |j: f64, p: f64| j * j / p + p.powf(g);
        let mom = (s * (jp - jm) - (q(jp, pp) - q(jm, pm))).abs();
        let mom_scale = s * (jp.abs() + jm.abs()) + q(jp, pp) + q(jm, pm);
        (mass / mass_scale, mom / mom_scale)
    }

    pub fn epsilon(&self) -> f64 {
        self.p_minus - self.p_plus
    }

    /// f(P) in the A, B form: P^γ − (As + B) + A²/P.
    pub fn f_ab(&self, p: f64) -> f64 {
        p.powf(self.gamma) - (self.a * self.s + self.b) + self.a * self.a / p
    }

    /// f'(P) = γP^(γ−1) − A²/P².
    pub fn f_prime(&self, p: f64) -> f64 {
        self.gamma * p.powf(self.gamma - 1.0) - self.a * self.a / (p * p)
    }

    /// f''(P) = γ(γ−1)P^(γ−2) + 2A²/P³.
    pub fn f_second(&self, p: f64) -> f64 {
        self.gamma * (self.gamma - 1.0) * p.powf(self.gamma - 2.0) + 2.0 * self.a * self.a / (p * p * p)
    }
}

/// f(P) written through its roots P±.
pub fn f_of_p(p: f64, es: &EndStates) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::Domain(format!("f(P) needs P > 0, got {p}")));
    }
    let g = es.gamma;
    let (pp, pm) = (es.p_plus, es.p_minus);
    let dp = pp - pm;
    Ok(p.powf(g) + (pm * pp / p) * ((pp.powf(g) - pm.powf(g)) / dp)
        - (pp.powf(g + 1.0) - pm.powf(g + 1.0)) / dp)
}

/// Unique positive root of f'(P).
pub fn critical_point_p0(es: &EndStates) -> f64 {
    let g = es.gamma;
    let (pp, pm) = (es.p_plus, es.p_minus);
    ((pm * pp / g) * ((pp.powf(g) - pm.powf(g)) / (pp - pm))).powf(1.0 / (g + 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubsonicityReport {
    /// |u⁻| < c_s(P⁻)
    pub left_subsonic: bool,
    /// s < 2c_s(P⁻)
    pub below_two_cs: bool,
    /// |u⁻| < (γ−1)/2 · c_s(P⁻); `None` when γ = 1
    pub velocity_condition: Option<bool>,
    /// s < (γ+1)/2 · c_s(P⁻)
    pub below_gamma_bound: bool,
    /// left_subsonic ⇒ below_two_cs on this instance
    pub first_implication_holds: bool,
    /// velocity_condition ⇒ below_gamma_bound on this instance (vacuous for γ = 1)
    pub second_implication_holds: bool,
}

pub fn check_subsonicity_conditions(es: &EndStates, params: &ShockParams) -> SubsonicityReport {
    let cs = es.cs_minus;
    let g = params.gamma;
    let left_subsonic = es.u_minus.abs() < cs;
    let below_two_cs = params.s < 2.0 * cs;
    let velocity_condition = (g > 1.0).then(|| es.u_minus.abs() < 0.5 * (g - 1.0) * cs);
    let below_gamma_bound = params.s < 0.5 * (g + 1.0) * cs;
    SubsonicityReport {
        left_subsonic,
        below_two_cs,
        velocity_condition,
        below_gamma_bound,
        first_implication_holds: !left_subsonic || below_two_cs,
        second_implication_holds: !velocity_condition.unwrap_or(false) || below_gamma_bound,
    }
}
