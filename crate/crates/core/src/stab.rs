//! Stabilization parameters and element subscales.
//!
//! The fine scales are modelled per element by
//! `M dU~/dt + tau^{-1} U~ = R` with `M = diag(rho, rho, 0, 1)`; backward
//! Euler turns this into `U~^{n+1} = tau' (R + M U~^n / dt)` where
//! `tau' = (M/dt + tau^{-1})^{-1}`.

use crate::error::{Error, Result};

/// Tuning constants `c1, c2, c3` of the stabilization parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabConsts {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl Default for StabConsts {
    fn default() -> Self {
        StabConsts {
            c1: 4.0,
            c2: 2.0,
            c3: 1.0,
        }
    }
}

impl StabConsts {
    pub fn validate(&self) -> Result<()> {
        if self.c1 > 0.0 && self.c2 > 0.0 && self.c3 > 0.0 {
            Ok(())
        } else {
            Err(Error::invalid("stabilization constants must be positive"))
        }
    }
}

/// Element stabilization parameters.
///
/// Before [`TauSet::time_modify`] the primed values equal the unprimed ones
/// (the `dt -> infinity` limit).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TauSet {
    pub tau1: f64,
    pub tau2: f64,
    pub tau3: f64,
    pub tau1_prime: f64,
    pub tau3_prime: f64,
}

/// Inputs of the parameter formulas for one element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauInputs {
    pub h: f64,
    /// `|u_h|` at the barycenter.
    pub speed: f64,
    /// Local viscosity.
    pub eta0: f64,
    pub rho: f64,
    /// Representative diffusivity `D_m`.
    pub diffusivity: f64,
    pub alpha: f64,
}

/// `tau1 = (c1 eta0/h^2 + c2 rho |u|/h)^{-1}`, `tau2 = h^2/(c1 tau1)`,
/// `tau3 = c3 (9 D_m/(4h^2) + 3|u|/(2h) + alpha)^{-1}`.
pub fn compute_tau(inputs: &TauInputs, consts: &StabConsts) -> Result<TauSet> {
    let TauInputs {
        h,
        speed,
        eta0,
        rho,
        diffusivity,
        alpha,
    } = *inputs;
    if !(h > 0.0) {
        return Err(Error::invalid(format!(
            "element size must be positive, got {h}"
        )));
    }
    if !(eta0 > 0.0) {
        return Err(Error::invalid(format!(
            "viscosity must be positive, got {eta0}"
        )));
    }
    if !(diffusivity >= 0.0) {
        return Err(Error::invalid(format!(
            "diffusivity must be non-negative, got {diffusivity}"
        )));
    }
    let h2 = h * h;
    let tau1 = 1.0 / (consts.c1 * eta0 / h2 + consts.c2 * rho * speed / h);
    let tau2 = h2 / (consts.c1 * tau1);
    let tau3 = consts.c3 / (9.0 * diffusivity / (4.0 * h2) + 3.0 * speed / (2.0 * h) + alpha);
    Ok(TauSet {
        tau1,
        tau2,
        tau3,
        tau1_prime: tau1,
        tau3_prime: tau3,
    })
}

impl TauSet {
    /// Applies `(M/dt + tau^{-1})^{-1}`; `tau2` is unchanged because the
    /// continuity row of `M` vanishes.
    pub fn time_modify(&self, dt: f64, rho: f64) -> Result<TauSet> {
        if !(dt > 0.0) {
            return Err(Error::invalid(format!(
                "time step must be positive, got {dt}"
            )));
        }
        Ok(TauSet {
            tau1_prime: self.tau1 * dt / (dt + rho * self.tau1),
            tau3_prime: self.tau3 * dt / (dt + self.tau3),
            ..*self
        })
    }
}

/// Free-function form of [`TauSet::time_modify`].
pub fn time_modify_tau(tau: &TauSet, dt: f64, rho: f64) -> Result<TauSet> {
    tau.time_modify(dt, rho)
}

/// Whether subscales carry their own time derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubscaleMode {
    Dynamic,
    QuasiStatic,
}

/// Effective weights `(momentum, continuity, transport)` multiplying the
/// residual, and the history coefficients `(momentum, transport)`
/// multiplying the previous subscale.
#[inline]
pub(crate) fn subscale_weights(
    tau: &TauSet,
    dt: f64,
    rho: f64,
    mode: SubscaleMode,
) -> ([f64; 3], [f64; 2]) {
    match mode {
        SubscaleMode::Dynamic => (
            [tau.tau1_prime, tau.tau2, tau.tau3_prime],
            [tau.tau1_prime * rho / dt, tau.tau3_prime / dt],
        ),
        SubscaleMode::QuasiStatic => ([tau.tau1, tau.tau2, tau.tau3], [0.0, 0.0]),
    }
}

/// New subscale `(u~1, u~2, p~, c~)` of one element from its residual.
#[inline]
pub fn element_subscale(
    prev: [f64; 4],
    residual: [f64; 4],
    tau: &TauSet,
    dt: f64,
    rho: f64,
    mode: SubscaleMode,
) -> [f64; 4] {
    let ([wm, wp, wc], [hm, hc]) = subscale_weights(tau, dt, rho, mode);
    [
        wm * residual[0] + hm * prev[0],
        wm * residual[1] + hm * prev[1],
        wp * residual[2],
        wc * residual[3] + hc * prev[3],
    ]
}

/// Per-element fine-scale values `(u~1, u~2, p~, c~)`, sampled at the barycenter.
#[derive(Debug, Clone, PartialEq)]
pub struct SubscaleField {
    pub values: Vec<[f64; 4]>,
}

impl SubscaleField {
    pub fn zeros(num_elements: usize) -> Self {
        SubscaleField {
            values: vec![[0.0; 4]; num_elements],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(||u~||^2, ||c~||^2)` with elementwise-constant subscales.
    pub fn energy(&self, areas: impl IntoIterator<Item = f64>) -> (f64, f64) {
        self.values
            .iter()
            .zip(areas)
            .fold((0.0, 0.0), |(eu, ec), (v, a)| {
                (eu + a * (v[0] * v[0] + v[1] * v[1]), ec + a * v[3] * v[3])
            })
    }
}

/// Advances every element subscale given its residual and parameters.
pub fn update_subscales(
    prev: &SubscaleField,
    residuals: &[[f64; 4]],
    taus: &[TauSet],
    dt: f64,
    rho: f64,
    mode: SubscaleMode,
) -> Result<SubscaleField> {
    if residuals.len() != prev.len() || taus.len() != prev.len() {
        return Err(Error::invalid("subscale, residual and tau counts differ"));
    }
    let values = prev
        .values
        .iter()
        .zip(residuals)
        .zip(taus)
        .map(|((&p, &r), t)| element_subscale(p, r, t, dt, rho, mode))
        .collect();
    Ok(SubscaleField { values })
}
