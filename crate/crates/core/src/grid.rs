//! Parameter grids for scans.

use serde::{Deserialize, Serialize};

use crate::{c64, Error, Result, C64};

/// Tensor grid `linspace(-radius, radius, steps)` along each active
/// parameter; inactive parameters stay 0. With `complex`, every active
/// parameter gets a real and an imaginary axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub radius: f64,
    pub steps: usize,
    /// Active parameter indices (0-based); empty means all.
    #[serde(default)]
    pub active: Vec<usize>,
    #[serde(default)]
    pub complex: bool,
}

impl GridSpec {
    pub fn real(radius: f64, steps: usize, active: Vec<usize>) -> Self {
        GridSpec { radius, steps, active, complex: false }
    }

    fn axis(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![0.0];
        }
        (0..self.steps)
            .map(|k| -self.radius + 2.0 * self.radius * k as f64 / (self.steps - 1) as f64)
            .collect()
    }

    pub fn active_params(&self, num_params: usize) -> Vec<usize> {
        if self.active.is_empty() {
            (0..num_params).collect()
        } else {
            self.active.clone()
        }
    }

    pub fn validate(&self, num_params: usize) -> Result<()> {
        if !(self.radius.is_finite() && self.radius >= 0.0) {
            return Err(Error::Input("grid radius must be finite and non-negative".into()));
        }
        if self.steps == 0 {
            return Err(Error::Input("grid needs at least one step".into()));
        }
        if let Some(&bad) = self.active.iter().find(|&&i| i >= num_params) {
            return Err(Error::Input(format!("grid parameter {bad} out of range for N={num_params}")));
        }
        let axes = self.active_params(num_params).len() * if self.complex { 2 } else { 1 };
        let count = (self.steps as f64).powi(axes as i32);
        if count > 5e7 {
            return Err(Error::Input(format!("grid would have {count:.0} points")));
        }
        Ok(())
    }

    /// Grid points in lexicographic order (last axis fastest).
    pub fn points(&self, num_params: usize) -> Result<Vec<Vec<C64>>> {
        self.validate(num_params)?;
        let active = self.active_params(num_params);
        let axis = self.axis();
        let naxes = active.len() * if self.complex { 2 } else { 1 };
        let total = self.steps.pow(naxes as u32);
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; naxes];
        for _ in 0..total {
            let mut t = vec![c64(0.0, 0.0); num_params];
            for (a, &p) in active.iter().enumerate() {
                if self.complex {
                    t[p] = c64(axis[idx[2 * a]], axis[idx[2 * a + 1]]);
                } else {
                    t[p] = c64(axis[idx[a]], 0.0);
                }
            }
            out.push(t);
            for k in (0..naxes).rev() {
                idx[k] += 1;
                if idx[k] < self.steps {
                    break;
                }
                idx[k] = 0;
            }
        }
        Ok(out)
    }
}
