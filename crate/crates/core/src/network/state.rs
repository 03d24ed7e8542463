use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::case::{BusKind, NetworkCase};

/// Per-bus complex voltage in rectangular form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoltageState {
    pub v: Vec<Complex64>,
}

impl VoltageState {
    pub fn new(v: Vec<Complex64>) -> Self {
        Self { v }
    }

    pub fn from_polar(vm: &[f64], va: &[f64]) -> Self {
        Self {
            v: vm.iter().zip(va).map(|(&m, &a)| Complex64::from_polar(m, a)).collect(),
        }
    }

    /// `Vm_setpoint∠0` on PV and slack buses, `1∠0` on PQ buses.
    pub fn flat_start(case: &NetworkCase) -> Self {
        Self {
            v: case
                .buses
                .iter()
                .map(|b| match b.kind {
                    BusKind::Pq => Complex64::new(1.0, 0.0),
                    _ => Complex64::new(b.vm_setpoint.unwrap_or(1.0), 0.0),
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.v.iter().map(|v| v.norm()).collect()
    }

    pub fn angles(&self) -> Vec<f64> {
        self.v.iter().map(|v| v.arg()).collect()
    }

    /// Largest magnitude and angle differences against `other`.
    pub fn max_deviation(&self, other: &VoltageState) -> (f64, f64) {
        self.v.iter().zip(&other.v).fold((0.0f64, 0.0f64), |(dm, da), (a, b)| {
            let dang = (a * b.conj()).arg().abs();
            (dm.max((a.norm() - b.norm()).abs()), da.max(dang))
        })
    }
}
