use std::collections::VecDeque;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::NetworkError;

/// Bus classification. The derived ordering is the merge precedence
/// used by vertex contraction: `Slack > Pv > Pq`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BusKind {
    Pq,
    Pv,
    Slack,
}

impl BusKind {
    pub fn matpower_code(self) -> u8 {
        match self {
            BusKind::Pq => 1,
            BusKind::Pv => 2,
            BusKind::Slack => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BusKind::Pq => "PQ",
            BusKind::Pv => "PV",
            BusKind::Slack => "Slack",
        }
    }
}

/// A bus in per-unit on the case base. Angles are radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    /// External bus number as it appears in the case file.
    pub number: u32,
    pub kind: BusKind,
    pub pd: f64,
    pub qd: f64,
    pub pg: f64,
    pub qg: f64,
    pub gs: f64,
    pub bs: f64,
    pub vm_init: f64,
    pub va_init: f64,
    /// Regulated magnitude for PV and slack buses.
    pub vm_setpoint: Option<f64>,
    pub base_kv: f64,
    pub area: u32,
    pub zone: u32,
    pub vmax: f64,
    pub vmin: f64,
}

impl Bus {
    /// A PQ bus with nominal voltage and no load.
    pub fn new(number: u32, kind: BusKind) -> Self {
        Self {
            number,
            kind,
            pd: 0.0,
            qd: 0.0,
            pg: 0.0,
            qg: 0.0,
            gs: 0.0,
            bs: 0.0,
            vm_init: 1.0,
            va_init: 0.0,
            vm_setpoint: (kind != BusKind::Pq).then_some(1.0),
            base_kv: 0.0,
            area: 1,
            zone: 1,
            vmax: 1.1,
            vmin: 0.9,
        }
    }

    /// Net scheduled injection `P + jQ`.
    pub fn injection(&self) -> Complex64 {
        Complex64::new(self.pg - self.pd, self.qg - self.qd)
    }
}

/// A π-model branch between two buses, identified by dense bus index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub from: usize,
    pub to: usize,
    pub r: f64,
    pub x: f64,
    /// Total line-charging susceptance.
    pub b: f64,
    /// Off-nominal turns ratio on the from side; 1.0 for lines.
    pub tap: f64,
    /// Phase shift in radians.
    pub shift: f64,
    pub in_service: bool,
    pub rate_a: f64,
}

impl Branch {
    pub fn line(from: usize, to: usize, r: f64, x: f64, b: f64) -> Self {
        Self {
            from,
            to,
            r,
            x,
            b,
            tap: 1.0,
            shift: 0.0,
            in_service: true,
            rate_a: 0.0,
        }
    }

    pub fn impedance(&self) -> f64 {
        self.r.hypot(self.x)
    }

    pub fn series_admittance(&self) -> Complex64 {
        Complex64::new(1.0, 0.0) / Complex64::new(self.r, self.x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkCase {
    pub name: String,
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
}

impl NetworkCase {
    pub fn bus_count(&self) -> usize {
        self.buses.len()
    }

    pub fn position_of(&self, number: u32) -> Option<usize> {
        self.buses.iter().position(|b| b.number == number)
    }

    pub fn slack_buses(&self) -> Vec<usize> {
        (0..self.buses.len())
            .filter(|&i| self.buses[i].kind == BusKind::Slack)
            .collect()
    }

    /// Index of the unique slack bus.
    pub fn slack(&self) -> Result<usize, NetworkError> {
        match self.slack_buses().as_slice() {
            [] => Err(NetworkError::NoSlack),
            [one] => Ok(*one),
            many => Err(NetworkError::MultipleSlack {
                buses: many.iter().map(|&i| self.buses[i].number).collect(),
            }),
        }
    }

    pub fn in_service_branches(&self) -> impl Iterator<Item = (usize, &Branch)> {
        self.branches.iter().enumerate().filter(|(_, br)| br.in_service)
    }

    /// Structural checks every solver relies on.
    pub fn validate(&self) -> Result<(), NetworkError> {
        let n = self.buses.len();
        for (k, br) in self.branches.iter().enumerate() {
            if br.from >= n || br.to >= n {
                return Err(NetworkError::InvalidBranch {
                    branch: k,
                    reason: "endpoint out of range".into(),
                });
            }
            if br.from == br.to {
                return Err(NetworkError::InvalidBranch {
                    branch: k,
                    reason: "both ends on the same bus".into(),
                });
            }
            if !(br.tap > 0.0) {
                return Err(NetworkError::InvalidBranch {
                    branch: k,
                    reason: format!("tap ratio {} must be positive", br.tap),
                });
            }
        }
        for bus in &self.buses {
            if bus.kind != BusKind::Pq && !bus.vm_setpoint.is_some_and(|v| v > 0.0) {
                return Err(NetworkError::InvalidBus {
                    bus: bus.number,
                    reason: "voltage setpoint must be positive".into(),
                });
            }
        }
        let slack = self.slack()?;

        let mut degree = vec![0usize; n];
        let mut adjacency = vec![Vec::new(); n];
        for (_, br) in self.in_service_branches() {
            degree[br.from] += 1;
            degree[br.to] += 1;
            adjacency[br.from].push(br.to);
            adjacency[br.to].push(br.from);
        }
        if n > 1 {
            if let Some(i) = degree.iter().position(|&d| d == 0) {
                return Err(NetworkError::IsolatedBus {
                    bus: self.buses[i].number,
                });
            }
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([slack]);
        seen[slack] = true;
        while let Some(v) = queue.pop_front() {
            for &w in &adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(NetworkError::Disconnected {
                bus: self.buses[i].number,
            });
        }
        Ok(())
    }
}
