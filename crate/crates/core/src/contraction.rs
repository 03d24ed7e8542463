//! Zero-impedance branch elimination by vertex contraction.

use std::io::{self, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{Branch, Bus, BusKind, NetworkCase};

pub const DEFAULT_Z_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContractionError {
    #[error("impedance threshold must be a non-negative number, got {0}")]
    InvalidThreshold(f64),
    #[error("slack buses {buses:?} merge into one supernode with different setpoints {setpoints:?}")]
    SlackConflict { buses: Vec<u32>, setpoints: Vec<f64> },
    #[error("state has {found} entries, contraction has {expected} supernodes")]
    MissingSupernode { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ContractionWarning {
    /// A branch above the threshold whose endpoints were merged; it was dropped.
    DroppedSelfLoop { branch: usize, from: u32, to: u32, r: f64, x: f64 },
    /// Regulating members disagreed on the voltage setpoint; only the
    /// winning member's value is kept.
    SetpointConflict { supernode: u32, kept: f64, ignored: Vec<(u32, f64)> },
}

impl std::fmt::Display for ContractionWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::DroppedSelfLoop { branch, from, to, r, x } => write!(
                f,
                "branch {branch} ({from}-{to}, r={r}, x={x}) joins buses of one supernode and was dropped"
            ),
            Self::SetpointConflict { supernode, kept, ignored } => {
                write!(f, "supernode {supernode}: kept setpoint {kept}, ignored")?;
                for (bus, vm) in ignored {
                    write!(f, " {bus}:{vm}")?;
                }
                Ok(())
            }
        }
    }
}

/// How original buses map onto supernodes. Buses are referred to by position
/// in the original case; supernodes by position in the contracted case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionMap {
    pub rep: Vec<usize>,
    pub members: Vec<Vec<usize>>,
    pub contracted_branches: Vec<usize>,
    /// Per supernode, the member that supplied kind and setpoint.
    pub kind_provenance: Vec<usize>,
    pub warnings: Vec<ContractionWarning>,
    original_numbers: Vec<u32>,
}

impl ContractionMap {
    pub fn identity(case: &NetworkCase) -> Self {
        let n = case.bus_count();
        Self {
            rep: (0..n).collect(),
            members: (0..n).map(|i| vec![i]).collect(),
            contracted_branches: Vec::new(),
            kind_provenance: (0..n).collect(),
            warnings: Vec::new(),
            original_numbers: case.buses.iter().map(|b| b.number).collect(),
        }
    }

    pub fn supernode_count(&self) -> usize {
        self.members.len()
    }

    pub fn original_count(&self) -> usize {
        self.rep.len()
    }

    pub fn is_identity(&self) -> bool {
        self.contracted_branches.is_empty() && self.members.len() == self.rep.len()
    }

    /// Supernode id as reported: the lowest member bus number.
    pub fn supernode_number(&self, supernode: usize) -> u32 {
        self.members[supernode]
            .iter()
            .map(|&m| self.original_numbers[m])
            .min()
            .expect("supernodes are non-empty")
    }

    /// `original_id,supernode_id` rows, by original bus number.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "original_id,supernode_id")?;
        for (i, &s) in self.rep.iter().enumerate() {
            writeln!(out, "{},{}", self.original_numbers[i], self.supernode_number(s))?;
        }
        Ok(())
    }
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    // keeps the smaller index as root
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Merges every connected group of in-service branches with
/// `|r + jx| <= z_threshold` into a single bus.
pub fn contract_zero_impedance(
    case: &NetworkCase,
    z_threshold: f64,
) -> Result<(NetworkCase, ContractionMap), ContractionError> {
    if !(z_threshold >= 0.0) || !z_threshold.is_finite() {
        return Err(ContractionError::InvalidThreshold(z_threshold));
    }
    let n = case.bus_count();
    let mut sets = DisjointSets::new(n);
    let mut contracted = Vec::new();
    for (k, br) in case.in_service_branches() {
        if br.impedance() <= z_threshold {
            sets.union(br.from, br.to);
            contracted.push(k);
        }
    }

    // supernodes ordered by their lowest member position
    let mut rep = vec![usize::MAX; n];
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut root_to_super = vec![usize::MAX; n];
    for i in 0..n {
        let root = sets.find(i);
        if root_to_super[root] == usize::MAX {
            root_to_super[root] = members.len();
            members.push(Vec::new());
        }
        rep[i] = root_to_super[root];
        members[rep[i]].push(i);
    }

    let mut warnings = Vec::new();
    let mut provenance = Vec::with_capacity(members.len());
    let mut buses = Vec::with_capacity(members.len());
    for group in &members {
        let (bus, source) = merge_buses(case, group, &mut warnings)?;
        provenance.push(source);
        buses.push(bus);
    }

    let mut branches = Vec::new();
    for (k, br) in case.branches.iter().enumerate() {
        if contracted.binary_search(&k).is_ok() {
            continue;
        }
        let (f, t) = (rep[br.from], rep[br.to]);
        if f == t {
            if br.in_service {
                warnings.push(ContractionWarning::DroppedSelfLoop {
                    branch: k,
                    from: case.buses[br.from].number,
                    to: case.buses[br.to].number,
                    r: br.r,
                    x: br.x,
                });
            }
            continue;
        }
        branches.push(Branch { from: f, to: t, ..br.clone() });
    }

    let map = ContractionMap {
        rep,
        members,
        contracted_branches: contracted,
        kind_provenance: provenance,
        warnings,
        original_numbers: case.buses.iter().map(|b| b.number).collect(),
    };
    let out = NetworkCase {
        name: case.name.clone(),
        base_mva: case.base_mva,
        buses,
        branches,
    };
    Ok((out, map))
}

fn merge_buses(
    case: &NetworkCase,
    group: &[usize],
    warnings: &mut Vec<ContractionWarning>,
) -> Result<(Bus, usize), ContractionError> {
    let lead = *group
        .iter()
        .min_by_key(|&&m| case.buses[m].number)
        .expect("non-empty group");
    let kind = group.iter().map(|&m| case.buses[m].kind).max().expect("non-empty group");
    let source = *group
        .iter()
        .filter(|&&m| case.buses[m].kind == kind)
        .min_by_key(|&&m| case.buses[m].number)
        .expect("kind taken from a member");

    let mut bus = case.buses[lead].clone();
    let src = &case.buses[source];
    bus.kind = kind;
    bus.vm_setpoint = src.vm_setpoint;
    bus.vm_init = src.vm_init;
    bus.va_init = src.va_init;
    if group.len() == 1 {
        return Ok((bus, source));
    }

    bus.pd = 0.0;
    bus.qd = 0.0;
    bus.pg = 0.0;
    bus.qg = 0.0;
    bus.gs = 0.0;
    bus.bs = 0.0;
    for &m in group {
        let b = &case.buses[m];
        bus.pd += b.pd;
        bus.qd += b.qd;
        bus.pg += b.pg;
        bus.qg += b.qg;
        bus.gs += b.gs;
        bus.bs += b.bs;
    }

    if kind != BusKind::Pq {
        let kept = src.vm_setpoint.unwrap_or(src.vm_init);
        let mut others: Vec<(u32, f64, BusKind)> = group
            .iter()
            .map(|&m| &case.buses[m])
            .filter(|b| b.kind != BusKind::Pq && b.number != src.number)
            .map(|b| (b.number, b.vm_setpoint.unwrap_or(b.vm_init), b.kind))
            .filter(|&(_, vm, _)| vm != kept)
            .collect();
        others.sort_by_key(|&(num, _, _)| num);
        let clashing_slacks: Vec<(u32, f64)> = others
            .iter()
            .filter(|o| o.2 == BusKind::Slack)
            .map(|&(num, vm, _)| (num, vm))
            .collect();
        if !clashing_slacks.is_empty() {
            let (buses, setpoints) = std::iter::once((src.number, kept)).chain(clashing_slacks).unzip();
            return Err(ContractionError::SlackConflict { buses, setpoints });
        }
        if !others.is_empty() {
            warnings.push(ContractionWarning::SetpointConflict {
                supernode: bus.number,
                kept,
                ignored: others.into_iter().map(|(num, vm, _)| (num, vm)).collect(),
            });
        }
    }
    Ok((bus, source))
}

/// Copies each supernode voltage onto all of its member buses.
pub fn expand_state(solved: &[Complex64], map: &ContractionMap) -> Result<Vec<Complex64>, ContractionError> {
    if solved.len() != map.supernode_count() {
        return Err(ContractionError::MissingSupernode {
            expected: map.supernode_count(),
            found: solved.len(),
        });
    }
    Ok(map.rep.iter().map(|&s| solved[s]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bus(number: u32, kind: BusKind, pd: f64) -> Bus {
        let mut b = Bus::new(number, kind);
        b.pd = pd;
        b
    }

    fn case(buses: Vec<Bus>, branches: Vec<Branch>) -> NetworkCase {
        NetworkCase {
            name: "t".into(),
            base_mva: 100.0,
            buses,
            branches,
        }
    }

    #[test]
    fn loads_are_summed() {
        let c = case(
            vec![bus(1, BusKind::Slack, 0.0), bus(2, BusKind::Pq, 0.1), bus(3, BusKind::Pq, 0.2)],
            vec![Branch::line(0, 1, 0.0, 0.1, 0.0), Branch::line(1, 2, 0.0, 0.0, 0.0)],
        );
        let (out, map) = contract_zero_impedance(&c, DEFAULT_Z_THRESHOLD).unwrap();
        assert_eq!(out.bus_count(), 2);
        assert!((out.buses[1].pd - 0.3).abs() < 1e-15);
        assert_eq!(map.members, vec![vec![0], vec![1, 2]]);
        assert_eq!(map.contracted_branches, vec![1]);
        assert_eq!(out.branches.len(), 1);
    }

    #[test]
    fn pv_wins_over_pq() {
        let mut pv = bus(3, BusKind::Pv, 0.0);
        pv.vm_setpoint = Some(1.03);
        let c = case(
            vec![bus(1, BusKind::Slack, 0.0), bus(2, BusKind::Pq, 0.1), pv],
            vec![Branch::line(0, 1, 0.0, 0.1, 0.0), Branch::line(1, 2, 0.0, 1e-9, 0.0)],
        );
        let (out, map) = contract_zero_impedance(&c, DEFAULT_Z_THRESHOLD).unwrap();
        assert_eq!(out.buses[1].kind, BusKind::Pv);
        assert_eq!(out.buses[1].vm_setpoint, Some(1.03));
        assert_eq!(out.buses[1].number, 2);
        assert_eq!(map.kind_provenance[1], 2);
    }

    #[test]
    fn slack_setpoint_conflict_is_an_error() {
        let mut s2 = bus(2, BusKind::Slack, 0.0);
        s2.vm_setpoint = Some(1.05);
        let c = case(
            vec![bus(1, BusKind::Slack, 0.0), s2],
            vec![Branch::line(0, 1, 0.0, 0.0, 0.0)],
        );
        assert!(matches!(
            contract_zero_impedance(&c, DEFAULT_Z_THRESHOLD),
            Err(ContractionError::SlackConflict { .. })
        ));
    }

    #[test]
    fn parallel_normal_branch_becomes_dropped_self_loop() {
        let c = case(
            vec![bus(1, BusKind::Slack, 0.0), bus(2, BusKind::Pq, 0.1)],
            vec![Branch::line(0, 1, 0.0, 0.0, 0.0), Branch::line(0, 1, 0.01, 0.1, 0.0)],
        );
        let (out, map) = contract_zero_impedance(&c, DEFAULT_Z_THRESHOLD).unwrap();
        assert_eq!(out.bus_count(), 1);
        assert!(out.branches.is_empty());
        assert!(matches!(map.warnings[0], ContractionWarning::DroppedSelfLoop { branch: 1, .. }));
    }

    #[test]
    fn expansion_copies_voltages() {
        let c = case(
            vec![bus(1, BusKind::Slack, 0.0), bus(2, BusKind::Pq, 0.1), bus(3, BusKind::Pq, 0.2)],
            vec![Branch::line(0, 1, 0.0, 0.1, 0.0), Branch::line(1, 2, 0.0, 0.0, 0.0)],
        );
        let (_, map) = contract_zero_impedance(&c, DEFAULT_Z_THRESHOLD).unwrap();
        let v = Complex64::from_polar(1.02, (-3.0f64).to_radians());
        let full = expand_state(&[Complex64::new(1.0, 0.0), v], &map).unwrap();
        assert_eq!(full[1], v);
        assert_eq!(full[2], v);
        assert!(expand_state(&[v], &map).is_err());
    }

    #[test]
    fn rejects_negative_threshold() {
        let c = case(vec![bus(1, BusKind::Slack, 0.0)], vec![]);
        assert!(contract_zero_impedance(&c, -1.0).is_err());
        assert!(contract_zero_impedance(&c, f64::NAN).is_err());
    }

    #[test]
    fn csv_uses_bus_numbers() {
        let c = case(
            vec![bus(10, BusKind::Slack, 0.0), bus(20, BusKind::Pq, 0.1)],
            vec![Branch::line(0, 1, 0.0, 0.0, 0.0)],
        );
        let (_, map) = contract_zero_impedance(&c, DEFAULT_Z_THRESHOLD).unwrap();
        let mut out = Vec::new();
        map.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "original_id,supernode_id\n10,10\n20,10\n");
    }
}
