//! Case edits that introduce zero-impedance branches.

use super::case::{Branch, Bus, BusKind, NetworkCase};

/// Replaces branch `index` by a pure jumper of reactance `eps`: no resistance,
/// charging, tap or phase shift.
pub fn replace_with_jumper(case: &NetworkCase, index: usize, eps: f64) -> NetworkCase {
    let mut out = case.clone();
    let br = &mut out.branches[index];
    *br = Branch {
        in_service: true,
        rate_a: br.rate_a,
        ..Branch::line(br.from, br.to, 0.0, eps, 0.0)
    };
    out
}

/// Splits bus `position` into itself plus a new PQ bus, joined by a jumper of
/// reactance `eps`. The new bus takes over the original bus's load and shunt,
/// so the electrical solution is unchanged up to the jumper's tiny drop.
pub fn split_bus_with_jumper(case: &NetworkCase, position: usize, eps: f64) -> NetworkCase {
    let mut out = case.clone();
    let next_number = out.buses.iter().map(|b| b.number).max().unwrap_or(0) + 1;
    let original = &mut out.buses[position];
    let mut added = Bus::new(next_number, BusKind::Pq);
    added.pd = std::mem::take(&mut original.pd);
    added.qd = std::mem::take(&mut original.qd);
    added.gs = std::mem::take(&mut original.gs);
    added.bs = std::mem::take(&mut original.bs);
    added.vm_init = original.vm_init;
    added.va_init = original.va_init;
    added.base_kv = original.base_kv;
    added.area = original.area;
    added.zone = original.zone;
    out.buses.push(added);
    let new_index = out.buses.len() - 1;
    out.branches.push(Branch::line(position, new_index, 0.0, eps, 0.0));
    out
}

/// The PQ bus with the largest real-power load (ties: first in order).
pub fn heaviest_load_bus(case: &NetworkCase) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, b) in case.buses.iter().enumerate() {
        if b.kind == BusKind::Pq && best.is_none_or(|j| b.pd > case.buses[j].pd) {
            best = Some(i);
        }
    }
    best
}
