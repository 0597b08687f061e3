//! Exact block-by-block propagation of the deterministic protocol.
//!
//! Independent of the closed forms: it walks the protocol's state machine with
//! probability masses instead of random draws.

use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum State {
    Harvest { battery: u32 },
    Retx { battery: u32, since_sb: u32 },
}

pub struct ChainPmfs {
    /// Index k holds P{age = k}.
    pub age: Vec<f64>,
    /// Index k holds P{cycle = k}.
    pub cycle: Vec<f64>,
}

/// Pmfs of one update cycle starting right after an STB, with battery, E_S
/// and E_T counted in harvests. Stops once less than `tol` of the mass is left.
pub fn deterministic_chain(window: u32, s_units: u32, t_units: u32, p_out: f64, tol: f64) -> ChainPmfs {
    let mut age = vec![0.0; window as usize + 1];
    let mut cycle = vec![0.0];
    let mut live: BTreeMap<State, f64> = BTreeMap::new();
    live.insert(State::Harvest { battery: 0 }, 1.0);
    let mut t = 0usize;
    while live.values().sum::<f64>() > tol {
        t += 1;
        let mut next: BTreeMap<State, f64> = BTreeMap::new();
        for (&state, &mass) in &live {
            let mut st = state;
            // a drop happens at the start of a block and leaves that block to the harvest phase
            if let State::Retx { battery, since_sb } = st {
                if since_sb > window {
                    st = State::Harvest { battery };
                }
            }
            match st {
                State::Harvest { battery } if battery >= s_units + t_units => {
                    *next.entry(State::Retx { battery: battery - s_units, since_sb: 1 }).or_default() += mass;
                }
                State::Harvest { battery } => {
                    *next.entry(State::Harvest { battery: battery + 1 }).or_default() += mass;
                }
                State::Retx { battery, since_sb } if battery >= t_units => {
                    if cycle.len() <= t {
                        cycle.resize(t + 1, 0.0);
                    }
                    cycle[t] += (1.0 - p_out) * mass;
                    age[since_sb as usize] += (1.0 - p_out) * mass;
                    *next
                        .entry(State::Retx { battery: battery - t_units, since_sb: since_sb + 1 })
                        .or_default() += p_out * mass;
                }
                State::Retx { battery, since_sb } => {
                    *next.entry(State::Retx { battery: battery + 1, since_sb: since_sb + 1 }).or_default() += mass;
                }
            }
        }
        live = next;
    }
    ChainPmfs {
        age,
        cycle,
    }
}
