use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::{coord_distance, Point, System};

/// One `(s, n)` cell of the truncated intersection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GdeltaEntry {
    pub s: u64,
    pub n: u64,
    /// Smallest `m` with `n < m <= M` and `d(T^m z, x) < 1/s`.
    pub m: Option<u64>,
    pub distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GdeltaReport {
    pub member: bool,
    pub max_s: u64,
    pub max_n: u64,
    pub max_m: u64,
    pub entries: Vec<GdeltaEntry>,
}

/// Truncated membership test for
/// `z in  ∩_{s <= S, n <= N} ∪_{n < m <= M} T^{-m} B(x, 1/s)`.
///
/// Preimages are never formed: `z in T^{-m} B(x, r)` is decided by the forward
/// orbit, `d(T^m z, x) < r`.
pub fn gdelta_check(system: &System, z: &Point, x: &Point, max_s: u64, max_n: u64, max_m: u64) -> Result<GdeltaReport> {
    system.check_point(z)?;
    system.check_point(x)?;
    if max_s == 0 || max_n == 0 {
        return Err(Error::invalid("S and N must be at least 1"));
    }
    if max_m <= max_n {
        return Err(Error::invalid("M must exceed N"));
    }
    // distances[m - 1] = d(T^m z, x)
    let mut coords = z.coords.clone();
    let distances: Vec<f64> = (1..=max_m)
        .map(|_| {
            system.step_in_place(&mut coords);
            coord_distance(system.space(), &coords, &x.coords)
        })
        .collect();

    let mut entries = Vec::with_capacity((max_s * max_n) as usize);
    for s in 1..=max_s {
        let radius = 1.0 / s as f64;
        // next_hit[i] = smallest m >= i + 1 with a hit, scanning backwards
        let mut next_hit = vec![None; max_m as usize + 1];
        for m in (1..=max_m).rev() {
            next_hit[m as usize - 1] = if distances[m as usize - 1] < radius {
                Some(m)
            } else {
                next_hit[m as usize]
            };
        }
        for n in 1..=max_n {
            // first hit strictly after n
            let m = next_hit[n as usize];
            entries.push(GdeltaEntry {
                s,
                n,
                m,
                distance: m.map(|m| distances[m as usize - 1]),
            });
        }
    }
    Ok(GdeltaReport {
        member: entries.iter().all(|e| e.m.is_some()),
        max_s,
        max_n,
        max_m,
        entries,
    })
}
