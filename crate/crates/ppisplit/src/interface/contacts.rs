//! Residue contact detection via a uniform spatial grid.

use std::collections::HashMap;

use crate::geometry::Vec3;
use crate::structio::Chain;

type CellKey = (i64, i64, i64);

fn cell_key(p: Vec3, edge: f64) -> CellKey {
    (
        (p.x / edge).floor() as i64,
        (p.y / edge).floor() as i64,
        (p.z / edge).floor() as i64,
    )
}

/// Residue index pairs (into `chain_a.residues` / `chain_b.residues`) with at
/// least one heavy-atom pair at distance <= `cutoff`, sorted.
///
/// Grid cells have edge `cutoff`, so candidates live in the 27 surrounding
/// cells; every candidate is then distance-checked, which makes the result
/// identical to the quadratic scan.
pub fn find_contacts(chain_a: &Chain, chain_b: &Chain, cutoff: f64) -> Vec<(usize, usize)> {
    assert!(cutoff > 0.0, "contact cutoff must be positive");
    let cutoff2 = cutoff * cutoff;

    let mut grid: HashMap<CellKey, Vec<(usize, Vec3)>> = HashMap::new();
    for (j, res) in chain_b.residues.iter().enumerate() {
        for atom in res.heavy_atoms() {
            grid.entry(cell_key(atom.coords, cutoff)).or_default().push((j, atom.coords));
        }
    }
    if grid.is_empty() {
        return Vec::new();
    }

    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for (i, res) in chain_a.residues.iter().enumerate() {
        for atom in res.heavy_atoms() {
            let (cx, cy, cz) = cell_key(atom.coords, cutoff);
            for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        let Some(bucket) = grid.get(&(cx + dx, cy + dy, cz + dz)) else {
                            continue;
                        };
                        for (j, pos) in bucket {
                            if atom.coords.dist2(*pos) <= cutoff2 {
                                pairs.push((i, *j));
                            }
                        }
                    }
                }
            }
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    pairs
}
