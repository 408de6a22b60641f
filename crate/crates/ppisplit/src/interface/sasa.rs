//! Solvent-accessible surface area by sphere sampling, and the buried
//! surface area of a chain pair.

use crate::geometry::Vec3;
use crate::structio::Chain;

/// Van der Waals radius by element symbol, angstroms.
pub fn vdw_radius(element: &str) -> f64 {
    match element {
        "C" => 1.7,
        "N" => 1.55,
        "O" => 1.52,
        "S" => 1.8,
        _ => 1.8,
    }
}

/// Unit sphere points from the golden-angle spiral; deterministic for a
/// given count.
pub struct SasaSphere {
    points: Vec<Vec3>,
}

impl SasaSphere {
    pub fn new(n_points: usize) -> Self {
        assert!(n_points >= 12, "need at least 12 sphere points");
        let golden = std::f64::consts::PI * (3.0 - 5.0_f64.sqrt());
        let points = (0..n_points)
            .map(|k| {
                let z = 1.0 - 2.0 * (k as f64 + 0.5) / n_points as f64;
                let r = (1.0 - z * z).max(0.0).sqrt();
                let phi = golden * k as f64;
                Vec3::new(r * phi.cos(), r * phi.sin(), z)
            })
            .collect();
        SasaSphere { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Per-atom accessible area for `atoms` given as (center, vdw radius).
///
/// A surface point of atom i (on the sphere of radius `r_i + probe`) counts
/// as accessible unless it lies strictly inside some other inflated atom.
pub fn sasa_areas(atoms: &[(Vec3, f64)], probe: f64, sphere: &SasaSphere) -> Vec<f64> {
    let n = atoms.len();
    let mut areas = vec![0.0f64; n];
    for i in 0..n {
        let (center, radius) = atoms[i];
        let rp = radius + probe;
        // Only atoms whose inflated sphere can reach this one's surface.
        let occluders: Vec<(Vec3, f64)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| atoms[j])
            .filter(|(cj, rj)| center.dist(*cj) < rp + rj + probe)
            .collect();
        let mut accessible = 0usize;
        'point: for u in &sphere.points {
            let p = center.add(u.scale(rp));
            for (cj, rj) in &occluders {
                if p.dist(*cj) < rj + probe {
                    continue 'point;
                }
            }
            accessible += 1;
        }
        areas[i] = 4.0 * std::f64::consts::PI * rp * rp * accessible as f64
            / sphere.len() as f64;
    }
    areas
}

fn chain_atoms(chain: &Chain) -> Vec<(Vec3, f64)> {
    chain
        .residues
        .iter()
        .flat_map(|r| r.heavy_atoms())
        .map(|a| (a.coords, vdw_radius(&a.element)))
        .collect()
}

/// SASA(a) + SASA(b) - SASA(a and b together), heavy atoms only.
///
/// The union pass reuses each chain's atom order and the chains enter in
/// lexicographic id order, so the result is exactly symmetric and exactly
/// zero for chains too far apart to occlude each other.
pub fn buried_surface_area(chain_a: &Chain, chain_b: &Chain, probe: f64, n_points: usize) -> f64 {
    let (first, second) =
        if chain_a.id <= chain_b.id { (chain_a, chain_b) } else { (chain_b, chain_a) };
    let sphere = SasaSphere::new(n_points);
    let atoms_1 = chain_atoms(first);
    let atoms_2 = chain_atoms(second);

    let alone_1: f64 = sasa_areas(&atoms_1, probe, &sphere).iter().sum();
    let alone_2: f64 = sasa_areas(&atoms_2, probe, &sphere).iter().sum();

    let mut union_atoms = atoms_1;
    union_atoms.extend_from_slice(&atoms_2);
    let together: f64 = sasa_areas(&union_atoms, probe, &sphere).iter().sum();

    (alone_1 + alone_2) - together
}
