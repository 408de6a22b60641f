//! Synthetic structure corpora with planted duplication, used by
//! benchmarks, examples, and the end-to-end self-tests.

use std::collections::BTreeMap;

use chrono::{Duration, NaiveDate};

use crate::geometry::{RigidTransform, Vec3};
use crate::rng::{derive_seed, gen_below, gen_unit, sample_without_replacement, seeded, SeededRng};
use crate::structio::{AminoAcid, Atom, Chain, Residue, Structure};

/// Ten residue types used for regular chains.
const HALF_ONE: &[u8] = b"ACDEFGHIKL";
/// The other ten, used for divergent analog tails; the halves share no
/// letters, so analog tails can never align as identities.
const HALF_TWO: &[u8] = b"MNPQRSTVWY";

const TAIL_LEN: usize = 20;
const CORE_LEN: usize = 10;
/// Residue spacing along the interface strand, angstroms.
const STRIDE: f64 = 3.8;

fn pick(rng: &mut SeededRng, alphabet: &[u8]) -> char {
    alphabet[gen_below(rng, alphabet.len() as u64) as usize] as char
}

fn random_letters(rng: &mut SeededRng, alphabet: &[u8], n: usize) -> Vec<char> {
    (0..n).map(|_| pick(rng, alphabet)).collect()
}

fn residue_at(chain_id: &str, seq_num: i32, aa: AminoAcid, atoms: Vec<(&str, Vec3)>) -> Residue {
    Residue {
        chain_id: chain_id.to_string(),
        seq_num,
        insertion_code: None,
        aa_type: aa,
        raw_name: aa.three_letter().to_string(),
        atoms: atoms
            .into_iter()
            .map(|(name, coords)| Atom {
                name: name.to_string(),
                element: "C".to_string(),
                coords,
                is_heavy: true,
            })
            .collect(),
    }
}

/// One chain of a planted interface: a flat three-row core strand plus
/// single-atom tails parked far from everything. `y` positions the strand
/// (the partner sits at the gap distance), `tail_z` banishes the tails.
fn plate_chain(chain_id: &str, letters: &[char], y: f64, tail_z: f64, offset: Vec3) -> Chain {
    assert_eq!(letters.len(), TAIL_LEN + CORE_LEN + TAIL_LEN);
    let mut residues = Vec::new();
    for (j, &c) in letters[..TAIL_LEN].iter().enumerate() {
        let x = -8.0 - STRIDE * j as f64;
        residues.push(residue_at(
            chain_id,
            1 + j as i32,
            AminoAcid::from_one_letter(c),
            vec![("CA", Vec3::new(x, y, tail_z).add(offset))],
        ));
    }
    for (i, &c) in letters[TAIL_LEN..TAIL_LEN + CORE_LEN].iter().enumerate() {
        let x = STRIDE * i as f64;
        residues.push(residue_at(
            chain_id,
            (TAIL_LEN + 1 + i) as i32,
            AminoAcid::from_one_letter(c),
            vec![
                ("CA", Vec3::new(x, y, 0.0).add(offset)),
                ("CB", Vec3::new(x, y, 3.0).add(offset)),
                ("CG", Vec3::new(x, y, -3.0).add(offset)),
            ],
        ));
    }
    for (j, &c) in letters[TAIL_LEN + CORE_LEN..].iter().enumerate() {
        let x = STRIDE * (CORE_LEN - 1) as f64 + 8.0 + STRIDE * j as f64;
        residues.push(residue_at(
            chain_id,
            (TAIL_LEN + CORE_LEN + 1 + j) as i32,
            AminoAcid::from_one_letter(c),
            vec![("CA", Vec3::new(x, y, tail_z).add(offset))],
        ));
    }
    Chain {
        id: chain_id.to_string(),
        residues,
    }
}

/// Letters of one family: core and tails for both partners, drawn from the
/// regular alphabet half.
struct FamilyLetters {
    a: Vec<char>,
    b: Vec<char>,
}

fn family_letters(rng: &mut SeededRng) -> FamilyLetters {
    FamilyLetters {
        a: random_letters(rng, HALF_ONE, TAIL_LEN + CORE_LEN + TAIL_LEN),
        b: random_letters(rng, HALF_ONE, TAIL_LEN + CORE_LEN + TAIL_LEN),
    }
}

/// Replaces the tail letters with draws from the divergent alphabet half,
/// leaving the core letters (and all coordinates) untouched.
fn divergent_tails(letters: &[char], rng: &mut SeededRng) -> Vec<char> {
    let mut out = letters.to_vec();
    for c in out[..TAIL_LEN].iter_mut() {
        *c = pick(rng, HALF_TWO);
    }
    for c in out[TAIL_LEN + CORE_LEN..].iter_mut() {
        *c = pick(rng, HALF_TWO);
    }
    out
}

fn duplex_entry(code: &str, letters: &FamilyLetters, gap: f64, offset: Vec3, date: NaiveDate) -> Structure {
    let copy_shift = Vec3::new(0.0, 0.0, 1000.0);
    let chains = vec![
        plate_chain("A", &letters.a, 0.0, 30.0, offset),
        plate_chain("B", &letters.b, gap, -30.0, offset),
        plate_chain("C", &letters.a, 0.0, 30.0, offset.add(copy_shift)),
        plate_chain("D", &letters.b, gap, -30.0, offset.add(copy_shift)),
    ];
    Structure::new(code.to_string(), chains, Some(date), Some(2.0)).expect("valid synthetic entry")
}

fn day(base: NaiveDate, offset: i64) -> NaiveDate {
    base + Duration::days(offset)
}

/// Number of interface families in the duplication benchmark.
pub const BENCHMARK_FAMILIES: usize = 200;

/// Builds a corpus with planted duplicate structure, designed so the five
/// split strategies leak in a known order:
///
/// * every family has a primary entry whose two interfaces are exact
///   in-entry copies (same code), so shuffled interface-level splits leak
///   heavily while code-level splits keep them together;
/// * every second family adds an exact-copy entry under a fresh code at an
///   unrelated deposition date, which code splits separate at random and
///   time splits usually separate;
/// * every fourth family adds a structural analog deposited the next day:
///   identical interface core (geometry and residues) but tails rewritten
///   from a disjoint residue alphabet, so sequence identity stays far
///   under common clustering floors while the interface descriptor is an
///   exact duplicate. Only near-duplicate graph components catch these.
///
/// The same seed always yields the identical corpus.
pub fn duplication_benchmark(seed: u64) -> Vec<Structure> {
    let base = NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid base date");
    let span = 2 * BENCHMARK_FAMILIES as i64;
    let mut out = Vec::new();
    for f in 0..BENCHMARK_FAMILIES {
        let mut rng = seeded(derive_seed(seed, f as u64));
        let letters = family_letters(&mut rng);
        let gap = 4.0 + 0.004 * f as f64;
        let p_date = day(base, 2 * f as i64);
        out.push(duplex_entry(
            &format!("{f:03}p"),
            &letters,
            gap,
            Vec3::ZERO,
            p_date,
        ));
        if f % 2 == 0 {
            let q_date = day(base, (389 + 977 * f as i64) % span);
            out.push(duplex_entry(
                &format!("{f:03}q"),
                &letters,
                gap,
                Vec3::new(5000.0, 0.0, 0.0),
                q_date,
            ));
        }
        if f % 4 == 1 {
            let analog = FamilyLetters {
                a: divergent_tails(&letters.a, &mut rng),
                b: divergent_tails(&letters.b, &mut rng),
            };
            let chains = vec![
                plate_chain("A", &analog.a, 0.0, 30.0, Vec3::ZERO),
                plate_chain("B", &analog.b, gap, -30.0, Vec3::ZERO),
            ];
            out.push(
                Structure::new(
                    format!("{f:03}r"),
                    chains,
                    Some(day(p_date, 1)),
                    Some(2.0),
                )
                .expect("valid analog entry"),
            );
        }
    }
    out
}

/// Five sequence families over pairwise disjoint four-letter alphabets:
/// within a family every member stays within twelve substitutions of the
/// family base (identity at least 0.8), across families no two sequences
/// share a single letter (identity exactly 0).
pub fn five_family_sequences(seed: u64, members_per_family: usize) -> BTreeMap<String, String> {
    const ALPHABETS: [&[u8]; 5] = [b"ACDE", b"FGHI", b"KLMN", b"PQRS", b"TVWY"];
    const LEN: usize = 60;
    const MUTATIONS: usize = 12;
    let mut out = BTreeMap::new();
    for (fam, alphabet) in ALPHABETS.iter().enumerate() {
        let mut rng = seeded(derive_seed(seed, fam as u64));
        let base = random_letters(&mut rng, alphabet, LEN);
        for m in 0..members_per_family {
            let mut seq = base.clone();
            let positions: Vec<usize> = (10..LEN).collect();
            for p in sample_without_replacement(&mut rng, &positions, MUTATIONS) {
                seq[p] = pick(&mut rng, alphabet);
            }
            out.insert(format!("fam{fam}_m{m:02}"), seq.into_iter().collect());
        }
    }
    out
}

/// Two chains of single-atom residues scattered uniformly in overlapping
/// boxes; handy for exercising contact search on irregular geometry.
pub fn random_blob_structure(
    seed: u64,
    code: &str,
    atoms_a: usize,
    atoms_b: usize,
    extent: f64,
) -> Structure {
    let mut rng = seeded(seed);
    let mut blob_chain = |id: &str, n: usize| {
        let residues = (0..n)
            .map(|i| {
                let coords = Vec3::new(
                    gen_unit(&mut rng) * extent,
                    gen_unit(&mut rng) * extent,
                    gen_unit(&mut rng) * extent,
                );
                residue_at(id, 1 + i as i32, AminoAcid::Gly, vec![("CA", coords)])
            })
            .collect();
        Chain {
            id: id.to_string(),
            residues,
        }
    };
    let chains = vec![blob_chain("A", atoms_a), blob_chain("B", atoms_b)];
    Structure::new(code.to_string(), chains, None, None).expect("valid blob structure")
}

/// Applies a rigid transform to every atom of every chain.
pub fn transform_structure(s: &Structure, t: &RigidTransform) -> Structure {
    let chains = s
        .chains
        .iter()
        .map(|c| Chain {
            id: c.id.clone(),
            residues: c
                .residues
                .iter()
                .map(|r| Residue {
                    chain_id: r.chain_id.clone(),
                    seq_num: r.seq_num,
                    insertion_code: r.insertion_code,
                    aa_type: r.aa_type,
                    raw_name: r.raw_name.clone(),
                    atoms: r
                        .atoms
                        .iter()
                        .map(|a| Atom {
                            name: a.name.clone(),
                            element: a.element.clone(),
                            coords: t.apply(a.coords),
                            is_heavy: a.is_heavy,
                        })
                        .collect(),
                })
                .collect(),
        })
        .collect();
    Structure {
        pdb_code: s.pdb_code.clone(),
        chains,
        deposition_date: s.deposition_date,
        resolution: s.resolution,
    }
}
