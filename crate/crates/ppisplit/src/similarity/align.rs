//! Global sequence alignment with affine gaps and percent identity.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Residue alphabet in matrix order: one-letter codes sorted by their
/// three-letter names (the same order `AminoAcid` uses).
pub const ALPHABET: &[u8; 20] = b"ARNDCQEGHILKMFPSTWYV";

/// BLOSUM62 substitution scores, indexed by [`ALPHABET`] position.
///
/// Symmetry and a sample of documented entries are pinned by tests.
pub const BLOSUM62: [[i32; 20]; 20] = [
    [4, -1, -2, -2, 0, -1, -1, 0, -2, -1, -1, -1, -1, -2, -1, 1, 0, -3, -2, 0],
    [-1, 5, 0, -2, -3, 1, 0, -2, 0, -3, -2, 2, -1, -3, -2, -1, -1, -3, -2, -3],
    [-2, 0, 6, 1, -3, 0, 0, 0, 1, -3, -3, 0, -2, -3, -2, 1, 0, -4, -2, -3],
    [-2, -2, 1, 6, -3, 0, 2, -1, -1, -3, -4, -1, -3, -3, -1, 0, -1, -4, -3, -3],
    [0, -3, -3, -3, 9, -3, -4, -3, -3, -1, -1, -3, -1, -2, -3, -1, -1, -2, -2, -1],
    [-1, 1, 0, 0, -3, 5, 2, -2, 0, -3, -2, 1, 0, -3, -1, 0, -1, -2, -1, -2],
    [-1, 0, 0, 2, -4, 2, 5, -2, 0, -3, -3, 1, -2, -3, -1, 0, -1, -3, -2, -2],
    [0, -2, 0, -1, -3, -2, -2, 6, -2, -4, -4, -2, -3, -3, -2, 0, -2, -2, -3, -3],
    [-2, 0, 1, -1, -3, 0, 0, -2, 8, -3, -3, -1, -2, -1, -2, -1, -2, -2, 2, -3],
    [-1, -3, -3, -3, -1, -3, -3, -4, -3, 4, 2, -3, 1, 0, -3, -2, -1, -3, -1, 3],
    [-1, -2, -3, -4, -1, -2, -3, -4, -3, 2, 4, -2, 2, 0, -3, -2, -1, -2, -1, 1],
    [-1, 2, 0, -1, -3, 1, 1, -2, -1, -3, -2, 5, -1, -3, -1, 0, -1, -3, -2, -2],
    [-1, -1, -2, -3, -1, 0, -2, -3, -2, 1, 2, -1, 5, 0, -2, -1, -1, -1, -1, 1],
    [-2, -3, -3, -3, -2, -3, -3, -3, -1, 0, 0, -3, 0, 6, -4, -2, -2, 1, 3, -1],
    [-1, -2, -2, -1, -3, -1, -1, -2, -2, -3, -3, -1, -2, -4, 7, -1, -1, -4, -3, -2],
    [1, -1, 1, 0, -1, 0, 0, 0, -1, -2, -2, 0, -1, -2, -1, 4, 1, -3, -2, -2],
    [0, -1, 0, -1, -1, -1, -1, -2, -2, -1, -1, -1, -1, -2, -1, 1, 5, -2, -2, 0],
    [-3, -3, -4, -4, -2, -2, -3, -2, -2, -3, -2, -3, -1, 1, -4, -3, -2, 11, 2, -3],
    [-2, -2, -2, -3, -2, -1, -2, -3, 2, -1, -1, -2, -1, 3, -3, -2, -2, 2, 7, -1],
    [0, -3, -3, -3, -1, -2, -2, -3, -3, 3, 1, -2, 1, -1, -2, -2, 0, -3, -1, 4],
];

/// Affine gap penalties for global alignment.
///
/// A gap of length L costs `gap_open + (L - 1) * gap_extend`: the first
/// position of every gap is charged `gap_open`, each additional position
/// `gap_extend`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentParams {
    pub gap_open: i64,
    pub gap_extend: i64,
}

impl Default for AlignmentParams {
    fn default() -> Self {
        AlignmentParams {
            gap_open: -11,
            gap_extend: -1,
        }
    }
}

impl AlignmentParams {
    /// Penalties must satisfy `gap_open <= gap_extend <= 0`.
    pub fn validate(&self) -> Result<(), AlignError> {
        if self.gap_open <= self.gap_extend && self.gap_extend <= 0 {
            Ok(())
        } else {
            Err(AlignError::BadGapPenalties {
                open: self.gap_open,
                extend: self.gap_extend,
            })
        }
    }
}

#[derive(Debug, Error)]
pub enum AlignError {
    #[error("cannot align an empty sequence")]
    EmptySequence,
    #[error("gap penalties must satisfy open <= extend <= 0 (got open {open}, extend {extend})")]
    BadGapPenalties { open: i64, extend: i64 },
}

/// Outcome of a global alignment.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentResult {
    /// Optimal alignment score.
    pub score: i64,
    /// Identical aligned positions in the optimal alignment. Among all
    /// alignments attaining the optimal score, the one with the most
    /// identical positions is chosen, so this value is well defined.
    pub matches: u64,
    /// `matches` divided by the length of the shorter input sequence.
    pub identity: f64,
}

/// Matrix index of a residue letter, or None for 'X' and anything else
/// outside the 20-letter alphabet. Unknown letters score 0 against all.
fn aa_index(letter: u8) -> Option<usize> {
    ALPHABET.iter().position(|&c| c == letter.to_ascii_uppercase())
}

fn pair_score(a: u8, b: u8) -> i64 {
    match (aa_index(a), aa_index(b)) {
        (Some(i), Some(j)) => BLOSUM62[i][j] as i64,
        _ => 0,
    }
}

/// (score, matches) pair ordered lexicographically, so maximization picks
/// the highest score first and the most identical positions among ties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Val {
    score: i64,
    matches: i64,
}

const NEG: Val = Val {
    score: i64::MIN / 4,
    matches: 0,
};

impl Val {
    fn add(self, score: i64, matches: i64) -> Val {
        Val {
            score: self.score + score,
            matches: self.matches + matches,
        }
    }
}

fn max3(a: Val, b: Val, c: Val) -> Val {
    a.max(b).max(c)
}

/// Needleman-Wunsch global alignment with affine gaps over BLOSUM62.
///
/// Among all optimal-score alignments the match count is maximized, which
/// makes the reported identity independent of traceback order. Letters
/// outside the 20-residue alphabet (such as 'X') score 0 against
/// everything; two equal letters still count as an identical position.
pub fn align_global(
    seq_a: &str,
    seq_b: &str,
    params: &AlignmentParams,
) -> Result<AlignmentResult, AlignError> {
    params.validate()?;
    let a = seq_a.as_bytes();
    let b = seq_b.as_bytes();
    if a.is_empty() || b.is_empty() {
        return Err(AlignError::EmptySequence);
    }
    let (open, ext) = (params.gap_open, params.gap_extend);
    let m = b.len();

    // Three-state Gotoh recurrence with rolling rows. Per cell:
    //   diag: a[i] aligned to b[j]
    //   gap_b: b[j] aligned to a gap (consumes b, moves along the row)
    //   gap_a: a[i] aligned to a gap (consumes a, moves down a column)
    let mut diag_prev = vec![NEG; m + 1];
    let mut gap_b_prev = vec![NEG; m + 1];
    let mut gap_a_prev = vec![NEG; m + 1];
    diag_prev[0] = Val { score: 0, matches: 0 };
    for j in 1..=m {
        gap_b_prev[j] = Val {
            score: open + (j as i64 - 1) * ext,
            matches: 0,
        };
    }

    let mut diag_cur = vec![NEG; m + 1];
    let mut gap_b_cur = vec![NEG; m + 1];
    let mut gap_a_cur = vec![NEG; m + 1];
    for (i, &ca) in a.iter().enumerate() {
        diag_cur[0] = NEG;
        gap_b_cur[0] = NEG;
        gap_a_cur[0] = Val {
            score: open + i as i64 * ext,
            matches: 0,
        };
        for (j, &cb) in b.iter().enumerate() {
            let j = j + 1;
            let is_match = ca.to_ascii_uppercase() == cb.to_ascii_uppercase();
            diag_cur[j] = max3(diag_prev[j - 1], gap_b_prev[j - 1], gap_a_prev[j - 1])
                .add(pair_score(ca, cb), is_match as i64);
            gap_b_cur[j] = (diag_cur[j - 1].max(gap_a_cur[j - 1]).add(open, 0))
                .max(gap_b_cur[j - 1].add(ext, 0));
            gap_a_cur[j] = (diag_prev[j].max(gap_b_prev[j]).add(open, 0))
                .max(gap_a_prev[j].add(ext, 0));
        }
        std::mem::swap(&mut diag_prev, &mut diag_cur);
        std::mem::swap(&mut gap_b_prev, &mut gap_b_cur);
        std::mem::swap(&mut gap_a_prev, &mut gap_a_cur);
    }

    let best = max3(diag_prev[m], gap_b_prev[m], gap_a_prev[m]);
    let shorter = a.len().min(b.len());
    Ok(AlignmentResult {
        score: best.score,
        matches: best.matches as u64,
        identity: best.matches as f64 / shorter as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Reference aligner: memoized recursion over (i, j, state of the last
    /// alignment column), structured differently from the iterative
    /// rolling-row production code.
    mod oracle {
        use super::{pair_score, AlignmentParams};
        use std::collections::HashMap;

        #[derive(Clone, Copy, PartialEq, Eq, Hash)]
        pub enum State {
            Diag,
            GapInA,
            GapInB,
        }

        type Key = (usize, usize, State);

        pub fn best_value(
            a: &[u8],
            b: &[u8],
            params: &AlignmentParams,
        ) -> (i64, i64) {
            let mut memo = HashMap::new();
            let mut best = (i64::MIN, i64::MIN);
            for state in [State::Diag, State::GapInA, State::GapInB] {
                let v = solve(a, b, a.len(), b.len(), state, params, &mut memo);
                if v > best {
                    best = v;
                }
            }
            best
        }

        const DEAD: (i64, i64) = (i64::MIN / 4, 0);

        fn solve(
            a: &[u8],
            b: &[u8],
            i: usize,
            j: usize,
            state: State,
            params: &AlignmentParams,
            memo: &mut HashMap<Key, (i64, i64)>,
        ) -> (i64, i64) {
            if i == 0 && j == 0 {
                return match state {
                    State::Diag => (0, 0),
                    _ => DEAD,
                };
            }
            if let Some(&v) = memo.get(&(i, j, state)) {
                return v;
            }
            let result = match state {
                State::Diag => {
                    if i == 0 || j == 0 {
                        DEAD
                    } else {
                        let s = pair_score(a[i - 1], b[j - 1]);
                        let m = (a[i - 1].to_ascii_uppercase()
                            == b[j - 1].to_ascii_uppercase()) as i64;
                        let mut best = DEAD;
                        for prev in [State::Diag, State::GapInA, State::GapInB] {
                            let (ps, pm) = solve(a, b, i - 1, j - 1, prev, params, memo);
                            let cand = (ps + s, pm + m);
                            if cand > best {
                                best = cand;
                            }
                        }
                        best
                    }
                }
                // Gap in a: the last column consumed b[j-1] against '-'.
                State::GapInA => {
                    if j == 0 {
                        DEAD
                    } else {
                        let mut best = DEAD;
                        for (prev, cost) in [
                            (State::Diag, params.gap_open),
                            (State::GapInB, params.gap_open),
                            (State::GapInA, params.gap_extend),
                        ] {
                            let (ps, pm) = solve(a, b, i, j - 1, prev, params, memo);
                            let cand = (ps + cost, pm);
                            if cand > best {
                                best = cand;
                            }
                        }
                        best
                    }
                }
                // Gap in b: the last column consumed a[i-1] against '-'.
                State::GapInB => {
                    if i == 0 {
                        DEAD
                    } else {
                        let mut best = DEAD;
                        for (prev, cost) in [
                            (State::Diag, params.gap_open),
                            (State::GapInA, params.gap_open),
                            (State::GapInB, params.gap_extend),
                        ] {
                            let (ps, pm) = solve(a, b, i - 1, j, prev, params, memo);
                            let cand = (ps + cost, pm);
                            if cand > best {
                                best = cand;
                            }
                        }
                        best
                    }
                }
            };
            memo.insert((i, j, state), result);
            result
        }
    }

    fn assert_matches_oracle(a: &str, b: &str) {
        let params = AlignmentParams::default();
        let got = align_global(a, b, &params).unwrap();
        let (score, matches) = oracle::best_value(a.as_bytes(), b.as_bytes(), &params);
        assert_eq!(got.score, score, "score mismatch for {a:?} vs {b:?}");
        assert_eq!(got.matches as i64, matches, "match-count mismatch for {a:?} vs {b:?}");
        let shorter = a.len().min(b.len()) as f64;
        assert_eq!(got.identity, matches as f64 / shorter);
    }

    #[test]
    fn matrix_is_symmetric() {
        for i in 0..20 {
            for j in 0..20 {
                assert_eq!(
                    BLOSUM62[i][j], BLOSUM62[j][i],
                    "asymmetry at {} vs {}",
                    ALPHABET[i] as char, ALPHABET[j] as char
                );
            }
        }
    }

    #[test]
    fn matrix_matches_documented_entries() {
        let score = |a: u8, b: u8| pair_score(a, b);
        // Diagonal of the standard table.
        let diag: [(u8, i64); 20] = [
            (b'A', 4), (b'R', 5), (b'N', 6), (b'D', 6), (b'C', 9),
            (b'Q', 5), (b'E', 5), (b'G', 6), (b'H', 8), (b'I', 4),
            (b'L', 4), (b'K', 5), (b'M', 5), (b'F', 6), (b'P', 7),
            (b'S', 4), (b'T', 5), (b'W', 11), (b'Y', 7), (b'V', 4),
        ];
        for (aa, expected) in diag {
            assert_eq!(score(aa, aa), expected, "diagonal {}", aa as char);
        }
        // Well-known off-diagonal values.
        assert_eq!(score(b'W', b'F'), 1);
        assert_eq!(score(b'Y', b'F'), 3);
        assert_eq!(score(b'I', b'L'), 2);
        assert_eq!(score(b'I', b'V'), 3);
        assert_eq!(score(b'K', b'R'), 2);
        assert_eq!(score(b'D', b'E'), 2);
        assert_eq!(score(b'N', b'D'), 1);
        assert_eq!(score(b'Q', b'E'), 2);
        assert_eq!(score(b'S', b'T'), 1);
        assert_eq!(score(b'A', b'S'), 1);
        assert_eq!(score(b'H', b'Y'), 2);
        assert_eq!(score(b'C', b'E'), -4);
        assert_eq!(score(b'W', b'D'), -4);
        assert_eq!(score(b'P', b'F'), -4);
        assert_eq!(score(b'G', b'I'), -4);
    }

    #[test]
    fn unknown_letters_score_zero() {
        assert_eq!(pair_score(b'X', b'A'), 0);
        assert_eq!(pair_score(b'W', b'X'), 0);
        assert_eq!(pair_score(b'X', b'X'), 0);
    }

    #[test]
    fn identity_of_sequence_with_itself_is_one() {
        let s = "MKTAYIAKQRQISFVKSHFSRQLEERLGLIEVQ";
        let r = align_global(s, s, &AlignmentParams::default()).unwrap();
        assert_eq!(r.identity, 1.0);
        assert_eq!(r.matches as usize, s.len());
    }

    #[test]
    fn disjoint_letters_have_identity_zero() {
        let r = align_global("AAAA", "CCCC", &AlignmentParams::default()).unwrap();
        assert_eq!(r.identity, 0.0);
        assert_eq!(r.matches, 0);
    }

    #[test]
    fn hand_computed_single_gap() {
        // "AA" vs "A": one residue pair plus a one-position gap.
        // Score = s(A,A) + open = 4 - 11 = -7, matches = 1,
        // identity = 1 / min(2, 1) = 1.0.
        let r = align_global("AA", "A", &AlignmentParams::default()).unwrap();
        assert_eq!(r.score, -7);
        assert_eq!(r.matches, 1);
        assert_eq!(r.identity, 1.0);
    }

    #[test]
    fn hand_computed_gap_length_three() {
        // "WWWW" vs "W": three of the four W's gapped.
        // No-gap columns score s(W,W) = 11 once; the length-3 gap costs
        // open + 2 * extend = -13. Total -2 beats aligning W against a
        // mismatch. Matches = 1, identity = 1 / 1.
        let r = align_global("WWWW", "W", &AlignmentParams::default()).unwrap();
        assert_eq!(r.score, -2);
        assert_eq!(r.matches, 1);
        assert_eq!(r.identity, 1.0);
    }

    #[test]
    fn score_is_symmetric_in_arguments() {
        let pairs = [
            ("HEAGAWGHEE", "PAWHEAE"),
            ("MKT", "MKTAY"),
            ("WWXWW", "WXW"),
        ];
        for (a, b) in pairs {
            let ab = align_global(a, b, &AlignmentParams::default()).unwrap();
            let ba = align_global(b, a, &AlignmentParams::default()).unwrap();
            assert_eq!(ab.score, ba.score);
            assert_eq!(ab.matches, ba.matches);
            assert_eq!(ab.identity, ba.identity);
        }
    }

    #[test]
    fn normalizes_by_shorter_sequence() {
        // "AQ" aligns into "AXAQGG" with 2 identical positions at best;
        // identity divides by 2, not 6.
        let r = align_global("AXAQGG", "AQ", &AlignmentParams::default()).unwrap();
        assert_eq!(r.identity, r.matches as f64 / 2.0);
    }

    #[test]
    fn agrees_with_reference_on_classic_pair() {
        assert_matches_oracle("HEAGAWGHEE", "PAWHEAE");
    }

    #[test]
    fn agrees_with_reference_on_random_pairs() {
        use crate::rng::{derive_seed, gen_below, seeded};
        let mut rng = seeded(derive_seed(0x517e, 1));
        for _ in 0..50 {
            let la = 1 + gen_below(&mut rng, 30) as usize;
            let lb = 1 + gen_below(&mut rng, 30) as usize;
            let mut mk = |n: usize| -> String {
                (0..n)
                    .map(|_| ALPHABET[gen_below(&mut rng, 20) as usize] as char)
                    .collect()
            };
            let a = mk(la);
            let b = mk(lb);
            assert_matches_oracle(&a, &b);
        }
    }

    #[test]
    fn empty_sequence_is_an_error() {
        assert!(matches!(
            align_global("", "A", &AlignmentParams::default()),
            Err(AlignError::EmptySequence)
        ));
        assert!(matches!(
            align_global("A", "", &AlignmentParams::default()),
            Err(AlignError::EmptySequence)
        ));
    }

    #[test]
    fn bad_gap_penalties_are_rejected() {
        let params = AlignmentParams {
            gap_open: -1,
            gap_extend: -11,
        };
        assert!(matches!(
            align_global("A", "A", &params),
            Err(AlignError::BadGapPenalties { .. })
        ));
    }
}
