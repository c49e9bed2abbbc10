//! Character-level longest common subsequence.

use alloc::vec::Vec;

use crate::text::normalize;

/// LCS length of two normalized strings, counted in characters.
pub fn lcs_length(a: &str, b: &str) -> usize {
    let a: Vec<char> = normalize(a).chars().collect();
    let b: Vec<char> = normalize(b).chars().collect();
    lcs_length_chars(&a, &b)
}

/// LCS length over raw character slices, O(|a|·|b|) time and
/// O(min(|a|, |b|)) space.
pub fn lcs_length_chars(a: &[char], b: &[char]) -> usize {
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    if short.is_empty() {
        return 0;
    }
    let mut row = alloc::vec![0usize; short.len() + 1];
    for &x in long {
        let mut diag = 0;
        for (j, &y) in short.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[short.len()]
}
