//! Answer scoring: Hit@1 by normalized alias containment and ROUGE-L F1.

use log::warn;

/// Lowercases, removes punctuation and collapses whitespace.
pub fn normalize_text(s: &str) -> String {
    let cleaned: String = s
        .chars()
        .filter(|c| c.is_alphanumeric() || c.is_whitespace())
        .flat_map(char::to_lowercase)
        .collect();
    cleaned.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Tokens used by ROUGE-L: the words of [`normalize_text`].
pub fn tokenize(s: &str) -> Vec<String> {
    normalize_text(s)
        .split(' ')
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// 1 if any normalized gold alias occurs in the normalized answer, else 0.
/// Aliases that normalize to the empty string never match.
pub fn hit_at_1(answer: &str, gold: &[String]) -> u8 {
    let answer = normalize_text(answer);
    let hit = gold.iter().any(|g| {
        let g = normalize_text(g);
        !g.is_empty() && answer.contains(&g)
    });
    u8::from(hit)
}

/// Longest common subsequence length, O(|a|·|b|) time, O(|b|) space.
pub fn lcs_length<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn f1_against(candidate: &[String], reference: &[String]) -> f64 {
    if reference.is_empty() {
        return 0.0;
    }
    let lcs = lcs_length(candidate, reference) as f64;
    let precision = lcs / candidate.len() as f64;
    let recall = lcs / reference.len() as f64;
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// ROUGE-L F1 of `candidate`, maximized over `references`.
pub fn rouge_l_f1(candidate: &str, references: &[String]) -> f64 {
    let cand = tokenize(candidate);
    if cand.is_empty() {
        warn!("ROUGE-L: candidate has no tokens, scoring 0");
        return 0.0;
    }
    if references.is_empty() {
        warn!("ROUGE-L: no references, scoring 0");
        return 0.0;
    }
    references
        .iter()
        .map(|r| f1_against(&cand, &tokenize(r)))
        .fold(0.0, f64::max)
}
