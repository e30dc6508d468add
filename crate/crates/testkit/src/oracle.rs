//! Deliberately naive reference implementations. Each one recomputes its
//! answer from first principles and shares no code path with the library
//! routine it is checked against.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use pgakv_core::{ScoredTriple, Triple};

/// Splits on newlines and tabs, skips blanks and comments, keeps first occurrences.
pub fn split_lines_dedup(text: &str) -> Vec<(String, String, String)> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for raw in text.split('\n') {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.splitn(3, '\t');
        let s = parts.next().unwrap().trim().to_string();
        let r = parts.next().unwrap().trim().to_string();
        let o = parts.next().unwrap().trim().to_string();
        if seen.insert((s.clone(), r.clone(), o.clone())) {
            out.push((s, r, o));
        }
    }
    out
}

pub fn subject_column(triples: &[Triple]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for t in triples {
        out.insert(t.subject().to_string());
    }
    out
}

/// Scalar-loop cosine similarity.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for i in 0..a.len() {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    dot / (na.sqrt() * nb.sqrt())
}

/// Full-scan top-k by repeated maximum selection. Among equal scores the
/// lowest entry index wins.
pub fn full_scan_top_k(vectors: &[Vec<f64>], probe: &[f64], k: usize) -> Vec<(usize, f64)> {
    let scores: Vec<f64> = vectors.iter().map(|v| cosine(probe, v)).collect();
    let mut taken = vec![false; scores.len()];
    let mut out = Vec::new();
    while out.len() < k.min(scores.len()) {
        let mut best: Option<usize> = None;
        for i in 0..scores.len() {
            if taken[i] {
                continue;
            }
            best = match best {
                None => Some(i),
                Some(b) if scores[i] > scores[b] => Some(i),
                keep => keep,
            };
        }
        let b = best.unwrap();
        taken[b] = true;
        out.push((b, scores[b]));
    }
    out
}

/// Concatenates per-probe result lists, keeping each triple once at its first
/// position with the maximum score seen for it.
pub fn union_max(per_probe: &[Vec<ScoredTriple>]) -> Vec<ScoredTriple> {
    let mut out: Vec<ScoredTriple> = Vec::new();
    for list in per_probe {
        for hit in list {
            let mut found = false;
            for existing in out.iter_mut() {
                if existing.triple == hit.triple {
                    found = true;
                    if hit.score > existing.score {
                        existing.score = hit.score;
                    }
                }
            }
            if !found {
                out.push(hit.clone());
            }
        }
    }
    out
}

/// Rank subjects by triple count, then max score, then name; take `k`.
pub fn count_select(temp: &[ScoredTriple], k: usize) -> Vec<String> {
    let mut subjects: Vec<String> = Vec::new();
    for st in temp {
        if !subjects.iter().any(|s| s == st.triple.subject()) {
            subjects.push(st.triple.subject().to_string());
        }
    }
    let count = |s: &str| temp.iter().filter(|t| t.triple.subject() == s).count();
    let max = |s: &str| {
        temp.iter()
            .filter(|t| t.triple.subject() == s)
            .map(|t| t.score)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let mut chosen = Vec::new();
    while chosen.len() < k && !subjects.is_empty() {
        let mut best = 0;
        for i in 1..subjects.len() {
            let (a, b) = (&subjects[i], &subjects[best]);
            let better = match count(a).cmp(&count(b)) {
                std::cmp::Ordering::Greater => true,
                std::cmp::Ordering::Less => false,
                std::cmp::Ordering::Equal => {
                    if max(a) != max(b) {
                        max(a) > max(b)
                    } else {
                        a < b
                    }
                }
            };
            if better {
                best = i;
            }
        }
        chosen.push(subjects.remove(best));
    }
    chosen
}

/// Left-to-right sum divided by count.
pub fn mean_score(temp: &[ScoredTriple], subject: &str) -> Option<(f64, usize)> {
    let mut sum = 0.0;
    let mut n = 0;
    for st in temp {
        if st.triple.subject() == subject {
            sum += st.score;
            n += 1;
        }
    }
    (n > 0).then(|| (sum / n as f64, n))
}

/// Sequential two-pass pruning: count-select `k` subjects, then keep those
/// with mean score at or above `threshold`. Returns the kept triples in input
/// order and `(subject, confidence, support)` sorted by confidence descending.
pub fn prune_two_pass(temp: &[ScoredTriple], k: usize, threshold: f64) -> (Vec<Triple>, Vec<(String, f64, usize)>) {
    let selected = count_select(temp, k);
    let mut kept = Vec::new();
    for s in &selected {
        let (c, n) = mean_score(temp, s).unwrap();
        if c >= threshold {
            kept.push((s.clone(), c, n));
        }
    }
    // insertion sort, descending confidence, ascending name on ties
    for i in 1..kept.len() {
        let mut j = i;
        while j > 0 {
            let (a, b) = (&kept[j - 1], &kept[j]);
            let swap = b.1 > a.1 || (b.1 == a.1 && b.0 < a.0);
            if !swap {
                break;
            }
            kept.swap(j - 1, j);
            j -= 1;
        }
    }
    let mut triples = Vec::new();
    for st in temp {
        if kept.iter().any(|(s, _, _)| s == st.triple.subject()) && !triples.contains(&st.triple) {
            triples.push(st.triple.clone());
        }
    }
    (triples, kept)
}

/// LCS by enumerating every subsequence of the shorter input. Exponential;
/// only for inputs of a dozen or so elements.
pub fn lcs_enumerate<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    assert!(short.len() <= 20, "enumeration oracle is exponential");
    let is_subsequence = |mask: u32| {
        let mut j = 0;
        for (i, x) in short.iter().enumerate() {
            if mask & (1 << i) == 0 {
                continue;
            }
            while j < long.len() && long[j] != *x {
                j += 1;
            }
            if j == long.len() {
                return false;
            }
            j += 1;
        }
        true
    };
    let mut best = 0;
    for mask in 0u32..(1u32 << short.len()) {
        let len = mask.count_ones() as usize;
        if len > best && is_subsequence(mask) {
            best = len;
        }
    }
    best
}

/// Lowercase alphanumeric words; everything else separates or disappears as
/// the library's tokenizer does (punctuation is deleted, not split on).
pub fn words(s: &str) -> Vec<String> {
    let mut kept = String::new();
    for c in s.chars() {
        if c.is_whitespace() {
            kept.push(' ');
        } else if c.is_alphanumeric() {
            for l in c.to_lowercase() {
                kept.push(l);
            }
        }
    }
    kept.split(' ').filter(|w| !w.is_empty()).map(String::from).collect()
}

fn lcs_memo(a: &[String], b: &[String]) -> usize {
    let mut memo: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    fn go(i: usize, j: usize, a: &[String], b: &[String], memo: &mut BTreeMap<(usize, usize), usize>) -> usize {
        if i == a.len() || j == b.len() {
            return 0;
        }
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let v = if a[i] == b[j] {
            1 + go(i + 1, j + 1, a, b, memo)
        } else {
            go(i + 1, j, a, b, memo).max(go(i, j + 1, a, b, memo))
        };
        memo.insert((i, j), v);
        v
    }
    go(0, 0, a, b, &mut memo)
}

/// Independent ROUGE-L F1 (recursive memoized LCS, max over references).
pub fn rouge_l_f1(candidate: &str, references: &[String]) -> f64 {
    let c = words(candidate);
    if c.is_empty() {
        return 0.0;
    }
    let mut best: f64 = 0.0;
    for r in references {
        let r = words(r);
        if r.is_empty() {
            continue;
        }
        let l = lcs_memo(&c, &r) as f64;
        if l == 0.0 {
            continue;
        }
        let p = l / c.len() as f64;
        let rc = l / r.len() as f64;
        best = best.max(2.0 * p * rc / (p + rc));
    }
    best
}

/// Substring containment after the same normalization as the library.
pub fn hit(answer: &str, gold: &[String]) -> u8 {
    let a = words(answer).join(" ");
    for g in gold {
        let g = words(g).join(" ");
        if !g.is_empty() && a.contains(&g) {
            return 1;
        }
    }
    0
}
