//! Slow, direct reference implementations used to check the library.
#![allow(dead_code)]

use std::collections::HashMap;

/// Pearson by the definition: centered cross products over centered norms.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..x.len() {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Rank of each value counting the values below it, ties sharing the mean
/// of the positions they occupy.
pub fn tied_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|v| {
            let below = x.iter().filter(|w| *w < v).count() as f64;
            let equal = x.iter().filter(|w| *w == v).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&tied_ranks(x), &tied_ranks(y))
}

/// Clipped n-gram overlap found by matching each candidate n-gram against an
/// unused reference n-gram.
pub fn rouge_n(candidate: &[&str], reference: &[&str], n: usize) -> (f64, f64) {
    let grams = |t: &[&str]| -> Vec<String> {
        if t.len() < n {
            return vec![];
        }
        (0..=t.len() - n).map(|i| t[i..i + n].join("\u{1}")).collect()
    };
    let cand = grams(candidate);
    let refr = grams(reference);
    let mut used = vec![false; refr.len()];
    let mut hits = 0;
    for g in &cand {
        if let Some(j) = (0..refr.len()).find(|&j| !used[j] && &refr[j] == g) {
            used[j] = true;
            hits += 1;
        }
    }
    let p = if cand.is_empty() { 0.0 } else { hits as f64 / cand.len() as f64 };
    (p, hits as f64 / refr.len() as f64)
}

/// Weighted LCS by memoized recursion from the ends of both sequences.
/// Returns the score and the length of the consecutive run ending at
/// `(i, j)`.
pub fn wlcs(reference: &[&str], candidate: &[&str], weight: f64) -> f64 {
    fn go(
        r: &[&str],
        c: &[&str],
        i: usize,
        j: usize,
        w: f64,
        memo: &mut HashMap<(usize, usize), (f64, usize)>,
    ) -> (f64, usize) {
        if i == 0 || j == 0 {
            return (0.0, 0);
        }
        if let Some(v) = memo.get(&(i, j)) {
            return *v;
        }
        let out = if r[i - 1] == c[j - 1] {
            let (s, k) = go(r, c, i - 1, j - 1, w, memo);
            let f = |k: usize| (k as f64).powf(w);
            (s + f(k + 1) - f(k), k + 1)
        } else {
            let up = go(r, c, i - 1, j, w, memo).0;
            let left = go(r, c, i, j - 1, w, memo).0;
            (up.max(left), 0)
        };
        memo.insert((i, j), out);
        out
    }
    go(reference, candidate, reference.len(), candidate.len(), weight, &mut HashMap::new()).0
}

pub fn rouge_w(candidate: &[&str], reference: &[&str], weight: f64) -> (f64, f64) {
    let s = wlcs(reference, candidate, weight);
    let norm = |len: usize| (s / (len as f64).powf(weight)).powf(1.0 / weight);
    (norm(candidate.len()), norm(reference.len()))
}

pub fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn is_subsequence(short: &[String], long: &[String]) -> bool {
    let mut it = long.iter();
    short.iter().all(|s| it.any(|l| l == s))
}

/// Tokens a mutation touched, read off the original and mutated sequences.
/// Panics if the output could not have come from that kind of edit.
pub fn edits(kind: &str, gold: &[String], out: &[String]) -> usize {
    match kind {
        "delete" => {
            assert!(is_subsequence(out, gold), "deletion reordered tokens");
            gold.len() - out.len()
        }
        "add" => {
            assert!(is_subsequence(gold, out), "insertion lost original tokens");
            out.len() - gold.len()
        }
        "replace" => {
            assert_eq!(gold.len(), out.len(), "replacement changed length");
            gold.iter().zip(out).filter(|(a, b)| a != b).count()
        }
        other => panic!("unknown edit kind {other}"),
    }
}

/// `round_half_up(i/10 · m)` in integer arithmetic.
pub fn tenth_count(i: usize, m: usize) -> usize {
    (2 * i * m + 10) / 20
}

/// Central finite-difference gradient of `f` at `p`.
pub fn numeric_gradient(p: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut q = p.to_vec();
    (0..p.len())
        .map(|i| {
            q[i] = p[i] + h;
            let up = f(&q);
            q[i] = p[i] - h;
            let down = f(&q);
            q[i] = p[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Largest `|a − n| / max(|a|, |n|, floor)` over all coordinates.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}
