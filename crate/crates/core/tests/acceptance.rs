//! Acceptance suite: one PASS/FAIL line per headline criterion, printed on
//! every run. `cargo test -p obfusc-core --test acceptance` runs it alone.

mod common;

use std::collections::{BTreeSet, HashMap};
use std::io::Write;
use std::time::{Duration, Instant};

use common::*;
use obfusc_core::constraints::ConstraintSet;
use obfusc_core::decoding::{diverse_preprocess, generate_from_prompt, select_beam, Candidate, DecodeConfig, Origin};
use obfusc_core::evaluation::{
    content_preservation_nli, drop_rate, perplexity_ratio, task_score, unigram_overlap,
};
use obfusc_core::filtering::{filter_cascade, survivors, FilterConfig, FilterPreset, Fallback, Outcome};
use obfusc_core::keywords::{
    extract_autoregressive_keywords, extract_embedding_keywords, extract_infill_keywords, Dictionary,
    KeywordConfig,
};
use obfusc_core::pipeline::segment_document;
use obfusc_core::scorers::mock::pair_key;
use obfusc_core::scorers::{MockModel, Scorers};
use obfusc_core::stylo::{grammar_distribution, mix, obfuscate_sentence, StyloConfig};
use obfusc_core::text::FunctionWords;
use obfusc_core::types::{DecodeMode, Hypothesis, ScoreDistribution, ScoredCandidate, TokenId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

/// Name, check and runtime budget of one criterion.
type Criterion = (&'static str, fn() -> Check, Duration);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if $cond {
        } else {
            return Err(format!($($msg)+));
        }
    };
}

fn task_score_rows() -> Check {
    let rows = [
        ((0.11, 0.75, 0.85), 0.57),
        ((0.04, 0.75, 0.85), 0.55),
        ((0.44, 0.79, 0.78), 0.67),
    ];
    for ((d, n, c), want) in rows {
        let got = task_score(d, n, c);
        ensure!((got - want).abs() <= 0.005, "({d}, {n}, {c}) gave {got}, expected {want}");
        ensure!(format!("{got:.2}") == format!("{want:.2}"), "({d}, {n}, {c}) rounds to {got:.2}");
    }
    Ok(format!("{} rows", rows.len()))
}

fn diverse_preprocessing_reference() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..1000 {
        let k = rng.gen_range(1..=8);
        let v = rng.gen_range(1..=32);
        let lambda = [0.0, 1.0, 5000.0][case % 3];
        // coarse values make argmax ties common
        let coarse = rng.gen_bool(0.3);
        let logits: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                (0..v)
                    .map(|_| {
                        if coarse {
                            rng.gen_range(-2..=2) as f64
                        } else {
                            rng.gen_range(-20.0..20.0)
                        }
                    })
                    .collect()
            })
            .collect();
        let got = diverse_preprocess(&logits, lambda).map_err(|e| e.to_string())?;
        let want = reference_diverse_preprocess(&logits, lambda);
        let bits = |m: &Vec<Vec<f64>>| -> Vec<Vec<u64>> {
            m.iter().map(|r| r.iter().map(|x| x.to_bits()).collect()).collect()
        };
        ensure!(bits(&got) == bits(&want), "case {case}: k={k} V={v} lambda={lambda} differs");
    }
    Ok("1000 matrices bit-exact".into())
}

fn codibs_exhaustive() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut configs = 0;
    let mut attempts = 0;
    let (mut sequences, mut satisfied) = (0, 0);
    while configs < 60 {
        attempts += 1;
        ensure!(attempts < 200_000, "could not draw enough tractable configurations");
        let v = rng.gen_range(4..=10);
        let max_len = rng.gen_range(2..=6);
        let k = rng.gen_range(2..=4);
        let rows = random_sparse_rows(&mut rng, v, 0.3);
        let m = bigram_mock(&rows);
        let (all, depth) = enumerate(&m, max_len);
        // the oracle ranks every sequence; beam search sees them all only
        // when no depth holds more than k prefixes
        if all.len() < 3 || depth.iter().any(|&n| n > k) {
            continue;
        }
        let n_clauses = rng.gen_range(1..=2);
        let raw: Vec<Vec<Vec<TokenId>>> = (0..n_clauses)
            .map(|_| {
                (0..rng.gen_range(1..=2))
                    .map(|_| vec![rng.gen_range(1..v as TokenId)])
                    .collect()
            })
            .collect();
        let ordered = rng.gen_bool(0.5);
        let set = ConstraintSet::new(
            raw.iter()
                .map(|alts| clause(&alts.iter().map(Vec::as_slice).collect::<Vec<_>>()))
                .collect(),
            ordered,
        );
        let mut oracle: Vec<(usize, Vec<TokenId>, f64)> = all
            .iter()
            .map(|(s, lp)| (oracle_satisfied(&raw, ordered, s), s.clone(), *lp))
            .collect();
        oracle.sort_by(|a, b| b.0.cmp(&a.0).then(b.2.total_cmp(&a.2)));
        let lambda = if rng.gen_bool(0.5) { 0.0 } else { 1.0 };
        let cfg = DecodeConfig {
            beam_width: k,
            num_return: Some(1000),
            max_len,
            likelihood_prune: (-200.0f64).exp(),
            constraint_prune: (-200.0f64).exp(),
            diversity_lambda: lambda,
            ..Default::default()
        };
        let got = generate_from_prompt(&[0], &set, &m, &cfg).map_err(|e| e.to_string())?;
        ensure!(
            got.len() == oracle.len(),
            "config {configs}: {} outputs, oracle has {} (rows {rows:?})",
            got.len(),
            oracle.len()
        );
        for (i, (g, (bank, _, lp))) in got.iter().zip(&oracle).enumerate() {
            ensure!(
                g.bank == *bank && (g.cum_logprob - lp).abs() < 1e-9,
                "config {configs} rank {i}: got (bank {}, {}), oracle (bank {bank}, {lp})",
                g.bank,
                g.cum_logprob
            );
            let entry = oracle.iter().find(|o| o.1 == g.tokens);
            ensure!(
                entry.is_some_and(|o| o.0 == *bank && (o.2 - lp).abs() < 1e-9),
                "config {configs} rank {i}: sequence {:?} not tied with oracle rank",
                g.tokens
            );
        }
        sequences += got.len();
        satisfied += got.iter().filter(|g| g.bank > 0).count();
        configs += 1;
    }
    ensure!(satisfied > 0 && satisfied < sequences, "oracle draws never separate banks");
    Ok(format!("{configs} configurations, {sequences} ranked sequences, {satisfied} with a satisfied clause"))
}

fn bank_selection() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..500 {
        let clauses = rng.gen_range(0..=4usize);
        let set = ConstraintSet::new(
            (0..clauses).map(|i| clause(&[&[100 + i as TokenId]])).collect(),
            false,
        );
        let n = rng.gen_range(1..40);
        let k = rng.gen_range(1..30);
        let cands: Vec<Candidate> = (0..n)
            .map(|i| {
                let bank = rng.gen_range(0..=clauses);
                let mut tokens: Vec<TokenId> = (0..bank as TokenId).map(|c| 100 + c).collect();
                tokens.extend(std::iter::repeat_n(1, rng.gen_range(0..3)));
                tokens.push(i as TokenId + 1000);
                Candidate {
                    hyp: Hypothesis {
                        constraints: set.state_of(&tokens),
                        tokens,
                        cum_logprob: rng.gen_range(-8..=0) as f64 / 2.0,
                        finished: false,
                    },
                    origin: if rng.gen_bool(0.3) { Origin::Forced } else { Origin::Natural },
                }
            })
            .collect();
        let mut banks: Vec<Vec<Hypothesis>> = vec![Vec::new(); clauses + 1];
        for c in &cands {
            banks[c.hyp.bank()].push(c.hyp.clone());
        }
        for b in &mut banks {
            b.sort_by(|x, y| {
                y.cum_logprob
                    .partial_cmp(&x.cum_logprob)
                    .unwrap()
                    .then(x.tokens.len().cmp(&y.tokens.len()))
                    .then(x.tokens.cmp(&y.tokens))
            });
        }
        let mut want = Vec::new();
        for round in 0.. {
            if want.len() >= k.min(n) {
                break;
            }
            for b in banks.iter().rev() {
                if want.len() < k && round < b.len() {
                    want.push(b[round].tokens.clone());
                }
            }
        }
        let got: Vec<Vec<TokenId>> = select_beam(cands, clauses, k)
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(|c| c.hyp.tokens)
            .collect();
        ensure!(got == want, "configuration {case} differs from round-robin oracle");
    }

    // invariant fuzz over full decodes
    let mut outputs = 0;
    for case in 0..150u64 {
        let mut r = ChaCha8Rng::seed_from_u64(10_000 + case);
        let v = r.gen_range(5..=10);
        let m = dense_mock(&mut r, v);
        let raw: Vec<Vec<Vec<TokenId>>> = (0..r.gen_range(0..=3))
            .map(|_| {
                (0..r.gen_range(1..=2))
                    .map(|_| (0..r.gen_range(1..=2)).map(|_| r.gen_range(1..v as TokenId)).collect())
                    .collect()
            })
            .collect();
        let ordered = r.gen_bool(0.5);
        let set = ConstraintSet::new(
            raw.iter()
                .map(|alts| clause(&alts.iter().map(Vec::as_slice).collect::<Vec<_>>()))
                .collect(),
            ordered,
        );
        let cfg = DecodeConfig {
            beam_width: r.gen_range(1..=4),
            max_len: r.gen_range(2..=7),
            diversity_lambda: [0.0, 1.0, 5000.0][r.gen_range(0..3)],
            mode: if r.gen_bool(0.5) { DecodeMode::Sample } else { DecodeMode::Greedy },
            sample_seed: case,
            ..Default::default()
        };
        let got = generate_from_prompt(&[0], &set, &m, &cfg).map_err(|e| e.to_string())?;
        for g in &got {
            outputs += 1;
            ensure!(!repeats_trigram(&g.tokens), "case {case}: repeated trigram in {:?}", g.tokens);
            ensure!(
                g.bank == oracle_satisfied(&raw, ordered, &g.tokens),
                "case {case}: bank {} disagrees with oracle for {:?}",
                g.bank,
                g.tokens
            );
            if ordered {
                let pos: Vec<usize> = set.satisfaction_positions(&g.tokens).into_iter().map_while(|p| p).collect();
                ensure!(pos.windows(2).all(|w| w[0] <= w[1]), "case {case}: ordered prefix violated");
            }
        }
    }
    Ok(format!("500 selections, {outputs} fuzzed outputs"))
}

fn scored(rng: &mut ChaCha8Rng, i: usize) -> ScoredCandidate {
    let grid = |r: &mut ChaCha8Rng| (r.gen_range(0..=20) as f64) / 20.0;
    ScoredCandidate {
        text: format!("candidate {i}"),
        tokens: Vec::new(),
        nli: grid(rng),
        cola: grid(rng),
        cum_logprob: -(rng.gen_range(0..10) as f64),
        provenance: None,
    }
}

fn filtering_monotonicity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for case in 0..200 {
        let pool: Vec<ScoredCandidate> = (0..rng.gen_range(0..12)).map(|i| scored(&mut rng, i)).collect();
        let mut t = [rng.gen_range(0..=20) as f64 / 20.0, rng.gen_range(0..=20) as f64 / 20.0];
        let fallback = if rng.gen_bool(0.5) { Fallback::Stylo } else { Fallback::Identity };
        let stylo_cola = rng.gen_range(0.0..1.0);
        let stylo = move |s: &str| Ok((format!("{s} (rewritten)"), stylo_cola));
        let cfg_of = |t: [f64; 2]| FilterConfig {
            nli_threshold: t[0],
            cola_threshold: t[1],
            fallback,
            ..FilterConfig::default()
        };
        for step in 0..6 {
            let lower = cfg_of(t);
            let axis = step % 2;
            t[axis] = (t[axis] + rng.gen_range(0..=6) as f64 / 20.0).min(1.0);
            let higher = cfg_of(t);
            let lo: BTreeSet<&str> = survivors(&pool, &lower).iter().map(|c| c.text.as_str()).collect();
            let hi: BTreeSet<&str> = survivors(&pool, &higher).iter().map(|c| c.text.as_str()).collect();
            ensure!(hi.is_subset(&lo), "pool {case}: raising a threshold added survivors");
            let before = filter_cascade(&pool, "original", &lower, Some(&stylo)).outcome;
            let after = filter_cascade(&pool, "original", &higher, Some(&stylo)).outcome;
            ensure!(
                before == Outcome::Generated || after != Outcome::Generated,
                "pool {case}: outcome went from {before:?} to generated"
            );
            // every generated pick passes both thresholds
            let d = filter_cascade(&pool, "original", &higher, Some(&stylo));
            if let Some(c) = &d.chosen {
                ensure!(c.nli >= t[0] && c.cola >= t[1], "pool {case}: pick below threshold");
            }
        }
    }
    let p = FilterPreset::AmtStylo.config();
    ensure!(
        (p.nli_threshold, p.cola_threshold, p.second_cola_threshold, p.fallback)
            == (0.40, 0.40, 0.70, Fallback::Stylo),
        "amt-stylo preset holds {p:?}"
    );
    ensure!("amt-stylo".parse::<FilterPreset>().map_err(|e| e.to_string())? == FilterPreset::AmtStylo, "preset name");
    Ok("200 pools, amt-stylo 0.40/0.40/0.70".into())
}

fn check_distribution(d: &ScoreDistribution<String>, support: &[String], want: &[f64], what: &str) -> Result<(), String> {
    ensure!(d.support() == support, "{what}: support {:?} != {support:?}", d.support());
    ensure!(d.weights().iter().all(|w| (0.0..=1.0).contains(w)), "{what}: weight outside [0,1]");
    if !want.is_empty() {
        ensure!(close(d.weights().iter().sum(), 1.0, 1e-9), "{what}: weights do not sum to one");
    }
    for (g, w) in d.weights().iter().zip(want) {
        ensure!(close(*g, *w, 1e-12), "{what}: weight {g} != {w}");
    }
    Ok(())
}

fn stylometric_invariants() -> Check {
    let m = tiny_model();
    let table = TableOracle::load(&fixture_path("tiny.tbl"));
    let dict = Dictionary::build(m.word_list(), &m, &m).map_err(|e| e.to_string())?;
    let fw = FunctionWords::bundled();
    let scorers = Scorers::from_backend(&m);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut vocabulary = m.word_list();
    vocabulary.extend(["the", "of", "and", "it", "was", "with"].map(String::from));

    // frozen words survive verbatim
    let mut replaced = 0;
    for i in 0..100 {
        let sentence = random_sentence(&mut rng, &vocabulary);
        let cfg = StyloConfig { sample_seed: i, ..StyloConfig::default() };
        let out = obfuscate_sentence(&sentence, &scorers, &dict, fw, &cfg).map_err(|e| e.to_string())?;
        let a = surface_pieces(&sentence);
        let b = surface_pieces(&out);
        ensure!(a.len() == b.len(), "piece count changed: {sentence:?} -> {out:?}");
        for (x, y) in a.iter().zip(&b) {
            let frozen = is_punct(x) || fw.contains(x) || !table.is_content(x);
            if frozen {
                ensure!(x == y, "frozen {x:?} became {y:?} in {sentence:?}");
            } else if x != y {
                replaced += 1;
            }
        }
    }
    ensure!(replaced > 0, "no content word was ever replaced");

    // normalization invariants on random score sets
    for case in 0..1000 {
        let n = rng.gen_range(1..8);
        let words: Vec<String> = (0..n).map(|i| format!("w{i}")).collect();
        let degenerate = rng.gen_bool(0.25);
        let draw = |r: &mut ChaCha8Rng| if degenerate { 0.5 } else { r.gen_range(0..=10) as f64 / 10.0 };
        let sims: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
        let s = ScoreDistribution::min_max(words.clone(), &sims);
        check_distribution(&s, &words, &oracle_min_max(&sims), &format!("S case {case}"))?;

        let delta = rng.gen_range(0..=10) as f64 / 10.0;
        let prefix = "a b";
        let suffix = "c.";
        let cola_scores: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
        let cola = MapCola {
            scores: words
                .iter()
                .zip(&cola_scores)
                .map(|(w, g)| (format!("{prefix} {w} {suffix}"), *g))
                .collect(),
            default: 0.0,
        };
        let g = grammar_distribution(&words, prefix, suffix, &cola, delta).map_err(|e| e.to_string())?;
        let kept: Vec<usize> = (0..n).filter(|&i| cola_scores[i] > delta).collect();
        let kept_words: Vec<String> = kept.iter().map(|&i| words[i].clone()).collect();
        let kept_scores: Vec<f64> = kept.iter().map(|&i| cola_scores[i]).collect();
        check_distribution(&g, &kept_words, &oracle_min_max(&kept_scores), &format!("G case {case}"))?;

        let alpha = rng.gen_range(0..=4) as f64 / 4.0;
        let beta = if alpha == 0.0 { 1.0 } else { rng.gen_range(0..=4) as f64 / 4.0 };
        let f = mix(&s, &g, alpha, beta);
        let sw = oracle_min_max(&sims);
        let gw = oracle_min_max(&kept_scores);
        let masses: Vec<f64> = kept.iter().enumerate().map(|(j, &i)| alpha * sw[i] + beta * gw[j]).collect();
        let want = if masses.is_empty() { Vec::new() } else { oracle_normalize(&masses) };
        check_distribution(&f, &kept_words, &want, &format!("F case {case}"))?;
    }

    // with beta = 0 acceptability never matters
    let base = Scorers::from_backend(&m);
    for i in 0..50 {
        let sentence = random_sentence(&mut rng, &vocabulary);
        let cfg = StyloConfig { beta: 0.0, alpha: 1.0, sample_seed: i, ..StyloConfig::default() };
        let a = obfuscate_sentence(&sentence, &base, &dict, fw, &cfg).map_err(|e| e.to_string())?;
        let low = MapCola { scores: HashMap::new(), default: 0.0 };
        let swapped = Scorers { cola: &low, ..base };
        let b = obfuscate_sentence(&sentence, &swapped, &dict, fw, &cfg).map_err(|e| e.to_string())?;
        let noisy = HashCola(i);
        let swapped = Scorers { cola: &noisy, ..base };
        let c = obfuscate_sentence(&sentence, &swapped, &dict, fw, &cfg).map_err(|e| e.to_string())?;
        ensure!(a == b && b == c, "beta=0 output depends on acceptability: {a:?} {b:?} {c:?}");
    }
    Ok(format!("100 sentences ({replaced} substitutions), 1000 score sets, 50 beta=0 swaps"))
}

fn end_to_end_determinism() -> Check {
    let m = tiny_model();
    let (first, result) = e2e_output(&m, 1);
    let source = std::fs::read_to_string(fixture_path("e2e_document.txt")).unwrap();

    // structural checks before any golden comparison
    let before = segment_document(&source, None);
    let after = segment_document(&result.obfuscated, None);
    ensure!(before.units.len() == after.units.len(), "sentence count changed");
    ensure!(
        before.units.iter().map(|u| u.paragraph_index).collect::<Vec<_>>()
            == after.units.iter().map(|u| u.paragraph_index).collect::<Vec<_>>(),
        "paragraph structure changed"
    );
    let cfg = e2e_config();
    for u in &result.units {
        if let Some(c) = &u.chosen {
            ensure!(
                c.nli >= cfg.filter.nli_threshold && c.cola >= cfg.filter.cola_threshold,
                "unit {} replaced by a candidate below threshold",
                u.unit
            );
        }
    }
    ensure!(result.outcomes.generated > 0, "no sentence was rewritten");

    for (run, workers) in [(2, 1), (3, 4), (4, 4)] {
        let (again, _) = e2e_output(&m, workers);
        ensure!(again == first, "run {run} with {workers} workers differs from run 1");
    }
    let golden = golden_path();
    if !golden.exists() && std::env::var_os("OBFUSC_UPDATE_GOLDEN").is_some() {
        std::fs::write(&golden, &first).map_err(|e| e.to_string())?;
    }
    let frozen = std::fs::read_to_string(&golden)
        .map_err(|e| format!("missing golden file {}: {e}", golden.display()))?;
    ensure!(frozen == first, "output differs from frozen golden file {}", golden.display());
    Ok(format!(
        "4 runs, workers 1 and 4, {} bytes, {} units",
        first.len(),
        result.units.len()
    ))
}

fn keyword_oracles() -> Check {
    let m = tiny_model();
    let table = TableOracle::load(&fixture_path("tiny.tbl"));
    let cfg = KeywordConfig::default();
    let fw = FunctionWords::bundled();
    let mut words = m.word_list();
    words.extend(["the", "a", "on", "in"].map(String::from));
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut checked, mut skipped) = (0, 0);
    while checked < 100 {
        let s = random_sentence(&mut rng, &words);
        let (Ok(ar), Ok(inf)) = (
            table.autoregressive_keywords(&s, cfg.likelihood_threshold),
            table.infill_keywords(&s, cfg.likelihood_threshold),
        ) else {
            skipped += 1;
            ensure!(skipped < 1000, "too many sentences on the threshold");
            continue;
        };
        let emb = table.embedding_keywords(&s, fw);
        let set = |v: Vec<String>| v.into_iter().collect::<BTreeSet<String>>();
        let got_ar = extract_autoregressive_keywords(&s, &m, &cfg).map_err(|e| e.to_string())?;
        let got_inf = extract_infill_keywords(&s, &m, &m, &cfg).map_err(|e| e.to_string())?;
        let got_emb = extract_embedding_keywords(&s, &m).map_err(|e| e.to_string())?;
        ensure!(set(got_ar.clone()) == set(ar.clone()), "autoregressive on {s:?}: {got_ar:?} vs {ar:?}");
        ensure!(set(got_inf.clone()) == set(inf.clone()), "infill on {s:?}: {got_inf:?} vs {inf:?}");
        ensure!(set(got_emb.clone()) == set(emb.clone()), "embedding on {s:?}: {got_emb:?} vs {emb:?}");
        checked += 1;
    }
    Ok(format!("{checked} sentences x 3 extractors ({skipped} threshold ties redrawn)"))
}

fn evaluation_metrics() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    // drop rate against a plain count
    for _ in 0..200 {
        let n = rng.gen_range(1..40);
        let label = |r: &mut ChaCha8Rng| format!("author{}", r.gen_range(0..4));
        let truth: Vec<String> = (0..n).map(|_| label(&mut rng)).collect();
        let orig: Vec<String> = (0..n).map(|_| label(&mut rng)).collect();
        let obf: Vec<String> = (0..n).map(|_| label(&mut rng)).collect();
        let wrong = |p: &[String]| p.iter().zip(&truth).filter(|(a, b)| a != b).count() as f64;
        let want = (wrong(&obf) - wrong(&orig)) / n as f64;
        let got = drop_rate(&orig, &obf, &truth).map_err(|e| e.to_string())?;
        ensure!(close(got, want, 1e-12), "drop rate {got} != {want}");
        ensure!(drop_rate(&orig, &orig, &truth).map_err(|e| e.to_string())? == 0.0, "self drop rate");
    }

    // entailment: mean over obfuscated sentences of the best premise
    let originals = ["The cat sat on the mat.", "A dog ran in the park.", "The old dog sat quietly."];
    let rewrites = ["A cat sat on a rug.", "The dog ran quietly."];
    let grid = [[0.9, 0.2], [0.1, 0.6], [0.3, 0.7]];
    let mut table = std::fs::read_to_string(fixture_path("tiny.tbl")).unwrap();
    table = table.replace("#NLI\n* overlap\n", "#NLI\n* 0\n");
    table.push_str("#NLI\n");
    for (i, p) in originals.iter().enumerate() {
        for (j, h) in rewrites.iter().enumerate() {
            table.push_str(&format!("{} {}\n", pair_key(p, h), grid[i][j]));
        }
    }
    let nli_model = MockModel::parse(&table).map_err(|e| e.to_string())?;
    let got = content_preservation_nli(&originals.join(" "), &rewrites.join(" "), &nli_model).map_err(|e| e.to_string())?;
    let want = (0.9 + 0.7) / 2.0;
    ensure!(close(got, want, 1e-12), "entailment grid gave {got}, expected {want}");
    let same = originals.join(" ");
    ensure!(
        content_preservation_nli(&same, &same, &nli_model).map_err(|e| e.to_string())? == 1.0,
        "self entailment is not 1"
    );

    // unigram overlap against sorted-multiset counting
    let m = tiny_model();
    let vocab = m.word_list();
    for _ in 0..200 {
        let a: Vec<&str> = (0..rng.gen_range(1..12)).map(|_| vocab[rng.gen_range(0..vocab.len())].as_str()).collect();
        let b: Vec<&str> = (0..rng.gen_range(1..12)).map(|_| vocab[rng.gen_range(0..vocab.len())].as_str()).collect();
        let got = unigram_overlap(&a.join(" "), &b.join(", "));
        ensure!(close(got, oracle_unigram_f1(&a, &b), 1e-12), "overlap of {a:?} / {b:?}");
        ensure!(unigram_overlap(&a.join(" "), &a.join(" ")) == 1.0, "self overlap");
    }

    // perplexity ratio against the bigram table
    let oracle = TableOracle::load(&fixture_path("tiny.tbl"));
    let mut words = vocab.clone();
    words.extend(["the", "a", "on", "in"].map(String::from));
    for _ in 0..100 {
        let a = random_sentence(&mut rng, &words);
        let b = random_sentence(&mut rng, &words);
        let got = perplexity_ratio(&a, &b, &m).map_err(|e| e.to_string())?;
        let want = oracle.perplexity(&b) / oracle.perplexity(&a);
        ensure!(close(got, want, 1e-9 * want.max(1.0)), "perplexity ratio {got} != {want} for {a:?} / {b:?}");
        ensure!(perplexity_ratio(&a, &a, &m).map_err(|e| e.to_string())? == 1.0, "self perplexity ratio");
    }
    Ok("drop rate, entailment grid, overlap, perplexity ratio; self-comparisons (0, 1, 1, 1)".into())
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 9] = [
        ("task-score-arithmetic", task_score_rows, Duration::from_secs(1)),
        ("diverse-preprocessing-reference", diverse_preprocessing_reference, Duration::from_secs(10)),
        ("codibs-exhaustive-oracle", codibs_exhaustive, Duration::from_secs(60)),
        ("bank-selection-and-invariants", bank_selection, Duration::from_secs(10)),
        ("filtering-monotonicity", filtering_monotonicity, Duration::from_secs(5)),
        ("stylometric-invariants", stylometric_invariants, Duration::from_secs(10)),
        ("end-to-end-determinism", end_to_end_determinism, Duration::from_secs(120)),
        ("keyword-oracles", keyword_oracles, Duration::from_secs(5)),
        ("evaluation-metrics", evaluation_metrics, Duration::from_secs(5)),
    ];
    let mut failed = Vec::new();
    let _ = writeln!(std::io::stderr());
    for (name, check, budget) in criteria {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let line = match outcome {
            Ok(detail) if elapsed <= budget => format!("PASS {name}: {detail} [{elapsed:.2?}]"),
            Ok(detail) => format!("FAIL {name}: {detail} but took {elapsed:.2?}, budget {budget:?}"),
            Err(why) => format!("FAIL {name}: {why} [{elapsed:.2?}]"),
        };
        // written past the test harness capture so every run shows the verdicts
        let _ = writeln!(std::io::stderr(), "{line}");
        if line.starts_with("FAIL") {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
