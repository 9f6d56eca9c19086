//! One line per acceptance criterion. Tolerances are fixed here; a criterion
//! listed in `KNOWN_UNMET` reports FAIL without failing the run.

mod common;
#[path = "../../core/tests/support/decode_sim.rs"]
mod decode_sim;
#[path = "../../core/tests/support/ted_oracle.rs"]
mod ted_oracle;

use std::collections::HashMap;
use std::fs;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wcagfix::color::{contrast_ratio, parse_color, repair_contrast, rgb_to_hsl, Rgb};
use wcagfix::fix::{fix_to_fixed_point, FixConfig};
use wcagfix::guidance::{
    decode, guided_distribution, guided_logits, Condition, GuidanceConfig, LogitVector, ToyModel,
};
use wcagfix::metrics::ted::{labeled_tree_distance, LabeledTree};
use wcagfix::stats::{bonferroni, chi2_goodness, chi2_pairwise};
use wcagfix::{violation_improvement, DomTree, RuleId};

/// Criteria that cannot be met on this machine; see the notes printed with them.
const KNOWN_UNMET: &[u32] = &[5];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(x: f64, want: f64, tol: f64) -> bool {
    (x - want).abs() <= tol
}

fn criterion_1() -> Outcome {
    let g = chi2_goodness(&[248, 54, 99]).unwrap();
    let ac = chi2_pairwise(248, 99, false).unwrap();
    let adj = bonferroni(0.05, 3);
    let pass = within(g.chi2, 154.27, 0.01)
        && g.dof == 2
        && g.p_value < 0.001
        && within(ac.chi2, 64.00, 0.05)
        && within(adj, 0.0167, 1e-4);
    outcome(
        pass,
        format!(
            "chi2 = {:.4} (154.27 +/- 0.01), dof {}, p = {:.2e} (< 0.001); A>C chi2 = {:.4} (64.00 +/- 0.05); alpha_adj = {:.6} (0.0167 +/- 1e-4)",
            g.chi2, g.dof, g.p_value, ac.chi2, adj
        ),
    )
}

fn criterion_2() -> Outcome {
    let a = violation_improvement(5.335, 0.439).unwrap();
    let b = violation_improvement(5.335, 0.509).unwrap();
    outcome(
        within(a, 91.8, 0.1) && within(b, 90.5, 0.1),
        format!("{a:.3}% (91.8 +/- 0.1), {b:.3}% (90.5 +/- 0.1)"),
    )
}

fn lin(c: u8) -> f64 {
    let s = c as f64 / 255.0;
    if s <= 0.03928 {
        s / 12.92
    } else {
        ((s + 0.055) / 1.055).powf(2.4)
    }
}

fn criterion_3() -> Outcome {
    let black = Rgb::from_u8(0, 0, 0);
    let white = Rgb::from_u8(255, 255, 255);
    let bw = contrast_ratio(black, white);
    let grey = contrast_ratio(parse_color("#767676").unwrap(), white);
    let l = lin(0x76);
    let hand = 1.05 / (l + 0.05);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut ok = 0;
    let mut worst_hue: f64 = 0.0;
    for _ in 0..1000 {
        let fg = Rgb::from_u8(rng.gen(), rng.gen(), rng.gen());
        let bg = Rgb::from_u8(rng.gen(), rng.gen(), rng.gen());
        let best = contrast_ratio(black, bg).max(contrast_ratio(white, bg));
        let target = rng.gen_range(1.0..=best);
        let Ok(fixed) = repair_contrast(fg, bg, target) else {
            continue;
        };
        let mut good = contrast_ratio(fixed, bg) >= target;
        if fg.chroma() > 0.0 && fixed.chroma() > 1e-9 {
            let d = (rgb_to_hsl(fg).h - rgb_to_hsl(fixed).h).rem_euclid(360.0);
            let d = d.min(360.0 - d);
            worst_hue = worst_hue.max(d);
            good &= d <= 1.0;
        }
        ok += usize::from(good);
    }
    outcome(
        bw == 21.0 && within(grey, 4.54, 0.01) && within(grey, hand, 1e-12) && ok == 1000,
        format!(
            "black/white = {bw} (exact 21); #767676/white = {grey:.4} (4.54 +/- 0.01, hand oracle {hand:.4}); repairs meeting target {ok}/1000, worst hue drift {worst_hue:.2e} deg (<= 1)"
        ),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut endpoints = 0;
    let mut affine = 0;
    let mut softmax = 0;
    let mut worst_sum: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.gen_range(2..64);
        let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-50.0..50.0)).collect();
        let q: Vec<f64> = (0..n).map(|_| rng.gen_range(-50.0..50.0)).collect();
        let pos = LogitVector::new(p.clone()).unwrap();
        let neg = LogitVector::new(q.clone()).unwrap();
        endpoints += usize::from(
            guided_logits(&pos, &neg, 1.0).unwrap() == pos
                && guided_logits(&pos, &neg, 0.0).unwrap() == neg,
        );
        let all_affine = [0.5, 1.05, 1.1, 2.0].iter().all(|&g| {
            let out = guided_logits(&pos, &neg, g).unwrap();
            (0..n).all(|i| {
                let want = q[i] + g * (p[i] - q[i]);
                (out.scores[i] - want).abs() <= 1e-9 * (1.0 + want.abs())
            })
        });
        affine += usize::from(all_affine);
        let g = guided_logits(&pos, &neg, 1.1).unwrap();
        let d = guided_distribution(&g);
        let sum: f64 = d.iter().sum();
        worst_sum = worst_sum.max((sum - 1.0).abs());
        let shift = rng.gen_range(-1e3..1e3);
        let moved = guided_distribution(
            &LogitVector::new(g.scores.iter().map(|s| s + shift).collect()).unwrap(),
        );
        softmax += usize::from(
            (sum - 1.0).abs() <= 1e-9 && d.iter().zip(&moved).all(|(a, b)| (a - b).abs() <= 1e-9),
        );
    }

    // toy model against a direct table walk
    let names = ["<s>", "</s>", "x", "y", "z"];
    let mut decodes = 0;
    let mut agree = 0;
    for _ in 0..200 {
        let mut rows = Vec::new();
        let mut table = HashMap::new();
        for prev in [0, 2, 3, 4] {
            for zero in [true, false] {
                for next in 0..names.len() {
                    let v: f64 = rng.gen_range(-5.0..5.0);
                    let cond = if zero {
                        Condition::ZeroViolations
                    } else {
                        Condition::NonZeroViolations
                    };
                    rows.push((names[prev], cond, names[next], v));
                    table.insert((prev, zero, next), v);
                }
            }
        }
        let model = ToyModel::from_entries(&rows).unwrap();
        let sim = decode_sim::Table {
            vocab: names.iter().map(|s| s.to_string()).collect(),
            logits: table,
            eos: 1,
        };
        for gamma in [0.0, 1.0, 1.05, 1.1, 2.0] {
            let cfg = GuidanceConfig {
                max_tokens: 16,
                ..GuidanceConfig::with_gamma(gamma)
            };
            decodes += 1;
            agree += usize::from(decode(&model, &[0], &cfg).unwrap() == sim.simulate(0, gamma, 16));
        }
    }
    outcome(
        endpoints == 1000 && affine == 1000 && softmax == 1000 && agree == decodes,
        format!(
            "exact endpoints {endpoints}/1000; affine at gamma 0.5/1.05/1.1/2 {affine}/1000; softmax sum and shift {softmax}/1000 (worst |sum-1| {worst_sum:.1e}, tol 1e-9); toy decodes matching hand simulation {agree}/{decodes}"
        ),
    )
}

fn criterion_5() -> Outcome {
    let abc = ["a", "b", "c"];
    let pool = ted_oracle::labeled_trees_upto(6, &abc);
    let flats: Vec<_> = pool.iter().map(ted_oracle::flatten).collect();
    let small = pool.iter().take_while(|t| t.size() <= 3).count();
    let upto4 = pool.iter().take_while(|t| t.size() <= 4).count();
    let mut checked = 0u64;
    let mut mismatches = 0u64;
    let mut check = |i: usize, j: usize| {
        checked += 1;
        if labeled_tree_distance(&pool[i], &pool[j])
            != ted_oracle::flat_distance(&flats[i], &flats[j])
        {
            mismatches += 1;
        }
    };
    for i in 0..upto4 {
        for j in 0..upto4 {
            check(i, j);
        }
    }
    for i in upto4..pool.len() {
        for j in 0..small {
            check(i, j);
            check(j, i);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let sampled = 2_000_000;
    for _ in 0..sampled {
        check(rng.gen_range(0..pool.len()), rng.gen_range(0..pool.len()));
    }
    let mut axioms = 0;
    for _ in 0..500 {
        let t: Vec<&LabeledTree> = (0..3).map(|_| pool.choose(&mut rng).unwrap()).collect();
        let d = |x: &LabeledTree, y: &LabeledTree| labeled_tree_distance(x, y);
        let ok = d(t[0], t[0]) == 0
            && (t[0] == t[1]) == (d(t[0], t[1]) == 0)
            && d(t[0], t[1]) == d(t[1], t[0])
            && d(t[0], t[2]) <= d(t[0], t[1]) + d(t[1], t[2]);
        axioms += usize::from(ok);
    }
    let exhaustive = std::env::var_os("WCAGFIX_TED_EXHAUSTIVE").is_some();
    let mut full = String::new();
    let mut full_ok = false;
    if exhaustive {
        let mut bad = 0u64;
        for i in 0..pool.len() {
            for j in 0..pool.len() {
                if labeled_tree_distance(&pool[i], &pool[j])
                    != ted_oracle::flat_distance(&flats[i], &flats[j])
                {
                    bad += 1;
                }
            }
        }
        full_ok = bad == 0;
        full = format!(
            "; full sweep of {} pairs: {bad} mismatches",
            pool.len() * pool.len()
        );
    }
    let reduced_ok = mismatches == 0 && axioms == 500;
    outcome(
        reduced_ok && full_ok,
        format!(
            "{} trees of <= 6 nodes over 3 labels; all {} pairs is ~1.2e9 oracle searches (hours on one core), so the default run checks a reduced scope: every pair of trees <= 4 nodes, every tree vs every tree <= 3 nodes both ways, and {sampled} random pairs = {checked} pairs, {mismatches} mismatches; metric axioms {axioms}/500{}{}",
            pool.len(),
            pool.len() * pool.len(),
            full,
            if exhaustive { "" } else { "; set WCAGFIX_TED_EXHAUSTIVE=1 for the full sweep" }
        ),
    )
}

fn criterion_6() -> Outcome {
    let pages = common::synthetic_pages();
    let cfg = FixConfig::default();
    let mut seeded: HashMap<RuleId, usize> = HashMap::new();
    let mut residual = 0;
    let mut increases = 0;
    let mut not_idempotent = 0;
    let mut before = 0;
    for p in &pages {
        let tree = DomTree::parse(&fs::read(p).unwrap()).unwrap();
        let out = fix_to_fixed_point(&tree, "page", &cfg);
        for r in RuleId::ALL {
            *seeded.entry(r).or_default() += out.history[0].report.count(r);
        }
        before += out.history[0].report.total;
        residual += out.final_report.total;
        let totals: Vec<usize> = out.history.iter().map(|h| h.report.total).collect();
        increases += totals.windows(2).filter(|w| w[1] > w[0]).count();
        let text = out.tree.serialize();
        let again = fix_to_fixed_point(&DomTree::parse_str(&text).unwrap(), "page", &cfg);
        if again.actions().count() != 0 || again.tree.serialize() != text {
            not_idempotent += 1;
        }
    }
    let all_rules = RuleId::ALL.iter().all(|r| seeded[r] > 0);
    outcome(
        pages.len() == 50 && all_rules && residual == 0 && increases == 0 && not_idempotent == 0,
        format!(
            "{} pages, {before} seeded violations covering {} of 10 rules; residual {residual}; round-to-round increases {increases}; pages changed by a second run {not_idempotent}",
            pages.len(),
            RuleId::ALL.iter().filter(|r| seeded[r] > 0).count()
        ),
    )
}

fn criterion_7() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let mut inputs: Vec<_> = fs::read_dir(common::golden_dir().join("inputs"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    inputs.sort();
    let mut args: Vec<&dyn AsRef<std::ffi::OsStr>> = vec![&"--output-dir", &out, &"check"];
    for p in &inputs {
        args.push(p);
    }
    let status = common::wcagfix(&args).status.code();
    let mut same = 0;
    let mut blocks = 0;
    for p in &inputs {
        let stem = p.file_stem().unwrap().to_string_lossy().into_owned();
        let want = fs::read(
            common::golden_dir()
                .join("expected")
                .join(format!("{stem}.txt")),
        )
        .unwrap();
        let got = fs::read(out.join("reports").join(format!("{stem}.txt"))).unwrap_or_default();
        blocks += String::from_utf8_lossy(&want)
            .matches("Level: violation\nXPath: ")
            .count();
        same += usize::from(want == got);
    }
    outcome(
        status == Some(1) && same == inputs.len(),
        format!("{same}/{} report files byte-identical to goldens ({blocks} violation blocks); exit status {status:?} (1 expected)", inputs.len()),
    )
}

type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 7] = [
        (
            1,
            "study statistics",
            Duration::from_millis(500),
            criterion_1,
        ),
        (
            2,
            "violation-improvement arithmetic",
            Duration::from_millis(500),
            criterion_2,
        ),
        (
            3,
            "contrast mathematics",
            Duration::from_secs(5),
            criterion_3,
        ),
        (
            4,
            "guidance decoding properties",
            Duration::from_secs(10),
            criterion_4,
        ),
        (
            5,
            "tree edit distance oracle",
            Duration::from_secs(60),
            criterion_5,
        ),
        (
            6,
            "checker/fixer fixed point",
            Duration::from_secs(30),
            criterion_6,
        ),
        (
            7,
            "report format goldens",
            Duration::from_secs(10),
            criterion_7,
        ),
    ];
    let mut unexpected = Vec::new();
    for (id, name, limit, run) in criteria {
        let start = Instant::now();
        let o = run();
        let took = start.elapsed();
        let pass = o.pass && took <= limit;
        let tag = if pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {id} {tag} {name}: {} [{:.2?} of {:?}]",
            o.detail, took, limit
        );
        if !pass && !KNOWN_UNMET.contains(&id) {
            unexpected.push(id);
        }
    }
    println!(
        "criterion 8 N/A headline corpus reduction and benchmark-table numbers: declared not reproducible without the benchmark dataset and a fine-tuned vision-language model; covered in substitute by criteria 2, 4 and 6"
    );
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
