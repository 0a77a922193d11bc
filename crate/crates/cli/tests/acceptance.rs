//! Acceptance suite. Prints one PASS/FAIL line per criterion, then fails if
//! any criterion failed. Criteria run one after another so that the timings
//! are not distorted by other tests.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;

use softspell::alphabet::{Symbol, MAX_WORD_LEN, NUM_CLASSES};
use softspell::channel::{calibrate, empirical_topk, to_distribution, ConfusionModel, Distribution, VariantSpec};
use softspell::eval::{
    generalization, run_ablation_detailed, train_variant, word_accuracy, AblationConfig, AblationSettings, Ratio,
    SeedSetup,
};
use softspell::lexicon::Lexicon;
use softspell::nn::{grad_check, BnMode, Batch};
use softspell::pipeline::{argmax_symbols, simulate_symbols, TestRepresentation};
use softspell::spellnet::{
    character_matches, generate_dataset, input_matrix, train, DatasetConfig, SpellNet, SpellNetConfig, TrainConfig,
};
use softspell::statistical::{levenshtein, levenshtein_str, norvig_correct_str};
use softspell::rng;

// same allocator as the binary, so timings match what `softspell eval` does
#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

struct Outcome {
    id: u32,
    pass: bool,
    detail: String,
}

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn full_lexicon() -> Lexicon {
    let d = data_dir();
    Lexicon::load(&d.join("de_words.txt"), Some(&d.join("de_freq.tsv"))).expect("data lexicon")
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn naive(a: &[u8], b: &[u8]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let cost = usize::from(a[0] != b[0]);
    (naive(&a[1..], &b[1..]) + cost).min(naive(&a[1..], b) + 1).min(naive(a, &b[1..]) + 1)
}

fn all_words(max_len: usize, symbols: u8) -> Vec<Vec<u8>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        frontier = frontier
            .iter()
            .flat_map(|w: &Vec<u8>| {
                (0..symbols).map(move |s| {
                    let mut n = w.clone();
                    n.push(s);
                    n
                })
            })
            .collect();
        out.extend(frontier.iter().cloned());
    }
    out
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let words = all_words(6, 3);
    let mut pairs = 0u64;
    let mut mismatches = 0u64;
    for a in &words {
        for b in &words {
            pairs += 1;
            if levenshtein(a, b) != naive(a, b) {
                mismatches += 1;
            }
        }
    }
    let t = start.elapsed();
    Outcome {
        id: 1,
        pass: mismatches == 0 && t < Duration::from_secs(60),
        detail: format!("{pairs} pairs, {mismatches} mismatches, {:.1}s (limit 60s)", secs(t)),
    }
}

fn criterion_2() -> Outcome {
    let lex = Lexicon::from_words(["SAGE", "LUD", "NIMM", "LISTE"]).unwrap();
    let checks = [
        ("d(LIMTM, NIMM) = 2", levenshtein_str("LIMTM", "NIMM") == 2),
        ("d(LIMTM, LISTE) = 2", levenshtein_str("LIMTM", "LISTE") == 2),
        ("d(SEAGE, SAGE) = 1", levenshtein_str("SEAGE", "SAGE") == 1),
        ("SEAGE -> SAGE", norvig_correct_str("SEAGE", &lex, 2) == "SAGE"),
        ("XLUD -> LUD", norvig_correct_str("XLUD", &lex, 2) == "LUD"),
        ("MPRSCGER -> MPRSCGER", norvig_correct_str("MPRSCGER", &lex, 2) == "MPRSCGER"),
    ];
    let failed: Vec<_> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    Outcome {
        id: 2,
        pass: failed.is_empty(),
        detail: if failed.is_empty() {
            format!("{} anchors hold", checks.len())
        } else {
            format!("failed: {}", failed.join(", "))
        },
    }
}

fn random_word<R: Rng>(r: &mut R) -> Vec<Symbol> {
    let len = r.random_range(1..=MAX_WORD_LEN);
    (0..len).map(|_| Symbol::from_index(r.random_range(0..35)).unwrap()).collect()
}

fn random_variant<R: Rng>(r: &mut R) -> VariantSpec {
    match r.random_range(0..5) {
        0 => VariantSpec::Hardmax,
        1 => VariantSpec::Softmax,
        2 => VariantSpec::MixHardSoft { p_hard: r.random() },
        3 => VariantSpec::AlphaScaled { lo: 0.0, hi: r.random_range(1.0..2000.0) },
        _ => VariantSpec::NoiseAdded { variance: r.random_range(0.0..1.0) },
    }
}

fn random_model<R: Rng>(r: &mut R) -> ConfusionModel {
    let other = r.random_range(-4.0..2.0);
    let distractor = other + r.random_range(0.1..6.0);
    let truth = distractor + r.random_range(0.1..6.0);
    ConfusionModel::with_levels(truth, distractor, other, r.random_range(0.01..6.0), r.random_range(0.1..5.0)).unwrap()
}

fn random_pairs(n: usize, seed: u64) -> (Batch<f64>, Batch<f64>) {
    let mut r = rng::seeded(seed);
    let model = random_model(&mut r);
    let mut xs = Vec::new();
    let mut ts = Vec::new();
    for _ in 0..n {
        let w = random_word(&mut r);
        let cols: Vec<Distribution> = w
            .iter()
            .map(|&s| to_distribution(&model.sample_logits(s, &mut r).unwrap(), &VariantSpec::Softmax, 1.0, &mut r))
            .collect();
        xs.push(input_matrix::<f64>(&cols).unwrap());
        ts.push(softspell::spellnet::target_matrix::<f64>(&w).unwrap());
    }
    (Batch::stack(&xs).unwrap(), Batch::stack(&ts).unwrap())
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let mut retries = 0;
    for seed in [11u64, 12, 13] {
        let mut net: SpellNet<f64> = SpellNet::build(SpellNetConfig::default(), seed).unwrap();
        let mut r = rng::seeded(seed + 100);
        // the output layer starts at zero; give it weights so every gradient is exercised
        net.head_mut().init_he(&mut r);
        net.set_mode(BnMode::Infer);
        let (x, t) = random_pairs(4, seed + 200);
        let report = grad_check(&mut net, &x, &t, 1e-4, 0.01, &mut r).unwrap();
        worst = worst.max(report.max_rel_error);
        checked += report.checked;
        retries += report.kink_retries;
    }
    let t = start.elapsed();
    Outcome {
        id: 3,
        pass: worst < 1e-4 && t < Duration::from_secs(120),
        detail: format!(
            "max relative error {worst:.2e} over {checked} parameters ({retries} kink retries), 3 seeds, {:.1}s (limits 1e-4, 120s)",
            secs(t)
        ),
    }
}

fn criterion_4() -> Outcome {
    let mut r = rng::seeded(44);
    let mut worst: f64 = 0.0;
    let mut oov_violations = 0;
    for _ in 0..10_000 {
        let model = random_model(&mut r);
        let truth = Symbol::from_index(r.random_range(0..35)).unwrap();
        let variant = random_variant(&mut r);
        let temperature = model.temperature;
        let d = to_distribution(&model.sample_logits(truth, &mut r).unwrap(), &variant, temperature, &mut r);
        worst = worst.max((d.iter().sum::<f64>() - 1.0).abs());
        if d[NUM_CLASSES - 1] != 0.0 {
            oov_violations += 1;
        }
    }
    let channel_worst = worst;

    let mut net_worst: f64 = 0.0;
    for (i, seed) in (0..10u64).enumerate() {
        let mut net: SpellNet<f64> = SpellNet::build(SpellNetConfig::default(), seed).unwrap();
        net.head_mut().init_he(&mut rng::seeded(seed + 1000));
        if i % 2 == 1 {
            // non-trivial running statistics
            let (x, t) = random_pairs(64, seed + 2000);
            let pairs: Vec<_> = x
                .unstack()
                .into_iter()
                .zip(t.unstack())
                .map(|(input, target)| softspell::spellnet::TrainingPair { input, target })
                .collect();
            let cfg = TrainConfig { batch_size: 16, epochs: 1, seed, ..TrainConfig::default() };
            train(&mut net, &pairs, &cfg).unwrap();
        }
        let (x, _) = random_pairs(1000, seed + 3000);
        let out = net.forward_batch(&x).unwrap();
        for sample in out.unstack() {
            for l in 0..MAX_WORD_LEN {
                net_worst = net_worst.max((sample.column_sum(l) - 1.0).abs());
            }
        }
    }
    Outcome {
        id: 4,
        pass: channel_worst <= 1e-12 && net_worst <= 1e-12 && oov_violations == 0,
        detail: format!(
            "channel max |sum-1| {channel_worst:.1e}, OOV nonzero {oov_violations}; net max |sum-1| {net_worst:.1e} over 10000 outputs (limit 1e-12)"
        ),
    }
}

fn criterion_5() -> (Outcome, ConfusionModel) {
    let start = Instant::now();
    let cal = calibrate(0.75, 0.98, 100_000, &mut rng::seeded(5)).unwrap();
    let mut fresh = rng::seeded(55);
    let top1 = empirical_topk(&cal.model, 1, 100_000, &mut fresh);
    let top5 = empirical_topk(&cal.model, 5, 100_000, &mut fresh);
    let t = start.elapsed();
    (
        Outcome {
            id: 5,
            pass: (top1 - 0.75).abs() <= 0.01 && (top5 - 0.98).abs() <= 0.005 && t < Duration::from_secs(60),
            detail: format!(
                "fresh 100000-sample check: top-1 {top1:.4}, top-5 {top5:.4}; sigma {:.3}, distractor mean {:.3}; {:.1}s (limits ±0.01, ±0.005, 60s)",
                cal.model.sigma,
                cal.model.mu_distractor,
                secs(t)
            ),
        },
        cal.model,
    )
}

fn criterion_6(model: &ConfusionModel, lex: &Lexicon) -> Outcome {
    let mut r = rng::seeded(6);
    let pairs: Vec<(Vec<Symbol>, Vec<Symbol>)> = (0..10_000u64)
        .map(|i| {
            let w = lex.sample_word(&mut r, Some(5..=5)).unwrap();
            let s = simulate_symbols(w.clone(), model, &VariantSpec::Softmax, rng::derive_seed(66, i)).unwrap();
            (argmax_symbols(&s).into_vec(), w.into_vec())
        })
        .collect();
    let acc = word_accuracy(&pairs).value();
    let expected = 0.75f64.powi(5);
    Outcome {
        id: 6,
        pass: (acc - expected).abs() <= 0.02,
        detail: format!("word accuracy {acc:.4} vs {expected:.4} (limit ±0.02)"),
    }
}

fn criterion_7(model: &ConfusionModel, lex: &Lexicon) -> Outcome {
    let start = Instant::now();
    let small = lex.subset(&mut rng::seeded(7), 10, Some(3..=10)).unwrap();
    let cfg = DatasetConfig { n_pairs: 10, ..DatasetConfig::default() };
    let pairs = generate_dataset::<f64>(&small, model, &VariantSpec::Softmax, &cfg, 77).unwrap();
    let mut net: SpellNet<f64> = SpellNet::build(SpellNetConfig::default(), 7).unwrap();
    let tc = TrainConfig { epochs: 500, seed: 7, ..TrainConfig::default() };
    train(&mut net, &pairs, &tc).unwrap();
    let (hits, total) = character_matches(&net, &pairs).unwrap();
    let t = start.elapsed();
    Outcome {
        id: 7,
        pass: hits == total && t < Duration::from_secs(60),
        detail: format!("training character accuracy {hits}/{total}, {:.1}s (limit 60s)", secs(t)),
    }
}

const SEEDS: [u64; 3] = [1, 2, 3];

fn desk_settings() -> AblationSettings {
    AblationSettings {
        training_words: 2000,
        n_pairs: 9830,
        epochs: 100,
        n_eval_words: 1000,
        ..AblationSettings::default()
    }
}

fn criteria_8_and_9(model: &ConfusionModel, lex: &Lexicon) -> Vec<Outcome> {
    let settings = desk_settings();
    let mut configs = AblationConfig::standard();
    let with_norvig: Vec<_> = configs.iter().map(|c| AblationConfig { use_norvig: true, ..c.clone() }).collect();
    configs.extend(with_norvig);

    let start = Instant::now();
    let run = run_ablation_detailed::<f32>(lex, model, &configs, &settings, &SEEDS).unwrap();
    let t = start.elapsed();
    let report = &run.report;
    eprintln!("{}", report.to_table());

    let word = |label: &str, seed: u64| -> f64 {
        report.rows.iter().find(|r| r.label == label && r.seed == seed).unwrap().word.value()
    };
    let mut below_baseline = Vec::new();
    for c in configs.iter() {
        for &seed in &SEEDS {
            if word(&c.label(), seed) <= word("argmax", seed) {
                below_baseline.push(format!("{}@{seed}", c.label()));
            }
        }
    }
    let hs_vs_hh: Vec<(f64, f64)> = SEEDS.iter().map(|&s| (word("H/S", s), word("H/H", s))).collect();
    let b = hs_vs_hh.iter().all(|(hs, hh)| hs >= hh);
    let plain = AblationConfig::standard();
    let mut gain = 0.0;
    for c in &plain {
        for &seed in &SEEDS {
            let plus = AblationConfig { use_norvig: true, ..c.clone() };
            gain += word(&plus.label(), seed) - word(&c.label(), seed);
        }
    }
    gain /= (plain.len() * SEEDS.len()) as f64;
    let a = below_baseline.is_empty();
    let c = gain >= 0.10;
    let timed = t < Duration::from_secs(30 * 60);
    let baseline: Vec<String> = SEEDS.iter().map(|&s| format!("{:.3}", word("argmax", s))).collect();
    let mut out = vec![Outcome {
        id: 8,
        pass: a && b && c && timed,
        detail: format!(
            "(a) nets above argmax baseline [{}]: {}; (b) H/S >= H/H per seed {:?}: {}; (c) mean Norvig gain {:.3}: {}; runtime {:.0}s on {} thread(s): {}",
            baseline.join(", "),
            if a { "yes".to_string() } else { format!("no: {}", below_baseline.join(" ")) },
            hs_vs_hh.iter().map(|(x, y)| format!("{x:.3}/{y:.3}")).collect::<Vec<_>>(),
            b,
            gain,
            c,
            secs(t),
            settings.threads,
            if timed { "under 30 min" } else { "over 30 min" },
        ),
    }];

    let start = Instant::now();
    let small_buffer = AblationSettings { buffer_size: 5, ..settings.clone() };
    let mut rows = Vec::new();
    let mut every = true;
    for (si, &seed) in SEEDS.iter().enumerate() {
        let setup: &SeedSetup = &run.setups[si];
        let soft = train_variant::<f32>(setup, model, &VariantSpec::Softmax, &small_buffer, seed).unwrap();
        let (s_train, s_test) = generalization(&soft, setup, TestRepresentation::Softmax).unwrap();
        let alpha = run.trained_for(si, &VariantSpec::ALPHA).unwrap();
        let (a_train, a_test) = generalization(alpha, setup, TestRepresentation::Softmax).unwrap();
        let gap = |tr: Ratio, te: Ratio| tr.value() - te.value();
        let (sg, ag) = (gap(s_train, s_test), gap(a_train, a_test));
        every &= sg > ag;
        rows.push(format!("seed {seed}: S/S {sg:.3} vs αS/S {ag:.3}"));
    }
    out.push(Outcome {
        id: 9,
        pass: every,
        detail: format!("train-test char gap with K=5, {}; {:.0}s", rows.join(", "), secs(start.elapsed())),
    });
    out
}

fn cli(dir: &Path, args: &[&str]) {
    let status = Command::new(env!("CARGO_BIN_EXE_softspell"))
        .current_dir(dir)
        .args(args)
        .stdout(std::process::Stdio::null())
        .status()
        .unwrap();
    assert!(status.success(), "softspell {args:?}");
}

fn criterion_10() -> Outcome {
    let dir = tempfile::TempDir::new().unwrap();
    let root = dir.path();
    let words = data_dir().join("de_words.txt");
    let freq = data_dir().join("de_freq.tsv");
    let (words, freq) = (words.to_str().unwrap(), freq.to_str().unwrap());
    cli(root, &["calibrate", "--samples", "20000", "--seed", "3", "--out", "model.txt"]);
    let mut same = Vec::new();
    for run in ["a", "b"] {
        let ckpt = format!("{run}.ckpt");
        cli(root, &[
            "train", "--lexicon", words, "--freq", freq, "--model", "model.txt", "--variant", "mix", "--pairs",
            "300", "--training-words", "100", "--epochs", "3", "--batch", "64", "--width", "16", "--seed", "10",
            "--out", &ckpt,
        ]);
        let csv = format!("{run}.csv");
        cli(root, &[
            "eval", "--lexicon", words, "--freq", freq, "--model", "model.txt", "--configs", "hh,ss+n,alpha,n",
            "--words", "20", "--training-words", "60", "--pairs", "200", "--epochs", "2", "--width", "16", "--seed",
            "1,2", "--out", &csv,
        ]);
    }
    for f in ["ckpt", "ckpt.history.csv", "ckpt.manifest.json", "csv", "csv.table.txt", "csv.manifest.json"] {
        let a = fs::read(root.join(format!("a.{f}"))).unwrap();
        let b = fs::read(root.join(format!("b.{f}"))).unwrap();
        // manifests name their own outputs; compare them with the run prefix removed
        let norm = |bytes: Vec<u8>, run: &str| {
            String::from_utf8_lossy(&bytes).replace(&format!("\"{run}."), "\"").into_bytes()
        };
        same.push((f, norm(a, "a") == norm(b, "b")));
    }
    let differing: Vec<_> = same.iter().filter(|(_, eq)| !eq).map(|(f, _)| *f).collect();
    Outcome {
        id: 10,
        pass: differing.is_empty(),
        detail: if differing.is_empty() {
            "train checkpoint/history and eval CSV/table identical across reruns".to_string()
        } else {
            format!("differs: {}", differing.join(", "))
        },
    }
}

#[test]
fn acceptance_criteria() {
    let lex = full_lexicon();
    let mut outcomes = vec![criterion_1(), criterion_2(), criterion_3(), criterion_4()];
    let (o5, model) = criterion_5();
    outcomes.push(o5);
    outcomes.push(criterion_6(&model, &lex));
    outcomes.push(criterion_7(&model, &lex));
    outcomes.extend(criteria_8_and_9(&model, &lex));
    outcomes.push(criterion_10());

    println!();
    for o in &outcomes {
        println!("criterion {:>2}: {}  {}", o.id, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    let failed: Vec<u32> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
