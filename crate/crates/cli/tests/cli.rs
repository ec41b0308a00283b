//! End-to-end runs of the `triplerank` binary over small synthetic corpora.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_triplerank"))
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("binary runs");
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn run_err(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("binary runs");
    assert!(
        !out.status.success(),
        "command unexpectedly succeeded\nstdout: {}",
        String::from_utf8_lossy(&out.stdout),
    );
    out
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Three topics with disjoint vocabularies, a few subjects each, plus
/// two-topic subjects whose candidates are their two true values.
struct Fixture {
    dir: tempfile::TempDir,
    triples: PathBuf,
    sentences: PathBuf,
    gold: PathBuf,
}

impl Fixture {
    fn small(seed: u64) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let topics = ["Actor", "Singer", "Chef"];
        let word = |t: usize, rng: &mut ChaCha8Rng| format!("t{t}w{}", rng.gen_range(0..40));

        let mut triples = String::new();
        let mut sentences = String::new();
        for (t, topic) in topics.iter().enumerate() {
            for p in 0..10 {
                let subject = format!("{topic} Person{p}");
                triples.push_str(&format!("{subject}\t{topic}\n"));
                for _ in 0..4 {
                    let body: Vec<String> = (0..12).map(|_| word(t, &mut rng)).collect();
                    sentences.push_str(&format!("{subject}\tknown for {}.\n", body.join(" ")));
                }
            }
        }
        let mut gold = String::new();
        for (i, (a, b)) in [(0, 1), (1, 2), (0, 2), (2, 0)].iter().enumerate() {
            let subject = format!("Mixed Person{i}");
            triples.push_str(&format!("{subject}\t{}\n", topics[*a]));
            triples.push_str(&format!("{subject}\t{}\n", topics[*b]));
            for _ in 0..4 {
                let mut body: Vec<String> = (0..6).map(|_| word(*a, &mut rng)).collect();
                body.extend((0..6).map(|_| word(*b, &mut rng)));
                sentences.push_str(&format!("{subject}\tdoes {}.\n", body.join(" ")));
            }
            gold.push_str(&format!("{subject}\t{}\t7\n", topics[*a]));
            gold.push_str(&format!("{subject}\t{}\t5\n", topics[*b]));
        }

        let triples_path = dir.path().join("triples.tsv");
        let sentences_path = dir.path().join("sentences.tsv");
        let gold_path = dir.path().join("gold.tsv");
        fs::write(&triples_path, triples).unwrap();
        fs::write(&sentences_path, sentences).unwrap();
        fs::write(&gold_path, gold).unwrap();
        Fixture {
            dir,
            triples: triples_path,
            sentences: sentences_path,
            gold: gold_path,
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn prepare(&self, out: &Path) {
        run_ok(bin()
            .arg("prepare")
            .args(["--triples", self.triples.to_str().unwrap()])
            .args(["--sentences", self.sentences.to_str().unwrap()])
            .args(["--property", "profession"])
            .args(["--floor", "2", "--cap", "100"])
            .args(["--out", out.to_str().unwrap()]));
    }

    fn train(&self, corpus: &Path, model: &Path, seed: &str) {
        run_ok(bin()
            .arg("train")
            .args(["--corpus", corpus.to_str().unwrap()])
            .args(["--model", model.to_str().unwrap()])
            .args(["--mode", "dbow", "--dim", "16", "--epochs", "10"])
            .args(["--min-count", "1", "--seed", seed, "--workers", "1"]));
    }

    fn score(&self, corpus: &Path, model: &Path, scores: &Path, method: &str) {
        run_ok(bin()
            .arg("score")
            .args(["--corpus", corpus.to_str().unwrap()])
            .args(["--model", model.to_str().unwrap()])
            .args(["--scores", scores.to_str().unwrap()])
            .args(["--method", method]));
    }
}

#[test]
fn full_pipeline_prepares_trains_scores_and_evaluates() {
    let fx = Fixture::small(11);
    let corpus = fx.path("corpus");
    let model = fx.path("model.pv");
    let scores = fx.path("scores.tsv");

    fx.prepare(&corpus);
    for name in ["docs.tsv", "groups.tsv", "candidates.tsv", "balance_report.txt"] {
        assert!(corpus.join(name).is_file(), "{name} missing");
    }
    assert!(corpus.join("prepare.effective.config").is_file());

    fx.train(&corpus, &model, "42");
    assert!(model.is_file());
    assert!(fx.path("train.effective.config").is_file());

    fx.score(&corpus, &model, &scores, "cossim");
    let text = fs::read_to_string(&scores).unwrap();
    assert_eq!(text.lines().count(), 8, "4 subjects x 2 candidates");
    for line in text.lines() {
        assert_eq!(line.split('\t').count(), 4);
    }

    let out = run_ok(bin()
        .arg("eval")
        .args(["--scores", scores.to_str().unwrap()])
        .args(["--gold", fx.gold.to_str().unwrap()])
        .args(["--delta", "2", "--label", "CosSim"]));
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    assert!(stdout.contains("Method"), "{stdout}");
    assert!(stdout.contains("CosSim"), "{stdout}");
    for key in ["accuracy=", "tau=", "asd=", "delta=2", "n_subjects=4", "n_pairs=8"] {
        assert!(stdout.contains(key), "missing {key} in:\n{stdout}");
    }
}

#[test]
fn training_progress_reaches_stderr() {
    let fx = Fixture::small(12);
    let corpus = fx.path("corpus");
    fx.prepare(&corpus);

    let out = run_ok(bin()
        .arg("train")
        .args(["--corpus", corpus.to_str().unwrap()])
        .args(["--model", fx.path("m.pv").to_str().unwrap()])
        .args(["--dim", "8", "--epochs", "3", "--min-count", "1"]));
    let err = stderr_of(&out);
    assert!(err.contains("epoch 1/3"), "{err}");
    assert!(err.contains("epoch 3/3"), "{err}");
    assert!(err.contains("lr"), "{err}");
}

#[test]
fn same_seed_reruns_are_byte_identical() {
    let fx = Fixture::small(13);
    let corpus = fx.path("corpus");
    fx.prepare(&corpus);

    let m1 = fx.path("m1.pv");
    let m2 = fx.path("m2.pv");
    fx.train(&corpus, &m1, "7");
    fx.train(&corpus, &m2, "7");
    assert_eq!(fs::read(&m1).unwrap(), fs::read(&m2).unwrap());

    let s1 = fx.path("s1.tsv");
    let s2 = fx.path("s2.tsv");
    fx.score(&corpus, &m1, &s1, "cossim");
    fx.score(&corpus, &m1, &s2, "cossim");
    assert_eq!(fs::read(&s1).unwrap(), fs::read(&s2).unwrap());

    let m3 = fx.path("m3.pv");
    fx.train(&corpus, &m3, "8");
    assert_ne!(fs::read(&m1).unwrap(), fs::read(&m3).unwrap());
}

#[test]
fn config_file_drives_commands_and_flags_win() {
    let fx = Fixture::small(14);
    let corpus = fx.path("corpus");
    fx.prepare(&corpus);

    let cfg = fx.path("pipeline.config");
    fs::write(
        &cfg,
        format!(
            "# pipeline\ncorpus={}\nmodel={}\nmode=dbow\ndim=16\nepochs=10\nmin-count=1\nseed=7\n",
            corpus.display(),
            fx.path("cfg.pv").display()
        ),
    )
    .unwrap();
    run_ok(bin().arg("train").args(["--config", cfg.to_str().unwrap()]));

    let flag_model = fx.path("flag.pv");
    fx.train(&corpus, &flag_model, "7");
    assert_eq!(
        fs::read(fx.path("cfg.pv")).unwrap(),
        fs::read(&flag_model).unwrap(),
        "config-driven run must equal the flag-driven run"
    );

    // flag overrides the config's seed
    run_ok(bin()
        .arg("train")
        .args(["--config", cfg.to_str().unwrap()])
        .args(["--model", fx.path("cfg2.pv").to_str().unwrap()])
        .args(["--seed", "8"]));
    assert_ne!(
        fs::read(fx.path("cfg.pv")).unwrap(),
        fs::read(fx.path("cfg2.pv")).unwrap()
    );
}

#[test]
fn effective_config_reproduces_the_run() {
    let fx = Fixture::small(15);
    let corpus = fx.path("corpus");
    fx.prepare(&corpus);
    fx.train(&corpus, &fx.path("a.pv"), "21");

    // rerun purely from the echoed settings, redirecting only the output
    let echoed = fx.path("train.effective.config");
    assert!(echoed.is_file());
    run_ok(bin()
        .arg("train")
        .args(["--config", echoed.to_str().unwrap()])
        .args(["--model", fx.path("b.pv").to_str().unwrap()]));
    assert_eq!(
        fs::read(fx.path("a.pv")).unwrap(),
        fs::read(fx.path("b.pv")).unwrap()
    );
}

#[test]
fn eval_on_gold_as_predictions_is_perfect() {
    let fx = Fixture::small(16);
    // turn the gold file into a scores file: raw column faked, mapped = gold
    let mut scores = String::new();
    for line in fs::read_to_string(&fx.gold).unwrap().lines() {
        let f: Vec<&str> = line.split('\t').collect();
        scores.push_str(&format!("{}\t{}\t0.500000\t{}\n", f[0], f[1], f[2]));
    }
    let scores_path = fx.path("self.tsv");
    fs::write(&scores_path, scores).unwrap();

    let out = run_ok(bin()
        .arg("eval")
        .args(["--scores", scores_path.to_str().unwrap()])
        .args(["--gold", fx.gold.to_str().unwrap()]));
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    assert!(stdout.contains("accuracy=1.000000"), "{stdout}");
    assert!(stdout.contains("tau=1.000000"), "{stdout}");
    assert!(stdout.contains("asd=0.000000"), "{stdout}");
}

#[test]
fn eval_delta_zero_requires_exact_match() {
    let fx = Fixture::small(26);
    // mapped scores off by one from gold everywhere
    let mut scores = String::new();
    for line in fs::read_to_string(&fx.gold).unwrap().lines() {
        let f: Vec<&str> = line.split('\t').collect();
        let off: i64 = f[2].parse::<i64>().unwrap() - 1;
        scores.push_str(&format!("{}\t{}\t0.500000\t{off}\n", f[0], f[1]));
    }
    let scores_path = fx.path("off.tsv");
    fs::write(&scores_path, scores).unwrap();

    let out = run_ok(bin()
        .arg("eval")
        .args(["--scores", scores_path.to_str().unwrap()])
        .args(["--gold", fx.gold.to_str().unwrap()])
        .args(["--delta", "0"]));
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    assert!(stdout.contains("accuracy=0.000000"), "{stdout}");

    let out = run_ok(bin()
        .arg("eval")
        .args(["--scores", scores_path.to_str().unwrap()])
        .args(["--gold", fx.gold.to_str().unwrap()])
        .args(["--delta", "1"]));
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    assert!(stdout.contains("accuracy=1.000000"), "{stdout}");
}

#[test]
fn eval_pair_mismatch_exits_nonzero_with_listing() {
    let fx = Fixture::small(17);
    let corpus = fx.path("corpus");
    let model = fx.path("m.pv");
    let scores = fx.path("s.tsv");
    fx.prepare(&corpus);
    fx.train(&corpus, &model, "3");
    fx.score(&corpus, &model, &scores, "cossim");

    let short_gold = fx.path("short_gold.tsv");
    let first_line = fs::read_to_string(&fx.gold).unwrap().lines().next().unwrap().to_string();
    fs::write(&short_gold, format!("{first_line}\n")).unwrap();

    let out = run_err(bin()
        .arg("eval")
        .args(["--scores", scores.to_str().unwrap()])
        .args(["--gold", short_gold.to_str().unwrap()]));
    let err = stderr_of(&out);
    assert!(err.contains("different pairs"), "{err}");
    assert!(err.contains("missing in gold"), "{err}");
}

#[test]
fn train_rejects_zero_epochs_before_reading_anything() {
    let fx = Fixture::small(18);
    // corpus directory deliberately absent: validation must fire first
    let out = run_err(bin()
        .arg("train")
        .args(["--corpus", fx.path("nonexistent").to_str().unwrap()])
        .args(["--model", fx.path("m.pv").to_str().unwrap()])
        .args(["--epochs", "0"]));
    let err = stderr_of(&out);
    assert!(err.contains("epochs"), "{err}");
    assert!(!fx.path("m.pv").exists());
}

#[test]
fn logreg_on_single_class_corpus_fails_with_clear_message() {
    let fx = Fixture::small(19);
    let dir = fx.dir.path();
    fs::write(
        dir.join("one_triples.tsv"),
        "Solo Person\tActor\nDual Person\tActor\nDual Person\tSinger\n",
    )
    .unwrap();
    fs::write(
        dir.join("one_sentences.tsv"),
        "Solo Person\tplays on stage daily\nDual Person\tsings on stage nightly\n",
    )
    .unwrap();
    let corpus = fx.path("one_corpus");
    run_ok(bin()
        .arg("prepare")
        .args(["--triples", dir.join("one_triples.tsv").to_str().unwrap()])
        .args(["--sentences", dir.join("one_sentences.tsv").to_str().unwrap()])
        .args(["--property", "profession"])
        .args(["--floor", "1", "--cap", "10"])
        .args(["--out", corpus.to_str().unwrap()]));
    let model = fx.path("one.pv");
    run_ok(bin()
        .arg("train")
        .args(["--corpus", corpus.to_str().unwrap()])
        .args(["--model", model.to_str().unwrap()])
        .args(["--dim", "8", "--epochs", "2", "--min-count", "1"]));

    let out = run_err(bin()
        .arg("score")
        .args(["--corpus", corpus.to_str().unwrap()])
        .args(["--model", model.to_str().unwrap()])
        .args(["--scores", fx.path("one.tsv").to_str().unwrap()])
        .args(["--method", "logreg"]));
    assert!(stderr_of(&out).contains("single class"), "{}", stderr_of(&out));
}

#[test]
fn score_falls_back_to_inference_and_records_failures() {
    let fx = Fixture::small(20);
    let corpus = fx.path("corpus");
    let model = fx.path("m.pv");
    fx.prepare(&corpus);
    fx.train(&corpus, &model, "4");

    // a subject added after training: scorable via inference
    let mut docs = fs::read_to_string(corpus.join("docs.tsv")).unwrap();
    docs.push_str("Late Person\t1\tt0w1 t0w2 t1w3 t0w4\n");
    fs::write(corpus.join("docs.tsv"), docs).unwrap();
    let mut cands = fs::read_to_string(corpus.join("candidates.tsv")).unwrap();
    cands.push_str("Late Person\tActor\nLate Person\tSinger\n");
    // a subject with no document at all: must fail but not abort the run
    cands.push_str("Ghost Person\tActor\nGhost Person\tChef\n");
    fs::write(corpus.join("candidates.tsv"), cands).unwrap();

    let scores = fx.path("s.tsv");
    let out = run_err(bin()
        .arg("score")
        .args(["--corpus", corpus.to_str().unwrap()])
        .args(["--model", model.to_str().unwrap()])
        .args(["--scores", scores.to_str().unwrap()])
        .args(["--method", "cossim", "--seed", "5"]));
    let err = stderr_of(&out);
    assert!(err.contains("inferred"), "{err}");
    assert!(err.contains("Ghost Person"), "{err}");
    assert!(err.contains("could not be scored"), "{err}");

    let text = fs::read_to_string(&scores).unwrap();
    assert!(text.contains("Late Person\tActor"), "inferred subject scored");
    assert!(!text.contains("Ghost Person"), "ghost must not be scored");
}

#[test]
fn prepare_enriches_from_fixture_directory() {
    let fx = Fixture::small(21);
    let pages = fx.path("pages");
    fs::create_dir(&pages).unwrap();
    fs::write(
        pages.join("Chef.txt"),
        "cooking with t2w1 and t2w2 daily\n\nanother page about t2w3 kitchens\n",
    )
    .unwrap();

    let corpus = fx.path("corpus");
    let out = run_ok(bin()
        .arg("prepare")
        .args(["--triples", fx.triples.to_str().unwrap()])
        .args(["--sentences", fx.sentences.to_str().unwrap()])
        .args(["--property", "profession"])
        .args(["--floor", "12", "--cap", "100"])
        .args(["--enrich-dir", pages.to_str().unwrap()])
        .args(["--out", corpus.to_str().unwrap()]));

    let report = fs::read_to_string(corpus.join("balance_report.txt")).unwrap();
    assert!(report.contains("enriched \"Chef\": +2"), "{report}");
    // groups without a fixture file stay small, with a warning, not an abort
    assert!(report.contains("enrichment failed"), "{report}");
    let docs = fs::read_to_string(corpus.join("docs.tsv")).unwrap();
    assert!(docs.contains("!enrich/Chef/0"), "{docs}");
    assert!(stderr_of(&out).contains("warning"), "{}", stderr_of(&out));
}

#[test]
fn prepare_shuffle_changes_truncation_sample() {
    let fx = Fixture::small(22);
    let plain = fx.path("plain");
    let shuffled = fx.path("shuffled");
    for (out, extra) in [(&plain, &[][..]), (&shuffled, &["--shuffle"][..])] {
        run_ok(bin()
            .arg("prepare")
            .args(["--triples", fx.triples.to_str().unwrap()])
            .args(["--sentences", fx.sentences.to_str().unwrap()])
            .args(["--property", "profession"])
            .args(["--floor", "1", "--cap", "4", "--seed", "9"])
            .args(extra)
            .args(["--out", out.to_str().unwrap()]));
    }
    let g_plain = fs::read_to_string(plain.join("groups.tsv")).unwrap();
    let g_shuffled = fs::read_to_string(shuffled.join("groups.tsv")).unwrap();
    assert_ne!(g_plain, g_shuffled, "shuffle should pick a different sample");
    assert_eq!(
        g_plain.lines().count(),
        g_shuffled.lines().count(),
        "same sizes either way"
    );

    // shuffling is seed-deterministic
    let again = fx.path("again");
    run_ok(bin()
        .arg("prepare")
        .args(["--triples", fx.triples.to_str().unwrap()])
        .args(["--sentences", fx.sentences.to_str().unwrap()])
        .args(["--property", "profession"])
        .args(["--floor", "1", "--cap", "4", "--seed", "9", "--shuffle"])
        .args(["--out", again.to_str().unwrap()]));
    assert_eq!(
        g_shuffled,
        fs::read_to_string(again.join("groups.tsv")).unwrap()
    );
}

#[test]
fn malformed_inputs_fail_with_file_and_line() {
    let fx = Fixture::small(23);
    let bad = fx.path("bad.tsv");
    fs::write(&bad, "Good Person\tActor\nno tab here\n").unwrap();
    let out = run_err(bin()
        .arg("prepare")
        .args(["--triples", bad.to_str().unwrap()])
        .args(["--sentences", fx.sentences.to_str().unwrap()])
        .args(["--property", "profession"])
        .args(["--out", fx.path("c").to_str().unwrap()]));
    let err = stderr_of(&out);
    assert!(err.contains("bad.tsv:2"), "{err}");

    let out = run_err(bin()
        .arg("prepare")
        .args(["--triples", fx.triples.to_str().unwrap()])
        .args(["--sentences", fx.sentences.to_str().unwrap()])
        .args(["--property", "color"])
        .args(["--out", fx.path("c").to_str().unwrap()]));
    assert!(stderr_of(&out).contains("profession"), "{}", stderr_of(&out));
}

#[test]
fn missing_inputs_and_unknown_flags_exit_nonzero() {
    let fx = Fixture::small(24);
    let out = run_err(bin()
        .arg("train")
        .args(["--corpus", fx.path("nope").to_str().unwrap()])
        .args(["--model", fx.path("m.pv").to_str().unwrap()]));
    assert!(stderr_of(&out).contains("does not exist"), "{}", stderr_of(&out));

    let out = run_err(bin().arg("eval").args(["--scores", "x"]));
    assert!(stderr_of(&out).contains("--gold"), "{}", stderr_of(&out));

    let out = run_err(bin().arg("train").arg("--frobnicate"));
    assert_eq!(out.status.code(), Some(2), "clap usage errors exit 2");
}

#[test]
fn multi_valued_subjects_stay_out_of_groups_but_train() {
    let fx = Fixture::small(25);
    let corpus = fx.path("corpus");
    fx.prepare(&corpus);

    let groups = fs::read_to_string(corpus.join("groups.tsv")).unwrap();
    assert!(!groups.contains("Mixed Person"), "{groups}");
    let docs = fs::read_to_string(corpus.join("docs.tsv")).unwrap();
    assert!(docs.contains("Mixed Person0"), "{docs}");

    // and they are in the trained model: score works without inference
    let model = fx.path("m.pv");
    fx.train(&corpus, &model, "2");
    let scores = fx.path("s.tsv");
    let out = run_ok(bin()
        .arg("score")
        .args(["--corpus", corpus.to_str().unwrap()])
        .args(["--model", model.to_str().unwrap()])
        .args(["--scores", scores.to_str().unwrap()]));
    assert!(!stderr_of(&out).contains("inferred"), "{}", stderr_of(&out));
}
