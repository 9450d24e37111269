use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use cpmi::baselines::{length_matched_tree_with, linear_tree, random_tree};
use cpmi::decode::{parse_tree_lines, tree_line};
use cpmi::eval::{
    corpus_edges, evaluate, histogram_csv, jaccard_similarity, length_histogram,
    ppl_accuracy_correlation, pseudo_perplexity, report_csv_rows, EvalOptions, EvalReport,
};
use cpmi::matrix::{matrix_to_line, read_matrices};
use cpmi::oracle::{exact_ltor_record, exact_record, verify_equivalence, SyntheticLanguage};
use cpmi::scores::{read_records, record_to_line, Target};
use cpmi::treebank::{parse_conllu, parse_conllu_strict, read_tsv};
use cpmi::w2v::{pmi_matrix, train_sgns, EmbeddingTable, TrainConfig};
use cpmi::{
    brute_force_best, build_ltor_matrix, build_matrix, build_pos_matrix, eisner_projective,
    gold_edges, max_spanning_tree, validate_record, CpmiMatrix, Mode, PosScoreRecord, ScoreRecord,
    Sentence, StreamSeed, Symmetrization, UndirectedTree, Variant,
};

use crate::run::{Run, SAMPLE};
use crate::*;

pub fn dispatch(cli: Cli) -> Result<ExitCode> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.max(1))
        .build()
        .context("starting worker threads")?;
    let (out, seed) = (cli.out, cli.seed);
    pool.install(|| match cli.command {
        Command::Treebank(TreebankCommand::Stats(a)) => {
            stats(Run::new(&out, "treebank stats", &a, seed)?, &a)
        }
        Command::ValidateScores(a) => validate(Run::new(&out, "validate-scores", &a, seed)?, &a),
        Command::BuildMatrix(a) => build(Run::new(&out, "build-matrix", &a, seed)?, &a),
        Command::Decode(a) => decode(Run::new(&out, "decode", &a, seed)?, &a),
        Command::Baseline(a) => baseline(Run::new(&out, "baseline", &a, seed)?, &a),
        Command::W2v(W2vCommand::Train(a)) => w2v_train(Run::new(&out, "w2v train", &a, seed)?, &a),
        Command::W2v(W2vCommand::Pmi(a)) => w2v_pmi(Run::new(&out, "w2v pmi", &a, seed)?, &a),
        Command::Eval(a) => eval(Run::new(&out, "eval", &a, seed)?, &a),
        Command::Report(a) => report(Run::new(&out, "report", &a, seed)?, &a),
        Command::Oracle(OracleCommand::Gen(a)) => {
            oracle_gen(Run::new(&out, "oracle gen", &a, seed)?, &a)
        }
        Command::Oracle(OracleCommand::Verify(a)) => {
            oracle_verify(Run::new(&out, "oracle verify", &a, seed)?, &a)
        }
        Command::Oracle(OracleCommand::Score(a)) => {
            oracle_score(Run::new(&out, "oracle score", &a, seed)?, &a)
        }
    })
}

/// Every command ends here so the manifest lists all artifacts.
fn done(run: Run, ok: bool) -> Result<ExitCode> {
    run.finish()?;
    Ok(if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn symmetrization(s: SymArg) -> Symmetrization {
    match s {
        SymArg::Sum => Symmetrization::Sum,
        SymArg::Max => Symmetrization::Max,
        SymArg::Single => Symmetrization::SingleDirection,
    }
}

fn variant(v: VariantArg) -> Variant {
    match v {
        VariantArg::Abs => Variant::Absolute,
        VariantArg::Signed => Variant::Signed,
    }
}

fn is_tsv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "tsv")
}

/// Loads a treebank, skipping malformed sentences unless `strict`.
fn load_treebank(run: &mut Run, path: &Path, strict: bool) -> Result<(Vec<Sentence>, Vec<String>)> {
    let text = run.read_input_text(path)?;
    if is_tsv(path) {
        return Ok((read_tsv(&text)?, Vec::new()));
    }
    if strict {
        return Ok((parse_conllu_strict(&text)?, Vec::new()));
    }
    let mut sentences = Vec::new();
    let mut skipped = Vec::new();
    for r in parse_conllu(&text) {
        match r {
            Ok(s) => sentences.push(s),
            Err(e) => {
                eprintln!("skipping sentence: {e}");
                skipped.push(e.to_string());
            }
        }
    }
    Ok((sentences, skipped))
}

fn load_records(run: &mut Run, path: &Path) -> Result<Vec<ScoreRecord>> {
    let bytes = run.read_input(path)?;
    read_records(bytes.as_slice())
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .with_context(|| format!("reading {}", path.display()))
}

fn record_matrix(r: &ScoreRecord, opts: &MatrixOptions) -> Result<CpmiMatrix> {
    let (sym, var) = (symmetrization(opts.sym), variant(opts.variant));
    let m = match (r.mode, r.target) {
        (Mode::LeftToRight, _) => build_ltor_matrix(r, var)?,
        (Mode::Bidirectional, Target::Pos) => {
            build_pos_matrix(&PosScoreRecord::try_from(r.clone())?, sym, var)?
        }
        (Mode::Bidirectional, Target::Word) => build_matrix(r, sym, var)?,
    };
    Ok(m.with_sentence_id(r.sentence_id.clone()))
}

fn records_to_matrices(records: &[ScoreRecord], opts: &MatrixOptions) -> Result<Vec<CpmiMatrix>> {
    records
        .par_iter()
        .map(|r| record_matrix(r, opts).with_context(|| format!("sentence `{}`", r.sentence_id)))
        .collect()
}

fn matrices_text(ms: &[CpmiMatrix]) -> String {
    ms.iter().map(|m| matrix_to_line(m) + "\n").collect()
}

#[derive(Serialize)]
struct Stats {
    sentences: usize,
    skipped: Vec<String>,
    tokens: usize,
    max_length: usize,
    projective_sentences: usize,
    gold_histogram: cpmi::eval::LengthHistogram,
}

fn stats(mut run: Run, a: &StatsArgs) -> Result<ExitCode> {
    let (sents, skipped) = load_treebank(&mut run, &a.corpus, a.strict)?;
    let golds: Vec<UndirectedTree> = sents.iter().map(gold_edges).collect();
    let s = Stats {
        sentences: sents.len(),
        skipped,
        tokens: sents.iter().map(Sentence::len).sum(),
        max_length: sents.iter().map(Sentence::len).max().unwrap_or(0),
        projective_sentences: golds.iter().filter(|g| g.is_projective()).count(),
        gold_histogram: length_histogram(&golds),
    };
    run.write_json("stats.json", &s)?;
    run.write_text("hist.csv", &histogram_csv(&s.gold_histogram))?;
    done(run, true)
}

fn validate(mut run: Run, a: &ValidateArgs) -> Result<ExitCode> {
    let bytes = run.read_input(&a.scores)?;
    let mut body = String::new();
    let mut bad = 0;
    for (k, r) in read_records(bytes.as_slice()).into_iter().enumerate() {
        let (id, status) = match r {
            Ok(r) => {
                let v = validate_record(&r);
                let status = if v.is_empty() {
                    "ok".to_owned()
                } else {
                    v.iter()
                        .map(ToString::to_string)
                        .collect::<Vec<_>>()
                        .join("; ")
                };
                (r.sentence_id, status)
            }
            Err(e) => ("-".to_owned(), e.to_string()),
        };
        if status != "ok" {
            bad += 1;
            eprintln!("record {}: {status}", k + 1);
        }
        body.push_str(&format!("{}\t{id}\t{status}\n", k + 1));
    }
    run.write_text("validation.tsv", &body)?;
    if bad > 0 {
        eprintln!("error: {bad} invalid record(s)");
    }
    done(run, bad == 0)
}

fn build(mut run: Run, a: &BuildMatrixArgs) -> Result<ExitCode> {
    let records = load_records(&mut run, &a.scores)?;
    let ms = records_to_matrices(&records, &a.matrix)?;
    run.write_text("matrices.jsonl", &matrices_text(&ms))?;
    done(run, true)
}

fn decode(mut run: Run, a: &DecodeArgs) -> Result<ExitCode> {
    let matrices = match (&a.source.scores, &a.source.matrices) {
        (Some(p), _) => records_to_matrices(&load_records(&mut run, p)?, &a.matrix)?,
        (None, Some(p)) => {
            let bytes = run.read_input(p)?;
            read_matrices(bytes.as_slice()).with_context(|| format!("reading {}", p.display()))?
        }
        (None, None) => bail!("one of --scores or --matrices is required"),
    };
    let d = &a.decoder;
    let decoded = matrices
        .par_iter()
        .map(|m| {
            let r = if d.projective {
                eisner_projective(m)
            } else if d.mst {
                max_spanning_tree(m)
            } else {
                brute_force_best(m, a.projective_only)
            };
            r.with_context(|| format!("sentence `{}`", m.sentence_id()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut trees = String::new();
    let mut scores = String::from("sentence_id\tdecoder\ttotal_score\tties\n");
    for (m, t) in matrices.iter().zip(&decoded) {
        trees.push_str(&tree_line(m.sentence_id(), &t.tree));
        trees.push('\n');
        let ties = t.tie_break_trace.as_ref().map_or(0, Vec::len);
        scores.push_str(&format!(
            "{}\t{}\t{:.16e}\t{ties}\n",
            m.sentence_id(),
            t.decoder,
            t.total_score
        ));
    }
    run.write_text("trees.txt", &trees)?;
    run.write_text("decode.tsv", &scores)?;
    done(run, true)
}

fn baseline(mut run: Run, a: &BaselineArgs) -> Result<ExitCode> {
    let (sents, _) = load_treebank(&mut run, &a.corpus, false)?;
    let seed = run.seed();
    let trees = sents
        .par_iter()
        .enumerate()
        .map(|(k, s)| {
            let stream = StreamSeed::new(seed, k as u64);
            Ok(match a.kind {
                BaselineKind::Linear => linear_tree(s.len()),
                BaselineKind::RandomProjective => random_tree(s.len(), stream, true).tree,
                BaselineKind::RandomMst => random_tree(s.len(), stream, false).tree,
                BaselineKind::LengthMatched => {
                    length_matched_tree_with(&gold_edges(s), stream, a.max_restarts)
                        .with_context(|| format!("sentence `{}`", s.id()))?
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let body: String = sents
        .iter()
        .zip(&trees)
        .map(|(s, t)| tree_line(s.id(), t) + "\n")
        .collect();
    run.write_text("trees.txt", &body)?;
    done(run, true)
}

fn w2v_train(mut run: Run, a: &W2vTrainArgs) -> Result<ExitCode> {
    let corpus: Vec<Vec<String>> = if a.corpus.as_os_str() == SAMPLE
        || is_tsv(&a.corpus)
        || a.corpus.extension().is_some_and(|e| e == "conllu")
    {
        let (sents, _) = load_treebank(&mut run, &a.corpus, false)?;
        sents.iter().map(|s| s.tokens().to_vec()).collect()
    } else {
        run.read_input_text(&a.corpus)?
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.split_whitespace().map(str::to_owned).collect())
            .collect()
    };
    let config = TrainConfig {
        dim: a.dim,
        window: a.window,
        negative: a.negative,
        epochs: a.epochs,
        seed: run.seed(),
        learning_rate: a.learning_rate,
        subsample: a.subsample,
    };
    let table = train_sgns(&corpus, &config)?;
    let mut bytes = Vec::new();
    table.write(&mut bytes)?;
    run.write_raw("embeddings.bin", &bytes)?;
    done(run, true)
}

fn w2v_pmi(mut run: Run, a: &W2vPmiArgs) -> Result<ExitCode> {
    let bytes = run.read_input(&a.embeddings)?;
    let table = EmbeddingTable::read(bytes.as_slice())?;
    let (sents, _) = load_treebank(&mut run, &a.corpus, false)?;
    let sym = symmetrization(a.sym);
    let ms = sents
        .par_iter()
        .map(|s| Ok(pmi_matrix(s.tokens(), &table, sym, Variant::Signed)?.with_sentence_id(s.id())))
        .collect::<Result<Vec<_>>>()?;
    run.write_text("matrices.jsonl", &matrices_text(&ms))?;
    done(run, true)
}

/// `linear` or an edge-list file, matched to gold sentences by id.
fn load_preds(
    run: &mut Run,
    spec: &str,
    golds: &[Sentence],
) -> Result<HashMap<String, UndirectedTree>> {
    if spec == "linear" {
        return Ok(golds
            .iter()
            .map(|s| (s.id().to_owned(), linear_tree(s.len())))
            .collect());
    }
    let text = run.read_input_text(Path::new(spec))?;
    let lengths: HashMap<&str, usize> = golds.iter().map(|s| (s.id(), s.len())).collect();
    let mut out = HashMap::new();
    for (id, edges) in parse_tree_lines(&text)? {
        let n = *lengths
            .get(id.as_str())
            .ok_or_else(|| anyhow!("{spec}: sentence `{id}` is not in the gold treebank"))?;
        let tree =
            UndirectedTree::new(n, edges).with_context(|| format!("{spec}: sentence `{id}`"))?;
        out.insert(id, tree);
    }
    Ok(out)
}

fn csv_with_header(rows: impl IntoIterator<Item = String>, header: &str) -> String {
    let mut out = format!("{header}\n");
    for r in rows {
        out.push_str(&r);
        out.push('\n');
    }
    out
}

fn eval(mut run: Run, a: &EvalArgs) -> Result<ExitCode> {
    let (golds, _) = load_treebank(&mut run, &a.gold, false)?;
    let preds = load_preds(&mut run, &a.pred, &golds)?;
    let options = EvalOptions {
        exclude_punct: a.exclude_punct,
        min_relation_count: a.min_relation_count,
    };
    let r = evaluate(&preds, &golds, options)?;
    run.write_text(
        "report.csv",
        &csv_with_header(report_csv_rows(&a.model, &r), "model,metric,value"),
    )?;
    let per_sentence = r
        .per_sentence
        .iter()
        .map(|s| format!("{},{},{:.6},{}", s.id, s.n, s.uuas, s.counted));
    run.write_text(
        "sentences.csv",
        &csv_with_header(per_sentence, "sentence_id,n,uuas,counted"),
    )?;
    run.write_json(
        "report.json",
        &NamedReport {
            model: &a.model,
            report: &r,
        },
    )?;
    run.write_text("hist.csv", &histogram_csv(&r.pred_histogram))?;
    run.write_text("gold_hist.csv", &histogram_csv(&r.gold_histogram))?;
    done(run, true)
}

#[derive(Serialize)]
struct NamedReport<'a> {
    model: &'a str,
    report: &'a EvalReport,
}

fn split_named(spec: &str) -> Result<(&str, &str)> {
    spec.split_once('=')
        .filter(|(n, p)| !n.is_empty() && !p.is_empty())
        .ok_or_else(|| anyhow!("expected NAME=FILE, got `{spec}`"))
}

fn fmt_fit(x: f64) -> String {
    format!("{x:.6}")
}

fn report(mut run: Run, a: &ReportArgs) -> Result<ExitCode> {
    let (golds, _) = load_treebank(&mut run, &a.gold, false)?;
    let options = EvalOptions {
        exclude_punct: a.exclude_punct,
        min_relation_count: a.min_relation_count,
    };
    let mut models: Vec<(String, HashMap<String, UndirectedTree>, EvalReport)> = Vec::new();
    for spec in &a.preds {
        let (name, path) = split_named(spec)?;
        let preds = load_preds(&mut run, path, &golds)?;
        let r = evaluate(&preds, &golds, options).with_context(|| format!("model `{name}`"))?;
        models.push((name.to_owned(), preds, r));
    }

    let rows = models
        .iter()
        .flat_map(|(name, _, r)| report_csv_rows(name, r));
    run.write_text("report.csv", &csv_with_header(rows, "model,metric,value"))?;
    let named: Vec<NamedReport> = models
        .iter()
        .map(|(name, _, r)| NamedReport {
            model: name,
            report: r,
        })
        .collect();
    run.write_json("report.json", &serde_json::json!({ "models": named }))?;

    let edge_sets: Vec<_> = models
        .iter()
        .map(|(_, preds, _)| corpus_edges(golds.iter().map(|s| (s.id(), &preds[s.id()]))))
        .collect();
    let mut jac = Vec::new();
    for i in 0..models.len() {
        for j in i + 1..models.len() {
            let v = jaccard_similarity(&edge_sets[i], &edge_sets[j]);
            jac.push(format!("{},{},{v:.6}", models[i].0, models[j].0));
        }
    }
    run.write_text(
        "jaccard.csv",
        &csv_with_header(jac, "model_a,model_b,jaccard"),
    )?;

    let mut ppl_rows = Vec::new();
    for spec in &a.scores {
        let (name, path) = split_named(spec)?;
        let (_, _, r) = models
            .iter()
            .find(|(m, _, _)| m == name)
            .ok_or_else(|| anyhow!("--scores names model `{name}`, which has no --pred"))?;
        let uuas: BTreeMap<&str, f64> = r
            .per_sentence
            .iter()
            .filter(|s| s.counted)
            .map(|s| (s.id.as_str(), s.uuas))
            .collect();
        let mut pairs = Vec::new();
        for rec in load_records(&mut run, Path::new(path))? {
            if rec.mode != Mode::Bidirectional {
                continue;
            }
            if let Some(&u) = uuas.get(rec.sentence_id.as_str()) {
                pairs.push((pseudo_perplexity(&rec)?.ln(), u));
            }
        }
        let row = match ppl_accuracy_correlation(&pairs) {
            Ok(f) => format!(
                "{name},{},{},{},{}",
                pairs.len(),
                fmt_fit(f.slope),
                fmt_fit(f.intercept),
                fmt_fit(f.r_squared)
            ),
            Err(e) => {
                eprintln!("model `{name}`: no perplexity fit: {e}");
                format!("{name},{},-,-,-", pairs.len())
            }
        };
        ppl_rows.push(row);
    }
    if !a.scores.is_empty() {
        run.write_text(
            "ppl.csv",
            &csv_with_header(ppl_rows, "model,sentences,slope,intercept,r_squared"),
        )?;
    }
    done(run, true)
}

fn oracle_gen(mut run: Run, a: &OracleGenArgs) -> Result<ExitCode> {
    if let Some(Preset::L0) = a.preset {
        let text = SyntheticLanguage::l0().to_json() + "\n";
        run.write_raw("L0.lang.json", text.as_bytes())?;
        return done(run, true);
    }
    if a.vocab == 0 || a.length == 0 || a.support == 0 {
        bail!("--vocab, --length, and --support must be positive");
    }
    let seed = run.seed();
    for k in 0..a.count {
        let lang = SyntheticLanguage::random(
            a.vocab,
            a.length,
            a.support,
            StreamSeed::new(seed, k as u64),
        );
        let text = lang.to_json() + "\n";
        run.write_raw(&format!("lang-{k:03}.lang.json"), text.as_bytes())?;
    }
    done(run, true)
}

#[derive(Serialize)]
struct LangVerdict {
    lang: String,
    holds: bool,
    report: cpmi::oracle::EquivalenceReport,
}

fn oracle_verify(mut run: Run, a: &OracleVerifyArgs) -> Result<ExitCode> {
    let mut langs = Vec::new();
    for p in &a.langs {
        let text = run.read_input_text(p)?;
        let lang = SyntheticLanguage::from_json(&text)
            .with_context(|| format!("reading {}", p.display()))?;
        langs.push((p.display().to_string(), lang));
    }
    let verdicts = langs
        .par_iter()
        .map(|(name, lang)| {
            let report = verify_equivalence(lang, a.max_trees).with_context(|| name.clone())?;
            Ok(LangVerdict {
                lang: name.clone(),
                holds: report.equivalence_holds(),
                report,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let failed: Vec<&str> = verdicts
        .iter()
        .filter(|v| !v.holds)
        .map(|v| v.lang.as_str())
        .collect();
    let holds = failed.is_empty();
    run.write_json(
        "equivalence.json",
        &serde_json::json!({ "holds": holds, "languages": verdicts }),
    )?;
    if !holds {
        eprintln!("error: argmax sets differ for {}", failed.join(", "));
    }
    done(run, holds)
}

fn oracle_score(mut run: Run, a: &OracleScoreArgs) -> Result<ExitCode> {
    let text = run.read_input_text(&a.lang)?;
    let lang = SyntheticLanguage::from_json(&text)?;
    let sentences: Vec<Vec<usize>> = lang.entries().map(|(s, _)| s.to_vec()).collect();
    let records = sentences
        .par_iter()
        .map(|s| {
            let r = if a.ltor {
                exact_ltor_record(&lang, s)?
            } else {
                exact_record(&lang, s)?
            };
            Ok(record_to_line(&r)? + "\n")
        })
        .collect::<Result<Vec<String>>>()?;
    run.write_text("scores.jsonl", &records.concat())?;
    done(run, true)
}
