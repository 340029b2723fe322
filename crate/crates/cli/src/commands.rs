use std::cell::RefCell;
use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};

use anyhow::{anyhow, bail, Context, Result};
use fakenews_core::corpus::{self, CorpusFormat, Dataset, Label};
use fakenews_core::embeddings::{self, EmbeddingSet};
use fakenews_core::eval::{
    class_variance_ranking, confusion_matrix, evaluate, grid_search, render_confusion_svg, Averaging,
    ConfusionMatrix, Protocol, ProtocolScore, VarianceConfig,
};
use fakenews_core::handcrafted;
use fakenews_core::io;
use fakenews_core::linear::{self, Loss};
use fakenews_core::lsa::{self, LsaConfig, LsaModel};
use fakenews_core::meta::mlp::mlp_grid;
use fakenews_core::meta::MlpConfig;
use fakenews_core::pipeline::{
    cleaned_texts, saved_kind, BasePipeline, LinearStackConfig, LinearStackPipeline, NnStackConfig, NnStackPipeline,
    PreparedStack, Representation, SavedKind,
};
use fakenews_core::preprocess::{clean_text, CleanConfig};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::*;

/// What a verb hands back for the run ledger.
#[derive(Default)]
pub struct Outcome {
    pub score: Option<ProtocolScore>,
    pub metadata: Value,
}

impl Outcome {
    fn meta(metadata: Value) -> Self {
        Outcome { score: None, metadata }
    }
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let ctx = Ctx {
        seed: cli.seed,
        out_dir: cli.out_dir.clone(),
    };
    match &cli.command {
        Command::Corpus(CorpusCmd::Validate(a)) => corpus_validate(a),
        Command::Corpus(CorpusCmd::Export(a)) => corpus_export(a),
        Command::Preprocess(a) => preprocess(a),
        Command::Featurize(a) => featurize(a),
        Command::Lsa(LsaCmd::Fit(a)) => lsa_fit(&ctx, a),
        Command::Lsa(LsaCmd::Transform(a)) => lsa_transform(a),
        Command::Lsa(LsaCmd::Grid(a)) => grid(&ctx, GridKind::Lsa, a),
        Command::Embeddings(EmbeddingsCmd::Validate(a)) => embeddings_validate(a),
        Command::Train(TrainCmd::Base(a)) => train_base(&ctx, a),
        Command::Train(TrainCmd::NnStack(a)) | Command::Stack(StackCmd::TrainNn(a)) => train_nn(&ctx, a),
        Command::Train(TrainCmd::LinearStack(a)) | Command::Stack(StackCmd::TrainLinear(a)) => train_linear(&ctx, a),
        Command::Predict(a) | Command::Stack(StackCmd::Predict(a)) => predict(a),
        Command::Eval(EvalCmd::Tdt(a)) => eval(&ctx, a, Protocol::Tdt),
        Command::Eval(EvalCmd::Cv(a)) => eval(&ctx, &a.eval, Protocol::Cv { k: a.k }),
        Command::Eval(EvalCmd::Grid(a)) => grid(&ctx, a.grid, &a.common),
        Command::Explain(ExplainCmd::Variance(a)) => explain_variance(a),
        Command::Render(RenderCmd::Confusion(a)) => render_confusion(a),
    }
}

struct Ctx {
    seed: u64,
    out_dir: PathBuf,
}

fn load_corpus(input: &CorpusInput) -> Result<Dataset> {
    load_paths(&input.corpus, input.format)
}

fn load_paths(paths: &[PathBuf], format: Option<FormatArg>) -> Result<Dataset> {
    let mut merged: Option<Dataset> = None;
    for p in paths {
        let fmt = format.map_or_else(|| CorpusFormat::from_path(p), Into::into);
        let ds = corpus::load_corpus(p, fmt).with_context(|| format!("loading {}", p.display()))?;
        merged = Some(match merged {
            None => ds,
            Some(m) => corpus::merge(&m, &ds)?,
        });
    }
    merged.ok_or_else(|| anyhow!("no corpus given"))
}

fn load_sets(paths: &[PathBuf]) -> Result<Vec<EmbeddingSet>> {
    paths
        .iter()
        .map(|p| embeddings::read_embeddings(p).with_context(|| format!("reading embeddings {}", p.display())))
        .collect()
}

struct Side {
    sets: Vec<EmbeddingSet>,
    predictions: Vec<EmbeddingSet>,
}

impl Side {
    fn load(side: &SideInputs) -> Result<Self> {
        Ok(Side {
            sets: load_sets(&side.embeddings)?,
            predictions: load_sets(&side.predictions)?,
        })
    }

    fn external_ids(&self) -> Vec<String> {
        self.predictions.iter().map(|s| s.manifest().model_id.clone()).collect()
    }
}

/// Formats with 9 significant digits, trailing zeros trimmed.
fn sig9(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (8 - magnitude).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn corpus_validate(input: &CorpusInput) -> Result<Outcome> {
    let ds = load_corpus(input)?;
    println!("records: {}", ds.len());
    let mut meta = json!({"records": ds.len(), "labeled": ds.is_labeled()});
    if ds.is_labeled() {
        let dist = corpus::label_distribution(&ds)?;
        println!(
            "labels: real {} ({:.2}%), fake {} ({:.2}%)",
            dist.real,
            100.0 * dist.fraction(Label::Real),
            dist.fake,
            100.0 * dist.fraction(Label::Fake)
        );
        meta["real"] = json!(dist.real);
        meta["fake"] = json!(dist.fake);
    } else {
        println!("labels: none");
    }
    let prov = ds.provenance();
    if prov.synthesized_ids {
        println!("ids: synthesized from row numbers");
    }
    for w in &prov.warnings {
        println!("warning: {w}");
    }
    meta["warnings"] = json!(prov.warnings);
    Ok(Outcome::meta(meta))
}

fn corpus_export(a: &ExportArgs) -> Result<Outcome> {
    let ds = load_corpus(&a.input)?;
    let fmt = a.to.map_or_else(|| CorpusFormat::from_path(&a.out), Into::into);
    corpus::export_corpus(&ds, &a.out, fmt)?;
    println!("wrote {} records to {}", ds.len(), a.out.display());
    Ok(Outcome::meta(json!({"records": ds.len()})))
}

fn preprocess(a: &PreprocessArgs) -> Result<Outcome> {
    let ds = load_corpus(&a.input)?;
    let cfg = CleanConfig {
        lowercase: !a.no_lowercase,
        strip_hashtags: !a.no_strip_hashtags,
        hashtag_mode: a.hashtag_mode.into(),
        strip_punctuation: !a.no_strip_punctuation,
        remove_stopwords: !a.no_remove_stopwords,
        ..CleanConfig::default()
    };
    let rows = ds.ids().zip(ds.texts()).map(|(id, t)| [id.to_string(), clean_text(t, &cfg)]);
    io::write_tsv(&a.out, &["id", "text"], rows)?;
    println!("cleaned {} records ({})", ds.len(), cfg.id());
    Ok(Outcome::meta(json!({"records": ds.len(), "clean": cfg.id()})))
}

fn featurize(a: &FeaturizeArgs) -> Result<Outcome> {
    let ds = load_corpus(&a.input)?;
    let x = handcrafted::feature_matrix(ds.texts());
    let mut header = vec!["id"];
    header.extend(handcrafted::FEATURE_NAMES);
    let rows = ds.ids().zip(x.rows()).map(|(id, row)| {
        std::iter::once(id.to_string())
            .chain(row.iter().map(|&v| sig9(v)))
            .collect::<Vec<_>>()
    });
    io::write_tsv(&a.out, &header, rows)?;
    println!("wrote {} x {} features to {}", ds.len(), handcrafted::DIM, a.out.display());
    Ok(Outcome::meta(json!({"records": ds.len(), "dim": handcrafted::DIM})))
}

fn lsa_fit(ctx: &Ctx, a: &LsaFitArgs) -> Result<Outcome> {
    let ds = load_corpus(&a.input)?;
    let cfg = LsaConfig::new(a.features, a.dim, ctx.seed);
    let model = LsaModel::fit(&cleaned_texts(&ds, &CleanConfig::default()), &cfg)?;
    model.save(&a.out)?;
    println!("fitted LSA {} -> {} on {} records", a.features, model.dim(), ds.len());
    Ok(Outcome::meta(json!({"records": ds.len(), "dim": model.dim()})))
}

fn lsa_transform(a: &LsaTransformArgs) -> Result<Outcome> {
    let model = LsaModel::load(&a.model)?;
    let ds = load_corpus(&a.input)?;
    let x = model.transform(&cleaned_texts(&ds, &CleanConfig::default()))?;
    let names: Vec<String> = (0..x.ncols()).map(|j| format!("c{j}")).collect();
    let mut header = vec!["id"];
    header.extend(names.iter().map(String::as_str));
    let rows = ds.ids().zip(x.rows()).map(|(id, row)| {
        std::iter::once(id.to_string())
            .chain(row.iter().map(|v| v.to_string()))
            .collect::<Vec<_>>()
    });
    io::write_tsv(&a.out, &header, rows)?;
    Ok(Outcome::meta(json!({"records": ds.len(), "dim": x.ncols()})))
}

fn embeddings_validate(a: &EmbeddingsValidateArgs) -> Result<Outcome> {
    let sets = load_sets(&a.embeddings)?;
    let ds = if a.corpus.is_empty() {
        None
    } else {
        Some(load_paths(&a.corpus, a.format)?)
    };
    let mut report = Vec::new();
    for (path, set) in a.embeddings.iter().zip(&sets) {
        println!("{}", embeddings::prefix_of(path).display());
        println!("{}", serde_json::to_string_pretty(set.manifest())?);
        println!("checksum: {}", set.checksum());
        if let Some(ds) = &ds {
            embeddings::align(set, ds)?;
            println!("covers all {} corpus ids", ds.len());
        }
        report.push(json!({"manifest": set.manifest(), "checksum": set.checksum()}));
    }
    Ok(Outcome::meta(Value::Array(report)))
}

fn check_is_dir_target(out: &Path) -> Result<()> {
    if out.is_file() {
        bail!("{} is a file; model outputs go to a directory", out.display());
    }
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    Ok(())
}

fn train_base(ctx: &Ctx, a: &TrainBaseArgs) -> Result<Outcome> {
    let ds = load_corpus(&a.input)?;
    let side = Side::load(&a.side)?;
    check_is_dir_target(&a.out)?;
    let p = BasePipeline::fit_preset(&a.preset, &ds, &side.sets, ctx.seed)?;
    p.save(&a.out)?;
    let train_f1 = fakenews_core::eval::f1_score(&ds.labels()?, &p.predict(&ds, &side.sets)?, Averaging::Weighted)?;
    println!("trained {} on {} records (training F1 {train_f1:.4})", a.preset, ds.len());
    Ok(Outcome::meta(json!({"records": ds.len(), "train_f1": train_f1})))
}

fn nn_config(nn: &NnArgs, seed: u64, sets: &[EmbeddingSet]) -> Result<NnStackConfig> {
    let mut cfg = match nn.nn_preset {
        NnPreset::Paper => NnStackConfig::paper(seed),
    };
    if let Some(v) = nn.epochs {
        cfg.mlp.epochs = v;
    }
    if let Some(v) = nn.batch_size {
        cfg.mlp.batch_size = v;
    }
    if let Some(v) = nn.learning_rate {
        cfg.mlp.learning_rate = v;
    }
    if let Some(v) = nn.dropout {
        cfg.mlp.dropout_p = v;
    }
    if let Some(v) = nn.head {
        cfg.mlp.output_head = v.into();
    }
    if let Some(v) = nn.normalizer {
        cfg.normalizer = v.into();
    }
    if let Some(v) = nn.lsa_features {
        cfg.lsa.n = v;
    }
    if let Some(v) = nn.lsa_dim {
        cfg.lsa.d = v;
    }
    let width = cfg.input_width(sets)?;
    if width != cfg.mlp.layer_dims[0] {
        if !nn.adapt_input {
            bail!(
                "the stacking input is {width} wide but the network expects {}; pass --adapt-input to resize its first layer",
                cfg.mlp.layer_dims[0]
            );
        }
        log::warn!("resizing the first layer from {} to {width}", cfg.mlp.layer_dims[0]);
        cfg.mlp.layer_dims[0] = width;
    }
    Ok(cfg)
}

fn train_nn(ctx: &Ctx, a: &TrainNnArgs) -> Result<Outcome> {
    let ds = load_corpus(&a.input)?;
    let side = Side::load(&a.side)?;
    let cfg = nn_config(&a.nn, ctx.seed, &side.sets)?;
    check_is_dir_target(&a.out)?;
    let p = NnStackPipeline::fit(&ds, &side.sets, &cfg)?;
    p.save(&a.out)?;
    let last = p.mlp.loss_history.last().copied();
    println!(
        "trained the stacking network {:?} on {} records (final loss {})",
        p.mlp.config.layer_dims,
        ds.len(),
        last.map_or("n/a".to_string(), |l| format!("{l:.6}"))
    );
    Ok(Outcome::meta(json!({"records": ds.len(), "layer_dims": p.mlp.config.layer_dims, "loss_history": p.mlp.loss_history})))
}

fn linear_config(l: &LinearArgs, side: &Side, seed: u64) -> LinearStackConfig {
    let presets: Vec<&str> = l.bases.iter().map(String::as_str).collect();
    let external = side.external_ids();
    let external: Vec<&str> = external.iter().map(String::as_str).collect();
    let mut cfg = LinearStackConfig::new(&presets, &external, l.mode.into(), seed);
    cfg.out_of_fold = if l.in_fold { None } else { Some(l.folds) };
    cfg
}

fn train_linear(ctx: &Ctx, a: &TrainLinearArgs) -> Result<Outcome> {
    let ds = load_corpus(&a.input)?;
    let side = Side::load(&a.side)?;
    let cfg = linear_config(&a.linear, &side, ctx.seed);
    check_is_dir_target(&a.out)?;
    let p = LinearStackPipeline::fit(&ds, &side.sets, &side.predictions, &cfg)?;
    p.save(&a.out)?;
    println!(
        "trained a linear stacker over {} inputs on {} records",
        cfg.presets.len() + cfg.external.len(),
        ds.len()
    );
    Ok(Outcome::meta(json!({"records": ds.len(), "inputs": cfg.presets.len() + cfg.external.len()})))
}

enum Saved {
    Base(BasePipeline),
    Nn(NnStackPipeline),
    Linear(LinearStackPipeline),
}

impl Saved {
    fn load(dir: &Path) -> Result<Self> {
        Ok(match saved_kind(dir)? {
            SavedKind::Base => Saved::Base(BasePipeline::load(dir)?),
            SavedKind::NnStack => Saved::Nn(NnStackPipeline::load(dir)?),
            SavedKind::LinearStack => Saved::Linear(LinearStackPipeline::load(dir)?),
        })
    }

    fn predict(&self, ds: &Dataset, side: &Side) -> Result<Vec<Label>> {
        Ok(match self {
            Saved::Base(p) => p.predict(ds, &side.sets)?,
            Saved::Nn(p) => p.predict(ds, &side.sets)?,
            Saved::Linear(p) => p.predict(ds, &side.sets, &side.predictions)?,
        })
    }
}

fn print_confusion(m: &ConfusionMatrix) {
    println!("              pred fake  pred real");
    println!("actual fake  {:>10} {:>10}", m.0[0][0], m.0[0][1]);
    println!("actual real  {:>10} {:>10}", m.0[1][0], m.0[1][1]);
}

fn predict(a: &PredictArgs) -> Result<Outcome> {
    let model = Saved::load(&a.model)?;
    let ds = load_corpus(&a.input)?;
    let side = Side::load(&a.side)?;
    let pred = model.predict(&ds, &side)?;
    io::write_tsv(
        &a.out,
        &["id", "label"],
        ds.ids().zip(&pred).map(|(id, l)| [id.to_string(), l.to_string()]),
    )?;
    println!("wrote {} predictions to {}", pred.len(), a.out.display());
    let mut meta = json!({"records": ds.len()});
    if ds.is_labeled() {
        let m = confusion_matrix(&ds.labels()?, &pred)?;
        let f1 = m.f1(a.averaging.into());
        println!("F1 ({:?}): {f1:.4}", Averaging::from(a.averaging));
        print_confusion(&m);
        if let Some(path) = &a.confusion {
            render_confusion_svg(&m, "Confusion matrix", path)?;
        }
        meta["f1"] = json!(f1);
        meta["confusion"] = json!(m.0);
    } else if a.confusion.is_some() {
        bail!("--confusion needs a labeled corpus");
    }
    Ok(Outcome::meta(meta))
}

enum ModelSpec {
    Base(String),
    Nn(NnStackConfig),
    Linear(LinearStackConfig),
}

impl ModelSpec {
    fn new(name: &str, nn: &NnArgs, linear: &LinearArgs, side: &Side, seed: u64) -> Result<Self> {
        Ok(match name {
            "nn-stack" => ModelSpec::Nn(nn_config(nn, seed, &side.sets)?),
            "linear-stack" => ModelSpec::Linear(linear_config(linear, side, seed)),
            preset => {
                Representation::for_preset(preset, seed)?;
                ModelSpec::Base(preset.to_string())
            }
        })
    }

    fn config_json(&self) -> Value {
        match self {
            ModelSpec::Base(p) => json!({"preset": p}),
            ModelSpec::Nn(c) => serde_json::to_value(c).unwrap_or(Value::Null),
            ModelSpec::Linear(c) => serde_json::to_value(c).unwrap_or(Value::Null),
        }
    }

    fn fit_predict(&self, train: &Dataset, held: &Dataset, side: &Side, seed: u64) -> fakenews_core::Result<Vec<Label>> {
        match self {
            ModelSpec::Base(p) => BasePipeline::fit_preset(p, train, &side.sets, seed)?.predict(held, &side.sets),
            ModelSpec::Nn(c) => NnStackPipeline::fit(train, &side.sets, c)?.predict(held, &side.sets),
            ModelSpec::Linear(c) => LinearStackPipeline::fit(train, &side.sets, &side.predictions, c)?.predict(
                held,
                &side.sets,
                &side.predictions,
            ),
        }
    }
}

fn eval(ctx: &Ctx, a: &EvalArgs, protocol: Protocol) -> Result<Outcome> {
    let ds = load_corpus(&a.input)?;
    let side = Side::load(&a.side)?;
    let labels = ds.labels()?;
    let spec = ModelSpec::new(&a.model, &a.nn, &a.linear, &side, ctx.seed)?;
    let pooled: RefCell<Vec<(usize, Label)>> = RefCell::new(Vec::new());
    let score = evaluate(&labels, protocol, ctx.seed, a.averaging.into(), |tr, ev| {
        let pred = spec.fit_predict(&ds.subset(tr), &ds.subset(ev), &side, ctx.seed)?;
        pooled.borrow_mut().extend(ev.iter().copied().zip(pred.iter().copied()));
        Ok(pred)
    })?;
    for (i, s) in score.fold_scores.iter().enumerate() {
        println!("fold {i}: {s:.4}");
    }
    println!("{} F1 ({:?}): {:.4}", a.model, score.averaging, score.mean);
    let pooled = pooled.into_inner();
    let truth: Vec<Label> = pooled.iter().map(|&(i, _)| labels[i]).collect();
    let pred: Vec<Label> = pooled.iter().map(|&(_, l)| l).collect();
    let m = confusion_matrix(&truth, &pred)?;
    print_confusion(&m);
    if let Some(path) = &a.confusion {
        render_confusion_svg(&m, &format!("{} confusion matrix", a.model), path)?;
    }
    if let Some(path) = &a.report {
        io::write_json(path, &json!({"model": a.model, "score": score, "confusion": m.0}))?;
    }
    Ok(Outcome {
        score: Some(score),
        metadata: json!({"model": spec.config_json(), "confusion": m.0}),
    })
}

#[derive(Debug, Clone, Serialize)]
struct LsaPoint {
    n: usize,
    d: usize,
    classifier: ClassifierArg,
}

type PrepCache = Mutex<HashMap<Vec<usize>, Arc<OnceLock<std::result::Result<PreparedStack, String>>>>>;

fn grid(ctx: &Ctx, kind: GridKind, a: &GridCommon) -> Result<Outcome> {
    let ds = load_corpus(&a.input)?;
    let side = Side::load(&a.side)?;
    let labels = ds.labels()?;
    let protocol = match a.protocol {
        ProtocolArg::Tdt => Protocol::Tdt,
        ProtocolArg::Cv => Protocol::Cv { k: a.k },
    };
    let averaging: Averaging = a.averaging.into();
    let seed = ctx.seed;
    let limit = |n: usize| a.limit.map_or(n, |l| l.min(n));
    let (table, best, ranked, failures) = match kind {
        GridKind::Lsa => {
            let mut points: Vec<LsaPoint> = lsa::grid_candidates()
                .into_iter()
                .flat_map(|(n, d)| a.classifiers.iter().map(move |&classifier| LsaPoint { n, d, classifier }))
                .collect();
            points.truncate(limit(points.len()));
            let base_sgd = linear::preset("lsa-lr")?;
            let out = grid_search(&points, &labels, protocol, seed, averaging, |p, tr, ev| {
                let mut sgd = base_sgd.clone();
                if p.classifier == ClassifierArg::Svm {
                    sgd.loss = Loss::Hinge;
                }
                let repr = Representation::Lsa { config: LsaConfig::new(p.n, p.d, seed) };
                let name = format!("lsa-{}", serde_json::to_value(p.classifier).unwrap_or_default().as_str().unwrap_or(""));
                BasePipeline::fit(&name, repr, &sgd, &ds.subset(tr), &side.sets, seed)?.predict(&ds.subset(ev), &side.sets)
            })?;
            let summary = |e: &fakenews_core::eval::GridEntry<LsaPoint>| {
                format!("n={} d={} {:?}", e.config.n, e.config.d, e.config.classifier)
            };
            (
                serde_json::to_value(&out)?,
                out.best().map(|e| (summary(e), e.score.clone(), serde_json::to_value(&e.config).unwrap_or_default())),
                out.ranked.iter().take(5).map(|e| (summary(e), e.score.as_ref().map_or(f64::NAN, |s| s.mean))).collect::<Vec<_>>(),
                out.failures.len(),
            )
        }
        GridKind::Mlp => {
            let base = nn_config(&a.nn, seed, &side.sets)?;
            let mut configs: Vec<MlpConfig> = mlp_grid(&base.mlp);
            configs.truncate(limit(configs.len()));
            let cache: PrepCache = Mutex::new(HashMap::new());
            let out = grid_search(&configs, &labels, protocol, seed, averaging, |c, tr, ev| {
                let cell = {
                    let mut map = cache.lock().unwrap_or_else(|p| p.into_inner());
                    map.entry(tr.to_vec()).or_default().clone()
                };
                let prepared = cell
                    .get_or_init(|| NnStackPipeline::prepare(&ds.subset(tr), &side.sets, &base).map_err(|e| e.to_string()))
                    .as_ref()
                    .map_err(|e| fakenews_core::Error::State(e.clone()))?;
                let cfg = NnStackConfig { mlp: c.clone(), ..base.clone() };
                prepared.train(&cfg)?.predict(&ds.subset(ev), &side.sets)
            })?;
            let summary = |e: &fakenews_core::eval::GridEntry<MlpConfig>| {
                format!(
                    "lr={} dropout={} batch={} epochs={}",
                    e.config.learning_rate, e.config.dropout_p, e.config.batch_size, e.config.epochs
                )
            };
            (
                serde_json::to_value(&out)?,
                out.best().map(|e| (summary(e), e.score.clone(), serde_json::to_value(&e.config).unwrap_or_default())),
                out.ranked.iter().take(5).map(|e| (summary(e), e.score.as_ref().map_or(f64::NAN, |s| s.mean))).collect::<Vec<_>>(),
                out.failures.len(),
            )
        }
    };
    let name = match kind {
        GridKind::Lsa => "lsa",
        GridKind::Mlp => "mlp",
    };
    let path = a.table.clone().unwrap_or_else(|| ctx.out_dir.join(format!("{name}-grid.json")));
    io::write_json(&path, &table)?;
    for (i, (s, mean)) in ranked.iter().enumerate() {
        println!("{:>2}. {mean:.4}  {s}", i + 1);
    }
    if failures > 0 {
        println!("{failures} configs failed; see {}", path.display());
    }
    let (best_summary, best_score, best_config) = best.ok_or_else(|| anyhow!("every grid config failed"))?;
    println!("best: {best_summary}");
    Ok(Outcome {
        score: best_score,
        metadata: json!({"grid": name, "best": best_config, "failures": failures, "table": path}),
    })
}

fn explain_variance(a: &VarianceArgs) -> Result<Outcome> {
    let ds = load_corpus(&a.input)?;
    let cfg = VarianceConfig {
        vocab_size: a.vocab_size,
        input: a.weights.into(),
        clean: CleanConfig::default(),
    };
    let r = class_variance_ranking(&ds, a.top_k, &cfg)?;
    for class in [Label::Fake, Label::Real] {
        println!("{class}:");
        for (i, (w, v)) in r.for_class(class).iter().enumerate() {
            println!("{:>4}. {w:<24} {v:.6}", i + 1);
        }
    }
    if let Some(out) = &a.out {
        io::write_json(out, &r)?;
    }
    Ok(Outcome::meta(serde_json::to_value(&r)?))
}

fn render_confusion(a: &ConfusionArgs) -> Result<Outcome> {
    let ds = load_corpus(&a.input)?;
    let (header, rows) = io::read_tsv(&a.predictions)?;
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| anyhow!("{} has no {name:?} column", a.predictions.display()))
    };
    let (id_col, label_col) = (col("id")?, col("label")?);
    let mut predicted: HashMap<&str, Label> = HashMap::with_capacity(rows.len());
    for row in &rows {
        let (Some(id), Some(label)) = (row.get(id_col), row.get(label_col)) else {
            bail!("{}: short row", a.predictions.display());
        };
        predicted.insert(id, label.parse()?);
    }
    let truth = ds.labels()?;
    let mut pred = Vec::with_capacity(ds.len());
    for id in ds.ids() {
        pred.push(*predicted.get(id).ok_or_else(|| fakenews_core::Error::Validation(format!("no prediction for id {id:?}")))?);
    }
    let m = confusion_matrix(&truth, &pred)?;
    render_confusion_svg(&m, &a.title, &a.out)?;
    print_confusion(&m);
    Ok(Outcome::meta(json!({"confusion": m.0})))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(sig9(0.0), "0");
        assert_eq!(sig9(14.0), "14");
        assert_eq!(sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(sig9(123456.789012), "123456.789");
        assert_eq!(sig9(-2.5), "-2.5");
        assert_eq!(sig9(0.000123456789123), "0.000123456789");
    }
}
