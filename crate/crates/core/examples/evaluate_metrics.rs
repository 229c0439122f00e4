//! Score completions and run a small offline evaluation.
//!
//!     cargo run --example evaluate_metrics

use saracoder::ccg::Language;
use saracoder::completer::EchoCompleter;
use saracoder::config::EngineConfig;
use saracoder::embedding::LocalHashProvider;
use saracoder::engine::Engine;
use saracoder::eval::{identifiers, run_eval, score, EvalSample};
use saracoder::store::{index_repository, load_index, IndexConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pairs = [
        ("result = compute(a, b)", "result = compute(a, b)"),
        ("result = compute(b, a)", "result = compute(a, b)"),
        ("return None", "result = compute(a, b)"),
    ];
    for (pred, truth) in pairs {
        let s = score(pred, truth, Language::Python);
        println!("{pred:<24} em={} es={:.3} id_em={} id_f1={:.3}", s.em, s.es, s.id_em, s.id_f1);
    }
    println!("identifiers: {:?}\n", identifiers("for k, v in items.items(): yield k", Language::Python));

    let repo = tempfile::tempdir()?;
    std::fs::write(
        repo.path().join("stats.py"),
        "def mean(xs):\n    total = sum(xs)\n    count = len(xs)\n    return total / count\n",
    )?;
    let out = repo.path().join(".index");
    index_repository(repo.path(), &out, &IndexConfig::default())?;
    let engine = Engine::new(load_index(&out)?, Box::new(LocalHashProvider), EngineConfig::default());
    let samples = vec![EvalSample {
        id: "mean".into(),
        context: "def average(values):\n    total = sum(values)\n".into(),
        groundtruth: "count = len(xs)".into(),
        file: "avg.py".into(),
        language: Language::Python,
    }];
    let (report, results) = run_eval(&samples, &engine, &EchoCompleter, 1)?;
    println!("echo completion: {:?}", results[0].completion);
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
