//! Run candidate refinement over an in-memory store and show how each stage
//! toggle changes the final ranking.
//!
//!     cargo run --example hf_op_pipeline

use saracoder::ccg::{build_ccg, enumerate_slices, Language};
use saracoder::embedding::LocalHashProvider;
use saracoder::hf_op::{run_pipeline, PipelineConfig, Query, StageToggles};
use saracoder::store::SnippetStore;

const FILES: &[(&str, &str)] = &[
    ("a.py", "def load(path):\n    fh = open(path)\n    data = fh.read()\n    fh.close()\n    return data\n"),
    ("b.py", "def load(path):\n    fh = open(path)\n    data = fh.read()\n    fh.close()\n    return data\n"),
    ("c.py", "def fetch(url):\n    resp = get(url)\n    body = resp.text\n    resp.close()\n    return body\n"),
    ("d.py", "path_data_read = 'open path fh read data close return'\n"),
];

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut records = Vec::new();
    let mut graphs = Vec::new();
    for (file, source) in FILES {
        let graph = build_ccg(source, Language::Python, file)?;
        records.extend(enumerate_slices(&graph, 3, 20)?);
        graphs.push(graph);
    }
    let store = SnippetStore::from_records(records).with_graphs(graphs);

    let context = "def read_config(path):\n    fh = open(path)\n    text = fh.read()\n    fh.close()\n    return ";
    let query = Query::from_context(context, Language::Python, "main.py", 3, 20);

    let runs = [
        ("lexical only", StageToggles::none()),
        ("all stages", StageToggles::default()),
        ("without RAP", StageToggles { rap: false, ..StageToggles::default() }),
        ("without TPM", StageToggles { tpm: false, ..StageToggles::default() }),
    ];
    for (name, stages) in runs {
        let config = PipelineConfig { top_k: 3, stages, ..PipelineConfig::default() };
        println!("{name}:");
        for c in run_pipeline(&query, &store, &LocalHashProvider, &config)? {
            println!("    {:<10} score {:.3}  {:?}", c.snippet_id, c.score(), c.rank_trace);
        }
    }
    Ok(())
}
