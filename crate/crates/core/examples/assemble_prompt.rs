//! Assemble prompts under shrinking token budgets.
//!
//!     cargo run --example assemble_prompt

use saracoder::ccg::Language;
use saracoder::eaid::{PeSection, RenderedEntity};
use saracoder::prompt::{assemble, PromptSnippet};

fn main() {
    let snippets = vec![
        PromptSnippet { id: "a.py:4:3".into(), file: "a.py".into(), text: "rows = db.query(sql)\nreturn rows".into(), score: 0.81 },
        PromptSnippet { id: "b.py:9:6".into(), file: "b.py".into(), text: "cur = conn.cursor()\ncur.execute(sql)".into(), score: 0.42 },
    ];
    let pe = PeSection {
        import_lines: vec!["from app.db import Conn".into()],
        entities: vec![RenderedEntity {
            file: "app/db.py".into(),
            full: "class Conn:\n    def query(self, sql):\n        return self.cursor().run(sql)".into(),
            signature_only: "class Conn:\n    def query(self, sql):\n        ...".into(),
        }],
        external_lines: vec!["# external: sqlite3".into()],
        comment_prefix: "#".into(),
    };
    let context = "def users(conn):\n    return conn.";

    for budget in [2048, 60, 40, 20, 5] {
        match assemble(&snippets, &pe, context, budget, Language::Python) {
            Ok(bundle) => {
                println!("--- budget {budget}: {} tokens, {} snippets dropped", bundle.approx_tokens, bundle.dropped_snippets);
                println!("{}\n", bundle.text);
            }
            Err(e) => println!("--- budget {budget}: {e}"),
        }
    }
}
