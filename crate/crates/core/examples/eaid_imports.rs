//! Resolve the imports of an unfinished file against a repository symbol
//! table and render the import section of the prompt.
//!
//!     cargo run --example eaid_imports

use saracoder::eaid::{build_symbol_table, extract_imports, render_pe, resolve_imports};

fn main() {
    let repo = vec![
        (
            "app/models.py".to_string(),
            "class Order:\n    def __init__(self, lines):\n        self.lines = lines\n\n    def total(self):\n        return sum(l.price for l in self.lines)\n".to_string(),
        ),
        ("app/util.py".to_string(), "def money(x):\n    return f'{x:.2f}'\n".to_string()),
    ];
    let table = build_symbol_table(&repo);

    let context = "import numpy as np\nfrom app.models import Order\nfrom app.util import money as fmt\nfrom .missing import thing\n\ndef report(order):\n    return fmt(order.";
    let imports = extract_imports(context);
    let resolution = resolve_imports(&imports, "app/report.py", &table);

    for e in &resolution.entities {
        println!("resolved {} from {}", e.entity.identifier(), e.file);
    }
    for (canonical, alias) in resolution.external.iter() {
        println!("external {canonical} as {alias}");
    }
    println!("unresolved {:?}\n", resolution.unresolved);
    println!("{}", render_pe(&imports, &resolution, "#").text());
}
