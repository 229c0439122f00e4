#![allow(dead_code)]

use std::fs;
use std::path::Path;

/// Copied verbatim at the top of each fixture file.
pub const RESTOCK: &str = "def restock(inventory, sku, qty):
    current = inventory.count(sku)
    total = current + qty
    inventory.update(sku, total)
    return total
";

pub const MODELS: &str = "class Inventory:
    def __init__(self):
        self.levels = {}

    def count(self, sku):
        return self.levels.get(sku, 0)

    def update(self, sku, total):
        self.levels[sku] = total
";

/// Same loop shape as the query under other names.
pub const STRUCTURAL: &str = "def refill(bin_, slots, extra):
    for s in slots:
        before = bin_.level(s)
        after = before + extra
        bin_.put(s, after)
";

/// Carries the query's vocabulary in one flat statement.
pub const SUPERFICIAL: &str = "labels = 'import numpy as np from pkg models import Inventory def restock all inventory skus qty for sku in skus current inventory count sku total current qty inventory update sku total return np'
print(labels)
";

pub const QUERY: &str = "import numpy as np
from pkg.models import Inventory

def restock_all(inventory, skus, qty):
    for sku in skus:
        current = inventory.count(sku)
        total = current + qty
        inventory.update(sku, total)
    return np.";

/// Three-file repository under `root`. The restock function opens every
/// file; `models.py` adds a class, `ops.py` a renamed loop and `report.py`
/// the lexical look-alike.
pub fn write_fixture(root: &Path) {
    let pkg = root.join("pkg");
    fs::create_dir_all(&pkg).unwrap();
    fs::write(pkg.join("models.py"), format!("{RESTOCK}\n\n{MODELS}")).unwrap();
    fs::write(pkg.join("ops.py"), format!("{RESTOCK}\n\n{STRUCTURAL}")).unwrap();
    fs::write(pkg.join("report.py"), format!("{RESTOCK}\n\n{SUPERFICIAL}")).unwrap();
}
