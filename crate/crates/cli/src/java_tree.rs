//! Reading raw methods from a source tree or a methods TSV.

use std::path::Path;

use anyhow::Context;
use codesum::corpus::{extract_methods, read_methods_tsv, MethodRecord};
use walkdir::WalkDir;

/// Every commented method in the `.java` files under `root`. Each top-level
/// directory is one project; files directly under `root` belong to a
/// project named after `root` itself. Ids count up in sorted path order.
pub fn read_java_tree(root: &Path) -> anyhow::Result<Vec<MethodRecord>> {
    let root_name = root
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "root".into());
    let mut out = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.with_context(|| format!("walking {}", root.display()))?;
        let path = entry.path();
        if !entry.file_type().is_file() || path.extension().is_none_or(|e| e != "java") {
            continue;
        }
        let rel = path.strip_prefix(root).expect("walk stays under root");
        let project = match rel.components().count() {
            1 => root_name.clone(),
            _ => rel
                .components()
                .next()
                .unwrap()
                .as_os_str()
                .to_string_lossy()
                .into_owned(),
        };
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        for m in extract_methods(&text) {
            out.push(MethodRecord {
                id: out.len() as u64,
                project_id: project.clone(),
                file_text: text.clone(),
                method_source: m.source,
                javadoc_raw: m.comment,
            });
        }
    }
    Ok(out)
}

/// A directory is walked for Java files; anything else is read as a
/// methods TSV.
pub fn read_records(input: &Path) -> anyhow::Result<Vec<MethodRecord>> {
    if input.is_dir() {
        return read_java_tree(input);
    }
    let text =
        std::fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    read_methods_tsv(&text).with_context(|| format!("parsing {}", input.display()))
}
