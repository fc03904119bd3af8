//! Structure-based traversal: a tree becomes a bracketed token sequence where
//! every node contributes exactly one opening and one closing token pair.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AstError, AstNode};

/// Word substituted for non-whitelisted words in the structure-only form.
pub const OTHER: &str = "OTHER";

/// Where a word-bearing leaf shows its word in plain SBT output.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LeafMode {
    /// `( name_x ) name_x`
    #[default]
    Both,
    /// `( name ) name_x`
    Closing,
}

impl std::str::FromStr for LeafMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "both" => Ok(LeafMode::Both),
            "closing" => Ok(LeafMode::Closing),
            _ => Err(format!(
                "unknown leaf mode `{s}` (expected `both` or `closing`)"
            )),
        }
    }
}

/// Case-sensitive set of API class names whose words survive [`sbt_ao_flatten`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ApiWhitelist {
    names: BTreeSet<String>,
}

const JAVA_LANG: &str = include_str!("../../data/java_lang_classes.txt");

impl ApiWhitelist {
    pub fn from_names<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ApiWhitelist {
            names: names.into_iter().map(Into::into).collect(),
        }
    }

    /// One name per line; `#` starts a comment.
    pub fn parse(text: &str) -> Self {
        Self::from_names(
            text.lines()
                .map(|l| l.split('#').next().unwrap().trim())
                .filter(|l| !l.is_empty()),
        )
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    /// The bundled list of public `java.lang` type names.
    pub fn java_lang() -> Self {
        Self::parse(JAVA_LANG)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.names.contains(name)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

fn join(label: &str, word: &str) -> String {
    format!("{label}_{word}")
}

fn render(
    n: &AstNode,
    out: &mut Vec<String>,
    leaf_tokens: &impl Fn(&AstNode, &str) -> (String, String),
) {
    match n.word() {
        Some(w) => {
            let (open, close) = leaf_tokens(n, w);
            out.push("(".into());
            out.push(open);
            out.push(")".into());
            out.push(close);
        }
        None => {
            out.push("(".into());
            out.push(n.label().into());
            for c in n.children() {
                render(c, out, leaf_tokens);
            }
            out.push(")".into());
            out.push(n.label().into());
        }
    }
}

/// SBT with words on both tokens of a leaf.
pub fn sbt_flatten(root: &AstNode) -> Vec<String> {
    sbt_flatten_with(root, LeafMode::Both)
}

pub fn sbt_flatten_with(root: &AstNode, mode: LeafMode) -> Vec<String> {
    let mut out = Vec::with_capacity(4 * root.node_count());
    render(root, &mut out, &|n, w| {
        let close = join(n.label(), w);
        let open = match mode {
            LeafMode::Both => close.clone(),
            LeafMode::Closing => n.label().to_string(),
        };
        (open, close)
    });
    out
}

/// Structure-only SBT: leaf words become [`OTHER`] unless whitelisted, and
/// appear on the closing token only.
pub fn sbt_ao_flatten(root: &AstNode, whitelist: &ApiWhitelist) -> Vec<String> {
    let mut out = Vec::with_capacity(4 * root.node_count());
    render(root, &mut out, &|n, w| {
        let shown = if whitelist.contains(w) { w } else { OTHER };
        (n.label().to_string(), join(n.label(), shown))
    });
    out
}

/// Splits `label_word` using the known labels, preferring the longest match.
fn split_token<'a>(tok: &'a str, labels: &[&str]) -> Option<(&'a str, Option<&'a str>)> {
    let mut best: Option<(&str, Option<&str>)> = None;
    for &l in labels {
        let hit = if tok == l {
            Some((&tok[..l.len()], None))
        } else if tok.len() > l.len() + 1 && tok.starts_with(l) && tok.as_bytes()[l.len()] == b'_' {
            Some((&tok[..l.len()], Some(&tok[l.len() + 1..])))
        } else {
            None
        };
        if let Some(h) = hit {
            if best.is_none_or(|(b, _)| l.len() > b.len()) {
                best = Some(h);
            }
        }
    }
    best
}

/// Rebuilds a tree from any of the flattened forms, given the label set.
///
/// A leaf's word is taken from whichever of its two tokens carries one.
/// Ambiguity is possible when a label plus `_word` spells another label;
/// the longest label wins.
pub fn sbt_unflatten<S: AsRef<str>>(tokens: &[S], labels: &[&str]) -> Result<AstNode, AstError> {
    let toks: Vec<&str> = tokens.iter().map(AsRef::as_ref).collect();
    let mut pos = 0;
    let tree = unflatten_node(&toks, &mut pos, labels)?;
    if pos != toks.len() {
        return Err(AstError::Unflatten(format!(
            "trailing tokens from position {pos}"
        )));
    }
    Ok(tree)
}

fn unflatten_node(toks: &[&str], pos: &mut usize, labels: &[&str]) -> Result<AstNode, AstError> {
    let fail = |p: usize, msg: &str| AstError::Unflatten(format!("{msg} at token {p}"));
    let mut next = |what: &str| -> Result<(usize, &str), AstError> {
        let p = *pos;
        let t = *toks
            .get(p)
            .ok_or_else(|| fail(p, &format!("ran out of tokens, expected {what}")))?;
        *pos += 1;
        Ok((p, t))
    };
    let (p, open) = next("`(`")?;
    if open != "(" {
        return Err(fail(p, "expected `(`"));
    }
    let (p, head) = next("a label")?;
    let (label, open_word) =
        split_token(head, labels).ok_or_else(|| fail(p, &format!("unknown label in `{head}`")))?;
    let mut children = Vec::new();
    while toks.get(*pos) == Some(&"(") {
        children.push(unflatten_node(toks, pos, labels)?);
    }
    let p = *pos;
    if toks.get(p) != Some(&")") {
        return Err(fail(p, "expected `)`"));
    }
    *pos += 1;
    let tail = *toks
        .get(*pos)
        .ok_or_else(|| fail(*pos, "missing closing label"))?;
    *pos += 1;
    let (close_label, close_word) = split_token(tail, labels)
        .ok_or_else(|| fail(p + 1, &format!("unknown label in `{tail}`")))?;
    if close_label != label {
        return Err(fail(p + 1, &format!("`{label}` closed by `{close_label}`")));
    }
    let word = match (open_word, close_word) {
        (Some(a), Some(b)) if a != b => {
            return Err(fail(p + 1, "opening and closing words differ"))
        }
        (a, b) => a.or(b),
    };
    match word {
        Some(_) if !children.is_empty() => Err(fail(p, "a word-bearing node has children")),
        Some(w) => Ok(AstNode::word_leaf(label, w)),
        None => Ok(AstNode::node(label, children)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn invocation() -> AstNode {
        AstNode::node(
            "MethodInvocation",
            ["request", "remove", "id"]
                .iter()
                .map(|w| AstNode::word_leaf("SimpleName", w))
                .collect(),
        )
    }

    #[test]
    fn method_invocation_listing() {
        assert_eq!(
            sbt_flatten(&invocation()).join(" "),
            "( MethodInvocation ( SimpleName_request ) SimpleName_request ( SimpleName_remove ) SimpleName_remove \
             ( SimpleName_id ) SimpleName_id ) MethodInvocation"
        );
    }

    #[test]
    fn wordless_leaf() {
        assert_eq!(
            sbt_flatten(&AstNode::leaf("block", None)).join(" "),
            "( block ) block"
        );
    }

    #[test]
    fn closing_mode_moves_the_word() {
        let t = AstNode::word_leaf("name", "x");
        assert_eq!(
            sbt_flatten_with(&t, LeafMode::Closing).join(" "),
            "( name ) name_x"
        );
    }

    #[test]
    fn structure_only_masks_unlisted_words() {
        let t = AstNode::node(
            "type",
            vec![
                AstNode::word_leaf("name", "String"),
                AstNode::word_leaf("name", "Config"),
            ],
        );
        let wl = ApiWhitelist::from_names(["String"]);
        assert_eq!(
            sbt_ao_flatten(&t, &wl).join(" "),
            "( type ( name ) name_String ( name ) name_OTHER ) type"
        );
        let all_other = sbt_ao_flatten(&t, &ApiWhitelist::default());
        assert_eq!(
            all_other.iter().filter(|t| t.ends_with("_OTHER")).count(),
            2
        );
    }

    #[test]
    fn whitelist_is_case_sensitive_and_skips_comments() {
        let wl = ApiWhitelist::parse("# header\nString  # trailing\n\nInteger\n");
        assert_eq!(wl.len(), 2);
        assert!(wl.contains("String"));
        assert!(!wl.contains("string"));
        let lang = ApiWhitelist::java_lang();
        assert!(lang.contains("String") && lang.contains("Object") && !lang.contains("Config"));
    }

    #[test]
    fn unflatten_handles_underscored_labels_and_words() {
        let t = AstNode::node(
            "parameter_list",
            vec![
                AstNode::word_leaf("name", "MAX_VALUE"),
                AstNode::leaf("expr_stmt", None),
            ],
        );
        let labels = ["name", "parameter_list", "expr_stmt", "parameter", "expr"];
        for toks in [sbt_flatten(&t), sbt_flatten_with(&t, LeafMode::Closing)] {
            assert_eq!(sbt_unflatten(&toks, &labels).unwrap(), t);
        }
    }

    #[test]
    fn unflatten_rejects_mismatched_closers() {
        let toks = ["(", "a", "(", "b", ")", "a", ")", "a"];
        assert!(sbt_unflatten(&toks, &["a", "b"]).is_err());
        assert!(sbt_unflatten(&["(", "a", ")"], &["a"]).is_err());
    }
}
