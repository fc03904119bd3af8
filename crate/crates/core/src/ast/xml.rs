//! srcML-style XML in and out.

use super::{is_known_label, AstError, AstNode, CHAR_LITERAL, STRING_LITERAL, WORD_LABELS};

/// Elements whose children are lifted into the parent. Recent srcML versions
/// wrap block bodies and loop headers in these.
const SPLICED: &[&str] = &["block_content", "control"];
const SKIPPED: &[&str] = &["comment"];

/// Builds a tree from srcML-style XML, matching elements by local name.
///
/// Text of word-bearing leaf elements becomes the node's word; other text
/// (punctuation, keywords, whitespace) is dropped.
pub fn from_xml(xml: &str) -> Result<AstNode, AstError> {
    let doc = roxmltree::Document::parse(xml).map_err(|e| AstError::Xml(e.to_string()))?;
    convert(doc.root_element())
}

fn push_children(el: roxmltree::Node, out: &mut Vec<AstNode>) -> Result<(), AstError> {
    for c in el.children().filter(|c| c.is_element()) {
        let name = c.tag_name().name();
        if SKIPPED.contains(&name) {
            continue;
        }
        if SPLICED.contains(&name) {
            push_children(c, out)?;
        } else {
            out.push(convert(c)?);
        }
    }
    Ok(())
}

fn convert(el: roxmltree::Node) -> Result<AstNode, AstError> {
    let label = el.tag_name().name();
    if !is_known_label(label) {
        return Err(AstError::UnknownElement(label.to_string()));
    }
    let mut children = Vec::new();
    push_children(el, &mut children)?;
    if children.is_empty() && WORD_LABELS.contains(&label) {
        let text: String = el
            .descendants()
            .filter(|d| d.is_text())
            .filter_map(|d| d.text())
            .collect();
        return Ok(AstNode::leaf(label, Some(&normalize_word(text.trim()))));
    }
    Ok(AstNode::node(label, children))
}

/// String and character literals become placeholders; other words keep
/// their text with internal whitespace removed.
fn normalize_word(text: &str) -> String {
    if text.starts_with('"') {
        STRING_LITERAL.to_string()
    } else if text.starts_with('\'') {
        CHAR_LITERAL.to_string()
    } else {
        text.split_whitespace().collect()
    }
}

fn escape(s: &str, out: &mut String) {
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            _ => out.push(c),
        }
    }
}

/// Compact XML with one element per node; inverse of [`from_xml`].
pub fn to_xml(root: &AstNode) -> String {
    let mut out = String::new();
    write_node(root, &mut out);
    out
}

fn write_node(n: &AstNode, out: &mut String) {
    let label = n.label();
    match (n.word(), n.children().is_empty()) {
        (None, true) => {
            out.push('<');
            out.push_str(label);
            out.push_str("/>");
        }
        (word, _) => {
            out.push('<');
            out.push_str(label);
            out.push('>');
            if let Some(w) = word {
                escape(w, out);
            }
            for c in n.children() {
                write_node(c, out);
            }
            out.push_str("</");
            out.push_str(label);
            out.push('>');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_element() {
        assert_eq!(
            from_xml("<name>id</name>").unwrap(),
            AstNode::word_leaf("name", "id")
        );
    }

    #[test]
    fn nested_statement() {
        let t =
            from_xml("<expr_stmt><expr><name>x</name><operator>++</operator></expr>;</expr_stmt>")
                .unwrap();
        assert_eq!(
            format!("{t:?}"),
            r#"(expr_stmt (expr (name "x") (operator "++")))"#
        );
    }

    #[test]
    fn unknown_element_is_named() {
        let e = from_xml("<unit><class><name>A</name></class></unit>").unwrap_err();
        assert_eq!(e, AstError::UnknownElement("class".into()));
        assert!(e.to_string().contains("class"));
    }

    #[test]
    fn malformed_xml_is_an_error() {
        assert!(matches!(from_xml("<name>x</nam>"), Err(AstError::Xml(_))));
    }

    #[test]
    fn srcml_namespaces_wrappers_and_literals() {
        let xml = r#"<unit xmlns="http://www.srcML.org/srcML/src" revision="1.0.0" language="Java">
            <function><type><name>void</name></type> <name>f</name><parameter_list>()</parameter_list>
            <block>{<block_content>
                <!-- not an element -->
                <comment type="line">// hi</comment>
                <expr_stmt><expr><call><name>log</name><argument_list>(<argument><expr><literal type="string">"a b"</literal></expr></argument>)</argument_list></call></expr>;</expr_stmt>
            </block_content>}</block></function></unit>"#;
        let t = from_xml(xml).unwrap();
        assert_eq!(
            format!("{t:?}"),
            r#"(unit (function (type (name "void")) (name "f") (parameter_list) (block (expr_stmt (expr (call (name "log") (argument_list (argument (expr (literal "<STR>"))))))))))"#
        );
    }

    #[test]
    fn round_trip() {
        let t = AstNode::node(
            "unit",
            vec![AstNode::node(
                "expr",
                vec![
                    AstNode::word_leaf("literal", "<STR>"),
                    AstNode::word_leaf("operator", "&&"),
                    AstNode::leaf("index", None),
                ],
            )],
        );
        assert_eq!(from_xml(&to_xml(&t)).unwrap(), t);
    }
}
