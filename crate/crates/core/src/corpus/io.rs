//! Tab-separated files for raw methods, processed splits, and vocabularies.

use std::fs;
use std::path::Path;

use super::pipeline::Vocabs;
use super::split::SplitCorpus;
use super::vocab::Vocab;
use super::{CorpusError, MethodRecord, ProcessedExample};

pub const TRAIN_FILE: &str = "train.tsv";
pub const VALID_FILE: &str = "valid.tsv";
pub const TEST_FILE: &str = "test.tsv";
/// Vocabulary files for code/text, SBT-AO, comments, and SBT.
pub const VOCAB_FILES: [&str; 4] = [
    "vocab.txt.tsv",
    "vocab.ast.tsv",
    "vocab.com.tsv",
    "vocab.sbt.tsv",
];

/// Writes through a sibling temporary file so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            _ => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut it = s.chars();
    while let Some(c) = it.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match it.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some(other) => out.push(other),
            None => out.push('\\'),
        }
    }
    out
}

const METHOD_HEADER: &str = "id\tproject_id\tmethod_source\tjavadoc\tfile_text";

/// Raw methods as `id, project_id, method_source, javadoc[, file_text]` with
/// backslash escapes for tab, newline, carriage return, and backslash. An
/// optional header line starting with `id\t` is skipped. Without a
/// `file_text` column the method's own comment and source stand in for it.
pub fn read_methods_tsv(text: &str) -> Result<Vec<MethodRecord>, CorpusError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.is_empty() || (n == 0 && line.starts_with("id\t")) {
            continue;
        }
        let bad = |message: String| CorpusError::Format {
            line: n + 1,
            message,
        };
        let cols: Vec<&str> = line.split('\t').collect();
        if !(4..=5).contains(&cols.len()) {
            return Err(bad(format!(
                "expected 4 or 5 columns, found {}",
                cols.len()
            )));
        }
        let id = cols[0]
            .parse()
            .map_err(|_| bad(format!("bad id `{}`", cols[0])))?;
        let (method_source, javadoc_raw) = (unescape(cols[2]), unescape(cols[3]));
        let file_text = match cols.get(4) {
            Some(f) => unescape(f),
            None => format!("{javadoc_raw}\n{method_source}"),
        };
        out.push(MethodRecord {
            id,
            project_id: unescape(cols[1]),
            file_text,
            method_source,
            javadoc_raw,
        });
    }
    Ok(out)
}

pub fn write_methods_tsv(records: &[MethodRecord]) -> String {
    let mut s = String::from(METHOD_HEADER);
    s.push('\n');
    for r in records {
        let cols = [
            r.id.to_string(),
            escape(&r.project_id),
            escape(&r.method_source),
            escape(&r.javadoc_raw),
            escape(&r.file_text),
        ];
        s.push_str(&cols.join("\t"));
        s.push('\n');
    }
    s
}

/// `id \t project_id \t code \t sbt \t sbtao \t comment`, tokens space-separated.
pub fn examples_to_tsv(examples: &[ProcessedExample]) -> String {
    let mut s = String::new();
    for e in examples {
        let cols = [
            e.id.to_string(),
            e.project_id.clone(),
            e.code_tokens.join(" "),
            e.sbt_tokens.join(" "),
            e.ast_tokens.join(" "),
            e.comment_tokens.join(" "),
        ];
        s.push_str(&cols.join("\t"));
        s.push('\n');
    }
    s
}

pub fn examples_from_tsv(text: &str) -> Result<Vec<ProcessedExample>, CorpusError> {
    let words = |s: &str| {
        s.split(' ')
            .filter(|w| !w.is_empty())
            .map(String::from)
            .collect::<Vec<_>>()
    };
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(n, line)| {
            let cols: Vec<&str> = line.split('\t').collect();
            let bad = |message: String| CorpusError::Format {
                line: n + 1,
                message,
            };
            if cols.len() != 6 {
                return Err(bad(format!("expected 6 columns, found {}", cols.len())));
            }
            Ok(ProcessedExample {
                id: cols[0]
                    .parse()
                    .map_err(|_| bad(format!("bad id `{}`", cols[0])))?,
                project_id: cols[1].to_string(),
                code_tokens: words(cols[2]),
                sbt_tokens: words(cols[3]),
                ast_tokens: words(cols[4]),
                comment_tokens: words(cols[5]),
                reinstated: false,
            })
        })
        .collect()
}

/// A prepared dataset directory, loaded back.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub train: Vec<ProcessedExample>,
    pub valid: Vec<ProcessedExample>,
    pub test: Vec<ProcessedExample>,
    pub vocabs: Vocabs,
}

pub fn write_dataset(dir: &Path, split: &SplitCorpus, vocabs: &Vocabs) -> Result<(), CorpusError> {
    fs::create_dir_all(dir)?;
    for (name, xs) in [
        (TRAIN_FILE, &split.train),
        (VALID_FILE, &split.valid),
        (TEST_FILE, &split.test),
    ] {
        write_atomic(&dir.join(name), examples_to_tsv(xs).as_bytes())?;
    }
    for (name, v) in VOCAB_FILES
        .iter()
        .zip([&vocabs.txt, &vocabs.ast, &vocabs.com, &vocabs.sbt])
    {
        write_atomic(&dir.join(name), v.to_tsv().as_bytes())?;
    }
    Ok(())
}

fn read_in(dir: &Path, name: &str) -> Result<String, CorpusError> {
    fs::read_to_string(dir.join(name)).map_err(|e| {
        CorpusError::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", dir.join(name).display()),
        ))
    })
}

fn in_file<T>(name: &str, r: Result<T, CorpusError>) -> Result<T, CorpusError> {
    r.map_err(|e| match e {
        CorpusError::Format { line, message } => CorpusError::Format {
            line,
            message: format!("{name}: {message}"),
        },
        other => other,
    })
}

pub fn load_dataset(dir: &Path) -> Result<Dataset, CorpusError> {
    let split = |name: &str| in_file(name, examples_from_tsv(&read_in(dir, name)?));
    let vocab = |i: usize| {
        in_file(
            VOCAB_FILES[i],
            Vocab::from_tsv(&read_in(dir, VOCAB_FILES[i])?),
        )
    };
    Ok(Dataset {
        train: split(TRAIN_FILE)?,
        valid: split(VALID_FILE)?,
        test: split(TEST_FILE)?,
        vocabs: Vocabs {
            txt: vocab(0)?,
            ast: vocab(1)?,
            com: vocab(2)?,
            sbt: vocab(3)?,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::vocab::build_vocab;

    fn example(id: u64) -> ProcessedExample {
        let w = |s: &str| s.split(' ').map(String::from).collect();
        ProcessedExample {
            id,
            project_id: format!("p{id}"),
            code_tokens: w("<s> get x </s>"),
            ast_tokens: w("( unit ) unit"),
            sbt_tokens: w("( unit ( name_x ) name_x ) unit"),
            comment_tokens: w("<s> gets x </s>"),
            reinstated: false,
        }
    }

    #[test]
    fn method_tsv_round_trip() {
        let recs = vec![MethodRecord {
            id: 3,
            project_id: "a/b".into(),
            file_text: "x\\y\tz\r\n".into(),
            method_source: "void f() {\n\treturn; }".into(),
            javadoc_raw: "/** Does f. */".into(),
        }];
        assert_eq!(read_methods_tsv(&write_methods_tsv(&recs)).unwrap(), recs);
        let four = read_methods_tsv("1\tp\tvoid f() {}\t/** F it. */\n").unwrap();
        assert_eq!(four[0].file_text, "/** F it. */\nvoid f() {}");
        assert!(matches!(
            read_methods_tsv("x\tp\ta\tb\n"),
            Err(CorpusError::Format { line: 1, .. })
        ));
        assert!(read_methods_tsv("1\tp\ta\n").is_err());
    }

    #[test]
    fn dataset_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let split = SplitCorpus {
            train: vec![example(1), example(2)],
            valid: vec![example(3)],
            test: vec![],
            seed: 0,
            dropped_reinstated: 0,
        };
        let v = build_vocab(split.train.iter().map(|e| &e.code_tokens), 10);
        let vocabs = Vocabs {
            txt: v.clone(),
            ast: v.clone(),
            com: v.clone(),
            sbt: v,
        };
        write_dataset(dir.path(), &split, &vocabs).unwrap();
        let d = load_dataset(dir.path()).unwrap();
        assert_eq!(
            (d.train, d.valid, d.test, d.vocabs),
            (split.train, split.valid, split.test, vocabs)
        );
        let line = fs::read_to_string(dir.path().join(TRAIN_FILE)).unwrap();
        assert_eq!(line.lines().next().unwrap(), "1\tp1\t<s> get x </s>\t( unit ( name_x ) name_x ) unit\t( unit ) unit\t<s> gets x </s>");
        assert!(!dir.path().join("train.tsv.tmp").exists());
    }

    #[test]
    fn load_errors_name_the_file() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_dataset(dir.path()), Err(CorpusError::Io(_))));
        fs::write(dir.path().join(TRAIN_FILE), "1\tp\n").unwrap();
        let e = load_dataset(dir.path()).unwrap_err().to_string();
        assert!(e.contains("train.tsv") && e.contains("line 1"), "{e}");
    }
}
