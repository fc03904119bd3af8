use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    /// Single encoder over one token sequence, with attention.
    #[serde(rename = "attendgru")]
    AttendGru,
    /// Code/text encoder plus a flattened-AST encoder, each with its own attention.
    #[serde(rename = "ast-attendgru")]
    AstAttendGru,
    /// The single-encoder network fed SBT sequences that keep their words.
    #[serde(rename = "sbt")]
    Sbt,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [
        ModelKind::AttendGru,
        ModelKind::AstAttendGru,
        ModelKind::Sbt,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::AttendGru => "attendgru",
            ModelKind::AstAttendGru => "ast-attendgru",
            ModelKind::Sbt => "sbt",
        }
    }

    pub fn has_ast_encoder(self) -> bool {
        self == ModelKind::AstAttendGru
    }

    /// Which dataset column feeds the primary encoder unless overridden.
    pub fn default_input(self) -> InputSource {
        match self {
            ModelKind::Sbt => InputSource::Sbt,
            _ => InputSource::Code,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| ModelError::Config(format!("unknown model kind `{s}`")))
    }
}

/// Token sequence given to the primary (code/text) encoder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputSource {
    Code,
    Sbt,
    /// Structure-only flattening. Used as the primary input in challenge runs.
    Sbtao,
}

impl InputSource {
    pub fn as_str(self) -> &'static str {
        match self {
            InputSource::Code => "code",
            InputSource::Sbt => "sbt",
            InputSource::Sbtao => "sbtao",
        }
    }
}

impl fmt::Display for InputSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InputSource {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [InputSource::Code, InputSource::Sbt, InputSource::Sbtao]
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| ModelError::Config(format!("unknown input source `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub input: InputSource,
    pub txtlen: usize,
    pub astlen: usize,
    pub comlen: usize,
    pub embdims: usize,
    pub rnndims: usize,
    pub txtvocabsize: usize,
    pub astvocabsize: usize,
    pub comvocabsize: usize,
}

impl ModelConfig {
    /// Full-size defaults: 100-slot inputs, 13-slot comments, 100/256 dims.
    pub fn new(
        kind: ModelKind,
        txtvocabsize: usize,
        astvocabsize: usize,
        comvocabsize: usize,
    ) -> Self {
        ModelConfig {
            kind,
            input: kind.default_input(),
            txtlen: 100,
            astlen: 100,
            comlen: 13,
            embdims: 100,
            rnndims: 256,
            txtvocabsize,
            astvocabsize,
            comvocabsize,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let dims = [
            ("txtlen", self.txtlen),
            ("astlen", self.astlen),
            ("comlen", self.comlen),
            ("embdims", self.embdims),
            ("rnndims", self.rnndims),
            ("txtvocabsize", self.txtvocabsize),
            ("astvocabsize", self.astvocabsize),
            ("comvocabsize", self.comvocabsize),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(ModelError::Config(format!("{name} must be positive")));
        }
        if self.comlen < 2 {
            return Err(ModelError::Config("comlen must be at least 2".into()));
        }
        Ok(())
    }

    /// Width of the concatenated context at each decoder position.
    pub fn context_width(&self) -> usize {
        let encoders = if self.kind.has_ast_encoder() { 2 } else { 1 };
        (encoders + 1) * self.rnndims
    }

    /// Every parameter the configured network owns, in name order.
    pub fn param_shapes(&self) -> Vec<(String, Vec<usize>)> {
        let (e, r) = (self.embdims, self.rnndims);
        let mut shapes = Vec::new();
        let mut emb =
            |name: &str, vocab: usize| shapes.push((format!("{name}.table"), vec![vocab, e]));
        emb("txt_embedding", self.txtvocabsize);
        emb("com_embedding", self.comvocabsize);
        if self.kind.has_ast_encoder() {
            emb("ast_embedding", self.astvocabsize);
        }
        let mut grus = vec!["txt_gru", "dec_gru"];
        if self.kind.has_ast_encoder() {
            grus.push("ast_gru");
        }
        for g in grus {
            shapes.push((format!("{g}.kernel"), vec![e, 3 * r]));
            shapes.push((format!("{g}.recurrent_kernel"), vec![r, 3 * r]));
            shapes.push((format!("{g}.bias"), vec![3 * r]));
        }
        shapes.push(("td_dense.kernel".into(), vec![self.context_width(), r]));
        shapes.push(("td_dense.bias".into(), vec![r]));
        shapes.push((
            "out_dense.kernel".into(),
            vec![self.comlen * r, self.comvocabsize],
        ));
        shapes.push(("out_dense.bias".into(), vec![self.comvocabsize]));
        shapes.sort();
        shapes
    }

    /// `key=value` lines in a fixed key order.
    pub fn to_kv(&self) -> String {
        format!(
            "kind={}\ninput={}\ntxtlen={}\nastlen={}\ncomlen={}\nembdims={}\nrnndims={}\ntxtvocabsize={}\nastvocabsize={}\ncomvocabsize={}\n",
            self.kind,
            self.input,
            self.txtlen,
            self.astlen,
            self.comlen,
            self.embdims,
            self.rnndims,
            self.txtvocabsize,
            self.astvocabsize,
            self.comvocabsize
        )
    }

    pub fn from_kv(text: &str) -> Result<Self, ModelError> {
        let mut kind = None;
        let mut input = None;
        let mut nums = [None; 8];
        const KEYS: [&str; 8] = [
            "txtlen",
            "astlen",
            "comlen",
            "embdims",
            "rnndims",
            "txtvocabsize",
            "astvocabsize",
            "comvocabsize",
        ];
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ModelError::Config(format!("malformed config line `{line}`")))?;
            match k {
                "kind" => kind = Some(v.parse()?),
                "input" => input = Some(v.parse()?),
                _ => {
                    let i = KEYS
                        .iter()
                        .position(|key| *key == k)
                        .ok_or_else(|| ModelError::Config(format!("unknown config key `{k}`")))?;
                    let n = v
                        .parse()
                        .map_err(|_| ModelError::Config(format!("{k}: `{v}` is not a count")))?;
                    nums[i] = Some(n);
                }
            }
        }
        let need = |i: usize| {
            nums[i].ok_or_else(|| ModelError::Config(format!("missing config key `{}`", KEYS[i])))
        };
        let kind: ModelKind =
            kind.ok_or_else(|| ModelError::Config("missing config key `kind`".into()))?;
        let cfg = ModelConfig {
            kind,
            input: input.unwrap_or(kind.default_input()),
            txtlen: need(0)?,
            astlen: need(1)?,
            comlen: need(2)?,
            embdims: need(3)?,
            rnndims: need(4)?,
            txtvocabsize: need(5)?,
            astvocabsize: need(6)?,
            comvocabsize: need(7)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_round_trip() {
        let mut c = ModelConfig::new(ModelKind::AstAttendGru, 10, 20, 30);
        c.input = InputSource::Sbtao;
        assert_eq!(ModelConfig::from_kv(&c.to_kv()).unwrap(), c);
    }

    #[test]
    fn rejects_short_comments_and_zero_dims() {
        let mut c = ModelConfig::new(ModelKind::AttendGru, 10, 10, 10);
        c.comlen = 1;
        assert!(c.validate().is_err());
        c.comlen = 13;
        c.rnndims = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn ast_params_only_for_ast_kind() {
        for kind in ModelKind::ALL {
            let shapes = ModelConfig::new(kind, 10, 10, 10).param_shapes();
            let has_ast = shapes.iter().any(|(n, _)| n.starts_with("ast_"));
            assert_eq!(has_ast, kind.has_ast_encoder(), "{kind}");
        }
    }

    #[test]
    fn head_widths() {
        let c = ModelConfig::new(ModelKind::AstAttendGru, 10, 10, 10);
        assert_eq!(c.context_width(), 768);
        assert_eq!(
            ModelConfig::new(ModelKind::AttendGru, 10, 10, 10).context_width(),
            512
        );
        let out = c
            .param_shapes()
            .into_iter()
            .find(|(n, _)| n == "out_dense.kernel")
            .unwrap();
        assert_eq!(out.1, vec![3328, 10]);
    }
}
