//! Loader for channel spec files (TOML).
//!
//! ```toml
//! kind = "swap_alpha"          # swap_alpha | partial_swap | classical_noiseless | dense
//! dims = [2, 2, 2, 2]          # d_A0, d_A1, d_B0, d_B1
//!
//! [params]
//! alpha = 1.0                  # swap_alpha
//! p = 0.2                      # optional global depolarizing noise, any kind
//! ```
//!
//! A `dense` channel lists its Choi matrix on `(A0, A1, B0, B1)` in row-major
//! order as `choi = [[re, im], ...]`.

use std::path::Path;

use serde::Deserialize;

use super::{
    choi_from_unitary, classical_noiseless, depolarize_global, partial_swap_unitary,
    swap_alpha_unitary, BipartiteChannel, ChannelDims,
};
use crate::error::{Error, Result};
use crate::tensor::{CMatrix, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    SwapAlpha,
    PartialSwap,
    ClassicalNoiseless,
    Dense,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    pub alpha: Option<f64>,
    pub a: Option<f64>,
    pub p: Option<f64>,
    pub m: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub kind: ChannelKind,
    #[serde(default)]
    pub params: ChannelParams,
    pub dims: Option<[usize; 4]>,
    pub choi: Option<Vec<[f64; 2]>>,
}

fn field_error(field: &str, message: impl Into<String>) -> Error {
    Error::ChannelFile {
        location: format!("field `{field}`"),
        message: message.into(),
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl ChannelSpec {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let location = match e.span() {
                Some(span) => format!("line {}", line_of(text, span.start)),
                None => "channel file".to_string(),
            };
            Error::ChannelFile {
                location,
                message: e.message().to_string(),
            }
        })
    }

    /// Builds and validates the described channel.
    pub fn build(&self) -> Result<BipartiteChannel> {
        let dims = self
            .dims
            .map(|[a0, a1, b0, b1]| ChannelDims::new(a0, a1, b0, b1));
        if let Some(d) = dims {
            d.validate()
                .map_err(|e| field_error("dims", e.to_string()))?;
        }
        let require_qubits = |dims: Option<ChannelDims>| -> Result<ChannelDims> {
            match dims {
                None => Ok(ChannelDims::uniform(2)),
                Some(d) if d == ChannelDims::uniform(2) => Ok(d),
                Some(d) => Err(field_error(
                    "dims",
                    format!(
                        "{:?} must be [2, 2, 2, 2] for a two-qubit gate",
                        d.as_array()
                    ),
                )),
            }
        };
        let param = |value: Option<f64>, name: &str| -> Result<f64> {
            value.ok_or_else(|| field_error(&format!("params.{name}"), "missing"))
        };
        let base = match self.kind {
            ChannelKind::SwapAlpha => {
                let d = require_qubits(dims)?;
                let alpha = param(self.params.alpha, "alpha")?;
                if !alpha.is_finite() {
                    return Err(field_error("params.alpha", "must be finite"));
                }
                choi_from_unitary(&swap_alpha_unitary(alpha), d)?
            }
            ChannelKind::PartialSwap => {
                let d = require_qubits(dims)?;
                let a = param(self.params.a, "a")?;
                let u =
                    partial_swap_unitary(a).map_err(|e| field_error("params.a", e.to_string()))?;
                choi_from_unitary(&u, d)?
            }
            ChannelKind::ClassicalNoiseless => {
                let m = self
                    .params
                    .m
                    .ok_or_else(|| field_error("params.m", "missing"))?;
                let ch =
                    classical_noiseless(m).map_err(|e| field_error("params.m", e.to_string()))?;
                if let Some(d) = dims {
                    if d != ch.dims() {
                        return Err(field_error("dims", format!("must be [{m}, {m}, {m}, {m}]")));
                    }
                }
                ch
            }
            ChannelKind::Dense => {
                let d = dims.ok_or_else(|| field_error("dims", "required for a dense channel"))?;
                let entries = self
                    .choi
                    .as_ref()
                    .ok_or_else(|| field_error("choi", "required for a dense channel"))?;
                let side = d.choi_dim();
                if entries.len() != side * side {
                    return Err(field_error(
                        "choi",
                        format!(
                            "expected {} entries ({side}x{side}), found {}",
                            side * side,
                            entries.len()
                        ),
                    ));
                }
                let matrix = CMatrix::from_fn(side, side, |r, c| {
                    let [re, im] = entries[r * side + c];
                    C64::new(re, im)
                });
                BipartiteChannel::from_choi(d, matrix)
                    .map_err(|e| field_error("choi", e.to_string()))?
            }
        };
        if self.kind != ChannelKind::Dense && self.choi.is_some() {
            return Err(field_error("choi", "only allowed for kind = \"dense\""));
        }
        match self.params.p {
            None => Ok(base),
            Some(p) => {
                depolarize_global(&base, p).map_err(|e| field_error("params.p", e.to_string()))
            }
        }
    }
}

pub fn parse_channel(text: &str) -> Result<BipartiteChannel> {
    ChannelSpec::parse(text)?.build()
}

pub fn load_channel(path: impl AsRef<Path>) -> Result<BipartiteChannel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::ChannelFile {
        location: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_channel(&text).map_err(|e| match e {
        Error::ChannelFile { location, message } => Error::ChannelFile {
            location: format!("{}: {location}", path.display()),
            message,
        },
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::swap_channel;

    #[test]
    fn parses_swap_alpha() {
        let ch = parse_channel("kind = \"swap_alpha\"\n[params]\nalpha = 1.0\n").unwrap();
        assert!(ch.choi().max_abs_diff(swap_channel().choi()).unwrap() < 1e-14);
    }

    #[test]
    fn parses_noisy_partial_swap() {
        let ch = parse_channel(
            "kind = \"partial_swap\"\ndims = [2, 2, 2, 2]\n[params]\na = 0.5\np = 0.3\n",
        )
        .unwrap();
        let direct = depolarize_global(
            &choi_from_unitary(&partial_swap_unitary(0.5).unwrap(), ChannelDims::uniform(2))
                .unwrap(),
            0.3,
        )
        .unwrap();
        assert!(ch.choi().max_abs_diff(direct.choi()).unwrap() < 1e-14);
    }

    #[test]
    fn parses_classical() {
        let ch = parse_channel("kind = \"classical_noiseless\"\n[params]\nm = 3\n").unwrap();
        assert_eq!(ch.dims(), ChannelDims::uniform(3));
    }

    #[test]
    fn parses_dense_round_trip() {
        let text =
            "kind = \"dense\"\ndims = [2, 1, 1, 1]\nchoi = [[1, 0], [0, 0], [0, 0], [1, 0]]\n";
        let ch = parse_channel(text).unwrap();
        assert_eq!(ch.dims(), ChannelDims::new(2, 1, 1, 1));
    }

    #[test]
    fn syntax_errors_report_line() {
        let err = parse_channel("kind = \"swap_alpha\"\n[params]\nalpha = = 1\n").unwrap_err();
        match err {
            Error::ChannelFile { location, .. } => assert_eq!(location, "line 3"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_kind_reports_line() {
        let err = parse_channel("dims = [2,2,2,2]\nkind = \"teleport\"\n").unwrap_err();
        match err {
            Error::ChannelFile { location, .. } => assert_eq!(location, "line 2"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn semantic_errors_report_field() {
        let cases = [
            ("kind = \"swap_alpha\"\n", "field `params.alpha`"),
            (
                "kind = \"partial_swap\"\n[params]\na = 2.0\n",
                "field `params.a`",
            ),
            (
                "kind = \"swap_alpha\"\ndims = [2,2,2,3]\n[params]\nalpha = 1\n",
                "field `dims`",
            ),
            (
                "kind = \"dense\"\ndims = [1,1,1,2]\nchoi = [[1,0]]\n",
                "field `choi`",
            ),
            (
                "kind = \"dense\"\ndims = [2,1,1,1]\nchoi = [[2,0],[0,0],[0,0],[1,0]]\n",
                "field `choi`",
            ),
            (
                "kind = \"swap_alpha\"\n[params]\nalpha = 1\np = 1.5\n",
                "field `params.p`",
            ),
        ];
        for (text, expected) in cases {
            match parse_channel(text).unwrap_err() {
                Error::ChannelFile { location, .. } => assert_eq!(location, expected, "{text}"),
                other => panic!("unexpected {other:?} for {text}"),
            }
        }
    }
}
