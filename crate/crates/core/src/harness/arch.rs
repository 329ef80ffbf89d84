//! Architecture strings such as `700-RFC128-RFC128-O20`.
//!
//! ```text
//! arch   := <in> ("-" layer)+ "-O" <classes>
//! layer  := "R"? cell "*"? <size>
//! cell   := "FC" | "BRF" | "RF" | "ALIF" | "LIF"
//! ```
//!
//! `R` marks recurrent connections, `*` complex input weights (first layer
//! only). `FC` leaves the neuron kind to the experiment; a named cell fixes
//! it, and all named cells must agree. Error positions are 0-based byte
//! offsets into the string.

use std::fmt;

use crate::error::{Error, Result};
use crate::network::LayerPlan;
use crate::neuron::NeuronKind;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    pub input_dim: usize,
    pub layers: Vec<LayerPlan>,
    pub classes: usize,
    /// Kind named in the string, if any.
    pub kind: Option<NeuronKind>,
}

impl Architecture {
    /// Split after layer `requested` (1-based), clamped to the hidden depth.
    pub fn split_index(&self, requested: usize) -> usize {
        requested.clamp(1, self.layers.len())
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.input_dim)?;
        let cell = match self.kind {
            None => "FC".to_string(),
            Some(k) => k.name().to_ascii_uppercase(),
        };
        for l in &self.layers {
            write!(
                f,
                "-{}{}{}{}",
                if l.recurrent { "R" } else { "" },
                cell,
                if l.complex { "*" } else { "" },
                l.size
            )?;
        }
        write!(f, "-O{}", self.classes)
    }
}

impl std::str::FromStr for Architecture {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_architecture(s)
    }
}

struct Cursor<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Architecture {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn eat(&mut self, lit: &str) -> bool {
        if self.s[self.pos..].starts_with(lit.as_bytes()) {
            self.pos += lit.len();
            true
        } else {
            false
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err(format!("expected {what}"));
        }
        let txt = std::str::from_utf8(&self.s[start..self.pos]).expect("ascii digits");
        match txt.parse::<usize>() {
            Ok(0) | Err(_) => {
                self.pos = start;
                self.err(format!("{what} must be a positive integer"))
            }
            Ok(n) => Ok(n),
        }
    }
}

const CELLS: [(&str, Option<NeuronKind>); 5] = [
    ("FC", None),
    ("BRF", Some(NeuronKind::Brf)),
    ("ALIF", Some(NeuronKind::Alif)),
    ("LIF", Some(NeuronKind::Lif)),
    ("RF", Some(NeuronKind::Rf)),
];

fn cell(c: &mut Cursor<'_>) -> Option<Option<NeuronKind>> {
    CELLS.iter().find(|(lit, _)| c.eat(lit)).map(|&(_, k)| k)
}

pub fn parse_architecture(spec: &str) -> Result<Architecture> {
    let mut c = Cursor {
        s: spec.as_bytes(),
        pos: 0,
    };
    let input_dim = c.number("input width")?;
    let mut layers = Vec::new();
    let mut kind: Option<NeuronKind> = None;
    loop {
        if !c.eat("-") {
            return c.err("expected `-`");
        }
        if c.eat("O") {
            if layers.is_empty() {
                return Err(Error::Architecture {
                    pos: c.pos - 1,
                    msg: "at least one hidden layer is required before the readout".into(),
                });
            }
            let classes = c.number("class count")?;
            if c.pos != c.s.len() {
                return c.err("trailing characters after readout");
            }
            return Ok(Architecture {
                input_dim,
                layers,
                classes,
                kind,
            });
        }
        let start = c.pos;
        // `RF..` is either a recurrent FC or a plain RF cell; try the prefix first
        let mut recurrent = c.eat("R");
        let named = match cell(&mut c) {
            Some(k) => k,
            None if recurrent => {
                c.pos = start;
                recurrent = false;
                match cell(&mut c) {
                    Some(k) => k,
                    None => return c.err("expected a layer (`FC`, `RFC`, `BRF`, ...) or `O`"),
                }
            }
            None => return c.err("expected a layer (`FC`, `RFC`, `BRF`, ...) or `O`"),
        };
        if let Some(k) = named {
            if kind.is_some_and(|prev| prev != k) {
                return Err(Error::Architecture {
                    pos: start,
                    msg: "all layers must use the same neuron kind".into(),
                });
            }
            kind = Some(k);
        }
        let star_pos = c.pos;
        let complex = c.eat("*");
        if complex && !layers.is_empty() {
            return Err(Error::Architecture {
                pos: star_pos,
                msg: "complex weights are only allowed in the first layer".into(),
            });
        }
        let size = c.number("layer size")?;
        layers.push(LayerPlan {
            size,
            recurrent,
            complex,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pos_of(s: &str) -> usize {
        match parse_architecture(s) {
            Err(Error::Architecture { pos, .. }) => pos,
            other => panic!("{s}: expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn shd_architecture() {
        let a = parse_architecture("700-RFC128-RFC128-O20").unwrap();
        assert_eq!(a.input_dim, 700);
        assert_eq!(a.classes, 20);
        assert_eq!(a.layers.len(), 2);
        assert!(a
            .layers
            .iter()
            .all(|l| l.size == 128 && l.recurrent && !l.complex));
        assert_eq!(a.kind, None);
    }

    #[test]
    fn its_architecture() {
        let a = parse_architecture("1-FC*10-FC128-FC128-O6").unwrap();
        assert_eq!(a.input_dim, 1);
        assert_eq!(a.classes, 6);
        let sizes: Vec<_> = a.layers.iter().map(|l| l.size).collect();
        assert_eq!(sizes, [10, 128, 128]);
        assert!(a.layers[0].complex && !a.layers[1].complex);
        assert!(a.layers.iter().all(|l| !l.recurrent));
    }

    #[test]
    fn named_cells() {
        let a = parse_architecture("1-BRF16-O4").unwrap();
        assert_eq!(a.kind, Some(NeuronKind::Brf));
        assert!(!a.layers[0].recurrent);
        let a = parse_architecture("3-RF8-RRF8-O2").unwrap();
        assert_eq!(a.kind, Some(NeuronKind::Rf));
        assert_eq!(
            (a.layers[0].recurrent, a.layers[1].recurrent),
            (false, true)
        );
        let a = parse_architecture("3-RLIF8-O2").unwrap();
        assert_eq!(a.kind, Some(NeuronKind::Lif));
        assert!(a.layers[0].recurrent);
        assert_eq!(pos_of("3-BRF8-LIF8-O2"), 7);
    }

    #[test]
    fn display_round_trips() {
        for s in [
            "700-RFC128-RFC128-O20",
            "1-FC*10-FC128-FC128-O6",
            "1-BRF16-O4",
            "4-RALIF*3-O2",
        ] {
            assert_eq!(parse_architecture(s).unwrap().to_string(), s);
        }
    }

    #[test]
    fn rejects_with_positions() {
        assert_eq!(pos_of("700-O20"), 4);
        assert_eq!(pos_of(""), 0);
        assert_eq!(pos_of("x-FC3-O2"), 0);
        assert_eq!(pos_of("700-XC3-O2"), 4);
        assert_eq!(pos_of("700-FC-O2"), 6);
        assert_eq!(pos_of("700-FC0-O2"), 6);
        assert_eq!(pos_of("700-FC3-FC*3-O2"), 10);
        assert_eq!(pos_of("700-FC3-O2x"), 10);
        assert_eq!(pos_of("700-FC3"), 7);
        assert_eq!(pos_of("700-FC3-O"), 9);
    }

    #[test]
    fn split_index_is_clamped() {
        let a = parse_architecture("1-BRF16-O4").unwrap();
        assert_eq!(a.split_index(2), 1);
        let a = parse_architecture("700-RFC128-RFC128-O20").unwrap();
        assert_eq!(a.split_index(2), 2);
        assert_eq!(a.split_index(0), 1);
    }
}
