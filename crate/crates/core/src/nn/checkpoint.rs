//! Versioned text checkpoints for [`NetworkParams`].
//!
//! ```text
//! otmap-network 1
//! input_dim 2
//! output_dim 2
//! widths 80 80 80
//! grouping 2
//! bias_bound 1.5e1
//! output_scale 2e0
//! project_output 1
//! layer 0 80 2
//! w <row 0>
//! ...
//! b <bias>
//! ```
//!
//! Floats are written in shortest round-trip exponent form, so save/load is
//! bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use super::groupsort::GROUP_SIZE;
use super::network::{Architecture, Layer, NetworkParams};
use crate::error::{Error, Result};
use crate::tensor::{Matrix, Vector};

const MAGIC: &str = "otmap-network";
const VERSION: u32 = 1;

pub fn to_string(params: &NetworkParams) -> String {
    let arch = params.arch();
    let mut out = String::new();
    let join = |xs: &[f64]| xs.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(" ");
    writeln!(out, "{MAGIC} {VERSION}").unwrap();
    writeln!(out, "input_dim {}", arch.input_dim).unwrap();
    writeln!(out, "output_dim {}", arch.output_dim).unwrap();
    let widths: Vec<String> = arch.widths.iter().map(usize::to_string).collect();
    writeln!(out, "widths {}", widths.join(" ")).unwrap();
    writeln!(out, "grouping {GROUP_SIZE}").unwrap();
    writeln!(out, "bias_bound {:e}", arch.bias_bound).unwrap();
    writeln!(out, "output_scale {:e}", arch.output_scale).unwrap();
    writeln!(out, "project_output {}", u8::from(arch.project_output)).unwrap();
    for (i, layer) in params.layers().iter().enumerate() {
        let (r, c) = layer.weight.shape();
        writeln!(out, "layer {i} {r} {c}").unwrap();
        for row in layer.weight.row_iter() {
            writeln!(out, "w {}", join(row)).unwrap();
        }
        writeln!(out, "b {}", join(layer.bias.as_slice())).unwrap();
    }
    out
}

pub fn from_str(text: &str) -> Result<NetworkParams> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let mut next = |what: &str| -> Result<(usize, Vec<&str>)> {
        lines
            .next()
            .map(|(n, l)| (n + 1, l.split_whitespace().collect()))
            .ok_or_else(|| Error::Data(format!("checkpoint truncated: expected {what}")))
    };
    let bad = |line: usize, msg: &str| Error::Data(format!("checkpoint line {line}: {msg}"));

    let (n, header) = next("header")?;
    if header.len() != 2 || header[0] != MAGIC {
        return Err(bad(n, "not a network checkpoint"));
    }
    if header[1] != VERSION.to_string() {
        return Err(bad(n, &format!("unsupported version {}", header[1])));
    }

    let mut field = |key: &str| -> Result<(usize, Vec<String>)> {
        let (n, toks) = next(key)?;
        if toks.first() != Some(&key) {
            return Err(bad(n, &format!("expected `{key}`")));
        }
        Ok((n, toks[1..].iter().map(|s| s.to_string()).collect()))
    };
    let one = |(n, v): (usize, Vec<String>)| -> Result<(usize, String)> {
        match v.as_slice() {
            [x] => Ok((n, x.clone())),
            _ => Err(bad(n, "expected a single value")),
        }
    };
    let parse_usize = |(n, s): (usize, String)| s.parse::<usize>().map_err(|_| bad(n, "bad integer"));
    let parse_f64 = |(n, s): (usize, String)| s.parse::<f64>().map_err(|_| bad(n, "bad number"));

    let input_dim = parse_usize(one(field("input_dim")?)?)?;
    let output_dim = parse_usize(one(field("output_dim")?)?)?;
    let (wn, wtoks) = field("widths")?;
    let widths = wtoks
        .into_iter()
        .map(|s| parse_usize((wn, s)))
        .collect::<Result<Vec<_>>>()?;
    let (gn, g) = one(field("grouping")?)?;
    if g != GROUP_SIZE.to_string() {
        return Err(bad(gn, "only grouping size 2 is supported"));
    }
    let bias_bound = parse_f64(one(field("bias_bound")?)?)?;
    let output_scale = parse_f64(one(field("output_scale")?)?)?;
    let (pn, proj) = one(field("project_output")?)?;
    let project_output = match proj.as_str() {
        "0" => false,
        "1" => true,
        _ => return Err(bad(pn, "project_output must be 0 or 1")),
    };

    let arch = Architecture {
        input_dim,
        output_dim,
        widths,
        bias_bound,
        output_scale,
        project_output,
    };
    arch.validate()?;

    let floats = |n: usize, toks: &[&str], len: usize| -> Result<Vec<f64>> {
        if toks.len() != len {
            return Err(bad(n, &format!("expected {len} values, got {}", toks.len())));
        }
        toks.iter()
            .map(|s| s.parse::<f64>().map_err(|_| bad(n, "bad number")))
            .collect()
    };

    let mut layers = Vec::new();
    for (i, (rows, cols)) in arch.layer_shapes().into_iter().enumerate() {
        let (n, toks) = next("layer")?;
        if toks != ["layer", &i.to_string(), &rows.to_string(), &cols.to_string()] {
            return Err(bad(n, &format!("expected `layer {i} {rows} {cols}`")));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (n, toks) = next("weight row")?;
            if toks.first() != Some(&"w") {
                return Err(bad(n, "expected weight row"));
            }
            data.extend(floats(n, &toks[1..], cols)?);
        }
        let (n, toks) = next("bias")?;
        if toks.first() != Some(&"b") {
            return Err(bad(n, "expected bias row"));
        }
        let bias = Vector::new(floats(n, &toks[1..], rows)?)?;
        layers.push(Layer {
            weight: Matrix::from_vec(rows, cols, data)?,
            bias,
        });
    }
    if let Ok((n, _)) = next("end") {
        return Err(bad(n, "trailing content"));
    }
    NetworkParams::from_layers(arch, layers)
}

pub fn save(params: &NetworkParams, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_string(params)).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<NetworkParams> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bits(p: &NetworkParams) -> Vec<u64> {
        p.slices().flatten().map(|v| v.to_bits()).collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn round_trip_is_bit_exact(seed in any::<u64>(), d in 1usize..4, w in 1usize..5, scale in 1.0f64..5.0) {
            let arch = Architecture::new(d, d, vec![2 * w, 2]).with_bias_bound(0.3).with_output_ball(scale);
            let mut p = NetworkParams::init(arch, seed).unwrap();
            // exercise awkward values
            p.layers_mut()[0].bias.as_mut_slice()[0] = 1.0 / 3.0 * 1e-300;
            let back = from_str(&to_string(&p)).unwrap();
            prop_assert_eq!(bits(&back), bits(&p));
            prop_assert_eq!(back.arch(), p.arch());
        }
    }

    #[test]
    fn rejects_corrupt_input() {
        let arch = Architecture::new(2, 1, vec![2]);
        let text = to_string(&NetworkParams::init(arch, 1).unwrap());
        assert!(from_str(&text.replace("otmap-network 1", "otmap-network 9")).is_err());
        assert!(from_str(&text.replace("grouping 2", "grouping 3")).is_err());
        let truncated: String = text.lines().take(10).collect::<Vec<_>>().join("\n");
        assert!(from_str(&truncated).is_err());
        assert!(from_str(&format!("{text}extra\n")).is_err());
        assert!(from_str("").is_err());
    }
}
