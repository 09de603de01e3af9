//! Line-oriented text formats for datasets and ratio models.
//!
//! Numbers are written as the shortest decimal that round-trips the `f64`
//! exactly.
//!
//! Dataset:
//!
//! ```text
//! oee-dataset v1 ds=2 da=discrete:4 source=train behavior=uniform seed=7
//! 0,0.0,0.0,2,1.0,0.0,-1.0
//! ```
//!
//! Each record line is `t, s..., a..., s_next..., r`. A discrete action is
//! one integer column.
//!
//! MLP model: a header, then all parameters separated by whitespace, layer by
//! layer, each layer's row-major weights followed by its biases.
//!
//! ```text
//! oee-model v1 kind=mlp din=3 h=64,64,64 nu=0.1 mu=10.0 domain=sa
//! ```
//!
//! Tabular model: a header, then one `x1,x2,... value` line per entry.
//!
//! Optional header keys: `domain`, `lambda`, `onehot`, `delta` (feature
//! encoding flags), `shift` and `scale` (MLP input standardisation), `np`,
//! `nq`, `iters`, `seed`. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::nn::{check_bounds, MlpParams};
use crate::ratio::{Domain, RatioBody, RatioModel, Scaler, TabularKey, TabularRatio, TrainMeta};
use crate::report::fmt_f64;
use crate::types::{Action, ActionSpec, FeatureEncoding, Source, StateVec, Transition, TransitionDataset};

pub const DATASET_MAGIC: &str = "oee-dataset";
pub const MODEL_MAGIC: &str = "oee-model";

/// Upper limit on dimensions read from headers, so malformed files fail
/// cleanly instead of attempting huge allocations.
const MAX_DIM: usize = 1 << 16;

fn header_fields(line: &str, magic: &str) -> Result<BTreeMap<String, String>> {
    let mut tokens = line.split_whitespace();
    if tokens.next() != Some(magic) {
        return Err(Error::parse(1, format!("expected a {magic} header")));
    }
    if tokens.next() != Some("v1") {
        return Err(Error::parse(1, "unsupported format version"));
    }
    let mut out = BTreeMap::new();
    for tok in tokens {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| Error::parse(1, format!("header token {tok:?} is not key=value")))?;
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(Error::parse(1, format!("duplicate header key {k:?}")));
        }
    }
    Ok(out)
}

fn take<'a>(fields: &'a BTreeMap<String, String>, key: &str) -> Result<&'a str> {
    fields
        .get(key)
        .map(String::as_str)
        .ok_or_else(|| Error::parse(1, format!("header lacks {key}=")))
}

fn parse_num<T: std::str::FromStr>(s: &str, line: usize, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("bad {what} {:?}", s.trim())))
}

fn parse_dim(s: &str, what: &str) -> Result<usize> {
    let d: usize = parse_num(s, 1, what)?;
    if d == 0 || d > MAX_DIM {
        return Err(Error::parse(1, format!("{what} {d} out of range")));
    }
    Ok(d)
}

fn parse_finite(s: &str, line: usize) -> Result<f64> {
    let v: f64 = parse_num(s, line, "number")?;
    if !v.is_finite() {
        return Err(Error::parse(line, format!("non-finite value {s:?}")));
    }
    Ok(v)
}

fn parse_flag(fields: &BTreeMap<String, String>, key: &str) -> Result<bool> {
    match fields.get(key).map(String::as_str) {
        None | Some("0") => Ok(false),
        Some("1") => Ok(true),
        Some(v) => Err(Error::parse(1, format!("{key} must be 0 or 1, got {v:?}"))),
    }
}

fn check_keys(fields: &BTreeMap<String, String>, allowed: &[&str]) -> Result<()> {
    for k in fields.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(Error::parse(1, format!("unknown header key {k:?}")));
        }
    }
    Ok(())
}

pub fn write_dataset(data: &TransitionDataset) -> String {
    let mut out = format!(
        "{DATASET_MAGIC} v1 ds={} da={} source={}",
        data.state_dim, data.action_spec, data.source
    );
    if !data.behavior.is_empty() {
        let b: String = data
            .behavior
            .chars()
            .map(|c| if c.is_whitespace() { '_' } else { c })
            .collect();
        let _ = write!(out, " behavior={b}");
    }
    let _ = writeln!(out, " seed={}", data.seed);
    for tr in &data.records {
        let _ = write!(out, "{}", tr.t);
        for v in tr.s.as_slice() {
            let _ = write!(out, ",{}", fmt_f64(*v));
        }
        match &tr.a {
            Action::Discrete(i) => {
                let _ = write!(out, ",{i}");
            }
            Action::Continuous(v) => {
                for x in v {
                    let _ = write!(out, ",{}", fmt_f64(*x));
                }
            }
        }
        for v in tr.s_next.as_slice() {
            let _ = write!(out, ",{}", fmt_f64(*v));
        }
        let _ = writeln!(out, ",{}", fmt_f64(tr.r));
    }
    out
}

pub fn parse_dataset(text: &str) -> Result<TransitionDataset> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::parse(1, "empty input"))?;
    let fields = header_fields(header, DATASET_MAGIC)?;
    check_keys(&fields, &["ds", "da", "source", "behavior", "seed"])?;
    let ds = parse_dim(take(&fields, "ds")?, "state dimension")?;
    let spec: ActionSpec = take(&fields, "da")?
        .parse()
        .map_err(|e: Error| Error::parse(1, e.to_string()))?;
    if spec.columns() > MAX_DIM {
        return Err(Error::parse(1, "action dimension out of range"));
    }
    let source: Source = take(&fields, "source")?
        .parse()
        .map_err(|e: Error| Error::parse(1, e.to_string()))?;
    let mut data = TransitionDataset::new(ds, spec, source);
    data.behavior = fields.get("behavior").cloned().unwrap_or_default();
    data.seed = match fields.get("seed") {
        Some(s) => parse_num(s, 1, "seed")?,
        None => 0,
    };
    let width = 2 * ds + spec.columns() + 2;
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != width {
            return Err(Error::parse(
                lineno,
                format!("expected {width} columns, found {}", cols.len()),
            ));
        }
        let t: usize = parse_num(cols[0], lineno, "time step")?;
        let mut at = 1;
        let mut read = |n: usize| -> Result<Vec<f64>> {
            let v = cols[at..at + n]
                .iter()
                .map(|c| parse_finite(c, lineno))
                .collect::<Result<Vec<f64>>>()?;
            at += n;
            Ok(v)
        };
        let s = read(ds)?;
        let a = match spec {
            ActionSpec::Discrete(_) => {
                let idx: usize = parse_num(cols[1 + ds], lineno, "action index")?;
                read(1)?;
                Action::Discrete(idx)
            }
            ActionSpec::Continuous(d) => Action::Continuous(read(d)?),
        };
        let s_next = read(ds)?;
        let r = read(1)?[0];
        let tr = Transition {
            t,
            s: StateVec::new(s)?,
            a,
            s_next: StateVec::new(s_next)?,
            r,
        };
        data.push(tr).map_err(|e| Error::parse(lineno, e.to_string()))?;
    }
    Ok(data)
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(",")
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|c| parse_finite(c, 1))
        .collect::<Result<Vec<f64>>>()
        .map_err(|_| Error::parse(1, format!("bad {what} list")))
}

pub fn write_model(model: &RatioModel) -> String {
    let mut out = String::new();
    let kind = match &model.body {
        RatioBody::Tabular(_) => "tabular",
        RatioBody::Mlp { .. } => "mlp",
    };
    let _ = write!(out, "{MODEL_MAGIC} v1 kind={kind} din={}", model.input_dim());
    if let RatioBody::Mlp { params, .. } = &model.body {
        let h = params.hidden();
        let _ = write!(out, " h={},{},{}", h[0], h[1], h[2]);
    }
    let _ = write!(
        out,
        " nu={} mu={} domain={} lambda={} onehot={} delta={}",
        fmt_f64(model.nu),
        fmt_f64(model.mu),
        model.domain.tag(),
        fmt_f64(model.lambda),
        model.encoding.one_hot as u8,
        model.encoding.delta_next as u8
    );
    if let RatioBody::Mlp { scaler: Some(sc), .. } = &model.body {
        let _ = write!(out, " shift={} scale={}", join(&sc.shift), join(&sc.scale));
    }
    let m = &model.meta;
    let _ = writeln!(out, " np={} nq={} iters={} seed={}", m.n_p, m.n_q, m.iterations, m.seed);
    match &model.body {
        RatioBody::Mlp { params, .. } => {
            for (i, v) in params.flat().iter().enumerate() {
                out.push_str(&fmt_f64(*v));
                out.push(if i % 8 == 7 { '\n' } else { ' ' });
            }
            if !out.ends_with('\n') {
                out.push('\n');
            }
        }
        RatioBody::Tabular(t) => {
            for (k, v) in &t.values {
                let _ = writeln!(out, "{} {}", join(&k.values()), fmt_f64(*v));
            }
        }
    }
    out
}

pub fn parse_model(text: &str) -> Result<RatioModel> {
    let header = text.lines().next().ok_or_else(|| Error::parse(1, "empty input"))?;
    let fields = header_fields(header, MODEL_MAGIC)?;
    check_keys(
        &fields,
        &[
            "kind", "din", "h", "nu", "mu", "domain", "lambda", "onehot", "delta", "shift", "scale", "np", "nq",
            "iters", "seed",
        ],
    )?;
    let din = parse_dim(take(&fields, "din")?, "input dimension")?;
    let nu = parse_finite(take(&fields, "nu")?, 1)?;
    let mu = parse_finite(take(&fields, "mu")?, 1)?;
    check_bounds(nu, mu).map_err(|e| Error::parse(1, e.to_string()))?;
    let domain = match fields.get("domain") {
        Some(d) => Domain::from_tag(d).map_err(|e| Error::parse(1, e.to_string()))?,
        None => Domain::X,
    };
    let lambda = match fields.get("lambda") {
        Some(l) => parse_finite(l, 1)?,
        None => 0.0,
    };
    let encoding = FeatureEncoding {
        one_hot: parse_flag(&fields, "onehot")?,
        delta_next: parse_flag(&fields, "delta")?,
    };
    let count = |key: &str| -> Result<u64> {
        match fields.get(key) {
            Some(v) => parse_num(v, 1, key),
            None => Ok(0),
        }
    };
    let meta = TrainMeta {
        n_p: count("np")? as usize,
        n_q: count("nq")? as usize,
        iterations: count("iters")? as usize,
        seed: count("seed")?,
        ..Default::default()
    };
    let body_text = text.split_once('\n').map_or("", |(_, rest)| rest);
    let body = match take(&fields, "kind")? {
        "mlp" => {
            let hs: Vec<&str> = take(&fields, "h")?.split(',').collect();
            if hs.len() != 3 {
                return Err(Error::parse(1, "h= needs three hidden widths"));
            }
            let mut hidden = [0usize; 3];
            for (slot, s) in hidden.iter_mut().zip(&hs) {
                *slot = parse_dim(s, "hidden width")?;
            }
            let sizes = [din, hidden[0], hidden[1], hidden[2], 1];
            let expected = sizes.windows(2).try_fold(0usize, |acc, w| {
                w[0].checked_mul(w[1])
                    .and_then(|m| m.checked_add(w[1]))
                    .and_then(|m| m.checked_add(acc))
            });
            let tokens: Vec<&str> = body_text.split_whitespace().collect();
            match expected {
                Some(e) if e == tokens.len() => {}
                _ => {
                    return Err(Error::parse(
                        2,
                        format!("found {} parameters, header implies {expected:?}", tokens.len()),
                    ))
                }
            }
            let values = tokens
                .iter()
                .map(|t| parse_finite(t, 2))
                .collect::<Result<Vec<f64>>>()?;
            let mut params = MlpParams::zeros(din, hidden, nu, mu)?;
            params.set_flat(&values)?;
            let scaler = match (fields.get("shift"), fields.get("scale")) {
                (Some(sh), Some(sc)) => {
                    let shift = parse_list(sh, "shift")?;
                    let scale = parse_list(sc, "scale")?;
                    if shift.len() != din || scale.len() != din {
                        return Err(Error::parse(1, "scaler length differs from din"));
                    }
                    Some(Scaler { shift, scale })
                }
                (None, None) => None,
                _ => return Err(Error::parse(1, "shift= and scale= must appear together")),
            };
            RatioBody::Mlp { params, scaler }
        }
        "tabular" => {
            if fields.contains_key("h") || fields.contains_key("shift") || fields.contains_key("scale") {
                return Err(Error::parse(1, "tabular models take no h=, shift= or scale="));
            }
            let mut table = TabularRatio::new(din);
            for (i, line) in body_text.lines().enumerate() {
                let lineno = i + 2;
                if line.trim().is_empty() {
                    continue;
                }
                let (key, value) = line
                    .trim()
                    .split_once(char::is_whitespace)
                    .ok_or_else(|| Error::parse(lineno, "expected `key value`"))?;
                let coords = key
                    .split(',')
                    .map(|c| parse_finite(c, lineno))
                    .collect::<Result<Vec<f64>>>()?;
                if coords.len() != din {
                    return Err(Error::parse(
                        lineno,
                        format!("key has {} coordinates, expected {din}", coords.len()),
                    ));
                }
                let v = parse_finite(value, lineno)?;
                if v < nu || v > mu {
                    return Err(Error::parse(lineno, format!("value {v} outside [{nu}, {mu}]")));
                }
                if table.values.insert(TabularKey::new(&coords), v).is_some() {
                    return Err(Error::parse(lineno, "duplicate key"));
                }
            }
            RatioBody::Tabular(table)
        }
        other => return Err(Error::parse(1, format!("unknown model kind {other:?}"))),
    };
    Ok(RatioModel {
        body,
        domain,
        encoding,
        nu,
        mu,
        lambda,
        meta,
    })
}
