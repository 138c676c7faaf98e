//! Draw-file, pointwise log-likelihood, block-statistics and whole-chain
//! persistence. A chain directory holds `spec.cfg`, `draws.csv`,
//! `pointwise.csv`, `blocks.csv` and `counters.csv`, and reading it back
//! reproduces the `PosteriorChain` exactly.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::specfile::{parse_model_spec, write_model_spec};
use crate::io::{fmt_float, parse_float};
use crate::model::{ModelSpec, ParameterState};
use crate::sampler::{param_names, unflatten_state, BlockStats, PosteriorChain};
use crate::waic::LoglikMatrix;

fn write_rows(names: &[String], rows: &[Vec<f64>], path: &Path) -> Result<()> {
    let mut out = names.join(",");
    out.push('\n');
    for row in rows {
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            out.push_str(&fmt_float(*v));
            first = false;
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Write one row per retained draw, one column per scalar parameter.
pub fn write_draws(chain: &PosteriorChain, path: &Path) -> Result<()> {
    let (names, rows) = chain.flattened_rows();
    write_rows(&names, &rows, path)
}

/// Write explicit states in the draw-file format (used for truth files).
pub fn write_states(states: &[ParameterState], spec: &ModelSpec, path: &Path) -> Result<()> {
    let n = states
        .first()
        .map(|s| s.n_subjects())
        .ok_or_else(|| Error::invalid("no states to write"))?;
    for s in states {
        s.check_consistent(spec, n)?;
    }
    let names = param_names(spec, n);
    let rows: Vec<Vec<f64>> = states
        .iter()
        .map(|s| crate::sampler::flatten_state(s, spec))
        .collect();
    write_rows(&names, &rows, path)
}

/// Read a draw file back into states. The subject count is inferred from
/// the `b_<i>_<k>` columns and the header is checked against the spec's
/// canonical layout.
pub fn read_draws(path: &Path, spec: &ModelSpec) -> Result<Vec<ParameterState>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let header = match lines.next() {
        Some((_, h)) => h,
        None => return Err(Error::parse(1, "empty draw file")),
    };
    let cols: Vec<&str> = header.split(',').collect();
    let p = spec.random_effects_dim();
    let b_cols = cols.iter().filter(|c| c.starts_with("b_")).count();
    if b_cols % p != 0 {
        return Err(Error::parse(
            1,
            format!("{b_cols} random-effect columns not divisible by p={p}"),
        ));
    }
    let n = b_cols / p;
    let expected = param_names(spec, n);
    if cols != expected.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(Error::parse(
            1,
            "draw file header does not match the spec's parameter layout".to_string(),
        ));
    }
    let mut draws = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != expected.len() {
            return Err(Error::parse(
                lineno,
                format!("expected {} fields, got {}", expected.len(), fields.len()),
            ));
        }
        let values = fields
            .iter()
            .map(|f| parse_float(f, lineno, "draw value"))
            .collect::<Result<Vec<f64>>>()?;
        draws.push(unflatten_state(&values, spec, n)?);
    }
    Ok(draws)
}

/// Write the S x N pointwise log-likelihood matrix.
pub fn write_pointwise(matrix: &LoglikMatrix, path: &Path) -> Result<()> {
    let n = matrix.n_subjects();
    let header: Vec<String> = (1..=n).map(|i| format!("loglik_{i}")).collect();
    let mut out = header.join(",");
    out.push('\n');
    for s in 0..matrix.n_draws() {
        let row = matrix.row(s);
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            out.push_str(&fmt_float(*v));
            first = false;
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_pointwise(path: &Path) -> Result<LoglikMatrix> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let header = match lines.next() {
        Some((_, h)) => h,
        None => return Err(Error::parse(1, "empty pointwise file")),
    };
    let n = header.split(',').count();
    let mut values = Vec::new();
    let mut rows = 0usize;
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != n {
            return Err(Error::parse(
                lineno,
                format!("expected {n} fields, got {}", fields.len()),
            ));
        }
        for f in fields {
            values.push(parse_float(f, lineno, "log-likelihood")?);
        }
        rows += 1;
    }
    LoglikMatrix::new(rows, n, values)
}

pub fn write_blocks(blocks: &[BlockStats], path: &Path) -> Result<()> {
    let mut out = String::from("block,proposals,accepted,final_scale\n");
    for b in blocks {
        out.push_str(&format!(
            "{},{},{},{}\n",
            b.name,
            b.proposals,
            b.accepted,
            fmt_float(b.final_scale)
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_blocks(path: &Path) -> Result<Vec<BlockStats>> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate().skip(1) {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::parse(lineno, "expected 4 fields"));
        }
        let parse_u64 = |s: &str| -> Result<u64> {
            s.trim()
                .parse::<u64>()
                .map_err(|_| Error::parse(lineno, format!("malformed count {s:?}")))
        };
        out.push(BlockStats {
            name: fields[0].to_string(),
            proposals: parse_u64(fields[1])?,
            accepted: parse_u64(fields[2])?,
            final_scale: parse_float(fields[3], lineno, "scale")?,
        });
    }
    Ok(out)
}

/// Persist a whole chain into a directory.
pub fn write_chain(chain: &PosteriorChain, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_model_spec(&chain.spec, &dir.join("spec.cfg"))?;
    write_draws(chain, &dir.join("draws.csv"))?;
    write_pointwise(&chain.pointwise, &dir.join("pointwise.csv"))?;
    write_blocks(&chain.blocks, &dir.join("blocks.csv"))?;
    fs::write(
        dir.join("counters.csv"),
        format!(
            "counter,value\nclamp_events,{}\nnumeric_rejections,{}\n",
            chain.clamp_events, chain.numeric_rejections
        ),
    )?;
    Ok(())
}

/// Load a chain directory written by [`write_chain`].
pub fn read_chain(dir: &Path) -> Result<PosteriorChain> {
    let spec = parse_model_spec(&dir.join("spec.cfg"))?;
    let draws = read_draws(&dir.join("draws.csv"), &spec)?;
    let pointwise = read_pointwise(&dir.join("pointwise.csv"))?;
    if pointwise.n_draws() != draws.len() {
        return Err(Error::invalid(format!(
            "draws ({}) and pointwise rows ({}) disagree",
            draws.len(),
            pointwise.n_draws()
        )));
    }
    let blocks = read_blocks(&dir.join("blocks.csv"))?;
    let counters = fs::read_to_string(dir.join("counters.csv"))?;
    let mut clamp_events = 0u64;
    let mut numeric_rejections = 0u64;
    for (idx, line) in counters.lines().enumerate().skip(1) {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (name, value) = line
            .split_once(',')
            .ok_or_else(|| Error::parse(lineno, "expected counter,value"))?;
        let v = value
            .trim()
            .parse::<u64>()
            .map_err(|_| Error::parse(lineno, format!("malformed counter value {value:?}")))?;
        match name {
            "clamp_events" => clamp_events = v,
            "numeric_rejections" => numeric_rejections = v,
            other => return Err(Error::parse(lineno, format!("unknown counter {other:?}"))),
        }
    }
    Ok(PosteriorChain {
        spec,
        draws,
        pointwise,
        blocks,
        clamp_events,
        numeric_rejections,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Baseline, Dataset, Linking, ModelSpec, Subject, VarianceModel};
    use crate::sampler::{run_chain, SamplerConfig};

    fn small_fit(spec: &ModelSpec, seed: u64) -> PosteriorChain {
        let subjects = (0..4)
            .map(|i| {
                Subject::new(
                    format!("s{i}"),
                    vec![0.0, 1.0],
                    vec![14.0 + i as f64, 15.5 + i as f64],
                    1.5 + 0.5 * i as f64,
                    i % 2 == 0,
                    (i % 2) as u8,
                    0,
                    1,
                )
                .unwrap()
            })
            .collect();
        let data = Dataset::new(subjects).unwrap();
        run_chain(&data, spec, &SamplerConfig::quick(120, 40, 4, seed)).unwrap()
    }

    #[test]
    fn chain_round_trips_exactly() {
        let dir = std::env::temp_dir().join("jointdisp_chain_rt");
        for (k, spec) in [
            ModelSpec::new(
                VarianceModel::Exchangeable,
                Linking::SharedSigma,
                Baseline::Pspline,
            ),
            ModelSpec::new(
                VarianceModel::RandomInterceptDispersion,
                Linking::SharedB2,
                Baseline::Piecewise,
            ),
            ModelSpec::new(
                VarianceModel::Common,
                Linking::ConstantTraditional,
                Baseline::Weibull,
            ),
        ]
        .iter()
        .enumerate()
        {
            let chain = small_fit(spec, 17 + k as u64);
            let d = dir.join(format!("m{k}"));
            write_chain(&chain, &d).unwrap();
            let back = read_chain(&d).unwrap();
            assert_eq!(chain, back, "{}", spec.label());
        }
    }

    #[test]
    fn identical_chains_write_identical_bytes() {
        let spec = ModelSpec::new(
            VarianceModel::Common,
            Linking::SlopesOnly,
            Baseline::Weibull,
        );
        let a = small_fit(&spec, 3);
        let b = small_fit(&spec, 3);
        let dir = std::env::temp_dir().join("jointdisp_chain_bytes");
        write_chain(&a, &dir.join("a")).unwrap();
        write_chain(&b, &dir.join("b")).unwrap();
        for f in ["spec.cfg", "draws.csv", "pointwise.csv", "blocks.csv", "counters.csv"] {
            let x = fs::read(dir.join("a").join(f)).unwrap();
            let y = fs::read(dir.join("b").join(f)).unwrap();
            assert_eq!(x, y, "{f} differs");
        }
    }

    #[test]
    fn header_mismatch_is_rejected() {
        let spec = ModelSpec::new(
            VarianceModel::Common,
            Linking::SlopesOnly,
            Baseline::Weibull,
        );
        let chain = small_fit(&spec, 5);
        let dir = std::env::temp_dir().join("jointdisp_chain_hdr");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("draws.csv");
        write_draws(&chain, &path).unwrap();
        // reading with an incompatible spec must fail
        let other = ModelSpec::new(
            VarianceModel::Exchangeable,
            Linking::SharedSigma,
            Baseline::Pspline,
        );
        assert!(read_draws(&path, &other).is_err());
    }
}
