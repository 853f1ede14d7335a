//! Subcommand implementations. Each returns the files it produced so the
//! caller decides where they go.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::{json, Value};

use hjminplus::minplus::{minplus_solve_with, truncated_tv_enumerate_with};
use hjminplus::viscous::{mixture_s_epsilon_with, s_epsilon_with, MixturePrior};
use hjminplus::{decompose::decompose_with, BaseTerm, GridGraph, MinPlusSolution, Shape, Signal};

use crate::config::{ModelConfig, ModelKind};
use crate::csv::write_table;
use crate::error::CliError;
use crate::pgm::Graymap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Pgm,
    Csv,
    Json,
}

/// Named output file contents.
pub type Outputs = Vec<(String, Vec<u8>)>;

pub struct Image {
    pub signal: Signal,
    pub maxval: u16,
}

pub fn read_image(path: &Path, range: (f64, f64)) -> Result<Image, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let g = Graymap::decode(&bytes).map_err(|e| CliError::io(path, e))?;
    let signal = Signal::image(g.to_intensities(range), g.height, g.width)?;
    Ok(Image {
        signal,
        maxval: g.maxval,
    })
}

fn encode_image(s: &Signal, maxval: u16, range: (f64, f64)) -> Vec<u8> {
    let (rows, cols) = match s.shape() {
        Shape::Grid { rows, cols } => (rows, cols),
        Shape::Line(n) => (1, n),
    };
    Graymap::from_intensities(s.values(), cols, rows, maxval, range).encode()
}

fn report_bytes(v: &Value) -> Vec<u8> {
    let mut b = serde_json::to_vec_pretty(v).expect("report serializes");
    b.push(b'\n');
    b
}

/// Min-plus solution of the configured model at `x`.
fn solve_model(cfg: &ModelConfig, x: &Signal) -> Result<MinPlusSolution, CliError> {
    let t = ModelConfig::require(cfg.t, "t")?;
    let opts = cfg.minplus_options();
    if cfg.model == Some(ModelKind::TruncatedTv) {
        let graph = GridGraph::for_shape(x.shape(), cfg.weight.unwrap_or(1.0))?;
        let base = cfg.base.unwrap_or(BaseTerm::Abs);
        return Ok(truncated_tv_enumerate_with(&graph, base, x, t, &opts)?);
    }
    let pieces = cfg.build_pieces(x.shape())?;
    Ok(minplus_solve_with(&pieces, x, t, &opts)?)
}

fn solution_report(cfg: &ModelConfig, command: &str, s: &MinPlusSolution) -> Value {
    let iterations: Vec<usize> = s.active_set.iter().map(|&i| s.per_piece[i].iterations).collect();
    json!({
        "command": command,
        "config_hash": cfg.hash(),
        "value": s.value,
        "active_set": s.active_set,
        "iterations": iterations,
        "minimizers": s.minimizers.iter().map(|m| m.values().to_vec()).collect::<Vec<_>>(),
    })
}

fn minimizer_table(s: &MinPlusSolution) -> Vec<u8> {
    let header: Vec<String> = (0..s.minimizers.len()).map(|k| format!("minimizer_{k}")).collect();
    let refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let n = s.minimizers[0].len();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| s.minimizers.iter().map(|m| m[i]).collect()).collect();
    write_table(&refs, &rows).into_bytes()
}

pub fn denoise(cfg: &ModelConfig, input: &Path, format: Format) -> Result<Outputs, CliError> {
    let range = cfg.range();
    let image = read_image(input, range)?;
    let s = solve_model(cfg, &image.signal)?;
    let mut out = vec![("report.json".to_owned(), report_bytes(&solution_report(cfg, "denoise", &s)))];
    match format {
        Format::Pgm => out.push(("denoised.pgm".into(), encode_image(&s.minimizers[0], image.maxval, range))),
        Format::Csv => out.push(("denoised.csv".into(), minimizer_table(&s))),
        Format::Json => {}
    }
    Ok(out)
}

pub fn minplus(cfg: &ModelConfig, input: Option<&Path>, format: Format) -> Result<Outputs, CliError> {
    let x = match (input, &cfg.x) {
        (Some(path), _) => read_image(path, cfg.range())?.signal,
        (None, Some(x)) => Signal::from_vec(x.clone())?,
        (None, None) => return Err(CliError::Usage("minplus needs --input or `x` in the config".into())),
    };
    let s = solve_model(cfg, &x)?;
    let mut out = vec![("report.json".to_owned(), report_bytes(&solution_report(cfg, "minplus", &s)))];
    if format == Format::Csv {
        out.push(("minimizers.csv".into(), minimizer_table(&s)));
    }
    Ok(out)
}

pub fn decompose(cfg: &ModelConfig, input: &Path, format: Format) -> Result<Outputs, CliError> {
    let range = cfg.range();
    let image = read_image(input, range)?;
    let t1 = ModelConfig::require(cfg.t1, "t1")?;
    let t2 = ModelConfig::require(cfg.t2, "t2")?;
    let graph = GridGraph::for_shape(image.signal.shape(), cfg.weight.unwrap_or(1.0))?;
    let d = decompose_with(&image.signal, &graph, t1, t2, &cfg.decompose_options())?;
    let sub = |s: &hjminplus::SubproblemSolution| {
        json!({
            "value": s.value,
            "lower_bound": s.lower_bound,
            "iterations": s.iterations,
            "inner_iterations": s.inner_iterations,
            "residual": s.residual,
        })
    };
    let report = json!({
        "command": "decompose",
        "config_hash": cfg.hash(),
        "s1": d.s1,
        "s2": d.s2,
        "winner": d.winner,
        "first": sub(&d.first),
        "second": sub(&d.second),
    });
    let mut out = vec![("report.json".to_owned(), report_bytes(&report))];
    match format {
        Format::Pgm => {
            let [g, t, n] = d.display_channels();
            for (name, s) in [("geometry.pgm", g), ("texture.pgm", t), ("noise.pgm", n)] {
                out.push((name.into(), encode_image(&s, image.maxval, (0.0, 1.0))));
            }
        }
        Format::Csv => {
            let rows: Vec<Vec<f64>> = (0..image.signal.len())
                .map(|k| vec![d.geometry[k], d.texture[k], d.noise[k]])
                .collect();
            out.push(("components.csv".into(), write_table(&["geometry", "texture", "noise"], &rows).into_bytes()));
        }
        Format::Json => {}
    }
    Ok(out)
}

pub const POSTERIOR_COLUMNS: [&str; 7] = ["x", "s_eps", "grad", "u_pm", "mmse", "u_map", "bound"];

/// One row per grid point. With several pieces the prior is their
/// log-sum-exp mixture; `u_map` is the first minimizer of the min-plus
/// problem and `bound` is `n t eps`.
pub fn posterior_rows(cfg: &ModelConfig) -> Result<Vec<Vec<f64>>, CliError> {
    let t = ModelConfig::require(cfg.t, "t")?;
    let eps = ModelConfig::require(cfg.epsilon, "eps")?;
    let xs: Vec<f64> = match (&cfg.grid, &cfg.x) {
        (Some(g), _) if g.points == 1 => vec![g.start],
        (Some(g), _) => (0..g.points)
            .map(|k| g.start + (g.stop - g.start) * k as f64 / (g.points - 1) as f64)
            .collect(),
        (None, Some(x)) => x.clone(),
        (None, None) => return Err(CliError::Usage("posterior needs [grid] or `x` in the config".into())),
    };
    let pieces = cfg.build_pieces(Shape::Line(1))?;
    let prior = MixturePrior::new(pieces.clone(), eps)?;
    let opts = cfg.solver.viscous;
    let mp = cfg.minplus_options();
    xs.par_iter()
        .map(|&x| {
            let xs = Signal::from_vec(vec![x])?;
            let stats = if pieces.len() == 1 {
                s_epsilon_with(&pieces[0], &xs, t, eps, &opts)?
            } else {
                mixture_s_epsilon_with(&prior, &xs, t, &opts)?.stats
            };
            let map = minplus_solve_with(&pieces, &xs, t, &mp)?;
            Ok(vec![x, stats.s_eps, stats.grad[0], stats.u_pm[0], stats.mmse, map.minimizers[0][0], t * eps])
        })
        .collect::<Result<Vec<_>, hjminplus::Error>>()
        .map_err(CliError::from)
}

pub fn posterior(cfg: &ModelConfig, format: Format) -> Result<Outputs, CliError> {
    let rows = posterior_rows(cfg)?;
    Ok(match format {
        Format::Json => {
            let objs: Vec<Value> = rows
                .iter()
                .map(|r| Value::Object(POSTERIOR_COLUMNS.iter().zip(r).map(|(k, v)| (k.to_string(), json!(v))).collect()))
                .collect();
            let report = json!({ "command": "posterior", "config_hash": cfg.hash(), "rows": objs });
            vec![("posterior.json".into(), report_bytes(&report))]
        }
        _ => vec![("posterior.csv".into(), write_table(&POSTERIOR_COLUMNS, &rows).into_bytes())],
    })
}

/// Writes `outputs` into `dir`, or prints them to stdout when no directory is given.
pub fn emit(outputs: &Outputs, dir: Option<&PathBuf>) -> Result<(), CliError> {
    match dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            for (name, bytes) in outputs {
                let path = dir.join(name);
                std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
            }
        }
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            for (name, bytes) in outputs {
                if name.ends_with(".pgm") {
                    continue;
                }
                stdout.write_all(bytes).map_err(|e| CliError::Io(format!("stdout: {e}")))?;
            }
        }
    }
    Ok(())
}
