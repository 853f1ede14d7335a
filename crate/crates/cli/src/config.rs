//! TOML model configuration and its translation into solver inputs.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use hjminplus::decompose::DecomposeOptions;
use hjminplus::minplus::MinPlusOptions;
use hjminplus::viscous::ViscousOptions;
use hjminplus::{BaseTerm, ConvexPiece, GridGraph, ProxOptions, Shape, Signal, TieTolerance};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Denoise,
    TruncatedTv,
    Gmm,
    Decompose,
    Posterior,
}

/// Either one value broadcast to every pixel or one value per pixel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Center {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Center {
    fn expand(&self, n: usize, field: &str) -> Result<Vec<f64>, CliError> {
        match self {
            Center::Scalar(v) => Ok(vec![*v; n]),
            Center::Vector(v) if v.len() == n => Ok(v.clone()),
            Center::Vector(v) => Err(CliError::Usage(format!(
                "{field}: has {} entries but the signal has {n}",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PieceConfig {
    Quadratic { center: Center, scale: f64 },
    Tv {
        #[serde(default = "unit")]
        weight: f64,
        #[serde(default = "abs")]
        base: BaseTerm,
    },
    L1 {
        #[serde(default = "unit")]
        weight: f64,
    },
    DualTvBall {
        #[serde(default = "unit")]
        radius: f64,
    },
}

fn unit() -> f64 {
    1.0
}

fn abs() -> BaseTerm {
    BaseTerm::Abs
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GmmConfig {
    pub means: Vec<Center>,
    pub sigmas: Vec<f64>,
}

/// Evaluation points of the posterior table: `points` values evenly spaced
/// on `[start, stop]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub prox: ProxOptions,
    pub tie: TieTolerance,
    pub enumeration_cap: Option<usize>,
    pub decompose: DecomposeOptions,
    pub viscous: ViscousOptions,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub model: Option<ModelKind>,
    pub t: Option<f64>,
    pub t1: Option<f64>,
    pub t2: Option<f64>,
    pub epsilon: Option<f64>,
    pub pieces: Vec<PieceConfig>,
    pub gmm: Option<GmmConfig>,
    /// Edge weight of the pixel graph used by truncated-tv.
    pub weight: Option<f64>,
    pub base: Option<BaseTerm>,
    /// Inline signal for image-free runs.
    pub x: Option<Vec<f64>>,
    pub grid: Option<GridConfig>,
    /// Intensity range that image samples map onto; `[0, 1]` by default.
    pub range: Option<[f64; 2]>,
    pub solver: SolverConfig,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub t: Option<f64>,
    pub t1: Option<f64>,
    pub t2: Option<f64>,
    pub epsilon: Option<f64>,
}

impl ModelConfig {
    /// Parses TOML; errors carry the line, column and field path.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: ModelConfig = toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: Overrides) {
        self.t = o.t.or(self.t);
        self.t1 = o.t1.or(self.t1);
        self.t2 = o.t2.or(self.t2);
        self.epsilon = o.epsilon.or(self.epsilon);
    }

    fn validate(&self) -> Result<(), CliError> {
        if let Some(g) = &self.gmm {
            if g.means.len() != g.sigmas.len() || g.means.is_empty() {
                return Err(CliError::Usage(format!(
                    "gmm: {} means and {} sigmas; need the same positive number",
                    g.means.len(),
                    g.sigmas.len()
                )));
            }
        }
        if let Some(g) = &self.grid {
            if g.points == 0 || !(g.start.is_finite() && g.stop.is_finite()) {
                return Err(CliError::Usage("grid: needs finite bounds and points >= 1".into()));
            }
        }
        if let Some([lo, hi]) = self.range {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(CliError::Usage(format!("range: [{lo}, {hi}] is empty")));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form of the effective configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("configuration serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn require(value: Option<f64>, name: &str) -> Result<f64, CliError> {
        value.ok_or_else(|| CliError::Usage(format!("missing `{name}` (set it in the config or pass --{name})")))
    }

    pub fn range(&self) -> (f64, f64) {
        self.range.map_or((0.0, 1.0), |[lo, hi]| (lo, hi))
    }

    /// Pieces from `pieces` or `gmm`, sized for signals of `shape`.
    pub fn build_pieces(&self, shape: Shape) -> Result<Vec<ConvexPiece>, CliError> {
        let n = shape.len();
        let graph_for = |w: f64| GridGraph::for_shape(shape, w).map_err(CliError::Solver);
        let mut out = Vec::new();
        for (i, p) in self.pieces.iter().enumerate() {
            let field = format!("pieces[{i}]");
            let piece = match p {
                PieceConfig::Quadratic { center, scale } => {
                    let c = Signal::new(center.expand(n, &format!("{field}.center"))?, shape)
                        .map_err(CliError::Solver)?;
                    ConvexPiece::quadratic(c, *scale)
                }
                PieceConfig::Tv { weight, base } => ConvexPiece::weighted_tv(graph_for(*weight)?, &[], *base),
                PieceConfig::L1 { weight } => ConvexPiece::l1(*weight),
                PieceConfig::DualTvBall { radius } => ConvexPiece::dual_tv_ball(graph_for(1.0)?, *radius),
            }
            .map_err(|e| CliError::Usage(format!("{field}: {e}")))?;
            out.push(piece);
        }
        if let Some(g) = &self.gmm {
            for (i, (m, s)) in g.means.iter().zip(&g.sigmas).enumerate() {
                let c = Signal::new(m.expand(n, &format!("gmm.means[{i}]"))?, shape).map_err(CliError::Solver)?;
                out.push(ConvexPiece::quadratic(c, *s).map_err(|e| CliError::Usage(format!("gmm[{i}]: {e}")))?);
            }
        }
        if out.is_empty() {
            return Err(CliError::Usage("the model has no pieces (add [[pieces]] or [gmm])".into()));
        }
        Ok(out)
    }

    pub fn minplus_options(&self) -> MinPlusOptions {
        let mut o = MinPlusOptions {
            tie: self.solver.tie,
            prox: self.solver.prox,
            ..MinPlusOptions::default()
        };
        if let Some(cap) = self.solver.enumeration_cap {
            o.enumeration_cap = cap;
        }
        o.multi_time.prox = self.solver.prox;
        o
    }

    pub fn decompose_options(&self) -> DecomposeOptions {
        DecomposeOptions {
            prox: self.solver.prox,
            tie: self.solver.tie,
            ..self.solver.decompose
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pieces_and_overrides() {
        let mut c = ModelConfig::parse(
            r#"
            model = "denoise"
            t = 0.5
            [[pieces]]
            kind = "quadratic"
            center = 0.2
            scale = 1.0
            [[pieces]]
            kind = "tv"
            weight = 2.0
            [solver.prox]
            tolerance = 1e-9
            "#,
        )
        .unwrap();
        assert_eq!(c.model, Some(ModelKind::Denoise));
        assert_eq!(c.solver.prox.tolerance, 1e-9);
        assert_eq!(c.solver.prox.max_iterations, 20_000);
        let before = c.hash();
        c.apply(Overrides {
            t: Some(0.25),
            ..Overrides::default()
        });
        assert_eq!(c.t, Some(0.25));
        assert_ne!(before, c.hash());
        let pieces = c.build_pieces(Shape::Grid { rows: 2, cols: 2 }).unwrap();
        assert_eq!(pieces.len(), 2);
    }

    #[test]
    fn errors_name_the_field() {
        let e = ModelConfig::parse("model = \"denoise\"\n[[pieces]]\nkind = \"l1\"\nwieght = 1.0\n").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("wieght") && msg.contains("line"), "{msg}");
        let c = ModelConfig::parse("[[pieces]]\nkind = \"quadratic\"\ncenter = [1.0, 2.0]\nscale = 1.0\n").unwrap();
        let e = c.build_pieces(Shape::Line(3)).unwrap_err();
        assert!(e.to_string().contains("pieces[0].center"));
    }

    #[test]
    fn hash_is_stable() {
        let a = ModelConfig::parse("t = 1.0").unwrap();
        let b = ModelConfig::parse("t = 1.0\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
