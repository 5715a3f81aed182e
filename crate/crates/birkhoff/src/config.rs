//! Config documents for the batch front door: a TOML table describing one
//! map, named potentials, the Markov model, the spectrum query, and an
//! optional Moran plan. Number fields accept expressions such as `log(2)`
//! or `1/3`, evaluated at parse time so closed-form slopes stay exact.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::expr;
use crate::interval::Interval;
use crate::interval_maps::{
    build_map, BranchKind, BranchSpec, PiecewiseMonotoneMap, RegularPotential,
};
use crate::markov::{
    build_markov_system, equilibrium_measure, truncation_family, MarkovSystem, ValueConvention,
};
use crate::moran::{MoranSpec, StageSpec};
use crate::spectrum::{LevelData, SpectrumQuery};

/// A number given as a literal or as an expression string.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Float(f64),
    Int(i64),
    Expr(String),
}

impl Num {
    pub fn value(&self) -> Result<f64> {
        match self {
            Num::Float(v) => Ok(*v),
            Num::Int(v) => Ok(*v as f64),
            Num::Expr(s) => {
                expr::parse_number(s).map_err(|e| Error::Config(format!("bad number {s:?}: {e}")))
            }
        }
    }
}

fn values(nums: &[Num]) -> Result<Vec<f64>> {
    nums.iter().map(Num::value).collect()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchConfig {
    pub domain: [Num; 2],
    /// "affine" (slope, intercept), "power" (scale, exponent, offset), or
    /// "expr" (forward, derivative)
    pub kind: String,
    pub slope: Option<Num>,
    pub intercept: Option<Num>,
    pub scale: Option<Num>,
    pub exponent: Option<Num>,
    pub offset: Option<Num>,
    pub forward: Option<String>,
    pub derivative: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    /// "doubling", "golden_mean", "cookie_cutter" (with slopes), or
    /// "manneville_pomeau" (with gamma); mutually exclusive with branches
    pub preset: Option<String>,
    #[serde(default)]
    pub slopes: Vec<Num>,
    pub gamma: Option<Num>,
    #[serde(default)]
    pub branches: Vec<BranchConfig>,
    #[serde(default)]
    pub repeller: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub constant: Option<Num>,
    /// rows [lo, hi, expr]
    #[serde(default)]
    pub pieces: Vec<(Num, Num, String)>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkovConfig {
    /// defaults to the map's branch endpoints
    #[serde(default)]
    pub partition: Vec<Num>,
    /// parabolic maps only: depth of the expanding subsystem family
    pub truncation_levels: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum GridConfig {
    Linspace { start: Num, stop: Num, count: usize },
    List(Vec<Num>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryConfig {
    pub a_grid: GridConfig,
    pub tol_delta: Option<Num>,
    pub tol_q: Option<Num>,
    /// defaults to f evaluated at the map's parabolic points
    #[serde(default)]
    pub parabolic_values: Vec<Num>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoranStageConfig {
    /// name of the potential whose equilibrium state drives the stage;
    /// default is the measure of maximal entropy
    pub gibbs: Option<String>,
    pub eps: Num,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoranConfig {
    pub stages: Vec<MoranStageConfig>,
    /// defaults to the first stage's own mean of f
    pub target_a: Option<Num>,
    pub target_depth: usize,
    pub reps_per_level: Option<usize>,
    pub samples: Option<usize>,
    pub max_depth: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub map: MapConfig,
    /// must include "f"; "phi" defaults to log |T'|
    pub potentials: BTreeMap<String, PotentialConfig>,
    pub markov: Option<MarkovConfig>,
    pub query: Option<QueryConfig>,
    pub moran: Option<MoranConfig>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: OutputConfig,
}

pub fn parse_str(text: &str) -> Result<RunConfig> {
    toml::from_str(text).map_err(|e| Error::Config(format!("config parse: {e}")))
}

pub fn load(path: &Path) -> Result<RunConfig> {
    parse_str(&std::fs::read_to_string(path)?)
}

/// Everything the commands consume, resolved against the library types.
#[derive(Debug, Clone)]
pub struct Assembled {
    pub map: Arc<PiecewiseMonotoneMap>,
    pub sys: MarkovSystem,
    /// truncation family for parabolic maps, otherwise the full system alone
    pub levels: Vec<LevelData>,
    pub f: RegularPotential,
    pub phi: RegularPotential,
    pub a_grid: Vec<f64>,
    pub parabolic_values: Vec<f64>,
    pub tol_delta: f64,
    pub tol_q: f64,
    pub moran: Option<AssembledMoran>,
    pub seed: u64,
    pub out_dir: Option<String>,
}

#[derive(Debug, Clone)]
pub struct AssembledMoran {
    pub spec: MoranSpec,
    pub target_a: f64,
    pub samples: usize,
    pub max_depth: usize,
}

impl Assembled {
    /// The spectrum query; errors when the config declared no grid.
    pub fn spectrum_query(&self) -> Result<SpectrumQuery> {
        if self.a_grid.is_empty() {
            return Err(Error::Config("this command needs [query] with a nonempty a_grid".into()));
        }
        Ok(SpectrumQuery {
            levels: self.levels.clone(),
            parabolic_values: self.parabolic_values.clone(),
            a_grid: self.a_grid.clone(),
            tol_delta: self.tol_delta,
            tol_q: self.tol_q,
        })
    }
}

fn branch_cut_for_gamma(gamma: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid + mid.powf(1.0 + gamma) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn preset_branches(cfg: &MapConfig, name: &str) -> Result<(Vec<BranchSpec>, bool)> {
    match name {
        "doubling" => Ok((
            vec![
                BranchSpec {
                    domain: Interval::new(0.0, 0.5),
                    kind: BranchKind::Affine { slope: 2.0, intercept: 0.0 },
                },
                BranchSpec {
                    domain: Interval::new(0.5, 1.0),
                    kind: BranchKind::Affine { slope: 2.0, intercept: -1.0 },
                },
            ],
            false,
        )),
        "golden_mean" => Ok((
            vec![
                BranchSpec {
                    domain: Interval::new(0.0, 0.5),
                    kind: BranchKind::Affine { slope: 2.0, intercept: 0.0 },
                },
                BranchSpec {
                    domain: Interval::new(0.5, 0.75),
                    kind: BranchKind::Affine { slope: 2.0, intercept: -1.0 },
                },
            ],
            true,
        )),
        "cookie_cutter" => {
            let s = values(&cfg.slopes)?;
            if s.len() < 2 || s.iter().any(|&v| v <= 1.0) {
                return Err(Error::Config("cookie_cutter needs at least two slopes > 1".into()));
            }
            let total: f64 = s.iter().map(|v| 1.0 / v).sum();
            if total > 1.0 {
                return Err(Error::Config(
                    "cookie_cutter slopes leave no room for disjoint branch domains".into(),
                ));
            }
            // full branches left to right, the leftover spread into equal gaps
            let gap = (1.0 - total) / (s.len() - 1) as f64;
            let mut start = 0.0;
            let mut specs = Vec::with_capacity(s.len());
            for &slope in &s {
                specs.push(BranchSpec {
                    domain: Interval::new(start, start + 1.0 / slope),
                    kind: BranchKind::Affine { slope, intercept: -slope * start },
                });
                start += 1.0 / slope + gap;
            }
            Ok((specs, true))
        }
        "manneville_pomeau" => {
            let gamma = cfg
                .gamma
                .as_ref()
                .ok_or_else(|| Error::Config("manneville_pomeau needs gamma".into()))?
                .value()?;
            if !(gamma > 0.0) {
                return Err(Error::Config("gamma must be positive".into()));
            }
            let xs = branch_cut_for_gamma(gamma);
            Ok((
                vec![
                    BranchSpec {
                        domain: Interval::new(0.0, xs),
                        kind: BranchKind::Power { scale: 1.0, exponent: gamma, offset: 0.0 },
                    },
                    BranchSpec {
                        domain: Interval::new(xs, 1.0),
                        kind: BranchKind::Power { scale: 1.0, exponent: gamma, offset: -1.0 },
                    },
                ],
                false,
            ))
        }
        other => Err(Error::Config(format!("unknown map preset {other:?}"))),
    }
}

fn explicit_branch(b: &BranchConfig) -> Result<BranchSpec> {
    let lo = b.domain[0].value()?;
    let hi = b.domain[1].value()?;
    let need = |o: &Option<Num>, what: &str| -> Result<f64> {
        o.as_ref()
            .ok_or_else(|| Error::Config(format!("{} branch needs {what}", b.kind)))?
            .value()
    };
    let kind = match b.kind.as_str() {
        "affine" => BranchKind::Affine {
            slope: need(&b.slope, "slope")?,
            intercept: need(&b.intercept, "intercept")?,
        },
        "power" => BranchKind::Power {
            scale: need(&b.scale, "scale")?,
            exponent: need(&b.exponent, "exponent")?,
            offset: need(&b.offset, "offset")?,
        },
        "expr" => {
            fn text<'a>(o: &'a Option<String>, what: &str) -> Result<&'a str> {
                o.as_deref().ok_or_else(|| Error::Config(format!("expr branch needs {what}")))
            }
            let forward = expr::parse(text(&b.forward, "forward")?)
                .map_err(|e| Error::Config(format!("forward: {e}")))?;
            let derivative = expr::parse(text(&b.derivative, "derivative")?)
                .map_err(|e| Error::Config(format!("derivative: {e}")))?;
            BranchKind::General { forward, derivative }
        }
        other => return Err(Error::Config(format!("unknown branch kind {other:?}"))),
    };
    Ok(BranchSpec { domain: Interval::new(lo, hi), kind })
}

fn build_potential(name: &str, cfg: &PotentialConfig, domain: &Interval) -> Result<RegularPotential> {
    match (&cfg.constant, cfg.pieces.is_empty()) {
        (Some(c), true) => RegularPotential::new(vec![(*domain, expr::Expr::Const(c.value()?))]),
        (None, false) => {
            let pieces = cfg
                .pieces
                .iter()
                .map(|(lo, hi, e)| {
                    let iv = Interval::new(lo.value()?, hi.value()?);
                    let ex = expr::parse(e)
                        .map_err(|err| Error::Config(format!("potential {name:?}: {err}")))?;
                    Ok((iv, ex))
                })
                .collect::<Result<Vec<_>>>()?;
            RegularPotential::new(pieces)
        }
        _ => Err(Error::Config(format!(
            "potential {name:?} needs exactly one of constant or pieces"
        ))),
    }
}

pub fn assemble(cfg: &RunConfig) -> Result<Assembled> {
    let (specs, repeller) = match (&cfg.map.preset, cfg.map.branches.is_empty()) {
        (Some(name), true) => preset_branches(&cfg.map, name)?,
        (None, false) => {
            let specs = cfg.map.branches.iter().map(explicit_branch).collect::<Result<Vec<_>>>()?;
            (specs, cfg.map.repeller)
        }
        _ => return Err(Error::Config("map needs exactly one of preset or branches".into())),
    };
    let map = Arc::new(build_map(specs, repeller)?);

    let partition = match cfg.markov.as_ref().filter(|m| !m.partition.is_empty()) {
        Some(m) => values(&m.partition)?,
        None => {
            let mut p = map.breakpoints.clone();
            p.sort_by(|a, b| a.partial_cmp(b).unwrap());
            p
        }
    };
    let sys = build_markov_system(map.clone(), &partition)?;

    let hull = Interval::new(
        map.branches.first().map(|b| b.domain.lo).unwrap_or(0.0),
        map.branches.last().map(|b| b.domain.hi).unwrap_or(1.0),
    );
    let mut potentials = BTreeMap::new();
    for (name, pc) in &cfg.potentials {
        potentials.insert(name.clone(), build_potential(name, pc, &hull)?);
    }
    let f = potentials
        .get("f")
        .cloned()
        .ok_or_else(|| Error::Config("potentials must include \"f\"".into()))?;
    let phi = match potentials.get("phi") {
        Some(p) => p.clone(),
        None => RegularPotential::log_derivative(&map)?,
    };

    let family = match cfg.markov.as_ref().and_then(|m| m.truncation_levels) {
        Some(levels) => truncation_family(&sys, levels)?,
        None => vec![sys.clone()],
    };
    let levels = family
        .into_iter()
        .map(|s| {
            let fv = s.cell_values(&f, ValueConvention::Midpoint);
            let pv = s.cell_values(&phi, ValueConvention::Midpoint);
            LevelData::new(s, fv, pv)
        })
        .collect::<Vec<_>>();

    let (a_grid, tol_delta, tol_q, declared) = match &cfg.query {
        None => (Vec::new(), 1e-4, 1e-3, Vec::new()),
        Some(q) => {
            let grid = match &q.a_grid {
                GridConfig::List(nums) => values(nums)?,
                GridConfig::Linspace { start, stop, count } => {
                    let (a, b) = (start.value()?, stop.value()?);
                    if *count == 0 {
                        return Err(Error::Config("a_grid count must be positive".into()));
                    }
                    linspace(a, b, *count)
                }
            };
            if grid.is_empty() {
                return Err(Error::Config("a_grid must be nonempty".into()));
            }
            let td = q.tol_delta.as_ref().map(Num::value).transpose()?.unwrap_or(1e-4);
            let tq = q.tol_q.as_ref().map(Num::value).transpose()?.unwrap_or(1e-3);
            (grid, td, tq, values(&q.parabolic_values)?)
        }
    };
    let parabolic_values = if declared.is_empty() {
        map.parabolic_points.iter().map(|&p| f.eval(p)).collect()
    } else {
        declared
    };

    let seed = cfg.seed.unwrap_or(0);
    let moran = match &cfg.moran {
        None => None,
        Some(mc) => Some(assemble_moran(mc, &sys, &potentials, &f, &phi, seed)?),
    };

    Ok(Assembled {
        map,
        sys,
        levels,
        f,
        phi,
        a_grid,
        parabolic_values,
        tol_delta,
        tol_q,
        moran,
        seed,
        out_dir: cfg.output.dir.clone(),
    })
}

fn assemble_moran(
    mc: &MoranConfig,
    sys: &MarkovSystem,
    potentials: &BTreeMap<String, RegularPotential>,
    f: &RegularPotential,
    phi: &RegularPotential,
    seed: u64,
) -> Result<AssembledMoran> {
    if mc.stages.is_empty() {
        return Err(Error::Config("moran needs at least one stage".into()));
    }
    let stages = mc
        .stages
        .iter()
        .map(|sc| {
            let gibbs = match &sc.gibbs {
                None => RegularPotential::constant(0.0),
                Some(name) => potentials
                    .get(name)
                    .cloned()
                    .ok_or_else(|| Error::Config(format!("moran stage names unknown potential {name:?}")))?,
            };
            Ok(StageSpec {
                sys: sys.clone(),
                gibbs,
                f: f.clone(),
                phi: phi.clone(),
                eps: sc.eps.value()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let target_a = match &mc.target_a {
        Some(n) => n.value()?,
        None => {
            let st = &stages[0];
            let vals = st.sys.cell_values(&st.gibbs, ValueConvention::Midpoint);
            let mu = equilibrium_measure(&st.sys.succ, &vals)?;
            mu.integrate(&st.sys.cell_values(f, ValueConvention::Midpoint))
        }
    };
    let target_depth = mc.target_depth;
    Ok(AssembledMoran {
        spec: MoranSpec {
            stages,
            target_depth,
            reps_per_level: mc.reps_per_level.unwrap_or(1024),
            seed,
        },
        target_a,
        samples: mc.samples.unwrap_or(100),
        max_depth: mc.max_depth.unwrap_or((10 * target_depth).max(100)),
    })
}

pub fn linspace(a: f64, b: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![a];
    }
    (0..count).map(|i| a + (b - a) * i as f64 / (count - 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const BE: &str = r#"
        seed = 7

        [map]
        preset = "doubling"

        [potentials.f]
        pieces = [[0.0, "1/2", "0"], ["1/2", 1.0, "1"]]

        [potentials.w]
        pieces = [[0.0, "1/2", "log(1/4)"], ["1/2", 1.0, "log(3/4)"]]

        [query]
        a_grid = { start = 0.0, stop = 1.0, count = 33 }

        [moran]
        stages = [{ gibbs = "w", eps = 0.05 }]
        target_depth = 400

        [output]
        dir = "out"
    "#;

    #[test]
    fn doubling_document_assembles() {
        let cfg = parse_str(BE).unwrap();
        let asm = assemble(&cfg).unwrap();
        assert_eq!(asm.sys.len(), 2);
        assert_eq!(asm.levels.len(), 1);
        assert_eq!(asm.a_grid.len(), 33);
        assert_eq!(asm.levels[0].f, vec![0.0, 1.0]);
        let ln2 = std::f64::consts::LN_2;
        assert!(asm.levels[0].phi.iter().all(|&p| (p - ln2).abs() < 1e-12));
        assert!(asm.parabolic_values.is_empty());

        let m = asm.moran.as_ref().unwrap();
        assert_eq!(m.spec.stages.len(), 1);
        assert_eq!(m.spec.seed, 7);
        assert_eq!(m.max_depth, 4000);
        assert!((m.target_a - 0.75).abs() < 1e-9, "gibbs mean drives the target");
        assert_eq!(asm.out_dir.as_deref(), Some("out"));
    }

    #[test]
    fn cookie_cutter_preset_uses_expression_slopes() {
        let text = r#"
            [map]
            preset = "cookie_cutter"
            slopes = [2, "2*2"]

            [potentials.f]
            constant = "log(2)"

            [query]
            a_grid = { start = "log(2)", stop = "log(2)", count = 1 }
        "#;
        let asm = assemble(&parse_str(text).unwrap()).unwrap();
        assert_eq!(asm.sys.len(), 2);
        assert!((asm.sys.cells[1].lo - 0.75).abs() < 1e-12);
        assert_eq!(asm.a_grid, vec![std::f64::consts::LN_2]);
        let q = asm.spectrum_query().unwrap();
        assert_eq!(q.levels[0].phi.len(), 2);
    }

    #[test]
    fn parabolic_preset_builds_truncation_family() {
        let text = r#"
            [map]
            preset = "manneville_pomeau"
            gamma = 0.5

            [potentials.f]
            pieces = [[0.0, 0.5698, "0.3"], [0.5698, 1.0, "0.8"]]

            [markov]
            truncation_levels = 3

            [query]
            a_grid = { start = 0.45, stop = 0.8, count = 8 }
        "#;
        let asm = assemble(&parse_str(text).unwrap()).unwrap();
        assert_eq!(asm.levels.len(), 3);
        assert_eq!(asm.parabolic_values, vec![0.3], "defaults to f at the neutral point");
        assert!(asm.levels.iter().all(|l| l.phi_min() > 0.0));
    }

    #[test]
    fn missing_f_is_rejected() {
        let text = r#"
            [map]
            preset = "doubling"

            [potentials.g]
            constant = 1.0
        "#;
        let err = assemble(&parse_str(text).unwrap()).unwrap_err();
        assert!(matches!(&err, Error::Config(m) if m.contains("f")), "{err}");
    }

    #[test]
    fn overlapping_branches_surface_the_map_error() {
        let text = r#"
            [map]
            branches = [
                { domain = [0.0, 0.6], kind = "affine", slope = 2.0, intercept = 0.0 },
                { domain = [0.5, 1.0], kind = "affine", slope = 2.0, intercept = -1.0 },
            ]

            [potentials.f]
            constant = 0.0
        "#;
        let err = assemble(&parse_str(text).unwrap()).unwrap_err();
        assert!(matches!(err, Error::OverlappingDomains { .. }), "{err}");
    }

    #[test]
    fn bundled_documents_assemble() {
        let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
        let mut seen = 0;
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.extension().and_then(|e| e.to_str()) != Some("toml") {
                continue;
            }
            let asm = assemble(&load(&path).unwrap())
                .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert!(!asm.a_grid.is_empty(), "{}", path.display());
            seen += 1;
        }
        assert_eq!(seen, 4);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = r#"
            [map]
            preset = "doubling"
            extra = 1

            [potentials.f]
            constant = 0.0
        "#;
        assert!(parse_str(text).is_err());
    }
}
