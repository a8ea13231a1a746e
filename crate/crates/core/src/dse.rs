//! Roofline-based design-space exploration over the output tiling factor.
//!
//! Every candidate T_OH yields one [`DesignPoint`]: its arithmetic
//! intensity (smaller tiles re-fetch more overlapping input, lowering
//! AI), the throughput the roofline law permits, and whether the design
//! fits the platform's DSP and BRAM budgets. Selection picks the feasible
//! point with the highest attainable throughput, preferring smaller tiles
//! (less on-chip buffering) on ties. The tiling factor is one global
//! parameter shared by all layers of a network.

use crate::error::{Error, Result};
use crate::model::{layer_traffic_bytes, simulate_layer, PlatformModel, SparsityProfile};
use crate::svg::Plot;
use crate::tensor::LayerParams;
use std::fmt;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

/// Which constraint caps a design point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Limiting {
    /// The compute roof (all CUs busy every cycle) is the binding limit.
    Compute,
    /// Sustained DDR bandwidth caps throughput below the compute roof.
    Bandwidth,
    /// The design does not fit (DSP or BRAM budget exceeded).
    Resource,
}

impl fmt::Display for Limiting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Limiting::Compute => "compute",
            Limiting::Bandwidth => "bandwidth",
            Limiting::Resource => "resource",
        })
    }
}

/// One evaluated tiling candidate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DesignPoint {
    pub t_oh: usize,
    /// Arithmetic intensity in ops per byte of external traffic.
    pub ai: f64,
    /// `min(compute roof, bandwidth · AI)`, in Gops/s.
    pub attainable_gops: f64,
    pub feasible: bool,
    pub limiting: Limiting,
}

/// Roofline law at one intensity: attainable ops/s and the binding side.
/// Exactly `min(compute_roof, ddr_bw · ai)`, scaled to Gops.
pub fn roofline_attainable(platform: &PlatformModel, ai: f64) -> (f64, Limiting) {
    let roof = platform.compute_roof_ops();
    let bw_bound = platform.ddr_bw_bytes_per_s * ai;
    if bw_bound < roof {
        (bw_bound * 1e-9, Limiting::Bandwidth)
    } else {
        (roof * 1e-9, Limiting::Compute)
    }
}

/// Network arithmetic intensity at tiling factor `t_oh`:
/// `Σ 2·MACs / Σ traffic bytes` over all layers, with dense MAC counts
/// and the accelerator's per-block fetch pattern (input-span re-fetch
/// across blocks included).
pub fn arithmetic_intensity(
    network: &[LayerParams],
    t_oh: usize,
    platform: &PlatformModel,
) -> Result<f64> {
    if network.is_empty() {
        return Err(Error::Param("arithmetic intensity of an empty network".into()));
    }
    let mut ops = 0.0;
    let mut bytes = 0.0;
    for layer in network {
        ops += 2.0 * SparsityProfile::dense(layer).executed_macs(layer, false);
        bytes += layer_traffic_bytes(layer, t_oh, platform.word_bytes)? as f64;
    }
    Ok(ops / bytes)
}

/// Default candidate range: every integer tiling factor up to the
/// largest layer output height.
pub fn default_range(network: &[LayerParams]) -> Result<RangeInclusive<usize>> {
    let max = network
        .iter()
        .map(|l| l.out_height)
        .max()
        .ok_or_else(|| Error::Param("empty network".into()))?;
    Ok(1..=max)
}

/// Evaluate every candidate in `range`. Infeasible designs are kept and
/// marked `resource`-limited so plots show the whole space.
pub fn enumerate_designs(
    network: &[LayerParams],
    platform: &PlatformModel,
    range: RangeInclusive<usize>,
) -> Result<Vec<DesignPoint>> {
    if range.is_empty() {
        return Err(Error::Param("empty tiling-factor range".into()));
    }
    platform.validate()?;
    let mut points = Vec::new();
    for t_oh in range {
        let ai = arithmetic_intensity(network, t_oh, platform)?;
        let mut feasible = true;
        for layer in network {
            match simulate_layer(layer, t_oh, platform, layer.in_channels * layer.kernel * layer.kernel, false) {
                Ok(_) => {}
                Err(Error::InfeasibleDesign(_)) => {
                    feasible = false;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        let (attainable_gops, limiting) = roofline_attainable(platform, ai);
        points.push(DesignPoint {
            t_oh,
            ai,
            attainable_gops,
            feasible,
            limiting: if feasible { limiting } else { Limiting::Resource },
        });
    }
    Ok(points)
}

/// The feasible point with the highest attainable throughput; ties go to
/// the smaller tiling factor. Order-independent.
pub fn pick_best(points: &[DesignPoint]) -> Option<DesignPoint> {
    let mut best: Option<DesignPoint> = None;
    for p in points.iter().filter(|p| p.feasible) {
        best = match best {
            None => Some(*p),
            Some(b)
                if p.attainable_gops > b.attainable_gops
                    || (p.attainable_gops == b.attainable_gops && p.t_oh < b.t_oh) =>
            {
                Some(*p)
            }
            Some(b) => Some(b),
        };
    }
    best
}

/// Explore `range` and select the winning tiling factor.
pub fn select_tiling_in(
    network: &[LayerParams],
    platform: &PlatformModel,
    range: RangeInclusive<usize>,
) -> Result<DesignPoint> {
    let points = enumerate_designs(network, platform, range)?;
    pick_best(&points).ok_or_else(|| {
        Error::InfeasiblePlatform("no tiling factor fits the DSP/BRAM budget".into())
    })
}

/// [`select_tiling_in`] over the default range `1..=max(O_H)`.
pub fn select_tiling(network: &[LayerParams], platform: &PlatformModel) -> Result<DesignPoint> {
    select_tiling_in(network, platform, default_range(network)?)
}

/// Write `roofline.csv` and `roofline.svg` under `dir`; returns both
/// paths. Output is a pure function of the inputs, so re-emitting is
/// byte-identical.
pub fn emit_roofline(
    points: &[DesignPoint],
    platform: &PlatformModel,
    dir: &Path,
) -> Result<(PathBuf, PathBuf)> {
    if points.is_empty() {
        return Err(Error::Param("no design points to emit".into()));
    }
    std::fs::create_dir_all(dir)?;
    let mut csv = String::from("t_oh,ai_ops_per_byte,attainable_gops,feasible,limiting\n");
    for p in points {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            p.t_oh, p.ai, p.attainable_gops, p.feasible, p.limiting
        ));
    }
    let csv_path = dir.join("roofline.csv");
    std::fs::write(&csv_path, csv)?;

    let roof_gops = platform.compute_roof_ops() * 1e-9;
    let knee_ai = platform.compute_roof_ops() / platform.ddr_bw_bytes_per_s;
    let ai_lo = points.iter().map(|p| p.ai).fold(f64::INFINITY, f64::min);
    let ai_hi = points.iter().map(|p| p.ai).fold(0.0, f64::max);
    let lo = 0.8 * ai_lo.min(knee_ai);
    let hi = 1.25 * ai_hi.max(knee_ai);
    let feasible: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.feasible)
        .map(|p| (p.ai, p.attainable_gops))
        .collect();
    let infeasible: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| !p.feasible)
        .map(|p| (p.ai, p.attainable_gops))
        .collect();
    let mut plot = Plot::new(
        "Roofline over output tiling factor",
        "arithmetic intensity (ops/byte)",
        "attainable throughput (Gops/s)",
    )
    .log_log()
    .ref_line(
        "bandwidth slope",
        &[
            (lo, platform.ddr_bw_bytes_per_s * lo * 1e-9),
            (knee_ai, roof_gops),
        ],
    )
    .ref_line("compute roof", &[(knee_ai, roof_gops), (hi, roof_gops)]);
    if !feasible.is_empty() {
        plot = plot.scatter_series("feasible", &feasible);
    }
    if !infeasible.is_empty() {
        plot = plot.scatter_series("infeasible", &infeasible);
    }
    let svg_path = dir.join("roofline.svg");
    std::fs::write(&svg_path, plot.render()?)?;
    Ok((csv_path, svg_path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mnist_like() -> Vec<LayerParams> {
        vec![
            LayerParams::new(1, 1, 16, 8, 7, 1, 0).unwrap(),
            LayerParams::new(7, 7, 8, 4, 4, 2, 1).unwrap(),
            LayerParams::new(14, 14, 4, 1, 4, 2, 1).unwrap(),
        ]
    }

    #[test]
    fn roofline_law_holds_at_every_point() {
        let net = mnist_like();
        let platform = PlatformModel::default();
        let points = enumerate_designs(&net, &platform, 1..=28).unwrap();
        assert_eq!(points.len(), 28);
        for p in &points {
            let roof = platform.compute_roof_ops();
            let want = roof.min(platform.ddr_bw_bytes_per_s * p.ai) * 1e-9;
            assert_eq!(p.attainable_gops, want, "t_oh={}", p.t_oh);
            if p.feasible {
                let expect = if platform.ddr_bw_bytes_per_s * p.ai < roof {
                    Limiting::Bandwidth
                } else {
                    Limiting::Compute
                };
                assert_eq!(p.limiting, expect);
            } else {
                assert_eq!(p.limiting, Limiting::Resource);
            }
        }
    }

    #[test]
    fn ai_is_maximal_at_full_height_and_halving_never_raises_it() {
        let net = mnist_like();
        let platform = PlatformModel::default();
        let full = arithmetic_intensity(&net, 28, &platform).unwrap();
        for t in 1..28 {
            let ai = arithmetic_intensity(&net, t, &platform).unwrap();
            assert!(ai <= full, "t={t}: {ai} > {full}");
            if t >= 2 {
                let half = arithmetic_intensity(&net, t / 2, &platform).unwrap();
                assert!(half <= ai + 1e-15, "halving {t} raised AI");
            }
        }
    }

    #[test]
    fn selection_matches_brute_force_argmax_and_is_order_independent() {
        let net = mnist_like();
        let platform = PlatformModel::default();
        let points = enumerate_designs(&net, &platform, 1..=28).unwrap();
        let brute = points
            .iter()
            .filter(|p| p.feasible)
            .fold(None::<DesignPoint>, |acc, p| match acc {
                None => Some(*p),
                Some(b) => {
                    if p.attainable_gops > b.attainable_gops
                        || (p.attainable_gops == b.attainable_gops && p.t_oh < b.t_oh)
                    {
                        Some(*p)
                    } else {
                        Some(b)
                    }
                }
            })
            .unwrap();
        let selected = select_tiling(&net, &platform).unwrap();
        assert_eq!(selected, brute);
        let mut reversed = points.clone();
        reversed.reverse();
        assert_eq!(pick_best(&reversed), Some(brute));
        // interleave high/low
        let mut shuffled = Vec::new();
        let mut i = 0;
        let mut j = points.len();
        while i < j {
            shuffled.push(points[i]);
            i += 1;
            if i < j {
                j -= 1;
                shuffled.push(points[j]);
            }
        }
        assert_eq!(pick_best(&shuffled), Some(brute));
    }

    #[test]
    fn single_candidate_range() {
        let net = mnist_like();
        let points = enumerate_designs(&net, &PlatformModel::default(), 5..=5).unwrap();
        assert_eq!(points.len(), 1);
        assert_eq!(points[0].t_oh, 5);
    }

    #[test]
    fn no_feasible_point_is_a_platform_error() {
        let net = mnist_like();
        let platform = PlatformModel {
            bram_bytes: 64, // nothing fits
            ..PlatformModel::default()
        };
        let err = select_tiling(&net, &platform).unwrap_err();
        assert!(matches!(err, Error::InfeasiblePlatform(_)));
        // but enumeration still reports the whole space, marked resource
        let points = enumerate_designs(&net, &platform, 1..=28).unwrap();
        assert!(points.iter().all(|p| !p.feasible && p.limiting == Limiting::Resource));
    }

    #[test]
    fn tight_bandwidth_marks_points_bandwidth_limited() {
        let net = mnist_like();
        let platform = PlatformModel {
            ddr_bw_bytes_per_s: 1e6, // far below the knee for every candidate
            ..PlatformModel::default()
        };
        let points = enumerate_designs(&net, &platform, 1..=28).unwrap();
        for p in points.iter().filter(|p| p.feasible) {
            assert_eq!(p.limiting, Limiting::Bandwidth);
            assert!(p.attainable_gops < platform.compute_roof_ops() * 1e-9);
        }
    }

    #[test]
    fn emit_is_deterministic_with_one_row_and_marker_per_point() {
        let net = mnist_like();
        let platform = PlatformModel::default();
        let points = enumerate_designs(&net, &platform, 1..=12).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (csv1, svg1) = emit_roofline(&points, &platform, dir.path()).unwrap();
        let c1 = std::fs::read(&csv1).unwrap();
        let s1 = std::fs::read(&svg1).unwrap();
        emit_roofline(&points, &platform, dir.path()).unwrap();
        assert_eq!(std::fs::read(&csv1).unwrap(), c1);
        assert_eq!(std::fs::read(&svg1).unwrap(), s1);
        let text = String::from_utf8(c1).unwrap();
        assert_eq!(text.lines().count(), points.len() + 1);
        assert_eq!(
            text.lines().next().unwrap(),
            "t_oh,ai_ops_per_byte,attainable_gops,feasible,limiting"
        );
        let svg = String::from_utf8(s1).unwrap();
        assert_eq!(svg.matches("<circle").count(), points.len());
    }
}
