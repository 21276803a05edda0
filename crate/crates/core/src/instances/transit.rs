use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{int, ratio, Game, Rational};

/// Valuations and line lengths are rounded to multiples of `1 / SCALE`
/// before they become exact rationals.
const SCALE: i64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub name: String,
    /// Node indices of the stops, in order.
    pub stops: Vec<usize>,
    pub length_km: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rider {
    pub origin: usize,
    pub destination: usize,
}

/// Planar street nodes (meters), bus lines over them and riders paying a
/// flat unit fare.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitScenario {
    pub nodes: Vec<(f64, f64)>,
    pub lines: Vec<Line>,
    pub riders: Vec<Rider>,
}

impl TransitScenario {
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        for line in &self.lines {
            if !(line.length_km > 0.0) {
                return Err(Error::InvalidScenario(format!("line {} has nonpositive length", line.name)));
            }
            if line.stops.is_empty() || line.stops.iter().any(|&s| s >= n) {
                return Err(Error::InvalidScenario(format!("line {} has invalid stops", line.name)));
            }
        }
        for (k, r) in self.riders.iter().enumerate() {
            if r.origin >= n || r.destination >= n {
                return Err(Error::InvalidScenario(format!("rider {k} references a missing node")));
            }
            if r.origin == r.destination {
                return Err(Error::InvalidScenario(format!("rider {k} has identical origin and destination")));
            }
        }
        Ok(())
    }

    /// Distance in meters from node `node` to the nearest stop of `line`.
    pub fn stop_distance(&self, node: usize, line: usize) -> f64 {
        let (x, y) = self.nodes[node];
        self.lines[line]
            .stops
            .iter()
            .map(|&s| {
                let (sx, sy) = self.nodes[s];
                (sx - x).hypot(sy - y)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Walk-access score: full within 400 m, none beyond 1600 m, linear between.
pub fn accessibility(distance_m: f64) -> Result<f64> {
    if distance_m < 0.0 || distance_m.is_nan() {
        return Err(Error::NegativeDistance(distance_m));
    }
    Ok(if distance_m < 400.0 {
        1.0
    } else if distance_m <= 1600.0 {
        1.0 - (distance_m - 400.0) / 1200.0
    } else {
        0.0
    })
}

/// The worse of the two trip ends' access to `line`.
pub fn rider_valuation(scenario: &TransitScenario, rider: usize, line: usize) -> Result<f64> {
    let r = scenario.riders[rider];
    let o = accessibility(scenario.stop_distance(r.origin, line))?;
    let d = accessibility(scenario.stop_distance(r.destination, line))?;
    Ok(o.min(d))
}

fn rounded(x: f64) -> Rational {
    ratio((x * SCALE as f64).round() as i64, SCALE)
}

/// One resource (the fare budget) spent on line kilometers. Riders who
/// value no line are dropped; labels record the original rider indices.
pub fn gen_transit_game(scenario: &TransitScenario) -> Result<Game> {
    scenario.validate()?;
    if scenario.lines.is_empty() {
        return Err(Error::EmptyScenario);
    }
    let lines = scenario.lines.len();
    let mut valuations = Vec::new();
    let mut labels = Vec::new();
    for k in 0..scenario.riders.len() {
        let v: Vec<f64> = (0..lines).map(|j| rider_valuation(scenario, k, j)).collect::<Result<_>>()?;
        let v: Vec<Rational> = v.into_iter().map(rounded).collect();
        if v.iter().any(|x| *x > int(0)) {
            valuations.push(v);
            labels.push(format!("rider{k}"));
        }
    }
    if valuations.is_empty() {
        return Err(Error::EmptyScenario);
    }
    let a = vec![scenario.lines.iter().map(|l| rounded(l.length_km)).collect()];
    let b = vec![vec![int(1)]; valuations.len()];
    Game::new(a, b, valuations)?.with_labels(labels)
}

/// Two lines sharing a stop at the origin: the long east-west line A serves
/// rider 1's trip, while the short line B and line A both serve riders 2 and
/// 3, who travel 300 m north of the shared stop.
pub fn motivating_scenario() -> TransitScenario {
    TransitScenario {
        nodes: vec![(-5000.0, 0.0), (0.0, 0.0), (5000.0, 0.0), (0.0, 2000.0), (0.0, 300.0)],
        lines: vec![
            Line { name: "A".into(), stops: vec![0, 1, 2], length_km: 10.0 },
            Line { name: "B".into(), stops: vec![1, 3], length_km: 2.0 },
        ],
        riders: vec![
            Rider { origin: 0, destination: 2 },
            Rider { origin: 1, destination: 4 },
            Rider { origin: 1, destination: 4 },
        ],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridCitySpec {
    pub seed: u64,
    /// Street nodes along x.
    pub width: usize,
    /// Street nodes along y.
    pub height: usize,
    pub lines: usize,
    pub riders: usize,
}

/// Block length of the synthetic street grid, meters.
pub const BLOCK_M: f64 = 400.0;

/// Square street grid with straight bus lines along random rows and columns
/// (stops every other node) and riders drawn towards the center.
pub fn gen_grid_city(spec: GridCitySpec) -> Result<TransitScenario> {
    let GridCitySpec { seed, width, height, lines, riders } = spec;
    if width < 2 || height < 2 || lines == 0 || riders == 0 {
        return Err(Error::InvalidScenario("grid city needs width, height >= 2 and at least one line and rider".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let node = |c: usize, r: usize| r * width + c;
    let nodes: Vec<(f64, f64)> =
        (0..height).flat_map(|r| (0..width).map(move |c| (c as f64 * BLOCK_M, r as f64 * BLOCK_M))).collect();

    let mut out_lines = Vec::with_capacity(lines);
    for k in 0..lines {
        let horizontal = k % 2 == 0;
        let (span, across) = if horizontal { (width, height) } else { (height, width) };
        let fixed = rng.gen_range(0..across);
        let len = rng.gen_range((span / 2).max(2)..=span);
        let start = rng.gen_range(0..=span - len);
        let mut stops: Vec<usize> = (start..start + len)
            .step_by(2)
            .map(|p| if horizontal { node(p, fixed) } else { node(fixed, p) })
            .collect();
        let end = start + len - 1;
        let last = if horizontal { node(end, fixed) } else { node(fixed, end) };
        if stops.last() != Some(&last) {
            stops.push(last);
        }
        out_lines.push(Line {
            name: format!("L{k}"),
            stops,
            length_km: (len - 1) as f64 * BLOCK_M / 1000.0,
        });
    }

    let centered = |rng: &mut ChaCha8Rng, size: usize| -> usize {
        if rng.gen_bool(0.6) {
            // Average of two uniforms: a tent around the middle.
            let t = (rng.gen::<f64>() + rng.gen::<f64>()) / 2.0;
            ((t * size as f64) as usize).min(size - 1)
        } else {
            rng.gen_range(0..size)
        }
    };
    let mut out_riders = Vec::with_capacity(riders);
    while out_riders.len() < riders {
        let o = node(centered(&mut rng, width), centered(&mut rng, height));
        let d = node(centered(&mut rng, width), centered(&mut rng, height));
        if o != d {
            out_riders.push(Rider { origin: o, destination: d });
        }
    }
    let scenario = TransitScenario { nodes, lines: out_lines, riders: out_riders };
    scenario.validate()?;
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::BalanceCheck;

    #[test]
    fn accessibility_branches() {
        assert_eq!(accessibility(0.0).unwrap(), 1.0);
        assert_eq!(accessibility(1000.0).unwrap(), 0.5);
        assert_eq!(accessibility(1601.0).unwrap(), 0.0);
        assert_eq!(accessibility(1600.0).unwrap(), 0.0);
        assert!(matches!(accessibility(-1.0), Err(Error::NegativeDistance(_))));
    }

    #[test]
    fn accessibility_is_continuous_and_monotone() {
        for edge in [400.0, 1600.0] {
            let left = accessibility(edge - 1e-9).unwrap();
            let right = accessibility(edge + 1e-9).unwrap();
            assert!((left - right).abs() < 1e-9);
        }
        let mut prev = 1.0;
        for k in 0..400 {
            let a = accessibility(k as f64 * 5.0).unwrap();
            assert!(a <= prev && (0.0..=1.0).contains(&a));
            prev = a;
        }
    }

    #[test]
    fn valuation_is_the_worse_end() {
        let mut s = motivating_scenario();
        assert_eq!(rider_valuation(&s, 0, 0).unwrap(), 1.0);
        assert_eq!(rider_valuation(&s, 0, 1).unwrap(), 0.0);
        s.nodes.push((-1000.0, 0.0));
        s.riders.push(Rider { origin: 5, destination: 2 });
        // Origin 1000 m from line B's stop at the origin, destination 5 km.
        assert_eq!(rider_valuation(&s, 3, 1).unwrap(), 0.0);
        s.nodes.push((0.0, 1000.0));
        s.riders.push(Rider { origin: 6, destination: 3 });
        assert_eq!(rider_valuation(&s, 4, 1).unwrap(), 0.5);
    }

    #[test]
    fn motivating_game() {
        let g = gen_transit_game(&motivating_scenario()).unwrap();
        assert_eq!(g.num_players(), 3);
        assert_eq!(g.v_f64(0), &[1.0, 0.0]);
        assert_eq!(g.v_f64(1), &[1.0, 1.0]);
        assert_eq!(g.a_f64()[0], vec![10.0, 2.0]);
        assert!(g.check_balanced_sufficient(BalanceCheck::Nonneg).unwrap().is_guaranteed());
    }

    #[test]
    fn far_riders_are_dropped() {
        let mut s = motivating_scenario();
        s.nodes.push((0.0, -4000.0));
        s.nodes.push((3000.0, -4000.0));
        s.riders.insert(0, Rider { origin: 5, destination: 6 });
        let g = gen_transit_game(&s).unwrap();
        assert_eq!(g.num_players(), 3);
        assert_eq!(g.labels().unwrap()[0], "rider1");
    }

    #[test]
    fn grid_city_is_reproducible() {
        let spec = GridCitySpec { seed: 11, width: 12, height: 12, lines: 6, riders: 40 };
        let a = gen_grid_city(spec).unwrap();
        assert_eq!(a, gen_grid_city(spec).unwrap());
        assert_eq!(a.lines.len(), 6);
        assert_eq!(a.riders.len(), 40);
        let g = gen_transit_game(&a).unwrap();
        assert!(g.num_players() <= 40);
        assert!(g.check_balanced_sufficient(BalanceCheck::Nonneg).unwrap().is_guaranteed());
        let other = gen_grid_city(GridCitySpec { seed: 12, ..spec }).unwrap();
        assert_ne!(a, other);
    }
}
