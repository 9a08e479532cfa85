use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::mindet::{exhaustive, DiffSpace, Difference, EXHAUSTIVE_LIMIT, SINGULAR_TOL};
use crate::error::Result;
use crate::realification::det4_entries;
use crate::rng::{substream, Stream};
use crate::stbc::{Constellation, LinearDispersionCode};

/// Default evaluation budget.
pub const DEFAULT_BUDGET: u64 = 1_000_000;

const CHUNK: u64 = 4096;
const WAVE: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchPhase {
    /// Every nonzero difference, in lexicographic order.
    Exhaustive,
    /// Differences active in one layer of each embedded sub-code.
    CrossLayer,
    /// Uniform differences over all coordinates.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiversityReport {
    pub code: String,
    pub m: usize,
    pub budget: u64,
    pub evaluated: u64,
    pub phases: Vec<SearchPhase>,
    /// First rank-deficient nonzero difference found, if any.
    pub witness: Option<Difference>,
    pub witness_phase: Option<SearchPhase>,
}

/// Draws scanned in one chunk, and the singular difference that ended it.
type ChunkScan = (u64, Option<(Vec<i32>, f64)>);

/// Draws steps over the union of `groups`, each group having a nonzero entry.
fn draw<R: Rng + ?Sized>(space: &DiffSpace, rng: &mut R, groups: &[Vec<usize>]) -> Vec<i32> {
    let mut steps = vec![0i32; space.dims()];
    let off = (space.digits() / 2) as i32;
    loop {
        for g in groups {
            for &c in g {
                steps[c] = rng.random_range(0..space.digits() as i32) - off;
            }
        }
        if groups.iter().all(|g| g.iter().any(|&c| steps[c] != 0)) {
            return steps;
        }
    }
}

/// Scans `draws` random differences in seeded chunks; returns the number
/// evaluated up to and including the first singular one.
fn scan(
    space: &DiffSpace,
    seed: u64,
    phase: u64,
    draws: u64,
    groups_for: &(dyn Fn(u64) -> Vec<Vec<usize>> + Sync),
) -> (u64, Option<Difference>) {
    let chunks = draws.div_ceil(CHUNK);
    let mut evaluated = 0;
    let mut start = 0;
    while start < chunks {
        let end = (start + WAVE).min(chunks);
        let results: Vec<ChunkScan> = (start..end)
            .into_par_iter()
            .map(|c| {
                let mut rng = substream(seed, Stream::Search, &[phase, c]);
                let groups = groups_for(c);
                let count = CHUNK.min(draws - c * CHUNK);
                for i in 0..count {
                    let steps = draw(space, &mut rng, &groups);
                    let v = det4_entries(&space.matrix(&steps)).norm();
                    if v < SINGULAR_TOL {
                        return (i + 1, Some((steps, v)));
                    }
                }
                (count, None)
            })
            .collect();
        for (n, hit) in results {
            evaluated += n;
            if let Some((steps, v)) = hit {
                return (evaluated, Some(space.difference(steps, v)));
            }
        }
        start = end;
    }
    (evaluated, None)
}

/// Looks for a nonzero codeword difference with `|det ΔS| < 1e-9`.
///
/// When the whole difference space fits in `budget` it is enumerated and the
/// lexicographically first singular difference is reported. Otherwise half
/// the budget goes to differences that are active in one layer of each
/// embedded sub-code (layers 1–2 against the rest), then the remainder to
/// uniform random differences.
pub fn diversity_search(
    code: &LinearDispersionCode,
    constellation: &Constellation,
    budget: u64,
    seed: u64,
) -> Result<DiversityReport> {
    let space = DiffSpace::new(code, constellation)?;
    let mut report = DiversityReport {
        code: code.family().label().to_string(),
        m: constellation.m(),
        budget,
        evaluated: 0,
        phases: Vec::new(),
        witness: None,
        witness_phase: None,
    };
    let size = space.size() - 1.0;
    if size <= budget as f64 && size <= EXHAUSTIVE_LIMIT {
        let acc = exhaustive(&space)?;
        report.phases.push(SearchPhase::Exhaustive);
        report.evaluated = acc.evaluated;
        if let Some((v, idx)) = acc.first_singular {
            let steps = space.steps_of(idx, space.dims());
            report.witness = Some(space.difference(steps, v));
            report.witness_phase = Some(SearchPhase::Exhaustive);
        }
        return Ok(report);
    }

    let layer_coords = |l: usize| (8 * l..8 * l + 8).collect::<Vec<usize>>();
    let layers = code.layers().unwrap_or(1);
    let mut remaining = budget;
    if layers >= 2 {
        let split = 2.min(layers - 1);
        let pairs: Vec<(usize, usize)> = (0..split)
            .flat_map(|a| (split..layers).map(move |b| (a, b)))
            .collect();
        let draws = budget / 2;
        let groups = move |c: u64| {
            let (a, b) = pairs[(c as usize) % pairs.len()];
            vec![layer_coords(a), layer_coords(b)]
        };
        let (n, hit) = scan(&space, seed, 1, draws, &groups);
        report.phases.push(SearchPhase::CrossLayer);
        report.evaluated += n;
        remaining -= n;
        if hit.is_some() {
            report.witness = hit;
            report.witness_phase = Some(SearchPhase::CrossLayer);
            return Ok(report);
        }
    }
    let all = vec![(0..space.dims()).collect::<Vec<usize>>()];
    let groups = move |_: u64| all.clone();
    let (n, hit) = scan(&space, seed, 2, remaining, &groups);
    report.phases.push(SearchPhase::Random);
    report.evaluated += n;
    if hit.is_some() {
        report.witness = hit;
        report.witness_phase = Some(SearchPhase::Random);
    }
    Ok(report)
}
