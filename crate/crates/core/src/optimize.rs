//! NSGA-II over the five-gene hyperparameter genome and Chebyshev selection
//! of a single deployment configuration from the resulting front.

use std::cmp::Ordering;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::HyperParams;
use crate::objectives::ObjectiveVector;
use crate::seed;

pub const N_GENES: usize = 5;
/// Gene order: threshold, log10 l2, log10 learning rate, epochs, dropout.
pub const LOWER: [f64; N_GENES] = [0.05, -6.0, -4.0, 10.0, 0.0];
pub const UPPER: [f64; N_GENES] = [0.95, -1.0, -1.0, 200.0, 0.6];
const EPOCH_GENE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    pub threshold: f64,
    pub log10_l2: f64,
    pub log10_lr: f64,
    pub epochs: u32,
    pub dropout: f64,
}

impl Genome {
    /// Clamp every gene into its box and round epochs.
    pub fn from_genes(g: [f64; N_GENES]) -> Genome {
        let c: Vec<f64> = (0..N_GENES).map(|k| g[k].clamp(LOWER[k], UPPER[k])).collect();
        Genome {
            threshold: c[0],
            log10_l2: c[1],
            log10_lr: c[2],
            epochs: c[EPOCH_GENE].round() as u32,
            dropout: c[4],
        }
    }

    pub fn genes(&self) -> [f64; N_GENES] {
        [
            self.threshold,
            self.log10_l2,
            self.log10_lr,
            f64::from(self.epochs),
            self.dropout,
        ]
    }

    pub fn in_bounds(&self) -> bool {
        self.genes()
            .iter()
            .enumerate()
            .all(|(k, v)| (LOWER[k]..=UPPER[k]).contains(v))
    }

    pub fn hyperparams(&self) -> HyperParams {
        HyperParams {
            threshold: self.threshold,
            l2: 10f64.powf(self.log10_l2),
            learning_rate: 10f64.powf(self.log10_lr),
            epochs: self.epochs as usize,
            dropout: self.dropout,
        }
    }

    /// Stable 64-bit identity over the gene bit patterns.
    pub fn hash64(&self) -> u64 {
        let words: Vec<u64> = self.genes().iter().map(|v| v.to_bits()).collect();
        seed::derive(&words)
    }

    fn random(rng: &mut seed::Rng) -> Genome {
        let mut g = [0.0; N_GENES];
        for k in 0..N_GENES {
            g[k] = rng.random_range(LOWER[k]..=UPPER[k]);
        }
        Genome::from_genes(g)
    }
}

/// `n` genomes drawn uniformly from the box.
pub fn random_genomes(n: usize, seed: u64) -> Vec<Genome> {
    let mut rng = seed::rng(seed);
    (0..n).map(|_| Genome::random(&mut rng)).collect()
}

/// `a` dominates `b`: no worse everywhere, strictly better somewhere.
pub fn dominates(a: &[f64; 3], b: &[f64; 3]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y)
}

/// Fast non-dominated sorting; returns fronts of indices, best first.
pub fn non_dominated_sort(points: &[[f64; 3]]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated_by_count = vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if dominates(&points[i], &points[j]) {
                dominates_list[i].push(j);
                dominated_by_count[j] += 1;
            } else if dominates(&points[j], &points[i]) {
                dominates_list[j].push(i);
                dominated_by_count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominates_list[i] {
                dominated_by_count[j] -= 1;
                if dominated_by_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance within one front. Boundary members of every objective
/// get `+∞`; interior members sum neighbor gaps divided by the objective
/// range, and zero-range objectives add nothing.
pub fn crowding_distance(front: &[[f64; 3]]) -> Vec<f64> {
    let n = front.len();
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let mut dist = vec![0.0; n];
    for k in 0..3 {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| front[a][k].total_cmp(&front[b][k]).then(a.cmp(&b)));
        let lo = front[order[0]][k];
        let hi = front[order[n - 1]][k];
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        let range = hi - lo;
        if range <= 0.0 {
            continue;
        }
        for w in 1..n - 1 {
            let i = order[w];
            dist[i] += (front[order[w + 1]][k] - front[order[w - 1]][k]) / range;
        }
    }
    dist
}

/// Hypervolume dominated by `points` inside the box bounded by `reference`.
/// Points not strictly better than the reference in every objective add
/// nothing.
pub fn hypervolume(points: &[[f64; 3]], reference: [f64; 3]) -> f64 {
    let mut pts: Vec<[f64; 3]> = points
        .iter()
        .copied()
        .filter(|p| (0..3).all(|k| p[k] < reference[k]))
        .collect();
    if pts.is_empty() {
        return 0.0;
    }
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]));
    let mut volume = 0.0;
    for s in 0..pts.len() {
        let x_next = pts.get(s + 1).map_or(reference[0], |p| p[0]);
        let width = x_next - pts[s][0];
        if width <= 0.0 {
            continue;
        }
        volume += width * area_2d(&pts[..=s], reference);
    }
    volume
}

/// Area of the union of boxes `[p1, r1] × [p2, r2]`.
fn area_2d(pts: &[[f64; 3]], reference: [f64; 3]) -> f64 {
    let mut yz: Vec<(f64, f64)> = pts.iter().map(|p| (p[1], p[2])).collect();
    yz.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut area = 0.0;
    let mut best_z = reference[2];
    for (i, &(y, z)) in yz.iter().enumerate() {
        best_z = best_z.min(z);
        let y_next = yz.get(i + 1).map_or(reference[1], |p| p.0);
        area += (y_next - y) * (reference[2] - best_z);
    }
    area
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub population: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    pub eta_c: f64,
    /// Per-gene mutation probability.
    pub mutation_prob: f64,
    pub eta_m: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            population: 24,
            generations: 15,
            crossover_prob: 0.9,
            eta_c: 15.0,
            mutation_prob: 1.0 / N_GENES as f64,
            eta_m: 20.0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 4 || !self.population.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "population must be even and ≥ 4, got {}",
                self.population
            )));
        }
        if self.generations == 0 {
            return Err(Error::Config("generations must be ≥ 1".into()));
        }
        let probs = [self.crossover_prob, self.mutation_prob];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Config("variation probabilities must lie in [0,1]".into()));
        }
        if !(self.eta_c > 0.0) || !(self.eta_m > 0.0) {
            return Err(Error::Config("distribution indices must be > 0".into()));
        }
        Ok(())
    }
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontMember {
    pub genome: Genome,
    pub objectives: ObjectiveVector,
    pub rank: usize,
    /// `null` in JSON stands for the infinite boundary distance.
    #[serde(with = "infinite_as_null")]
    pub crowding_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoFront {
    pub generation: usize,
    pub members: Vec<FrontMember>,
}

impl ParetoFront {
    pub fn points(&self) -> Vec<[f64; 3]> {
        self.members.iter().map(|m| m.objectives.as_array()).collect()
    }
}

/// One evaluation, in the order performed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArchiveEntry {
    pub generation: usize,
    pub index: usize,
    pub genome: Genome,
    pub objectives: ObjectiveVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolveResult {
    pub front: ParetoFront,
    pub archive: Vec<ArchiveEntry>,
    /// Rank-0 objective points of the population after each generation;
    /// entry 0 is the initial population.
    pub history: Vec<Vec<[f64; 3]>>,
}

#[derive(Debug, Clone, Copy)]
struct Member {
    genome: Genome,
    objectives: ObjectiveVector,
    rank: usize,
    crowding: f64,
}

/// Assign rank and crowding in place; returns the fronts.
fn rank_population(pop: &mut [Member]) -> Vec<Vec<usize>> {
    let points: Vec<[f64; 3]> = pop.iter().map(|m| m.objectives.as_array()).collect();
    let fronts = non_dominated_sort(&points);
    for (r, front) in fronts.iter().enumerate() {
        let pts: Vec<[f64; 3]> = front.iter().map(|&i| points[i]).collect();
        for (&i, d) in front.iter().zip(crowding_distance(&pts)) {
            pop[i].rank = r;
            pop[i].crowding = d;
        }
    }
    fronts
}

fn crowded_better(a: &Member, b: &Member) -> bool {
    a.rank < b.rank || (a.rank == b.rank && a.crowding > b.crowding)
}

fn tournament<'a>(pop: &'a [Member], rng: &mut seed::Rng) -> &'a Member {
    let a = &pop[rng.random_range(0..pop.len())];
    let b = &pop[rng.random_range(0..pop.len())];
    if crowded_better(b, a) {
        b
    } else {
        a
    }
}

/// Bounded simulated binary crossover.
fn sbx(p1: &[f64; N_GENES], p2: &[f64; N_GENES], eta: f64, rng: &mut seed::Rng) -> ([f64; N_GENES], [f64; N_GENES]) {
    let mut c1 = *p1;
    let mut c2 = *p2;
    for k in 0..N_GENES {
        let u_swap: f64 = rng.random();
        let u: f64 = rng.random();
        if u_swap > 0.5 || (p1[k] - p2[k]).abs() < 1e-14 {
            continue;
        }
        let (y1, y2) = if p1[k] < p2[k] { (p1[k], p2[k]) } else { (p2[k], p1[k]) };
        let (lo, hi) = (LOWER[k], UPPER[k]);
        let spread = |beta: f64| {
            let alpha = 2.0 - beta.powf(-(eta + 1.0));
            if u <= 1.0 / alpha {
                (u * alpha).powf(1.0 / (eta + 1.0))
            } else {
                (1.0 / (2.0 - u * alpha)).powf(1.0 / (eta + 1.0))
            }
        };
        let bq1 = spread(1.0 + 2.0 * (y1 - lo) / (y2 - y1));
        let bq2 = spread(1.0 + 2.0 * (hi - y2) / (y2 - y1));
        let a = (0.5 * ((y1 + y2) - bq1 * (y2 - y1))).clamp(lo, hi);
        let b = (0.5 * ((y1 + y2) + bq2 * (y2 - y1))).clamp(lo, hi);
        let swap: bool = rng.random();
        if swap {
            c1[k] = b;
            c2[k] = a;
        } else {
            c1[k] = a;
            c2[k] = b;
        }
    }
    (c1, c2)
}

/// Bounded polynomial mutation.
fn mutate(g: &mut [f64; N_GENES], prob: f64, eta: f64, rng: &mut seed::Rng) {
    for k in 0..N_GENES {
        let hit: f64 = rng.random();
        let u: f64 = rng.random();
        if hit >= prob {
            continue;
        }
        let (lo, hi) = (LOWER[k], UPPER[k]);
        let y = g[k];
        let d1 = (y - lo) / (hi - lo);
        let d2 = (hi - y) / (hi - lo);
        let pow = 1.0 / (eta + 1.0);
        let dq = if u < 0.5 {
            let v = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1).powf(eta + 1.0);
            v.powf(pow) - 1.0
        } else {
            let v = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2).powf(eta + 1.0);
            1.0 - v.powf(pow)
        };
        g[k] = (y + dq * (hi - lo)).clamp(lo, hi);
    }
}

fn evaluate_all<F>(genomes: &[Genome], evaluate: &F) -> Result<Vec<ObjectiveVector>>
where
    F: Fn(&Genome) -> Result<ObjectiveVector> + Sync,
{
    genomes.par_iter().map(evaluate).collect()
}

/// Run NSGA-II. `evaluate` must be a deterministic function of the genome;
/// evaluations within a generation run in parallel and are collected in
/// population order, so the result does not depend on the worker count.
pub fn evolve<F>(cfg: &SearchConfig, master_seed: u64, evaluate: F) -> Result<EvolveResult>
where
    F: Fn(&Genome) -> Result<ObjectiveVector> + Sync,
{
    cfg.validate()?;
    let n = cfg.population;
    let mut rng = seed::rng(seed::derive_labeled(master_seed, 0, "nsga2"));
    let mut archive = Vec::with_capacity(n * (cfg.generations + 1));

    let genomes: Vec<Genome> = (0..n).map(|_| Genome::random(&mut rng)).collect();
    let objectives = evaluate_all(&genomes, &evaluate)?;
    let mut pop: Vec<Member> = genomes
        .iter()
        .zip(&objectives)
        .enumerate()
        .map(|(i, (&genome, &objectives))| {
            archive.push(ArchiveEntry {
                generation: 0,
                index: i,
                genome,
                objectives,
            });
            Member {
                genome,
                objectives,
                rank: 0,
                crowding: 0.0,
            }
        })
        .collect();
    let fronts = rank_population(&mut pop);
    let mut history = vec![fronts[0].iter().map(|&i| pop[i].objectives.as_array()).collect()];

    for generation in 1..=cfg.generations {
        let mut children: Vec<Genome> = Vec::with_capacity(n);
        while children.len() < n {
            let p1 = tournament(&pop, &mut rng).genome.genes();
            let p2 = tournament(&pop, &mut rng).genome.genes();
            let cross: f64 = rng.random();
            let (mut c1, mut c2) = if cross < cfg.crossover_prob {
                sbx(&p1, &p2, cfg.eta_c, &mut rng)
            } else {
                (p1, p2)
            };
            mutate(&mut c1, cfg.mutation_prob, cfg.eta_m, &mut rng);
            mutate(&mut c2, cfg.mutation_prob, cfg.eta_m, &mut rng);
            children.push(Genome::from_genes(c1));
            children.push(Genome::from_genes(c2));
        }
        let child_obj = evaluate_all(&children, &evaluate)?;
        for (i, (&genome, &objectives)) in children.iter().zip(&child_obj).enumerate() {
            archive.push(ArchiveEntry {
                generation,
                index: i,
                genome,
                objectives,
            });
            pop.push(Member {
                genome,
                objectives,
                rank: 0,
                crowding: 0.0,
            });
        }

        let fronts = rank_population(&mut pop);
        let mut keep: Vec<usize> = Vec::with_capacity(n);
        for front in fronts {
            if keep.len() + front.len() <= n {
                keep.extend(front);
                continue;
            }
            let mut rest = front;
            rest.sort_by(|&a, &b| {
                pop[b]
                    .crowding
                    .partial_cmp(&pop[a].crowding)
                    .unwrap_or(Ordering::Equal)
                    .then(a.cmp(&b))
            });
            keep.extend(rest.into_iter().take(n - keep.len()));
            break;
        }
        keep.sort_unstable();
        pop = keep.into_iter().map(|i| pop[i]).collect();
        let fronts = rank_population(&mut pop);
        history.push(fronts[0].iter().map(|&i| pop[i].objectives.as_array()).collect());
    }

    let mut members: Vec<FrontMember> = pop
        .iter()
        .filter(|m| m.rank == 0)
        .map(|m| FrontMember {
            genome: m.genome,
            objectives: m.objectives,
            rank: m.rank,
            crowding_distance: m.crowding,
        })
        .collect();
    members.sort_by(|a, b| {
        lexicographic(&a.objectives, &b.objectives).then(a.genome.hash64().cmp(&b.genome.hash64()))
    });
    Ok(EvolveResult {
        front: ParetoFront {
            generation: cfg.generations,
            members,
        },
        archive,
        history,
    })
}

fn lexicographic(a: &ObjectiveVector, b: &ObjectiveVector) -> Ordering {
    a.as_array()
        .iter()
        .zip(b.as_array().iter())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| *o != Ordering::Equal)
        .unwrap_or(Ordering::Equal)
}

/// Where the Chebyshev ideal point comes from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdealPoint {
    /// Per-objective minimum over the front.
    #[default]
    Front,
    /// The best attainable values `(-1, 0, 0)`.
    Theoretical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevPick {
    pub ideal: [f64; 3],
    pub scales: [f64; 3],
    /// Index of the chosen member within the front.
    pub index: usize,
    pub chosen: Genome,
    pub objectives: ObjectiveVector,
    pub score: f64,
}

/// Default scales: `1 / range` per objective over the front, 0 for a
/// zero-range objective.
pub fn default_scales(front: &ParetoFront) -> [f64; 3] {
    let pts = front.points();
    let mut scales = [0.0; 3];
    for (k, s) in scales.iter_mut().enumerate() {
        let lo = pts.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min);
        let hi = pts.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max);
        let range = hi - lo;
        *s = if range > 0.0 { 1.0 / range } else { 0.0 };
    }
    scales
}

/// Member minimizing `max_k λ_k |F_k - z*_k|`. Ties go to the
/// lexicographically smaller objective vector, then the smaller genome hash.
pub fn chebyshev_select(front: &ParetoFront, scales: Option<[f64; 3]>, ideal: IdealPoint) -> Result<ChebyshevPick> {
    if front.members.is_empty() {
        return Err(Error::EmptyInput("Pareto front is empty".into()));
    }
    let pts = front.points();
    let z = match ideal {
        IdealPoint::Front => {
            let mut z = [f64::INFINITY; 3];
            for p in &pts {
                for k in 0..3 {
                    z[k] = z[k].min(p[k]);
                }
            }
            z
        }
        IdealPoint::Theoretical => [-1.0, 0.0, 0.0],
    };
    let lambda = scales.unwrap_or_else(|| default_scales(front));
    let score = |p: &[f64; 3]| (0..3).map(|k| lambda[k] * (p[k] - z[k]).abs()).fold(0.0, f64::max);
    let best = (0..front.members.len())
        .min_by(|&a, &b| {
            let (ma, mb) = (&front.members[a], &front.members[b]);
            score(&pts[a])
                .total_cmp(&score(&pts[b]))
                .then_with(|| lexicographic(&ma.objectives, &mb.objectives))
                .then_with(|| ma.genome.hash64().cmp(&mb.genome.hash64()))
        })
        .expect("front is non-empty");
    let m = &front.members[best];
    Ok(ChebyshevPick {
        ideal: z,
        scales: lambda,
        index: best,
        chosen: m.genome,
        objectives: m.objectives,
        score: score(&pts[best]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_rank0(points: &[[f64; 3]]) -> Vec<usize> {
        (0..points.len())
            .filter(|&i| !points.iter().any(|q| dominates(q, &points[i])))
            .collect()
    }

    /// Inclusion-exclusion over all non-empty subsets.
    fn brute_hypervolume(points: &[[f64; 3]], r: [f64; 3]) -> f64 {
        let n = points.len();
        let mut total = 0.0;
        for mask in 1u32..(1 << n) {
            let mut corner = [f64::NEG_INFINITY; 3];
            for (i, p) in points.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    for k in 0..3 {
                        corner[k] = corner[k].max(p[k]);
                    }
                }
            }
            let vol: f64 = (0..3).map(|k| (r[k] - corner[k]).max(0.0)).product();
            total += if mask.count_ones() % 2 == 1 { vol } else { -vol };
        }
        total
    }

    fn member(p: [f64; 3], threshold: f64) -> FrontMember {
        FrontMember {
            genome: Genome::from_genes([threshold, -3.0, -2.0, 50.0, 0.1]),
            objectives: ObjectiveVector::from_array(p),
            rank: 0,
            crowding_distance: 0.0,
        }
    }

    fn front(points: &[[f64; 3]]) -> ParetoFront {
        ParetoFront {
            generation: 0,
            members: points
                .iter()
                .enumerate()
                .map(|(i, &p)| member(p, 0.1 + 0.01 * i as f64))
                .collect(),
        }
    }

    #[test]
    fn sorting_examples() {
        assert_eq!(non_dominated_sort(&[[1.0, 1.0, 1.0], [2.0, 2.0, 2.0]]), vec![vec![0], vec![1]]);
        assert_eq!(non_dominated_sort(&[[1.0, 2.0, 3.0], [3.0, 2.0, 1.0]]), vec![vec![0, 1]]);
        let f = non_dominated_sort(&[[1.0, 1.0, 1.0], [1.0, 1.0, 1.0]]);
        assert_eq!(f, vec![vec![0, 1]]);
    }

    #[test]
    fn crowding_examples() {
        assert!(crowding_distance(&[[0.0; 3], [1.0; 3]]).iter().all(|d| d.is_infinite()));
        let d = crowding_distance(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]);
        assert!(d[0].is_infinite() && d[2].is_infinite());
        assert_eq!(d[1], 1.0);
        let d = crowding_distance(&[[0.5; 3]; 4]);
        assert_eq!(d[1], 0.0);
        assert_eq!(d[2], 0.0);
    }

    #[test]
    fn genome_bounds_and_mapping() {
        let g = Genome::from_genes([2.0, -9.0, 0.0, 250.4, -1.0]);
        assert!(g.in_bounds());
        assert_eq!(g.epochs, 200);
        let h = Genome::from_genes([0.5, -2.0, -3.0, 99.6, 0.2]).hyperparams();
        assert!((h.l2 - 0.01).abs() < 1e-15 && (h.learning_rate - 1e-3).abs() < 1e-15);
        assert_eq!(h.epochs, 100);
    }

    #[test]
    fn variation_stays_in_bounds() {
        let mut rng = seed::rng(4);
        for _ in 0..2000 {
            let a = Genome::random(&mut rng).genes();
            let b = Genome::random(&mut rng).genes();
            let (mut c1, mut c2) = sbx(&a, &b, 15.0, &mut rng);
            mutate(&mut c1, 1.0, 20.0, &mut rng);
            mutate(&mut c2, 1.0, 20.0, &mut rng);
            for c in [c1, c2] {
                for k in 0..N_GENES {
                    assert!(c[k] >= LOWER[k] && c[k] <= UPPER[k]);
                }
            }
        }
    }

    #[test]
    fn invalid_search_configs() {
        let bad = [
            SearchConfig {
                population: 5,
                ..SearchConfig::default()
            },
            SearchConfig {
                population: 2,
                ..SearchConfig::default()
            },
            SearchConfig {
                generations: 0,
                ..SearchConfig::default()
            },
            SearchConfig {
                mutation_prob: 1.5,
                ..SearchConfig::default()
            },
        ];
        for cfg in bad {
            assert!(matches!(evolve(&cfg, 0, |_| Ok(ObjectiveVector::INFEASIBLE)), Err(Error::Config(_))));
        }
    }

    fn toy(g: &Genome) -> Result<ObjectiveVector> {
        // Conflicting smooth objectives over the genes.
        let t = g.threshold;
        let e = f64::from(g.epochs) / 200.0;
        Ok(ObjectiveVector {
            f_perf: -(1.0 - (t - 0.3).powi(2)) * 0.5 - 0.3 * e,
            f_out: (t - 0.8).powi(2) + 0.1 * g.dropout,
            f_proc: (g.log10_l2 + 3.0).powi(2) / 9.0 + 0.2 * (1.0 - e),
        })
    }

    #[test]
    fn evolve_is_deterministic_and_elitist() {
        let cfg = SearchConfig {
            population: 8,
            generations: 6,
            ..SearchConfig::default()
        };
        let a = evolve(&cfg, 11, toy).unwrap();
        let b = evolve(&cfg, 11, toy).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a.archive.len(), 8 * 7);
        assert!(!a.front.members.is_empty());
        for m in &a.front.members {
            assert!(m.genome.in_bounds());
            let p = m.objectives.as_array();
            assert!(!a.archive.iter().any(|e| dominates(&e.objectives.as_array(), &p)));
        }
        assert!(a.archive.iter().all(|e| e.genome.in_bounds()));
    }

    #[test]
    fn hypervolume_examples() {
        let r = [0.0, 1.0, 1.0];
        assert!((hypervolume(&[[-1.0, 0.0, 0.0]], r) - 1.0).abs() < 1e-15);
        assert_eq!(hypervolume(&[[0.0, 0.5, 0.5]], r), 0.0);
        let pts = [[-0.5, 0.5, 0.2], [-0.8, 0.7, 0.4], [-0.2, 0.1, 0.9]];
        assert!((hypervolume(&pts, r) - brute_hypervolume(&pts, r)).abs() < 1e-12);
    }

    #[test]
    fn chebyshev_examples() {
        let single = front(&[[-0.7, 0.2, 0.1]]);
        let pick = chebyshev_select(&single, None, IdealPoint::Front).unwrap();
        assert_eq!(pick.index, 0);
        assert_eq!(pick.score, 0.0);

        let pts = [[-0.9, 0.1, 0.05], [-0.8, 0.02, 0.01]];
        let f = front(&pts);
        let pick = chebyshev_select(&f, None, IdealPoint::Front).unwrap();
        assert_eq!(pick.ideal, [-0.9, 0.02, 0.01]);
        // Hand evaluation of both members with λ = 1/range.
        let z = [-0.9, 0.02, 0.01];
        let lam: Vec<f64> = (0..3).map(|k| 1.0 / (pts[0][k] - pts[1][k]).abs()).collect();
        let s: Vec<f64> = pts
            .iter()
            .map(|p| (0..3).map(|k| lam[k] * (p[k] - z[k]).abs()).fold(0.0, f64::max))
            .collect();
        let expected = if s[0] < s[1] {
            0
        } else if s[1] < s[0] {
            1
        } else {
            0 // tie: lexicographically smaller objectives
        };
        assert_eq!(pick.index, expected);
        assert!((pick.score - s[expected]).abs() < 1e-12);
    }

    #[test]
    fn empty_front_is_an_error() {
        let f = ParetoFront {
            generation: 0,
            members: Vec::new(),
        };
        assert!(chebyshev_select(&f, None, IdealPoint::Front).is_err());
    }

    #[test]
    fn front_member_round_trips_infinity() {
        let mut m = member([-0.5, 0.1, 0.1], 0.5);
        m.crowding_distance = f64::INFINITY;
        let text = serde_json::to_string(&m).unwrap();
        assert!(text.contains("\"crowding_distance\":null"));
        let back: FrontMember = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
    }

    fn triples(max: usize) -> impl Strategy<Value = Vec<[f64; 3]>> {
        prop::collection::vec(prop::array::uniform3(0u8..12).prop_map(|a| a.map(|v| f64::from(v) / 4.0)), 1..max)
    }

    proptest! {
        #[test]
        fn rank0_matches_brute_force(pts in triples(60)) {
            let fronts = non_dominated_sort(&pts);
            prop_assert_eq!(&fronts[0], &brute_rank0(&pts));
            let mut all: Vec<usize> = fronts.concat();
            all.sort_unstable();
            prop_assert_eq!(all, (0..pts.len()).collect::<Vec<_>>());
        }

        #[test]
        fn hypervolume_matches_inclusion_exclusion(pts in triples(10)) {
            let shifted: Vec<[f64; 3]> = pts.iter().map(|p| [p[0] / 3.0 - 1.0, p[1] / 3.0, p[2] / 3.0]).collect();
            let r = [0.0, 1.0, 1.0];
            prop_assert!((hypervolume(&shifted, r) - brute_hypervolume(&shifted, r)).abs() < 1e-9);
        }

        #[test]
        fn chebyshev_pick_ignores_uniform_scale(pts in triples(20), c in 0.01f64..100.0) {
            let f = front(&pts);
            let a = chebyshev_select(&f, None, IdealPoint::Front).unwrap();
            let scaled = a.scales.map(|s| s * c);
            let b = chebyshev_select(&f, Some(scaled), IdealPoint::Front).unwrap();
            prop_assert!(pts.contains(&a.objectives.as_array()));
            // Scaling can only reorder exact ties through rounding, which
            // the tie-break then resolves identically.
            let s = |i: usize| (0..3).map(|k| a.scales[k] * (pts[i][k] - a.ideal[k]).abs()).fold(0.0, f64::max);
            prop_assert!(b.index == a.index || (s(b.index) - s(a.index)).abs() < 1e-12);
        }
    }
}
