//! Birth–death–rebridge Metropolis–Hastings chains for the three kernels.
//!
//! The target is `e^{-βH_Λ + βμN_Λ}` relative to a Poisson reference. Births
//! draw from the μ-weighted intensity `M_Λ` (uniform root, `j ∝ w_j`, bridge
//! path) and carry the kernel's support constraint as an indicator, so the
//! acceptance ratio only involves the known mass and the energy change.
//!
//! Energies are cached per mobile loop: its counted self term, its summed
//! interaction with the frozen loops and its nonzero pair terms with other
//! mobile loops. A pair counts when at least one of the two loops is rooted
//! in `Λ`; pairs of two frozen loops are constant and left out.

use super::{AcceptanceRates, KernelKind, KernelRunReport, McmcConfig, Observables, Traces};
use crate::configuration::{Configuration, Psi};
use crate::error::{domain, Error, Result};
use crate::interaction::{pair_t_unchecked, self_w_unchecked, EnergyBreakdown, NeighborGrid};
use crate::loop_measures::{measure_mass, LoopMeasureSpec};
use crate::loop_paths::bridge::bridge_into;
use crate::loop_paths::{interior_runs, Containment, Domain, Loop};
use crate::potentials::Potential;
use rand::Rng;
use std::collections::HashMap;
use std::sync::Arc;

#[derive(Clone, Debug)]
struct Unit {
    id: u64,
    lp: Arc<Loop>,
    /// Rooted in Λ.
    flagged: bool,
    /// Contained or free loop (subject to births and deaths); crossing loops are not.
    removable: bool,
    w: f64,
    frozen_t: f64,
    pairs: Vec<(u64, f64)>,
    /// Interior excursions `(first index, steps)` of a crossing loop.
    runs: Vec<(usize, usize)>,
}

impl Unit {
    fn row_total(&self) -> f64 {
        self.w + self.frozen_t + self.pairs.iter().map(|p| p.1).sum::<f64>()
    }
}

/// Proposed energy row for a loop.
struct Row {
    w: f64,
    frozen_t: f64,
    pairs: Vec<(u64, f64)>,
}

impl Row {
    fn total(&self) -> f64 {
        if self.w == f64::INFINITY || self.frozen_t == f64::INFINITY || self.pairs.iter().any(|p| p.1 == f64::INFINITY) {
            return f64::INFINITY;
        }
        self.w + self.frozen_t + self.pairs.iter().map(|p| p.1).sum::<f64>()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MoveKind {
    Birth,
    Death,
    Rebridge,
}

/// Bookkeeping for one proposal, for detailed-balance audits.
#[derive(Clone, Copy, Debug)]
pub struct MoveRecord {
    pub kind: MoveKind,
    /// Removable loops before the move.
    pub n_before: usize,
    /// Energy change of the proposal (`f64::INFINITY` for a forbidden state).
    pub delta_h: f64,
    /// Acceptance probability used.
    pub acceptance: f64,
    pub accepted: bool,
    pub energy_before: f64,
    pub energy_after: f64,
}

#[derive(Clone, Copy, Debug, Default)]
struct Tally {
    proposed: u64,
    accepted: u64,
}

impl Tally {
    fn rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

/// Metropolis–Hastings chain for one of the Gibbs kernels on a box.
pub struct Chain<R: Rng> {
    kind: KernelKind,
    spec: LoopMeasureSpec,
    mass: f64,
    beta: f64,
    pot: Potential,
    dt: f64,
    cfg: McmcConfig,
    rng: R,
    frozen: Vec<Arc<Loop>>,
    frozen_flag: Vec<bool>,
    frozen_grid: Option<NeighborGrid>,
    boundary_energy: f64,
    mobile: Vec<Unit>,
    index_of: HashMap<u64, usize>,
    mobile_grid: Option<NeighborGrid>,
    next_id: u64,
    self_total: f64,
    pair_internal: f64,
    pair_boundary: f64,
    step: u64,
    tallies: [Tally; 3],
    log: Option<Vec<MoveRecord>>,
    buf: Vec<f64>,
}

impl<R: Rng> Chain<R> {
    /// Chain for `δ^dir_Λ(·|η)`: loops of `conditioning` contained in `Λ`
    /// seed the state, all others are frozen.
    pub fn dirichlet(spec: &LoopMeasureSpec, conditioning: &Configuration, cfg: McmcConfig, rng: R) -> Result<Self> {
        let dom = spec.domain().clone();
        let (inner, outer): (Vec<_>, Vec<_>) = conditioning.loops.iter().cloned().partition(|l| l.containment(&dom) == Containment::Inside);
        let flags = outer.iter().map(|l| l.started_in(&dom)).collect();
        let mut c = Self::bare(KernelKind::Dirichlet, spec, outer, flags, cfg, rng)?;
        for l in inner {
            c.insert_initial(l, true, true, vec![])?;
        }
        c.check_start()?;
        Ok(c)
    }

    /// Chain for `δ^free_Λ(·|η)`: loops of `conditioning` rooted in `Λ` seed
    /// the state, all others are frozen.
    pub fn free(spec: &LoopMeasureSpec, conditioning: &Configuration, cfg: McmcConfig, rng: R) -> Result<Self> {
        let dom = spec.domain().clone();
        let (inner, outer): (Vec<_>, Vec<_>) = conditioning.loops.iter().cloned().partition(|l| l.started_in(&dom));
        let flags = vec![false; outer.len()];
        let mut c = Self::bare(KernelKind::Free, spec, outer, flags, cfg, rng)?;
        for l in inner {
            c.insert_initial(l, true, true, vec![])?;
        }
        c.check_start()?;
        Ok(c)
    }

    /// Chain for `γ_Λ(·|η)`: contained loops are resampled by births and
    /// deaths, interior excursions of crossing loops are re-bridged with
    /// their endpoints and durations held fixed, everything else is frozen.
    pub fn excursion(spec: &LoopMeasureSpec, conditioning: &Configuration, cfg: McmcConfig, rng: R) -> Result<Self> {
        let dom = spec.domain().clone();
        let mut inside = Vec::new();
        let mut crossing = Vec::new();
        let mut outer = Vec::new();
        for l in &conditioning.loops {
            let runs = interior_runs(l, &dom)?;
            if !runs.is_empty() {
                crossing.push((l.clone(), runs));
            } else if l.inside_strict(&dom) {
                inside.push(l.clone());
            } else {
                outer.push(l.clone());
            }
        }
        let flags = outer.iter().map(|l| l.started_in(&dom)).collect();
        let mut c = Self::bare(KernelKind::Excursion, spec, outer, flags, cfg, rng)?;
        for (l, runs) in crossing {
            let f = l.started_in(&dom);
            c.insert_initial(l, f, false, runs)?;
        }
        for l in inside {
            c.insert_initial(l, true, true, vec![])?;
        }
        c.check_start()?;
        Ok(c)
    }

    fn bare(kind: KernelKind, spec: &LoopMeasureSpec, frozen: Vec<Arc<Loop>>, frozen_flag: Vec<bool>, cfg: McmcConfig, rng: R) -> Result<Self> {
        cfg.validate()?;
        let grid = *spec.grid();
        for l in &frozen {
            if l.steps_per_beta() != grid.steps_per_beta() || l.dim() != spec.params().dim {
                return Err(Error::Structural("conditioning loop does not match the model grid".into()));
            }
        }
        let pot = spec.params().potential;
        let dt = grid.dt();
        let use_grid = cfg.neighbor_grid && pot.r_cut().is_some();
        let reach = pot.r_cut().unwrap_or(0.0);
        let frozen_grid = use_grid.then(|| {
            let mut g = NeighborGrid::new(reach);
            for (k, l) in frozen.iter().enumerate() {
                g.insert(k as u64, l.bbox());
            }
            g
        });
        // Energy among frozen loops, with at least one rooted in Λ.
        let mut boundary_energy = 0.0;
        for (i, a) in frozen.iter().enumerate() {
            if frozen_flag[i] {
                boundary_energy += self_w_unchecked(a, &pot, dt);
            }
            for (k, b) in frozen.iter().enumerate().skip(i + 1) {
                if frozen_flag[i] || frozen_flag[k] {
                    boundary_energy += pair_t_unchecked(a, b, &pot, dt);
                }
            }
        }
        if boundary_energy == f64::INFINITY {
            return domain("frozen boundary has infinite energy inside the box");
        }
        let log = cfg.log_moves.then(Vec::new);
        Ok(Self {
            kind,
            mass: measure_mass(spec),
            beta: spec.params().beta,
            pot,
            dt,
            spec: spec.clone(),
            cfg,
            rng,
            frozen,
            frozen_flag,
            frozen_grid,
            boundary_energy,
            mobile: Vec::new(),
            index_of: HashMap::new(),
            mobile_grid: use_grid.then(|| NeighborGrid::new(reach)),
            next_id: 0,
            self_total: 0.0,
            pair_internal: 0.0,
            pair_boundary: 0.0,
            step: 0,
            tallies: [Tally::default(); 3],
            log,
            buf: Vec::new(),
        })
    }

    fn insert_initial(&mut self, lp: Arc<Loop>, flagged: bool, removable: bool, runs: Vec<(usize, usize)>) -> Result<()> {
        if lp.steps_per_beta() != self.spec.grid().steps_per_beta() || lp.dim() != self.spec.params().dim {
            return Err(Error::Structural("conditioning loop does not match the model grid".into()));
        }
        let row = self.row(&lp, flagged, None);
        self.insert(lp, flagged, removable, runs, row);
        Ok(())
    }

    fn check_start(&self) -> Result<()> {
        let e = self.energy();
        if !e.is_finite() {
            return Err(Error::Jammed(format!("initial state has energy {}", e.total)));
        }
        Ok(())
    }

    fn row(&self, lp: &Loop, flagged: bool, skip: Option<u64>) -> Row {
        let w = if flagged { self_w_unchecked(lp, &self.pot, self.dt) } else { 0.0 };
        let mut frozen_t = 0.0;
        let frozen_ids: Vec<usize> = match &self.frozen_grid {
            Some(g) => g.candidates(lp.bbox()).into_iter().map(|k| k as usize).collect(),
            None => (0..self.frozen.len()).collect(),
        };
        for k in frozen_ids {
            if flagged || self.frozen_flag[k] {
                frozen_t += pair_t_unchecked(lp, &self.frozen[k], &self.pot, self.dt);
                if frozen_t == f64::INFINITY {
                    break;
                }
            }
        }
        let mut pairs = Vec::new();
        let ids: Vec<u64> = match &self.mobile_grid {
            Some(g) => g.candidates(lp.bbox()),
            None => self.mobile.iter().map(|u| u.id).collect(),
        };
        for id in ids {
            if Some(id) == skip {
                continue;
            }
            let u = &self.mobile[self.index_of[&id]];
            if flagged || u.flagged {
                let t = pair_t_unchecked(lp, &u.lp, &self.pot, self.dt);
                if t != 0.0 {
                    pairs.push((id, t));
                }
                if t == f64::INFINITY {
                    break;
                }
            }
        }
        Row { w, frozen_t, pairs }
    }

    fn insert(&mut self, lp: Arc<Loop>, flagged: bool, removable: bool, runs: Vec<(usize, usize)>, row: Row) {
        let id = self.next_id;
        self.next_id += 1;
        self.self_total += row.w;
        self.pair_boundary += row.frozen_t;
        for &(pid, t) in &row.pairs {
            self.pair_internal += t;
            let k = self.index_of[&pid];
            self.mobile[k].pairs.push((id, t));
        }
        if let Some(g) = &mut self.mobile_grid {
            g.insert(id, lp.bbox());
        }
        self.index_of.insert(id, self.mobile.len());
        self.mobile.push(Unit { id, lp, flagged, removable, w: row.w, frozen_t: row.frozen_t, pairs: row.pairs, runs });
    }

    fn detach_pairs(&mut self, idx: usize) {
        let id = self.mobile[idx].id;
        let pairs = std::mem::take(&mut self.mobile[idx].pairs);
        for (pid, t) in pairs {
            self.pair_internal -= t;
            let k = self.index_of[&pid];
            self.mobile[k].pairs.retain(|p| p.0 != id);
        }
    }

    fn remove(&mut self, idx: usize) -> Unit {
        self.detach_pairs(idx);
        let u = self.mobile.swap_remove(idx);
        self.index_of.remove(&u.id);
        if idx < self.mobile.len() {
            self.index_of.insert(self.mobile[idx].id, idx);
        }
        if let Some(g) = &mut self.mobile_grid {
            g.remove(u.id);
        }
        self.self_total -= u.w;
        self.pair_boundary -= u.frozen_t;
        u
    }

    fn replace(&mut self, idx: usize, lp: Arc<Loop>, row: Row) {
        self.detach_pairs(idx);
        let id = self.mobile[idx].id;
        self.self_total += row.w - self.mobile[idx].w;
        self.pair_boundary += row.frozen_t - self.mobile[idx].frozen_t;
        for &(pid, t) in &row.pairs {
            self.pair_internal += t;
            let k = self.index_of[&pid];
            self.mobile[k].pairs.push((id, t));
        }
        if let Some(g) = &mut self.mobile_grid {
            g.remove(id);
            g.insert(id, lp.bbox());
        }
        let u = &mut self.mobile[idx];
        u.lp = lp;
        u.w = row.w;
        u.frozen_t = row.frozen_t;
        u.pairs = row.pairs;
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn domain(&self) -> &Domain {
        self.spec.domain()
    }

    pub fn spec(&self) -> &LoopMeasureSpec {
        &self.spec
    }

    /// Mass of the μ-weighted birth intensity.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    pub fn config(&self) -> &McmcConfig {
        &self.cfg
    }

    /// Cached energy of the resampled part (frozen-only terms excluded).
    pub fn energy(&self) -> EnergyBreakdown {
        EnergyBreakdown::new(self.self_total, self.pair_internal, self.pair_boundary)
    }

    /// Energy among frozen loops that the box Hamiltonian still counts.
    pub fn boundary_energy(&self) -> f64 {
        self.boundary_energy
    }

    /// Number of loops subject to births and deaths.
    pub fn removable_count(&self) -> usize {
        self.mobile.iter().filter(|u| u.removable).count()
    }

    /// Resampled loops (contained or rooted loops, and crossing loops with their current excursions).
    pub fn interior(&self) -> Configuration {
        self.mobile.iter().map(|u| u.lp.clone()).collect()
    }

    pub fn boundary(&self) -> Configuration {
        self.frozen.iter().cloned().collect()
    }

    /// Full current configuration: frozen loops followed by resampled ones.
    pub fn configuration(&self) -> Configuration {
        self.frozen.iter().cloned().chain(self.mobile.iter().map(|u| u.lp.clone())).collect()
    }

    pub fn acceptance(&self) -> AcceptanceRates {
        AcceptanceRates { birth: self.tallies[0].rate(), death: self.tallies[1].rate(), rebridge: self.tallies[2].rate() }
    }

    pub fn move_log(&self) -> &[MoveRecord] {
        self.log.as_deref().unwrap_or(&[])
    }

    /// Recompute every cached term from scratch and compare.
    pub fn verify_cache(&self) -> Result<()> {
        let mut s = 0.0;
        let mut pi = 0.0;
        let mut pb = 0.0;
        for (i, u) in self.mobile.iter().enumerate() {
            if u.flagged {
                s += self_w_unchecked(&u.lp, &self.pot, self.dt);
            }
            for v in &self.mobile[i + 1..] {
                if u.flagged || v.flagged {
                    pi += pair_t_unchecked(&u.lp, &v.lp, &self.pot, self.dt);
                }
            }
            for (k, f) in self.frozen.iter().enumerate() {
                if u.flagged || self.frozen_flag[k] {
                    pb += pair_t_unchecked(&u.lp, f, &self.pot, self.dt);
                }
            }
        }
        let full = s + pi + pb;
        let cached = self.energy().total;
        let scale = full.abs().max(cached.abs()).max(1e-300);
        if (full - cached).abs() > 1e-9 * scale && (full - cached).abs() > 1e-12 {
            return Err(Error::CacheCorrupt { cached, recomputed: full });
        }
        Ok(())
    }

    fn pick_move(&mut self) -> MoveKind {
        let u: f64 = self.rng.gen::<f64>() * self.cfg.mix.total();
        if u < self.cfg.mix.birth {
            MoveKind::Birth
        } else if u < self.cfg.mix.birth + self.cfg.mix.death {
            MoveKind::Death
        } else {
            MoveKind::Rebridge
        }
    }

    fn admissible_birth(&self, lp: &Loop) -> bool {
        match self.kind {
            KernelKind::Free => true,
            KernelKind::Dirichlet => lp.containment(self.spec.domain()) == Containment::Inside,
            KernelKind::Excursion => lp.inside_strict(self.spec.domain()),
        }
    }

    fn record(&mut self, rec: MoveRecord) {
        if let Some(log) = &mut self.log {
            log.push(rec);
        }
    }

    /// Advance one Metropolis–Hastings step.
    pub fn step(&mut self) -> Result<MoveKind> {
        self.step += 1;
        let mv = self.pick_move();
        let before = self.energy().total;
        let (pb, pd) = (self.cfg.mix.birth, self.cfg.mix.death);
        let n = self.removable_count();
        match mv {
            MoveKind::Birth => {
                self.tallies[0].proposed += 1;
                let Some(lp) = self.spec.propose_loop(&mut self.rng) else {
                    return Ok(mv);
                };
                let (dh, row) = if self.admissible_birth(&lp) {
                    let row = self.row(&lp, true, None);
                    (row.total(), Some(row))
                } else {
                    (f64::INFINITY, None)
                };
                let a = accept_prob((self.mass / (n as f64 + 1.0)) * (pd / pb), self.beta, dh);
                let ok = self.rng.gen::<f64>() < a;
                if ok {
                    self.tallies[0].accepted += 1;
                    self.insert(Arc::new(lp), true, true, vec![], row.expect("admissible birth has a row"));
                }
                let after = self.energy().total;
                self.record(MoveRecord { kind: mv, n_before: n, delta_h: dh, acceptance: a, accepted: ok, energy_before: before, energy_after: after });
            }
            MoveKind::Death => {
                self.tallies[1].proposed += 1;
                if n == 0 {
                    return Ok(mv);
                }
                let pick = self.rng.gen_range(0..n);
                let idx = self.mobile.iter().enumerate().filter(|(_, u)| u.removable).nth(pick).map(|(i, _)| i).expect("index in range");
                let dh = -self.mobile[idx].row_total();
                let a = accept_prob((n as f64 / self.mass) * (pb / pd), self.beta, dh);
                let ok = self.rng.gen::<f64>() < a;
                if ok {
                    self.tallies[1].accepted += 1;
                    self.remove(idx);
                }
                let after = self.energy().total;
                self.record(MoveRecord { kind: mv, n_before: n, delta_h: dh, acceptance: a, accepted: ok, energy_before: before, energy_after: after });
            }
            MoveKind::Rebridge => {
                self.tallies[2].proposed += 1;
                if let Some((dh, a, ok)) = self.rebridge()? {
                    let after = self.energy().total;
                    self.record(MoveRecord { kind: mv, n_before: n, delta_h: dh, acceptance: a, accepted: ok, energy_before: before, energy_after: after });
                }
            }
        }
        if let Some(k) = self.cfg.verify_every {
            if k > 0 && self.step.is_multiple_of(k) {
                self.verify_cache()?;
            }
        }
        Ok(mv)
    }

    /// Redraw one grid segment of a loop or excursion from its conditional bridge law.
    fn rebridge(&mut self) -> Result<Option<(f64, f64, bool)>> {
        // Movable units: whole removable loops, then excursions with room to move.
        let mut targets: Vec<(usize, Option<(usize, usize)>)> = Vec::new();
        for (i, u) in self.mobile.iter().enumerate() {
            if u.removable {
                targets.push((i, None));
            } else {
                for &r in &u.runs {
                    if r.1 >= 2 {
                        targets.push((i, Some(r)));
                    }
                }
            }
        }
        if targets.is_empty() {
            return Ok(None);
        }
        let (idx, run) = targets[self.rng.gen_range(0..targets.len())];
        let old = self.mobile[idx].lp.clone();
        let len = old.len();
        let dim = old.dim();
        let (a, k) = match run {
            None => {
                let kmax = self.cfg.max_segment.map_or(len, |m| m.clamp(2, len));
                let k = self.rng.gen_range(2..=kmax);
                (self.rng.gen_range(0..len), k)
            }
            Some((s, r)) => {
                let kmax = self.cfg.max_segment.map_or(r, |m| m.clamp(2, r));
                let k = self.rng.gen_range(2..=kmax);
                (s + self.rng.gen_range(0..=r - k), k)
            }
        };
        self.buf.resize((k + 1) * dim, 0.0);
        let x = old.point(a).to_vec();
        let y = old.point(a + k).to_vec();
        bridge_into(&x, &y, k, self.dt, &mut self.rng, &mut self.buf);
        let mut coords = old.coords().to_vec();
        for i in 1..k {
            let g = (a + i) % len;
            coords[g * dim..(g + 1) * dim].copy_from_slice(&self.buf[i * dim..(i + 1) * dim]);
        }
        let dom = self.spec.domain();
        let changed = |g: usize| -> &[f64] { &coords[g * dim..(g + 1) * dim] };
        let admissible = match (self.kind, run) {
            (_, Some(_)) | (KernelKind::Excursion, None) => (1..k).all(|i| dom.contains_strict(changed((a + i) % len))),
            (KernelKind::Dirichlet, None) => (1..k).all(|i| dom.contains(changed((a + i) % len))),
            (KernelKind::Free, None) => dom.contains(changed(0)),
        };
        let u = &self.mobile[idx];
        let (flagged, id, old_total) = (u.flagged, u.id, u.row_total());
        let new_lp = Loop::new(old.j(), dim, old.steps_per_beta(), coords)?;
        let (dh, row) = if admissible {
            let row = self.row(&new_lp, flagged, Some(id));
            (row.total() - old_total, Some(row))
        } else {
            (f64::INFINITY, None)
        };
        let a_prob = accept_prob(1.0, self.beta, dh);
        let ok = self.rng.gen::<f64>() < a_prob;
        if ok {
            self.tallies[2].accepted += 1;
            self.replace(idx, Arc::new(new_lp), row.expect("admissible move has a row"));
        }
        Ok(Some((dh, a_prob, ok)))
    }

    fn observe(&self, psi: Psi) -> Observables {
        let conf = self.configuration();
        let dom = self.spec.domain();
        Observables {
            step: self.step,
            n_loops: self.mobile.len(),
            n: conf.n_in(dom),
            s: conf.s_in(dom),
            n_psi: conf.n_psi(dom, psi),
            energy: self.energy(),
            acceptance: self.acceptance(),
        }
    }

    /// Run `cfg.steps` steps; after burn-in, every `thinning`-th state is
    /// handed to `emit` together with its observables.
    pub fn run<F>(&mut self, mut emit: F) -> Result<KernelRunReport>
    where
        F: FnMut(&Self, &Observables) -> Result<()>,
    {
        let McmcConfig { steps, burn_in, thinning, psi, .. } = self.cfg;
        let mut traces = Traces::default();
        for t in 1..=steps {
            self.step()?;
            if t > burn_in && (t - burn_in) % thinning == 0 {
                let obs = self.observe(psi);
                traces.push(&obs);
                emit(self, &obs)?;
            }
        }
        Ok(KernelRunReport {
            kind: self.kind,
            steps,
            burn_in,
            thinning,
            retained: traces.n.len() as u64,
            acceptance: self.acceptance(),
            traces,
        })
    }

    /// Run and keep every emitted configuration.
    pub fn run_collect(&mut self) -> Result<(Vec<Configuration>, KernelRunReport)> {
        let mut out = Vec::new();
        let rep = self.run(|c, _| {
            out.push(c.configuration());
            Ok(())
        })?;
        Ok((out, rep))
    }

    /// Advance `n` steps without emitting.
    pub fn advance(&mut self, n: u64) -> Result<()> {
        for _ in 0..n {
            self.step()?;
        }
        Ok(())
    }
}

/// `min(1, ratio·e^{-βΔH})`, exactly 0 when `ΔH = +∞`.
fn accept_prob(ratio: f64, beta: f64, dh: f64) -> f64 {
    if dh == f64::INFINITY || ratio <= 0.0 {
        return 0.0;
    }
    (ratio.ln() - beta * dh).exp().min(1.0)
}

/// Relative violation of `a(x→y)π(x)q(x→y) = a(y→x)π(y)q(y→x)` for a logged
/// proposal, using unnormalized weights `π(x) = 1`, `π(y) = e^{-βΔH}`.
pub fn detailed_balance_residual(rec: &MoveRecord, mass: f64, beta: f64, p_birth: f64, p_death: f64) -> f64 {
    if rec.delta_h == f64::INFINITY {
        return if rec.acceptance == 0.0 { 0.0 } else { 1.0 };
    }
    let n = rec.n_before as f64;
    let piy = (-beta * rec.delta_h).exp();
    let (lhs, rhs) = match rec.kind {
        MoveKind::Birth => {
            let fwd = rec.acceptance * p_birth / mass;
            let rev = accept_prob((n + 1.0) / mass * (p_birth / p_death), beta, -rec.delta_h) * piy * p_death / (n + 1.0);
            (fwd, rev)
        }
        MoveKind::Death => {
            let fwd = rec.acceptance * p_death / n;
            let rev = accept_prob(mass / n * (p_death / p_birth), beta, -rec.delta_h) * piy * p_birth / mass;
            (fwd, rev)
        }
        MoveKind::Rebridge => (rec.acceptance, accept_prob(1.0, beta, -rec.delta_h) * piy),
    };
    (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1e-300)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loop_measures::{expected_particles, sample_free};
    use crate::potentials::ModelParams;
    use crate::rng::stream;
    use crate::stats::batch_means;

    fn spec(pot: Potential, mu: f64, side: f64) -> LoopMeasureSpec {
        let p = ModelParams::new(3, 1.0, mu, pot).unwrap();
        LoopMeasureSpec::new(Domain::cube(3, 0.0, side).unwrap(), p, 8, 16, 1.0).unwrap()
    }

    fn cfg(steps: u64) -> McmcConfig {
        McmcConfig { steps, burn_in: steps / 10, thinning: 5, ..McmcConfig::default() }
    }

    #[test]
    fn free_kernel_without_interaction_matches_poisson_mean() {
        let s = spec(Potential::zero(), 0.0, 2.0);
        let mut c = Chain::free(&s, &Configuration::empty(), cfg(200_000), stream(3, 0, "t")).unwrap();
        let rep = c.run(|_, _| Ok(())).unwrap();
        let est = batch_means(&rep.traces.n, 40);
        let exact = expected_particles(&s);
        assert!((est.value - exact).abs() < 4.0 * est.se, "{} vs {exact} ({})", est.value, est.se);
    }

    #[test]
    fn cache_survives_mixed_moves_with_interaction() {
        let s = spec(Potential::gaussian(2.0, 0.5).unwrap(), 0.5, 1.5);
        let mut rng = stream(4, 0, "b");
        let boundary = sample_free(&s.with_domain(Domain::cube(3, -1.0, 2.5).unwrap()).unwrap(), &mut rng);
        for kind in [KernelKind::Dirichlet, KernelKind::Free] {
            let c = McmcConfig { verify_every: Some(97), max_segment: Some(6), ..cfg(5_000) };
            let mut ch = super::super::chain_for(kind, &s, &boundary, c, stream(4, 1, "c")).unwrap();
            ch.advance(5_000).unwrap();
            ch.verify_cache().unwrap();
        }
    }

    #[test]
    fn hard_core_states_stay_admissible() {
        let s = spec(Potential::hard_core(0.3).unwrap(), 0.5, 1.5);
        let mut ch = Chain::dirichlet(&s, &Configuration::empty(), cfg(20_000), stream(5, 0, "h")).unwrap();
        let (confs, _) = ch.run_collect().unwrap();
        for conf in confs.iter().step_by(50) {
            let h = crate::interaction::hamiltonian(conf, s.domain(), &s.params().potential, s.grid(), crate::Restriction::StartedIn).unwrap();
            assert!(h.is_finite());
        }
    }

    #[test]
    fn logged_moves_satisfy_detailed_balance() {
        let s = spec(Potential::compact_bump(1.5, 0.4).unwrap(), 0.2, 1.5);
        let c = McmcConfig { log_moves: true, ..cfg(3_000) };
        let mut ch = Chain::dirichlet(&s, &Configuration::empty(), c, stream(6, 0, "d")).unwrap();
        ch.advance(3_000).unwrap();
        let mix = c.mix;
        assert!(!ch.move_log().is_empty());
        for r in ch.move_log() {
            assert!(detailed_balance_residual(r, ch.mass(), 1.0, mix.birth, mix.death) < 1e-9, "{r:?}");
            if r.accepted {
                assert!((r.energy_after - r.energy_before - r.delta_h).abs() < 1e-9 * (1.0 + r.energy_after.abs()));
            }
        }
    }

    #[test]
    fn infinite_start_is_jammed() {
        let s = spec(Potential::hard_core(0.5).unwrap(), 0.0, 2.0);
        let a = Loop::constant(&[1.0, 1.0, 1.0], 1, 8).unwrap();
        let eta: Configuration = vec![a.clone(), a].into_iter().collect();
        assert!(matches!(Chain::dirichlet(&s, &eta, cfg(10), stream(7, 0, "j")), Err(Error::Jammed(_))));
    }

    #[test]
    fn retained_count_matches_config() {
        let s = spec(Potential::zero(), 0.0, 1.0);
        let c = McmcConfig { steps: 1_003, burn_in: 100, thinning: 7, ..McmcConfig::default() };
        let mut ch = Chain::dirichlet(&s, &Configuration::empty(), c, stream(8, 0, "r")).unwrap();
        let rep = ch.run(|_, _| Ok(())).unwrap();
        assert_eq!(rep.retained, c.retained());
        assert_eq!(rep.traces.n.len() as u64, (1_003 - 100) / 7);
    }
}
