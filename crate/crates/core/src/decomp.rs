//! Z-slab decomposition: one worker thread per region, one-cell ghost planes
//! refreshed by message passing.
//!
//! Each step a region streams, applies the face passes and takes moments on
//! its own slab. Two exchanges keep the ghosts current: `rho` and `u` after
//! the moments (the IB kernel reads them one plane past the seam) and the
//! post-collision distributions (the next pull stream reads them).

use std::ops::Range;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{channel, Receiver, Sender};
use std::sync::{Barrier, Mutex};

use crate::boundary::{Condition, Face};
use crate::error::{Error, Result};
use crate::ib::{IbReport, Solid};
use crate::lattice::Q;
use crate::layout::Dims;
use crate::solver::{step_back, step_front, MomentStats, PhaseClock, SimState, Slab, SolverConfig, StepReport, TimingLog};

/// Environment variable read by [`workers_from_env`].
pub const WORKERS_ENV: &str = "KINETIC_WORKERS";

/// Region count requested through [`WORKERS_ENV`], if set and valid.
pub fn workers_from_env() -> Option<usize> {
    std::env::var(WORKERS_ENV).ok()?.trim().parse().ok().filter(|m| *m >= 1)
}

/// Owned z-ranges of `m` slabs; sizes differ by at most one, larger first.
pub fn split_domain(dims: Dims, m: usize) -> Result<Vec<Range<usize>>> {
    if m == 0 || m > dims.nz {
        return Err(Error::config("regions", format!("need 1 <= m <= nz = {}, got {m}", dims.nz)));
    }
    let (base, extra) = (dims.nz / m, dims.nz % m);
    let mut z = 0;
    Ok((0..m)
        .map(|r| {
            let len = base + (r < extra) as usize;
            z += len;
            z - len..z
        })
        .collect())
}

/// One slab with its own state, solid replicas and timing rows.
#[derive(Debug, Clone)]
pub struct Region {
    pub state: SimState,
    pub solids: Vec<Solid>,
    pub timing: Option<TimingLog>,
}

impl Region {
    pub fn z_range(&self) -> Range<usize> {
        self.state.slab.z0..self.state.slab.z1
    }
}

/// One ghost plane's payload.
#[derive(Debug, Clone, PartialEq)]
enum Halo {
    Moments { rho: Vec<f64>, u: Vec<[f64; 3]> },
    Dist(Vec<f64>),
}

fn plane_range(state: &SimState, lz: usize) -> Range<usize> {
    let plane = state.slab.global.plane();
    lz * plane..(lz + 1) * plane
}

fn read_moments(state: &SimState, lz: usize) -> Halo {
    let r = plane_range(state, lz);
    Halo::Moments {
        rho: state.rho[r.clone()].to_vec(),
        u: state.u[r].to_vec(),
    }
}

fn read_dist(state: &SimState, lz: usize) -> Halo {
    let r = plane_range(state, lz);
    let mut out = vec![0.0; r.len() * Q];
    for (j, k) in r.enumerate() {
        state.f.current.read_node(k, &mut out[j * Q..(j + 1) * Q]);
    }
    Halo::Dist(out)
}

fn write_halo(state: &mut SimState, lz: usize, halo: Halo) {
    let r = plane_range(state, lz);
    match halo {
        Halo::Moments { rho, u } => {
            state.rho[r.clone()].copy_from_slice(&rho);
            state.u[r].copy_from_slice(&u);
        }
        Halo::Dist(f) => {
            for (j, k) in r.enumerate() {
                state.f.current.write_node(k, &f[j * Q..(j + 1) * Q]);
            }
        }
    }
}

/// Storage planes of a region: `(low ghost, first owned, last owned, high ghost)`.
fn planes(state: &SimState) -> (usize, usize, usize, usize) {
    let owned = state.slab.owned_planes();
    (owned.start - 1, owned.start, owned.end - 1, owned.end)
}

/// Copies neighbours' boundary planes into every ghost plane, sequentially.
/// Wraps around in z when `periodic_z`.
pub fn exchange_ghosts(regions: &mut [Region], periodic_z: bool) {
    let m = regions.len();
    if m < 2 || !regions[0].state.slab.ghosts {
        return;
    }
    let mut incoming: Vec<(usize, usize, Halo)> = Vec::new();
    for r in 0..m {
        let s = &regions[r].state;
        let (_, first, last, _) = planes(s);
        if periodic_z || r + 1 < m {
            let dst = (r + 1) % m;
            let lo = planes(&regions[dst].state).0;
            incoming.push((dst, lo, read_moments(s, last)));
            incoming.push((dst, lo, read_dist(s, last)));
        }
        if periodic_z || r > 0 {
            let dst = (r + m - 1) % m;
            let hi = planes(&regions[dst].state).3;
            incoming.push((dst, hi, read_moments(s, first)));
            incoming.push((dst, hi, read_dist(s, first)));
        }
    }
    for (dst, lz, halo) in incoming {
        write_halo(&mut regions[dst].state, lz, halo);
    }
}

/// Channel ends of one worker. `None` where the global grid ends.
struct Links {
    to_above: Option<Sender<Halo>>,
    to_below: Option<Sender<Halo>>,
    from_below: Option<Receiver<Halo>>,
    from_above: Option<Receiver<Halo>>,
}

impl Links {
    /// Sends the boundary planes produced by `read`, then stores what the
    /// neighbours sent into the ghost planes.
    fn exchange(&self, state: &mut SimState, read: fn(&SimState, usize) -> Halo) {
        let (lo, first, last, hi) = planes(state);
        if let Some(tx) = &self.to_above {
            tx.send(read(state, last)).expect("neighbour worker hung up");
        }
        if let Some(tx) = &self.to_below {
            tx.send(read(state, first)).expect("neighbour worker hung up");
        }
        if let Some(rx) = &self.from_below {
            write_halo(state, lo, rx.recv().expect("neighbour worker hung up"));
        }
        if let Some(rx) = &self.from_above {
            write_halo(state, hi, rx.recv().expect("neighbour worker hung up"));
        }
    }
}

/// A simulation split into z-slabs. With one region it runs on the calling
/// thread without ghosts.
#[derive(Debug, Clone)]
pub struct DecomposedSimulation {
    pub config: SolverConfig,
    pub regions: Vec<Region>,
    dims: Dims,
}

impl DecomposedSimulation {
    pub fn new(dims: Dims, config: SolverConfig, alpha: usize, m: usize) -> Result<Self> {
        config.model.validate()?;
        let ranges = split_domain(dims, m)?;
        let thinnest = ranges.iter().map(|r| r.len()).min().unwrap_or(0);
        let z_outflow = [Face::NegZ, Face::PosZ]
            .iter()
            .any(|f| matches!(config.boundaries.condition(*f), Condition::Outflow));
        if m > 1 && z_outflow && thinnest < 2 {
            return Err(Error::config("regions", "outflow on a z face needs slabs at least 2 planes thick"));
        }
        let regions = ranges
            .into_iter()
            .map(|r| {
                let slab = if m == 1 {
                    Slab::whole(dims)
                } else {
                    Slab::region(dims, r.start, r.end)
                };
                Ok(Region {
                    state: SimState::new(slab, alpha)?,
                    solids: Vec::new(),
                    timing: None,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DecomposedSimulation { config, regions, dims })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn region_count(&self) -> usize {
        self.regions.len()
    }

    pub fn t(&self) -> u64 {
        self.regions[0].state.t
    }

    pub fn with_timing(mut self) -> Self {
        for r in &mut self.regions {
            r.timing = Some(TimingLog::default());
        }
        self
    }

    /// Equilibrium initial state from a global field, ghosts included.
    pub fn init_equilibrium<F>(&mut self, field: F)
    where
        F: Fn(usize, usize, usize) -> (f64, [f64; 3]) + Sync,
    {
        for r in &mut self.regions {
            r.state.init_equilibrium(&field);
        }
    }

    /// Adds a full replica of `solid` to every region.
    pub fn add_solid(&mut self, solid: Solid) {
        for r in &mut self.regions {
            r.solids.push(solid.clone());
        }
    }

    pub fn set_ell(&mut self, ell: usize) {
        for r in &mut self.regions {
            for s in &mut r.solids {
                s.reorder(ell);
            }
        }
    }

    pub fn set_alpha(&mut self, alpha: usize) -> Result<()> {
        for r in &mut self.regions {
            r.state.set_alpha(alpha)?;
        }
        Ok(())
    }

    fn periodic_z(&self) -> bool {
        self.config.boundaries.is_periodic(2)
    }

    /// Refreshes all ghost planes from the current owned data.
    pub fn exchange_ghosts(&mut self) {
        let p = self.periodic_z();
        exchange_ghosts(&mut self.regions, p);
    }

    /// Advances `steps` steps. Reports are merged over regions. On divergence
    /// every region stops at the same step and the error is returned.
    pub fn run(&mut self, steps: u64) -> Result<Vec<StepReport>> {
        if self.regions.len() == 1 {
            let region = &mut self.regions[0];
            let mut out = Vec::with_capacity(steps as usize);
            for _ in 0..steps {
                let step = region.state.t;
                let mut clock = PhaseClock::new(region.timing.as_mut(), step);
                let moments = step_front(&mut region.state, &self.config, &mut clock)?;
                let ib = step_back(&mut region.state, &self.config, &mut region.solids, &mut clock);
                region.state.f.swap();
                region.state.t += 1;
                out.push(StepReport { step, moments, ib });
            }
            return Ok(out);
        }
        self.exchange_ghosts();
        let m = self.regions.len();
        let periodic = self.periodic_z();
        let (mut up_tx, mut up_rx, mut down_tx, mut down_rx) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for _ in 0..m {
            let (tx, rx) = channel();
            up_tx.push(tx);
            up_rx.push(Some(rx));
            let (tx, rx) = channel();
            down_tx.push(tx);
            down_rx.push(Some(rx));
        }
        let mut links: Vec<Links> = (0..m)
            .map(|r| {
                let has_above = periodic || r + 1 < m;
                let has_below = periodic || r > 0;
                Links {
                    to_above: has_above.then(|| up_tx[r].clone()),
                    to_below: has_below.then(|| down_tx[r].clone()),
                    from_below: if has_below { up_rx[(r + m - 1) % m].take() } else { None },
                    from_above: if has_above { down_rx[(r + 1) % m].take() } else { None },
                }
            })
            .collect();
        drop((up_tx, down_tx));

        let barrier = Barrier::new(m);
        let failed = AtomicBool::new(false);
        let failure: Mutex<Option<Error>> = Mutex::new(None);
        let config = &self.config;
        let per_region: Vec<Vec<(MomentStats, IbReport)>> = std::thread::scope(|sc| {
            let handles: Vec<_> = self
                .regions
                .iter_mut()
                .zip(links.drain(..))
                .map(|(region, link)| {
                    let (barrier, failed, failure) = (&barrier, &failed, &failure);
                    sc.spawn(move || {
                        let mut out = Vec::with_capacity(steps as usize);
                        for _ in 0..steps {
                            let step = region.state.t;
                            let mut clock = PhaseClock::new(region.timing.as_mut(), step);
                            let front = step_front(&mut region.state, config, &mut clock);
                            let moments = match front {
                                Ok(s) => Some(s),
                                Err(e) => {
                                    failed.store(true, Ordering::SeqCst);
                                    failure.lock().unwrap().get_or_insert(e);
                                    None
                                }
                            };
                            barrier.wait();
                            if failed.load(Ordering::SeqCst) {
                                break;
                            }
                            link.exchange(&mut region.state, read_moments);
                            clock.lap("exchange");
                            let ib = step_back(&mut region.state, config, &mut region.solids, &mut clock);
                            region.state.f.swap();
                            region.state.t += 1;
                            link.exchange(&mut region.state, read_dist);
                            clock.lap("exchange");
                            barrier.wait();
                            out.push((moments.unwrap(), ib));
                        }
                        out
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("region worker panicked")).collect()
        });
        if let Some(e) = failure.into_inner().unwrap() {
            return Err(e);
        }
        let t0 = self.t() - steps;
        Ok((0..steps as usize)
            .map(|s| {
                let mut moments = MomentStats {
                    mach_warnings: 0,
                    min_rho: f64::INFINITY,
                };
                let mut ib = IbReport::default();
                for (r, reps) in per_region.iter().enumerate() {
                    let (ms, is) = reps[s];
                    moments.mach_warnings += ms.mach_warnings;
                    moments.min_rho = moments.min_rho.min(ms.min_rho);
                    for a in 0..3 {
                        ib.force[a] += is.force[a];
                        ib.torque[a] += is.torque[a];
                    }
                    // every replica flags the same samples
                    if r == 0 {
                        ib.flagged = is.flagged;
                    }
                }
                StepReport {
                    step: t0 + s as u64,
                    moments,
                    ib,
                }
            })
            .collect())
    }

    /// Density and velocity over the whole grid, x fastest.
    pub fn fields(&self) -> (Vec<f64>, Vec<[f64; 3]>) {
        let mut rho = Vec::with_capacity(self.dims.len());
        let mut u = Vec::with_capacity(self.dims.len());
        for r in &self.regions {
            let (a, b) = r.state.fields();
            rho.extend(a);
            u.extend(b);
        }
        (rho, u)
    }

    /// Distributions over the whole grid in canonical node-major order.
    pub fn distributions(&self) -> Vec<f64> {
        self.regions.iter().flat_map(|r| r.state.owned_distributions()).collect()
    }

    /// Timing rows of all regions, phase names prefixed by `r<index>/`.
    pub fn timing(&self) -> TimingLog {
        let mut log = TimingLog::default();
        for (i, r) in self.regions.iter().enumerate() {
            if let Some(t) = &r.timing {
                for (p, s, sec) in &t.rows {
                    log.push(&format!("r{i}/{p}"), *s, *sec);
                }
            }
        }
        log
    }
}
