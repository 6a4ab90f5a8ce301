//! Time-dependent systems `x(t + 1_a) = F_a(t, x(t))` for `t >= t1`, and their
//! lift to autonomous systems on `{s >= t1} x M`.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::autonomous::{
    group_endpoints, AutonomousSystem, CompatStatus, Grid, Limits, PathReport, Trajectory,
};
use crate::error::{Error, Result};
use crate::extension::two_sided_inverse;
use crate::lattice::{
    box_points, box_volume, enumerate_monotone_paths, forward_deltas, MonotonePath, MultiIndex,
};
use crate::statespace::{maps_equal, Decided, Matrix, State, StateSpace, StepMap};

/// `c + sum_a sum_k c[a][k] (t^a)^(k+1)`: a polynomial in each time coordinate
/// separately, with integer coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct TimePoly {
    pub constant: BigInt,
    /// `axes[a - 1][k - 1]` multiplies `(t^a)^k`.
    pub axes: Vec<Vec<BigInt>>,
}

impl TimePoly {
    pub fn constant(c: impl Into<BigInt>) -> Self {
        Self {
            constant: c.into(),
            axes: Vec::new(),
        }
    }

    /// `c + sum_a linear[a] t^a`.
    pub fn linear(c: i64, linear: &[i64]) -> Self {
        Self {
            constant: c.into(),
            axes: linear.iter().map(|&v| vec![BigInt::from(v)]).collect(),
        }
    }

    pub fn eval(&self, t: &MultiIndex) -> BigInt {
        let mut acc = self.constant.clone();
        for (coeffs, &ta) in self.axes.iter().zip(t.coords()) {
            let ta = BigInt::from(ta);
            let mut power = ta.clone();
            for c in coeffs {
                acc += c * &power;
                power *= &ta;
            }
        }
        acc
    }

    pub fn is_constant(&self) -> bool {
        self.axes.iter().flatten().all(Zero::is_zero)
    }

    fn max_axis(&self) -> usize {
        self.axes.len()
    }
}

#[derive(Clone, Debug)]
pub enum TimedRule {
    /// `F(t, x) = G(x)`.
    Autonomous(StepMap),
    /// One table per time in `[lo, hi]`, row-major; undefined elsewhere.
    TablePerTime {
        lo: MultiIndex,
        hi: MultiIndex,
        tables: Vec<Vec<usize>>,
    },
    /// `a(t) x + b(t)` on Z.
    AffineTimed { a: TimePoly, b: TimePoly },
    /// `A(t) x` on Z^d or Q^d.
    MatrixTimed { entries: Vec<Vec<TimePoly>> },
}

/// One time-dependent map `F_a`.
#[derive(Clone, Debug)]
pub struct TimedStepMap {
    domain: StateSpace,
    rule: TimedRule,
}

impl TimedStepMap {
    pub fn autonomous(map: StepMap) -> Self {
        Self {
            domain: map.domain().clone(),
            rule: TimedRule::Autonomous(map),
        }
    }

    pub fn table_per_time(
        n: usize,
        lo: MultiIndex,
        hi: MultiIndex,
        tables: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let domain = StateSpace::finite(n)?;
        let volume = box_volume(&lo, &hi)?;
        if volume != Some(tables.len() as u64) {
            return Err(Error::InvalidMap(format!(
                "window {lo}..{hi} needs {} tables, got {}",
                volume.map_or_else(|| "too many".into(), |v| v.to_string()),
                tables.len()
            )));
        }
        for t in &tables {
            StepMap::table(n, t.clone())?;
        }
        Ok(Self {
            domain,
            rule: TimedRule::TablePerTime { lo, hi, tables },
        })
    }

    pub fn affine_timed(a: TimePoly, b: TimePoly) -> Self {
        Self {
            domain: StateSpace::IntegerLine,
            rule: TimedRule::AffineTimed { a, b },
        }
    }

    /// `domain` must be `IntegerVector(d)` or `RationalVector(d)` with `d` matching `entries`.
    pub fn matrix_timed(domain: StateSpace, entries: Vec<Vec<TimePoly>>) -> Result<Self> {
        let d = match domain {
            StateSpace::IntegerVector(d) | StateSpace::RationalVector(d) => d,
            _ => {
                return Err(Error::InvalidMap(format!(
                    "time-dependent matrices act on integer or rational vectors, not {domain}"
                )))
            }
        };
        if entries.len() != d || entries.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidMap(format!("matrix must be {d}x{d}")));
        }
        Ok(Self {
            domain,
            rule: TimedRule::MatrixTimed { entries },
        })
    }

    pub fn domain(&self) -> &StateSpace {
        &self.domain
    }

    pub fn rule(&self) -> &TimedRule {
        &self.rule
    }

    pub fn is_time_independent(&self) -> bool {
        match &self.rule {
            TimedRule::Autonomous(_) => true,
            TimedRule::TablePerTime { .. } => false,
            TimedRule::AffineTimed { a, b } => a.is_constant() && b.is_constant(),
            TimedRule::MatrixTimed { entries } => {
                entries.iter().flatten().all(TimePoly::is_constant)
            }
        }
    }

    /// Time window of a tabulated rule.
    pub fn window(&self) -> Option<(&MultiIndex, &MultiIndex)> {
        match &self.rule {
            TimedRule::TablePerTime { lo, hi, .. } => Some((lo, hi)),
            _ => None,
        }
    }

    fn time_dim(&self) -> Option<usize> {
        match &self.rule {
            TimedRule::Autonomous(_) => None,
            TimedRule::TablePerTime { lo, .. } => Some(lo.dim()),
            TimedRule::AffineTimed { a, b } => Some(a.max_axis().max(b.max_axis())),
            TimedRule::MatrixTimed { entries } => {
                entries.iter().flatten().map(TimePoly::max_axis).max()
            }
        }
    }

    fn table_at(&self, t: &MultiIndex) -> Result<&[usize]> {
        let TimedRule::TablePerTime { lo, hi, tables } = &self.rule else {
            unreachable!()
        };
        if t.dim() != lo.dim() || !lo.leq(t)? || !t.leq(hi)? {
            return Err(Error::TimeOutsideWindow(t.clone()));
        }
        let mut idx = 0usize;
        for ((c, l), h) in t.coords().iter().zip(lo.coords()).zip(hi.coords()) {
            idx = idx * (h - l + 1) as usize + (c - l) as usize;
        }
        Ok(&tables[idx])
    }

    /// The frozen map `F(t, .)`.
    pub fn at(&self, t: &MultiIndex) -> Result<StepMap> {
        Ok(match &self.rule {
            TimedRule::Autonomous(g) => g.clone(),
            TimedRule::TablePerTime { .. } => StepMap::from_table(self.table_at(t)?.to_vec())?,
            TimedRule::AffineTimed { a, b } => StepMap::affine_int(a.eval(t), b.eval(t)),
            TimedRule::MatrixTimed { entries } => {
                let rows = entries
                    .iter()
                    .map(|r| {
                        r.iter()
                            .map(|p| BigRational::from_integer(p.eval(t)))
                            .collect()
                    })
                    .collect();
                let m = Matrix::from_rows((), rows).expect("validated square");
                match self.domain {
                    StateSpace::IntegerVector(_) => StepMap::matrix_integer(m)?,
                    _ => StepMap::matrix_rational(m),
                }
            }
        })
    }

    /// `F(t, x)`.
    pub fn apply_at(&self, t: &MultiIndex, x: &State) -> Result<State> {
        match &self.rule {
            TimedRule::TablePerTime { .. } => {
                self.domain.check(x)?;
                let table = self.table_at(t)?;
                Ok(State::Label(table[x.label().expect("checked")]))
            }
            TimedRule::Autonomous(g) => g.apply(x),
            _ => self.at(t)?.apply(x),
        }
    }
}

/// `(a, b, t, x)` with `F_a(t + 1_b, F_b(t, x)) != F_b(t + 1_a, F_a(t, x))`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimedWitness {
    pub alpha: usize,
    pub beta: usize,
    pub time: MultiIndex,
    pub state: State,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimedCompatibilityReport {
    pub status: CompatStatus,
    pub witnesses: Vec<TimedWitness>,
    pub checked_pairs: usize,
    /// `(pair, time)` combinations compared.
    pub checked_times: usize,
    /// `(pair, time)` combinations skipped because a table was undefined there.
    pub skipped_times: usize,
    /// Weakest decision mode in the state variable.
    pub decided: Option<Decided>,
    /// Whether the window covers every time at which the rules are defined.
    pub time_complete: bool,
}

/// `F_1, ..., F_m` with domain threshold `t1`.
#[derive(Clone, Debug)]
pub struct NonAutonomousSystem {
    t1: MultiIndex,
    maps: Vec<Arc<TimedStepMap>>,
    limits: Limits,
}

impl NonAutonomousSystem {
    pub fn new(t1: MultiIndex, maps: Vec<TimedStepMap>) -> Result<Self> {
        let m = maps.len();
        let first = maps.first().ok_or(Error::ZeroDimension)?;
        if t1.dim() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: t1.dim(),
            });
        }
        for f in &maps {
            if f.domain() != first.domain() {
                return Err(Error::DomainMismatch {
                    left: first.domain().to_string(),
                    right: f.domain().to_string(),
                });
            }
            match (&f.rule, f.time_dim()) {
                (TimedRule::TablePerTime { .. }, Some(d)) if d != m => {
                    return Err(Error::DimensionMismatch {
                        expected: m,
                        found: d,
                    })
                }
                (_, Some(d)) if d > m => {
                    return Err(Error::InvalidMap(format!(
                        "time polynomial uses axis {d} but m = {m}"
                    )))
                }
                _ => {}
            }
        }
        Ok(Self {
            t1,
            maps: maps.into_iter().map(Arc::new).collect(),
            limits: Limits::default(),
        })
    }

    pub fn with_limits(mut self, limits: Limits) -> Self {
        self.limits = limits;
        self
    }

    pub fn dim(&self) -> usize {
        self.maps.len()
    }

    pub fn t1(&self) -> &MultiIndex {
        &self.t1
    }

    pub fn space(&self) -> &StateSpace {
        self.maps[0].domain()
    }

    pub fn maps(&self) -> &[Arc<TimedStepMap>] {
        &self.maps
    }

    pub fn limits(&self) -> &Limits {
        &self.limits
    }

    fn check_threshold(&self, t: &MultiIndex) -> Result<()> {
        if t.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: t.dim(),
            });
        }
        if !self.t1.leq(t)? {
            return Err(Error::BelowThreshold {
                time: t.clone(),
                t1: self.t1.clone(),
            });
        }
        Ok(())
    }

    /// `G_a(s, x) = (s + 1_a, F_a(s, x))` on `{s >= t1} x M`.
    pub fn lift(&self) -> AutonomousSystem {
        let maps = self
            .maps
            .iter()
            .enumerate()
            .map(|(i, f)| StepMap::lifted(self.t1.clone(), f.clone(), i + 1))
            .collect();
        AutonomousSystem::new(maps)
            .expect("lifted maps share the augmented domain")
            .with_limits(self.limits)
    }

    /// Checks the timed commutation identity at every `t` in `[lo, hi]`, for all
    /// states (finite spaces), symbolically (closed families) or on `sample`.
    pub fn check_compatibility_timed(
        &self,
        lo: &MultiIndex,
        hi: &MultiIndex,
        sample: Option<&[State]>,
    ) -> Result<TimedCompatibilityReport> {
        self.check_threshold(lo)?;
        forward_deltas(lo, hi)?;
        match box_volume(lo, hi)? {
            Some(v) if v <= self.limits.volume_cap => {}
            v => {
                return Err(Error::VolumeCapExceeded {
                    volume: v.map_or_else(|| "overflow".into(), |v| v.to_string()),
                    cap: self.limits.volume_cap,
                })
            }
        }
        let times = box_points(lo, hi)?;
        let m = self.dim();
        let mut witnesses = Vec::new();
        let mut decided: Option<Decided> = None;
        let (mut checked_pairs, mut checked_times, mut skipped_times) = (0, 0, 0);
        for alpha in 1..=m {
            for beta in alpha + 1..=m {
                checked_pairs += 1;
                let fa = &self.maps[alpha - 1];
                let fb = &self.maps[beta - 1];
                for t in &times {
                    let frozen = (|| -> Result<_> {
                        Ok((
                            fa.at(&t.step(beta, 1)?)?,
                            fb.at(t)?,
                            fb.at(&t.step(alpha, 1)?)?,
                            fa.at(t)?,
                        ))
                    })();
                    let (fa_next, fb_now, fb_next, fa_now) = match frozen {
                        Ok(v) => v,
                        Err(Error::TimeOutsideWindow(_)) => {
                            skipped_times += 1;
                            continue;
                        }
                        Err(e) => return Err(e),
                    };
                    let eq = maps_equal(
                        &fa_next.compose(&fb_now)?,
                        &fb_next.compose(&fa_now)?,
                        sample,
                    )?;
                    checked_times += 1;
                    decided = decided.max(Some(eq.decided));
                    if let Some(state) = eq.witness {
                        witnesses.push(TimedWitness {
                            alpha,
                            beta,
                            time: t.clone(),
                            state,
                        });
                        break;
                    }
                }
            }
        }
        let time_complete = self.maps.iter().all(|f| match f.window() {
            Some((wlo, whi)) => lo.leq(wlo).unwrap_or(false) && whi.leq(hi).unwrap_or(false),
            None => f.is_time_independent(),
        });
        let status = if !witnesses.is_empty() {
            CompatStatus::Incompatible
        } else if !time_complete || decided == Some(Decided::Sampled) {
            CompatStatus::SampledCompatible
        } else {
            CompatStatus::Compatible
        };
        Ok(TimedCompatibilityReport {
            status,
            witnesses,
            checked_pairs,
            checked_times,
            skipped_times,
            decided,
            time_complete,
        })
    }

    /// Applies the labeled maps along `path`, each at the current lattice point.
    pub fn walk_path(&self, x0: &State, path: &MonotonePath) -> Result<Trajectory> {
        self.check_threshold(&path.start)?;
        self.space().check(x0)?;
        let mut t = path.start.clone();
        let mut x = x0.clone();
        let mut points = Vec::with_capacity(path.len() + 1);
        points.push((t.clone(), x.clone()));
        for &axis in &path.steps {
            crate::lattice::check_axis(axis, self.dim())?;
            x = self.maps[axis - 1].apply_at(&t, &x)?;
            t = t.step(axis, 1)?;
            points.push((t.clone(), x.clone()));
        }
        Ok(Trajectory { points })
    }

    /// `x(t)` along the axis-1-first path from `t0`.
    pub fn eval_timed(&self, t0: &MultiIndex, x0: &State, t: &MultiIndex) -> Result<State> {
        Ok(self.eval_timed_trajectory(t0, x0, t)?.last().1.clone())
    }

    pub fn eval_timed_trajectory(
        &self,
        t0: &MultiIndex,
        x0: &State,
        t: &MultiIndex,
    ) -> Result<Trajectory> {
        self.check_threshold(t0)?;
        self.walk_path(x0, &MonotonePath::canonical(t0, t)?)
    }

    /// `x(t)` for any `t >= t1`: forward steps first, then backward steps through
    /// `F_a(s, .)^-1`, each frozen map checked for bijectivity when visited.
    pub fn eval_timed_anywhere(
        &self,
        t0: &MultiIndex,
        x0: &State,
        t: &MultiIndex,
    ) -> Result<State> {
        self.check_threshold(t0)?;
        self.check_threshold(t)?;
        self.space().check(x0)?;
        let delta = t.checked_sub(t0)?;
        let mut s = t0.clone();
        let mut x = x0.clone();
        for axis in 1..=self.dim() {
            for _ in 0..delta.coords()[axis - 1].max(0) {
                x = self.maps[axis - 1].apply_at(&s, &x)?;
                s = s.step(axis, 1)?;
            }
        }
        for axis in 1..=self.dim() {
            for _ in 0..(-delta.coords()[axis - 1]).max(0) {
                s = s.step(axis, -1)?;
                let inverse = two_sided_inverse(&self.maps[axis - 1].at(&s)?)?;
                x = inverse.apply(&x)?;
            }
        }
        Ok(x)
    }

    /// Walks every monotone path and compares endpoints with [`Self::eval_timed`].
    pub fn path_independence_timed(
        &self,
        t0: &MultiIndex,
        x0: &State,
        t: &MultiIndex,
        cap: usize,
    ) -> Result<PathReport> {
        let reference = self.eval_timed(t0, x0, t)?;
        let paths = enumerate_monotone_paths(t0, t, cap)?;
        let ends = paths
            .into_iter()
            .map(|p| {
                let end = self.walk_path(x0, &p)?.last().1.clone();
                Ok((p, end))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(group_endpoints(ends, reference))
    }

    /// Every state in `[t0, corner]`, filled by one sweep and spot-checked at the corners.
    pub fn eval_box_timed(&self, t0: &MultiIndex, x0: &State, corner: &MultiIndex) -> Result<Grid> {
        self.check_threshold(t0)?;
        forward_deltas(t0, corner)?;
        self.space().check(x0)?;
        let grid = Grid::fill(t0, corner, x0, self.limits.volume_cap, |axis, prev, x| {
            self.maps[axis - 1].apply_at(prev, x)
        })?;
        for c in [t0, corner] {
            if grid.get(c) != Some(&self.eval_timed(t0, x0, c)?) {
                return Err(Error::Inconsistent(format!(
                    "grid value at {c} disagrees with the canonical walk"
                )));
            }
        }
        Ok(grid)
    }
}

/// Walks the lifted system from `(s0, x0)` at lattice point `t0` and checks
/// that the time part equals `t - t0 + s0` at every visited `t`.
pub fn verify_time_component(
    sys: &NonAutonomousSystem,
    t0: &MultiIndex,
    s0: &MultiIndex,
    x0: &State,
    steps: &[usize],
) -> Result<bool> {
    sys.check_threshold(s0)?;
    let path = MonotonePath::new(t0.clone(), steps.to_vec())?;
    let lifted = sys.lift();
    let y0 = State::Augmented(s0.clone(), Box::new(x0.clone()));
    let traj = lifted.walk_path(&y0, &path)?;
    for (t, y) in &traj.points {
        let State::Augmented(s, _) = y else {
            return Ok(false);
        };
        if *s != t.checked_sub(t0)?.checked_add(s0)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Projects a lifted trajectory started with `s0 = t0` onto the state part.
pub fn unlift_solution(lifted: &Trajectory) -> Result<Trajectory> {
    let points = lifted
        .points
        .iter()
        .map(|(t, y)| match y {
            State::Augmented(s, x) if s == t => Ok((t.clone(), (**x).clone())),
            State::Augmented(s, _) => Err(Error::TimeComponentMismatch {
                at: t.clone(),
                expected: t.clone(),
                found: s.clone(),
            }),
            other => Err(Error::Inconsistent(format!(
                "{other} is not an augmented state"
            ))),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory { points })
}
