//! Autonomous systems `x(t + 1_a) = G_a(x(t))`.
//!
//! The closed form applies `G_m^(d_m)` first and `G_1^(d_1)` last. Path walks
//! and the grid fill are independent of that formula and serve as its oracle.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::lattice::{
    box_points, box_volume, enumerate_monotone_paths, forward_deltas, MonotonePath, MultiIndex,
    DEFAULT_PATH_CAP,
};
use crate::statespace::{
    maps_equal, Decided, ExponentCaps, PowerMethod, Rule, State, StateSpace, StepMap, Translate,
};

/// Resource bounds shared by every evaluator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub path_cap: usize,
    pub volume_cap: u64,
    pub exponents: ExponentCaps,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            path_cap: DEFAULT_PATH_CAP,
            volume_cap: 100_000,
            exponents: ExponentCaps::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CompatStatus {
    Compatible,
    Incompatible,
    /// No violation found, but at least one pair was only checked on a sample.
    SampledCompatible,
}

impl CompatStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CompatStatus::Compatible => "compatible",
            CompatStatus::Incompatible => "incompatible",
            CompatStatus::SampledCompatible => "sampled_compatible",
        }
    }
}

/// Whether the monoid-action axioms behind translate rules were checked.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActionAxioms {
    /// No translate rules in the system.
    NotApplicable,
    /// Finite tables, validated exhaustively at construction.
    Verified,
    /// Built-in infinite monoids (integers under +, positive rationals under *).
    Assumed,
}

impl ActionAxioms {
    pub fn as_str(self) -> &'static str {
        match self {
            ActionAxioms::NotApplicable => "not_applicable",
            ActionAxioms::Verified => "verified",
            ActionAxioms::Assumed => "assumed",
        }
    }
}

/// `G_alpha(G_beta(state)) != G_beta(G_alpha(state))`, axes 1-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub alpha: usize,
    pub beta: usize,
    pub state: State,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompatibilityReport {
    pub status: CompatStatus,
    pub witnesses: Vec<Witness>,
    pub checked_pairs: usize,
    /// Weakest decision mode over all pairs; `None` when `m = 1`.
    pub decided: Option<Decided>,
    pub action_axioms: ActionAxioms,
}

/// Evaluation options that relax preconditions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EvalOptions {
    /// Evaluate the closed form even when the system is incompatible.
    pub unsafe_incompatible: bool,
}

/// One factor `G_axis^(exponent)` of the closed form and how it was computed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RouteStep {
    pub axis: usize,
    pub exponent: i64,
    pub method: PowerMethod,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Evaluation {
    pub state: State,
    pub status: CompatStatus,
    pub route: Vec<RouteStep>,
    pub unsafe_override: bool,
}

/// Ordered `(t, x(t))` pairs along a path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trajectory {
    pub points: Vec<(MultiIndex, State)>,
}

impl Trajectory {
    pub fn last(&self) -> &(MultiIndex, State) {
        self.points.last().expect("trajectories are nonempty")
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Paths that reached one endpoint value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EndpointGroup {
    pub state: State,
    pub count: usize,
    pub exemplar: MonotonePath,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathReport {
    pub count: usize,
    /// All paths end in one state and it equals `reference`.
    pub agree: bool,
    /// Value from the non-path evaluator (closed form or canonical walk).
    pub reference: State,
    /// Distinct endpoints in order of first appearance.
    pub groups: Vec<EndpointGroup>,
}

pub(crate) fn group_endpoints(
    ends: impl IntoIterator<Item = (MonotonePath, State)>,
    reference: State,
) -> PathReport {
    let mut groups: Vec<EndpointGroup> = Vec::new();
    let mut count = 0;
    for (path, state) in ends {
        count += 1;
        match groups.iter_mut().find(|g| g.state == state) {
            Some(g) => g.count += 1,
            None => groups.push(EndpointGroup {
                state,
                count: 1,
                exemplar: path,
            }),
        }
    }
    let agree = groups.len() == 1 && groups[0].state == reference;
    PathReport {
        count,
        agree,
        reference,
        groups,
    }
}

/// States over the box `[lo, hi]`, row-major with axis 1 slowest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grid {
    pub lo: MultiIndex,
    pub hi: MultiIndex,
    pub states: Vec<State>,
}

impl Grid {
    fn strides(lo: &MultiIndex, hi: &MultiIndex) -> Vec<usize> {
        let extents: Vec<usize> = lo
            .coords()
            .iter()
            .zip(hi.coords())
            .map(|(a, b)| (b - a + 1) as usize)
            .collect();
        let mut strides = vec![1; extents.len()];
        for i in (0..extents.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * extents[i + 1];
        }
        strides
    }

    pub fn get(&self, t: &MultiIndex) -> Option<&State> {
        if !self.lo.leq(t).ok()? || !t.leq(&self.hi).ok()? {
            return None;
        }
        let strides = Self::strides(&self.lo, &self.hi);
        let idx: usize = t
            .coords()
            .iter()
            .zip(self.lo.coords())
            .zip(&strides)
            .map(|((c, l), s)| (c - l) as usize * s)
            .sum();
        self.states.get(idx)
    }

    /// `(t, x(t))` in row-major order.
    pub fn cells(&self) -> Result<Vec<(MultiIndex, State)>> {
        Ok(box_points(&self.lo, &self.hi)?
            .into_iter()
            .zip(self.states.iter().cloned())
            .collect())
    }

    /// Fills the box by one sweep: each cell comes from its predecessor along
    /// the first axis on which it is above `lo`.
    pub(crate) fn fill(
        lo: &MultiIndex,
        hi: &MultiIndex,
        x0: &State,
        volume_cap: u64,
        mut step: impl FnMut(usize, &MultiIndex, &State) -> Result<State>,
    ) -> Result<Grid> {
        let volume = box_volume(lo, hi)?;
        match volume {
            Some(v) if v <= volume_cap => {}
            _ => {
                return Err(Error::VolumeCapExceeded {
                    volume: volume.map_or_else(|| "overflow".into(), |v| v.to_string()),
                    cap: volume_cap,
                })
            }
        }
        let strides = Self::strides(lo, hi);
        let points = box_points(lo, hi)?;
        let mut states: Vec<State> = Vec::with_capacity(points.len());
        for (idx, t) in points.iter().enumerate() {
            let axis = t.coords().iter().zip(lo.coords()).position(|(c, l)| c > l);
            let x = match axis {
                None => x0.clone(),
                Some(a) => {
                    let prev = &states[idx - strides[a]];
                    step(a + 1, &t.step(a + 1, -1)?, prev)?
                }
            };
            states.push(x);
        }
        Ok(Grid {
            lo: lo.clone(),
            hi: hi.clone(),
            states,
        })
    }
}

/// The family `G_1, ..., G_m` over one state space.
#[derive(Clone, Debug)]
pub struct AutonomousSystem {
    maps: Vec<StepMap>,
    limits: Limits,
    sample: Option<Vec<State>>,
    compat: OnceLock<CompatibilityReport>,
}

impl AutonomousSystem {
    pub fn new(maps: Vec<StepMap>) -> Result<Self> {
        let first = maps.first().ok_or(Error::ZeroDimension)?;
        if let Some(bad) = maps.iter().find(|g| g.domain() != first.domain()) {
            return Err(Error::DomainMismatch {
                left: first.domain().to_string(),
                right: bad.domain().to_string(),
            });
        }
        Ok(Self {
            maps,
            limits: Limits::default(),
            sample: None,
            compat: OnceLock::new(),
        })
    }

    pub fn with_limits(mut self, limits: Limits) -> Self {
        self.limits = limits;
        self
    }

    /// States used when equality cannot be decided exhaustively or symbolically.
    pub fn with_sample(mut self, sample: Vec<State>) -> Self {
        self.sample = Some(sample);
        self.compat = OnceLock::new();
        self
    }

    pub fn dim(&self) -> usize {
        self.maps.len()
    }

    pub fn maps(&self) -> &[StepMap] {
        &self.maps
    }

    /// `G_axis`, 1-based.
    pub fn map(&self, axis: usize) -> Result<&StepMap> {
        crate::lattice::check_axis(axis, self.dim())?;
        Ok(&self.maps[axis - 1])
    }

    pub fn space(&self) -> &StateSpace {
        self.maps[0].domain()
    }

    pub fn limits(&self) -> &Limits {
        &self.limits
    }

    fn check_dim(&self, t: &MultiIndex) -> Result<()> {
        if t.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: t.dim(),
            });
        }
        Ok(())
    }

    /// Compatibility under the system's own sample, computed once.
    pub fn compatibility(&self) -> Result<&CompatibilityReport> {
        if let Some(r) = self.compat.get() {
            return Ok(r);
        }
        let report = check_compatibility(self, self.sample.as_deref())?;
        Ok(self.compat.get_or_init(|| report))
    }

    /// `x(t)` from `x(t0) = x0` by the closed form; refuses incompatible systems.
    pub fn eval_forward(&self, t0: &MultiIndex, x0: &State, t: &MultiIndex) -> Result<State> {
        Ok(self
            .eval_forward_traced(t0, x0, t, EvalOptions::default())?
            .state)
    }

    pub fn eval_forward_traced(
        &self,
        t0: &MultiIndex,
        x0: &State,
        t: &MultiIndex,
        opts: EvalOptions,
    ) -> Result<Evaluation> {
        self.check_dim(t0)?;
        let deltas = forward_deltas(t0, t)?;
        let status = self.gate(opts)?;
        let mut state = x0.clone();
        self.space().check(&state)?;
        let mut route = Vec::with_capacity(self.dim());
        for axis in (1..=self.dim()).rev() {
            let n = deltas[axis - 1];
            let (next, method) =
                self.maps[axis - 1].iterate_traced(n, &state, &self.limits.exponents)?;
            state = next;
            route.push(RouteStep {
                axis,
                exponent: n as i64,
                method,
            });
        }
        route.reverse();
        Ok(Evaluation {
            state,
            status,
            route,
            unsafe_override: status == CompatStatus::Incompatible,
        })
    }

    /// Compatibility status, or an error if it forbids evaluation under `opts`.
    pub(crate) fn gate(&self, opts: EvalOptions) -> Result<CompatStatus> {
        let report = self.compatibility()?;
        if report.status == CompatStatus::Incompatible && !opts.unsafe_incompatible {
            let w = &report.witnesses[0];
            return Err(Error::Incompatible {
                alpha: w.alpha,
                beta: w.beta,
                state: w.state.to_string(),
            });
        }
        Ok(report.status)
    }

    /// Applies the labeled maps one step at a time; no compatibility needed.
    pub fn walk_path(&self, x0: &State, path: &MonotonePath) -> Result<Trajectory> {
        self.check_dim(&path.start)?;
        self.space().check(x0)?;
        let mut t = path.start.clone();
        let mut x = x0.clone();
        let mut points = Vec::with_capacity(path.len() + 1);
        points.push((t.clone(), x.clone()));
        for &axis in &path.steps {
            x = self.map(axis)?.apply(&x)?;
            t = t.step(axis, 1)?;
            points.push((t.clone(), x.clone()));
        }
        Ok(Trajectory { points })
    }

    /// Walks every monotone path from `t0` to `t` and compares the endpoints
    /// with the closed form (computed even for incompatible systems).
    pub fn path_independence_check(
        &self,
        t0: &MultiIndex,
        x0: &State,
        t: &MultiIndex,
        cap: usize,
    ) -> Result<PathReport> {
        self.check_dim(t0)?;
        let paths = enumerate_monotone_paths(t0, t, cap)?;
        let reference = self
            .eval_forward_traced(
                t0,
                x0,
                t,
                EvalOptions {
                    unsafe_incompatible: true,
                },
            )?
            .state;
        let ends = paths
            .into_iter()
            .map(|p| {
                let end = self.walk_path(x0, &p)?.last().1.clone();
                Ok((p, end))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(group_endpoints(ends, reference))
    }

    /// Every state in the box `[t0, corner]`, filled by one sweep and
    /// spot-checked against the closed form at the box corners.
    pub fn eval_box(&self, t0: &MultiIndex, x0: &State, corner: &MultiIndex) -> Result<Grid> {
        self.eval_box_with(t0, x0, corner, EvalOptions::default())
    }

    pub fn eval_box_with(
        &self,
        t0: &MultiIndex,
        x0: &State,
        corner: &MultiIndex,
        opts: EvalOptions,
    ) -> Result<Grid> {
        self.check_dim(t0)?;
        forward_deltas(t0, corner)?;
        self.gate(opts)?;
        self.space().check(x0)?;
        let grid = Grid::fill(t0, corner, x0, self.limits.volume_cap, |axis, _, x| {
            self.maps[axis - 1].apply(x)
        })?;
        if self.compatibility()?.status != CompatStatus::Incompatible {
            let eval_opts = EvalOptions {
                unsafe_incompatible: true,
            };
            for c in box_corners(t0, corner)? {
                let expected = self.eval_forward_traced(t0, x0, &c, eval_opts)?.state;
                if grid.get(&c) != Some(&expected) {
                    return Err(Error::Inconsistent(format!(
                        "grid value at {c} disagrees with the closed form"
                    )));
                }
            }
        }
        Ok(grid)
    }
}

/// The `2^m` vertices of `[lo, hi]` (only `lo` and `hi` when `m > 12`).
fn box_corners(lo: &MultiIndex, hi: &MultiIndex) -> Result<Vec<MultiIndex>> {
    let m = lo.dim();
    if m > 12 {
        return Ok(vec![lo.clone(), hi.clone()]);
    }
    (0u32..1 << m)
        .map(|mask| {
            MultiIndex::new(
                (0..m)
                    .map(|i| {
                        if mask & (1 << i) != 0 {
                            hi.coords()[i]
                        } else {
                            lo.coords()[i]
                        }
                    })
                    .collect(),
            )
        })
        .collect()
}

fn action_axioms(maps: &[StepMap]) -> ActionAxioms {
    let mut out = ActionAxioms::NotApplicable;
    for g in maps {
        match g.rule() {
            Rule::MonoidTranslate(Translate::Finite { .. }) => {
                if out == ActionAxioms::NotApplicable {
                    out = ActionAxioms::Verified;
                }
            }
            Rule::MonoidTranslate(_) => out = ActionAxioms::Assumed,
            _ => {}
        }
    }
    out
}

/// Checks `G_a o G_b = G_b o G_a` for every pair `a < b` in lexicographic order,
/// recording the first witness per failing pair.
pub fn check_compatibility(
    sys: &AutonomousSystem,
    sample: Option<&[State]>,
) -> Result<CompatibilityReport> {
    let m = sys.dim();
    let mut witnesses = Vec::new();
    let mut decided: Option<Decided> = None;
    let mut checked_pairs = 0;
    for alpha in 1..=m {
        for beta in alpha + 1..=m {
            let ga = &sys.maps[alpha - 1];
            let gb = &sys.maps[beta - 1];
            let eq = maps_equal(&ga.compose(gb)?, &gb.compose(ga)?, sample)?;
            checked_pairs += 1;
            decided = decided.max(Some(eq.decided));
            if let Some(state) = eq.witness {
                witnesses.push(Witness { alpha, beta, state });
            }
        }
    }
    let status = if !witnesses.is_empty() {
        CompatStatus::Incompatible
    } else if decided == Some(Decided::Sampled) {
        CompatStatus::SampledCompatible
    } else {
        CompatStatus::Compatible
    };
    Ok(CompatibilityReport {
        status,
        witnesses,
        checked_pairs,
        decided,
        action_axioms: action_axioms(&sys.maps),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statespace::Matrix;
    use proptest::prelude::*;

    fn mi(c: &[i64]) -> MultiIndex {
        MultiIndex::new(c.to_vec()).unwrap()
    }

    fn additive(a1: i64, a2: i64) -> AutonomousSystem {
        AutonomousSystem::new(vec![StepMap::translate_int(a1), StepMap::translate_int(a2)]).unwrap()
    }

    fn unitriangular(k: i64) -> StepMap {
        StepMap::matrix_rational(Matrix::from_integer_rows(&[vec![1, k], vec![0, 1]]).unwrap())
    }

    #[test]
    fn compatibility_examples() {
        let id = StepMap::from_table(vec![0, 1, 2]).unwrap();
        let sys = AutonomousSystem::new(vec![id.clone(), id]).unwrap();
        let r = sys.compatibility().unwrap();
        assert_eq!(r.status, CompatStatus::Compatible);
        assert_eq!(r.checked_pairs, 1);

        let sys = AutonomousSystem::new(vec![StepMap::affine_int(1, 1), StepMap::affine_int(2, 0)])
            .unwrap();
        let r = sys.compatibility().unwrap();
        assert_eq!(r.status, CompatStatus::Incompatible);
        assert_eq!(
            r.witnesses,
            vec![Witness {
                alpha: 1,
                beta: 2,
                state: State::int(0)
            }]
        );
        assert_eq!(r.decided, Some(Decided::Symbolic));

        let sys = AutonomousSystem::new(vec![unitriangular(1), unitriangular(2)]).unwrap();
        assert_eq!(
            sys.compatibility().unwrap().status,
            CompatStatus::Compatible
        );
    }

    #[test]
    fn eval_forward_examples() {
        let sys = additive(2, 3);
        let t0 = mi(&[0, 0]);
        assert_eq!(
            sys.eval_forward(&t0, &State::int(1), &t0).unwrap(),
            State::int(1)
        );
        assert_eq!(
            sys.eval_forward(&t0, &State::int(1), &mi(&[2, 3])).unwrap(),
            State::int(14)
        );

        let g = StepMap::from_table(vec![1, 2, 0]).unwrap();
        let sys = AutonomousSystem::new(vec![g.clone(), g]).unwrap();
        assert_eq!(
            sys.eval_forward(&t0, &State::Label(0), &mi(&[1, 2]))
                .unwrap(),
            State::Label(0)
        );
    }

    #[test]
    fn eval_forward_refuses_incompatible_without_override() {
        let sys = AutonomousSystem::new(vec![StepMap::affine_int(1, 1), StepMap::affine_int(2, 0)])
            .unwrap();
        let t0 = mi(&[0, 0]);
        assert!(matches!(
            sys.eval_forward(&t0, &State::int(0), &mi(&[1, 1])),
            Err(Error::Incompatible { .. })
        ));
        let ev = sys
            .eval_forward_traced(
                &t0,
                &State::int(0),
                &mi(&[1, 1]),
                EvalOptions {
                    unsafe_incompatible: true,
                },
            )
            .unwrap();
        assert!(ev.unsafe_override);
        // G_1(G_2(0)) = 0 + 1
        assert_eq!(ev.state, State::int(1));
    }

    #[test]
    fn eval_forward_rejects_backward_target() {
        let sys = additive(1, 1);
        assert!(matches!(
            sys.eval_forward(&mi(&[0, 0]), &State::int(0), &mi(&[-1, 0])),
            Err(Error::NotComparable { .. })
        ));
    }

    #[test]
    fn walk_path_examples() {
        let sys = additive(2, 3);
        let t0 = mi(&[0, 0]);
        let empty = MonotonePath::new(t0.clone(), vec![]).unwrap();
        assert_eq!(sys.walk_path(&State::int(0), &empty).unwrap().len(), 1);
        let tr = sys
            .walk_path(
                &State::int(0),
                &MonotonePath::new(t0.clone(), vec![1, 2]).unwrap(),
            )
            .unwrap();
        let states: Vec<_> = tr.points.iter().map(|(_, x)| x.clone()).collect();
        assert_eq!(states, vec![State::int(0), State::int(2), State::int(5)]);
        let other = sys
            .walk_path(&State::int(0), &MonotonePath::new(t0, vec![2, 1]).unwrap())
            .unwrap();
        assert_eq!(other.last().1, State::int(5));
    }

    #[test]
    fn path_independence_examples() {
        let sys = additive(2, 3);
        let t0 = mi(&[0, 0]);
        let r = sys
            .path_independence_check(&t0, &State::int(1), &mi(&[2, 2]), 100)
            .unwrap();
        assert!(r.agree);
        assert_eq!(r.count, 6);

        let bad = AutonomousSystem::new(vec![StepMap::affine_int(1, 1), StepMap::affine_int(2, 0)])
            .unwrap();
        let r = bad
            .path_independence_check(&t0, &State::int(0), &mi(&[1, 1]), 100)
            .unwrap();
        assert!(!r.agree);
        let ends: Vec<_> = r.groups.iter().map(|g| g.state.clone()).collect();
        // [1,2]: 2*(0+1) = 2; [2,1]: 2*0 + 1 = 1
        assert_eq!(ends, vec![State::int(2), State::int(1)]);

        let r = bad
            .path_independence_check(&t0, &State::int(0), &t0, 100)
            .unwrap();
        assert!(r.agree);
        assert_eq!(r.count, 1);
    }

    #[test]
    fn eval_box_examples() {
        let sys = additive(2, 3);
        let t0 = mi(&[0, 0]);
        let g = sys.eval_box(&t0, &State::int(1), &t0).unwrap();
        assert_eq!(g.states, vec![State::int(1)]);

        let g = sys.eval_box(&t0, &State::int(1), &mi(&[1, 1])).unwrap();
        assert_eq!(g.get(&mi(&[0, 0])), Some(&State::int(1)));
        assert_eq!(g.get(&mi(&[1, 0])), Some(&State::int(3)));
        assert_eq!(g.get(&mi(&[0, 1])), Some(&State::int(4)));
        assert_eq!(g.get(&mi(&[1, 1])), Some(&State::int(6)));

        let sys = AutonomousSystem::new(vec![unitriangular(1), unitriangular(2)]).unwrap();
        let x0 = State::rat_vec(&[0, 1]);
        let g = sys.eval_box(&t0, &x0, &mi(&[2, 0])).unwrap();
        assert_eq!(
            g.states,
            vec![x0, State::rat_vec(&[1, 1]), State::rat_vec(&[2, 1])]
        );
    }

    #[test]
    fn eval_box_volume_cap() {
        let sys = additive(1, 1).with_limits(Limits {
            volume_cap: 10,
            ..Limits::default()
        });
        assert!(matches!(
            sys.eval_box(&mi(&[0, 0]), &State::int(0), &mi(&[3, 3])),
            Err(Error::VolumeCapExceeded { .. })
        ));
    }

    #[test]
    fn translate_axioms_are_reported() {
        let r = additive(1, 2).compatibility().unwrap().clone();
        assert_eq!(r.action_axioms, ActionAxioms::Assumed);
    }

    fn finite_map(n: usize) -> impl Strategy<Value = Vec<usize>> {
        proptest::collection::vec(0..n, n)
    }

    proptest! {
        #[test]
        fn compatible_tables_are_path_independent(
            (a, b) in (1usize..=4).prop_flat_map(|n| (finite_map(n), finite_map(n))),
            d1 in 0i64..=3, d2 in 0i64..=3, x0 in 0usize..4,
        ) {
            let n = a.len();
            let sys = AutonomousSystem::new(vec![
                StepMap::from_table(a).unwrap(),
                StepMap::from_table(b).unwrap(),
            ]).unwrap();
            let x0 = State::Label(x0 % n);
            let t0 = mi(&[0, 0]);
            let t = mi(&[d1, d2]);
            let report = sys.path_independence_check(&t0, &x0, &t, 1000).unwrap();
            if sys.compatibility().unwrap().status == CompatStatus::Compatible {
                prop_assert!(report.agree);
            }
        }

        #[test]
        fn witnesses_separate_the_two_orders(
            (a, b) in (2usize..=4).prop_flat_map(|n| (finite_map(n), finite_map(n))),
        ) {
            let sys = AutonomousSystem::new(vec![
                StepMap::from_table(a).unwrap(),
                StepMap::from_table(b).unwrap(),
            ]).unwrap();
            for w in &sys.compatibility().unwrap().witnesses {
                let t0 = mi(&[0, 0]);
                let ab = sys.walk_path(&w.state, &MonotonePath::new(t0.clone(), vec![w.alpha, w.beta]).unwrap()).unwrap();
                let ba = sys.walk_path(&w.state, &MonotonePath::new(t0, vec![w.beta, w.alpha]).unwrap()).unwrap();
                prop_assert_ne!(&ab.last().1, &ba.last().1);
            }
        }

        #[test]
        fn semigroup_property(a1 in -50i64..50, a2 in -50i64..50, x0 in -100i64..100,
                              s in (0i64..5, 0i64..5), extra in (0i64..5, 0i64..5)) {
            let sys = additive(a1, a2);
            let t0 = mi(&[0, 0]);
            let s = mi(&[s.0, s.1]);
            let t = mi(&[s.coords()[0] + extra.0, s.coords()[1] + extra.1]);
            let x0 = State::int(x0);
            let mid = sys.eval_forward(&t0, &x0, &s).unwrap();
            prop_assert_eq!(sys.eval_forward(&s, &mid, &t).unwrap(), sys.eval_forward(&t0, &x0, &t).unwrap());
            prop_assert_eq!(sys.eval_forward(&t0, &x0, &t0).unwrap(), x0);
        }

        #[test]
        fn grid_matches_closed_form(a in -3i64..=3, b in -5i64..=5, x0 in -5i64..=5,
                                    c1 in 0i64..4, c2 in 0i64..4) {
            // x -> a x + b and x -> a x + b' commute iff a b' + b = a b + b'; use b' = b
            let g = StepMap::affine_int(a, b);
            let sys = AutonomousSystem::new(vec![g.clone(), g]).unwrap();
            let t0 = mi(&[0, 0]);
            let grid = sys.eval_box(&t0, &State::int(x0), &mi(&[c1, c2])).unwrap();
            for (t, x) in grid.cells().unwrap() {
                prop_assert_eq!(x, sys.eval_forward(&t0, &State::int(x0), &t).unwrap());
            }
        }
    }
}
