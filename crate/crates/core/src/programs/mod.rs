//! The optimisation problems built over moment templates: Tsirelson and PPT
//! bounds, PPT-mixture bounds, negativity and genuine-negativity bounds for a
//! given Bell value, and a negativity-limited dimension witness.

mod problem;
pub(crate) use problem::BlockBuilder;
pub use problem::{LinearRow, PsdBlock, SdpProblem, Sense, SymSparse};

use crate::moment::{partial_transpose, CellValue, MomentError, MomentTemplate};
use crate::oracle::bipartitions;
use crate::scenario::BellFunctional;
use crate::solver::{self, Solution, SolverConfig, SolverError, Status};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProgramError {
    #[error("scenario mismatch: {0}")]
    Mismatch(String),
    #[error("degenerate partition {0:?}: must be a nonempty proper subset of the parties")]
    DegeneratePartition(Vec<usize>),
    #[error("no partitions given")]
    NoPartitions,
    #[error("{0} needs a bipartite scenario")]
    NeedsBipartite(&'static str),
    #[error("{0} needs at least three parties; use ppt_tsirelson for two")]
    NeedsMultipartite(&'static str),
    #[error("local dimension must be at least 2, got {0}")]
    InvalidDimension(usize),
    #[error("unsupported symmetry: {0}")]
    UnsupportedSymmetry(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

impl From<MomentError> for ProgramError {
    fn from(e: MomentError) -> Self {
        match e {
            MomentError::DegenerateBipartition(m) => ProgramError::DegeneratePartition(m),
            other => ProgramError::Mismatch(other.to_string()),
        }
    }
}

/// Outcome of solving one program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramResult {
    /// Optimal value; `None` unless `status` is optimal.
    pub value: Option<f64>,
    pub status: Status,
    pub x: Vec<f64>,
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Dual bound, finite whenever the solver produced a dual iterate.
    pub dual_bound: f64,
    pub iterations: usize,
    pub message: String,
}

impl From<&Solution> for ProgramResult {
    fn from(s: &Solution) -> Self {
        ProgramResult {
            value: s.value(),
            status: s.status,
            x: s.x.clone(),
            gap: s.gap,
            primal_residual: s.primal_residual,
            dual_residual: s.dual_residual,
            dual_bound: s.dual_objective,
            iterations: s.iterations,
            message: s.message.clone(),
        }
    }
}

/// Solves `problem` and condenses the solution.
pub fn solve_program(
    problem: &SdpProblem,
    config: &SolverConfig,
) -> Result<ProgramResult, ProgramError> {
    let s = solver::solve(problem, config)?;
    Ok(ProgramResult::from(&s))
}

/// Real variables describing one moment matrix `chi[P, u]`.
#[derive(Debug, Clone)]
struct Group {
    /// Per Collins–Gisin coordinate (through its class representative).
    coord: Vec<usize>,
    /// Real part of each open variable.
    re: Vec<usize>,
    /// Imaginary part of each non-self-adjoint open variable (complex mode).
    im: Vec<Option<usize>>,
}

impl Group {
    fn new(p: &mut SdpProblem, t: &MomentTemplate, name: &str) -> Group {
        let ncoord = t.scenario().cg_len();
        let mut coord = vec![usize::MAX; ncoord];
        for k in t.coordinate_representatives() {
            coord[k] = p.add_variable(format!("{name}.P[{k}]"));
        }
        for k in 0..ncoord {
            coord[k] = coord[t.coordinate_class(k)];
        }
        let mut re = Vec::with_capacity(t.num_variables());
        let mut im = Vec::with_capacity(t.num_variables());
        for v in 0..t.num_variables() {
            re.push(p.add_variable(format!("{name}.re[{v}]")));
            let imag = !t.is_real() && !t.is_self_adjoint(v);
            im.push(imag.then(|| p.add_variable(format!("{name}.im[{v}]"))));
        }
        Group { coord, re, im }
    }

    /// Every scalar of the group, paired position by position with `other`.
    fn pairs<'a>(&'a self, other: &'a Group) -> impl Iterator<Item = (usize, usize)> + 'a {
        let reps = self
            .coord
            .iter()
            .enumerate()
            .filter(|(k, &v)| self.coord[..*k].iter().all(|&u| u != v));
        reps.map(move |(k, &v)| (v, other.coord[k]))
            .chain(self.re.iter().copied().zip(other.re.iter().copied()))
            .chain(
                self.im
                    .iter()
                    .zip(&other.im)
                    .filter_map(|(a, b)| Some(((*a)?, (*b)?))),
            )
    }

    fn trace(&self) -> usize {
        self.coord[0]
    }

    /// `I.P` as linear terms.
    fn bell_terms(&self, f: &BellFunctional) -> Vec<(usize, f64)> {
        f.cg_coefficients()
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(k, &c)| (self.coord[k], c))
            .collect()
    }
}

/// PSD block `chi[g]` with the given cell layout (the template's own cells
/// or a partially transposed permutation of them). Complex templates use the
/// real embedding `[[Re, -Im], [Im, Re]]`.
fn moment_block(t: &MomentTemplate, cells: &[CellValue], g: &Group, label: String) -> PsdBlock {
    let n = t.side();
    let complex = !t.is_real();
    let size = if complex { 2 * n } else { n };
    let mut b = BlockBuilder::new(label, size);
    for r in 0..n {
        for c in 0..n {
            let (re, im): (usize, Option<(usize, f64)>) = match cells[r * n + c] {
                CellValue::Zero => continue,
                CellValue::Fixed(k) => (g.coord[k], None),
                CellValue::Open { var, conj } => (
                    g.re[var],
                    g.im[var].map(|i| (i, if conj { -1.0 } else { 1.0 })),
                ),
            };
            b.term(re, r, c, 1.0);
            if complex {
                b.term(re, r + n, c + n, 1.0);
                if let Some((i, s)) = im {
                    b.term(i, r + n, c, s);
                    b.term(i, r, c + n, -s);
                }
            }
        }
    }
    b.finish()
}

fn check_functional(t: &MomentTemplate, f: &BellFunctional) -> Result<(), ProgramError> {
    if &f.scenario != t.scenario() {
        return Err(ProgramError::Mismatch(format!(
            "functional '{}' is defined on another scenario than the template",
            f.name
        )));
    }
    Ok(())
}

fn reject_ppt_invariance(t: &MomentTemplate, program: &str) -> Result<(), ProgramError> {
    if !t.symmetry().ppt_invariant.is_empty() {
        return Err(ProgramError::UnsupportedSymmetry(format!(
            "ppt-invariance identifies a moment matrix with its partial transpose, which {program} cannot assume"
        )));
    }
    Ok(())
}

fn reject_swaps(t: &MomentTemplate, program: &str) -> Result<(), ProgramError> {
    if !t.symmetry().swap.is_empty() {
        return Err(ProgramError::UnsupportedSymmetry(format!(
            "party swaps permute the bipartition groups of {program}"
        )));
    }
    Ok(())
}

fn provenance(program: &str, t: &MomentTemplate, f: &BellFunctional, extra: &str) -> String {
    let level = t.basis().level.label();
    let sym = t.symmetry().label();
    if extra.is_empty() {
        format!("{program}({}; level {level}; symmetry {sym})", f.name)
    } else {
        format!(
            "{program}({}; level {level}; symmetry {sym}; {extra})",
            f.name
        )
    }
}

/// `max I.P` over `chi[P, u] >= 0` with `P_0 = 1`.
pub fn tsirelson(t: &MomentTemplate, f: &BellFunctional) -> Result<SdpProblem, ProgramError> {
    check_functional(t, f)?;
    let mut p = SdpProblem::new(Sense::Maximize, provenance("tsirelson", t, f, ""));
    let g = Group::new(&mut p, t, "rho");
    p.blocks.push(moment_block(t, t.cells(), &g, "chi".into()));
    p.add_equality("trace", vec![(g.trace(), 1.0)], 1.0);
    p.objective = g.bell_terms(f);
    Ok(p)
}

fn normalise_partition(m: &[usize], n: usize) -> Result<Vec<usize>, ProgramError> {
    let mut s = m.to_vec();
    s.sort_unstable();
    s.dedup();
    if s.is_empty() || s.len() >= n || s.iter().any(|&x| x >= n) || s.len() != m.len() {
        return Err(ProgramError::DegeneratePartition(m.to_vec()));
    }
    Ok(s)
}

/// Canonical side of a bipartition: the one listed by [`bipartitions`].
fn canonical_side(m: &[usize], n: usize) -> Vec<usize> {
    let comp: Vec<usize> = (0..n).filter(|s| !m.contains(s)).collect();
    let reps = bipartitions(n);
    if reps.iter().any(|r| r == m) {
        m.to_vec()
    } else {
        comp
    }
}

/// Tsirelson problem plus `chi^{T_m} >= 0` for every partition `m`.
pub fn ppt_tsirelson(
    t: &MomentTemplate,
    f: &BellFunctional,
    partitions: &[Vec<usize>],
) -> Result<SdpProblem, ProgramError> {
    check_functional(t, f)?;
    if partitions.is_empty() {
        return Err(ProgramError::NoPartitions);
    }
    let n = t.scenario().parties();
    let mut parts = Vec::new();
    for m in partitions {
        let m = canonical_side(&normalise_partition(m, n)?, n);
        if !parts.contains(&m) {
            parts.push(m);
        }
    }
    for perm in &t.symmetry().swap {
        for m in &parts {
            let mut img: Vec<usize> = m.iter().map(|&s| perm[s]).collect();
            img.sort_unstable();
            if !parts.contains(&canonical_side(&img, n)) {
                return Err(ProgramError::UnsupportedSymmetry(format!(
                    "partition set is not closed under the party swap {perm:?}"
                )));
            }
        }
    }
    let label: Vec<String> = parts
        .iter()
        .map(|m| format!("{m:?}").replace(' ', ""))
        .collect();
    let mut p = SdpProblem::new(
        Sense::Maximize,
        provenance("ppt_tsirelson", t, f, &label.join(",")),
    );
    let g = Group::new(&mut p, t, "rho");
    p.blocks.push(moment_block(t, t.cells(), &g, "chi".into()));
    for (m, name) in parts.iter().zip(&label) {
        if t.is_ppt_invariant(m) {
            p.notes.push(format!(
                "partial transpose over {name} collapsed into chi by ppt-invariance"
            ));
            continue;
        }
        let pt = partial_transpose(t, m)?;
        p.blocks
            .push(moment_block(t, &pt.apply(t), &g, format!("chi^T{name}")));
    }
    p.add_equality("trace", vec![(g.trace(), 1.0)], 1.0);
    p.objective = g.bell_terms(f);
    Ok(p)
}

/// Upper bound on `|I.P|` over normalised behaviors, used for range notes.
fn value_range(f: &BellFunctional) -> f64 {
    f.coefficient_norm()
}

struct Decomposition {
    rho: Group,
    minus: Group,
}

/// `chi[rho] >= 0`, `chi[rho] = chi[s+] - chi[s-]`, `chi[s+-]^{T_m} >= 0`.
fn split(
    p: &mut SdpProblem,
    t: &MomentTemplate,
    m: &[usize],
    tag: &str,
) -> Result<Decomposition, ProgramError> {
    let rho = Group::new(p, t, &format!("rho{tag}"));
    let plus = Group::new(p, t, &format!("sigma+{tag}"));
    let minus = Group::new(p, t, &format!("sigma-{tag}"));
    let pt = partial_transpose(t, m)?;
    let pt_cells = pt.apply(t);
    let name = format!("{m:?}").replace(' ', "");
    p.blocks
        .push(moment_block(t, t.cells(), &rho, format!("chi[rho{tag}]")));
    p.blocks.push(moment_block(
        t,
        &pt_cells,
        &plus,
        format!("chi[sigma+{tag}]^T{name}"),
    ));
    p.blocks.push(moment_block(
        t,
        &pt_cells,
        &minus,
        format!("chi[sigma-{tag}]^T{name}"),
    ));
    let triples: Vec<(usize, usize, usize)> = rho
        .pairs(&plus)
        .zip(rho.pairs(&minus))
        .map(|((r, a), (_, b))| (r, a, b))
        .collect();
    for (k, (r, a, b)) in triples.into_iter().enumerate() {
        p.add_equality(
            format!("split{tag}[{k}]"),
            vec![(r, 1.0), (a, -1.0), (b, 1.0)],
            0.0,
        );
    }
    Ok(Decomposition { rho, minus })
}

fn bipartite_checks(
    t: &MomentTemplate,
    f: &BellFunctional,
    program: &'static str,
) -> Result<(), ProgramError> {
    check_functional(t, f)?;
    if t.scenario().parties() != 2 {
        return Err(ProgramError::NeedsBipartite(program));
    }
    reject_ppt_invariance(t, program)
}

/// Lower bound on the negativity of any state giving `I.P = v`:
/// `min tr sigma-` over decompositions `rho = sigma+ - sigma-` with PPT parts.
pub fn negativity(
    t: &MomentTemplate,
    f: &BellFunctional,
    v: f64,
) -> Result<SdpProblem, ProgramError> {
    bipartite_checks(t, f, "negativity")?;
    let mut p = SdpProblem::new(
        Sense::Minimize,
        provenance("negativity", t, f, &format!("v = {v}")),
    );
    let d = split(&mut p, t, &[0], "")?;
    p.add_equality("trace", vec![(d.rho.trace(), 1.0)], 1.0);
    p.add_equality("bell value", d.rho.bell_terms(f), v);
    p.objective = vec![(d.minus.trace(), 1.0)];
    if v.abs() > value_range(f) {
        p.notes.push(format!(
            "|v| = {} exceeds the coefficient bound {}",
            v.abs(),
            value_range(f)
        ));
    }
    Ok(p)
}

/// Largest `I.P` reachable with negativity at most `(d - 1) / 2`, the
/// maximum for local dimension `d`.
pub fn dimension_witness(
    t: &MomentTemplate,
    f: &BellFunctional,
    d: usize,
) -> Result<SdpProblem, ProgramError> {
    bipartite_checks(t, f, "dimension_witness")?;
    if d < 2 {
        return Err(ProgramError::InvalidDimension(d));
    }
    let mut p = SdpProblem::new(
        Sense::Maximize,
        provenance("dimension_witness", t, f, &format!("d = {d}")),
    );
    let dec = split(&mut p, t, &[0], "")?;
    p.add_equality("trace", vec![(dec.rho.trace(), 1.0)], 1.0);
    let mut cap = BlockBuilder::new("negativity cap", 1);
    cap.constant(0, 0, (d as f64 - 1.0) / 2.0);
    cap.term(dec.minus.trace(), 0, 0, -1.0);
    p.blocks.push(cap.finish());
    p.objective = dec.rho.bell_terms(f);
    Ok(p)
}

fn multipartite_checks(
    t: &MomentTemplate,
    f: &BellFunctional,
    program: &'static str,
) -> Result<Vec<Vec<usize>>, ProgramError> {
    check_functional(t, f)?;
    let n = t.scenario().parties();
    if n < 3 {
        return Err(ProgramError::NeedsMultipartite(program));
    }
    reject_ppt_invariance(t, program)?;
    reject_swaps(t, program)?;
    Ok(bipartitions(n))
}

/// `P = sum_m P_m` as coordinate- and variable-wise rows plus `P_0 = 1`.
fn sum_rows(p: &mut SdpProblem, total: &Group, parts: &[Group]) {
    let columns: Vec<Vec<(usize, usize)>> =
        parts.iter().map(|g| total.pairs(g).collect()).collect();
    for k in 0..columns.first().map_or(0, |c| c.len()) {
        let mut terms = vec![(columns[0][k].0, 1.0)];
        terms.extend(columns.iter().map(|c| (c[k].1, -1.0)));
        p.add_equality(format!("sum[{k}]"), terms, 0.0);
    }
    p.add_equality("trace", vec![(total.trace(), 1.0)], 1.0);
}

/// `max I.P` over mixtures of states each PPT across one bipartition.
pub fn ppt_mixture(t: &MomentTemplate, f: &BellFunctional) -> Result<SdpProblem, ProgramError> {
    let parts = multipartite_checks(t, f, "ppt_mixture")?;
    let mut p = SdpProblem::new(Sense::Maximize, provenance("ppt_mixture", t, f, ""));
    let total = Group::new(&mut p, t, "P");
    let mut groups = Vec::new();
    for m in &parts {
        let name = format!("{m:?}").replace(' ', "");
        let g = Group::new(&mut p, t, &format!("rho{name}"));
        p.blocks
            .push(moment_block(t, t.cells(), &g, format!("chi[rho{name}]")));
        let pt = partial_transpose(t, m)?;
        p.blocks.push(moment_block(
            t,
            &pt.apply(t),
            &g,
            format!("chi[rho{name}]^T{name}"),
        ));
        groups.push(g);
    }
    sum_rows(&mut p, &total, &groups);
    p.objective = total.bell_terms(f);
    Ok(p)
}

/// Lower bound on the genuine negativity of any state giving `I.P = v`.
pub fn genuine_negativity(
    t: &MomentTemplate,
    f: &BellFunctional,
    v: f64,
) -> Result<SdpProblem, ProgramError> {
    let parts = multipartite_checks(t, f, "genuine_negativity")?;
    let mut p = SdpProblem::new(
        Sense::Minimize,
        provenance("genuine_negativity", t, f, &format!("v = {v}")),
    );
    let total = Group::new(&mut p, t, "P");
    let mut rhos = Vec::new();
    let mut objective = Vec::new();
    for m in &parts {
        let name = format!("{m:?}").replace(' ', "");
        let d = split(&mut p, t, m, &name)?;
        objective.push((d.minus.trace(), 1.0));
        rhos.push(d.rho);
    }
    sum_rows(&mut p, &total, &rhos);
    p.add_equality("bell value", total.bell_terms(f), v);
    p.objective = objective;
    if v.abs() > value_range(f) {
        p.notes.push(format!(
            "|v| = {} exceeds the coefficient bound {}",
            v.abs(),
            value_range(f)
        ));
    }
    Ok(p)
}
