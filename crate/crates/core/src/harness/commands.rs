//! Subcommands: each builds its inputs, runs one experiment and writes its artifacts.

use std::path::PathBuf;

use crate::elasticity::{ElasticProblem, Material, SoftSolver, StiffSolver};
use crate::error::{Error, Result};
use crate::geometry::{mesh_quality, Mesh};
use crate::harness::cache::{digest, Cache};
use crate::harness::config::{ExperimentConfig, Mode, Physics};
use crate::harness::output::{num, Artifacts};
use crate::localized::{localized_basis_from_fields, localized_characteristics, LocalizedBasis, SweepReference};
use crate::oned::{compare_1d, expansion_terms_1d, Interval1DSpec};
use crate::pressure::{terms_needed, PressureProblem, PressureSolver};
use crate::series::decay_fit;

/// Errors at or below this level are treated as the rounding plateau when fitting decay rates.
pub const FIT_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    MeshGen,
    MeshRefine,
    MeshCheck,
    SolveDirect,
    ExpandPressure,
    ExpandElastic,
    SweepDelta,
    ReportError,
    ReportEnergy,
    ReportTermsNeeded,
    Run1dExample,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::MeshGen => "mesh gen",
            Command::MeshRefine => "mesh refine",
            Command::MeshCheck => "mesh check",
            Command::SolveDirect => "solve direct",
            Command::ExpandPressure => "expand pressure",
            Command::ExpandElastic => "expand elastic",
            Command::SweepDelta => "sweep delta",
            Command::ReportError => "report error",
            Command::ReportEnergy => "report energy",
            Command::ReportTermsNeeded => "report terms-needed",
            Command::Run1dExample => "run 1d-example",
        }
    }
}

/// Runs `command` and returns the output directory. On failure nothing is written.
pub fn run(command: Command, config: &ExperimentConfig) -> Result<PathBuf> {
    config.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = config.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    let threads = pool.current_num_threads();
    pool.install(|| {
        let out = config.output.clone().unwrap_or_else(|| PathBuf::from("out"));
        let mut ctx = Context {
            config,
            cache: Cache::new(config.cache_dir.as_deref())?,
            art: Artifacts::new(&out, &config.hash())?,
        };
        match command {
            Command::MeshGen => ctx.mesh_gen(),
            Command::MeshRefine => ctx.mesh_refine(),
            Command::MeshCheck => ctx.mesh_check(),
            Command::SolveDirect => ctx.solve_direct(),
            Command::ExpandPressure => ctx.expand_pressure(),
            Command::ExpandElastic => ctx.expand_elastic(),
            Command::SweepDelta => ctx.sweep_delta(),
            Command::ReportError => ctx.report_error(),
            Command::ReportEnergy => ctx.report_energy(),
            Command::ReportTermsNeeded => ctx.report_terms_needed(),
            Command::Run1dExample => ctx.run_1d_example(),
        }?;
        ctx.art.commit(command.name(), threads)
    })
}

/// Contrast and its `(order, relative error)` pairs.
type ErrorCurve = (f64, Vec<(i64, f64)>);

struct Context<'a> {
    config: &'a ExperimentConfig,
    cache: Cache,
    art: Artifacts,
}

fn node_columns(mesh: &Mesh, node: usize) -> Vec<String> {
    vec![node.to_string(), num(mesh.nodes[node][0]), num(mesh.nodes[node][1])]
}

fn opt_num(x: f64) -> String {
    if x.is_finite() {
        num(x)
    } else {
        String::new()
    }
}

impl Context<'_> {
    fn mesh(&mut self) -> Result<Mesh> {
        let config = self.config;
        let mesh = match (&config.geometry, &config.mesh) {
            (Some(spec), _) => {
                let cache = self.cache.clone();
                self.art.time("mesh", || cache.mesh(spec).map(|(m, _)| m))?
            }
            (None, Some(path)) => self.art.time("mesh", || Mesh::load(path))?,
            (None, None) => return Err(Error::config("/geometry", "this command needs a geometry or a mesh")),
        };
        self.art.add_input(digest(&[mesh.to_json().as_bytes()]));
        Ok(mesh)
    }

    fn pressure_problem(&self) -> PressureProblem {
        PressureProblem { source: self.config.source.clone(), boundary: self.config.boundary.clone() }
    }

    fn elastic_problem(&self) -> Result<ElasticProblem> {
        Ok(ElasticProblem {
            body_force: self.config.body_force.clone(),
            boundary: self.config.boundary_displacement.clone(),
            material: Material::new(self.config.poisson_ratio)?,
        })
    }

    fn require_pressure(&self, what: &str) -> Result<()> {
        if self.config.physics != Physics::Pressure {
            return Err(Error::Unsupported(format!("{what} is only available for the scalar problem")));
        }
        Ok(())
    }

    /// Scalar solver, reusing the cached characteristic basis of the mesh when present.
    fn pressure_solver(&mut self, mesh: Mesh) -> Result<PressureSolver> {
        let key = digest(&[b"pressure-basis", mesh.to_json().as_bytes()]);
        let problem = self.pressure_problem();
        let tol = self.config.solver_tol;
        let cache = self.cache.clone();
        self.art.time("basis", || {
            if let Some(fields) = cache.get_fields(&key)? {
                match PressureSolver::with_basis(mesh.clone(), problem.clone(), Some(fields), tol) {
                    Ok(s) => return Ok(s),
                    Err(e @ (Error::Validation(_) | Error::Dimension { .. })) => {
                        eprintln!("warning: cached basis rejected ({e}); recomputing");
                        cache.evict_fields(&key)?;
                    }
                    Err(e) => return Err(e),
                }
            }
            let solver = PressureSolver::new(mesh, problem, tol)?;
            cache.put_fields(&key, solver.characteristics())?;
            Ok(solver)
        })
    }

    fn elastic_stiff_solver(&mut self, mesh: Mesh) -> Result<StiffSolver> {
        let problem = self.elastic_problem()?;
        let key = digest(&[
            b"elastic-basis",
            mesh.to_json().as_bytes(),
            &self.config.poisson_ratio.to_le_bytes(),
        ]);
        let tol = self.config.solver_tol;
        let cache = self.cache.clone();
        self.art.time("basis", || {
            if let Some(fields) = cache.get_fields(&key)? {
                match StiffSolver::with_basis(mesh.clone(), &problem, Some(fields), tol) {
                    Ok(s) => return Ok(s),
                    Err(e @ (Error::Validation(_) | Error::Dimension { .. })) => {
                        eprintln!("warning: cached basis rejected ({e}); recomputing");
                        cache.evict_fields(&key)?;
                    }
                    Err(e) => return Err(e),
                }
            }
            let solver = StiffSolver::new(mesh, &problem, tol)?;
            cache.put_fields(&key, solver.characteristics())?;
            Ok(solver)
        })
    }

    fn localized_basis(&mut self, solver: &PressureSolver, delta: f64) -> Result<LocalizedBasis> {
        let key = digest(&[b"localized-basis", solver.mesh().to_json().as_bytes(), &delta.to_le_bytes()]);
        let cache = self.cache.clone();
        self.art.time("localized basis", || {
            if let Some(fields) = cache.get_fields(&key)? {
                match localized_basis_from_fields(solver, delta, fields) {
                    Ok(b) => return Ok(b),
                    Err(e @ (Error::Validation(_) | Error::Dimension { .. })) => {
                        eprintln!("warning: cached localized basis rejected ({e}); recomputing");
                        cache.evict_fields(&key)?;
                    }
                    Err(e) => return Err(e),
                }
            }
            let basis = localized_characteristics(solver, delta)?;
            cache.put_fields(&key, &basis.characteristics)?;
            Ok(basis)
        })
    }

    fn write_mesh(&mut self, mesh: &Mesh) -> Result<()> {
        self.art.bytes("mesh.json", mesh.to_json().as_bytes())?;
        self.write_summary(mesh)
    }

    fn write_summary(&mut self, mesh: &Mesh) -> Result<()> {
        let q = mesh_quality(mesh)?;
        let row = vec![
            mesh.num_nodes().to_string(),
            mesh.num_triangles().to_string(),
            mesh.num_inclusions.to_string(),
            mesh.boundary_edges.len().to_string(),
            num(q.h),
            num(q.min_angle_deg),
            num(q.max_aspect_ratio),
            num(mesh.total_area()),
        ];
        self.art.csv(
            "mesh_summary.csv",
            &["nodes", "triangles", "inclusions", "boundary_edges", "h", "min_angle_deg", "max_aspect_ratio", "area"],
            [row],
        )
    }

    fn mesh_gen(&mut self) -> Result<()> {
        if self.config.geometry.is_none() {
            return Err(Error::config("/geometry", "mesh gen needs a geometry"));
        }
        let mesh = self.mesh()?;
        self.write_mesh(&mesh)
    }

    fn mesh_refine(&mut self) -> Result<()> {
        let mesh = self.mesh()?;
        let refined = self.art.time("refine", || mesh.refine_uniform())?;
        self.write_mesh(&refined)
    }

    fn mesh_check(&mut self) -> Result<()> {
        let mesh = self.mesh()?;
        mesh.validate()?;
        self.write_summary(&mesh)?;
        let rows = (0..=mesh.num_inclusions).map(|tag| {
            let count = mesh.triangles.iter().filter(|t| t.tag == tag).count();
            vec![tag.to_string(), count.to_string(), num(mesh.tag_area(tag))]
        });
        self.art.csv("mesh_tags.csv", &["tag", "elements", "area"], rows.collect::<Vec<_>>())
    }

    fn solve_direct(&mut self) -> Result<()> {
        let mesh = self.mesh()?;
        let contrasts = self.config.contrasts.clone();
        let mut rows = Vec::new();
        match (self.config.physics, self.config.mode) {
            (Physics::Pressure, _) => {
                let solver = self.pressure_solver(mesh.clone())?;
                for &eta in &contrasts {
                    let u = self.art.time("direct", || solver.solve_direct(eta))?;
                    for (node, v) in u.iter().enumerate() {
                        let mut row = vec![num(eta)];
                        row.extend(node_columns(&mesh, node));
                        row.push(num(*v));
                        rows.push(row);
                    }
                }
                self.art.csv("direct.csv", &["contrast", "node", "x", "y", "u"], rows)
            }
            (Physics::Elastic, mode) => {
                let problem = self.elastic_problem()?;
                let tol = self.config.solver_tol;
                let fields: Vec<(f64, Vec<f64>)> = match mode {
                    Mode::Stiff => {
                        let solver = self.elastic_stiff_solver(mesh.clone())?;
                        contrasts.iter().map(|&c| Ok((c, solver.solve_direct(c)?))).collect::<Result<_>>()?
                    }
                    Mode::Soft => {
                        let solver = SoftSolver::new(mesh.clone(), &problem, tol)?;
                        contrasts.iter().map(|&c| Ok((c, solver.solve_direct(c)?))).collect::<Result<_>>()?
                    }
                };
                for (c, u) in fields {
                    for node in 0..mesh.num_nodes() {
                        let mut row = vec![num(c)];
                        row.extend(node_columns(&mesh, node));
                        row.push(num(u[2 * node]));
                        row.push(num(u[2 * node + 1]));
                        rows.push(row);
                    }
                }
                self.art.csv("direct.csv", &["contrast", "node", "x", "y", "ux", "uy"], rows)
            }
        }
    }

    fn expand_pressure(&mut self) -> Result<()> {
        let mesh = self.mesh()?;
        let solver = self.pressure_solver(mesh.clone())?;
        let jmax = self.config.jmax;
        let series = self.art.time("expand", || solver.expand(jmax))?;
        let mut header: Vec<String> = vec!["node".into(), "x".into(), "y".into(), "u00".into()];
        header.extend((0..series.terms.len()).map(|j| format!("u{j}")));
        let rows: Vec<Vec<String>> = (0..mesh.num_nodes())
            .map(|node| {
                let mut row = node_columns(&mesh, node);
                row.push(num(series.background_part[node]));
                row.extend(series.terms.iter().map(|t| num(t[node])));
                row
            })
            .collect();
        let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
        self.art.csv("terms.csv", &header_refs, rows)?;
        let constants = series.constants.iter().enumerate().flat_map(|(j, cs)| {
            cs.iter().enumerate().map(move |(m, c)| vec![j.to_string(), (m + 1).to_string(), num(*c)])
        });
        self.art.csv("constants.csv", &["term", "inclusion", "value"], constants.collect::<Vec<_>>())?;
        let diag = series
            .flux_residuals
            .iter()
            .enumerate()
            .map(|(j, r)| vec![j.to_string(), num(*r), num(solver.inclusion_constancy(&series.terms[j]))]);
        self.art.csv("diagnostics.csv", &["term", "flux_residual", "inclusion_spread"], diag.collect::<Vec<_>>())
    }

    fn expand_elastic(&mut self) -> Result<()> {
        let mesh = self.mesh()?;
        let jmax = self.config.jmax;
        let (labels, terms): (Vec<String>, Vec<Vec<f64>>) = match self.config.mode {
            Mode::Stiff => {
                let solver = self.elastic_stiff_solver(mesh.clone())?;
                let series = self.art.time("expand", || solver.expand(jmax))?;
                let constants = series.constants.iter().enumerate().flat_map(|(j, cs)| {
                    cs.iter().enumerate().map(move |(k, c)| vec![j.to_string(), k.to_string(), num(*c)])
                });
                self.art.csv("constants.csv", &["term", "mode", "value"], constants.collect::<Vec<_>>())?;
                let diag = series.flux_residuals.iter().enumerate().map(|(j, r)| {
                    let gain = series.balance_gains.get(j).copied().unwrap_or(f64::NAN);
                    vec![j.to_string(), num(*r), opt_num(gain)]
                });
                self.art.csv("diagnostics.csv", &["term", "flux_residual", "balance_gain"], diag.collect::<Vec<_>>())?;
                ((0..series.terms.len()).map(|j| j.to_string()).collect(), series.terms)
            }
            Mode::Soft => {
                let problem = self.elastic_problem()?;
                let tol = self.config.solver_tol;
                let solver = self.art.time("setup", || SoftSolver::new(mesh.clone(), &problem, tol))?;
                let series = self.art.time("expand", || solver.expand(jmax))?;
                ((0..series.terms.len()).map(|k| (k as i64 - 1).to_string()).collect(), series.terms)
            }
        };
        let mut header: Vec<String> = vec!["node".into(), "x".into(), "y".into()];
        for l in &labels {
            header.push(format!("u{l}_x"));
            header.push(format!("u{l}_y"));
        }
        let rows: Vec<Vec<String>> = (0..mesh.num_nodes())
            .map(|node| {
                let mut row = node_columns(&mesh, node);
                for t in &terms {
                    row.push(num(t[2 * node]));
                    row.push(num(t[2 * node + 1]));
                }
                row
            })
            .collect();
        let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
        self.art.csv("terms.csv", &header_refs, rows)
    }

    fn sweep_delta(&mut self) -> Result<()> {
        self.require_pressure("sweep delta")?;
        let mesh = self.mesh()?;
        let solver = self.pressure_solver(mesh)?;
        let reference = self.art.time("reference", || SweepReference::new(&solver))?;
        let mut rows = Vec::new();
        for &delta in &self.config.deltas.clone() {
            let basis = self.localized_basis(&solver, delta)?;
            let r = self.art.time("sweep", || reference.row(&solver, &basis))?;
            rows.push(vec![num(r.delta), num(r.err_u0), num(r.err_u00), num(r.err_uc)]);
        }
        self.art.csv("sweep.csv", &["delta", "err_u0", "err_u00", "err_uc"], rows)
    }

    /// Relative errors of every partial sum, per contrast, with their order labels.
    fn error_table(&mut self) -> Result<Vec<ErrorCurve>> {
        let mesh = self.mesh()?;
        let jmax = self.config.jmax;
        let contrasts = self.config.contrasts.clone();
        match (self.config.physics, self.config.mode) {
            (Physics::Pressure, _) => {
                let solver = self.pressure_solver(mesh)?;
                let series = self.art.time("expand", || solver.expand(jmax))?;
                let rows = self.art.time("direct", || solver.truncation_report(&series, &contrasts, jmax))?;
                Ok(contrasts
                    .iter()
                    .map(|&eta| {
                        let errs = rows.iter().filter(|r| r.eta == eta).map(|r| (r.order as i64, r.rel_error)).collect();
                        (eta, errs)
                    })
                    .collect())
            }
            (Physics::Elastic, Mode::Stiff) => {
                let solver = self.elastic_stiff_solver(mesh)?;
                let series = self.art.time("expand", || solver.expand(jmax))?;
                self.art.time("direct", || {
                    contrasts
                        .iter()
                        .map(|&eta| {
                            let errs = solver.errors(&series, eta)?;
                            Ok((eta, errs.into_iter().enumerate().map(|(j, e)| (j as i64, e)).collect()))
                        })
                        .collect()
                })
            }
            (Physics::Elastic, Mode::Soft) => {
                let problem = self.elastic_problem()?;
                let tol = self.config.solver_tol;
                let solver = SoftSolver::new(mesh, &problem, tol)?;
                let series = self.art.time("expand", || solver.expand(jmax))?;
                self.art.time("direct", || {
                    contrasts
                        .iter()
                        .map(|&eps| {
                            let errs = solver.errors(&series, eps)?;
                            Ok((eps, errs.into_iter().enumerate().map(|(k, e)| (k as i64 - 1, e)).collect()))
                        })
                        .collect()
                })
            }
        }
    }

    fn report_error(&mut self) -> Result<()> {
        let table = self.error_table()?;
        let rows: Vec<Vec<String>> = table
            .iter()
            .flat_map(|(c, errs)| errs.iter().map(move |(j, e)| vec![num(*c), j.to_string(), num(*e)]))
            .collect();
        self.art.csv("errors.csv", &["contrast", "order", "rel_error"], rows)?;
        let fits: Vec<Vec<String>> = table
            .iter()
            .map(|(c, errs)| {
                let values: Vec<f64> = errs.iter().map(|(_, e)| *e).collect();
                match decay_fit(&values, FIT_FLOOR) {
                    Some(f) => vec![num(*c), num(f.slope), num(f.ratio()), num(f.r_squared), f.points.to_string()],
                    None => vec![num(*c), String::new(), String::new(), String::new(), "0".into()],
                }
            })
            .collect();
        self.art.csv("decay_fit.csv", &["contrast", "slope", "ratio", "r_squared", "points"], fits)
    }

    fn report_energy(&mut self) -> Result<()> {
        self.require_pressure("report energy")?;
        let mesh = self.mesh()?;
        let solver = self.pressure_solver(mesh)?;
        let series = self.art.time("expand", || solver.expand(1))?;
        let coeffs = solver.energy_coefficients(&series)?;
        let mut rows = Vec::new();
        for &eta in &self.config.contrasts {
            let u = self.art.time("direct", || solver.solve_direct(eta))?;
            let energy = solver.energy(eta, &u)?;
            let remainder = (energy - coeffs.e0 - coeffs.e1 / eta).abs();
            rows.push(vec![num(eta), num(energy), num(coeffs.e0), num(coeffs.e1), num(remainder), num(coeffs.orthogonality)]);
        }
        self.art.csv("energy.csv", &["contrast", "energy", "e0", "e1", "remainder", "orthogonality"], rows)
    }

    fn report_terms_needed(&mut self) -> Result<()> {
        self.require_pressure("report terms-needed")?;
        let mesh = self.mesh()?;
        let solver = self.pressure_solver(mesh)?;
        let jmax = self.config.jmax;
        let contrasts = self.config.contrasts.clone();
        let series = self.art.time("expand", || solver.expand(jmax))?;
        let rows = self.art.time("direct", || solver.truncation_report(&series, &contrasts, jmax))?;
        let needed = terms_needed(&rows, self.config.tol);
        let out = needed
            .iter()
            .map(|n| vec![num(n.eta), n.terms.map_or_else(String::new, |t| t.to_string()), num(n.floor)]);
        self.art.csv("terms_needed.csv", &["contrast", "terms", "floor"], out.collect::<Vec<_>>())
    }

    fn run_1d_example(&mut self) -> Result<()> {
        let spec = self
            .config
            .interval
            .clone()
            .unwrap_or_else(|| Interval1DSpec::worked_example(self.config.contrasts[0]));
        let jmax = self.config.jmax;
        let series = self.art.time("expand", || expansion_terms_1d(&spec, jmax))?;
        let mut rows = Vec::new();
        for (j, term) in series.terms.iter().enumerate() {
            let approx = term.to_f64();
            for (k, x) in term.breakpoints.iter().enumerate() {
                rows.push(vec![j.to_string(), x.to_string(), num(approx.values[k]), term.values[k].to_string()]);
            }
        }
        self.art.csv("1d_terms.csv", &["term", "x", "value", "exact"], rows)?;
        let constants = series
            .constants
            .iter()
            .zip(&series.compatibility)
            .enumerate()
            .map(|(j, (c, f))| vec![j.to_string(), c.to_string(), f.to_string()]);
        self.art.csv("1d_constants.csv", &["term", "constant", "compatibility"], constants.collect::<Vec<_>>())?;
        let contrasts = self.config.contrasts.clone();
        let errors = self.art.time("compare", || compare_1d(&spec, jmax, &contrasts))?;
        let rows = errors
            .iter()
            .map(|e| vec![num(e.eta), e.order.to_string(), num(e.max_error), num(e.h1_error), opt_num(e.ratio)]);
        self.art.csv("1d_errors.csv", &["contrast", "order", "max_error", "h1_error", "ratio"], rows.collect::<Vec<_>>())
    }
}
