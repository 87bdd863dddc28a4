//! Batch front end: JSON problem specs in, sampled fields and audit reports out.

pub mod catalog;
pub mod report;
pub mod spec;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::approx::Context;
use crate::base::{make_constants, ClosedSet, PointIndex, SetKind, WorkingDomain};
use crate::covering::smoothstep;
use crate::engine::{
    check_condition_e, extend_from_convex_set, extend_from_jets, extend_from_subspace,
    separating_function_with, series_parameters, ConditionE, ExtendOptions, ExtensionResult,
    JetExtension, Theorem, MAX_STAGES, SEPARATION_RAMP,
};
use crate::error::{Error, Result};
use crate::smoothing::{smooth_lipschitz_approx, LasryLions, SmoothingOracle};
use crate::taylor::{JetData, Restriction, MAX_LEVELS};
pub use report::{AuditTarget, Provenance, Relation, Report, ReportFormat, Row, StoredField};
pub use spec::{Mode, ProblemSpec};

/// Smoothing tolerance when the spec gives neither `eps` nor `tol`.
pub const DEFAULT_SMOOTH_EPS: f64 = 1e-2;

#[derive(Parser, Debug)]
#[command(
    name = "c1ext",
    about = "C1 approximation and extension with audited certificates"
)]
struct Cli {
    #[command(subcommand)]
    verb: VerbArgs,
}

#[derive(Subcommand, Debug)]
enum VerbArgs {
    /// Extend from a subspace, a convex set, or jet data.
    Extend(RunArgs),
    /// Run the condition-(E) gate on jet data.
    CheckE(RunArgs),
    /// C1 approximation of a Lipschitz function on the box.
    Smooth(RunArgs),
    /// Separating function of a closed set.
    Separate(RunArgs),
    /// Re-run the stored-sample audits on a field file.
    Audit {
        #[command(flatten)]
        run: RunArgs,
        /// Field file; defaults to `<out>/field.csv`.
        #[arg(long)]
        field: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    c0: Option<f64>,
    #[arg(long)]
    net_step: Option<f64>,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long, value_enum, default_value = "object")]
    report: FormatArg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Object,
    Columns,
}

/// The verbs of the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verb {
    Extend,
    CheckE,
    Smooth,
    Separate,
    Audit,
}

impl Verb {
    fn accepts(self, mode: Mode) -> bool {
        match self {
            Verb::Extend => mode.is_extension(),
            Verb::CheckE => mode == Mode::CheckE,
            Verb::Smooth => mode == Mode::Smooth,
            Verb::Separate => mode == Mode::Separate,
            Verb::Audit => mode != Mode::CheckE,
        }
    }
}

/// Command-line values that take precedence over the spec.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub tol: Option<f64>,
    pub eps: Option<f64>,
    pub c0: Option<f64>,
    pub net_step: Option<f64>,
    pub levels: Option<usize>,
}

/// A finished run: the report and, when the mode builds one, the field on the net.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: Report,
    pub field: Option<StoredField>,
}

impl RunOutput {
    pub fn exit_code(&self) -> i32 {
        if self.report.passed {
            0
        } else {
            2
        }
    }
}

/// 1 for input errors, 2 for mathematical failures.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidInput(_)
        | Error::Missing(_)
        | Error::Convexity(_)
        | Error::LipschitzAudit { .. }
        | Error::RestrictionMismatch(_)
        | Error::Unsupported(_)
        | Error::OscillationUnbounded(_) => 1,
        _ => 2,
    }
}

/// Parsed spec with the overrides applied, and everything derived from it.
struct Setup {
    spec: ProblemSpec,
    hash: String,
    domain: WorkingDomain,
    ctx: Context,
    opts: ExtendOptions,
}

impl Setup {
    fn new(text: &str, verb: Verb, ov: &Overrides) -> Result<Self> {
        let mut spec = ProblemSpec::parse(text)?;
        if !verb.accepts(spec.mode) {
            return Err(spec::anchored(
                text,
                "mode",
                format!("mode {} does not fit this verb", spec.mode.name()),
            ));
        }
        let t = &mut spec.tolerances;
        t.tol = ov.tol.or(t.tol);
        t.eps = ov.eps.or(t.eps);
        t.c0 = ov.c0.or(t.c0);
        if let Some(h) = ov.net_step {
            spec.domain.net_step = h;
        }
        let domain = spec.working_domain()?;
        let constants = make_constants(spec.tolerances.c0.unwrap_or(1.0))?;
        let ctx = Context::new(domain.clone(), constants)?;
        let opts = ExtendOptions {
            tol: spec.tolerances.tol,
            eps: spec.tolerances.eps,
            lipschitz: spec.tolerances.lipschitz(),
            max_stages: MAX_STAGES,
            max_levels: ov.levels.unwrap_or(MAX_LEVELS),
        };
        Ok(Setup {
            hash: hex::encode(Sha256::digest(text.as_bytes())),
            spec,
            domain,
            ctx,
            opts,
        })
    }

    fn provenance(
        &self,
        depth: usize,
        tol: Option<f64>,
        eps: Option<f64>,
        lip_bound: Option<f64>,
    ) -> Provenance {
        Provenance {
            spec_sha256: self.hash.clone(),
            constants: self.ctx.constants,
            depth,
            net_points: self.domain.net_len(),
            tol,
            eps,
            lip_bound,
        }
    }

    fn set(&self) -> Result<ClosedSet> {
        self.spec.closed_set(&self.domain)
    }

    fn function(&self) -> Result<&catalog::FunctionSpec> {
        self.spec
            .function
            .as_ref()
            .ok_or(Error::Missing("function"))
    }

    /// Theorem of an extension spec; an audit spec takes it from the set kind.
    fn theorem(&self, y: &ClosedSet) -> Theorem {
        match self.spec.mode {
            Mode::Subspace => Theorem::Subspace,
            Mode::Convex => Theorem::Convex,
            Mode::Jets => Theorem::Jets,
            _ => match y.kind() {
                SetKind::Subspace { .. } => Theorem::Subspace,
                SetKind::Convex { .. } => Theorem::Convex,
                _ => Theorem::Jets,
            },
        }
    }

    fn jet(&self, y: &ClosedSet, theorem: Theorem) -> Result<JetData> {
        let f = self.function()?;
        match theorem {
            Theorem::Jets => f.jet(y, &self.domain),
            _ => JetData::from_field(&f.field(&self.domain)?, y),
        }
    }

    /// What the stored field of this spec is audited against.
    fn target(&self) -> Result<AuditTarget> {
        match self.spec.mode {
            Mode::Separate => self.separation_target(&self.set()?),
            Mode::Smooth => self.smooth_target(),
            _ => {
                let y = self.set()?;
                let theorem = self.theorem(&y);
                let jet = self.jet(&y, theorem)?;
                self.extension_target(&jet, theorem)
            }
        }
    }

    fn extension_target(&self, jet: &JetData, theorem: Theorem) -> Result<AuditTarget> {
        let params = series_parameters(jet, theorem, &self.opts, &self.ctx)?;
        let restriction = Restriction::new(
            jet.y.z_basis(),
            self.domain.dim(),
            self.domain.norm,
            theorem.measure(self.opts.lipschitz),
        )?;
        Ok(AuditTarget::Extension {
            on_net: spec::on_net(jet.samples(), &self.domain)?,
            values: jet.values.clone(),
            covectors: jet.covectors.clone(),
            restriction,
            tol: params.tol,
            lip_bound: params.lip_bound,
            deriv_bound: params.pass_eps(1),
        })
    }

    fn separation_target(&self, a: &ClosedSet) -> Result<AuditTarget> {
        let index = PointIndex::new(a.samples().to_vec(), self.domain.norm)?;
        let net = self.domain.net();
        let far = net
            .par_iter()
            .enumerate()
            .filter(|(_, x)| index.nearest(x).1 >= 1.0)
            .map(|(j, _)| j)
            .collect();
        let inside = spec::on_net(a.samples(), &self.domain)?
            .into_iter()
            .map(|(_, j)| j)
            .collect();
        Ok(AuditTarget::Separate {
            inside,
            far,
            lip_bound: 2.0 * self.ctx.constants.c3,
        })
    }

    fn smooth_eps(&self) -> f64 {
        let t = &self.spec.tolerances;
        t.eps.or(t.tol).unwrap_or(DEFAULT_SMOOTH_EPS)
    }

    fn smooth_target(&self) -> Result<AuditTarget> {
        let f = self.function()?.field(&self.domain)?;
        let lip = f.lip_bound().ok_or_else(|| {
            Error::InvalidInput("smoothing needs a catalog entry with a Lipschitz bound".into())
        })?;
        Ok(AuditTarget::Smooth {
            target: self.domain.net().par_iter().map(|x| f.value(x)).collect(),
            eps: self.smooth_eps(),
            lip_bound: Some(lip * LasryLions::new(self.domain.clone())?.certified_c0()),
        })
    }
}

fn gate_rows(gate: &ConditionE) -> Vec<Row> {
    vec![Row::le("gate-oscillation", gate.worst, gate.eps_e)]
}

fn gate_ledger(gate: &ConditionE) -> serde_json::Value {
    serde_json::to_value(gate).unwrap_or_default()
}

/// Certificates of each stage and of the summed series.
fn extension_rows(result: &ExtensionResult, lipschitz: bool, deriv_bound: f64) -> Vec<Row> {
    let jets = result.theorem == Theorem::Jets;
    let mut rows = Vec::new();
    for s in &result.stages {
        let n = s.n;
        let c = &s.pass;
        let e = s.pass_eps;
        rows.push(Row::lt(format!("stage-{n}-approx"), c.approx_error, e));
        rows.push(Row::lt(format!("stage-{n}-derivative"), c.deriv_error, e));
        if jets {
            rows.push(Row::lt(
                format!("stage-{n}-residual-lip"),
                c.jet_lip_error,
                e,
            ));
        }
        rows.push(Row::lt(
            format!("stage-{n}-correction-error"),
            c.c1_ratio,
            1.0,
        ));
        rows.push(Row::le(
            format!("stage-{n}-correction-slope"),
            c.c2_worst,
            e / 8.0,
        ));
        if lipschitz {
            rows.push(Row::le(
                format!("stage-{n}-correction-lip"),
                c.c2_lip_worst,
                e / 8.0,
            ));
            if let Some(l) = c.lip_declared {
                rows.push(Row::le(format!("stage-{n}-pass-lip"), c.lip_sampled, l));
            }
        }
        if let Some(b) = s.bound_claim {
            rows.push(Row::le(format!("stage-{n}-bound"), s.bound, b + 1e-9));
        }
        if let Some(b) = s.lip_claim {
            rows.push(Row::le(format!("stage-{n}-lip"), s.lip_sampled, b + 1e-9));
        }
    }
    let c = &result.certificates;
    rows.push(Row::le("agreement-on-y", c.agreement, c.tol));
    rows.push(Row::le("residual-on-y", c.residual_bound, c.tol));
    rows.push(Row::le("gradient-on-y", c.gradient_error, deriv_bound));
    rows.push(Row::le("fd-gradient", c.fd_gap, c.fd_tolerance));
    if let Some(l) = c.lip_bound {
        rows.push(Row::le("lipschitz", c.lip_sampled, l));
    }
    rows
}

fn extension_ledger(result: &ExtensionResult) -> serde_json::Value {
    json!({
        "theorem": result.theorem,
        "eps": result.eps,
        "lip_f": result.lip_f,
        "m": result.m,
        "stages": result.stages,
        "certificates": result.certificates,
    })
}

fn stored_of(domain: &WorkingDomain, values: Vec<f64>, gradients: Vec<Vec<f64>>) -> StoredField {
    StoredField {
        points: domain.net(),
        values,
        gradients,
    }
}

fn run_extension(s: &Setup) -> Result<RunOutput> {
    let y = s.set()?;
    let theorem = s.theorem(&y);
    let jet = s.jet(&y, theorem)?;
    let target = s.extension_target(&jet, theorem)?;
    let params = series_parameters(&jet, theorem, &s.opts, &s.ctx)?;
    let (result, gate) = match theorem {
        Theorem::Subspace => (
            extend_from_subspace(&s.function()?.field(&s.domain)?, &y, s.opts, &s.ctx)?,
            None,
        ),
        Theorem::Convex => (
            extend_from_convex_set(&s.function()?.field(&s.domain)?, &y, s.opts, &s.ctx)?,
            None,
        ),
        Theorem::Jets => match extend_from_jets(&jet, &s.spec.tolerances.gate(), s.opts, &s.ctx)? {
            JetExtension::Extended { gate, result } => (*result, Some(gate)),
            JetExtension::GateFailed(gate) => {
                let report = Report::new(
                    s.spec.mode.name(),
                    gate_rows(&gate),
                    json!({ "gate": gate_ledger(&gate) }),
                    s.provenance(0, Some(params.tol), Some(params.eps), params.lip_bound),
                );
                return Ok(RunOutput {
                    report,
                    field: None,
                });
            }
        },
    };
    let mut rows = gate.as_ref().map(gate_rows).unwrap_or_default();
    rows.extend(extension_rows(
        &result,
        s.opts.lipschitz,
        params.pass_eps(1),
    ));
    let field = stored_of(
        &s.domain,
        result.net_values.clone(),
        result.net_gradients.clone(),
    );
    rows.extend(report::stored_rows(&field, &target, s.domain.norm));
    let mut ledger = extension_ledger(&result);
    if let Some(g) = &gate {
        ledger["gate"] = gate_ledger(g);
    }
    let report = Report::new(
        s.spec.mode.name(),
        rows,
        ledger,
        s.provenance(
            result.depth,
            Some(params.tol),
            Some(result.eps),
            params.lip_bound,
        ),
    );
    Ok(RunOutput {
        report,
        field: Some(field),
    })
}

fn run_check_e(s: &Setup) -> Result<RunOutput> {
    let y = s.set()?;
    let jet = s.function()?.jet(&y, &s.domain)?;
    let gate = check_condition_e(&jet, &s.spec.tolerances.gate(), s.domain.norm)?;
    let report = Report::new(
        s.spec.mode.name(),
        gate_rows(&gate),
        json!({ "gate": gate_ledger(&gate) }),
        s.provenance(0, None, None, None),
    );
    Ok(RunOutput {
        report,
        field: None,
    })
}

fn run_separate(s: &Setup) -> Result<RunOutput> {
    let a = s.set()?;
    let target = s.separation_target(&a)?;
    let sep = separating_function_with(&a, &s.spec.tolerances.gate(), s.opts, &s.ctx)?;
    let c = &sep.certificates;
    let mut rows = vec![
        Row::le("zero-on-a", c.a_gap, 0.0),
        Row::le("one-far-from-a", c.b_gap, 0.0),
        Row::le("range-below", -c.range_min, 0.0),
        Row::le("range-above", c.range_max, 1.0),
        Row::le("separating-lipschitz", c.lip_sampled, c.lip_bound),
    ];
    let inner = &sep.extension;
    rows.extend(
        extension_rows(inner, true, f64::INFINITY)
            .into_iter()
            .filter(|r| r.name.starts_with("stage-")),
    );
    let theta = smoothstep(SEPARATION_RAMP.0, SEPARATION_RAMP.1)?;
    let gradients = inner
        .net_values
        .iter()
        .zip(&inner.net_gradients)
        .map(|(h, g)| g.iter().map(|v| theta.deriv(*h) * v).collect())
        .collect();
    let field = stored_of(&s.domain, sep.net_values.clone(), gradients);
    rows.extend(report::stored_rows(&field, &target, s.domain.norm));
    let report = Report::new(
        s.spec.mode.name(),
        rows,
        json!({ "separation": c, "extension": extension_ledger(inner) }),
        s.provenance(
            inner.depth,
            Some(inner.certificates.tol),
            Some(inner.eps),
            Some(c.lip_bound),
        ),
    );
    Ok(RunOutput {
        report,
        field: Some(field),
    })
}

fn run_smooth(s: &Setup) -> Result<RunOutput> {
    let target = s.smooth_target()?;
    let f = s.function()?.field(&s.domain)?;
    let eps = s.smooth_eps();
    let (k, sr) = smooth_lipschitz_approx(&f, eps, &s.domain)?;
    let lip = f.lip_bound().unwrap_or(0.0) * sr.certified_c0;
    let mut rows = vec![
        Row::lt("smooth-error", sr.achieved_error, eps),
        Row::le("smooth-lipschitz", sr.lip_certificate, lip),
    ];
    let net = s.domain.net();
    let (values, gradients) = net
        .par_iter()
        .map(|x| (k.value(x), k.gradient_or_fd(x, crate::engine::FD_STEP)))
        .unzip();
    let field = stored_of(&s.domain, values, gradients);
    rows.extend(report::stored_rows(&field, &target, s.domain.norm));
    let report = Report::new(
        s.spec.mode.name(),
        rows,
        json!({ "smoothing": sr }),
        s.provenance(0, None, Some(eps), Some(lip)),
    );
    Ok(RunOutput {
        report,
        field: Some(field),
    })
}

/// Runs a spec in memory.
pub fn run(text: &str, verb: Verb, ov: &Overrides) -> Result<RunOutput> {
    let s = Setup::new(text, verb, ov)?;
    match s.spec.mode {
        Mode::Subspace | Mode::Convex | Mode::Jets => run_extension(&s),
        Mode::CheckE => run_check_e(&s),
        Mode::Separate => run_separate(&s),
        Mode::Smooth => run_smooth(&s),
        Mode::Audit => Err(Error::InvalidInput(
            "mode audit only runs under the audit verb".into(),
        )),
    }
}

/// Audits a stored field against a spec without rebuilding the field.
pub fn audit(text: &str, field: &StoredField, ov: &Overrides) -> Result<Report> {
    let s = Setup::new(text, Verb::Audit, ov)?;
    field.check_net(&s.domain.net())?;
    let target = s.target()?;
    let rows = report::stored_rows(field, &target, s.domain.norm);
    Ok(Report::new(
        "audit",
        rows,
        json!({ "audited": s.spec.mode.name() }),
        s.provenance(0, None, None, None),
    ))
}

fn read_spec(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))
}

fn execute(verb: Verb, args: &RunArgs, field: Option<&Path>) -> Result<i32> {
    let text = read_spec(&args.spec)?;
    let ov = Overrides {
        tol: args.tol,
        eps: args.eps,
        c0: args.c0,
        net_step: args.net_step,
        levels: args.levels,
    };
    let format = match args.report {
        FormatArg::Object => ReportFormat::Object,
        FormatArg::Columns => ReportFormat::Columns,
    };
    std::fs::create_dir_all(&args.out)
        .map_err(|e| Error::InvalidInput(format!("cannot create {}: {e}", args.out.display())))?;
    if verb == Verb::Audit {
        let path = field.map_or_else(|| args.out.join("field.csv"), Path::to_path_buf);
        let dim = ProblemSpec::parse(&text)?.domain.dimension;
        let stored = StoredField::read(&path, dim)?;
        let report = audit(&text, &stored, &ov)?;
        let name = match format {
            ReportFormat::Object => "audit.json",
            ReportFormat::Columns => "audit.csv",
        };
        report::write_file(&args.out.join(name), &report.render(format))?;
        return Ok(if report.passed { 0 } else { 2 });
    }
    let out = run(&text, verb, &ov)?;
    if let Some(f) = &out.field {
        f.write(&args.out.join("field.csv"))?;
    }
    out.report.write(&args.out, format)?;
    Ok(out.exit_code())
}

/// Entry point of the binary; returns the exit status.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let (verb, args, field) = match &cli.verb {
        VerbArgs::Extend(a) => (Verb::Extend, a, None),
        VerbArgs::CheckE(a) => (Verb::CheckE, a, None),
        VerbArgs::Smooth(a) => (Verb::Smooth, a, None),
        VerbArgs::Separate(a) => (Verb::Separate, a, None),
        VerbArgs::Audit { run, field } => (Verb::Audit, run, field.as_deref()),
    };
    match execute(verb, args, field) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
