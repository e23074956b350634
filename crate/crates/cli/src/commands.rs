//! Command implementations: each validates what it needs from the config,
//! runs the corresponding library machinery, writes artifacts, and returns
//! the run manifest.

use crate::config::{DistortionTarget, LabConfig, Problem};
use crate::emit::{fmt_float, write_json, write_table, OutputFormat, Table, TOOL_VERSION};
use serde::Serialize;
use sclab_core::chain::{compose_chain, random_binary_chain, ChainModel};
use sclab_core::codes::binned::run_binned_schedule;
use sclab_core::codes::monotone_nonincreasing_within;
use sclab_core::codes::point::{run_point_schedule, DEFAULT_CODEBOOK_BUDGET};
use sclab_core::codes::two_terminal::{
    corner_rates, pointwise_optimal_psi, run_rd_experiment, RdProblem, ReconstructionMap,
};
use sclab_core::distortion::DistortionCriterion;
use sclab_core::prob::{ConditionalTable, ProbabilityTable};
use sclab_core::region::inner::{joint_inner_region, partial_inner_region, single_letterization_check};
use sclab_core::region::side_info::{side_info_min_r1, side_info_region};
use sclab_core::region::wyner_ziv::wyner_ziv_rd;
use sclab_core::region::{berger_yeung::berger_yeung_region, shannon::shannon_rd, Region};
use sclab_core::typicality::{check_markov_lemma, check_sandwich_bounds, closest_type_sequence, TypicalityParams};
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Failure classes map onto the documented exit codes.
#[derive(Debug)]
pub enum CliError {
    /// exit 2: the config (or a command prerequisite) is invalid.
    Validation(Vec<String>),
    /// exit 3: a verification suite assertion failed.
    Assertion(String),
    /// exit 4: a computation refused to start within its budget.
    Budget(String),
    /// exit 1: I/O trouble.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Assertion(_) => 3,
            CliError::Budget(_) => 4,
        }
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Validation(errs) => errs.join("\n"),
            CliError::Assertion(m) | CliError::Budget(m) | CliError::Io(m) => m.clone(),
        }
    }
}

fn lift(err: sclab_core::Error) -> CliError {
    use sclab_core::Error as E;
    match err {
        E::BudgetExceeded { .. } | E::EnumerationBudget { .. } | E::TableTooLarge { .. }
        | E::InfeasibleSizing { .. } => CliError::Budget(err.to_string()),
        other => CliError::Validation(vec![other.to_string()]),
    }
}

fn io(err: std::io::Error) -> CliError {
    CliError::Io(err.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Info,
    Region,
    Simulate,
    Verify(Suite),
}

impl CommandKind {
    fn name(&self) -> String {
        match self {
            CommandKind::Info => "info".into(),
            CommandKind::Region => "region".into(),
            CommandKind::Simulate => "simulate".into(),
            CommandKind::Verify(s) => format!("verify --suite {}", s.name()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Typicality,
    Identities,
    Containment,
    Coding,
}

impl Suite {
    pub fn name(&self) -> &'static str {
        match self {
            Suite::Typicality => "typicality",
            Suite::Identities => "identities",
            Suite::Containment => "containment",
            Suite::Coding => "coding",
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_hash: String,
    pub command: String,
    pub parameters: LabConfig,
    pub outputs: Vec<String>,
    pub wall_time_ms: u128,
}

pub struct RunContext<'a> {
    pub config: &'a LabConfig,
    pub config_hash: String,
    pub out_dir: PathBuf,
    pub format: OutputFormat,
}

impl<'a> RunContext<'a> {
    fn source(&self) -> Result<ProbabilityTable, CliError> {
        self.config.source.build().map_err(|e| CliError::Validation(vec![e]))
    }

    fn pair_source(&self) -> Result<ProbabilityTable, CliError> {
        let s = self.source()?;
        if s.num_axes() != 2 {
            return Err(CliError::Validation(vec![
                "source: this command needs a two-axis joint source".into(),
            ]));
        }
        Ok(s)
    }

    fn distortion(&self, source: &ProbabilityTable) -> Result<DistortionCriterion, CliError> {
        match &self.config.distortion {
            Some(d) => d.build(source).map_err(|e| CliError::Validation(vec![e])),
            None => Err(CliError::Validation(vec![
                "distortion: required by this command".into(),
            ])),
        }
    }

    fn epsilons(&self) -> Result<sclab_core::codes::two_terminal::Epsilons, CliError> {
        self.config
            .epsilons
            .as_ref()
            .map(|e| e.build())
            .ok_or_else(|| CliError::Validation(vec!["epsilons: required by this command".into()]))
    }

    fn schedule(&self) -> Result<&[usize], CliError> {
        if self.config.schedule.is_empty() {
            return Err(CliError::Validation(vec!["schedule: required by this command".into()]));
        }
        Ok(&self.config.schedule)
    }

    /// Chain model from the config: explicit conditionals where given,
    /// identity channels where the problem requires lossless terminals.
    fn model(&self) -> Result<ChainModel, CliError> {
        let source = self.pair_source()?;
        let n = self.config.order;
        let b1 = source.axis_size(0).pow(n as u32);
        let b2 = source.axis_size(1).pow(n as u32);
        let identity_needed_1 =
            matches!(self.config.problem, Problem::SlepianWolf | Problem::BergerYeung);
        let identity_needed_2 = matches!(self.config.problem, Problem::SlepianWolf | Problem::WynerZiv);
        let aux1 = match &self.config.aux1 {
            Some(spec) => spec.build("aux1").map_err(|e| CliError::Validation(vec![e]))?,
            None if identity_needed_1 => ConditionalTable::identity(b1),
            None => {
                return Err(CliError::Validation(vec![
                    "aux1: required for this problem (no identity default)".into(),
                ]))
            }
        };
        let aux2 = match &self.config.aux2 {
            Some(spec) => spec.build("aux2").map_err(|e| CliError::Validation(vec![e]))?,
            None if identity_needed_2 => ConditionalTable::identity(b2),
            None => {
                return Err(CliError::Validation(vec![
                    "aux2: required for this problem (no identity default)".into(),
                ]))
            }
        };
        compose_chain(&source, &aux1, &aux2, n).map_err(lift)
    }
}

pub fn run_command(kind: CommandKind, ctx: &RunContext) -> Result<RunManifest, CliError> {
    let start = Instant::now();
    let outputs = match kind {
        CommandKind::Info => cmd_info(ctx)?,
        CommandKind::Region => cmd_region(ctx)?,
        CommandKind::Simulate => cmd_simulate(ctx)?,
        CommandKind::Verify(suite) => cmd_verify(ctx, suite)?,
    };
    Ok(RunManifest {
        tool_version: TOOL_VERSION.into(),
        config_hash: ctx.config_hash.clone(),
        command: kind.name(),
        parameters: ctx.config.clone(),
        outputs: outputs
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect(),
        wall_time_ms: start.elapsed().as_millis(),
    })
}

pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<PathBuf, CliError> {
    let value = serde_json::to_value(manifest).expect("manifest serialization");
    write_json(dir, "run_manifest", &value).map_err(io)
}

fn cmd_info(ctx: &RunContext) -> Result<Vec<PathBuf>, CliError> {
    let source = ctx.source()?;
    let mut doc = serde_json::Map::new();
    doc.insert("hX1".into(), fmt_float(source.entropy(&[0]).map_err(lift)?).into());
    if source.num_axes() == 2 {
        doc.insert("hX2".into(), fmt_float(source.entropy(&[1]).map_err(lift)?).into());
        doc.insert("hJoint".into(), fmt_float(source.entropy(&[0, 1]).map_err(lift)?).into());
        doc.insert(
            "iX1X2".into(),
            fmt_float(source.mutual_information(&[0], &[1]).map_err(lift)?).into(),
        );
        // full chain measures only when both auxiliaries are pinned down
        let has_aux = ctx.config.aux1.is_some() && ctx.config.aux2.is_some();
        let lossless = matches!(ctx.config.problem, Problem::SlepianWolf);
        if has_aux || lossless {
            let model = ctx.model()?;
            let summary = model.info_summary().map_err(lift)?;
            doc.insert(
                "infoSummary".into(),
                serde_json::to_value(summary).expect("summary serialization"),
            );
            let corners = corner_rates(&model).map_err(lift)?;
            doc.insert(
                "cornerRates".into(),
                serde_json::to_value(corners).expect("corner serialization"),
            );
        }
    }
    let path = write_json(&ctx.out_dir, "info", &serde_json::Value::Object(doc)).map_err(io)?;
    Ok(vec![path])
}

fn region_table() -> Table {
    Table::new("region", &["problem", "order", "r1", "r2", "d", "witnessId"])
}

fn push_region_rows(table: &mut Table, region: &Region) {
    for p in &region.points {
        table.push_row(vec![
            region.meta.problem.clone(),
            region.meta.order.to_string(),
            fmt_float(p.point.r1),
            p.point.r2.map(fmt_float).unwrap_or_default(),
            p.point.d.map(fmt_float).unwrap_or_default(),
            p.witness_id.to_string(),
        ]);
    }
}

fn witnesses_json(region: &Region) -> serde_json::Value {
    let map: serde_json::Map<String, serde_json::Value> = region
        .witnesses
        .iter()
        .enumerate()
        .map(|(i, w)| (i.to_string(), serde_json::to_value(w).expect("witness serialization")))
        .collect();
    serde_json::Value::Object(map)
}

fn cmd_region(ctx: &RunContext) -> Result<Vec<PathBuf>, CliError> {
    let config = ctx.config;
    let mut table = region_table();
    let mut witness_doc: Option<serde_json::Value> = None;
    match config.problem {
        Problem::Shannon => {
            let source = ctx.source()?;
            if source.num_axes() != 1 {
                return Err(CliError::Validation(vec![
                    "source: the one-terminal function needs a one-axis source".into(),
                ]));
            }
            let d = ctx.distortion(&source)?;
            if config.d_targets.is_empty() {
                return Err(CliError::Validation(vec!["dTargets: required".into()]));
            }
            for &target in &config.d_targets {
                let rate = shannon_rd(&source, &d, target).map_err(lift)?;
                table.push_row(vec![
                    "shannon".into(),
                    "1".into(),
                    fmt_float(rate),
                    String::new(),
                    fmt_float(target),
                    String::new(),
                ]);
            }
        }
        Problem::WynerZiv => {
            let source = ctx.pair_source()?;
            let d = ctx.distortion(&source)?;
            if d.target_size() != source.axis_size(0) {
                return Err(CliError::Validation(vec![
                    "distortion: the side-information function targets X1".into(),
                ]));
            }
            if config.d_targets.is_empty() {
                return Err(CliError::Validation(vec!["dTargets: required".into()]));
            }
            let aux = config.aux_spec.build(&source);
            for &target in &config.d_targets {
                let rate = wyner_ziv_rd(
                    &source,
                    &d,
                    target,
                    aux.card_z1,
                    aux.restarts,
                    aux.max_iterations,
                    aux.tolerance,
                    config.seed,
                )
                .map_err(lift)?;
                table.push_row(vec![
                    "wynerZiv".into(),
                    "1".into(),
                    fmt_float(rate),
                    String::new(),
                    fmt_float(target),
                    String::new(),
                ]);
            }
        }
        Problem::SideInfo => {
            let source = ctx.pair_source()?;
            let aux = config.aux_spec.build(&source);
            let region = side_info_region(&source, &aux, config.seed).map_err(lift)?;
            push_region_rows(&mut table, &region);
            for &budget in &config.r2_budgets {
                let r1 = side_info_min_r1(&source, &aux, budget, config.seed).map_err(lift)?;
                table.push_row(vec![
                    "sideInfo:minR1".into(),
                    "1".into(),
                    fmt_float(r1),
                    fmt_float(budget),
                    String::new(),
                    String::new(),
                ]);
            }
            witness_doc = Some(witnesses_json(&region));
        }
        Problem::BergerYeung => {
            let source = ctx.pair_source()?;
            let d = ctx.distortion(&source)?;
            if !matches!(
                config.distortion.as_ref().map(|d| d.target),
                Some(DistortionTarget::X2)
            ) {
                return Err(CliError::Validation(vec![
                    "distortion: this region reconstructs X2 under the criterion".into(),
                ]));
            }
            let aux = config.aux_spec.build(&source);
            let region = berger_yeung_region(&source, &d, &aux, config.seed).map_err(lift)?;
            push_region_rows(&mut table, &region);
            witness_doc = Some(witnesses_json(&region));
        }
        Problem::Joint | Problem::Partial => {
            let source = ctx.pair_source()?;
            let d = ctx.distortion(&source)?;
            let aux = config.aux_spec.build(&source);
            let region = if config.problem == Problem::Joint {
                joint_inner_region(&source, &d, config.order, &aux, config.seed).map_err(lift)?
            } else {
                partial_inner_region(&source, &d, config.order, &aux, config.seed).map_err(lift)?
            };
            push_region_rows(&mut table, &region);
            witness_doc = Some(witnesses_json(&region));
        }
        Problem::SlepianWolf => {
            return Err(CliError::Validation(vec![
                "problem: slepianWolf has no rate-distortion region; use simulate".into(),
            ]));
        }
    }
    let mut outputs = vec![write_table(&ctx.out_dir, &table, ctx.format, &ctx.config_hash).map_err(io)?];
    if let Some(doc) = witness_doc {
        outputs.push(write_json(&ctx.out_dir, "witnesses", &doc).map_err(io)?);
    }
    Ok(outputs)
}

fn rd_problem(problem: Problem) -> Result<RdProblem, CliError> {
    Ok(match problem {
        Problem::Joint => RdProblem::Joint,
        Problem::Partial => RdProblem::Partial,
        Problem::WynerZiv => RdProblem::WynerZiv,
        Problem::SlepianWolf => RdProblem::SlepianWolf,
        Problem::BergerYeung => RdProblem::BergerYeung,
        Problem::Shannon | Problem::SideInfo => {
            return Err(CliError::Validation(vec![format!(
                "problem: {} has no two-terminal simulation",
                problem.name()
            )]))
        }
    })
}

fn cmd_simulate(ctx: &RunContext) -> Result<Vec<PathBuf>, CliError> {
    let config = ctx.config;
    let problem = rd_problem(config.problem)?;
    let model = ctx.model()?;
    let epsilons = ctx.epsilons()?;
    let schedule = ctx.schedule()?;
    let lossless = matches!(problem, RdProblem::SlepianWolf);
    let (psi, d): (ReconstructionMap, Option<DistortionCriterion>) = if lossless {
        (
            ReconstructionMap::identity_blocks(
                model.source().axis_size(0),
                model.source().axis_size(1),
                model.block_order(),
            )
            .map_err(lift)?,
            None,
        )
    } else {
        let d = ctx.distortion(model.source())?;
        (pointwise_optimal_psi(&model, &d, problem).map_err(lift)?, Some(d))
    };
    let points = run_rd_experiment(
        problem,
        &model,
        &psi,
        d.as_ref(),
        &epsilons,
        schedule,
        config.trials,
        config.seed,
        DEFAULT_CODEBOOK_BUDGET,
    )
    .map_err(lift)?;
    let mut table = Table::new(
        "experiment",
        &[
            "problem", "n", "nPrime", "lambda", "r1", "r2", "targetD", "measuredD", "errorRate",
            "trials", "seed",
        ],
    );
    for p in &points {
        table.push_row(vec![
            p.problem.into(),
            p.n.to_string(),
            p.n_prime.to_string(),
            fmt_float(p.lambda),
            fmt_float(p.r1),
            fmt_float(p.r2),
            fmt_float(p.target_d),
            fmt_float(p.measured_d),
            fmt_float(p.error_rate),
            p.trials.to_string(),
            p.seed.to_string(),
        ]);
    }
    Ok(vec![write_table(&ctx.out_dir, &table, ctx.format, &ctx.config_hash).map_err(io)?])
}

fn cmd_verify(ctx: &RunContext, suite: Suite) -> Result<Vec<PathBuf>, CliError> {
    match suite {
        Suite::Typicality => verify_typicality(ctx),
        Suite::Identities => verify_identities(ctx),
        Suite::Containment => verify_containment(ctx),
        Suite::Coding => verify_coding(ctx),
    }
}

fn verify_typicality(ctx: &RunContext) -> Result<Vec<PathBuf>, CliError> {
    let config = ctx.config;
    let source = ctx.pair_source()?;
    let epsilon = ctx.epsilons()?.typicality;
    let schedule = ctx.schedule()?;
    let marginal = source.marginal(&[0]).map_err(lift)?;
    let mut table = Table::new(
        "typicality",
        &["check", "n", "probability", "lower", "upper", "epsilon1", "conditionalFailure", "trials", "seed"],
    );
    let mut eps1 = Vec::new();
    for &n in schedule {
        let params = TypicalityParams::new(epsilon, n).map_err(lift)?;
        let cond = closest_type_sequence(&marginal, n).map_err(lift)?;
        let report =
            check_sandwich_bounds(&source, &[0], std::slice::from_ref(&cond), &params).map_err(lift)?;
        table.push_row(vec![
            "sandwich".into(),
            n.to_string(),
            fmt_float(report.probability),
            fmt_float(report.bounds.lower),
            fmt_float(report.bounds.upper),
            fmt_float(report.epsilon1),
            String::new(),
            String::new(),
            config.seed.to_string(),
        ]);
        eps1.push(report.epsilon1);
    }
    let mut markov_ok = true;
    if let Some(aux_spec) = &config.aux1 {
        if config.order == 1 {
            let aux = aux_spec.build("aux1").map_err(|e| CliError::Validation(vec![e]))?;
            let report =
                check_markov_lemma(&source, &aux, epsilon, schedule, config.trials, config.seed)
                    .map_err(lift)?;
            for (i, &n) in report.lengths.iter().enumerate() {
                table.push_row(vec![
                    "markov".into(),
                    n.to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    fmt_float(report.conditional_failure[i]),
                    report.conditioned_trials[i].to_string(),
                    config.seed.to_string(),
                ]);
            }
            for w in report.conditional_failure.windows(2) {
                let sigma = (w[0] * (1.0 - w[0]) / config.trials as f64).sqrt();
                if w[1] > w[0] + 2.0 * sigma + 1e-9 {
                    markov_ok = false;
                }
            }
        }
    }
    let outputs = vec![write_table(&ctx.out_dir, &table, ctx.format, &ctx.config_hash).map_err(io)?];
    if !eps1.windows(2).all(|w| w[1] <= w[0] + 1e-12) {
        return Err(CliError::Assertion(format!(
            "sandwich epsilon1 did not shrink along the schedule: {eps1:?}"
        )));
    }
    if !markov_ok {
        return Err(CliError::Assertion("markov conditional failure rate rose along the schedule".into()));
    }
    Ok(outputs)
}

fn verify_identities(ctx: &RunContext) -> Result<Vec<PathBuf>, CliError> {
    let config = ctx.config;
    let models = config.trials.min(10_000).max(1);
    let mut table = Table::new(
        "identities",
        &["stream", "iY1Z1", "iY1Z1gZ2", "iY2Z2", "iY2Z2gZ1", "iPair", "dev0", "dev1", "pass"],
    );
    let mut failures = 0usize;
    for s in 0..models {
        let model = random_binary_chain(config.seed, s as u64).map_err(lift)?;
        let r = sclab_core::chain::chain_identity_check(&model).map_err(lift)?;
        if !r.pass {
            failures += 1;
        }
        table.push_row(vec![
            s.to_string(),
            fmt_float(r.i_y1_z1),
            fmt_float(r.i_y1_z1_given_z2),
            fmt_float(r.i_y2_z2),
            fmt_float(r.i_y2_z2_given_z1),
            fmt_float(r.i_pair_zpair),
            fmt_float(r.decomposition_dev_0),
            fmt_float(r.decomposition_dev_1),
            r.pass.to_string(),
        ]);
    }
    let outputs = vec![write_table(&ctx.out_dir, &table, ctx.format, &ctx.config_hash).map_err(io)?];
    if failures > 0 {
        return Err(CliError::Assertion(format!(
            "{failures} of {models} random models failed the chain identities"
        )));
    }
    Ok(outputs)
}

fn verify_containment(ctx: &RunContext) -> Result<Vec<PathBuf>, CliError> {
    let config = ctx.config;
    let source = ctx.pair_source()?;
    let d = ctx.distortion(&source)?;
    if config.d_targets.is_empty() {
        return Err(CliError::Validation(vec!["dTargets: required".into()]));
    }
    let aux = config.aux_spec.build(&source);
    let report =
        single_letterization_check(&source, &d, &config.d_targets, &aux, 1.5e-2, config.seed)
            .map_err(lift)?;
    let mut table = Table::new(
        "containment",
        &["target", "rateOrder1", "rateOrder2", "worstGap", "tolerance", "pass"],
    );
    for (i, &t) in report.targets.iter().enumerate() {
        table.push_row(vec![
            fmt_float(t),
            fmt_float(report.rate1_at_targets[i]),
            fmt_float(report.rate2_at_targets[i]),
            fmt_float(report.worst_gap),
            fmt_float(report.tolerance),
            report.pass.to_string(),
        ]);
    }
    let outputs = vec![write_table(&ctx.out_dir, &table, ctx.format, &ctx.config_hash).map_err(io)?];
    if !report.pass {
        return Err(CliError::Assertion(format!(
            "single-letter containment violated by {:.4} (tolerance {:.4})",
            report.worst_gap, report.tolerance
        )));
    }
    Ok(outputs)
}

fn verify_coding(ctx: &RunContext) -> Result<Vec<PathBuf>, CliError> {
    let config = ctx.config;
    let source = ctx.pair_source()?;
    let epsilons = ctx.epsilons()?;
    let schedule = ctx.schedule()?;
    if config.order != 1 {
        return Err(CliError::Validation(vec!["order: the coding suite runs at order 1".into()]));
    }
    let aux1 = config
        .aux1
        .as_ref()
        .ok_or_else(|| CliError::Validation(vec!["aux1: required by the coding suite".into()]))?
        .build("aux1")
        .map_err(|e| CliError::Validation(vec![e]))?;

    // point code on the (X1, Z1) pair
    let s1 = source.axis_size(0);
    let zc = aux1.out_cells();
    let marginal_x1 = source.marginal(&[0]).map_err(lift)?;
    let mut mass = vec![0.0f64; s1 * zc];
    for x1 in 0..s1 {
        for (z, &q) in aux1.row(x1).iter().enumerate() {
            mass[x1 * zc + z] = marginal_x1.mass()[x1] * q;
        }
    }
    let pair = ProbabilityTable::from_sizes(&[s1, zc], mass).map_err(lift)?;
    let point_reports = run_point_schedule(
        &pair,
        epsilons.sizing1,
        epsilons.typicality,
        schedule,
        config.trials,
        config.seed,
        DEFAULT_CODEBOOK_BUDGET,
    )
    .map_err(lift)?;
    let binned_reports = run_binned_schedule(
        &source,
        &aux1,
        epsilons.sizing1,
        epsilons.sizing4,
        epsilons.typicality,
        schedule,
        config.trials,
        config.seed,
        DEFAULT_CODEBOOK_BUDGET,
    )
    .map_err(lift)?;

    let mut table = Table::new(
        "coding",
        &["code", "nPrime", "trials", "e0", "e1", "e2", "e3", "overall", "rateBitsPerSymbol", "seed"],
    );
    for r in &point_reports {
        table.push_row(vec![
            "point".into(),
            r.n_prime.to_string(),
            r.trials.to_string(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            fmt_float(r.failure_rate),
            fmt_float(r.rate_bits_per_symbol),
            r.seed.to_string(),
        ]);
    }
    for r in &binned_reports {
        table.push_row(vec![
            "binned".into(),
            r.n_prime.to_string(),
            r.tally.trials.to_string(),
            r.tally.e0.to_string(),
            r.tally.e1.to_string(),
            r.tally.e2.to_string(),
            r.tally.e3.to_string(),
            fmt_float(r.overall_rate),
            fmt_float(r.rate_bits_per_symbol),
            r.seed.to_string(),
        ]);
    }
    let outputs = vec![write_table(&ctx.out_dir, &table, ctx.format, &ctx.config_hash).map_err(io)?];

    let point_rates: Vec<f64> = point_reports.iter().map(|r| r.failure_rate).collect();
    if !monotone_nonincreasing_within(&point_rates, config.trials, 2.0) {
        return Err(CliError::Assertion(format!(
            "point-code failure rate rose along the schedule: {point_rates:?}"
        )));
    }
    let binned_rates: Vec<f64> = binned_reports.iter().map(|r| r.overall_rate).collect();
    if !monotone_nonincreasing_within(&binned_rates, config.trials, 2.0) {
        return Err(CliError::Assertion(format!(
            "binned-code overall error rose along the schedule: {binned_rates:?}"
        )));
    }
    if binned_reports.iter().any(|r| r.tally.union_violations > 0) {
        return Err(CliError::Assertion("union-bound accounting violated".into()));
    }
    Ok(outputs)
}
