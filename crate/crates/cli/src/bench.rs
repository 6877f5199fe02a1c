//! `cryptolight bench`: cost one op-program on each requested architecture,
//! with per-statement rows, per-architecture totals, and columns normalized
//! to a baseline preset.

use std::collections::BTreeMap;

use anyhow::{bail, Context, Result};
use cryptolight_model::{lower_program, parse_program, schedule_program, ArchConfig};

use crate::config::{
    arch_fingerprint, load_params, params_fingerprint, parse_overrides, resolve_arch,
    text_fingerprint,
};
use crate::report::{cols, ratio, sci, Report};
use crate::CommonArgs;

const DEFAULT_ARCHS: [&str; 3] = ["lake32", "bts64", "cryptolight"];

struct ArchRun {
    arch: ArchConfig,
    result: cryptolight_model::ScheduleResult,
}

pub fn run(args: &CommonArgs) -> Result<()> {
    let program_path = args
        .program
        .as_deref()
        .context("bench needs --program <trace file>")?;
    let text = std::fs::read_to_string(program_path)
        .with_context(|| format!("reading '{}'", program_path.display()))?;
    let program = parse_program(&text)?;
    let (base_params, params_label) = load_params(args.params.as_deref(), "full")?;
    let overrides = parse_overrides(&args.set)?;

    let arch_names: Vec<String> = if args.arch.is_empty() {
        DEFAULT_ARCHS.iter().map(|s| s.to_string()).collect()
    } else {
        args.arch.clone()
    };

    let mut runs: Vec<ArchRun> = Vec::new();
    let mut params = base_params.clone();
    for name in &arch_names {
        let mut arch = resolve_arch(name)?;
        for ov in &overrides {
            crate::config::apply_override(&mut arch, &mut params, &ov.key, ov.single()?)?;
        }
        let lowered = lower_program(&program, &params, &arch)
            .with_context(|| format!("lowering for '{}'", arch.name))?;
        let result = schedule_program(&lowered, &arch)
            .with_context(|| format!("scheduling on '{}'", arch.name))?;
        runs.push(ArchRun { arch, result });
    }

    let baseline_name = args
        .baseline
        .clone()
        .unwrap_or_else(|| arch_names[0].clone());
    let baseline = (0..runs.len())
        .find(|&i| arch_names[i] == baseline_name || runs[i].arch.name == baseline_name)
        .with_context(|| format!("baseline '{baseline_name}' is not among the requested archs"))?;

    // Per-statement baseline values for the ratio columns.
    let mut base_secs: BTreeMap<&str, f64> = BTreeMap::new();
    let mut base_joules: BTreeMap<&str, f64> = BTreeMap::new();
    let base_freq = runs[baseline].arch.frequency()?;
    for op in &runs[baseline].result.ops {
        base_secs.insert(&op.result, (op.end - op.start) as f64 / base_freq);
        base_joules.insert(&op.result, op.joules);
    }
    let base_total_secs = runs[baseline].result.report.seconds;
    let base_total_joules = runs[baseline].result.report.joules;

    let mut report = Report::new(cols(&[
        "arch", "stmt", "op", "level", "cycles", "stall_cycles", "seconds", "joules", "ntt",
        "intt", "mod_mult", "mod_add", "base_conv", "automorphism", "seconds_ratio",
        "joules_ratio",
    ]));
    report.meta(format!("cryptolight v{} bench", env!("CARGO_PKG_VERSION")));
    report.meta(format!("seed {}", args.seed.unwrap_or(base_params.seed)));
    report.meta(format!(
        "params {params_label} fnv={}",
        params_fingerprint(&params)
    ));
    report.meta(format!(
        "program {} fnv={}",
        program_path.display(),
        text_fingerprint(&text)
    ));
    let ops_line = program
        .histogram()
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(" ");
    report.meta(format!("ops {ops_line}"));
    report.meta(format!("baseline {}", runs[baseline].arch.name));
    for run in &runs {
        report.meta(format!(
            "arch {} fnv={} w_bits={} freq_hz={} k_calib={}",
            run.arch.name,
            arch_fingerprint(&run.arch),
            run.arch.w_bits,
            run.arch.frequency()?,
            run.result.report.calibration_k,
        ));
        let r = &run.result.residency;
        report.meta(format!(
            "residency {} pinned={} streamed={} scratch_slots={} setup_cycles={} hint_loads={}",
            run.arch.name,
            r.pinned.len(),
            r.streamed.len(),
            r.scratch_slots,
            r.setup_cycles,
            run.result.report.hint_loads,
        ));
    }

    for run in &runs {
        let freq = run.arch.frequency()?;
        for op in &run.result.ops {
            let cycles = op.end - op.start;
            let secs = cycles as f64 / freq;
            let (sr, jr) = match (base_secs.get(op.result.as_str()), base_joules.get(op.result.as_str())) {
                (Some(&bs), Some(&bj)) if bs > 0.0 && bj > 0.0 => {
                    (ratio(secs / bs), ratio(op.joules / bj))
                }
                _ => ("-".to_string(), "-".to_string()),
            };
            report.row(vec![
                run.arch.name.clone(),
                op.result.clone(),
                op.op_name.to_string(),
                op.level.to_string(),
                cycles.to_string(),
                op.hint_stall.to_string(),
                sci(secs),
                sci(op.joules),
                op.counts.ntt.to_string(),
                op.counts.intt.to_string(),
                op.counts.mod_mult.to_string(),
                op.counts.mod_add.to_string(),
                op.counts.base_conv.to_string(),
                op.counts.automorphism.to_string(),
                sr,
                jr,
            ]);
        }
        let rep = &run.result.report;
        report.row(vec![
            run.arch.name.clone(),
            "TOTAL".to_string(),
            "ALL".to_string(),
            "-".to_string(),
            rep.cycles.to_string(),
            runs_total_stall(run).to_string(),
            sci(rep.seconds),
            sci(rep.joules),
            rep.counts.ntt.to_string(),
            rep.counts.intt.to_string(),
            rep.counts.mod_mult.to_string(),
            rep.counts.mod_add.to_string(),
            rep.counts.base_conv.to_string(),
            rep.counts.automorphism.to_string(),
            ratio(rep.seconds / base_total_secs),
            ratio(rep.joules / base_total_joules),
        ]);
    }

    if runs.is_empty() {
        bail!("no architectures requested");
    }
    report.write(args.out.as_deref())
}

fn runs_total_stall(run: &ArchRun) -> u64 {
    run.result.ops.iter().map(|o| o.hint_stall).sum()
}
