//! `cryptolight explain`: human-readable dump of what the model does with a
//! program: per-op census, hint residency, wave timeline, and (for small
//! recipes) the exact kernel-graph schedule next to the wave estimate.

use std::fmt::Write as _;

use anyhow::{Context, Result};
use cryptolight_model::{
    lower_program, map_and_schedule, parse_program, recipe_graph, schedule_program,
};

use crate::config::{load_params, parse_overrides, resolve_arch};
use crate::CommonArgs;

/// Recipes above this kernel count skip the exact scheduler; the wave model
/// is the authority at production sizes anyway.
const EXACT_GRAPH_LIMIT: usize = 5000;
const WAVE_PRINT_LIMIT: usize = 40;
const INTERVAL_PRINT_LIMIT: usize = 20;

pub fn run(args: &CommonArgs) -> Result<()> {
    let program_path = args
        .program
        .as_deref()
        .context("explain needs --program <trace file>")?;
    let text = std::fs::read_to_string(program_path)
        .with_context(|| format!("reading '{}'", program_path.display()))?;
    let program = parse_program(&text)?;
    let (mut params, params_label) = load_params(args.params.as_deref(), "full")?;

    let arch_name = args
        .arch
        .first()
        .map(String::as_str)
        .unwrap_or("cryptolight");
    let mut arch = resolve_arch(arch_name)?;
    for ov in &parse_overrides(&args.set)? {
        crate::config::apply_override(&mut arch, &mut params, &ov.key, ov.single()?)?;
    }

    let lowered = lower_program(&program, &params, &arch)?;
    let sched = schedule_program(&lowered, &arch)?;
    let freq = arch.frequency()?;

    let mut out = String::new();
    writeln!(
        out,
        "arch {} (W={} bits, {:.2} GHz, {} CUs, TU {})",
        arch.name,
        arch.w_bits,
        freq / 1e9,
        arch.cu_count,
        if arch.tu_enabled { "on" } else { "off" }
    )?;
    writeln!(
        out,
        "params {params_label}: n={} functional k={} calibration k={}",
        lowered.n, lowered.functional_k, lowered.k
    )?;
    writeln!(out, "program {}: {} statements", program_path.display(), lowered.ops.len())?;
    writeln!(out)?;

    writeln!(
        out,
        "{:<10}{:<8}{:>6}{:>12}{:>9}{:>7}{:>7}{:>9}{:>9}{:>8}{:>7}{:>12}",
        "stmt", "op", "level", "cycles", "stall", "ntt", "intt", "mult", "add", "bconv", "auto",
        "joules"
    )?;
    for op in &sched.ops {
        writeln!(
            out,
            "{:<10}{:<8}{:>6}{:>12}{:>9}{:>7}{:>7}{:>9}{:>9}{:>8}{:>7}{:>12.3e}",
            op.result,
            op.op_name,
            op.level,
            op.end - op.start,
            op.hint_stall,
            op.counts.ntt,
            op.counts.intt,
            op.counts.mod_mult,
            op.counts.mod_add,
            op.counts.base_conv,
            op.counts.automorphism,
            op.joules
        )?;
    }
    let rep = &sched.report;
    writeln!(
        out,
        "{:<10}{:<8}{:>6}{:>12}{:>9}{:>7}{:>7}{:>9}{:>9}{:>8}{:>7}{:>12.3e}",
        "TOTAL",
        "ALL",
        "-",
        rep.cycles,
        sched.ops.iter().map(|o| o.hint_stall).sum::<u64>(),
        rep.counts.ntt,
        rep.counts.intt,
        rep.counts.mod_mult,
        rep.counts.mod_add,
        rep.counts.base_conv,
        rep.counts.automorphism,
        rep.joules
    )?;
    writeln!(out)?;
    writeln!(
        out,
        "makespan {} cycles = {:.3} us, energy {:.3e} J, transpose moves {}",
        rep.cycles,
        rep.seconds * 1e6,
        rep.joules,
        // The four-step transposes are a timing-level expansion, so they
        // live in the charged ledger rather than the batch census.
        rep.ledger.tu_moves
    )?;

    let res = &sched.residency;
    writeln!(
        out,
        "residency: pinned {:?}, streamed {:?}, scratch_slots={}, working={} B, twiddles={} B",
        res.pinned, res.streamed, res.scratch_slots, res.working_bytes, res.twiddle_bytes
    )?;
    writeln!(
        out,
        "setup (outside steady-state): {} cycles = {:.3} us, {:.3e} J; steady hint loads: {}",
        res.setup_cycles,
        res.setup_cycles as f64 / freq * 1e6,
        res.setup_joules,
        rep.hint_loads
    )?;
    let util = sched
        .utilization
        .iter()
        .map(|(c, u)| format!("{} {:.1}%", c.label(), u * 100.0))
        .collect::<Vec<_>>()
        .join("  ");
    writeln!(out, "utilization: {util}")?;
    writeln!(out)?;

    writeln!(out, "waves ({} total):", sched.waves.len())?;
    writeln!(
        out,
        "{:>4}{:>7}{:>6}  {:<10}{:>9}{:>14}{:>14}",
        "op", "stage", "wave", "class", "kernels", "start", "end"
    )?;
    for w in sched.waves.iter().take(WAVE_PRINT_LIMIT) {
        writeln!(
            out,
            "{:>4}{:>7}{:>6}  {:<10}{:>9}{:>14}{:>14}",
            w.op,
            w.stage,
            w.wave,
            w.class.label(),
            w.kernels,
            w.start,
            w.end
        )?;
    }
    if sched.waves.len() > WAVE_PRINT_LIMIT {
        writeln!(out, "... {} more waves", sched.waves.len() - WAVE_PRINT_LIMIT)?;
    }

    // Exact per-kernel schedule for small recipes: the wave estimate should
    // bracket it from above once hint stalls are excluded. One section per
    // distinct op kind keeps long traces readable.
    let mut shown: Vec<&str> = Vec::new();
    for op in &lowered.ops {
        let kernels = op.recipe.kernel_count();
        if kernels == 0 || kernels > EXACT_GRAPH_LIMIT || shown.contains(&op.op_name) {
            continue;
        }
        shown.push(op.op_name);
        let graph = recipe_graph(&op.recipe);
        let (timeline, _) = map_and_schedule(&graph, &arch)?;
        writeln!(out)?;
        writeln!(
            out,
            "exact schedule for {} ({}, {} kernels): makespan {} cycles",
            op.result, op.op_name, kernels, timeline.makespan
        )?;
        writeln!(
            out,
            "{:<10}{:>6}{:>8}{:>14}{:>14}",
            "class", "unit", "kernel", "start", "end"
        )?;
        for iv in timeline.intervals.iter().take(INTERVAL_PRINT_LIMIT) {
            writeln!(
                out,
                "{:<10}{:>6}{:>8}{:>14}{:>14}",
                iv.unit_class.label(),
                iv.unit,
                iv.kernel,
                iv.start,
                iv.end
            )?;
        }
        if timeline.intervals.len() > INTERVAL_PRINT_LIMIT {
            writeln!(
                out,
                "... {} more intervals",
                timeline.intervals.len() - INTERVAL_PRINT_LIMIT
            )?;
        }
    }

    match args.out.as_deref() {
        Some(path) => std::fs::write(path, out)
            .with_context(|| format!("writing '{}'", path.display())),
        None => {
            print!("{out}");
            Ok(())
        }
    }
}
