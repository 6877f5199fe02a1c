//! `cryptolight sweep`: Cartesian sweep over `--set` axes. A comma-separated
//! value list declares an axis; single values are fixed overrides. Rows come
//! out in declaration order (first axis outermost) and assert nothing.

use anyhow::{bail, Context, Result};
use cryptolight_model::{lower_program, parse_program, schedule_program};

use crate::config::{
    apply_override, load_params, params_fingerprint, parse_overrides, resolve_arch,
    text_fingerprint, Override,
};
use crate::report::{cols, sci, Report};
use crate::CommonArgs;

pub fn run(args: &CommonArgs) -> Result<()> {
    let program_path = args
        .program
        .as_deref()
        .context("sweep needs --program <trace file>")?;
    let text = std::fs::read_to_string(program_path)
        .with_context(|| format!("reading '{}'", program_path.display()))?;
    let program = parse_program(&text)?;
    let (base_params, params_label) = load_params(args.params.as_deref(), "full")?;

    if args.arch.len() > 1 {
        bail!("sweep runs on one architecture; got {}", args.arch.len());
    }
    let arch_name = args
        .arch
        .first()
        .map(String::as_str)
        .unwrap_or("cryptolight");
    let base_arch = resolve_arch(arch_name)?;

    let overrides = parse_overrides(&args.set)?;
    let (axes, fixed): (Vec<Override>, Vec<Override>) =
        overrides.into_iter().partition(|o| o.is_axis());
    if axes.is_empty() {
        bail!("sweep needs at least one --set key=v1,v2,... axis");
    }

    // Program totals fold in one-time ops like KEYGEN, so the headline
    // ops also get mean per-statement latency columns of their own.
    let headline: Vec<&str> = ["FMUL", "FROT", "FBOT"]
        .into_iter()
        .filter(|name| program.histogram().contains_key(name))
        .collect();

    let mut columns: Vec<String> = axes.iter().map(|a| a.key.clone()).collect();
    columns.extend(cols(&["k_calib", "cycles", "seconds", "joules"]));
    columns.extend(
        headline
            .iter()
            .map(|name| format!("{}_seconds", name.to_lowercase())),
    );
    columns.extend(cols(&[
        "pinned_hints",
        "streamed_hints",
        "hint_loads",
        "setup_cycles",
    ]));
    let mut report = Report::new(columns);
    report.meta(format!("cryptolight v{} sweep", env!("CARGO_PKG_VERSION")));
    report.meta(format!("seed {}", args.seed.unwrap_or(base_params.seed)));
    report.meta(format!(
        "params {params_label} fnv={}",
        params_fingerprint(&base_params)
    ));
    report.meta(format!(
        "program {} fnv={}",
        program_path.display(),
        text_fingerprint(&text)
    ));
    report.meta(format!("arch {arch_name}"));
    for a in &axes {
        report.meta(format!("axis {} values={}", a.key, a.values.join(",")));
    }

    // Odometer over the axes, first axis slowest.
    let mut index = vec![0usize; axes.len()];
    loop {
        let mut arch = base_arch.clone();
        let mut params = base_params.clone();
        for f in &fixed {
            apply_override(&mut arch, &mut params, &f.key, f.single()?)?;
        }
        let mut axis_cells = Vec::with_capacity(axes.len());
        for (a, &i) in axes.iter().zip(&index) {
            apply_override(&mut arch, &mut params, &a.key, &a.values[i])
                .with_context(|| format!("axis point {}={}", a.key, a.values[i]))?;
            axis_cells.push(a.values[i].clone());
        }

        let lowered = lower_program(&program, &params, &arch)?;
        let result = schedule_program(&lowered, &arch)?;
        let rep = &result.report;
        let mut row = axis_cells;
        row.push(rep.calibration_k.to_string());
        row.push(rep.cycles.to_string());
        row.push(sci(rep.seconds));
        row.push(sci(rep.joules));
        let freq = arch.frequency()?;
        for name in &headline {
            let timed: Vec<f64> = result
                .ops
                .iter()
                .filter(|op| op.op_name == *name)
                .map(|op| (op.end - op.start) as f64 / freq)
                .collect();
            row.push(sci(timed.iter().sum::<f64>() / timed.len() as f64));
        }
        row.push(result.residency.pinned.len().to_string());
        row.push(result.residency.streamed.len().to_string());
        row.push(rep.hint_loads.to_string());
        row.push(result.residency.setup_cycles.to_string());
        report.row(row);

        // Advance the odometer; last axis fastest.
        let mut pos = axes.len();
        loop {
            if pos == 0 {
                return report.write(args.out.as_deref());
            }
            pos -= 1;
            index[pos] += 1;
            if index[pos] < axes[pos].values.len() {
                break;
            }
            index[pos] = 0;
        }
    }
}
