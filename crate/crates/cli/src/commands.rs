use std::fmt::Write as _;

use freewords::extensions::{algebraic_extensions, ff_closure, pi_iota, ExtensionConfig};
use freewords::measures::{
    compare_measures, decimal_string, epi_image, exact_csv, phi_exact, trw_monte_carlo, trw_sweep,
    word_measure_exact, FiniteGroupTable, MeasureComparison,
};
use freewords::mobius::{
    check_power_gap, check_theorem_1_4, derive_r, fit_expansion, phi_via_expansion, rows_csv, ComparisonRow,
    MobiusConfig,
};
use freewords::perm_powers::{
    dth_root, is_dth_power, moments_exact, root_multiplicity, word_power_obstruction, Permutation,
};
use freewords::{parse, CoreGraph, Word};
use serde_json::{json, Value};

use crate::args::*;
use crate::output::{choose, usage, Body, CliError, CliResult, Echo, Output};

pub struct Ctx {
    pub budget: u128,
    pub format: Option<Format>,
}

const JSON: &[Format] = &[Format::Json];
const CSV_JSON: &[Format] = &[Format::Csv, Format::Json];
const JSON_CSV: &[Format] = &[Format::Json, Format::Csv];

/// Parses "a..b", "N" or "a,b,c" into a nonempty ascending list.
pub fn parse_range(text: &str) -> CliResult<Vec<usize>> {
    let num = |s: &str| -> CliResult<usize> {
        s.trim().parse::<usize>().map_err(|_| usage(format!("bad degree {s:?} in --n {text:?}")))
    };
    let ns: Vec<usize> = if let Some((a, b)) = text.split_once("..") {
        let (a, b) = (num(a)?, num(b)?);
        if a > b {
            return Err(usage(format!("--n {text:?}: range is not ascending")));
        }
        (a..=b).collect()
    } else {
        text.split(',').map(num).collect::<CliResult<_>>()?
    };
    if ns.is_empty() {
        return Err(usage("--n: empty range"));
    }
    if ns.windows(2).any(|p| p[0] >= p[1]) {
        return Err(usage(format!("--n {text:?}: degrees must be strictly ascending")));
    }
    if ns[0] == 0 {
        return Err(usage("--n: degrees must be positive"));
    }
    Ok(ns)
}

pub fn parse_group(spec: &str) -> CliResult<FiniteGroupTable> {
    if let Some(path) = spec.strip_prefix("cayley:") {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {path}: {e}")))?;
        return Ok(FiniteGroupTable::from_json(path, &text)?);
    }
    let degree = |rest: &str| -> CliResult<usize> {
        rest.parse::<usize>().map_err(|_| usage(format!("bad group {spec:?}: use S<k>, C<n>, D<n> or cayley:<path>")))
    };
    match spec.chars().next() {
        Some('S') => Ok(FiniteGroupTable::symmetric(degree(&spec[1..])?)?),
        Some('C') => Ok(FiniteGroupTable::cyclic(degree(&spec[1..])?)?),
        Some('D') => Ok(FiniteGroupTable::dihedral(degree(&spec[1..])?)?),
        _ => Err(usage(format!("bad group {spec:?}: use S<k>, C<n>, D<n> or cayley:<path>"))),
    }
}

fn word_of(arg: &WordArg) -> CliResult<Word> {
    Ok(parse(&arg.word, arg.rank)?)
}

/// Parses several words into one common ambient rank.
fn words_in_common_rank(texts: &[String], rank: Option<usize>) -> CliResult<(Vec<Word>, usize)> {
    let words: Vec<Word> = texts.iter().map(|t| parse(t, rank)).collect::<freewords::Result<_>>()?;
    let r = rank.unwrap_or_else(|| words.iter().map(|w| w.rank()).max().unwrap_or(1)).max(1);
    let words = words.iter().map(|w| w.with_rank(r)).collect::<freewords::Result<_>>()?;
    Ok((words, r))
}

fn subgroup_of(arg: &SubgroupArg) -> CliResult<(Vec<Word>, usize, CoreGraph)> {
    let (gens, r) = words_in_common_rank(&arg.gens, arg.rank)?;
    let g = CoreGraph::from_generators(&gens, r);
    Ok((gens, r, g))
}

fn ext_config(ext: &ExtArgs) -> ExtensionConfig {
    ExtensionConfig { rank_cap: ext.rank_cap, vertex_cap: ext.vertex_cap, ..ExtensionConfig::default() }
}

fn basis_strings(g: &CoreGraph) -> Vec<String> {
    g.basis().iter().map(|w| w.to_string()).collect()
}

fn subgroup_text(g: &CoreGraph) -> String {
    format!("<{}>", basis_strings(g).join(", "))
}

fn range_text(ns: &[usize]) -> String {
    ns.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",")
}

fn graph_json(g: &CoreGraph) -> Value {
    let edges: Vec<Value> = g
        .edges()
        .into_iter()
        .map(|(u, l, v)| json!({"from": u, "label": freewords::stallings::label_char(l, g.ambient_rank()).to_string(), "to": v}))
        .collect();
    json!({
        "ambient_rank": g.ambient_rank(),
        "rank": g.rank(),
        "vertices": g.num_vertices(),
        "edges": edges,
        "basis": basis_strings(g),
        "key": g.key_hex(),
    })
}

fn output(command: &'static str, echo: Echo, body: Body, summary: String) -> Output {
    Output { command, config: echo.into_vec(), seed: None, body, summary, failure: None }
}

pub fn run(cmd: &Command, ctx: &Ctx) -> CliResult<Output> {
    match cmd {
        Command::Word(c) => run_word(c, ctx),
        Command::Graph(c) => run_graph(c, ctx),
        Command::Ext(c) => run_ext(c, ctx),
        Command::Measure(c) => run_measure(c, ctx),
        Command::Mobius(c) => run_mobius(c, ctx),
        Command::Perm(c) => run_perm(c, ctx),
    }
}

fn word_echo(arg: &WordArg) -> Echo {
    let echo = Echo::new().add("word", &arg.word);
    match arg.rank {
        Some(r) => echo.add("rank", r),
        None => echo,
    }
}

fn subgroup_echo(arg: &SubgroupArg) -> Echo {
    let echo = Echo::new().add_all("gen", &arg.gens);
    match arg.rank {
        Some(r) => echo.add("rank", r),
        None => echo,
    }
}

fn with_ext(echo: Echo, ext: &ExtArgs) -> Echo {
    echo.add("rank_cap", ext.rank_cap).add("vertex_cap", ext.vertex_cap)
}

fn run_word(cmd: &WordCmd, ctx: &Ctx) -> CliResult<Output> {
    choose(ctx.format, JSON)?;
    match cmd {
        WordCmd::Parse(arg) => {
            let w = word_of(arg)?;
            let body = json!({
                "word": w.to_string(),
                "length": w.len(),
                "rank": w.rank(),
                "cyclically_reduced": w.is_cyclically_reduced(),
            });
            let summary = format!("{} reduces to {} (length {}, rank {})", arg.word, w, w.len(), w.rank());
            Ok(output("word parse", word_echo(arg), Body::Json(body), summary))
        }
        WordCmd::Reduce(arg) => {
            let w = word_of(arg)?;
            let (core, conj) = w.cyclic_reduce();
            let body = json!({
                "word": w.to_string(),
                "cyclic_core": core.to_string(),
                "conjugator": conj.to_string(),
            });
            let summary = format!("{w} = c u c^-1 with u = {core}, c = {conj}");
            Ok(output("word reduce", word_echo(arg), Body::Json(body), summary))
        }
        WordCmd::Root(arg) => {
            let w = word_of(arg)?;
            let (root, e) = w.maximal_root()?;
            let body = json!({"word": w.to_string(), "root": root.to_string(), "exponent": e});
            let summary = format!("{w} = ({root})^{e}");
            Ok(output("word root", word_echo(arg), Body::Json(body), summary))
        }
        WordCmd::Substitute { word, images } => {
            let w = word_of(word)?;
            let (imgs, _) = words_in_common_rank(images, None)?;
            let result = w.substitute(&imgs)?;
            let body = json!({
                "word": w.to_string(),
                "images": imgs.iter().map(|u| u.to_string()).collect::<Vec<_>>(),
                "result": result.to_string(),
            });
            let summary = format!("{w} becomes {result}");
            Ok(output("word substitute", word_echo(word).add_all("image", images), Body::Json(body), summary))
        }
    }
}

fn run_graph(cmd: &GraphCmd, ctx: &Ctx) -> CliResult<Output> {
    match cmd {
        GraphCmd::Fold(arg) => {
            let format = choose(ctx.format, &[Format::Dot, Format::Json])?;
            let (_, _, g) = subgroup_of(arg)?;
            let body = match format {
                Format::Dot => Body::Dot(g.to_dot()),
                _ => Body::Json(graph_json(&g)),
            };
            let summary = format!(
                "core graph of {}: {} vertices, {} edges, rank {}",
                subgroup_text(&g),
                g.num_vertices(),
                g.num_edges(),
                g.rank()
            );
            Ok(output("graph fold", subgroup_echo(arg), body, summary))
        }
        GraphCmd::Quotients { subgroup, ext } => {
            choose(ctx.format, JSON)?;
            let (_, _, g) = subgroup_of(subgroup)?;
            let qs = g.quotients(ext.vertex_cap)?;
            let list: Vec<Value> = qs
                .iter()
                .map(|q| json!({"key": q.key_hex(), "rank": q.rank(), "vertices": q.num_vertices(), "basis": basis_strings(q)}))
                .collect();
            let body = json!({"subgroup": basis_strings(&g), "quotients": list});
            let summary = format!("{} has {} X-quotients", subgroup_text(&g), qs.len());
            Ok(output("graph quotients", with_ext(subgroup_echo(subgroup), ext), Body::Json(body), summary))
        }
    }
}

fn run_ext(cmd: &ExtCmd, ctx: &Ctx) -> CliResult<Output> {
    match cmd {
        ExtCmd::List { subgroup, ext } => {
            let format = choose(ctx.format, &[Format::Json, Format::Dot])?;
            let cfg = ext_config(ext);
            let (_, _, h) = subgroup_of(subgroup)?;
            let mut poset = algebraic_extensions(&h, &cfg)?;
            let (pi, c) = poset.pi();
            let count = poset.algebraic_indices().len();
            let body = match format {
                Format::Dot => Body::Dot(poset.to_dot()),
                _ => {
                    poset.decide_all_marks(&cfg)?;
                    Body::Json(poset.to_json())
                }
            };
            let summary = format!(
                "{} has {count} algebraic extensions among {} X-quotients; pi = {pi}, C = {c}",
                subgroup_text(&h),
                poset.nodes().len()
            );
            Ok(output("ext list", with_ext(subgroup_echo(subgroup), ext), body, summary))
        }
        ExtCmd::Pi { word, ext } => {
            choose(ctx.format, JSON)?;
            let cfg = ext_config(ext);
            let w = word_of(word)?;
            let h = CoreGraph::from_generators(std::slice::from_ref(&w), w.rank().max(1));
            let poset = algebraic_extensions(&h, &cfg)?;
            let (pi, c) = poset.pi();
            let extensions: Vec<Value> = poset
                .algebraic_indices()
                .into_iter()
                .map(|i| {
                    let g = &poset.nodes()[i];
                    json!({
                        "basis": basis_strings(g),
                        "rank": g.rank(),
                        "vertices": g.num_vertices(),
                        "proper": i != poset.base_index(),
                    })
                })
                .collect();
            let body = json!({"word": w.to_string(), "pi": pi, "C": c, "extensions": extensions});
            let summary = format!("pi({w}) = {pi}, C = {c}");
            Ok(output("ext pi", with_ext(word_echo(word), ext), Body::Json(body), summary))
        }
        ExtCmd::PiIota { subgroup, images, ext } => {
            choose(ctx.format, JSON)?;
            let cfg = ext_config(ext);
            let (_, k, h) = subgroup_of(subgroup)?;
            let (imgs, _) = words_in_common_rank(images, None)?;
            let report = pi_iota(&h, k, &imgs, &cfg)?;
            let summary = format!(
                "pi_iota({}) = {}, C = {}; images generate a free factor: {}",
                subgroup_text(&h),
                report.value,
                report.count,
                report.image_is_free_factor
            );
            let body = json!({
                "subgroup": basis_strings(&h),
                "images": imgs.iter().map(|u| u.to_string()).collect::<Vec<_>>(),
                "pi_iota": report.value,
                "C": report.count,
                "outside_ranks": report.outside_ranks,
                "image_is_free_factor": report.image_is_free_factor,
            });
            let echo = with_ext(subgroup_echo(subgroup).add_all("image", images), ext);
            Ok(output("ext pi-iota", echo, Body::Json(body), summary))
        }
        ExtCmd::FfClosure { subgroup, over, ext } => {
            choose(ctx.format, JSON)?;
            let cfg = ext_config(ext);
            let mut all = subgroup.gens.clone();
            all.extend(over.iter().cloned());
            let (words, r) = words_in_common_rank(&all, subgroup.rank)?;
            let (hg, jg) = words.split_at(subgroup.gens.len());
            let h = CoreGraph::from_generators(hg, r);
            let j = CoreGraph::from_generators(jg, r);
            let a = ff_closure(&h, &j, &cfg)?;
            let body = json!({
                "subgroup": basis_strings(&h),
                "over": basis_strings(&j),
                "closure": basis_strings(&a),
                "rank": a.rank(),
                "algebraic_in_over": a == j,
                "closure_is_subgroup": a == h,
            });
            let summary = format!("free-factor closure of {} in {} is {}", subgroup_text(&h), subgroup_text(&j), subgroup_text(&a));
            let echo = with_ext(subgroup_echo(subgroup).add_all("over", over), ext);
            Ok(output("ext ff-closure", echo, Body::Json(body), summary))
        }
    }
}

fn group_echo(echo: Echo, g: &GroupArg) -> Echo {
    echo.add("group", &g.group).add("mode", "exact")
}

fn run_measure(cmd: &MeasureCmd, ctx: &Ctx) -> CliResult<Output> {
    match cmd {
        MeasureCmd::Trw { word, range, mode } => {
            let format = choose(ctx.format, CSV_JSON)?;
            let w = word_of(word)?;
            let ns = parse_range(&range.n)?;
            let echo = word_echo(word).add("n", range_text(&ns));
            if mode.mc {
                let (Some(samples), Some(seed)) = (mode.samples, mode.seed) else {
                    return Err(usage("--mc needs both --samples and --seed"));
                };
                let estimates: Vec<_> =
                    ns.iter().map(|&n| Ok((n, trw_monte_carlo(&w, n, samples, seed)?))).collect::<CliResult<_>>()?;
                let mut summary = format!("Monte Carlo Tr_w(N) for w = {w}, {samples} samples, seed {seed}");
                for (n, e) in &estimates {
                    let _ = write!(summary, "\n  N = {n}: {} +- {}", e.estimate, e.standard_error);
                }
                let body = match format {
                    Format::Csv => {
                        let mut s = String::from("N,estimate,standard_error,samples\n");
                        for (n, e) in &estimates {
                            let _ = writeln!(s, "{n},{},{},{}", e.estimate, e.standard_error, e.samples);
                        }
                        Body::Csv(s)
                    }
                    _ => {
                        let values: Vec<Value> = estimates
                            .iter()
                            .map(|(n, e)| json!({"N": n, "estimate": e.estimate, "standard_error": e.standard_error, "samples": e.samples}))
                            .collect();
                        Body::Json(json!({"word": w.to_string(), "mode": "mc", "values": values}))
                    }
                };
                let echo = echo.add("mode", "mc").add("samples", samples);
                let mut out = output("measure trw", echo, body, summary);
                out.seed = Some(seed);
                return Ok(out);
            }
            if mode.samples.is_some() || mode.seed.is_some() {
                return Err(usage("exact mode forbids --samples and --seed (use --mc)"));
            }
            let values = trw_sweep(&w, &ns, ctx.budget)?;
            let mut summary = format!("exact Tr_w(N) for w = {w}");
            for (n, q) in &values {
                let _ = write!(summary, "\n  N = {n}: {q}");
            }
            let body = match format {
                Format::Csv => Body::Csv(exact_csv(&values)),
                _ => Body::Json(json!({"word": w.to_string(), "mode": "exact", "values": exact_json(&values)})),
            };
            Ok(output("measure trw", echo.add("mode", "exact"), body, summary))
        }
        MeasureCmd::Phi { subgroup, range } => {
            let format = choose(ctx.format, CSV_JSON)?;
            let (gens, r, h) = subgroup_of(subgroup)?;
            let ns = parse_range(&range.n)?;
            let values: Vec<_> =
                ns.iter().map(|&n| Ok((n, phi_exact(&gens, r, n, ctx.budget)?))).collect::<CliResult<_>>()?;
            let mut summary = format!("exact Phi_{{H,F_{r}}}(N) for H = {}", subgroup_text(&h));
            for (n, q) in &values {
                let _ = write!(summary, "\n  N = {n}: {q}");
            }
            let body = match format {
                Format::Csv => Body::Csv(exact_csv(&values)),
                _ => Body::Json(json!({"subgroup": basis_strings(&h), "rank": r, "values": exact_json(&values)})),
            };
            let echo = subgroup_echo(subgroup).add("n", range_text(&ns)).add("mode", "exact");
            Ok(output("measure phi", echo, body, summary))
        }
        MeasureCmd::Table { word, group } => {
            let format = choose(ctx.format, CSV_JSON)?;
            let w = word_of(word)?;
            let g = parse_group(&group.group)?;
            let table = word_measure_exact(&w, &g, ctx.budget)?;
            let mut summary = format!("{w}-measure on {}", g.name());
            for c in table.support() {
                let _ = write!(summary, "\n  {}: {}", c.label, c.probability);
            }
            let body = match format {
                Format::Csv => Body::Csv(table.to_csv()),
                _ => Body::Json(serde_json::to_value(&table).expect("measure tables serialize")),
            };
            Ok(output("measure table", group_echo(word_echo(word), group), body, summary))
        }
        MeasureCmd::Compare { w1, w2, group } => {
            let format = choose(ctx.format, JSON_CSV)?;
            let (words, _) = words_in_common_rank(&[w1.clone(), w2.clone()], None)?;
            let g = parse_group(&group.group)?;
            let verdict = compare_measures(&words[0], &words[1], &g, ctx.budget)?;
            let summary = match &verdict {
                MeasureComparison::Equal => format!("{} and {} induce equal measures on {}", words[0], words[1], g.name()),
                MeasureComparison::Unequal { class, first, second } => format!(
                    "{} and {} induce unequal measures on {}: class {class} has {first} vs {second}",
                    words[0],
                    words[1],
                    g.name()
                ),
            };
            let body = match format {
                Format::Csv => {
                    let mut s = String::from("group,verdict,class,first,second\n");
                    match &verdict {
                        MeasureComparison::Equal => {
                            let _ = writeln!(s, "{},equal,,,", g.name());
                        }
                        MeasureComparison::Unequal { class, first, second } => {
                            let _ = writeln!(s, "{},unequal,{class},{first},{second}", g.name());
                        }
                    }
                    Body::Csv(s)
                }
                _ => {
                    let mut v = serde_json::to_value(&verdict).expect("verdicts serialize");
                    v["w1"] = json!(words[0].to_string());
                    v["w2"] = json!(words[1].to_string());
                    v["group"] = json!(g.name());
                    Body::Json(v)
                }
            };
            let echo = group_echo(Echo::new().add("w1", w1).add("w2", w2), group);
            Ok(output("measure compare", echo, body, summary))
        }
        MeasureCmd::Epiim { word, group } => {
            let format = choose(ctx.format, JSON_CSV)?;
            let w = word_of(word)?;
            let g = parse_group(&group.group)?;
            let image = epi_image(&w, &g, ctx.budget)?;
            let names: Vec<String> = image.iter().map(|&a| g.element_name(a).to_string()).collect();
            let summary = format!(
                "{w} takes {} of the {} elements of {} under epimorphisms",
                names.len(),
                g.order(),
                g.name()
            );
            let body = match format {
                Format::Csv => {
                    let mut s = String::from("element\n");
                    for n in &names {
                        let _ = writeln!(s, "{n}");
                    }
                    Body::Csv(s)
                }
                _ => Body::Json(json!({"word": w.to_string(), "group": g.name(), "order": g.order(), "image": names})),
            };
            Ok(output("measure epiim", group_echo(word_echo(word), group), body, summary))
        }
    }
}

fn exact_json(values: &[(usize, freewords::BigRational)]) -> Vec<Value> {
    values
        .iter()
        .map(|(n, q)| json!({"N": n, "value": q.to_string(), "decimal": decimal_string(q, 15)}))
        .collect()
}

fn rows_json(rows: &[ComparisonRow]) -> Value {
    serde_json::to_value(rows).expect("rows serialize")
}

fn run_mobius(cmd: &MobiusCmd, ctx: &Ctx) -> CliResult<Output> {
    match cmd {
        MobiusCmd::Derive { subgroup, range, ext } => {
            let format = choose(ctx.format, JSON_CSV)?;
            let cfg = MobiusConfig { extensions: ext_config(ext), budget: ctx.budget };
            let (_, _, h) = subgroup_of(subgroup)?;
            let ns = parse_range(&range.n)?;
            let tables = ns.iter().map(|&n| Ok(derive_r(&h, n, &cfg)?)).collect::<CliResult<Vec<_>>>()?;
            let mut summary = format!("Möbius derivation for H = {}", subgroup_text(&h));
            let mut failure = None;
            for t in &tables {
                let _ = write!(summary, "\n  N = {}: Phi_{{H,F}} = {}", t.n(), t.total());
                if let Some(node) = t.check_reconstruction() {
                    failure = Some(CliError::Core(freewords::Error::Internal(format!(
                        "Phi is not the sum of R below node {node} at N = {}",
                        t.n()
                    ))));
                }
            }
            let body = match format {
                Format::Csv => {
                    let mut s = String::from("N,node,rank,basis,phi_num,phi_den,R_num,R_den\n");
                    for t in &tables {
                        for &j in t.order() {
                            let g = &t.poset().nodes()[j];
                            let (phi, r) = (t.phi(j).expect("ordered node"), t.value(j).expect("ordered node"));
                            let _ = writeln!(
                                s,
                                "{},{j},{},{},{},{},{},{}",
                                t.n(),
                                g.rank(),
                                basis_strings(g).join(" "),
                                phi.numer(),
                                phi.denom(),
                                r.numer(),
                                r.denom()
                            );
                        }
                    }
                    Body::Csv(s)
                }
                _ => Body::Json(json!({
                    "subgroup": basis_strings(&h),
                    "tables": tables.iter().map(|t| t.to_json()).collect::<Vec<_>>(),
                })),
            };
            let echo = with_ext(subgroup_echo(subgroup).add("n", range_text(&ns)), ext);
            let mut out = output("mobius derive", echo, body, summary);
            out.failure = failure;
            Ok(out)
        }
        MobiusCmd::ViaExpansion { subgroup, range, ext } => {
            let format = choose(ctx.format, CSV_JSON)?;
            let cfg = MobiusConfig { extensions: ext_config(ext), budget: ctx.budget };
            let (gens, r, h) = subgroup_of(subgroup)?;
            let ns = parse_range(&range.n)?;
            let mut rows = Vec::new();
            for &n in &ns {
                let lhs = phi_via_expansion(&h, r, n, &cfg)?;
                let rhs = phi_exact(&gens, r, n, ctx.budget)?;
                let verdict = if lhs == rhs { "equal" } else { "differs" }.to_string();
                rows.push(ComparisonRow { n, lhs, rhs, verdict });
            }
            let bad: Vec<usize> = rows.iter().filter(|r| r.lhs != r.rhs).map(|r| r.n).collect();
            let mut summary = format!("Phi via derivation vs direct enumeration for H = {}", subgroup_text(&h));
            for row in &rows {
                let _ = write!(summary, "\n  N = {}: {} vs {} ({})", row.n, row.lhs, row.rhs, row.verdict);
            }
            let body = match format {
                Format::Csv => Body::Csv(rows_csv(&rows)),
                _ => Body::Json(json!({"subgroup": basis_strings(&h), "rows": rows_json(&rows)})),
            };
            let echo = with_ext(subgroup_echo(subgroup).add("n", range_text(&ns)), ext);
            let mut out = output("mobius via-expansion", echo, body, summary);
            if !bad.is_empty() {
                out.failure = Some(CliError::Core(freewords::Error::Internal(format!(
                    "derivation disagrees with enumeration at N = {bad:?}"
                ))));
            }
            Ok(out)
        }
        MobiusCmd::Fit { word, range, ext } => {
            let format = choose(ctx.format, JSON_CSV)?;
            let cfg = MobiusConfig { extensions: ext_config(ext), budget: ctx.budget };
            let w = word_of(word)?;
            let ns = parse_range(&range.n)?;
            let report = fit_expansion(&w, &ns, &cfg)?;
            let summary = format!(
                "fit for {w}: pi = {}, C = {:.4} (mean {:.4}); combinatorial pi = {}, C = {}; agree: {}",
                report.fit.pi_estimate,
                report.fit.c_estimate,
                report.fit.c_mean,
                report.combinatorial.0,
                report.combinatorial.1,
                report.agrees
            );
            let body = match format {
                Format::Csv => Body::Csv(exact_csv(&report.values)),
                _ => Body::Json(serde_json::to_value(&report).expect("reports serialize")),
            };
            let echo = with_ext(word_echo(word).add("n", range_text(&ns)), ext);
            Ok(output("mobius fit", echo, body, summary))
        }
        MobiusCmd::Thm14 { word, images, range, ext } => {
            let format = choose(ctx.format, CSV_JSON)?;
            let cfg = MobiusConfig { extensions: ext_config(ext), budget: ctx.budget };
            let w = word_of(word)?;
            let (imgs, _) = words_in_common_rank(images, None)?;
            let ns = parse_range(&range.n)?;
            let report = check_theorem_1_4(&w, &imgs, &ns, &cfg)?;
            let mut summary = format!(
                "Tr_w vs Tr_w(u) for w = {}, w(u) = {}: pi_iota = {}, C = {}",
                report.word, report.substituted, report.pi_iota, report.c
            );
            for row in &report.rows {
                let _ = write!(summary, "\n  N = {}: {} vs {} ({})", row.n, row.lhs, row.rhs, row.verdict);
            }
            let _ = write!(summary, "\n  strict at every N: {}", report.all_strict);
            let body = match format {
                Format::Csv => Body::Csv(rows_csv(&report.rows)),
                _ => Body::Json(serde_json::to_value(&report).expect("reports serialize")),
            };
            let echo = with_ext(word_echo(word).add_all("image", images).add("n", range_text(&ns)), ext);
            Ok(output("mobius thm14", echo, body, summary))
        }
        MobiusCmd::PowerGap { word, d, range } => {
            let format = choose(ctx.format, CSV_JSON)?;
            let w = word_of(word)?;
            let ns = parse_range(&range.n)?;
            let report = check_power_gap(&w, *d, &ns, ctx.budget)?;
            let mut summary = format!("Tr_(u^d) - Tr_u for u = {w}, d = {d}; divisors of d: {}", report.divisors);
            for row in &report.rows {
                let _ = write!(summary, "\n  N = {}: {} ({} target {})", row.n, row.lhs, row.verdict, row.rhs);
            }
            let body = match format {
                Format::Csv => Body::Csv(rows_csv(&report.rows)),
                _ => Body::Json(serde_json::to_value(&report).expect("reports serialize")),
            };
            let echo = word_echo(word).add("d", d).add("n", range_text(&ns));
            Ok(output("mobius power-gap", echo, body, summary))
        }
    }
}

fn ordinal(d: u64) -> String {
    let suffix = match (d % 10, d % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    };
    format!("{d}{suffix}")
}

fn perm_of(arg: &PermArg) -> CliResult<Permutation> {
    Ok(Permutation::parse_cycles(&arg.perm, arg.degree)?)
}

fn perm_echo(arg: &PermArg) -> Echo {
    Echo::new().add("perm", &arg.perm).add("degree", arg.degree)
}

fn run_perm(cmd: &PermCmd, ctx: &Ctx) -> CliResult<Output> {
    match cmd {
        PermCmd::CycleType(arg) => {
            let format = choose(ctx.format, JSON_CSV)?;
            let p = perm_of(arg)?;
            let ct = p.cycle_type();
            let body = match format {
                Format::Csv => {
                    let mut s = String::from("t,count\n");
                    for (t, c) in ct.counts() {
                        let _ = writeln!(s, "{t},{c}");
                    }
                    Body::Csv(s)
                }
                _ => {
                    let counts: serde_json::Map<String, Value> =
                        ct.counts().iter().map(|(t, c)| (t.to_string(), json!(c))).collect();
                    Body::Json(json!({"perm": p.to_string(), "degree": p.degree(), "cycle_type": ct.partition_label(), "counts": counts}))
                }
            };
            let summary = format!("{p} has cycle type {}", ct.partition_label());
            Ok(output("perm cycle-type", perm_echo(arg), body, summary))
        }
        PermCmd::IsPower { perm, d } => {
            choose(ctx.format, JSON)?;
            let p = perm_of(perm)?;
            let answer = is_dth_power(&p, *d);
            let criterion: Vec<Value> = p
                .cycle_type()
                .counts()
                .iter()
                .map(|(&t, &c)| {
                    let m = root_multiplicity(t as u64, *d);
                    json!({"t": t, "count": c, "m_t": m, "divisible": m != 0 && (c as u64).is_multiple_of(m)})
                })
                .collect();
            let body = json!({"perm": p.to_string(), "d": d, "is_power": answer, "criterion": criterion});
            let summary = format!("{p} is {}a {} power", if answer { "" } else { "not " }, ordinal(*d));
            Ok(output("perm is-power", perm_echo(perm).add("d", d), Body::Json(body), summary))
        }
        PermCmd::Root { perm, d } => {
            choose(ctx.format, JSON)?;
            let p = perm_of(perm)?;
            let root = dth_root(&p, *d);
            let body = json!({"perm": p.to_string(), "d": d, "root": root.as_ref().map(|r| r.to_string())});
            let summary = match &root {
                Some(r) => format!("({r})^{d} = {p}"),
                None => format!("{p} is not a {} power", ordinal(*d)),
            };
            Ok(output("perm root", perm_echo(perm).add("d", d), Body::Json(body), summary))
        }
        PermCmd::Moments { b, t, range } => {
            let format = choose(ctx.format, CSV_JSON)?;
            let ns = parse_range(&range.n)?;
            let moments = ns.iter().map(|&n| Ok(moments_exact(*b, *t, n, ctx.budget)?)).collect::<CliResult<Vec<_>>>()?;
            let mut summary = format!("moments of c_{t}(sigma^{b})");
            for m in &moments {
                let _ = write!(
                    summary,
                    "\n  N = {}: first {} (predicted {}{}), second {} (predicted {}{})",
                    m.n,
                    m.first,
                    m.predicted_first(),
                    if m.first_in_range { "" } else { ", N < bt" },
                    m.second,
                    m.predicted_second(),
                    if m.second_in_range { "" } else { ", N < 2bt" }
                );
            }
            let body = match format {
                Format::Csv => {
                    let mut s = String::from(
                        "N,first_num,first_den,second_num,second_den,first_in_range,second_in_range,first_matches,second_matches\n",
                    );
                    for m in &moments {
                        let _ = writeln!(
                            s,
                            "{},{},{},{},{},{},{},{},{}",
                            m.n,
                            m.first.numer(),
                            m.first.denom(),
                            m.second.numer(),
                            m.second.denom(),
                            m.first_in_range,
                            m.second_in_range,
                            m.first == m.predicted_first(),
                            m.second == m.predicted_second()
                        );
                    }
                    Body::Csv(s)
                }
                _ => {
                    let rows: Vec<Value> = moments
                        .iter()
                        .map(|m| {
                            let mut v = serde_json::to_value(m).expect("moments serialize");
                            v["predicted_first"] = json!(m.predicted_first().to_string());
                            v["predicted_second"] = json!(m.predicted_second().to_string());
                            v
                        })
                        .collect();
                    Body::Json(json!({"b": b, "t": t, "moments": rows}))
                }
            };
            let echo = Echo::new().add("b", b).add("t", t).add("n", range_text(&ns)).add("mode", "exact");
            Ok(output("perm moments", echo, body, summary))
        }
        PermCmd::Obstruction { word, d, range, samples, seed } => {
            choose(ctx.format, JSON)?;
            let w = word_of(word)?;
            let ns = parse_range(&range.n)?;
            let report = word_power_obstruction(&w, *d, &ns, *samples, *seed, ctx.budget)?;
            let summary = match &report.witness {
                Some(wit) => format!(
                    "{w} is not a {} power under x_i -> [{}] in S_{}: image {}",
                    ordinal(*d),
                    wit.images.join(", "),
                    wit.n,
                    wit.value
                ),
                None => format!("no obstruction found for {w}, d = {d}, N in {}", range_text(&ns)),
            };
            let body = serde_json::to_value(&report).expect("reports serialize");
            let echo = word_echo(word).add("d", d).add("n", range_text(&ns)).add("samples", samples);
            let mut out = output("perm obstruction", echo, Body::Json(body), summary);
            out.seed = Some(*seed);
            Ok(out)
        }
    }
}
