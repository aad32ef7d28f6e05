use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use stenoscan::ml::Matrix;
use stenoscan::model::VesselId;
use stenoscan::tasks::report::{self, Series};
use stenoscan::tasks::{
    boundary_grid, combination_search, default_sizes, like_for_like, multiclass_evaluate,
    size_summary, vpd_size_sweep, EvalConfig, MeasurementCombination, Method, Scheme, Strategy,
};
use stenoscan::vpd::{build_vpd_with, Dataset, HealthClass, VpdConfig};
use stenoscan::{Error, Result};

use crate::{EvalArgs, GenerateArgs, MulticlassArgs, SearchArgs, SweepArgs};

fn read_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| Error::invalid("config", format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::invalid("config", format!("{}: {e}", path.display())))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut json = serde_json::to_string_pretty(value)?;
    json.push('\n');
    write(dir, name, &json)
}

pub fn generate(a: &GenerateArgs, workers: usize) -> Result<()> {
    let mut config: VpdConfig = read_config(a.config.as_deref())?;
    if let Some(n) = a.n {
        config.n_target = n;
    }
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    config.validate()?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    println!(
        "generating {} patients (seed {}, {workers} workers)",
        config.n_target, config.seed
    );
    let mut shown = 0;
    let (dataset, _) = build_vpd_with(&config, workers, |p| {
        let decile = 10 * p.accepted / p.target.max(1);
        if decile > shown {
            shown = decile;
            println!(
                "  {}/{} accepted after {} attempts",
                p.accepted, p.target, p.attempts
            );
        }
    })?;
    dataset.save(&a.out)?;
    println!("wrote {} and its metadata", a.out.display());
    Ok(())
}

struct Loaded {
    features: Matrix,
    classes: Vec<HealthClass>,
}

fn load(path: &Path) -> Result<Loaded> {
    let dataset = Dataset::load(path)?;
    if dataset.is_empty() {
        return Err(Error::Data(format!("{} holds no patients", path.display())));
    }
    println!("loaded {} patients from {}", dataset.len(), path.display());
    Ok(Loaded {
        features: Matrix::from_rows(&dataset.feature_rows())?,
        classes: dataset.classes(),
    })
}

fn eval_config(a: &EvalArgs, boundary: Option<f64>) -> Result<EvalConfig> {
    let mut config: EvalConfig = read_config(a.config.as_deref())?;
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    if let Some(folds) = a.folds {
        config.folds = folds;
    }
    if let Some(ratio) = a.ratio {
        config.ratio = ratio;
    }
    if let Some(b) = boundary {
        config.boundary = b;
    }
    config.validate()?;
    Ok(config)
}

fn output_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path)?;
    Ok(())
}

#[derive(Serialize)]
struct SearchRun<'a> {
    command: &'static str,
    dataset: &'a Path,
    scheme: Scheme,
    methods: &'a [Method],
    config: &'a EvalConfig,
}

pub fn search(a: &SearchArgs, workers: usize) -> Result<()> {
    let scheme: Scheme = a.scheme.parse()?;
    if !scheme.is_binary() {
        return Err(Error::invalid(
            "scheme",
            "search takes `enbc` or `ivbc:<vessel>`",
        ));
    }
    let methods = match &a.methods {
        Some(list) => Method::parse_list(list)?,
        None => Method::ALL
            .into_iter()
            .filter(|&m| m != Method::Nb || scheme == Scheme::Enbc || a.include_nb)
            .collect(),
    };
    let config = eval_config(&a.eval, a.boundary)?;
    let data = load(&a.eval.dataset)?;
    output_dir(&a.eval.out)?;
    let run = SearchRun {
        command: "search",
        dataset: &a.eval.dataset,
        scheme,
        methods: &methods,
        config: &config,
    };
    write_json(&a.eval.out, "run.json", &run)?;

    let names: Vec<&str> = methods.iter().map(|m| m.name()).collect();
    println!(
        "searching 63 combinations with {} ({scheme}, {workers} workers)",
        names.join(", ")
    );
    let table = combination_search(
        &data.features,
        &data.classes,
        scheme,
        &methods,
        &config,
        workers,
    )?;
    let failed = table.cells.iter().filter(|c| c.error.is_some()).count();
    if failed > 0 {
        println!("{failed} cells failed; see search.json");
    }
    let sizes = size_summary(&table);
    let (pairs, discrepancy) = like_for_like(&table);
    let dir = &a.eval.out;
    write_json(dir, "search.json", &table)?;
    write(dir, "search.csv", &report::search_csv(&table)?)?;
    write(dir, "sizes.csv", &report::sizes_csv(&sizes)?)?;
    write(
        dir,
        "like_for_like.csv",
        &report::like_for_like_csv(&pairs)?,
    )?;
    write(
        dir,
        "discrepancy.csv",
        &report::discrepancy_csv(&discrepancy)?,
    )?;
    let series: Vec<Series> = methods
        .iter()
        .map(|&m| Series {
            name: m.to_string(),
            points: sizes
                .iter()
                .filter(|s| s.method == m)
                .map(|s| (s.size as f64, s.mean_f))
                .collect(),
        })
        .collect();
    write(
        dir,
        "sizes.svg",
        &report::line_plot_svg(
            "Mean F by number of measurements",
            "measurements",
            "mean F",
            &series,
        ),
    )?;
    for &m in &methods {
        if let Some(best) = table.best(m) {
            println!(
                "  best {m}: {} (F {:.3})",
                best.combination,
                best.test_f().unwrap_or(f64::NAN)
            );
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct MulticlassRun<'a> {
    command: &'static str,
    dataset: &'a Path,
    strategy: Strategy,
    combination: MeasurementCombination,
    roc_points: Option<usize>,
    config: &'a EvalConfig,
}

pub fn multiclass(a: &MulticlassArgs) -> Result<()> {
    let strategy: Strategy = a.strategy.parse()?;
    let combination = match &a.combination {
        Some(c) => c.parse()?,
        None => MeasurementCombination::all_six(),
    };
    if a.roc && strategy != Strategy::Cpc {
        return Err(Error::invalid(
            "roc",
            "the ROC curve sweeps the CPC boundary; use --strategy cpc",
        ));
    }
    if a.roc && a.roc_points < 2 {
        return Err(Error::invalid("roc-points", "need at least 2 boundaries"));
    }
    let config = eval_config(&a.eval, a.boundary)?;
    let data = load(&a.eval.dataset)?;
    output_dir(&a.eval.out)?;
    let roc_points = a.roc.then_some(a.roc_points);
    let run = MulticlassRun {
        command: "multiclass",
        dataset: &a.eval.dataset,
        strategy,
        combination,
        roc_points,
        config: &config,
    };
    write_json(&a.eval.out, "run.json", &run)?;

    println!("{strategy} on {combination}, boundary {}", config.boundary);
    let plan = config.fold_plan(&data.classes)?;
    let grid = roc_points.map(boundary_grid);
    let result = multiclass_evaluate(
        &data.features,
        &data.classes,
        strategy,
        combination,
        &plan,
        &config,
        grid.as_deref(),
    )?;
    let dir = &a.eval.out;
    write_json(dir, "multiclass.json", &result)?;
    write(dir, "multiclass.csv", &report::multiclass_csv(&result)?)?;
    for c in &result.mean {
        println!(
            "  {} ({}): Se {:.3}, Sp {:.3}",
            c.class.label(),
            c.class,
            c.sensitivity,
            c.specificity
        );
    }
    if let Some(roc) = &result.roc {
        write(dir, "roc.csv", &report::roc_csv(roc)?)?;
        let curve = Series {
            name: format!("AUC {:.3}", roc.auc),
            points: roc
                .points
                .iter()
                .map(|p| (p.false_positive_rate, p.true_positive_rate))
                .collect(),
        };
        let chance = Series {
            name: "chance".into(),
            points: vec![(0.0, 0.0), (1.0, 1.0)],
        };
        write(
            dir,
            "roc.svg",
            &report::line_plot_svg(
                "Healthy-class ROC",
                "false positive rate",
                "true positive rate",
                &[curve, chance],
            ),
        )?;
        println!("  AUC {:.3}", roc.auc);
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepRun<'a> {
    command: &'static str,
    dataset: &'a PathBuf,
    sizes: &'a [usize],
    config: &'a EvalConfig,
}

fn parse_sizes(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse()
                .map_err(|_| Error::invalid("sizes", format!("`{p}` is not a count")))
        })
        .collect()
}

pub fn size_sweep(a: &SweepArgs, workers: usize) -> Result<()> {
    let config = eval_config(&a.eval, None)?;
    let requested = a.sizes.as_deref().map(parse_sizes).transpose()?;
    if requested.as_ref().is_some_and(Vec::is_empty) {
        return Err(Error::invalid("sizes", "at least one size is required"));
    }
    let data = load(&a.eval.dataset)?;
    let n = data.classes.len();
    let sizes = requested.unwrap_or_else(|| default_sizes(n));
    if let Some(&s) = sizes.iter().find(|&&s| s > n || s == 0) {
        return Err(Error::invalid("sizes", format!("size {s} outside 1..={n}")));
    }
    output_dir(&a.eval.out)?;
    let run = SweepRun {
        command: "size-sweep",
        dataset: &a.eval.dataset,
        sizes: &sizes,
        config: &config,
    };
    write_json(&a.eval.out, "run.json", &run)?;

    println!("sweeping sizes {sizes:?} ({workers} workers)");
    let rows = vpd_size_sweep(&data.features, &data.classes, &sizes, &config, workers)?;
    let dir = &a.eval.out;
    write(dir, "sweep.csv", &report::sweep_csv(&rows)?)?;
    let mut series = Vec::new();
    for vessel in VesselId::ALL {
        for (label, pick) in [("train", true), ("test", false)] {
            series.push(Series {
                name: format!("{vessel} {label}"),
                points: rows
                    .iter()
                    .filter(|r| r.vessel == vessel)
                    .map(|r| (r.size as f64, if pick { r.train_f } else { r.test_f }))
                    .collect(),
            });
        }
    }
    write(
        dir,
        "sweep.svg",
        &report::line_plot_svg("IVBC F by cohort size", "patients", "F", &series),
    )?;
    Ok(())
}
