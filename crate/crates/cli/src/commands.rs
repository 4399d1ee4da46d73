use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use csv::StringRecord;
use cwb::experiment::{median, run_experiment_with, scheme_weights, Experiment};
use cwb::{
    continuous_weights, discrete_weights, histogram_export, load_csv, weighted_ks, Dataset,
    DensityModel, EvalReport, Execution, LabelTransform, Scheme, TargetDecl, TargetSpec,
    TraitSource, WeightOptions, WeightVector,
};

use crate::config::{DatasetSchema, RunConfig};
use crate::{BaselineArgs, CliError, DensityArgs, ReproduceArgs, TraitArgs, WeighArgs, WeightFlags};

/// A CSV held in memory together with the parsed trait column.
struct TraitTable {
    header: StringRecord,
    records: Vec<StringRecord>,
    traits: Vec<f64>,
    trait_name: String,
    delimiter: u8,
    missing: String,
    config: Option<RunConfig>,
    schema: Option<DatasetSchema>,
}

impl TraitTable {
    fn load(args: &TraitArgs) -> Result<Self, CliError> {
        let config = args.config.as_deref().map(RunConfig::load).transpose()?;
        let schema_path = args
            .schema
            .clone()
            .or_else(|| config.as_ref().map(|c| c.schema.clone()));
        let schema = schema_path.as_deref().map(DatasetSchema::load).transpose()?;
        let input = args
            .input
            .clone()
            .or_else(|| schema.as_ref().map(|s| s.path.clone()))
            .ok_or_else(|| CliError::Validation("an --input CSV or a --schema is required".into()))?;
        let delimiter = args
            .delimiter
            .or(schema.as_ref().map(|s| s.delimiter))
            .unwrap_or(',');
        if !delimiter.is_ascii() {
            return Err(CliError::Validation(format!("delimiter must be ASCII, got {delimiter:?}")));
        }
        let missing = args
            .missing
            .clone()
            .or_else(|| schema.as_ref().map(|s| s.missing.clone()))
            .unwrap_or_else(|| "?".into());

        let source = match (&args.trait_column, &schema) {
            (Some(t), _) => TraitSource::parse(t),
            (None, Some(s)) => s.trait_source.clone(),
            (None, None) => {
                return Err(CliError::Validation(
                    "a --trait column or a --schema is required".into(),
                ))
            }
        };
        let (column, transform) = match source {
            TraitSource::Column(c) => (c, LabelTransform::None),
            TraitSource::Label => {
                let s = schema.as_ref().ok_or_else(|| {
                    CliError::Validation("--trait label needs a --schema naming the label".into())
                })?;
                (s.label.clone(), s.label_transform)
            }
        };

        let file = std::fs::File::open(&input).map_err(|e| {
            CliError::Validation(format!("cannot open input {}: {e}", input.display()))
        })?;
        let mut rdr = csv::ReaderBuilder::new()
            .delimiter(delimiter as u8)
            .from_reader(file);
        let header = rdr.headers()?.clone();
        let records = rdr.records().collect::<Result<Vec<_>, _>>()?;
        let mut table = TraitTable {
            header,
            records,
            traits: Vec::new(),
            trait_name: column.clone(),
            delimiter: delimiter as u8,
            missing,
            config,
            schema,
        };
        if table.records.is_empty() {
            return Err(CliError::Validation(format!("{} has no data rows", input.display())));
        }
        let raw = table.strict_column(&column)?;
        table.traits = raw
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                let t = match transform {
                    LabelTransform::None => v,
                    LabelTransform::NaturalLog => v.ln(),
                    LabelTransform::Binarize => f64::from(u8::from(v > 0.0)),
                };
                if t.is_finite() {
                    Ok(t)
                } else {
                    Err(CliError::Validation(format!(
                        "row {}: trait value {v} is invalid under {transform:?}",
                        i + 1
                    )))
                }
            })
            .collect::<Result<_, _>>()?;
        Ok(table)
    }

    fn index(&self, name: &str) -> Result<usize, CliError> {
        self.header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| CliError::Validation(format!("missing column `{name}`")))
    }

    /// Every cell of `name` as a number; missing or malformed cells are errors.
    fn strict_column(&self, name: &str) -> Result<Vec<f64>, CliError> {
        let j = self.index(name)?;
        self.records
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let cell = r.get(j).unwrap_or("").trim();
                if cell == self.missing {
                    return Err(CliError::Validation(format!(
                        "row {}: column `{name}` is missing",
                        i + 1
                    )));
                }
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        CliError::Validation(format!(
                            "row {}: column `{name}` has non-numeric value `{cell}`",
                            i + 1
                        ))
                    })
            })
            .collect()
    }

    /// Numeric cells of `name`, skipping missing ones.
    fn reference_column(&self, name: &str) -> Result<Vec<f64>, CliError> {
        let j = self.index(name)?;
        let mut out = Vec::new();
        for (i, r) in self.records.iter().enumerate() {
            let cell = r.get(j).unwrap_or("").trim();
            if cell == self.missing {
                continue;
            }
            let v = cell.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                CliError::Validation(format!(
                    "row {}: column `{name}` has non-numeric value `{cell}`",
                    i + 1
                ))
            })?;
            out.push(v);
        }
        Ok(out)
    }

    fn target_decl(&self, flag: Option<&str>) -> Result<TargetDecl, CliError> {
        if let Some(text) = flag {
            return Ok(TargetDecl::parse(text)?);
        }
        self.config
            .as_ref()
            .and_then(|c| c.target.clone())
            .or_else(|| self.schema.as_ref().and_then(|s| s.target.clone()))
            .ok_or_else(|| CliError::Validation("no target given (use --target or a config)".into()))
    }

    fn resolve_target(&self, decl: &TargetDecl) -> Result<TargetSpec, CliError> {
        let mut lookup_err = None;
        let spec = decl.resolve(|name| {
            self.reference_column(name).map_err(|e| {
                let msg = e.to_string();
                lookup_err = Some(e);
                cwb::Error::InvalidArgument(msg)
            })
        });
        match (spec, lookup_err) {
            (Ok(spec), _) => Ok(spec),
            (Err(_), Some(e)) => Err(e),
            (Err(e), None) => Err(e.into()),
        }
    }

    fn weight_options(&self, flags: &WeightFlags) -> Result<WeightOptions, CliError> {
        let base = self.config.as_ref().map(|c| c.weights).unwrap_or_default();
        let opts = apply_weight_flags(base, flags);
        opts.validate()?;
        Ok(opts)
    }

    /// Input rows with one extra `weight` column.
    fn write_with_weights(&self, path: &Path, weights: &WeightVector) -> Result<(), CliError> {
        let mut wtr = csv::WriterBuilder::new()
            .delimiter(self.delimiter)
            .from_writer(Vec::new());
        let mut header = self.header.clone();
        header.push_field("weight");
        wtr.write_record(&header)?;
        for (record, w) in self.records.iter().zip(weights.as_slice()) {
            let mut row = record.clone();
            row.push_field(&w.to_string());
            wtr.write_record(&row)?;
        }
        let bytes = wtr.into_inner().map_err(|e| CliError::Runtime(e.to_string()))?;
        write_atomic(path, &bytes)
    }
}

fn apply_weight_flags(mut opts: WeightOptions, flags: &WeightFlags) -> WeightOptions {
    if let Some(f) = flags.floor {
        opts.floor = f;
    }
    if let Some(c) = flags.clip {
        opts.clip = Some(c);
    }
    if flags.no_normalize {
        opts.normalize = false;
    }
    opts
}

/// Write via a temporary sibling and rename into place.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn weigh(args: &WeighArgs) -> Result<(), CliError> {
    let table = TraitTable::load(&args.source)?;
    let decl = table.target_decl(args.target.as_deref())?;
    let target = table.resolve_target(&decl)?;
    let opts = table.weight_options(&args.weights)?;

    let source = DensityModel::fit(table.traits.clone(), None)?;
    let weights = continuous_weights(&table.traits, &source, &target, &opts)?;
    let ks_before = weighted_ks(&table.traits, &WeightVector::uniform(table.traits.len()), &target)?;
    let ks_after = match weighted_ks(&table.traits, &weights, &target) {
        Ok(d) => format!("{d:.4}"),
        Err(_) => "undefined (zero total weight)".into(),
    };
    table.write_with_weights(&args.out, &weights)?;

    println!("trait:       {}", table.trait_name);
    println!("target:      {}", target.describe());
    println!("n:           {}", weights.len());
    println!("bandwidth:   {:.6}", source.bandwidth());
    println!(
        "weights:     min {:.4}  mean {:.4}  max {:.4}",
        weights.min(),
        weights.mean(),
        weights.max()
    );
    println!("ess:         {:.1}", weights.effective_sample_size());
    println!("weighted KS: before {ks_before:.4}  after {ks_after}");
    println!("wrote {}", args.out.display());
    Ok(())
}

pub fn density(args: &DensityArgs) -> Result<(), CliError> {
    let table = TraitTable::load(&args.source)?;
    let model = DensityModel::fit(table.traits.clone(), args.bandwidth)?;
    let grid = model.grid(args.grid, 4.0)?;
    let values = model.pdf_batch(&grid)?;
    let mut out = String::from("x,density\n");
    for (x, d) in grid.iter().zip(&values) {
        let _ = writeln!(out, "{x},{d}");
    }
    write_atomic(&args.out, out.as_bytes())?;
    println!(
        "n = {}, bandwidth = {:.6}, {} grid points -> {}",
        model.len(),
        model.bandwidth(),
        grid.len(),
        args.out.display()
    );
    Ok(())
}

pub fn baseline(args: &BaselineArgs) -> Result<(), CliError> {
    let table = TraitTable::load(&args.source)?;
    let bins = args
        .bins
        .or(table.config.as_ref().map(|c| c.bins))
        .unwrap_or(cwb::weights::DEFAULT_BINS);
    let weights = discrete_weights(&table.traits, bins)?;
    table.write_with_weights(&args.out, &weights)?;
    println!(
        "n = {}, bins = {bins}, weights min {:.4} mean {:.4} max {:.4} -> {}",
        weights.len(),
        weights.min(),
        weights.mean(),
        weights.max(),
        args.out.display()
    );
    Ok(())
}

fn dataset_column(ds: &Dataset, name: &str) -> cwb::Result<Vec<f64>> {
    match name {
        "label" => Ok(ds.labels().to_vec()),
        "trait" => Ok(ds.traits().to_vec()),
        other => ds.feature(other),
    }
}

pub fn reproduce(args: &ReproduceArgs) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(seeds) = &args.seeds {
        cfg.seeds = seeds.clone();
    }
    if let Some(bins) = args.bins {
        cfg.bins = bins;
    }
    cfg.weights = apply_weight_flags(cfg.weights, &args.weights);
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    cfg.validate()?;
    let out_dir = cfg
        .out
        .clone()
        .ok_or_else(|| CliError::Validation("no output directory (set `out` or pass --out)".into()))?;

    let schema = DatasetSchema::load(&cfg.schema)?;
    if !schema.path.is_file() {
        return Err(CliError::Validation(format!(
            "dataset file {} does not exist",
            schema.path.display()
        )));
    }
    let ds = load_csv(&schema.path, &schema.csv())?;
    let decl = cfg
        .target
        .clone()
        .or_else(|| schema.target.clone())
        .ok_or_else(|| CliError::Validation("no target in config or schema".into()))?;
    let target = decl.resolve(|name| dataset_column(&ds, name))?;
    let subset = cfg
        .subset
        .clone()
        .or_else(|| schema.subset.clone())
        .ok_or_else(|| CliError::Validation("no subset rule in config or schema".into()))?;
    let options = cfg.experiment_options();

    let jobs: Vec<(Scheme, u64)> = cfg
        .schemes
        .iter()
        .flat_map(|&s| cfg.seeds.iter().map(move |&seed| (s, seed)))
        .collect();
    let run = |&(scheme, seed): &(Scheme, u64)| {
        let exp = Experiment {
            dataset_id: &schema.id,
            model: cfg.model,
            scheme,
            target: &target,
            subset: &subset,
            seed,
            options,
        };
        run_experiment_with(&ds, &exp, Execution::Sequential)
    };
    #[cfg(feature = "parallel")]
    let reports: Vec<EvalReport> = {
        use rayon::prelude::*;
        jobs.par_iter().map(run).collect::<cwb::Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let reports: Vec<EvalReport> = jobs.iter().map(run).collect::<cwb::Result<_>>()?;

    let mut jsonl = String::new();
    for r in &reports {
        jsonl.push_str(&r.to_json_line());
        jsonl.push('\n');
    }
    write_atomic(&out_dir.join("reports.jsonl"), jsonl.as_bytes())?;

    let metric = cfg.model.metric();
    let mut summary = String::from("scheme,metric,median");
    for seed in &cfg.seeds {
        let _ = write!(summary, ",seed_{seed}");
    }
    summary.push('\n');
    println!(
        "{} / {} / subset {} / {} seeds",
        schema.id,
        cfg.model,
        subset,
        cfg.seeds.len()
    );
    println!("{:<12} {:>8}", "scheme", format!("median {metric}"));
    for &scheme in &cfg.schemes {
        let values: Vec<f64> = reports
            .iter()
            .filter(|r| r.scheme == scheme)
            .map(|r| r.value)
            .collect();
        let med = median(&values).expect("seeds are non-empty");
        let _ = write!(summary, "{scheme},{metric},{med:.4}");
        for v in &values {
            let _ = write!(summary, ",{v:.4}");
        }
        summary.push('\n');
        println!("{:<12} {:>8.4}", scheme.as_str(), med);

        let weights = scheme_weights(ds.traits(), scheme, &target, &options, Execution::default())?;
        let rows = histogram_export(ds.traits(), &weights, &target, cfg.histogram_bins)?;
        let mut hist = String::from("bin_left,bin_right,unweighted_count,weighted_mass,target_pdf_at_center\n");
        for r in rows {
            let _ = writeln!(
                hist,
                "{},{},{},{},{}",
                r.bin_left, r.bin_right, r.unweighted_count, r.weighted_mass, r.target_pdf_at_center
            );
        }
        write_atomic(&out_dir.join(format!("histogram_{scheme}.csv")), hist.as_bytes())?;
    }
    write_atomic(&out_dir.join("summary.csv"), summary.as_bytes())?;
    println!("wrote {}", out_dir.display());
    Ok(())
}
