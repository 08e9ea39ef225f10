use cellspace::config::{parse_config, ConfigFileError, DEFAULT_CONFIG, TINY_CONFIG};
use cellspace::export::{ArchitectureExport, ExportError};
use cellspace::pareto::{pareto_csv, pareto_json, read_pareto_json};
use cellspace::svg::{render_pareto_svg, PlotFrame};
use cellspace_core::genome::random_genome;
use cellspace_core::optimizer::evolve_single_loop;
use cellspace_core::{
    DigitGenome, GenomeLayout, Individual, ObjectiveVector, ParetoArchive, SearchConfig,
};

const GOLDEN: &str = include_str!("golden/default_zero_genome.json");

fn default_config() -> SearchConfig {
    parse_config(DEFAULT_CONFIG).unwrap()
}

#[test]
fn zero_genome_export_matches_the_golden_file() {
    let config = default_config();
    let layout = GenomeLayout::new(config.params());
    let export = ArchitectureExport::build(&DigitGenome::zeros(&layout), &config).unwrap();
    assert_eq!(export.to_canonical_json(), GOLDEN.trim_end());
    assert_eq!(export.param_count, 51_403_082);
}

#[test]
fn export_round_trips_byte_for_byte() {
    let config = default_config();
    let layout = GenomeLayout::new(config.params());
    for seed in 0..50 {
        let g = random_genome(seed, config.params());
        let text = ArchitectureExport::build(&g, &config)
            .unwrap()
            .to_canonical_json();
        let back = ArchitectureExport::parse(&text).unwrap();
        assert_eq!(back.to_canonical_json(), text);
        assert_eq!(
            DigitGenome::new(back.genome.digits.clone(), &layout).unwrap(),
            g
        );
    }
}

#[test]
fn tampered_exports_are_rejected() {
    let mut v: serde_json::Value = serde_json::from_str(GOLDEN).unwrap();
    v["param_count"] = serde_json::json!(1);
    assert!(matches!(
        ArchitectureExport::parse(&v.to_string()),
        Err(ExportError::ParamMismatch {
            stored: 1,
            actual: 51_403_082
        })
    ));

    let mut v: serde_json::Value = serde_json::from_str(GOLDEN).unwrap();
    v["graph"]["nodes"][35]["out_shape"]["c"] = serde_json::json!(999);
    assert!(matches!(
        ArchitectureExport::parse(&v.to_string()),
        Err(ExportError::StaleShape(35))
    ));

    let mut v: serde_json::Value = serde_json::from_str(GOLDEN).unwrap();
    v["format_version"] = serde_json::json!("0");
    assert!(matches!(
        ArchitectureExport::parse(&v.to_string()),
        Err(ExportError::Version(_))
    ));
}

#[test]
fn config_errors_name_the_key() {
    let mut v: serde_json::Value = serde_json::from_str(DEFAULT_CONFIG).unwrap();
    v["layers"]["L_c"] = serde_json::json!(0);
    let e = parse_config(&v.to_string()).unwrap_err();
    assert!(matches!(e, ConfigFileError::Invalid(_)));
    assert_eq!(e.key(), Some("L_c"));

    let mut v: serde_json::Value = serde_json::from_str(DEFAULT_CONFIG).unwrap();
    v["merge_modes"][1] = serde_json::json!("multiply");
    let e = parse_config(&v.to_string()).unwrap_err();
    assert_eq!(e.key(), Some("merge_modes[1]"));

    let mut v: serde_json::Value = serde_json::from_str(DEFAULT_CONFIG).unwrap();
    v["layers"]["extra"] = serde_json::json!(1);
    assert_eq!(
        parse_config(&v.to_string()).unwrap_err().key(),
        Some("layers.extra")
    );

    let mut v: serde_json::Value = serde_json::from_str(DEFAULT_CONFIG).unwrap();
    v.as_object_mut().unwrap().remove("blocks");
    assert_eq!(
        parse_config(&v.to_string()).unwrap_err().key(),
        Some("<root>")
    );

    let mut v: serde_json::Value = serde_json::from_str(DEFAULT_CONFIG).unwrap();
    v["blocks"] = serde_json::json!([]);
    assert_eq!(
        parse_config(&v.to_string()).unwrap_err().key(),
        Some("blocks")
    );
}

fn tiny_archive() -> (ParetoArchive, GenomeLayout) {
    let config = parse_config(TINY_CONFIG).unwrap();
    let layout = GenomeLayout::new(config.params());
    (
        evolve_single_loop(&config, &mut cellspace_core::SurrogateEvaluator)
            .unwrap()
            .archive,
        layout,
    )
}

#[test]
fn pareto_csv_is_sorted_and_quoted() {
    let (archive, layout) = tiny_archive();
    let csv = pareto_csv(&archive, &layout);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("genome_packed,f1,f2,g,param_count"));
    let mut reader = csv::Reader::from_reader(csv.as_bytes());
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), archive.len());
    let f1: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(f1.windows(2).all(|w| w[0] <= w[1]));
    for r in &rows {
        assert_eq!(r[0].split(',').count(), layout.packed_len());
        let params: u64 = r[4].parse().unwrap();
        let f2: f64 = r[2].parse().unwrap();
        assert_eq!(f2, params as f64 / 200_000.0);
    }
    assert!(csv.lines().skip(1).all(|l| l.starts_with('"')));
}

#[test]
fn empty_archive_files() {
    let layout = GenomeLayout::new(SearchConfig::tiny().params());
    let empty = ParetoArchive::new();
    assert_eq!(
        pareto_csv(&empty, &layout),
        "genome_packed,f1,f2,g,param_count\n"
    );
    let svg = render_pareto_svg(&empty);
    assert!(!svg.contains("<circle"));
    assert!(svg.contains("params / TotalParam"));
    assert!(well_formed(&svg));
}

#[test]
fn pareto_json_round_trips() {
    let (archive, layout) = tiny_archive();
    let text = pareto_json(&archive, &layout, "abc");
    let (back, fp) = read_pareto_json(&text, &layout).unwrap();
    assert_eq!(fp, "abc");
    let mut a = archive.entries().to_vec();
    let mut b = back.entries().to_vec();
    let key = |i: &Individual| i.genome.clone();
    a.sort_by_key(key);
    b.sort_by_key(key);
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(
            (&x.genome, x.objectives, x.param_count),
            (&y.genome, y.objectives, y.param_count)
        );
    }
    assert_eq!(pareto_json(&back, &layout, "abc"), text);
}

#[test]
fn svg_places_points_in_the_plot_area() {
    let layout = GenomeLayout::new(SearchConfig::tiny().params());
    let one = |f1: f64, params: u64| {
        Individual::new(
            DigitGenome::zeros(&layout),
            ObjectiveVector::from_counts(f1, params, 1000).unwrap(),
            params,
        )
    };
    let archive = ParetoArchive::from_entries(vec![one(0.05, 100)]);
    let frame = PlotFrame::for_archive(&archive);
    assert_eq!(frame.x(0.1), 148.0);
    assert_eq!(frame.y(0.05), 515.0);
    let svg = render_pareto_svg(&archive);
    assert!(svg.contains(r#"<circle cx="148" cy="515""#), "{svg}");
    assert_eq!(svg, render_pareto_svg(&archive));
    assert!(well_formed(&svg));

    let wide = ParetoArchive::from_entries(vec![one(0.5, 4000)]);
    let frame = PlotFrame::for_archive(&wide);
    assert_eq!(frame.x_max, 4.0);
    assert_eq!(frame.x(4.0), 760.0);
    assert!(render_pareto_svg(&wide).contains(r#"<circle cx="760" cy="290""#));
}

/// Every opening tag is closed in order, and attribute quotes balance.
fn well_formed(xml: &str) -> bool {
    let mut stack: Vec<String> = Vec::new();
    let mut rest = xml;
    while let Some(start) = rest.find('<') {
        let Some(len) = rest[start..].find('>') else {
            return false;
        };
        let tag = &rest[start + 1..start + len];
        rest = &rest[start + len + 1..];
        if !tag.matches('"').count().is_multiple_of(2) {
            return false;
        }
        if let Some(name) = tag.strip_prefix('/') {
            if stack.pop().as_deref() != Some(name.trim()) {
                return false;
            }
        } else if !tag.ends_with('/') {
            stack.push(tag.split_whitespace().next().unwrap_or("").to_string());
        }
    }
    stack.is_empty()
}
