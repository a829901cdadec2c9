use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context};
use serde::Serialize;
use sheetrefine_core::generation::{build_grid_prompt, synth_sheet, GenClient, GenRequest, SynthSheetSpec};
use sheetrefine_core::raster::{load_image, to_grayscale};
use sheetrefine_core::{eval as metrics, grid, refine as refinement, CropSpec, PartSet, RefineConfig, RefineReport};

use crate::output::{
    write_json, ManifestImage, PartEntry, PartsIndex, RefineReportFile, TrainingManifest, Written, EVAL_REPORT,
    KEPT_DIR, MANIFEST, PARTS_INDEX, REFINE_REPORT,
};
use crate::{PipelineArgs, SynthArgs};

fn part_file_name(index: usize) -> String {
    format!("part_{index:03}.png")
}

fn write_parts(set: &PartSet, source: &str, dir: &Path, written: &mut Written) -> anyhow::Result<Vec<PathBuf>> {
    let mut paths = Vec::with_capacity(set.len());
    let mut entries = Vec::with_capacity(set.len());
    for (index, part) in set.parts.iter().enumerate() {
        let name = part_file_name(index);
        let path = dir.join(&name);
        part.image.save_png(&path)?;
        written.file(path.clone());
        paths.push(path);
        entries.push(PartEntry { index, file: name, rect: part.rect, label: part.label.clone() });
    }
    let index_path = dir.join(PARTS_INDEX);
    write_json(&index_path, &PartsIndex { source: source.to_string(), parts: entries })?;
    written.file(index_path);
    Ok(paths)
}

fn slice_into(image: &Path, spec: &CropSpec, dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let sheet = load_image(image)?;
    let set = grid::slice(&sheet, spec)?;
    log::info!("sliced {} into {} parts", image.display(), set.len());

    let mut written = Written::default();
    if !dir.exists() {
        std::fs::create_dir_all(dir)?;
        written.dir(dir.to_path_buf());
    }
    match write_parts(&set, &image.to_string_lossy(), dir, &mut written) {
        Ok(paths) => Ok(paths),
        Err(e) => {
            written.rollback();
            Err(e)
        }
    }
}

pub fn slice(image: &Path, spec: &CropSpec, out: &Path) -> anyhow::Result<Vec<PathBuf>> {
    slice_into(image, spec, out)
}

fn is_image_file(path: &Path) -> bool {
    path.is_file()
        && path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg"))
}

/// A single directory expands to its image files in name order.
fn collect_inputs(inputs: &[PathBuf]) -> anyhow::Result<Vec<PathBuf>> {
    if let [dir] = inputs {
        if dir.is_dir() {
            let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
                .with_context(|| format!("listing {}", dir.display()))?
                .map(|e| e.map(|e| e.path()))
                .collect::<Result<Vec<_>, _>>()?
                .into_iter()
                .filter(|p| is_image_file(p))
                .collect();
            files.sort();
            return Ok(files);
        }
    }
    Ok(inputs.to_vec())
}

fn file_name(path: &Path) -> anyhow::Result<String> {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .with_context(|| format!("{} has no file name", path.display()))
}

pub fn refine(inputs: &[PathBuf], cfg: &RefineConfig, out: &Path) -> anyhow::Result<RefineReport> {
    cfg.validate()?;
    let files = collect_inputs(inputs)?;
    if files.len() < 2 {
        bail!("refinement needs at least 2 part images, got {}", files.len());
    }
    let names = files.iter().map(|f| file_name(f)).collect::<anyhow::Result<Vec<_>>>()?;
    let mut sorted = names.clone();
    sorted.sort();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        bail!("two inputs share the file name {:?}; kept copies would collide", w[0]);
    }

    let gray = files
        .iter()
        .map(|f| load_image(f).map(|img| to_grayscale(&img)))
        .collect::<Result<Vec<_>, _>>()?;
    let report = refinement::refine_images(&gray, cfg)?;
    log::info!("kept {:?}, removed {:?} after {} round(s)", report.kept, report.removed, report.rounds);

    let kept_dir = out.join(KEPT_DIR);
    if kept_dir.exists() {
        std::fs::remove_dir_all(&kept_dir).with_context(|| format!("clearing {}", kept_dir.display()))?;
    }
    std::fs::create_dir_all(&kept_dir)?;
    for &i in &report.kept {
        let dest = kept_dir.join(&names[i]);
        std::fs::copy(&files[i], &dest)
            .with_context(|| format!("copying {} to {}", files[i].display(), dest.display()))?;
    }
    write_json(&out.join(REFINE_REPORT), &RefineReportFile { parts: names, report: report.clone() })?;
    Ok(report)
}

pub fn pipeline(args: &PipelineArgs, out: &Path) -> anyhow::Result<()> {
    let prompt = build_grid_prompt(&args.character, &args.style, Some(&args.grid_phrase))?;
    let cfg = args.refine.config();
    cfg.validate()?;
    let spec = args.slicing.spec()?;

    let sheet_path = out.join("sheet.png");
    (|| -> anyhow::Result<()> {
        let sheet = match (&args.sheet, &args.gen_endpoint) {
            (Some(path), _) => load_image(path)?,
            (None, Some(endpoint)) => {
                let client = GenClient::new(endpoint, Duration::from_secs(args.gen_timeout), args.gen_retries)?;
                let req = GenRequest {
                    prompt: prompt.rendered.clone(),
                    seed: args.seed,
                    width: args.width,
                    height: args.height,
                    steps: args.steps,
                    guidance: args.guidance,
                };
                log::info!("requesting sheet from {endpoint}: {:?}", req.prompt);
                client.generate(&req)?
            }
            (None, None) => bail!(
                "no sheet source: pass --sheet or --gen-endpoint (or set {})",
                sheetrefine_core::generation::ENDPOINT_ENV
            ),
        };
        sheet.save_png(&sheet_path)?;
        Ok(())
    })()
    .context("phase 1 (generate)")?;

    let parts_dir = out.join("parts");
    slice_into(&sheet_path, &spec, &parts_dir).context("phase 2 (slice)")?;

    let report = refine(&[parts_dir], &cfg, out).context("phase 3 (refine)")?;

    let images = report
        .kept
        .iter()
        .map(|&i| {
            let file = format!("{KEPT_DIR}/{}", part_file_name(i));
            anyhow::ensure!(out.join(&file).is_file(), "kept part {file} is missing");
            Ok(ManifestImage { file, part_index: i, score: report.scores[i] })
        })
        .collect::<anyhow::Result<Vec<_>>>()
        .context("writing manifest")?;
    let manifest = TrainingManifest {
        character_prompt: prompt.rendered,
        style: prompt.style_description,
        images,
        refine_report_path: REFINE_REPORT.to_string(),
        created_at: (!args.no_timestamp).then(|| chrono::Utc::now().to_rfc3339()),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
    };
    write_json(&out.join(MANIFEST), &manifest).context("writing manifest")
}

pub fn eval(images: &Path, text: &Path, out: &Path) -> anyhow::Result<()> {
    let image_vecs = metrics::load_embeddings(images)?;
    let mut text_vecs = metrics::load_embeddings(text)?;
    if text_vecs.len() != 1 {
        bail!("{} must hold exactly one text embedding, found {}", text.display(), text_vecs.len());
    }
    let report = metrics::evaluate(&image_vecs, &text_vecs.remove(0))?;
    write_json(&out.join(EVAL_REPORT), &report)
}

#[derive(Serialize)]
struct SynthTruth<'a> {
    spec: &'a SynthSheetSpec,
    is_outlier: &'a [bool],
}

pub fn synth(args: &SynthArgs, out: &Path) -> anyhow::Result<()> {
    let spec = SynthSheetSpec {
        seed: args.seed,
        rows: args.rows,
        cols: args.cols,
        outlier_positions: args.outliers.iter().copied().collect(),
        noise_amplitude: args.noise,
        jitter: args.jitter,
        cell_width: args.cell_size,
        cell_height: args.cell_size,
    };
    let sheet = synth_sheet(&spec)?;
    sheet.image.save_png(&out.join("sheet.png"))?;
    write_json(&out.join("truth.json"), &SynthTruth { spec: &spec, is_outlier: &sheet.is_outlier })
}
