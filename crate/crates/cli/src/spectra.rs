//! Data generation and spectral analysis commands.

use std::io::Write;

use rand_chacha::rand_core::SeedableRng;
use serde::Serialize;
use spectral_core::container::{write_frame, ActivationContainer, FrameReader, FLAG_STRUCTURED};
use spectral_core::dataset::{sequence_seed, synthetic_containers};
use spectral_core::features::ActivationWindow;
use spectral_core::features::SCHEMA_VERSION;
use spectral_core::linalg::sample_covariance_spectrum;
use spectral_core::rmt::{
    default_grid, fit_mp as fit_mp_core, simulate_edge_statistics, tw_standardize, TwTable,
};
use spectral_core::stream::StreamingDescriptor;
use spectral_core::synth::{generate_sequence, spiked_sample, SequenceKind, SpikedModelSpec};

use crate::args::{AnalyzeArgs, FitMpArgs, GenDatasetArgs, GenSynthArgs, SynthKind, TwTableArgs};
use crate::error::{CliError, CliResult};
use crate::io::{emit, finish, open_in, open_out, read_container, write_bytes};

fn synth_container(a: &GenSynthArgs) -> CliResult<ActivationContainer> {
    let spec = a.sequence.spec();
    match a.kind {
        SynthKind::Noise => Ok(generate_sequence(&spec, SequenceKind::Noise, a.seed)?),
        SynthKind::Structured => Ok(generate_sequence(&spec, SequenceKind::Structured, a.seed)?),
        SynthKind::Spiked => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(a.seed);
            let model = SpikedModelSpec::with_random_directions(
                spec.width,
                spec.steps,
                spec.sigma2,
                &a.theta,
                &mut rng,
            )?;
            let x = spiked_sample(&model, sequence_seed(a.seed, 0))?;
            // row-major by time step
            let data = (0..x.nrows())
                .flat_map(|i| (0..x.ncols()).map(move |j| (i, j)))
                .map(|(i, j)| x[(i, j)] as f32)
                .collect();
            Ok(ActivationContainer::new(FLAG_STRUCTURED, spec.width, data)?)
        }
    }
}

pub fn gen_synth(a: &GenSynthArgs) -> CliResult<()> {
    let c = synth_container(a)?;
    if a.frames {
        let mut bytes = Vec::with_capacity(c.data().len() * 4 + c.steps() * 4);
        for t in 0..c.steps() {
            write_frame(&mut bytes, c.row(t))?;
        }
        write_bytes(&a.out, &bytes)
    } else {
        write_bytes(&a.out, &c.to_bytes())
    }
}

pub fn gen_dataset(a: &GenDatasetArgs) -> CliResult<()> {
    if a.count == 0 {
        return Err(CliError::config("count: must be positive"));
    }
    std::fs::create_dir_all(&a.out).map_err(|e| CliError::io(&a.out, e))?;
    for (i, c) in synthetic_containers(a.count, &a.sequence.spec(), a.seed)?
        .iter()
        .enumerate()
    {
        write_bytes(&a.out.join(format!("seq_{i:05}.spac")), &c.to_bytes())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct DescriptorRecord<'a> {
    t: u64,
    features: &'a [f64],
    schema_version: u32,
}

pub fn analyze(a: &AnalyzeArgs) -> CliResult<()> {
    let config = a.window.config();
    config.validate()?;
    let table = TwTable::embedded();
    let mut stream = StreamingDescriptor::new(config, table)?;
    let mut out = open_out(&a.out)?;
    let mut on_row = |row: Vec<f64>, out: &mut dyn Write| -> CliResult<()> {
        if let Some(fv) = stream.push(&row).map_err(|e| CliError::at(&a.input, e))? {
            emit(
                out,
                &a.out,
                &DescriptorRecord {
                    t: fv.window_index,
                    features: &fv.values,
                    schema_version: SCHEMA_VERSION,
                },
            )?;
        }
        Ok(())
    };
    if a.frames {
        for frame in FrameReader::new(open_in(&a.input)?) {
            let row = frame.map_err(|e| CliError::at(&a.input, e))?;
            on_row(row.iter().map(|&v| v as f64).collect(), &mut *out)?;
        }
    } else {
        let c = read_container(&a.input)?;
        for row in c.rows_f64() {
            on_row(row, &mut *out)?;
        }
    }
    finish(&mut *out, &a.out)
}

#[derive(Serialize)]
struct FitRecord {
    n: usize,
    d: usize,
    q: f64,
    sigma2: f64,
    lambda_minus: f64,
    lambda_plus: f64,
    lambda_max: f64,
    outliers: usize,
    tw_statistic: f64,
}

pub fn fit_mp(a: &FitMpArgs) -> CliResult<()> {
    let c = read_container(&a.input)?;
    let rows: Vec<Vec<f64>> = c.rows_f64().collect();
    let mut window = ActivationWindow::from_rows(&rows).map_err(|e| CliError::at(&a.input, e))?;
    if a.center {
        window = window.centered();
    }
    let spectrum = sample_covariance_spectrum(&window.to_matrix())?;
    let (n, d) = (spectrum.n_samples(), spectrum.d_features());
    let q = d as f64 / n as f64;
    let mp = fit_mp_core(&spectrum, q, a.tau, a.bins)?;
    let lambda_max = spectrum.largest().unwrap_or(0.0);
    let record = FitRecord {
        n,
        d,
        q,
        sigma2: mp.sigma2(),
        lambda_minus: mp.lambda_minus(),
        lambda_plus: mp.lambda_plus(),
        lambda_max,
        outliers: spectrum
            .values()
            .iter()
            .filter(|&&v| v > mp.lambda_plus())
            .count(),
        tw_statistic: tw_standardize(lambda_max, &mp, n)?,
    };
    let stdout = std::path::Path::new("-");
    let mut out = open_out(stdout)?;
    emit(&mut *out, stdout, &record)?;
    finish(&mut *out, stdout)
}

pub fn tw_table(a: &TwTableArgs) -> CliResult<()> {
    let samples = simulate_edge_statistics(a.n, a.d, a.draws, a.seed)?;
    let table = TwTable::from_samples(&samples, &default_grid())?;
    let mut out = open_out(&a.out)?;
    out.write_all(table.to_text().as_bytes())
        .map_err(|e| CliError::io(&a.out, e))?;
    finish(&mut *out, &a.out)
}
