pub mod analyze;
pub mod eval;
pub mod example1;
pub mod restore;
pub mod synth;
pub mod train;

use std::path::Path;

use sotlab_core::pnm::read_image;
use sotlab_core::Image;

use crate::error::{CliError, Result};
use crate::workspace::list_images;

/// Images of `primary` with their same-named counterparts in `secondary`.
/// Every missing counterpart is named in the error.
pub(crate) fn read_pairs(primary: &Path, secondary: &Path) -> Result<Vec<(String, Image, Image)>> {
    let files = list_images(primary)?;
    if files.is_empty() {
        return Err(CliError::Validation(format!("no .pgm/.ppm images in {}", primary.display())));
    }
    let missing: Vec<String> = files
        .iter()
        .filter(|(name, _)| !secondary.join(name).is_file())
        .map(|(name, _)| secondary.join(name).display().to_string())
        .collect();
    if !missing.is_empty() {
        return Err(CliError::Validation(format!("missing counterpart file(s): {}", missing.join(", "))));
    }
    let mut pairs = Vec::with_capacity(files.len());
    let mut problems = Vec::new();
    for (name, path) in files {
        match (read_image(&path), read_image(secondary.join(&name))) {
            (Ok(a), Ok(b)) if a.same_shape(&b) => pairs.push((name, a, b)),
            (Ok(a), Ok(b)) => problems.push(format!("{name}: {} vs {}", a.shape_string(), b.shape_string())),
            (Err(e), _) | (_, Err(e)) => problems.push(format!("{name}: {e}")),
        }
    }
    if !problems.is_empty() {
        return Err(CliError::Validation(format!("unusable image pairs: {}", problems.join("; "))));
    }
    Ok(pairs)
}

/// Every image of a directory, in file-name order.
pub(crate) fn read_dir_images(dir: &Path) -> Result<Vec<(String, Image)>> {
    let files = list_images(dir)?;
    if files.is_empty() {
        return Err(CliError::Validation(format!("no .pgm/.ppm images in {}", dir.display())));
    }
    files.into_iter().map(|(name, path)| Ok((name, read_image(&path)?))).collect()
}
