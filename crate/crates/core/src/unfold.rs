//! Signal unfolding: recovering the full-band frame from the folded one by
//! dividing by each sub-band's known symbols.
//!
//! Block `i` of the result is `Z ⊘ C_i = X_i + Σ_{k≠i} X_k ⊙ (C_k ⊘ C_i) + W_F,i`.
//! The middle sum is the symbol-mismatch noise (SMN). Division is exact for
//! unit-modulus constellations; for QAM it reshapes the noise per bin.

use ndarray::{s, Array2, Zip};
use num_complex::Complex;

use crate::channel::{Band, FreqFrame};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::waveform::SymbolMatrix;

const MIN_SYMBOL_MAGNITUDE: f64 = 1e-12;

fn ratio_of<T: Real>(z: &FreqFrame<T>, symbols: &SymbolMatrix<T>) -> Result<usize> {
    let l = match z.band {
        Band::Folded { ratio } => ratio,
        Band::FullBand => 1,
    };
    if z.rows() * l != symbols.num_subcarriers() {
        return Err(Error::Shape {
            what: "folded rows times L vs subcarriers",
            expected: symbols.num_subcarriers(),
            actual: z.rows() * l,
        });
    }
    if z.cols() != symbols.num_symbols() {
        return Err(Error::Shape {
            what: "frame columns vs symbols",
            expected: symbols.num_symbols(),
            actual: z.cols(),
        });
    }
    Ok(l)
}

/// `D_i = Z ⊘ C_i` for sub-band `i` (0-based).
pub fn demod_subband<T: Real>(
    z: &FreqFrame<T>,
    symbols: &SymbolMatrix<T>,
    i: usize,
) -> Result<Array2<Complex<T>>> {
    let l = ratio_of(z, symbols)?;
    if i >= l {
        return Err(Error::Config(format!("sub-band index {i} out of range for L={l}")));
    }
    let block = symbols.block(i, l);
    let m = z.rows();
    if let Some(((r, c), v)) = block
        .indexed_iter()
        .find(|(_, v)| v.norm().as_f64() < MIN_SYMBOL_MAGNITUDE)
    {
        return Err(Error::SingularSymbol {
            row: i * m + r,
            col: c,
            magnitude: v.norm().as_f64(),
        });
    }
    Ok(Zip::from(&z.entries).and(&block).map_collect(|a, b| *a / *b))
}

/// Vertical stack of every demodulated sub-band: the unfolded `Nc x Ns` frame.
pub fn unfold_full<T: Real>(z: &FreqFrame<T>, symbols: &SymbolMatrix<T>) -> Result<FreqFrame<T>> {
    let l = ratio_of(z, symbols)?;
    let m = z.rows();
    let mut d = FreqFrame::zeros(m * l, z.cols(), Band::FullBand);
    for i in 0..l {
        let di = demod_subband(z, symbols, i)?;
        d.entries.slice_mut(s![i * m..(i + 1) * m, ..]).assign(&di);
    }
    Ok(d)
}
