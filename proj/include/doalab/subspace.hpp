#pragma once

#include <Eigen/Dense>

#include "doalab/geometry.hpp"
#include "doalab/stft.hpp"

namespace doalab {

struct SpatialSpectrum {
    AngularGrid grid;
    std::vector<double> values;  // one per grid angle, non-negative
};

struct SubspaceConfig {
    double f_lo_hz = 100.0;
    double f_hi_hz = 8000.0;
    double eps = 1e-10;           // pseudo-spectrum regularizer
    double loading = 1e-8;        // diagonal loading, relative to trace/M
};

// (1/T) sum_t y y^H at one bin; Hermitian PSD by construction.
Eigen::MatrixXcd narrowband_scm(const MultichannelSpectrogram& s, int f);

// Incoherent wideband MUSIC: per-bin pseudo-spectra averaged over the band.
SpatialSpectrum music_spectrum(const MultichannelSpectrogram& s, const ArrayGeometry& g,
                               const AngularGrid& grid, int n_sources,
                               const SubspaceConfig& cfg = {});

// As music_spectrum, but each narrowband spectrum is divided by its mean
// over the grid before fusing, so no band dominates by signal power.
SpatialSpectrum music_nam_spectrum(const MultichannelSpectrogram& s, const ArrayGeometry& g,
                                   const AngularGrid& grid, int n_sources,
                                   const SubspaceConfig& cfg = {});

// Test of orthogonality of projected subspaces: the reference-bin signal
// subspace is phase-shifted to every other bin and tested against that bin's
// noise subspace; minima of the smallest singular value become peaks.
SpatialSpectrum tops_spectrum(const MultichannelSpectrogram& s, const ArrayGeometry& g,
                              const AngularGrid& grid, int n_sources,
                              const SubspaceConfig& cfg = {});

// Top-n circular local maxima (strict; plateaus count once, leftmost index),
// filled from the largest remaining values when maxima run out. Ascending
// degrees.
std::vector<double> pick_peaks(const SpatialSpectrum& sp, int n);

}  // namespace doalab
