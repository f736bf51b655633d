#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "qgfc/correlation.hpp"
#include "qgfc/detection.hpp"
#include "qgfc/lattice.hpp"
#include "qgfc/timing.hpp"

namespace qgfc::app {

using Json = nlohmann::ordered_json;

Json to_json(const ModeLattice& lattice);
Json to_json(const DetectorGeometry& geom);
Json to_json(const ContrastBreakdown& c);
Json to_json(const CombFit& fit);
Json to_json(const PeakEstimate& p);

/// Binning plus metadata of a histogram (the sidecar of its CSV).
Json histogram_sidecar(const CoincidenceHistogram& hist);
/// Restores lattice/geometry metadata written by histogram_sidecar.
void apply_sidecar(CoincidenceHistogram& hist, const Json& sidecar);

ModeLattice lattice_from_json(const Json& j);
DetectorGeometry geometry_from_json(const Json& j);

/// Two-space indent plus trailing newline; numbers print in shortest
/// round-trip form, so equal values give equal bytes.
std::string dump(const Json& j);

/// One-line human-readable fit summary.
std::string fit_summary_line(const CombFit& fit);

}  // namespace qgfc::app
